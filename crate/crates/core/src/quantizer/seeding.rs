use rand::Rng;

use super::{sq_dist, KMeansError, Palette, PixelDataset};

/// k-means++ seeding: the first centroid is a uniformly drawn point, each
/// further centroid is drawn with probability proportional to the squared
/// distance to the nearest centroid chosen so far.
pub fn kmeanspp_init<R: Rng + ?Sized>(
    data: &PixelDataset,
    k: usize,
    rng: &mut R,
) -> Result<Palette, KMeansError> {
    if k == 0 {
        return Err(KMeansError::ZeroClusters);
    }
    let points = data.points();
    let n = points.len();
    let distinct = data.distinct_up_to(k);
    if distinct < k {
        return Err(KMeansError::TooFewDistinct { k, distinct });
    }

    let mut centroids = Vec::with_capacity(k);
    let first = points[rng.random_range(0..n)];
    centroids.push(first);

    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &first)).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = draw_weighted(&nearest, total, rng);
        let c = points[pick];
        centroids.push(c);
        for (d, p) in nearest.iter_mut().zip(points) {
            let nd = sq_dist(p, &c);
            if nd < *d {
                *d = nd;
            }
        }
    }

    Ok(Palette {
        centroids,
        space: data.space(),
        params: *data.params(),
    })
}

/// Index drawn with probability `weights[i] / total`. Zero-weight entries are
/// never chosen.
fn draw_weighted<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last_positive = i;
        if acc > target {
            return i;
        }
    }
    last_positive
}
