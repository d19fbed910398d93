//! Hartigan-Wong k-means (optimal-transfer / quick-transfer), following the
//! structure of Applied Statistics algorithm AS 136.
//!
//! A point is moved from cluster `a` to cluster `b` when
//! `n_b/(n_b+1) * |x - c_b|^2 < n_a/(n_a-1) * |x - c_a|^2`, i.e. when the
//! move strictly lowers WCSS with both centroids updated. Centroids are
//! recomputed exactly from the labels after every iteration so incremental
//! update drift never accumulates.

use log::warn;
use rayon::prelude::*;

use super::{sq_dist, RunTrace};
use crate::sum::chunked_sum_by;

const BIG: f64 = 1.0e30;

/// Upper bound on quick-transfer steps per stage, in multiples of the point
/// count.
const QUICK_TRANSFER_STEPS: i64 = 50;

pub struct HartiganWong<'a> {
    points: &'a [[f64; 3]],
    centers: Vec<[f64; 3]>,
    counts: Vec<usize>,
    /// `n/(n-1)`: WCSS saved per unit squared distance by removing a point.
    an1: Vec<f64>,
    /// `n/(n+1)`: WCSS added per unit squared distance by adding a point.
    an2: Vec<f64>,
    ic1: Vec<u32>,
    ic2: Vec<u32>,
    /// Cached removal gain `an1[ic1[i]] * |x_i - c_ic1[i]|^2`.
    d: Vec<f64>,
    itran: Vec<bool>,
    ncp: Vec<i64>,
    live: Vec<i64>,
    /// Steps since the last transfer; reaching `m` means converged.
    indx: usize,
}

/// Final state of a single run.
#[derive(Debug, Clone)]
pub struct HartiganRun {
    pub centroids: Vec<[f64; 3]>,
    pub labels: Vec<u32>,
    pub wcss: f64,
    pub trace: RunTrace,
}

fn nearest_two(p: &[f64; 3], centers: &[[f64; 3]], skip: Option<usize>) -> (u32, u32) {
    let mut best = (usize::MAX, f64::INFINITY);
    let mut second = (usize::MAX, f64::INFINITY);
    for (l, c) in centers.iter().enumerate() {
        if Some(l) == skip {
            continue;
        }
        let d = sq_dist(p, c);
        if d < best.1 {
            second = best;
            best = (l, d);
        } else if d < second.1 {
            second = (l, d);
        }
    }
    if second.0 == usize::MAX {
        second.0 = best.0;
    }
    (best.0 as u32, second.0 as u32)
}

impl<'a> HartiganWong<'a> {
    /// Assigns every point to its nearest initial center (ties to the lowest
    /// index), repairs empty clusters and recenters.
    pub fn new(points: &'a [[f64; 3]], initial: &[[f64; 3]]) -> Self {
        let k = initial.len();
        let m = points.len();
        assert!(k >= 1 && k <= m, "need 1 <= k <= n");

        let pairs: Vec<(u32, u32)> = points
            .par_iter()
            .map(|p| nearest_two(p, initial, None))
            .collect();
        let (mut ic1, mut ic2): (Vec<u32>, Vec<u32>) = pairs.into_iter().unzip();

        let mut centers = initial.to_vec();
        let mut counts = vec![0usize; k];
        for &l in &ic1 {
            counts[l as usize] += 1;
        }
        recenter(points, &ic1, &mut centers, &counts);

        let mut repaired = false;
        while let Some(empty) = counts.iter().position(|&c| c == 0) {
            // Reseed at the point farthest from its own centroid.
            let far = (0..m)
                .filter(|&i| counts[ic1[i] as usize] > 1)
                .max_by(|&a, &b| {
                    let da = sq_dist(&points[a], &centers[ic1[a] as usize]);
                    let db = sq_dist(&points[b], &centers[ic1[b] as usize]);
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("k <= n leaves a donor cluster");
            counts[ic1[far] as usize] -= 1;
            counts[empty] += 1;
            ic1[far] = empty as u32;
            centers[empty] = points[far];
            recenter(points, &ic1, &mut centers, &counts);
            repaired = true;
        }
        if repaired {
            ic2 = points
                .par_iter()
                .zip(ic1.par_iter())
                .map(|(p, &l1)| nearest_two(p, &centers, Some(l1 as usize)).0)
                .collect();
        }
        if k == 1 {
            ic2 = vec![0; m];
        }

        let an1 = counts
            .iter()
            .map(|&n| {
                if n > 1 {
                    n as f64 / (n as f64 - 1.0)
                } else {
                    BIG
                }
            })
            .collect();
        let an2 = counts
            .iter()
            .map(|&n| n as f64 / (n as f64 + 1.0))
            .collect();

        Self {
            points,
            centers,
            counts,
            an1,
            an2,
            ic1,
            ic2,
            d: vec![0.0; m],
            itran: vec![true; k],
            ncp: vec![-1; k],
            live: vec![0; k],
            indx: 0,
        }
    }

    pub fn labels(&self) -> &[u32] {
        &self.ic1
    }

    pub fn centers(&self) -> &[[f64; 3]] {
        &self.centers
    }

    fn exact_wcss(&self) -> f64 {
        let labelled: Vec<(usize, u32)> = self.ic1.iter().copied().enumerate().collect();
        chunked_sum_by(&labelled, |&(i, l)| {
            sq_dist(&self.points[i], &self.centers[l as usize])
        })
    }

    /// Iterates until a full optimal-transfer pass makes no transfer or
    /// `max_iterations` is reached.
    pub fn run(mut self, max_iterations: usize) -> HartiganRun {
        let k = self.centers.len();
        let mut history = vec![self.exact_wcss()];
        let mut iterations = 0;
        let mut converged = k == 1;

        if k > 1 {
            for it in 1..=max_iterations {
                iterations = it;
                self.optimal_transfer();
                let stable = self.indx == self.points.len();
                if !stable {
                    self.quick_transfer();
                }
                recenter(self.points, &self.ic1, &mut self.centers, &self.counts);
                history.push(self.exact_wcss());
                // With two clusters the quick-transfer stage already tests
                // every possible move.
                if stable || k == 2 {
                    converged = true;
                    break;
                }
                self.ncp.fill(0);
            }
            if !converged {
                warn!("k-means stopped after {max_iterations} iterations without converging");
            }
        }

        let wcss = *history.last().expect("history is never empty");
        HartiganRun {
            centroids: self.centers,
            labels: self.ic1,
            wcss,
            trace: RunTrace {
                wcss_history: history,
                iterations,
                converged,
            },
        }
    }

    fn transfer(&mut self, i: usize, l1: usize, l2: usize) {
        let p = self.points[i];
        let al1 = self.counts[l1] as f64;
        let alw = al1 - 1.0;
        let al2 = self.counts[l2] as f64;
        let alt = al2 + 1.0;
        for (j, &x) in p.iter().enumerate() {
            self.centers[l1][j] = (self.centers[l1][j] * al1 - x) / alw;
            self.centers[l2][j] = (self.centers[l2][j] * al2 + x) / alt;
        }
        self.counts[l1] -= 1;
        self.counts[l2] += 1;
        self.an2[l1] = alw / al1;
        self.an1[l1] = if alw > 1.0 { alw / (alw - 1.0) } else { BIG };
        self.an1[l2] = alt / al2;
        self.an2[l2] = alt / (alt + 1.0);
        self.ic1[i] = l2 as u32;
        self.ic2[i] = l1 as u32;
    }

    fn optimal_transfer(&mut self) {
        let m = self.points.len() as i64;
        let k = self.centers.len();
        for l in 0..k {
            if self.itran[l] {
                self.live[l] = m + 1;
            }
        }
        for i in 0..self.points.len() {
            let step = i as i64 + 1;
            self.indx += 1;
            let l1 = self.ic1[i] as usize;
            if self.counts[l1] != 1 {
                let p = self.points[i];
                if self.ncp[l1] != 0 {
                    self.d[i] = sq_dist(&p, &self.centers[l1]) * self.an1[l1];
                }
                let ll = self.ic2[i] as usize;
                let mut l2 = ll;
                let mut r2 = sq_dist(&p, &self.centers[ll]) * self.an2[ll];
                let l1_dead = step >= self.live[l1];
                for l in 0..k {
                    if (l1_dead && step >= self.live[l]) || l == l1 || l == ll {
                        continue;
                    }
                    let rr = r2 / self.an2[l];
                    let dc = sq_dist(&p, &self.centers[l]);
                    if dc < rr {
                        r2 = dc * self.an2[l];
                        l2 = l;
                    }
                }
                if r2 < self.d[i] {
                    self.indx = 0;
                    self.live[l1] = m + step;
                    self.live[l2] = m + step;
                    self.ncp[l1] = step;
                    self.ncp[l2] = step;
                    self.transfer(i, l1, l2);
                } else {
                    self.ic2[i] = l2 as u32;
                }
            }
            if self.indx == self.points.len() {
                return;
            }
        }
        for l in 0..k {
            self.itran[l] = false;
            self.live[l] -= m;
        }
    }

    fn quick_transfer(&mut self) {
        let m = self.points.len() as i64;
        let mut icoun = 0i64;
        let mut istep = 0i64;
        loop {
            for i in 0..self.points.len() {
                icoun += 1;
                istep += 1;
                if istep >= QUICK_TRANSFER_STEPS * m {
                    warn!("quick-transfer stage hit its step limit");
                    return;
                }
                let l1 = self.ic1[i] as usize;
                let l2 = self.ic2[i] as usize;
                if self.counts[l1] != 1 {
                    let p = self.points[i];
                    if istep <= self.ncp[l1] {
                        self.d[i] = sq_dist(&p, &self.centers[l1]) * self.an1[l1];
                    }
                    if istep < self.ncp[l1] || istep < self.ncp[l2] {
                        let r2 = self.d[i] / self.an2[l2];
                        let dd = sq_dist(&p, &self.centers[l2]);
                        if dd < r2 {
                            icoun = 0;
                            self.indx = 0;
                            self.itran[l1] = true;
                            self.itran[l2] = true;
                            self.ncp[l1] = istep + m;
                            self.ncp[l2] = istep + m;
                            self.transfer(i, l1, l2);
                        }
                    }
                }
                if icoun == m {
                    return;
                }
            }
        }
    }
}

/// Sets every non-empty cluster's center to the exact mean of its points.
/// Exact cluster means: a summed pass followed by one residual correction,
/// so a cluster of identical points has that point as its centroid.
fn recenter(points: &[[f64; 3]], labels: &[u32], centers: &mut [[f64; 3]], counts: &[usize]) {
    let k = centers.len();
    let mut sums = vec![[0.0f64; 3]; k];
    for (p, &l) in points.iter().zip(labels) {
        let s = &mut sums[l as usize];
        for j in 0..3 {
            s[j] += p[j];
        }
    }
    let means: Vec<[f64; 3]> = sums
        .iter()
        .zip(counts)
        .map(|(s, &n)| s.map(|v| v / n.max(1) as f64))
        .collect();
    let mut residuals = vec![[0.0f64; 3]; k];
    for (p, &l) in points.iter().zip(labels) {
        let (r, m) = (&mut residuals[l as usize], &means[l as usize]);
        for j in 0..3 {
            r[j] += p[j] - m[j];
        }
    }
    for (((c, m), r), &n) in centers.iter_mut().zip(&means).zip(&residuals).zip(counts) {
        if n > 0 {
            let n = n as f64;
            *c = [m[0] + r[0] / n, m[1] + r[1] / n, m[2] + r[2] / n];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moves_misassigned_points() {
        let pts = [[0.0; 3], [0.1; 3], [0.2; 3], [0.8; 3], [0.9; 3], [1.0; 3]];
        // A poor start: both seeds on the left.
        let run = HartiganWong::new(&pts, &[[0.0; 3], [0.1; 3]]).run(50);
        assert!(run.trace.converged);
        assert!((run.wcss - 0.12).abs() < 1e-12);
        let h = &run.trace.wcss_history;
        assert!(h.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn repairs_empty_clusters() {
        // The second seed attracts nothing.
        let pts = [[0.0; 3], [0.1; 3], [0.9; 3], [1.0; 3]];
        let hw = HartiganWong::new(&pts, &[[0.5; 3], [0.5; 3], [0.9; 3]]);
        let mut counts = [0; 3];
        for &l in hw.labels() {
            counts[l as usize] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0));
    }

    #[test]
    fn single_cluster() {
        let pts = [[0.0; 3], [1.0; 3]];
        let run = HartiganWong::new(&pts, &[[0.0; 3]]).run(10);
        assert_eq!(run.centroids, vec![[0.5; 3]]);
        assert!((run.wcss - 1.5).abs() < 1e-15);
        assert!(run.trace.converged);
    }
}
