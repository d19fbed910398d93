use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{width}x{height} image needs {expected} samples, got {actual}")]
pub struct ShapeError {
    pub width: usize,
    pub height: usize,
    pub expected: usize,
    pub actual: usize,
}

/// 8-bit RGB pixels stored row-major, left to right and top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelImage {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl PixelImage {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self, ShapeError> {
        let expected = 3 * width * height;
        if samples.len() != expected {
            return Err(ShapeError {
                width,
                height,
                expected,
                actual: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn from_pixels(
        width: usize,
        height: usize,
        pixels: &[[u8; 3]],
    ) -> Result<Self, ShapeError> {
        Self::new(width, height, pixels.iter().flatten().copied().collect())
    }

    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Self {
        Self {
            width,
            height,
            samples: color.repeat(width * height),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    pub fn pixels(&self) -> impl ExactSizeIterator<Item = [u8; 3]> + '_ {
        self.samples.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.samples[i], self.samples[i + 1], self.samples[i + 2]]
    }

    pub fn same_dimensions(&self, other: &PixelImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Shorter and longer edge lengths.
    pub fn edges(&self) -> (usize, usize) {
        (self.width.min(self.height), self.width.max(self.height))
    }

    pub fn distinct_colors(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        for p in self.pixels() {
            seen.insert(p);
        }
        seen.len()
    }
}
