//! Color quantization by k-means in several colorspaces, with image
//! statistics and fidelity metrics for comparing the results.

pub mod colorspace;
pub mod imagestats;
pub mod metrics;
pub mod pipeline;
pub mod pixel_image;
pub mod quantizer;

mod sum;

pub use colorspace::Space;
pub use pixel_image::PixelImage;
