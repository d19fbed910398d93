use std::path::{Path, PathBuf};

use image::{DynamicImage, ExtendedColorType, ImageFormat, ImageReader};

use super::PipelineError;
use crate::PixelImage;

/// Reads an 8-bit PNG or TIFF. Alpha is dropped with a warning; gray and
/// indexed images are expanded to RGB.
pub fn decode(path: impl AsRef<Path>) -> Result<PixelImage, PipelineError> {
    let path = path.as_ref();
    let decode_err = |source| PipelineError::Decode {
        path: path.to_path_buf(),
        source,
    };
    let reader = ImageReader::open(path)
        .map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?
        .with_guessed_format()
        .map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    match reader.format() {
        Some(ImageFormat::Png | ImageFormat::Tiff) => {}
        other => {
            return Err(PipelineError::UnsupportedFormat {
                path: path.to_path_buf(),
                format: other.map_or_else(|| "unknown".to_string(), |f| format!("{f:?}")),
            })
        }
    }
    let img = reader.decode().map_err(decode_err)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let rgb = match img {
        DynamicImage::ImageRgb8(buf) => buf.into_raw(),
        DynamicImage::ImageRgba8(_) => {
            log::warn!("{}: alpha channel discarded", path.display());
            img.into_rgb8().into_raw()
        }
        DynamicImage::ImageLuma8(_) => img.into_rgb8().into_raw(),
        DynamicImage::ImageLumaA8(_) => {
            log::warn!("{}: alpha channel discarded", path.display());
            img.into_rgb8().into_raw()
        }
        other => {
            let bits = other.color().bits_per_pixel() / u16::from(other.color().channel_count());
            return Err(PipelineError::UnsupportedBitDepth {
                path: path.to_path_buf(),
                depth: bits,
            });
        }
    };
    Ok(PixelImage::new(w, h, rgb).expect("decoder returns a full buffer"))
}

fn format_for(path: &Path) -> Result<ImageFormat, PipelineError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => Ok(ImageFormat::Png),
        Some("tif" | "tiff") => Ok(ImageFormat::Tiff),
        _ => Err(PipelineError::UnsupportedFormat {
            path: path.to_path_buf(),
            format: ext.unwrap_or_default(),
        }),
    }
}

/// Writes losslessly as PNG or TIFF, chosen by extension.
pub fn encode(img: &PixelImage, path: impl AsRef<Path>) -> Result<(), PipelineError> {
    let path = path.as_ref();
    let format = format_for(path)?;
    image::save_buffer_with_format(
        path,
        img.samples(),
        img.width() as u32,
        img.height() as u32,
        ExtendedColorType::Rgb8,
        format,
    )
    .map_err(|source| PipelineError::Encode {
        path: PathBuf::from(path),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_red_pixel() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("red.png");
        encode(&PixelImage::filled(1, 1, [255, 0, 0]), &p).unwrap();
        let img = decode(&p).unwrap();
        assert_eq!((img.width(), img.height()), (1, 1));
        assert_eq!(img.samples(), &[255, 0, 0]);
    }

    #[test]
    fn round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let px: Vec<[u8; 3]> = (0..35u8).map(|i| [i, i.wrapping_mul(7), 255 - i]).collect();
        let img = PixelImage::from_pixels(7, 5, &px).unwrap();
        for name in ["a.png", "a.tif", "a.TIFF"] {
            let p = dir.path().join(name);
            encode(&img, &p).unwrap();
            assert_eq!(decode(&p).unwrap(), img, "{name}");
        }
        assert!(matches!(
            encode(&img, dir.path().join("a.jpg")),
            Err(PipelineError::UnsupportedFormat { .. })
        ));
    }

    #[test]
    fn sixteen_bit_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("deep.tif");
        let buf =
            image::ImageBuffer::<image::Rgb<u16>, _>::from_raw(2, 2, vec![1000u16; 12]).unwrap();
        DynamicImage::ImageRgb16(buf).save(&p).unwrap();
        let err = decode(&p).unwrap_err();
        assert!(
            err.to_string().contains("unsupported bit depth 16"),
            "{err}"
        );
    }

    #[test]
    fn alpha_and_gray_are_expanded() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rgba.png");
        let buf = image::RgbaImage::from_raw(1, 1, vec![10, 20, 30, 40]).unwrap();
        buf.save(&p).unwrap();
        assert_eq!(decode(&p).unwrap().samples(), &[10, 20, 30]);
        let g = dir.path().join("gray.png");
        image::GrayImage::from_raw(1, 1, vec![77])
            .unwrap()
            .save(&g)
            .unwrap();
        assert_eq!(decode(&g).unwrap().samples(), &[77, 77, 77]);
    }

    #[test]
    fn truncated_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cut.png");
        encode(&PixelImage::filled(16, 16, [1, 2, 3]), &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
        assert!(decode(&p).is_err());
        assert!(matches!(
            decode(dir.path().join("missing.png")),
            Err(PipelineError::Io { .. })
        ));
    }
}
