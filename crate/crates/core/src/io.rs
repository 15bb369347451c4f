//! 8-bit raster file I/O. Loading maps byte b to b/255; saving rounds
//! v*255 to the nearest byte, so a save/load round trip moves any value
//! by at most 1/510.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader, RgbImage};

use crate::error::{Error, Result};
use crate::image::Image;

pub fn load_image(path: &Path) -> Result<Image> {
    let reader = ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    let decoded = reader.decode().map_err(|e| Error::Codec {
        path: path.display().to_string(),
        source: e,
    })?;
    match decoded {
        DynamicImage::ImageLuma8(gray) => {
            let (w, h) = gray.dimensions();
            let data = gray.as_raw().iter().map(|&b| b as f64 / 255.0).collect();
            Image::new(h as usize, w as usize, 1, data)
        }
        DynamicImage::ImageRgb8(rgb) => from_rgb8(rgb),
        // Anything else that is still 8-bit-per-channel is folded to RGB.
        other @ (DynamicImage::ImageRgba8(_) | DynamicImage::ImageLumaA8(_)) => {
            from_rgb8(other.to_rgb8())
        }
        other => Err(Error::Codec {
            path: path.display().to_string(),
            source: image::ImageError::Unsupported(
                image::error::UnsupportedError::from_format_and_kind(
                    image::error::ImageFormatHint::Unknown,
                    image::error::UnsupportedErrorKind::Color(other.color().into()),
                ),
            ),
        }),
    }
}

fn from_rgb8(rgb: RgbImage) -> Result<Image> {
    let (w, h) = rgb.dimensions();
    let data = rgb.as_raw().iter().map(|&b| b as f64 / 255.0).collect();
    Image::new(h as usize, w as usize, 3, data)
}

pub fn save_image(img: &Image, path: &Path) -> Result<()> {
    let (h, w, c) = img.dims();
    let bytes: Vec<u8> = img
        .data()
        .iter()
        .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    let write_err = |e| Error::Codec {
        path: path.display().to_string(),
        source: e,
    };
    match c {
        1 => GrayImage::from_raw(w as u32, h as u32, bytes)
            .expect("buffer length checked by Image invariants")
            .save(path)
            .map_err(write_err),
        3 => RgbImage::from_raw(w as u32, h as u32, bytes)
            .expect("buffer length checked by Image invariants")
            .save(path)
            .map_err(write_err),
        _ => unreachable!("Image allows only 1 or 3 channels"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extreme_values_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        for value in [0.0, 1.0] {
            let img = Image::constant(4, 5, 3, value).unwrap();
            let path = dir.path().join(format!("v{value}.png"));
            save_image(&img, &path).unwrap();
            let back = load_image(&path).unwrap();
            assert_eq!(back.dims(), (4, 5, 3));
            assert!(back.data().iter().all(|&v| v == value));
        }
    }

    #[test]
    fn half_quantizes_to_128_over_255() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("half.png");
        save_image(&Image::constant(2, 2, 1, 0.5).unwrap(), &path).unwrap();
        let back = load_image(&path).unwrap();
        assert!(back.data().iter().all(|&v| (v - 128.0 / 255.0).abs() < 1e-12));
    }

    #[test]
    fn round_trip_error_is_bounded_by_one_over_510() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.png");
        let data: Vec<f64> = (0..64).map(|i| i as f64 / 63.0).collect();
        let img = Image::new(8, 8, 1, data).unwrap();
        save_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 1.0 / 510.0 + 1e-12);
        }
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = load_image(Path::new("/nonexistent/nope.png")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn sixteen_bit_input_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("deep.png");
        let wide: image::ImageBuffer<image::Luma<u16>, Vec<u16>> =
            image::ImageBuffer::from_fn(4, 4, |x, y| image::Luma([(x * y * 4097) as u16]));
        wide.save(&path).unwrap();
        assert!(matches!(load_image(&path), Err(Error::Codec { .. })));
    }
}
