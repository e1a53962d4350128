use std::path::Path;

use super::pfm::{read_color_pfm, read_pfm, write_color_pfm};
use crate::error::{Error, Result};
use crate::grid::{Image3, ScalarMap, Unit};
use crate::scalar::Real;

/// On-disk encoding for three-channel images.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    /// Lossless color PFM.
    Pfm,
    /// 8-bit RGB PNG; values are clamped to `[0, 1]` and quantized.
    Png,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Pfm => "pfm",
            ImageFormat::Png => "png",
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("pfm") => Ok(ImageFormat::Pfm),
            Some("png") => Ok(ImageFormat::Png),
            _ => Err(Error::UnsupportedFormat(path.display().to_string())),
        }
    }
}

/// Reads an RGB image from PNG (scaled to `[0, 1]`) or PFM.
///
/// A grayscale PFM is accepted and replicated across channels.
pub fn read_image<T: Real>(path: impl AsRef<Path>) -> Result<Image3<T>> {
    let path = path.as_ref();
    match ImageFormat::from_path(path)? {
        ImageFormat::Pfm => match read_color_pfm(path) {
            Ok(img) => Ok(img),
            Err(Error::Decode { message, .. }) if message == Error::GrayPfm.to_string() => {
                let gray: ScalarMap<T> = read_pfm(path)?;
                Ok(Image3::from_gray(gray.with_unit(Unit::Intensity)))
            }
            Err(e) => Err(e),
        },
        ImageFormat::Png => {
            let img = ::image::open(path)
                .map_err(|e| Error::Decode { path: path.to_path_buf(), message: e.to_string() })?
                .into_rgb8();
            let (w, h) = (img.width() as usize, img.height() as usize);
            Image3::from_fn(w, h, |x, y| {
                let p = img.get_pixel(x as u32, y as u32).0;
                [T::lit(p[0] as f64 / 255.0), T::lit(p[1] as f64 / 255.0), T::lit(p[2] as f64 / 255.0)]
            })
        }
    }
}

pub fn write_image<T: Real>(image: &Image3<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    match ImageFormat::from_path(path)? {
        ImageFormat::Pfm => write_color_pfm(image, path),
        ImageFormat::Png => {
            let (w, h) = image.shape();
            let quantize = |v: T| (v.as_f64().clamp(0.0, 1.0) * 255.0).round() as u8;
            let buf = ::image::RgbImage::from_fn(w as u32, h as u32, |x, y| {
                let [r, g, b] = image.pixel(x as usize, y as usize);
                ::image::Rgb([quantize(r), quantize(g), quantize(b)])
            });
            buf.save(path).map_err(|e| Error::Decode { path: path.to_path_buf(), message: e.to_string() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::write_pfm;

    #[test]
    fn png_round_trip_on_quantized_values() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image3::from_fn(6, 4, |x, y| {
            [(x * 40) as f32 / 255.0, (y * 60) as f32 / 255.0, ((x + y) * 10) as f32 / 255.0]
        })
        .unwrap();
        let path = dir.path().join("a.png");
        write_image(&img, &path).unwrap();
        let back: Image3<f32> = read_image(&path).unwrap();
        for c in 0..3 {
            for (a, b) in back.channel(c).data().iter().zip(img.channel(c).data()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn pfm_color_and_gray() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image3::from_fn(3, 2, |x, y| [x as f32 * 0.1, y as f32 * 0.2, 0.3]).unwrap();
        let path = dir.path().join("c.pfm");
        write_image(&img, &path).unwrap();
        assert_eq!(read_image::<f32>(&path).unwrap(), img);

        let gray = ScalarMap::from_fn(3, 2, Unit::Intensity, |x, _| x as f32).unwrap();
        let gpath = dir.path().join("g.pfm");
        write_pfm(&gray, &gpath).unwrap();
        let back: Image3<f32> = read_image(&gpath).unwrap();
        assert_eq!(back.channel(2).data(), gray.data());
    }

    #[test]
    fn unknown_extension() {
        assert!(matches!(read_image::<f32>("x.bmp"), Err(Error::UnsupportedFormat(_))));
    }
}
