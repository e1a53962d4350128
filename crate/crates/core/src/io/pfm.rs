use std::io::Write;
use std::path::Path;

use super::header::HeaderCursor;
use super::{create, read_all};
use crate::error::{Error, Result};
use crate::grid::{Image3, ScalarMap, Unit};
use crate::scalar::Real;

struct Decoded {
    width: usize,
    height: usize,
    channels: usize,
    /// Top-down, interleaved.
    values: Vec<f32>,
}

fn decode(bytes: &[u8]) -> Result<Decoded> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::NotPfm);
    }
    let mut cur = HeaderCursor::new(bytes);
    let channels = match cur.token()? {
        "Pf" => 1,
        "PF" => 3,
        _ => return Err(Error::NotPfm),
    };
    let width = cur.dimension("width")?;
    let height = cur.dimension("height")?;
    let scale_tok = cur.token()?;
    let scale: f64 = scale_tok
        .parse()
        .ok()
        .filter(|s: &f64| s.is_finite() && *s != 0.0)
        .ok_or_else(|| Error::MalformedHeader(format!("bad scale: {scale_tok:?}")))?;
    let little_endian = scale < 0.0;
    let payload = cur.payload()?;
    let n = width * height * channels;
    if payload.len() != n * 4 {
        return Err(Error::PayloadSize { expected: n * 4, found: payload.len() });
    }
    let mut values = vec![0.0f32; n];
    let row_len = width * channels;
    // File rows run bottom-up.
    for (file_row, chunk) in payload.chunks_exact(row_len * 4).enumerate() {
        let y = height - 1 - file_row;
        for (i, b) in chunk.chunks_exact(4).enumerate() {
            let raw = [b[0], b[1], b[2], b[3]];
            values[y * row_len + i] =
                if little_endian { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        }
    }
    Ok(Decoded { width, height, channels, values })
}

fn encode<W: Write>(mut out: W, width: usize, height: usize, channels: usize, values: &[f32]) -> Result<()> {
    let tag = if channels == 1 { "Pf" } else { "PF" };
    write!(out, "{tag}\n{width} {height}\n-1.0\n")?;
    let row_len = width * channels;
    let mut buf = Vec::with_capacity(row_len * 4);
    for y in (0..height).rev() {
        buf.clear();
        for v in &values[y * row_len..(y + 1) * row_len] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

/// Decodes a grayscale PFM from memory. The map is tagged [`Unit::Unitless`].
pub fn read_pfm_from<T: Real>(bytes: &[u8]) -> Result<ScalarMap<T>> {
    let d = decode(bytes)?;
    if d.channels != 1 {
        return Err(Error::ColorPfm);
    }
    ScalarMap::from_vec(d.width, d.height, d.values.into_iter().map(|v| T::lit(v as f64)).collect(), Unit::Unitless)
}

pub fn read_pfm<T: Real>(path: impl AsRef<Path>) -> Result<ScalarMap<T>> {
    let path = path.as_ref();
    read_pfm_from(&read_all(path)?).map_err(|e| locate(path, e))
}

/// Little-endian grayscale PFM. Values are stored as `f32`.
pub fn write_pfm_to<T: Real, W: Write>(map: &ScalarMap<T>, out: W) -> Result<()> {
    let values: Vec<f32> = map.data().iter().map(|v| v.as_f64() as f32).collect();
    encode(out, map.width(), map.height(), 1, &values)
}

pub fn write_pfm<T: Real>(map: &ScalarMap<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_pfm_to(map, create(path)?).map_err(|e| locate(path, e))
}

pub fn read_color_pfm_from<T: Real>(bytes: &[u8]) -> Result<Image3<T>> {
    let d = decode(bytes)?;
    if d.channels != 3 {
        return Err(Error::GrayPfm);
    }
    let w = d.width;
    Image3::from_fn(d.width, d.height, |x, y| {
        let i = (y * w + x) * 3;
        [T::lit(d.values[i] as f64), T::lit(d.values[i + 1] as f64), T::lit(d.values[i + 2] as f64)]
    })
}

pub fn read_color_pfm<T: Real>(path: impl AsRef<Path>) -> Result<Image3<T>> {
    let path = path.as_ref();
    read_color_pfm_from(&read_all(path)?).map_err(|e| locate(path, e))
}

pub fn write_color_pfm_to<T: Real, W: Write>(image: &Image3<T>, out: W) -> Result<()> {
    let (w, h) = image.shape();
    let mut values = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            values.extend(image.pixel(x, y).iter().map(|v| v.as_f64() as f32));
        }
    }
    encode(out, w, h, 3, &values)
}

pub fn write_color_pfm<T: Real>(image: &Image3<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_color_pfm_to(image, create(path)?).map_err(|e| locate(path, e))
}

/// Attaches the path to format errors so CLI messages name the file.
pub(crate) fn locate(path: &Path, e: Error) -> Error {
    match e {
        Error::Io { .. } | Error::Decode { .. } => e,
        Error::Stream(source) => Error::io(path, source),
        other => Error::Decode { path: path.to_path_buf(), message: other.to_string() },
    }
}
