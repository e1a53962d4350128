use std::io::Write;
use std::path::Path;

use super::header::HeaderCursor;
use super::pfm::locate;
use super::{create, read_all};
use crate::error::{Error, Result};
use crate::grid::BinaryMask;

/// Decodes a binary PGM; any non-zero pixel is `true`.
pub fn read_mask_pgm_from(bytes: &[u8]) -> Result<BinaryMask> {
    let mut cur = HeaderCursor::new(bytes);
    if cur.token()? != "P5" {
        return Err(Error::NotPgm);
    }
    let width = cur.dimension("width")?;
    let height = cur.dimension("height")?;
    let maxval = cur.dimension("maxval")?;
    if maxval > 255 {
        return Err(Error::MalformedHeader(format!("maxval {maxval} exceeds 255")));
    }
    let payload = cur.payload()?;
    if payload.len() != width * height {
        return Err(Error::PayloadSize { expected: width * height, found: payload.len() });
    }
    BinaryMask::from_vec(width, height, payload.iter().map(|&b| b > 0).collect())
}

pub fn read_mask_pgm(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    read_mask_pgm_from(&read_all(path)?).map_err(|e| locate(path, e))
}

/// Reads a mask from PGM, or from PNG when the extension says so.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let is_png = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if !is_png {
        return read_mask_pgm(path);
    }
    let img = ::image::open(path)
        .map_err(|e| Error::Decode { path: path.to_path_buf(), message: e.to_string() })?
        .into_luma8();
    BinaryMask::from_vec(img.width() as usize, img.height() as usize, img.pixels().map(|p| p.0[0] > 0).collect())
}

/// Writes `true` as 255 and `false` as 0.
pub fn write_mask_pgm_to<W: Write>(mask: &BinaryMask, mut out: W) -> Result<()> {
    write!(out, "P5\n{} {}\n255\n", mask.width(), mask.height())?;
    let bytes: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}

pub fn write_mask_pgm(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_mask_pgm_to(mask, create(path)?).map_err(|e| locate(path, e))
}
