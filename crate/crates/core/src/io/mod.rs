//! Readers and writers for the on-disk map formats.
//!
//! * grayscale PFM (`Pf`) for scalar maps, color PFM (`PF`) for images;
//! * binary PGM (`P5`) or 8-bit PNG for masks;
//! * CSV for metric tables.
//!
//! Rows are always top-down in memory regardless of the file convention.

mod csv;
mod header;
mod image;
mod pfm;
mod pgm;

pub use self::csv::{format_sig6, write_metrics_csv, write_metrics_csv_to};
pub use self::image::{read_image, write_image, ImageFormat};
pub use self::pfm::{
    read_color_pfm, read_color_pfm_from, read_pfm, read_pfm_from, write_color_pfm, write_color_pfm_to,
    write_pfm, write_pfm_to,
};
pub use self::pgm::{read_mask, read_mask_pgm, read_mask_pgm_from, write_mask_pgm, write_mask_pgm_to};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_all(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(file))
}
