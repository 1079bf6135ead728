//! Raw complex image files: an 8-byte magic, `u32` rows and columns, then the
//! real and imaginary planes as little-endian `f64`, row-major.

use std::io::{Read, Write};
use std::path::Path;

use cqnpm::{ComplexImage, C64};

use crate::BenchError;

pub const MAGIC: &[u8; 8] = b"CQNPMIMG";

pub fn write_image<W: Write>(mut w: W, img: &ComplexImage) -> Result<(), BenchError> {
    let (rows, cols) = img.dims();
    let dim = |d: usize| u32::try_from(d).map_err(|_| BenchError::Config(format!("dimension {d} too large")));
    w.write_all(MAGIC)?;
    w.write_all(&dim(rows)?.to_le_bytes())?;
    w.write_all(&dim(cols)?.to_le_bytes())?;
    for p in img.as_slice() {
        w.write_all(&p.re.to_le_bytes())?;
    }
    for p in img.as_slice() {
        w.write_all(&p.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_image<R: Read>(mut r: R) -> Result<ComplexImage, BenchError> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..8] != MAGIC {
        return Err(BenchError::Config("not an image file".into()));
    }
    let rows = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let n = rows * cols;
    let mut planes = vec![0u8; 16 * n];
    r.read_exact(&mut planes)?;
    let value = |i: usize| f64::from_le_bytes(planes[8 * i..8 * i + 8].try_into().unwrap());
    let data = (0..n).map(|i| C64::new(value(i), value(n + i))).collect();
    Ok(ComplexImage::new(rows, cols, data)?)
}

pub fn save_image(path: &Path, img: &ComplexImage) -> Result<(), BenchError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_image(&mut w, img)?;
    w.flush()?;
    Ok(())
}

pub fn load_image(path: &Path) -> Result<ComplexImage, BenchError> {
    read_image(std::io::BufReader::new(std::fs::File::open(path)?))
}
