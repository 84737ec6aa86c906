//! Binary grid files.
//!
//! Layout, all little-endian: magic `OG3D`, `u16` format version, three `u64`
//! dimensions, `f64` resolution, then `ceil(Nx*Ny*Nz / 8)` occupancy bytes,
//! x fastest, least significant bit first, final byte zero-padded.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::OccupancyGrid;
use crate::error::{Error, Result};

pub const GRID_MAGIC: &[u8; 4] = b"OG3D";
pub const GRID_FORMAT_VERSION: u16 = 1;
const HEADER_LEN: u64 = 4 + 2 + 3 * 8 + 8;

pub fn write_grid<W: Write>(grid: &OccupancyGrid, mut out: W) -> Result<()> {
    out.write_all(GRID_MAGIC)?;
    out.write_all(&GRID_FORMAT_VERSION.to_le_bytes())?;
    for d in grid.dims() {
        out.write_all(&(d as u64).to_le_bytes())?;
    }
    out.write_all(&grid.resolution().to_le_bytes())?;
    out.write_all(grid.raw_bits())?;
    out.flush()?;
    Ok(())
}

/// Fills `buf` completely or reports a truncation at the first missing byte.
fn read_exact_at<R: Read>(input: &mut R, buf: &mut [u8], offset: &mut u64) -> Result<()> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) => {
                return Err(Error::format(
                    *offset + filled as u64,
                    format!("truncated input: expected {} more bytes", buf.len() - filled),
                ))
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    *offset += buf.len() as u64;
    Ok(())
}

pub fn read_grid<R: Read>(mut input: R) -> Result<OccupancyGrid> {
    let mut offset = 0u64;
    let mut magic = [0u8; 4];
    read_exact_at(&mut input, &mut magic, &mut offset)?;
    if &magic != GRID_MAGIC {
        return Err(Error::format(0, format!("bad magic {magic:?}, expected \"OG3D\"")));
    }
    let mut version = [0u8; 2];
    read_exact_at(&mut input, &mut version, &mut offset)?;
    let version = u16::from_le_bytes(version);
    if version != GRID_FORMAT_VERSION {
        return Err(Error::format(4, format!("unsupported format version {version}")));
    }
    let mut dims = [0usize; 3];
    for (k, d) in dims.iter_mut().enumerate() {
        let mut raw = [0u8; 8];
        read_exact_at(&mut input, &mut raw, &mut offset)?;
        let v = u64::from_le_bytes(raw);
        *d = usize::try_from(v)
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| Error::format(6 + 8 * k as u64, format!("invalid dimension {v}")))?;
    }
    let count = dims[0]
        .checked_mul(dims[1])
        .and_then(|n| n.checked_mul(dims[2]))
        .filter(|&n| n <= isize::MAX as usize / 2)
        .ok_or_else(|| Error::format(6, format!("dimension overflow for {dims:?}")))?;
    let mut res = [0u8; 8];
    read_exact_at(&mut input, &mut res, &mut offset)?;
    let resolution = f64::from_le_bytes(res);
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::format(30, format!("invalid resolution {resolution}")));
    }
    debug_assert_eq!(offset, HEADER_LEN);
    let mut bits = vec![0u8; count.div_ceil(8)];
    read_exact_at(&mut input, &mut bits, &mut offset)?;
    let pad = count % 8;
    if pad != 0 && bits[bits.len() - 1] >> pad != 0 {
        return Err(Error::format(offset - 1, "nonzero padding bits in final byte"));
    }
    Ok(OccupancyGrid::from_raw(dims, resolution, bits))
}

pub fn save_grid(grid: &OccupancyGrid, path: impl AsRef<Path>) -> Result<()> {
    write_grid(grid, BufWriter::new(File::create(path)?))
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<OccupancyGrid> {
    read_grid(BufReader::new(File::open(path)?))
}
