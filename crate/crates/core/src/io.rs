//! Binary state snapshots.
//!
//! Layout: magic `PADR`, format version `u16`, then `p`, `n`, `N` as `u32`,
//! all little-endian, followed by the `p^(2Nn)` state values as IEEE-754
//! binary64 in canonical ordinal order.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::Error;
use crate::grid::GridParams;
use crate::state::State;
use crate::Result;

const MAGIC: &[u8; 4] = b"PADR";
const VERSION: u16 = 1;

/// Serialize a state to any writer.
pub fn write_snapshot_to<W: Write>(mut w: W, params: GridParams, state: &State) -> Result<()> {
    if state.len() as u64 != params.num_points() {
        return Err(Error::DimensionMismatch {
            expected: params.num_points() as usize,
            got: state.len(),
        });
    }
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&params.p.to_le_bytes())?;
    w.write_all(&params.n.to_le_bytes())?;
    w.write_all(&params.resolution.to_le_bytes())?;
    for v in state.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Write a snapshot file.
pub fn write_snapshot(path: impl AsRef<Path>, params: GridParams, state: &State) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut buf = std::io::BufWriter::new(file);
    write_snapshot_to(&mut buf, params, state)?;
    buf.flush()?;
    Ok(())
}

/// Deserialize a state from any reader.
pub fn read_snapshot_from<R: Read>(mut r: R) -> Result<(GridParams, State)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::SnapshotFormat(format!(
            "bad magic {magic:?}, expected {MAGIC:?}"
        )));
    }
    let mut u16buf = [0u8; 2];
    r.read_exact(&mut u16buf)?;
    let version = u16::from_le_bytes(u16buf);
    if version != VERSION {
        return Err(Error::SnapshotFormat(format!(
            "unsupported snapshot version {version}"
        )));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let p = u32::from_le_bytes(u32buf);
    r.read_exact(&mut u32buf)?;
    let n = u32::from_le_bytes(u32buf);
    r.read_exact(&mut u32buf)?;
    let resolution = u32::from_le_bytes(u32buf);
    let params = GridParams::new(p, n, resolution)
        .map_err(|e| Error::SnapshotFormat(format!("invalid stored grid: {e}")))?;
    let m = params.num_points() as usize;
    let mut values = Vec::with_capacity(m);
    let mut f64buf = [0u8; 8];
    for _ in 0..m {
        r.read_exact(&mut f64buf)?;
        values.push(f64::from_le_bytes(f64buf));
    }
    // a conforming snapshot ends exactly here
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::SnapshotFormat(
            "trailing bytes after the state values".into(),
        ));
    }
    Ok((params, State::new(values)))
}

/// Read a snapshot file.
pub fn read_snapshot(path: impl AsRef<Path>) -> Result<(GridParams, State)> {
    let file = std::fs::File::open(path)?;
    read_snapshot_from(std::io::BufReader::new(file))
}
