//! `QMOR-SNAP v1` files: one header line
//! `QMOR-SNAP v1 N=<N> NS=<Ns> uref=1 checksum=<hex>`, then `Ns` time stamps,
//! the `N × Ns` states column-major and `u_ref`, all little-endian `f64`.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::SnapshotSet;
use crate::binio::{checksum, decode_f64s, push_f64s, split_header, verify_checksum, Header};
use crate::error::{Error, Result};

const MAGIC: &str = "QMOR-SNAP";

pub fn write_snapshots(snaps: &SnapshotSet) -> Vec<u8> {
    let mut payload =
        Vec::with_capacity(8 * (snaps.len() * (snaps.dimension() + 1) + snaps.dimension()));
    push_f64s(&mut payload, snaps.times());
    push_f64s(&mut payload, snaps.states().as_slice());
    push_f64s(&mut payload, snaps.u_ref().as_slice());
    let mut out = format!(
        "{MAGIC} v1 N={} NS={} uref=1 checksum={}\n",
        snaps.dimension(),
        snaps.len(),
        checksum(&payload)
    )
    .into_bytes();
    out.extend_from_slice(&payload);
    out
}

pub fn read_snapshots(bytes: &[u8]) -> Result<SnapshotSet> {
    let (line, payload) = split_header(bytes)?;
    let header = Header::parse(line, MAGIC)?;
    let n: usize = header.get_parsed("N")?;
    let ns: usize = header.get_parsed("NS")?;
    let has_ref: u8 = header.get_parsed("uref")?;
    if has_ref != 1 {
        return Err(Error::Format("snapshot files must carry u_ref".into()));
    }
    let values = decode_f64s(payload, ns + n * ns + n)?;
    verify_checksum(&header, payload)?;
    let times = values[..ns].to_vec();
    let states = DMatrix::from_column_slice(n, ns, &values[ns..ns + n * ns]);
    let u_ref = DVector::from_column_slice(&values[ns + n * ns..]);
    SnapshotSet::new(states, times, u_ref).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_snapshots(snaps: &SnapshotSet, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_snapshots(snaps))?;
    Ok(())
}

pub fn load_snapshots(path: impl AsRef<Path>) -> Result<SnapshotSet> {
    read_snapshots(&fs::read(path)?)
}
