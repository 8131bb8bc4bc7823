//! `QMOR-MAN v1` files. Header
//! `QMOR-MAN v1 N=<N> n=<n> kind=<affine|quadratic> checksum=<hex>`, then
//! little-endian `f64`s: `u_ref`, `V` column-major, the `n` retained
//! singular values, the discarded energy fraction and, for quadratic
//! manifolds, `H̄` row by row followed by a ten-value build record (`NaN`
//! marks an absent field).

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::kron::feature_count;
use super::{BuildRecord, Manifold, ManifoldKind};
use crate::binio::{checksum, decode_f64s, push_f64s, split_header, verify_checksum, Header};
use crate::error::{Error, Result};
use crate::snapshots::ReducedBasis;

const MAGIC: &str = "QMOR-MAN";
const RECORD_LEN: usize = 10;

fn opt(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

fn opt_count(x: Option<usize>) -> f64 {
    x.map_or(f64::NAN, |v| v as f64)
}

fn encode_record(r: &BuildRecord) -> [f64; RECORD_LEN] {
    [
        r.alpha_star,
        if r.alpha_overridden { 1.0 } else { 0.0 },
        opt(r.omega),
        opt(r.zeta),
        opt(r.eps_s),
        opt_count(r.n_tra),
        opt_count(r.n_qua_prime),
        opt_count(r.n_qua),
        r.sigma_max,
        r.sigma_min,
    ]
}

fn decode_record(v: &[f64]) -> BuildRecord {
    let some = |x: f64| (!x.is_nan()).then_some(x);
    let count = |x: f64| (!x.is_nan()).then_some(x as usize);
    BuildRecord {
        alpha_star: v[0],
        alpha_overridden: v[1] != 0.0,
        omega: some(v[2]),
        zeta: some(v[3]),
        eps_s: some(v[4]),
        n_tra: count(v[5]),
        n_qua_prime: count(v[6]),
        n_qua: count(v[7]),
        sigma_max: v[8],
        sigma_min: v[9],
    }
}

fn payload(m: &Manifold) -> Vec<u8> {
    let mut buf = Vec::new();
    push_f64s(&mut buf, m.u_ref().as_slice());
    push_f64s(&mut buf, m.basis().matrix().as_slice());
    push_f64s(&mut buf, m.basis().singular_values().as_slice());
    push_f64s(&mut buf, &[m.basis().discarded_energy()]);
    if let (Some(ht), Some(rec)) = (m.h_bar_transposed(), m.build_record()) {
        // column-major H̄ᵀ is row-major H̄
        push_f64s(&mut buf, ht.as_slice());
        push_f64s(&mut buf, &encode_record(rec));
    }
    buf
}

/// Checksum of the serialized manifold, used to tie reduced meshes to it.
pub fn manifold_checksum(m: &Manifold) -> String {
    checksum(&payload(m))
}

pub fn write_manifold(m: &Manifold) -> Vec<u8> {
    let payload = payload(m);
    let mut out = format!(
        "{MAGIC} v1 N={} n={} kind={} checksum={}\n",
        m.state_dimension(),
        m.dimension(),
        m.kind().as_str(),
        checksum(&payload)
    )
    .into_bytes();
    out.extend_from_slice(&payload);
    out
}

pub fn read_manifold(bytes: &[u8]) -> Result<Manifold> {
    let (line, payload) = split_header(bytes)?;
    let header = Header::parse(line, MAGIC)?;
    let big_n: usize = header.get_parsed("N")?;
    let n: usize = header.get_parsed("n")?;
    let kind = match header.get("kind")? {
        "affine" => ManifoldKind::Affine,
        "quadratic" => ManifoldKind::Quadratic,
        other => return Err(Error::Format(format!("unknown manifold kind '{other}'"))),
    };
    let features = feature_count(n);
    let mut expected = big_n + big_n * n + n + 1;
    if kind == ManifoldKind::Quadratic {
        expected += big_n * features + RECORD_LEN;
    }
    let values = decode_f64s(payload, expected)?;
    verify_checksum(&header, payload)?;

    let mut at = 0;
    let mut take = |k: usize| {
        let s = &values[at..at + k];
        at += k;
        s
    };
    let u_ref = DVector::from_column_slice(take(big_n));
    let v = DMatrix::from_column_slice(big_n, n, take(big_n * n));
    let sigma = DVector::from_column_slice(take(n));
    let discarded = take(1)[0];
    let basis = ReducedBasis::new(v, sigma, discarded).map_err(|e| Error::Format(e.to_string()))?;
    match kind {
        ManifoldKind::Affine => Manifold::affine(basis, u_ref),
        ManifoldKind::Quadratic => {
            let ht = DMatrix::from_column_slice(features, big_n, take(big_n * features));
            let record = decode_record(take(RECORD_LEN));
            Manifold::quadratic_from_transposed(basis, u_ref, ht, record)
        }
    }
}

pub fn save_manifold(m: &Manifold, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_manifold(m))?;
    Ok(())
}

pub fn load_manifold(path: impl AsRef<Path>) -> Result<Manifold> {
    read_manifold(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::tests::random_basis;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(quadratic: bool) -> Manifold {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let basis = random_basis(&mut rng, 9, 3);
        let u_ref = DVector::from_fn(9, |_, _| rng.random_range(-1.0..1.0));
        if !quadratic {
            return Manifold::affine(basis, u_ref).unwrap();
        }
        let h = DMatrix::from_fn(9, 6, |_, _| rng.random_range(-1.0..1.0));
        let record = BuildRecord {
            alpha_star: 0.25,
            alpha_overridden: false,
            omega: Some(0.1),
            zeta: Some(0.15),
            eps_s: Some(1e-4),
            n_tra: Some(5),
            n_qua_prime: Some(2),
            n_qua: None,
            sigma_max: 3.0,
            sigma_min: 0.01,
        };
        Manifold::quadratic(basis, u_ref, &h, record).unwrap()
    }

    #[test]
    fn round_trips() {
        for quadratic in [false, true] {
            let m = sample(quadratic);
            let back = read_manifold(&write_manifold(&m)).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn header_and_row_major_coefficients() {
        let m = sample(true);
        let bytes = write_manifold(&m);
        let (line, payload) = split_header(&bytes).unwrap();
        assert!(line.starts_with("QMOR-MAN v1 N=9 n=3 kind=quadratic checksum="));
        let offset = 8 * (9 + 27 + 3 + 1);
        let first = f64::from_le_bytes(payload[offset + 8..offset + 16].try_into().unwrap());
        assert_eq!(first, m.h_bar().unwrap()[(0, 1)]);
    }

    #[test]
    fn file_round_trip_and_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.qman");
        let m = sample(false);
        save_manifold(&m, &path).unwrap();
        assert_eq!(load_manifold(&path).unwrap(), m);
        assert_ne!(manifold_checksum(&m), manifold_checksum(&sample(true)));
    }

    #[test]
    fn truncation_and_corruption_are_detected() {
        let bytes = write_manifold(&sample(true));
        assert!(read_manifold(&bytes[..bytes.len() - 8])
            .unwrap_err()
            .to_string()
            .contains("missing 8 bytes"));
        let mut bad = bytes.clone();
        let last = bad.len() - 30;
        bad[last] ^= 0x10;
        assert!(read_manifold(&bad).is_err());
        let text = String::from_utf8_lossy(&bytes[..40]).replace("kind=quadratic", "kind=cubic");
        assert!(read_manifold(text.as_bytes()).is_err());
    }
}
