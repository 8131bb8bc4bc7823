use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::{DMatrix, DVector};
use qmor_core::ecsw::ReducedMesh;
use qmor_core::hdm::{hdm_simulate, BurgersParams, NewtonConfig};
use qmor_core::manifold::{build_quadratic_manifold, QuadraticSettings, Regularization};
use qmor_core::numerics::{nnls_early_stop, thin_svd, tikhonov_row_solve};
use qmor_core::rom::{hyper_lspg_step, lspg_step};
use qmor_core::snapshots::pod_basis;
use qmor_core::{
    BdfScheme, LspgConfig, Manifold, SemiDiscreteModel, SnapshotSet, TimeDiscretization,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn dense_kernels(c: &mut Criterion) {
    let qbar = random(91, 501, 1);
    let rhs = random(501, 1, 2).column(0).into_owned();
    c.bench_function("thin_svd 91x501", |b| {
        b.iter(|| thin_svd(black_box(&qbar)).unwrap())
    });
    let svd = thin_svd(&qbar).unwrap();
    c.bench_function("tikhonov_row_solve 91x501", |b| {
        b.iter(|| tikhonov_row_solve(&svd, black_box(&rhs), 1e-3).unwrap())
    });

    let cmat = random(2000, 512, 3).abs();
    let d = &cmat * DVector::from_element(512, 1.0);
    c.bench_function("nnls_early_stop 2000x512 tau=1e-2", |b| {
        b.iter(|| nnls_early_stop(black_box(&cmat), &d, 1e-2).unwrap())
    });
}

fn benchmark_data() -> (SemiDiscreteModel, SnapshotSet) {
    let model = SemiDiscreteModel::burgers(&BurgersParams::default()).unwrap();
    let td = TimeDiscretization::new(BdfScheme::Bdf2, 0.05).unwrap();
    let run = hdm_simulate(&model, &td, 25.0, 1, &NewtonConfig::default()).unwrap();
    (model, run.snapshots)
}

fn rom_kernels(c: &mut Criterion) {
    let (model, snaps) = benchmark_data();
    let affine = Manifold::affine(pod_basis(&snaps, 1e-4).unwrap(), snaps.u_ref().clone()).unwrap();
    let settings = QuadraticSettings {
        eps_s: 1e-4,
        zeta: 0.15,
        regularization: Regularization::Fixed(10.0),
    };
    let (quadratic, _) = build_quadratic_manifold(&snaps, &settings).unwrap();
    let cfg = LspgConfig::default();

    for (label, m) in [("affine", &affine), ("quadratic", &quadratic)] {
        let n = m.dimension();
        let q = m.project(&snaps.column(100)).unwrap();
        c.bench_function(&format!("evaluate {label} n={n}"), |b| {
            b.iter(|| m.evaluate(black_box(&q)).unwrap())
        });
        c.bench_function(&format!("tangent {label} n={n}"), |b| {
            b.iter(|| m.tangent(black_box(&q)).unwrap())
        });

        let u = m.evaluate(&q).unwrap();
        let td =
            TimeDiscretization::with_history(BdfScheme::Bdf2, 0.05, vec![u.clone(), u]).unwrap();
        let t = snaps.times()[101];
        c.bench_function(&format!("lspg_step {label} n={n}"), |b| {
            b.iter(|| lspg_step(m, &model, black_box(&q), &td, t, &cfg).unwrap())
        });
        let full = ReducedMesh::full(&model, n);
        c.bench_function(&format!("hyper_lspg_step {label} n={n} full mesh"), |b| {
            b.iter(|| hyper_lspg_step(m, &model, &full, black_box(&q), &td, t, &cfg).unwrap())
        });
    }
}

criterion_group!(benches, dense_kernels, rom_kernels);
criterion_main!(benches);
