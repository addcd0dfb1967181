mod common;

use common::*;
use nalgebra::{Complex, DMatrix};
use radpair_core::me::*;
use radpair_core::model::*;
use radpair_core::ode::Tolerances;
use radpair_core::C64;

const TIGHT: Tolerances = Tolerances::new(1e-10, 1e-10);

fn to_na(d: usize, a: &[C64]) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(d, d, |i, j| {
        let z = a[i * d + j];
        Complex::new(z.re, z.im)
    })
}

fn uniform(t_max: f64, dt: f64) -> Vec<f64> {
    let n = (t_max / dt).round() as usize;
    (0..=n).map(|i| i as f64 * dt).collect()
}

#[test]
fn spin_independent_decay_is_exponential() {
    let k = 1.0;
    let spec = SpinSystemSpec {
        nuclei: vec![proton(1.0, 0)],
        field: FieldSpec::along_z(0.05),
        kinetics: KineticsSpec::SingletTriplet { k_s: k, k_t: k },
        ..SpinSystemSpec::bare()
    };
    let model = assemble_model(&spec).unwrap();
    let rho0 = initial_density(&model.layout).unwrap();
    let grid = uniform(10.0, 0.001);
    let s = integrate_master_equation(&model, &rho0, &grid, TIGHT).unwrap();
    let worst = grid
        .iter()
        .zip(&s.p1)
        .map(|(t, p)| (p - (-k * t).exp()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-7, "{worst}");
    assert!(s.warnings.is_empty(), "{:?}", s.warnings);
}

#[test]
fn forward_rate_multiplies_rhs_without_hamiltonian() {
    let spec = SpinSystemSpec {
        nuclei: vec![proton(0.0, 1)],
        kinetics: KineticsSpec::Forward { k_b: 0.0, k_f: 0.7 },
        ..SpinSystemSpec::bare()
    };
    let model = assemble_model(&spec).unwrap();
    let d = model.dim();
    let rho = DensityMatrix::from_data(d, pseudo_random_density(d, 3)).unwrap();
    let out = liouvillian_rhs(&model, &rho).unwrap();
    for (o, r) in out.as_slice().iter().zip(rho.as_slice()) {
        assert!((o + r * 0.7).norm() < 1e-14);
    }
}

#[test]
fn lindblad_channels_preserve_trace() {
    let mut spec = all_channels();
    spec.kinetics = KineticsSpec::SingletTriplet { k_s: 0.0, k_t: 0.0 };
    let model = assemble_model(&spec).unwrap();
    let d = model.dim();
    for seed in 0..10 {
        let rho = DensityMatrix::from_data(d, pseudo_random_density(d, seed)).unwrap();
        let out = liouvillian_rhs(&model, &rho).unwrap();
        assert!(out.trace().norm() < 1e-12);
        assert!(out.hermiticity_defect() < 1e-12);
    }
}

#[test]
fn trace_decays_at_the_reaction_rates() {
    let spec = all_channels();
    let (k_s, k_t) = spec.kinetics.singlet_triplet_rates();
    let model = assemble_model(&spec).unwrap();
    let d = model.dim();
    for seed in 0..10 {
        let rho = DensityMatrix::from_data(d, pseudo_random_density(d, seed)).unwrap();
        let out = liouvillian_rhs(&model, &rho).unwrap();
        let expected = -k_s * rho.expectation(&model.p_singlet).re
            - k_t * rho.expectation(&model.p_triplet).re;
        assert!((out.trace().re - expected).abs() < 1e-12);
    }
}

#[test]
fn initial_density_is_the_normalized_singlet_projector() {
    let spec = all_channels();
    let model = assemble_model(&spec).unwrap();
    let rho = initial_density(&model.layout).unwrap();
    let d = model.dim();
    let z = model.layout.nuclear_states() as f64;
    assert!((rho.trace().re - 1.0).abs() < 1e-14);
    assert!((rho.expectation(&model.p_singlet).re - 1.0).abs() < 1e-14);
    let m = to_na(d, rho.as_slice()) * Complex::new(z, 0.0);
    assert!((&m * &m - &m).camax() < 1e-13);
}

#[test]
fn closed_system_matches_exact_propagator() {
    let spec = SpinSystemSpec {
        nuclei: vec![proton(0.9, 0), proton(-0.35, 1)],
        field: FieldSpec::new(0.2, [0.0, 0.6, 0.8]),
        ..SpinSystemSpec::bare()
    };
    let model = assemble_model(&spec).unwrap();
    let d = model.dim();
    let rho0 = initial_density(&model.layout).unwrap();
    let grid = [0.0, 0.37, 1.5, 4.0];
    let mut states = Vec::new();
    let s = integrate_master_equation_with(&model, &rho0, &grid, MeOptions { tol: TIGHT, ..MeOptions::default() }, |_, r| {
        states.push(r.to_vec())
    })
    .unwrap();
    assert_eq!(s.p1.len(), grid.len());

    let h = to_na(d, &model.hamiltonian.to_dense());
    let eig = h.symmetric_eigen();
    let v = eig.eigenvectors;
    let r0 = to_na(d, rho0.as_slice());
    for (t, got) in grid.iter().zip(&states) {
        let phase = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex::new(0.0, -l * t).exp()));
        let u = &v * phase * v.adjoint();
        let exact = &u * &r0 * u.adjoint();
        let dev = (to_na(d, got) - exact).camax();
        assert!(dev < 1e-7, "t = {t}: {dev}");
    }
}

#[test]
fn dephasing_forms_agree_on_random_hermitian_matrices() {
    let spec = SpinSystemSpec {
        nuclei: vec![proton(0.7, 0), proton(0.4, 1)],
        field: FieldSpec::along_z(0.1),
        dissipation: DissipationSpec {
            gamma_st: 2.3,
            gamma_rf: [0.0; 2],
        },
        ..SpinSystemSpec::bare()
    };
    let model = assemble_model(&spec).unwrap();
    let d = model.dim();
    assert_eq!(d, 16);
    for seed in 0..100 {
        // Hermitian, not necessarily positive or unit trace.
        let a = pseudo_random_state(d * d, seed + 1000);
        let mut m = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = a[i * d + j] + a[j * d + i].conj();
            }
        }
        let rho = DensityMatrix::from_data(d, m).unwrap();
        let l = liouvillian_rhs_with_form(&model, &rho, DephasingForm::Lindblad).unwrap();
        let p = liouvillian_rhs_with_form(&model, &rho, DephasingForm::Projector).unwrap();
        assert!(l.max_abs_diff(&p) <= 1e-12);
    }
}

#[test]
fn dephasing_forms_agree_along_trajectories() {
    let mut spec = all_channels();
    spec.dissipation.gamma_rf = [0.0; 2];
    let model = assemble_model(&spec).unwrap();
    let rho0 = initial_density(&model.layout).unwrap();
    let grid = uniform(5.0, 0.01);
    let run = |form| {
        let opts = MeOptions { tol: TIGHT, form, ..MeOptions::default() };
        integrate_master_equation_with(&model, &rho0, &grid, opts, |_, _| {}).unwrap()
    };
    let a = run(DephasingForm::Lindblad);
    let b = run(DephasingForm::Projector);
    for i in 0..grid.len() {
        assert!((a.p1[i] - b.p1[i]).abs() < 1e-9);
        assert!((a.ps[i] - b.ps[i]).abs() < 1e-9);
    }
}

#[test]
fn no_kinetics_conserves_trace_and_hermiticity() {
    let mut spec = all_channels();
    spec.kinetics = KineticsSpec::SingletTriplet { k_s: 0.0, k_t: 0.0 };
    let model = assemble_model(&spec).unwrap();
    let d = model.dim();
    let rho0 = initial_density(&model.layout).unwrap();
    let grid = uniform(24.0, 0.1);
    let mut worst_herm = 0.0f64;
    let s = integrate_master_equation_with(&model, &rho0, &grid, MeOptions { tol: TIGHT, ..MeOptions::default() }, |_, r| {
        worst_herm = worst_herm.max(hermiticity_defect(r, d));
    })
    .unwrap();
    let worst_trace = s.p1.iter().map(|p| (p - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst_trace < 1e-8, "{worst_trace}");
    assert!(worst_herm < 1e-9, "{worst_herm}");
    assert!(s.warnings.is_empty(), "{:?}", s.warnings);
}

#[test]
fn singlet_population_stays_in_range() {
    let model = assemble_model(&all_channels()).unwrap();
    let rho0 = initial_density(&model.layout).unwrap();
    let grid = uniform(8.0, 0.05);
    let s = integrate_master_equation(&model, &rho0, &grid, DEFAULT_ME_TOL).unwrap();
    for i in 0..grid.len() {
        assert!(s.ps[i] >= -1e-9 && s.ps[i] <= s.p1[i] + 1e-9);
        if i > 0 {
            assert!(s.p1[i] <= s.p1[i - 1] + 1e-12);
        }
    }
}

#[test]
fn rejects_bad_inputs() {
    let model = assemble_model(&all_channels()).unwrap();
    let rho0 = initial_density(&model.layout).unwrap();
    assert!(integrate_master_equation(&model, &rho0, &[], DEFAULT_ME_TOL).is_err());
    assert!(integrate_master_equation(&model, &rho0, &[0.0, 1.0, 1.0], DEFAULT_ME_TOL).is_err());
    let small = DensityMatrix::zeros(4);
    assert!(integrate_master_equation(&model, &small, &[0.0, 1.0], DEFAULT_ME_TOL).is_err());
    assert!(liouvillian_rhs(&model, &small).is_err());
}
