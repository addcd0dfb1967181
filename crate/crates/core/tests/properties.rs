mod common;

use common::*;
use proptest::prelude::*;
use radpair_core::analysis::{f_inverse, f_transform, rms_error, ObservableSeries, SeriesLabel};
use radpair_core::mcwf::{jump_rates, spin_coherent_state};
use radpair_core::model::*;
use radpair_core::sparse::SparseOperator;
use radpair_core::spin::*;
use radpair_core::{norm_sqr, C64};

fn local(dim: usize, vals: &[(f64, f64)]) -> LocalMatrix {
    LocalMatrix::from_rows(dim, vals.iter().take(dim * dim).map(|&(a, b)| C64::new(a, b)).collect())
}

fn series(values: Vec<f64>, label: SeriesLabel) -> ObservableSeries {
    let grid = (0..values.len()).map(|i| i as f64 * 0.1).collect();
    ObservableSeries::new(grid, values, None, label).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn jump_probability_is_the_sum_over_channels(seed in any::<u64>()) {
        let model = assemble_model(&all_channels()).unwrap();
        let phi = pseudo_random_state(model.dim(), seed);
        let r = jump_rates(&model, &phi);
        prop_assert!((r.total - r.channel_sum()).abs() <= 1e-10 * r.total.abs().max(1.0));
        prop_assert!(r.lindblad.iter().chain(&r.reaction).all(|&w| w >= -1e-14));
    }

    #[test]
    fn decay_operator_is_positive(seed in any::<u64>()) {
        let model = assemble_model(&all_channels()).unwrap();
        let phi = pseudo_random_state(model.dim(), seed);
        let decay = model.decay_operator();
        let w = decay.expectation(&phi);
        prop_assert!(w.re >= -1e-13 && w.im.abs() < 1e-12);
        // i (H_eff - H_eff†) = Σ K + Σ J†J.
        let anti = model.h_eff.sub(&model.h_eff.adjoint()).scaled(C64::new(0.0, 1.0));
        prop_assert!(anti.max_abs_diff(&decay) < 1e-12);
    }

    #[test]
    fn embedding_is_linear_and_multiplicative(
        vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 18),
        s in -2.0f64..2.0,
        site in 0usize..3,
    ) {
        let layout = HilbertLayout::radical_pair(&[3]).unwrap();
        let m = layout.site_dims()[site];
        let a = local(m, &vals[..9]);
        let b = local(m, &vals[9..]);
        let ea = embed_site_operator(&a, site, &layout).unwrap();
        let eb = embed_site_operator(&b, site, &layout).unwrap();
        let sum = embed_site_operator(&a.add_scaled(&b, C64::new(s, 0.0)), site, &layout).unwrap();
        prop_assert!(sum.max_abs_diff(&ea.add_scaled(&eb, C64::new(s, 0.0))) < 1e-12);
        let prod = embed_site_operator(&a.mul(&b), site, &layout).unwrap();
        prop_assert!(prod.max_abs_diff(&ea.mul(&eb)) < 1e-12);
    }

    #[test]
    fn operators_on_different_sites_commute(
        vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8),
    ) {
        let layout = HilbertLayout::radical_pair(&[2]).unwrap();
        let a = embed_site_operator(&local(2, &vals[..4]), 0, &layout).unwrap();
        let b = embed_site_operator(&local(2, &vals[4..]), 2, &layout).unwrap();
        prop_assert!(a.commutator(&b).max_abs() < 1e-12);
    }

    #[test]
    fn rms_error_is_a_metric(
        a in prop::collection::vec(-1.0f64..1.0, 12),
        b in prop::collection::vec(-1.0f64..1.0, 12),
        c in prop::collection::vec(-1.0f64..1.0, 12),
        t_max in 0.3f64..1.1,
    ) {
        let (a, b, c) = (series(a, SeriesLabel::P1), series(b, SeriesLabel::P1), series(c, SeriesLabel::P1));
        let ab = rms_error(&a, &b, t_max).unwrap();
        let ba = rms_error(&b, &a, t_max).unwrap();
        let bc = rms_error(&b, &c, t_max).unwrap();
        let ac = rms_error(&a, &c, t_max).unwrap();
        prop_assert_eq!(rms_error(&a, &a, t_max).unwrap(), 0.0);
        prop_assert!((ab - ba).abs() < 1e-15);
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn f_transform_round_trips(
        v in prop::collection::vec(0.0f64..1.0, 20),
        k_f in 0.0f64..3.0,
    ) {
        let p = series(v, SeriesLabel::PS);
        let f = f_transform(&p, k_f).unwrap();
        prop_assert_eq!(f.label, SeriesLabel::FS);
        let back = f_inverse(&f, k_f).unwrap();
        prop_assert_eq!(back.label, SeriesLabel::PS);
        for (x, y) in p.values.iter().zip(&back.values) {
            prop_assert!((x - y).abs() <= 1e-13);
        }
        prop_assert!(f_transform(&f, k_f).is_err());
    }

    #[test]
    fn coherent_states_point_along_their_axis(
        mult in 2usize..6,
        theta in 0.0f64..std::f64::consts::PI,
        phi in 0.0f64..std::f64::consts::TAU,
    ) {
        let chi = spin_coherent_state(mult, theta, phi);
        prop_assert!((norm_sqr(&chi) - 1.0).abs() < 1e-12);
        let s = spin_matrices(mult).unwrap();
        let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
        let spin = (mult - 1) as f64 / 2.0;
        for (op, n_k) in s.components().iter().zip(n) {
            let m = op.as_slice();
            let mut e = C64::new(0.0, 0.0);
            for i in 0..mult {
                for j in 0..mult {
                    e += chi[i].conj() * m[i * mult + j] * chi[j];
                }
            }
            prop_assert!((e.re - spin * n_k).abs() < 1e-12 && e.im.abs() < 1e-12);
        }
    }

    #[test]
    fn unit_conversion_is_linear(b in 0.0f64..100.0, g in 1.9f64..2.1) {
        let w = mt_to_angular_frequency(b, g);
        prop_assert!((w - b * mt_to_angular_frequency(1.0, g)).abs() <= 1e-12 * w.max(1.0));
        prop_assert!((mt_to_angular_frequency(1.0, g) / g - mt_to_angular_frequency(1.0, 1.0)).abs() < 1e-9);
    }

    #[test]
    fn isotropic_hamiltonian_conserves_total_fz(
        a1 in -2.0f64..2.0,
        a2 in -2.0f64..2.0,
        b in 0.0f64..3.0,
    ) {
        let spec = SpinSystemSpec {
            nuclei: vec![proton(a1, 0), proton(a2, 1)],
            field: FieldSpec::along_z(b),
            ..SpinSystemSpec::bare()
        };
        let h = build_hamiltonian(&spec).unwrap();
        let layout = spec.layout().unwrap();
        let mut fz = SparseOperator::zero(layout.total_dim());
        for site in 0..layout.n_sites() {
            fz = fz.add(&embedded_spin_vector(site, &layout).unwrap()[2]);
        }
        prop_assert!(h.commutator(&fz).max_abs() < 1e-9 * h.max_abs().max(1.0));
        prop_assert!(h.hermiticity_defect() < 1e-12);
    }
}

#[test]
fn one_millitesla_in_angular_units() {
    let w = mt_to_angular_frequency(1.0, DEFAULT_G);
    assert!((w - 176.0860243051769).abs() < 1e-9, "{w}");
}

#[test]
fn zeeman_levels_of_a_bare_pair() {
    let b = 0.8;
    let spec = SpinSystemSpec {
        field: FieldSpec::new(b, [0.0, 0.8, 0.6]),
        ..SpinSystemSpec::bare()
    };
    let h = build_zeeman(&spec).unwrap().to_dense();
    let m = nalgebra::DMatrix::from_fn(4, 4, |i, j| {
        let z = h[i * 4 + j];
        nalgebra::Complex::new(z.re, z.im)
    });
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let w = mt_to_angular_frequency(b, DEFAULT_G);
    for (got, want) in ev.iter().zip([-w, 0.0, 0.0, w]) {
        assert!((got - want).abs() < 1e-9, "{ev:?}");
    }
}

#[test]
fn spin_algebra_relations() {
    for mult in 1..=7 {
        let s = spin_matrices(mult).unwrap();
        let j = s.spin();
        let i = C64::new(0.0, 1.0);
        let comm = s.sx.mul(&s.sy).add_scaled(&s.sy.mul(&s.sx), C64::new(-1.0, 0.0));
        assert!(comm.max_abs_diff(&s.sz.scaled(i)) < 1e-12);
        let casimir = s.sx.mul(&s.sx).add_scaled(&s.sy.mul(&s.sy), C64::new(1.0, 0.0))
            .add_scaled(&s.sz.mul(&s.sz), C64::new(1.0, 0.0));
        let want = LocalMatrix::identity(mult).scaled(C64::new(j * (j + 1.0), 0.0));
        assert!(casimir.max_abs_diff(&want) < 1e-12);
        assert!((s.sz[(0, 0)].re - j).abs() < 1e-15, "m runs from +I down");
    }
    assert!(spin_matrices(0).is_err());
}
