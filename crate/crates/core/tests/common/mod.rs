#![allow(dead_code)]

use radpair_core::model::*;
use radpair_core::C64;

pub fn proton(a_mt: f64, electron: usize) -> NucleusSpec {
    NucleusSpec {
        label: "H".into(),
        multiplicity: 2,
        coupled_electron: electron,
        hyperfine: HyperfineTensor::isotropic(a_mt),
    }
}

pub fn nitrogen(a_iso: f64, a_axial: f64) -> NucleusSpec {
    NucleusSpec {
        label: "N".into(),
        multiplicity: 3,
        coupled_electron: 0,
        hyperfine: HyperfineTensor::axial(a_iso, a_axial, [0.0, 0.0, 1.0]).unwrap(),
    }
}

/// Two electrons and one proton, `a = 1 mT`, `B = 0.05 mT ∥ z`, `k_b = 2`,
/// `γ_RF = 0.2` on both radicals.
pub fn one_proton() -> SpinSystemSpec {
    SpinSystemSpec {
        nuclei: vec![proton(1.0, 0)],
        field: FieldSpec::along_z(0.05),
        kinetics: KineticsSpec::Forward { k_b: 2.0, k_f: 0.0 },
        dissipation: DissipationSpec {
            gamma_st: 0.0,
            gamma_rf: [0.2, 0.2],
        },
        ..SpinSystemSpec::bare()
    }
}

/// Every channel type present.
pub fn all_channels() -> SpinSystemSpec {
    SpinSystemSpec {
        nuclei: vec![proton(0.8, 0), nitrogen(0.5, 0.3)],
        field: FieldSpec::new(0.3, [0.6, 0.0, 0.8]),
        kinetics: KineticsSpec::SingletTriplet { k_s: 1.7, k_t: 0.6 },
        dissipation: DissipationSpec {
            gamma_st: 1.1,
            gamma_rf: [0.2, 0.35],
        },
        ..SpinSystemSpec::bare()
    }
}

/// Deterministic pseudo-random complex vector (xorshift).
pub fn pseudo_random_state(dim: usize, seed: u64) -> Vec<C64> {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut v: Vec<C64> = (0..dim).map(|_| C64::new(next(), next())).collect();
    let n = radpair_core::norm_sqr(&v).sqrt();
    v.iter_mut().for_each(|z| *z /= n);
    v
}

/// Random Hermitian, positive, unit-trace density matrix (row-major).
pub fn pseudo_random_density(dim: usize, seed: u64) -> Vec<C64> {
    let mut rho = vec![C64::new(0.0, 0.0); dim * dim];
    for k in 0..3u64 {
        let v = pseudo_random_state(dim, seed * 7 + k);
        let w = 1.0 / (k + 1) as f64;
        for i in 0..dim {
            for j in 0..dim {
                rho[i * dim + j] += v[i] * v[j].conj() * w;
            }
        }
    }
    let tr: f64 = (0..dim).map(|i| rho[i * dim + i].re).sum();
    rho.iter_mut().for_each(|z| *z /= tr);
    rho
}
