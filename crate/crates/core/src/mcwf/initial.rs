//! Initial states `|S⟩ ⊗ |χ_1⟩ ⊗ ... ⊗ |χ_n⟩` sampling `ρ(0) = P_S / Z`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use super::rng::RandomStream;
use crate::spin::HilbertLayout;
use crate::{Error, Result, C64, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitialStateStrategy {
    /// Spin coherent state per nucleus, orientation uniform on the sphere.
    SpinCoherent,
    /// Uniformly random `|I, m⟩` basis state per nucleus.
    ZeemanRandom,
    /// The `k`-th nuclear product basis state.
    Exhaustive,
}

/// Two-electron singlet `(|↑↓⟩ - |↓↑⟩)/√2` in the electron product basis.
pub fn singlet_electron_state() -> [C64; 4] {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    [ZERO, C64::new(s, 0.0), C64::new(-s, 0.0), ZERO]
}

/// `T_0 = (|↑↓⟩ + |↓↑⟩)/√2`.
pub fn t0_electron_state() -> [C64; 4] {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    [ZERO, C64::new(s, 0.0), C64::new(s, 0.0), ZERO]
}

/// Coefficients of the spin coherent state `|θ, φ⟩` of a spin with the given
/// multiplicity, in the `m = I, ..., -I` basis:
/// `c_k = sqrt(C(2I, k)) cos(θ/2)^(2I-k) sin(θ/2)^k e^{ikφ}`.
pub fn spin_coherent_state(multiplicity: usize, theta: f64, phi: f64) -> Vec<C64> {
    let two_i = multiplicity - 1;
    let (s, c) = (0.5 * theta).sin_cos();
    let mut out = Vec::with_capacity(multiplicity);
    let mut binom = 1.0f64;
    for k in 0..=two_i {
        if k > 0 {
            binom = binom * (two_i - k + 1) as f64 / k as f64;
        }
        let amp = binom.sqrt() * c.powi((two_i - k) as i32) * s.powi(k as i32);
        let (sp, cp) = (k as f64 * phi).sin_cos();
        out.push(C64::new(amp * cp, amp * sp));
    }
    out
}

/// Kronecker product of the electron state with per-nucleus states.
pub fn product_state(electrons: &[C64; 4], nuclei: &[Vec<C64>]) -> Vec<C64> {
    let mut state = electrons.to_vec();
    for n in nuclei {
        let mut next = Vec::with_capacity(state.len() * n.len());
        for a in &state {
            for b in n {
                next.push(a * b);
            }
        }
        state = next;
    }
    state
}

/// `|S⟩ ⊗` the `index`-th nuclear product basis state (canonical order).
pub fn exhaustive_state(layout: &HilbertLayout, index: u64) -> Result<Vec<C64>> {
    let z = layout.nuclear_states();
    if index >= z as u64 {
        return Err(Error::EnumerationExhausted { index, count: z });
    }
    let mut state = vec![ZERO; layout.total_dim()];
    let singlet = singlet_electron_state();
    for (e, amp) in singlet.iter().enumerate() {
        if *amp != ZERO {
            state[e * z + index as usize] = *amp;
        }
    }
    Ok(state)
}

pub fn sample_initial_state(
    layout: &HilbertLayout,
    strategy: InitialStateStrategy,
    rng: &mut RandomStream,
) -> Result<Vec<C64>> {
    match strategy {
        InitialStateStrategy::Exhaustive => exhaustive_state(layout, rng.trajectory_index()),
        InitialStateStrategy::SpinCoherent => {
            let nuclei: Vec<Vec<C64>> = layout
                .nuclear_multiplicities()
                .iter()
                .map(|&m| {
                    let cos_theta = 2.0 * rng.uniform() - 1.0;
                    let phi = 2.0 * core::f64::consts::PI * rng.uniform();
                    spin_coherent_state(m, cos_theta.acos(), phi)
                })
                .collect();
            Ok(product_state(&singlet_electron_state(), &nuclei))
        }
        InitialStateStrategy::ZeemanRandom => {
            let nuclei: Vec<Vec<C64>> = layout
                .nuclear_multiplicities()
                .iter()
                .map(|&m| {
                    let mut v = vec![ZERO; m];
                    v[rng.below(m)] = C64::new(1.0, 0.0);
                    v
                })
                .collect();
            Ok(product_state(&singlet_electron_state(), &nuclei))
        }
    }
}
