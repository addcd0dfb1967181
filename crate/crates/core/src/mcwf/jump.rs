use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use super::rng::RandomStream;
use crate::model::ModelOperators;
use crate::{norm_sqr, Error, Result, C64};

/// Weights below this (relative to the squared norm) count as closed channels.
pub const DEGENERATE_WEIGHT: f64 = 1e-14;

/// Instantaneous jump rates of a state, per unit time and per unit squared norm.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRates {
    /// `i ⟨φ|H_eff - H_eff†|φ⟩ / ‖φ‖²`.
    pub total: f64,
    /// `⟨φ|J_m† J_m|φ⟩ / ‖φ‖²`.
    pub lindblad: Vec<f64>,
    /// `⟨φ|K_n|φ⟩ / ‖φ‖²`.
    pub reaction: Vec<f64>,
}

impl JumpRates {
    pub fn channel_sum(&self) -> f64 {
        self.lindblad.iter().sum::<f64>() + self.reaction.iter().sum::<f64>()
    }
}

pub fn jump_rates(model: &ModelOperators, phi: &[C64]) -> JumpRates {
    let n2 = norm_sqr(phi);
    let h = model.h_eff.expectation(phi);
    // i(⟨H⟩ - conj⟨H⟩) = i · 2i Im⟨H⟩.
    let total = -2.0 * h.im / n2;
    JumpRates {
        total,
        lindblad: model
            .jumps
            .iter()
            .map(|j| j.weight_op.expectation(phi).re / n2)
            .collect(),
        reaction: model
            .reactions
            .iter()
            .map(|k| k.op.expectation(phi).re / n2)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum JumpOutcome {
    /// Lindblad channel `channel` fired; `state` is `J φ / ‖J φ‖`.
    Lindblad { channel: usize, state: Vec<C64> },
    /// Reaction channel `channel` fired; the trajectory ends.
    Reaction { channel: usize },
}

/// Pick a channel with probability proportional to its weight and apply it.
pub fn select_and_apply_jump(
    phi: &[C64],
    model: &ModelOperators,
    rng: &mut RandomStream,
) -> Result<JumpOutcome> {
    let n2 = norm_sqr(phi);
    let mut lindblad_states: Vec<Vec<C64>> = Vec::with_capacity(model.jumps.len());
    let mut weights: Vec<f64> = Vec::with_capacity(model.jumps.len() + model.reactions.len());
    for j in &model.jumps {
        let v = j.op.matvec(phi);
        weights.push(norm_sqr(&v) / n2);
        lindblad_states.push(v);
    }
    for k in &model.reactions {
        weights.push(k.op.expectation(phi).re.max(0.0) / n2);
    }
    let total: f64 = weights.iter().sum();
    if !(total > DEGENERATE_WEIGHT) || !n2.is_finite() {
        return Err(Error::DegenerateJump {
            total_weight: total,
            norm_sqr: n2,
        });
    }
    let target = rng.uniform() * total;
    let mut acc = 0.0;
    let mut chosen = weights.len() - 1;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc && *w > 0.0 {
            chosen = i;
            break;
        }
    }
    // Guard against landing on a zero-weight tail channel through rounding.
    while weights[chosen] <= 0.0 {
        chosen -= 1;
    }
    let m = model.jumps.len();
    if chosen < m {
        let mut state = core::mem::take(&mut lindblad_states[chosen]);
        let norm = norm_sqr(&state).sqrt();
        state.iter_mut().for_each(|z| *z /= norm);
        Ok(JumpOutcome::Lindblad {
            channel: chosen,
            state,
        })
    } else {
        Ok(JumpOutcome::Reaction { channel: chosen - m })
    }
}
