//! Ensemble averaging over trajectories.
//!
//! Per-trajectory contributions are accumulated in fixed point, so partial
//! accumulators over disjoint index ranges can be merged in any order and
//! still give bit-identical results.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use super::initial::{exhaustive_state, sample_initial_state, InitialStateStrategy};
use super::rng::RandomStream;
use super::trajectory::{propagate_with_observer, validate_grid, GridObserver, Outcome};
use crate::model::ModelOperators;
use crate::ode::Tolerances;
use crate::{Error, Result};

const SCALE_UNIT: f64 = (1u64 << 52) as f64;
const SCALE_TIME: f64 = (1u64 << 40) as f64;
const SCALE_TIME_SQ: f64 = (1u64 << 32) as f64;

#[inline]
fn fix(x: f64, scale: f64) -> u128 {
    (x.max(0.0) * scale).round() as u128
}

#[inline]
fn unfix(x: u128, scale: f64) -> f64 {
    x as f64 / scale
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSettings {
    pub n_samples: u64,
    pub strategy: InitialStateStrategy,
    pub grid: Vec<f64>,
    pub t_max: f64,
    pub master_seed: u64,
    pub tol: Tolerances,
    /// Per-trajectory time integrals are weighted by `exp(-rate·t)`; used when
    /// a spin-independent decay was factored out of the model.
    pub integral_discount: f64,
}

impl EnsembleSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::spec("run.n_samples", "must be at least 1"));
        }
        self.tol.validate()?;
        if !(self.integral_discount >= 0.0 && self.integral_discount.is_finite()) {
            return Err(Error::spec("run.integral_discount", "must be finite and non-negative"));
        }
        validate_grid(&self.grid, self.t_max)
    }
}

/// Trapezoid weights of a grid.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; grid.len()];
    for i in 1..grid.len() {
        let h = 0.5 * (grid[i] - grid[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    w
}

/// Mergeable sums over a set of trajectories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsembleAccumulator {
    n: u64,
    /// `dead_from[k]`: trajectories whose first non-alive grid index is `k`
    /// (`k == grid.len()` means alive on the whole grid).
    dead_from: Vec<u64>,
    singlet: Vec<u128>,
    singlet_sq: Vec<u128>,
    /// `∫ alive dt` and `∫ alive·s dt` per trajectory, and their squares.
    alive_int: u128,
    alive_int_sq: u128,
    singlet_int: u128,
    singlet_int_sq: u128,
    reaction_counts: Vec<u64>,
    reaction_time: u128,
    reaction_time_sq: u128,
    lindblad_jumps: u64,
    steps: u64,
}

impl EnsembleAccumulator {
    pub fn new(grid_len: usize, reaction_channels: usize) -> Self {
        Self {
            n: 0,
            dead_from: vec![0; grid_len + 1],
            singlet: vec![0; grid_len],
            singlet_sq: vec![0; grid_len],
            alive_int: 0,
            alive_int_sq: 0,
            singlet_int: 0,
            singlet_int_sq: 0,
            reaction_counts: vec![0; reaction_channels],
            reaction_time: 0,
            reaction_time_sq: 0,
            lindblad_jumps: 0,
            steps: 0,
        }
    }

    pub fn n_samples(&self) -> u64 {
        self.n
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.singlet.len(), other.singlet.len(), "grid length mismatch");
        assert_eq!(self.reaction_counts.len(), other.reaction_counts.len());
        self.n += other.n;
        let add64 = |a: &mut [u64], b: &[u64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        let add128 = |a: &mut [u128], b: &[u128]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add64(&mut self.dead_from, &other.dead_from);
        add128(&mut self.singlet, &other.singlet);
        add128(&mut self.singlet_sq, &other.singlet_sq);
        add64(&mut self.reaction_counts, &other.reaction_counts);
        self.alive_int += other.alive_int;
        self.alive_int_sq += other.alive_int_sq;
        self.singlet_int += other.singlet_int;
        self.singlet_int_sq += other.singlet_int_sq;
        self.reaction_time += other.reaction_time;
        self.reaction_time_sq += other.reaction_time_sq;
        self.lindblad_jumps += other.lindblad_jumps;
        self.steps += other.steps;
    }

    pub fn finish(&self, settings: &EnsembleSettings) -> EnsembleResult {
        let n = self.n as f64;
        let len = self.singlet.len();
        let mut p1 = Vec::with_capacity(len);
        let mut p1_stderr = Vec::with_capacity(len);
        let mut ps = Vec::with_capacity(len);
        let mut ps_stderr = Vec::with_capacity(len);
        let mut dead = 0u64;
        for i in 0..len {
            dead += self.dead_from[i];
            let p = (self.n - dead) as f64 / n;
            p1.push(p);
            p1_stderr.push((p * (1.0 - p) / n).sqrt());
            let (m, se) = mean_stderr(
                unfix(self.singlet[i], SCALE_UNIT),
                unfix(self.singlet_sq[i], SCALE_UNIT),
                self.n,
            );
            ps.push(m);
            ps_stderr.push(se);
        }
        let reactions: u64 = self.reaction_counts.iter().sum();
        let (rt_mean, rt_se) = mean_stderr(
            unfix(self.reaction_time, SCALE_TIME),
            unfix(self.reaction_time_sq, SCALE_TIME_SQ),
            reactions,
        );
        let rt_var = if reactions > 1 {
            rt_se * rt_se * reactions as f64
        } else {
            f64::NAN
        };
        let moment = |s: u128, sq: u128| {
            let (m, se) = mean_stderr(unfix(s, SCALE_TIME), unfix(sq, SCALE_TIME_SQ), self.n);
            Moment { mean: m, stderr: se }
        };
        EnsembleResult {
            grid: settings.grid.clone(),
            p1,
            p1_stderr,
            ps,
            ps_stderr,
            n_samples: self.n,
            master_seed: settings.master_seed,
            alive_integral: moment(self.alive_int, self.alive_int_sq),
            singlet_integral: moment(self.singlet_int, self.singlet_int_sq),
            reaction_counts: self.reaction_counts.clone(),
            reaction_time_mean: rt_mean,
            reaction_time_var: rt_var,
            lindblad_jumps: self.lindblad_jumps,
            steps: self.steps,
        }
    }
}

fn mean_stderr(sum: f64, sum_sq: f64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let mean = sum / nf;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = ((sum_sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment {
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub grid: Vec<f64>,
    pub p1: Vec<f64>,
    pub p1_stderr: Vec<f64>,
    pub ps: Vec<f64>,
    pub ps_stderr: Vec<f64>,
    pub n_samples: u64,
    pub master_seed: u64,
    /// Per-trajectory trapezoid `∫ alive dt` over the grid.
    pub alive_integral: Moment,
    /// Per-trajectory trapezoid `∫ alive·⟨P_S⟩ dt` over the grid.
    pub singlet_integral: Moment,
    pub reaction_counts: Vec<u64>,
    pub reaction_time_mean: f64,
    pub reaction_time_var: f64,
    pub lindblad_jumps: u64,
    pub steps: u64,
}

struct AccumulatingObserver<'a> {
    acc: &'a mut EnsembleAccumulator,
    weights: &'a [f64],
    alive_int: f64,
    singlet_int: f64,
}

impl GridObserver for AccumulatingObserver<'_> {
    #[inline]
    fn alive(&mut self, index: usize, singlet: f64) {
        let s = singlet.clamp(0.0, 1.0);
        self.acc.singlet[index] += fix(s, SCALE_UNIT);
        self.acc.singlet_sq[index] += fix(s * s, SCALE_UNIT);
        self.alive_int += self.weights[index];
        self.singlet_int += self.weights[index] * s;
    }

    fn finish(&mut self, first_dead: usize) {
        self.acc.dead_from[first_dead] += 1;
        self.acc.alive_int += fix(self.alive_int, SCALE_TIME);
        self.acc.alive_int_sq += fix(self.alive_int * self.alive_int, SCALE_TIME_SQ);
        self.acc.singlet_int += fix(self.singlet_int, SCALE_TIME);
        self.acc.singlet_int_sq += fix(self.singlet_int * self.singlet_int, SCALE_TIME_SQ);
    }
}

/// Run one trajectory and add it to `acc`.
pub fn accumulate_trajectory(
    model: &ModelOperators,
    settings: &EnsembleSettings,
    weights: &[f64],
    index: u64,
    acc: &mut EnsembleAccumulator,
) -> Result<()> {
    let mut rng = RandomStream::new(settings.master_seed, index);
    let layout = &model.layout;
    let phi0 = match settings.strategy {
        InitialStateStrategy::Exhaustive => {
            exhaustive_state(layout, index % layout.nuclear_states() as u64)?
        }
        s => sample_initial_state(layout, s, &mut rng)?,
    };
    let mut obs = AccumulatingObserver {
        acc,
        weights,
        alive_int: 0.0,
        singlet_int: 0.0,
    };
    let summary = propagate_with_observer(
        model,
        &phi0,
        settings.t_max,
        &settings.grid,
        settings.tol,
        &mut rng,
        &mut obs,
    )?;
    acc.n += 1;
    acc.steps += summary.steps;
    acc.lindblad_jumps += summary
        .jump_events
        .iter()
        .filter(|e| e.kind == super::trajectory::JumpType::Lindblad)
        .count() as u64;
    if let Outcome::Reacted { t, channel } = summary.outcome {
        acc.reaction_counts[channel] += 1;
        acc.reaction_time += fix(t, SCALE_TIME);
        acc.reaction_time_sq += fix(t * t, SCALE_TIME_SQ);
    }
    Ok(())
}

/// Accumulate trajectories with indices in `range`. On failure the error of
/// the lowest failing index is returned.
pub fn run_ensemble_range(
    model: &ModelOperators,
    settings: &EnsembleSettings,
    range: Range<u64>,
) -> Result<EnsembleAccumulator> {
    settings.validate()?;
    let mut weights = trapezoid_weights(&settings.grid);
    if settings.integral_discount > 0.0 {
        for (w, t) in weights.iter_mut().zip(&settings.grid) {
            *w *= (-settings.integral_discount * t).exp();
        }
    }
    let mut acc = EnsembleAccumulator::new(settings.grid.len(), model.reactions.len());
    for i in range {
        accumulate_trajectory(model, settings, &weights, i, &mut acc)?;
    }
    Ok(acc)
}

/// Serial ensemble run over trajectory indices `0..n_samples`.
pub fn run_ensemble(model: &ModelOperators, settings: &EnsembleSettings) -> Result<EnsembleResult> {
    let acc = run_ensemble_range(model, settings, 0..settings.n_samples)?;
    Ok(acc.finish(settings))
}
