use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use super::jump::{select_and_apply_jump, JumpOutcome};
use super::rng::RandomStream;
use crate::model::ModelOperators;
use crate::ode::{crossing_in_segment, Integrator, OdeError, OdeSystem, Tolerances};
use crate::sparse::SparseOperator;
use crate::{norm_sqr, Error, Result, C64, ZERO};

/// Default integration tolerances for wavefunction trajectories.
pub const DEFAULT_TRAJECTORY_TOL: Tolerances = Tolerances::new(1e-8, 1e-8);

/// `dφ/dt = -i H_eff φ`.
#[derive(Debug, Clone, Copy)]
pub struct NoJumpEvolution<'a> {
    generator: &'a SparseOperator,
}

impl<'a> NoJumpEvolution<'a> {
    pub fn new(model: &'a ModelOperators) -> Self {
        Self {
            generator: &model.generator,
        }
    }
}

impl OdeSystem for NoJumpEvolution<'_> {
    fn dim(&self) -> usize {
        self.generator.dim()
    }

    #[inline]
    fn rhs(&mut self, _t: f64, y: &[C64], dy: &mut [C64]) {
        self.generator.matvec_into(y, dy);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpType {
    Lindblad,
    Reaction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub t: f64,
    pub channel: usize,
    pub kind: JumpType,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Reacted { t: f64, channel: usize },
    Censored { t_max: f64 },
}

impl Outcome {
    pub fn reaction_time(&self) -> Option<f64> {
        match *self {
            Outcome::Reacted { t, .. } => Some(t),
            Outcome::Censored { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSample {
    pub alive: bool,
    /// `⟨φ|P_S|φ⟩ / ‖φ‖²` while alive, 0 afterwards.
    pub singlet: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub outcome: Outcome,
    pub jump_events: Vec<JumpEvent>,
    pub grid_observables: Vec<GridSample>,
    /// Squared norm of the unnormalized state at the end of propagation
    /// (before the terminating jump, if any).
    pub final_norm_sqr: f64,
    pub steps: u64,
}

/// Receives grid observables while a trajectory runs.
pub trait GridObserver {
    /// Grid point `index` is alive with the given singlet expectation.
    /// Called in increasing index order.
    fn alive(&mut self, index: usize, singlet: f64);
    /// Grid points from `first_dead` onward are past the reaction, or past the
    /// end of the grid when `first_dead == grid.len()`.
    fn finish(&mut self, first_dead: usize);
}

#[derive(Debug, Clone, Default)]
struct RecordingObserver {
    samples: Vec<GridSample>,
}

impl GridObserver for RecordingObserver {
    fn alive(&mut self, index: usize, singlet: f64) {
        debug_assert_eq!(index, self.samples.len());
        self.samples.push(GridSample {
            alive: true,
            singlet,
        });
    }

    fn finish(&mut self, _first_dead: usize) {}
}

/// Trajectory result without per-grid data.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary {
    pub outcome: Outcome,
    pub jump_events: Vec<JumpEvent>,
    pub final_norm_sqr: f64,
    pub steps: u64,
}

/// Check that a time grid is strictly increasing inside `[0, t_max]`.
pub fn validate_grid(grid: &[f64], t_max: f64) -> Result<()> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::Range(alloc::format!("t_max must be positive, got {t_max}")));
    }
    if let Some(&first) = grid.first() {
        if first < 0.0 {
            return Err(Error::Range("grid starts before t = 0".into()));
        }
    }
    if let Some(&last) = grid.last() {
        if last > t_max {
            return Err(Error::Range(alloc::format!(
                "grid ends at {last} beyond t_max = {t_max}"
            )));
        }
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Range("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Uniform grid `0, dt, 2dt, ...` up to `t_max` (inclusive when aligned).
pub fn uniform_grid(t_max: f64, dt: f64) -> Vec<f64> {
    let n = (t_max / dt + 1e-9).floor() as usize;
    (0..=n).map(|i| i as f64 * dt).filter(|&t| t <= t_max).collect()
}

struct GridCursor<'g> {
    grid: &'g [f64],
    next: usize,
    buf: Vec<C64>,
}

impl GridCursor<'_> {
    /// Emit grid points in `[seg.t_start, limit)` (or `..= limit` when `inclusive`).
    fn emit<O: GridObserver>(
        &mut self,
        seg: &crate::ode::DenseSegment,
        limit: f64,
        inclusive: bool,
        p_singlet: &SparseOperator,
        obs: &mut O,
    ) {
        while self.next < self.grid.len() {
            let t = self.grid[self.next];
            if t > limit || (!inclusive && t == limit) {
                break;
            }
            seg.eval_into(t, &mut self.buf);
            let n2 = norm_sqr(&self.buf);
            let s = p_singlet.expectation(&self.buf).re / n2;
            obs.alive(self.next, s);
            self.next += 1;
        }
    }
}

/// Propagate one trajectory, streaming grid observables into `obs`.
pub fn propagate_with_observer<O: GridObserver>(
    model: &ModelOperators,
    phi0: &[C64],
    t_max: f64,
    grid: &[f64],
    tol: Tolerances,
    rng: &mut RandomStream,
    obs: &mut O,
) -> Result<TrajectorySummary> {
    let index = rng.trajectory_index();
    let wrap = |source: OdeError| Error::Trajectory { index, source };
    let n0 = norm_sqr(phi0);
    if !((n0 - 1.0).abs() <= 1e-10) {
        return Err(Error::Range(alloc::format!(
            "initial state must be normalized, squared norm is {n0}"
        )));
    }
    let dim = model.dim();
    let mut integ =
        Integrator::new(NoJumpEvolution::new(model), tol, 0.0, phi0, t_max).map_err(wrap)?;
    let mut cursor = GridCursor {
        grid,
        next: 0,
        buf: vec![ZERO; dim],
    };
    let mut events = Vec::new();
    let mut u = rng.uniform();
    let mut state_at_event = vec![ZERO; dim];

    loop {
        let seg = match integ.step().map_err(wrap)? {
            Some(seg) => seg,
            None => {
                obs.finish(grid.len());
                return Ok(TrajectorySummary {
                    outcome: Outcome::Censored { t_max },
                    jump_events: events,
                    final_norm_sqr: norm_sqr(integ.state()),
                    steps: integ.stats().accepted,
                });
            }
        };
        let Some((theta, _)) = crossing_in_segment(seg, u) else {
            cursor.emit(seg, seg.t_end(), true, &model.p_singlet, obs);
            continue;
        };
        let t_event = if theta >= 1.0 {
            seg.t_end()
        } else {
            seg.t_start() + theta * (seg.t_end() - seg.t_start())
        };
        cursor.emit(seg, t_event, false, &model.p_singlet, obs);
        seg.eval_theta_into(theta, &mut state_at_event);

        match select_and_apply_jump(&state_at_event, model, rng)? {
            JumpOutcome::Lindblad { channel, state } => {
                events.push(JumpEvent {
                    t: t_event,
                    channel,
                    kind: JumpType::Lindblad,
                });
                integ.restart(t_event, &state);
                u = rng.uniform();
            }
            JumpOutcome::Reaction { channel } => {
                events.push(JumpEvent {
                    t: t_event,
                    channel,
                    kind: JumpType::Reaction,
                });
                obs.finish(cursor.next);
                return Ok(TrajectorySummary {
                    outcome: Outcome::Reacted { t: t_event, channel },
                    jump_events: events,
                    final_norm_sqr: norm_sqr(&state_at_event),
                    steps: integ.stats().accepted,
                });
            }
        }
    }
}

/// Propagate one trajectory and keep its full record.
pub fn propagate_trajectory(
    model: &ModelOperators,
    phi0: &[C64],
    t_max: f64,
    grid: &[f64],
    tol: Tolerances,
    rng: &mut RandomStream,
) -> Result<TrajectoryRecord> {
    validate_grid(grid, t_max)?;
    let mut obs = RecordingObserver::default();
    let summary = propagate_with_observer(model, phi0, t_max, grid, tol, rng, &mut obs)?;
    let mut samples = obs.samples;
    samples.resize(
        grid.len(),
        GridSample {
            alive: false,
            singlet: 0.0,
        },
    );
    Ok(TrajectoryRecord {
        outcome: summary.outcome,
        jump_events: summary.jump_events,
        grid_observables: samples,
        final_norm_sqr: summary.final_norm_sqr,
        steps: summary.steps,
    })
}
