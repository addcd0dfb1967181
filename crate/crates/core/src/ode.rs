//! Dormand–Prince 5(4) integration with dense output and norm-crossing search.
//!
//! The integrator works natively on complex vectors. Each accepted step yields
//! a [`DenseSegment`] carrying the free 4th-order continuous extension, so the
//! solution can be evaluated anywhere inside the step without extra right-hand
//! side evaluations.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::{C64, ZERO};

/// Steps shorter than this abort the integration.
pub const MIN_STEP: f64 = 1e-14;
/// Tolerance on the squared norm at a located crossing.
pub const EVENT_TOL: f64 = 1e-10;
const SECANT_ITERATIONS: usize = 100;
const BISECTION_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum OdeError {
    #[error("step size underflow (h = {h:e}) at t = {t}")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("non-finite solution at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid time span [{t0}, {t1}]")]
    InvalidSpan { t0: f64, t1: f64 },
    #[error("invalid tolerances (abs = {abs:e}, rel = {rel:e})")]
    InvalidTolerance { abs: f64, rel: f64 },
    #[error("state dimension {got} does not match system dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Right-hand side `dy/dt = f(t, y)` on complex vectors.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerances {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    pub fn validate(&self) -> Result<(), OdeError> {
        if self.abs > 0.0 && self.rel > 0.0 && self.abs.is_finite() && self.rel.is_finite() {
            Ok(())
        } else {
            Err(OdeError::InvalidTolerance {
                abs: self.abs,
                rel: self.rel,
            })
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::new(1e-8, 1e-8)
    }
}

// Dormand & Prince (1980) coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Shampine's continuous extension as used in Hairer's DOPRI5.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI step-size controller.
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Continuous solution over one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSegment {
    t_start: f64,
    t_end: f64,
    r: [Vec<C64>; 5],
}

impl DenseSegment {
    fn with_dim(dim: usize) -> Self {
        Self {
            t_start: 0.0,
            t_end: 0.0,
            r: [
                vec![ZERO; dim],
                vec![ZERO; dim],
                vec![ZERO; dim],
                vec![ZERO; dim],
                vec![ZERO; dim],
            ],
        }
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dim(&self) -> usize {
        self.r[0].len()
    }

    /// State at `t_start`.
    pub fn start_state(&self) -> &[C64] {
        &self.r[0]
    }

    pub fn end_state(&self) -> Vec<C64> {
        self.r[0].iter().zip(&self.r[1]).map(|(a, b)| a + b).collect()
    }

    /// Interpolated state at fractional position `theta` in `[0, 1]`.
    #[inline]
    pub fn eval_theta_into(&self, theta: f64, out: &mut [C64]) {
        let t1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.r;
        for i in 0..out.len() {
            out[i] = r1[i] + (r2[i] + (r3[i] + (r4[i] + r5[i] * t1) * theta) * t1) * theta;
        }
    }

    pub fn eval_into(&self, t: f64, out: &mut [C64]) {
        let h = self.t_end - self.t_start;
        let theta = if h > 0.0 { (t - self.t_start) / h } else { 0.0 };
        self.eval_theta_into(theta, out);
    }

    pub fn eval(&self, t: f64) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim()];
        self.eval_into(t, &mut out);
        out
    }

    /// Squared norm of the interpolant at fractional position `theta`.
    pub fn norm_sqr_at_theta(&self, theta: f64) -> f64 {
        let t1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.r;
        let mut acc = 0.0;
        for i in 0..r1.len() {
            let z = r1[i] + (r2[i] + (r3[i] + (r4[i] + r5[i] * t1) * theta) * t1) * theta;
            acc += z.norm_sqr();
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegratorStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
}

/// Adaptive stepper producing one [`DenseSegment`] per accepted step.
pub struct Integrator<S: OdeSystem> {
    system: S,
    tol: Tolerances,
    t: f64,
    t_end: f64,
    h: f64,
    fac_old: f64,
    last_rejected: bool,
    y: Vec<C64>,
    k: [Vec<C64>; 7],
    y_stage: Vec<C64>,
    y_new: Vec<C64>,
    segment: DenseSegment,
    stats: IntegratorStats,
}

impl<S: OdeSystem> Integrator<S> {
    pub fn new(system: S, tol: Tolerances, t0: f64, y0: &[C64], t_end: f64) -> Result<Self, OdeError> {
        tol.validate()?;
        let dim = system.dim();
        if y0.len() != dim {
            return Err(OdeError::DimensionMismatch {
                expected: dim,
                got: y0.len(),
            });
        }
        if !(t0.is_finite() && t_end.is_finite() && t_end >= t0) {
            return Err(OdeError::InvalidSpan { t0, t1: t_end });
        }
        let mut it = Self {
            system,
            tol,
            t: t0,
            t_end,
            h: 0.0,
            fac_old: 1e-4,
            last_rejected: false,
            y: y0.to_vec(),
            k: core::array::from_fn(|_| vec![ZERO; dim]),
            y_stage: vec![ZERO; dim],
            y_new: vec![ZERO; dim],
            segment: DenseSegment::with_dim(dim),
            stats: IntegratorStats::default(),
        };
        it.eval_initial_derivative();
        it.h = it.initial_step();
        Ok(it)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[C64] {
        &self.y
    }

    pub fn stats(&self) -> IntegratorStats {
        self.stats
    }

    pub fn system(&self) -> &S {
        &self.system
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn into_system(self) -> S {
        self.system
    }

    /// Restart from a new state (after a discontinuity), keeping the current
    /// step size as the first trial step.
    pub fn restart(&mut self, t: f64, y: &[C64]) {
        debug_assert_eq!(y.len(), self.y.len());
        self.t = t;
        self.y.copy_from_slice(y);
        self.fac_old = 1e-4;
        self.last_rejected = false;
        self.eval_initial_derivative();
        if !(self.h > 0.0) {
            self.h = self.initial_step();
        }
    }

    fn eval_initial_derivative(&mut self) {
        let (k0, _) = self.k.split_at_mut(1);
        self.system.rhs(self.t, &self.y, &mut k0[0]);
        self.stats.rhs_evals += 1;
    }

    // Hairer, Nørsett & Wanner, "Solving ODEs I", II.4.
    fn initial_step(&mut self) -> f64 {
        let span = self.t_end - self.t;
        if span <= 0.0 {
            return MIN_STEP;
        }
        let n = self.y.len().max(1) as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..self.y.len() {
            let sk = self.tol.abs + self.tol.rel * self.y[i].norm();
            d0 += (self.y[i].norm() / sk).powi(2);
            d1 += (self.k[0][i].norm() / sk).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(span);
        for i in 0..self.y.len() {
            self.y_stage[i] = self.y[i] + self.k[0][i] * h0;
        }
        let (head, tail) = self.k.split_at_mut(1);
        self.system.rhs(self.t + h0, &self.y_stage, &mut tail[0]);
        self.stats.rhs_evals += 1;
        let mut d2 = 0.0;
        for i in 0..self.y.len() {
            let sk = self.tol.abs + self.tol.rel * self.y[i].norm();
            d2 += ((tail[0][i] - head[0][i]).norm() / sk).powi(2);
        }
        let d2 = (d2 / n).sqrt() / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / dm).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Advance by one accepted step. Returns `None` once `t_end` is reached.
    pub fn step(&mut self) -> Result<Option<&DenseSegment>, OdeError> {
        if self.t >= self.t_end {
            return Ok(None);
        }
        let dim = self.y.len();
        loop {
            let remaining = self.t_end - self.t;
            let mut h = self.h.min(remaining);
            // Avoid leaving a sliver shorter than the minimum step.
            if remaining - h < MIN_STEP * 10.0 {
                h = remaining;
            }
            if h < MIN_STEP && h < remaining {
                return Err(OdeError::StepSizeUnderflow { t: self.t, h });
            }
            let t = self.t;
            let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
            let ys = &mut self.y_stage;
            let y = &self.y;

            for i in 0..dim {
                ys[i] = y[i] + k1[i] * (h * A21);
            }
            self.system.rhs(t + C2 * h, ys, k2);
            for i in 0..dim {
                ys[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
            }
            self.system.rhs(t + C3 * h, ys, k3);
            for i in 0..dim {
                ys[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
            }
            self.system.rhs(t + C4 * h, ys, k4);
            for i in 0..dim {
                ys[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
            }
            self.system.rhs(t + C5 * h, ys, k5);
            for i in 0..dim {
                ys[i] = y[i]
                    + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
            }
            self.system.rhs(t + h, ys, k6);
            let yn = &mut self.y_new;
            for i in 0..dim {
                yn[i] = y[i]
                    + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
            }
            self.system.rhs(t + h, yn, k7);
            self.stats.rhs_evals += 6;

            let mut err: f64 = 0.0;
            let mut finite = true;
            for i in 0..dim {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
                let sk = self.tol.abs + self.tol.rel * y[i].norm().max(yn[i].norm());
                let ratio = e.norm_sqr() / (sk * sk);
                if !ratio.is_finite() {
                    finite = false;
                }
                err = err.max(ratio);
            }
            let err = err.sqrt();
            if !finite {
                self.stats.rejected += 1;
                self.h = h * FAC_MIN;
                if self.h < MIN_STEP {
                    return Err(OdeError::NonFinite { t });
                }
                continue;
            }

            let fac11 = err.powf(EXPO1);
            let fac = (fac11 / self.fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            if err <= 1.0 {
                self.fac_old = err.max(1e-4);
                let mut h_new = h / fac;
                if self.last_rejected {
                    h_new = h_new.min(h);
                }
                self.last_rejected = false;
                self.stats.accepted += 1;

                let seg = &mut self.segment;
                seg.t_start = t;
                seg.t_end = if h == remaining { self.t_end } else { t + h };
                let [r1, r2, r3, r4, r5] = &mut seg.r;
                for i in 0..dim {
                    let diff = yn[i] - y[i];
                    let bspl = k1[i] * h - diff;
                    r1[i] = y[i];
                    r2[i] = diff;
                    r3[i] = bspl;
                    r4[i] = diff - k7[i] * h - bspl;
                    r5[i] = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h;
                }
                core::mem::swap(&mut self.y, &mut self.y_new);
                self.k.swap(0, 6);
                self.t = seg.t_end;
                self.h = h_new;
                return Ok(Some(&self.segment));
            }
            self.stats.rejected += 1;
            self.last_rejected = true;
            self.h = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
            if self.h < MIN_STEP {
                return Err(OdeError::StepSizeUnderflow { t, h: self.h });
            }
        }
    }
}

/// Integrate over `t_span`, collecting every dense segment.
pub fn integrate_adaptive<S: OdeSystem>(
    system: S,
    y0: &[C64],
    t_span: (f64, f64),
    tol: Tolerances,
) -> Result<Vec<DenseSegment>, OdeError> {
    let (t0, t1) = t_span;
    if !(t1 > t0) {
        return Err(OdeError::InvalidSpan { t0, t1 });
    }
    let mut it = Integrator::new(system, tol, t0, y0, t1)?;
    let mut out = Vec::new();
    while let Some(seg) = it.step()? {
        out.push(seg.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventLocation {
    pub t_event: f64,
    pub state_at_event: Vec<C64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormCrossing {
    Crossed(EventLocation),
    /// The squared norm stayed above the threshold up to the given time.
    Censored { t_end: f64 },
}

/// Fractional position of the first crossing `|y|² = threshold` inside one
/// segment, or `None` if the segment ends above the threshold.
///
/// Returns `(theta, converged)`.
pub fn crossing_in_segment(seg: &DenseSegment, threshold: f64) -> Option<(f64, bool)> {
    let g = |theta: f64| seg.norm_sqr_at_theta(theta) - threshold;
    let g0 = g(0.0);
    if g0 <= 0.0 {
        return Some((0.0, true));
    }
    let g1 = g(1.0);
    if g1 > 0.0 {
        return None;
    }
    if g1.abs() <= EVENT_TOL && seg.t_end() == seg.t_start() {
        return Some((1.0, true));
    }
    let (mut a, mut ga) = (0.0, g0);
    let (mut b, mut gb) = (1.0, g1);
    let width = |a: f64, b: f64| (b - a) * (seg.t_end() - seg.t_start());
    // Illinois-modified regula falsi, falling back to bisection.
    let mut side = 0i8;
    for _ in 0..SECANT_ITERATIONS {
        if gb.abs() <= EVENT_TOL {
            return Some((b, true));
        }
        if ga.abs() <= EVENT_TOL {
            return Some((a, true));
        }
        let mut c = (a * gb - b * ga) / (gb - ga);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let gc = g(c);
        if gc.abs() <= EVENT_TOL {
            return Some((c, true));
        }
        if gc > 0.0 {
            a = c;
            ga = gc;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        } else {
            b = c;
            gb = gc;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        }
        if width(a, b) <= f64::EPSILON * seg.t_end().abs().max(1.0) {
            break;
        }
    }
    let (mut a, mut b) = (a, b);
    for _ in 0..BISECTION_ITERATIONS {
        let c = 0.5 * (a + b);
        let gc = g(c);
        if gc.abs() <= EVENT_TOL {
            return Some((c, true));
        }
        if gc > 0.0 {
            a = c;
        } else {
            b = c;
        }
        if !(c > a || c < b) || width(a, b) <= 0.0 {
            break;
        }
    }
    let converged = g(b).abs() <= EVENT_TOL;
    Some((b, converged))
}

/// Earliest time at which the squared norm of the piecewise solution falls
/// to `threshold`.
pub fn locate_norm_crossing<'a, I>(segments: I, threshold: f64) -> NormCrossing
where
    I: IntoIterator<Item = &'a DenseSegment>,
{
    let mut t_end = f64::NEG_INFINITY;
    for seg in segments {
        t_end = seg.t_end();
        if let Some((theta, converged)) = crossing_in_segment(seg, threshold) {
            let mut state = vec![ZERO; seg.dim()];
            seg.eval_theta_into(theta, &mut state);
            let h = seg.t_end() - seg.t_start();
            let t_event = if theta >= 1.0 {
                seg.t_end()
            } else {
                seg.t_start() + theta * h
            };
            return NormCrossing::Crossed(EventLocation {
                t_event,
                state_at_event: state,
                converged,
            });
        }
    }
    NormCrossing::Censored { t_end }
}
