//! Post-processing shared by both propagation methods.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::mcwf::EnsembleResult;
use crate::me::MeSeries;
use crate::model::SpinSystemSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeriesLabel {
    P1,
    PS,
    F1,
    FS,
}

impl SeriesLabel {
    pub fn name(self) -> &'static str {
        match self {
            SeriesLabel::P1 => "p1",
            SeriesLabel::PS => "pS",
            SeriesLabel::F1 => "f1",
            SeriesLabel::FS => "fS",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
    pub label: SeriesLabel,
}

impl ObservableSeries {
    pub fn new(
        grid: Vec<f64>,
        values: Vec<f64>,
        stderr: Option<Vec<f64>>,
        label: SeriesLabel,
    ) -> Result<Self> {
        if grid.len() != values.len() || stderr.as_ref().is_some_and(|s| s.len() != grid.len()) {
            return Err(Error::GridMismatch(format!(
                "series has {} grid points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Range("series grid must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Range(format!("{} series has non-finite values", label.name())));
        }
        Ok(Self {
            grid,
            values,
            stderr,
            label,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn p1_from_ensemble(r: &EnsembleResult) -> Self {
        Self {
            grid: r.grid.clone(),
            values: r.p1.clone(),
            stderr: Some(r.p1_stderr.clone()),
            label: SeriesLabel::P1,
        }
    }

    pub fn ps_from_ensemble(r: &EnsembleResult) -> Self {
        Self {
            grid: r.grid.clone(),
            values: r.ps.clone(),
            stderr: Some(r.ps_stderr.clone()),
            label: SeriesLabel::PS,
        }
    }

    pub fn p1_from_me(s: &MeSeries) -> Self {
        Self {
            grid: s.grid.clone(),
            values: s.p1.clone(),
            stderr: None,
            label: SeriesLabel::P1,
        }
    }

    pub fn ps_from_me(s: &MeSeries) -> Self {
        Self {
            grid: s.grid.clone(),
            values: s.ps.clone(),
            stderr: None,
            label: SeriesLabel::PS,
        }
    }
}

fn scale_by_exp(series: &ObservableSeries, rate: f64, label: SeriesLabel) -> ObservableSeries {
    let factor: Vec<f64> = series.grid.iter().map(|t| (rate * t).exp()).collect();
    ObservableSeries {
        grid: series.grid.clone(),
        values: series.values.iter().zip(&factor).map(|(v, f)| v * f).collect(),
        stderr: series
            .stderr
            .as_ref()
            .map(|s| s.iter().zip(&factor).map(|(v, f)| v * f).collect()),
        label,
    }
}

/// `f_i(t) = p_i(t) e^{k_f t}`.
pub fn f_transform(series: &ObservableSeries, k_f: f64) -> Result<ObservableSeries> {
    let label = match series.label {
        SeriesLabel::P1 => SeriesLabel::F1,
        SeriesLabel::PS => SeriesLabel::FS,
        other => {
            return Err(Error::Configuration(format!(
                "f-transform expects a p1 or pS series, got {}",
                other.name()
            )))
        }
    };
    Ok(scale_by_exp(series, k_f, label))
}

/// `p_i(t) = f_i(t) e^{-k_f t}`.
pub fn f_inverse(series: &ObservableSeries, k_f: f64) -> Result<ObservableSeries> {
    let label = match series.label {
        SeriesLabel::F1 => SeriesLabel::P1,
        SeriesLabel::FS => SeriesLabel::PS,
        other => {
            return Err(Error::Configuration(format!(
                "inverse f-transform expects an f1 or fS series, got {}",
                other.name()
            )))
        }
    };
    Ok(scale_by_exp(series, -k_f, label))
}

/// Trapezoid `∫_{grid[0]}^{t_max} g dt` for a piecewise-linear `g`, with the
/// last interval cut at `t_max`.
fn trapezoid_to(grid: &[f64], values: &[f64], t_max: f64) -> f64 {
    let mut acc = 0.0;
    for i in 1..grid.len() {
        let (t0, t1) = (grid[i - 1], grid[i]);
        if t0 >= t_max {
            break;
        }
        if t1 <= t_max {
            acc += 0.5 * (t1 - t0) * (values[i - 1] + values[i]);
        } else {
            let v = values[i - 1] + (values[i] - values[i - 1]) * (t_max - t0) / (t1 - t0);
            acc += 0.5 * (t_max - t0) * (values[i - 1] + v);
        }
    }
    acc
}

fn check_covers(series: &ObservableSeries, t_max: f64) -> Result<()> {
    let (Some(&first), Some(&last)) = (series.grid.first(), series.grid.last()) else {
        return Err(Error::Range("empty series".into()));
    };
    if first > 0.0 {
        return Err(Error::Range(format!("series starts at t = {first}, after 0")));
    }
    if t_max > last * (1.0 + 1e-12) {
        return Err(Error::Range(format!(
            "t_max = {t_max} lies beyond the series end {last}"
        )));
    }
    Ok(())
}

/// Reaction yields up to a cut-off time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Yields {
    pub y_s: f64,
    pub y_1: f64,
    pub y_s_stderr: Option<f64>,
    pub y_1_stderr: Option<f64>,
    /// Upper integration limit; yields are not extrapolated beyond it.
    pub t_max: f64,
}

/// `Y_S = k_b ∫ pS dt`, `Y_1 = k_f ∫ p1 dt` over `[0, t_max]`, trapezoidal.
pub fn yields(
    p1: &ObservableSeries,
    ps: &ObservableSeries,
    k_b: f64,
    k_f: f64,
    t_max: f64,
) -> Result<Yields> {
    check_covers(p1, t_max)?;
    check_covers(ps, t_max)?;
    Ok(Yields {
        y_s: k_b * trapezoid_to(&ps.grid, &ps.values, t_max),
        y_1: k_f * trapezoid_to(&p1.grid, &p1.values, t_max),
        y_s_stderr: None,
        y_1_stderr: None,
        t_max,
    })
}

/// Yields of an ensemble over its whole grid, with standard errors from the
/// per-trajectory integrals.
pub fn ensemble_yields(r: &EnsembleResult, k_b: f64, k_f: f64) -> Yields {
    Yields {
        y_s: k_b * r.singlet_integral.mean,
        y_1: k_f * r.alive_integral.mean,
        y_s_stderr: Some(k_b * r.singlet_integral.stderr),
        y_1_stderr: Some(k_f * r.alive_integral.stderr),
        t_max: r.grid.last().copied().unwrap_or(0.0),
    }
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a
            .iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0))
}

/// `E = sqrt((1/t_max) ∫_0^{t_max} (a - b)² dt)`.
pub fn rms_error(a: &ObservableSeries, b: &ObservableSeries, t_max: f64) -> Result<f64> {
    if !same_grid(&a.grid, &b.grid) {
        return Err(Error::GridMismatch(format!(
            "series grids differ ({} vs {} points)",
            a.len(),
            b.len()
        )));
    }
    if !(t_max > 0.0) {
        return Err(Error::Range(format!("t_max must be positive, got {t_max}")));
    }
    check_covers(a, t_max)?;
    let mut acc = 0.0;
    for i in 1..a.grid.len() {
        let (t0, t1) = (a.grid[i - 1], a.grid[i]);
        if t0 >= t_max {
            break;
        }
        let d0 = a.values[i - 1] - b.values[i - 1];
        let mut d1 = a.values[i] - b.values[i];
        let mut h = t1 - t0;
        if t1 > t_max {
            d1 = d0 + (d1 - d0) * (t_max - t0) / h;
            h = t_max - t0;
        }
        acc += 0.5 * h * (d0 * d0 + d1 * d1);
    }
    Ok((acc / t_max).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub sample_sizes: Vec<u64>,
    /// Every error, `errors[i][r]` for sample size `i` and repeat `r`.
    pub errors: Vec<Vec<f64>>,
    pub mean_errors: Vec<f64>,
    /// Standard error of each mean; absent with a single repeat.
    pub stderr: Option<Vec<f64>>,
    /// Least-squares slope of `log E` against `log N`.
    pub slope: f64,
    /// Absent with fewer than three sample sizes.
    pub slope_stderr: Option<f64>,
}

/// Least-squares fit `y = a + b x`; returns `(b, stderr of b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, Option<f64>) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    if x.len() < 3 {
        return (slope, None);
    }
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    (slope, Some((rss / (n - 2.0) / sxx).sqrt()))
}

/// For each sample size, compare `repeats` independent runs against the
/// oracle. `run(n, repeat)` produces one estimate on the oracle grid.
pub fn convergence_study<F>(
    sample_sizes: &[u64],
    repeats: usize,
    oracle: &ObservableSeries,
    t_max: f64,
    mut run: F,
) -> Result<ConvergenceReport>
where
    F: FnMut(u64, usize) -> Result<ObservableSeries>,
{
    if sample_sizes.len() < 2 || sample_sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Configuration(
            "need at least two strictly increasing sample sizes".into(),
        ));
    }
    if repeats == 0 {
        return Err(Error::Configuration("repeats must be at least 1".into()));
    }
    let mut errors = Vec::with_capacity(sample_sizes.len());
    let mut mean_errors = Vec::with_capacity(sample_sizes.len());
    let mut stderrs = Vec::with_capacity(sample_sizes.len());
    for &n in sample_sizes {
        let mut row = Vec::with_capacity(repeats);
        for r in 0..repeats {
            let est = run(n, r)?;
            row.push(rms_error(&est, oracle, t_max)?);
        }
        let m = row.iter().sum::<f64>() / repeats as f64;
        if repeats > 1 {
            let var = row.iter().map(|e| (e - m) * (e - m)).sum::<f64>() / (repeats - 1) as f64;
            stderrs.push((var / repeats as f64).sqrt());
        }
        mean_errors.push(m);
        errors.push(row);
    }
    if mean_errors.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Range("convergence errors must be positive".into()));
    }
    let lx: Vec<f64> = sample_sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = mean_errors.iter().map(|e| e.ln()).collect();
    let (slope, slope_stderr) = linear_fit(&lx, &ly);
    Ok(ConvergenceReport {
        sample_sizes: sample_sizes.to_vec(),
        errors,
        mean_errors,
        stderr: (repeats > 1).then_some(stderrs),
        slope,
        slope_stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisotropyDelta {
    pub delta_y1: f64,
    /// Quadrature sum of both stderrs; absent for deterministic inputs.
    pub stderr: Option<f64>,
}

/// `ΔY_1 = Y_1(a) - Y_1(b)` for runs that differ only in field direction.
pub fn anisotropy_delta(
    spec_a: &SpinSystemSpec,
    run_a: &Yields,
    spec_b: &SpinSystemSpec,
    run_b: &Yields,
) -> Result<AnisotropyDelta> {
    if !spec_a.differs_only_in_field_direction(spec_b) {
        return Err(Error::Configuration(
            "anisotropy runs must share every parameter except the field direction".into(),
        ));
    }
    if (run_a.t_max - run_b.t_max).abs() > 1e-12 * run_a.t_max.abs().max(1.0) {
        return Err(Error::Configuration(format!(
            "anisotropy runs use different cut-off times ({} vs {})",
            run_a.t_max, run_b.t_max
        )));
    }
    let stderr = match (run_a.y_1_stderr, run_b.y_1_stderr) {
        (None, None) => None,
        (a, b) => {
            let (a, b) = (a.unwrap_or(0.0), b.unwrap_or(0.0));
            Some((a * a + b * b).sqrt())
        }
    };
    Ok(AnisotropyDelta {
        delta_y1: run_a.y_1 - run_b.y_1,
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn series(grid: &[f64], f: impl Fn(f64) -> f64, label: SeriesLabel) -> ObservableSeries {
        ObservableSeries::new(grid.to_vec(), grid.iter().map(|&t| f(t)).collect(), None, label)
            .unwrap()
    }

    fn grid(t_max: f64, dt: f64) -> Vec<f64> {
        crate::mcwf::uniform_grid(t_max, dt)
    }

    #[test]
    fn f_transform_round_trip() {
        let g = grid(5.0, 0.01);
        let p = series(&g, |t| (-0.7 * t).exp() * (1.0 + 0.1 * t.sin()), SeriesLabel::P1);
        let f = f_transform(&p, 0.0).unwrap();
        assert_eq!(f.values, p.values);
        let f = f_transform(&p, 0.7).unwrap();
        assert_eq!(f.label, SeriesLabel::F1);
        let back = f_inverse(&f, 0.7).unwrap();
        for (a, b) in back.values.iter().zip(&p.values) {
            assert!((a - b).abs() < 1e-12);
        }
        let pure = series(&g, |t| (-1.3 * t).exp(), SeriesLabel::P1);
        for v in f_transform(&pure, 1.3).unwrap().values {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!(f_transform(&f, 1.0).is_err());
    }

    #[test]
    fn forward_decay_yield() {
        let k = 0.8;
        let g = grid(10.0, 1e-3);
        let p1 = series(&g, |t| (-k * t).exp(), SeriesLabel::P1);
        let ps = series(&g, |t| 0.25 * (-k * t).exp(), SeriesLabel::PS);
        let y = yields(&p1, &ps, 0.0, k, 10.0).unwrap();
        assert_eq!(y.y_s, 0.0);
        assert!((y.y_1 - (1.0 - (-k * 10.0f64).exp())).abs() < 1e-6);
        assert!(yields(&p1, &ps, 0.0, k, 10.5).is_err());
        // Cut inside an interval.
        let y = yields(&p1, &ps, 0.0, k, 4.0005).unwrap();
        assert!((y.y_1 - (1.0 - (-k * 4.0005f64).exp())).abs() < 1e-6);
    }

    #[test]
    fn quadrature_stable_under_refinement() {
        let f = |t: f64| (-0.5 * t).exp() * (0.5 + 0.3 * (3.0 * t).cos());
        let coarse = grid(10.0, 1e-3);
        let fine = grid(10.0, 5e-4);
        let y = |g: &[f64]| {
            let p = series(g, f, SeriesLabel::P1);
            let s = series(g, f, SeriesLabel::PS);
            yields(&p, &s, 1.0, 1.0, 10.0).unwrap()
        };
        assert!((y(&coarse).y_1 - y(&fine).y_1).abs() < 1e-6);
    }

    #[test]
    fn rms_basic_cases() {
        let g = grid(3.0, 0.01);
        let a = series(&g, |t| t.sin(), SeriesLabel::PS);
        assert_eq!(rms_error(&a, &a, 3.0).unwrap(), 0.0);
        let b = series(&g, |t| t.sin() + 0.003, SeriesLabel::PS);
        assert!((rms_error(&a, &b, 3.0).unwrap() - 0.003).abs() < 1e-12);
        assert!((rms_error(&b, &a, 3.0).unwrap() - 0.003).abs() < 1e-12);
        let short = series(&grid(2.0, 0.01), |t| t, SeriesLabel::PS);
        assert!(matches!(rms_error(&a, &short, 2.0), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn slope_of_exact_power_law() {
        let sizes = [100u64, 1000, 10000];
        let g = grid(1.0, 0.1);
        let oracle = series(&g, |_| 0.0, SeriesLabel::P1);
        let rep = convergence_study(&sizes, 1, &oracle, 1.0, |n, _| {
            let c = 1.0 / (n as f64).sqrt();
            Ok(series(&g, |_| c, SeriesLabel::P1))
        })
        .unwrap();
        assert!((rep.slope + 0.5).abs() < 1e-12);
        assert!(rep.stderr.is_none());
        assert!(rep.slope_stderr.unwrap() < 1e-10);
        assert_eq!(rep.mean_errors.len(), 3);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let x = vec![0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.25 * v).collect();
        let (b, se) = linear_fit(&x, &y);
        assert!((b + 0.25).abs() < 1e-14);
        assert!(se.unwrap() < 1e-12);
    }
}
