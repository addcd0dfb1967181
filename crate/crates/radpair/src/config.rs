//! TOML run configuration.
//!
//! ```toml
//! [electrons]
//! g_factors = [2.00232, 2.00232]
//!
//! [[nuclei]]
//! label = "H1"
//! spin = 0.5
//! electron = 0
//! hyperfine = { isotropic = 1.0 }          # mT
//!
//! [field]
//! magnitude_mt = 0.05
//! direction = [0.0, 0.0, 1.0]              # or theta_deg / phi_deg
//!
//! [kinetics]
//! k_b = 2.0                                # or k_s / k_t
//! k_f = 0.0
//!
//! [dissipation]
//! gamma_st = 0.0
//! gamma_rf = 0.2                           # or [g1, g2]
//!
//! [run]
//! method = "compare"                       # mcwf | me | compare
//! n_samples = 100000
//! master_seed = 1
//! t_max = 10.0
//! ```

use std::path::{Path, PathBuf};

use radpair_core::mcwf::InitialStateStrategy;
use radpair_core::model::{
    DissipationSpec, FieldSpec, HyperfineTensor, KineticsSpec, NucleusSpec, SpinSystemSpec,
    DEFAULT_G,
};
use radpair_core::ode::Tolerances;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default)]
    pub electrons: ElectronsConfig,
    #[serde(default)]
    pub nuclei: Vec<NucleusConfig>,
    #[serde(default)]
    pub field: FieldConfig,
    #[serde(default)]
    pub kinetics: KineticsConfig,
    #[serde(default)]
    pub dissipation: DissipationConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub converge: ConvergeConfig,
    #[serde(default)]
    pub bench: BenchConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectronsConfig {
    pub g_factors: [f64; 2],
}

impl Default for ElectronsConfig {
    fn default() -> Self {
        Self {
            g_factors: [DEFAULT_G; 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NucleusConfig {
    #[serde(default)]
    pub label: String,
    /// Nuclear spin quantum number, e.g. 0.5 or 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin: Option<f64>,
    /// `2I + 1`; alternative to `spin`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplicity: Option<usize>,
    /// Index of the electron the nucleus couples to.
    #[serde(default)]
    pub electron: usize,
    pub hyperfine: HyperfineConfig,
}

/// Exactly one of the three forms, in mT.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperfineConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isotropic: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axial: Option<AxialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<[[f64; 3]; 3]>,
}

/// `A = iso·1 + axial·(3 n nᵀ - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxialConfig {
    pub iso: f64,
    pub axial: f64,
    pub axis: [f64; 3],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    #[serde(default)]
    pub magnitude_mt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_deg: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_t: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerRadical {
    Both(f64),
    Each([f64; 2]),
}

impl Default for PerRadical {
    fn default() -> Self {
        PerRadical::Both(0.0)
    }
}

impl PerRadical {
    pub fn values(self) -> [f64; 2] {
        match self {
            PerRadical::Both(v) => [v, v],
            PerRadical::Each(v) => v,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationConfig {
    #[serde(default)]
    pub gamma_st: f64,
    #[serde(default)]
    pub gamma_rf: PerRadical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Mcwf,
    Me,
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyConfig {
    #[default]
    SpinCoherent,
    ZeemanRandom,
    Exhaustive,
}

impl From<StrategyConfig> for InitialStateStrategy {
    fn from(s: StrategyConfig) -> Self {
        match s {
            StrategyConfig::SpinCoherent => InitialStateStrategy::SpinCoherent,
            StrategyConfig::ZeemanRandom => InitialStateStrategy::ZeemanRandom,
            StrategyConfig::Exhaustive => InitialStateStrategy::Exhaustive,
        }
    }
}

fn default_n_samples() -> u64 {
    10_000
}
fn default_t_max() -> f64 {
    10.0
}
fn default_grid_dt() -> f64 {
    1e-3
}
fn default_me_dim_cap() -> usize {
    4096
}
fn default_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_n_samples")]
    pub n_samples: u64,
    #[serde(default)]
    pub master_seed: u64,
    /// μs.
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    /// Output grid spacing, μs.
    #[serde(default = "default_grid_dt")]
    pub grid_dt: f64,
    #[serde(default)]
    pub strategy: StrategyConfig,
    /// 0 picks the available parallelism.
    #[serde(default)]
    pub worker_count: usize,
    /// Propagate trajectories without the spin-independent rate `k_f` and
    /// restore it analytically.
    #[serde(default)]
    pub factor_kf: bool,
    #[serde(default = "default_me_dim_cap")]
    pub me_dim_cap: usize,
    #[serde(default = "default_tol")]
    pub mcwf_tol: f64,
    #[serde(default = "default_tol")]
    pub me_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::default(),
            n_samples: default_n_samples(),
            master_seed: 0,
            t_max: default_t_max(),
            grid_dt: default_grid_dt(),
            strategy: StrategyConfig::default(),
            worker_count: 0,
            factor_kf: false,
            me_dim_cap: default_me_dim_cap(),
            mcwf_tol: default_tol(),
            me_tol: default_tol(),
        }
    }
}

impl RunConfig {
    pub fn mcwf_tolerances(&self) -> Tolerances {
        Tolerances::new(self.mcwf_tol, self.mcwf_tol)
    }

    pub fn me_tolerances(&self) -> Tolerances {
        Tolerances::new(self.me_tol, self.me_tol)
    }

    pub fn workers(&self) -> usize {
        if self.worker_count > 0 {
            self.worker_count
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Gnuplot,
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: None,
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvergeObservable {
    #[default]
    P1,
    #[serde(rename = "pS")]
    Ps,
}

fn default_sample_sizes() -> Vec<u64> {
    vec![100, 1_000, 10_000, 100_000]
}
fn default_repeats() -> usize {
    8
}
fn default_oracle_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    #[serde(default = "default_sample_sizes")]
    pub sample_sizes: Vec<u64>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub observable: ConvergeObservable,
    #[serde(default = "default_oracle_tol")]
    pub oracle_tol: f64,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        Self {
            sample_sizes: default_sample_sizes(),
            repeats: default_repeats(),
            observable: ConvergeObservable::default(),
            oracle_tol: default_oracle_tol(),
        }
    }
}

fn default_max_added() -> usize {
    4
}
fn default_added_coupling() -> Vec<f64> {
    vec![0.45, -0.38, 0.27, 0.19, -0.12, 0.08]
}
fn default_bench_trajectories() -> u64 {
    200
}
fn default_bench_t_max() -> f64 {
    1.0
}

/// Scaling benchmark: the configured nuclei form the core system and
/// `0..=max_added_protons` spin-1/2 nuclei are appended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "default_max_added")]
    pub max_added_protons: usize,
    /// Isotropic couplings of the added protons (mT), cycled if too short.
    #[serde(default = "default_added_coupling")]
    pub added_coupling_mt: Vec<f64>,
    #[serde(default = "default_bench_trajectories")]
    pub trajectories: u64,
    /// Propagation time per measurement, μs.
    #[serde(default = "default_bench_t_max")]
    pub t_max: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            max_added_protons: default_max_added(),
            added_coupling_mt: default_added_coupling(),
            trajectories: default_bench_trajectories(),
            t_max: default_bench_t_max(),
        }
    }
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Validation {
        field: field.into(),
        reason: reason.into(),
    }
}

fn non_negative(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be finite and non-negative, got {v}")))
    }
}

impl NucleusConfig {
    fn multiplicity(&self, i: usize) -> Result<usize> {
        match (self.spin, self.multiplicity) {
            (Some(_), Some(_)) => Err(invalid(
                format!("nuclei[{i}]"),
                "give either `spin` or `multiplicity`, not both",
            )),
            (None, Some(m)) if m >= 1 => Ok(m),
            (None, Some(_)) => Err(invalid(format!("nuclei[{i}].multiplicity"), "must be at least 1")),
            (Some(s), None) => {
                let two_s = 2.0 * s;
                if s >= 0.0 && (two_s - two_s.round()).abs() < 1e-9 {
                    Ok(two_s.round() as usize + 1)
                } else {
                    Err(invalid(
                        format!("nuclei[{i}].spin"),
                        format!("must be a non-negative multiple of 1/2, got {s}"),
                    ))
                }
            }
            (None, None) => Ok(2),
        }
    }
}

impl HyperfineConfig {
    pub fn isotropic(a_mt: f64) -> Self {
        Self {
            isotropic: Some(a_mt),
            ..Self::default()
        }
    }

    fn tensor(&self, path: &str) -> Result<HyperfineTensor> {
        let given = [self.isotropic.is_some(), self.axial.is_some(), self.tensor.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        if given != 1 {
            return Err(invalid(
                path,
                "give exactly one of `isotropic`, `axial` or `tensor`",
            ));
        }
        let core = |e: radpair_core::Error| match e {
            radpair_core::Error::Spec { reason, .. } => invalid(path, reason),
            other => Error::Core(other),
        };
        if let Some(a) = self.isotropic {
            Ok(HyperfineTensor::isotropic(a))
        } else if let Some(ax) = &self.axial {
            HyperfineTensor::axial(ax.iso, ax.axial, ax.axis).map_err(core)
        } else {
            HyperfineTensor::from_matrix(self.tensor.unwrap()).map_err(core)
        }
    }
}

impl FieldConfig {
    fn spec(&self) -> Result<FieldSpec> {
        let angles = self.theta_deg.is_some() || self.phi_deg.is_some();
        if angles && self.direction.is_some() {
            return Err(invalid("field", "give either `direction` or `theta_deg`/`phi_deg`"));
        }
        if angles {
            let theta = self.theta_deg.unwrap_or(0.0).to_radians();
            let phi = self.phi_deg.unwrap_or(0.0).to_radians();
            return Ok(FieldSpec::from_angles(self.magnitude_mt, theta, phi));
        }
        Ok(FieldSpec::new(self.magnitude_mt, self.direction.unwrap_or([0.0, 0.0, 1.0])))
    }
}

impl KineticsConfig {
    fn spec(&self) -> Result<KineticsSpec> {
        let forward = self.k_b.is_some() || self.k_f.is_some();
        let st = self.k_s.is_some() || self.k_t.is_some();
        match (forward, st) {
            (true, true) => Err(invalid(
                "kinetics",
                "give either `k_b`/`k_f` or `k_s`/`k_t`, not both",
            )),
            (false, true) => Ok(KineticsSpec::SingletTriplet {
                k_s: non_negative("kinetics.k_s", self.k_s.unwrap_or(0.0))?,
                k_t: non_negative("kinetics.k_t", self.k_t.unwrap_or(0.0))?,
            }),
            _ => Ok(KineticsSpec::Forward {
                k_b: non_negative("kinetics.k_b", self.k_b.unwrap_or(0.0))?,
                k_f: non_negative("kinetics.k_f", self.k_f.unwrap_or(0.0))?,
            }),
        }
    }
}

impl SimulationConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML config, or the config echoed in a JSON run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            let cfg = manifest
                .get("config")
                .ok_or_else(|| Error::Parse("manifest has no `config` entry".into()))?;
            let cfg: Self =
                serde_json::from_value(cfg.clone()).map_err(|e| Error::Parse(e.to_string()))?;
            cfg.validate()?;
            Ok(cfg)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn system(&self) -> Result<SpinSystemSpec> {
        let mut nuclei = Vec::with_capacity(self.nuclei.len());
        for (i, n) in self.nuclei.iter().enumerate() {
            if n.electron > 1 {
                return Err(invalid(format!("nuclei[{i}].electron"), "must be 0 or 1"));
            }
            nuclei.push(NucleusSpec {
                label: if n.label.is_empty() {
                    format!("N{i}")
                } else {
                    n.label.clone()
                },
                multiplicity: n.multiplicity(i)?,
                coupled_electron: n.electron,
                hyperfine: n.hyperfine.tensor(&format!("nuclei[{i}].hyperfine"))?,
            });
        }
        let spec = SpinSystemSpec {
            g_factors: self.electrons.g_factors,
            nuclei,
            field: self.field.spec()?,
            kinetics: self.kinetics.spec()?,
            dissipation: DissipationSpec {
                gamma_st: self.dissipation.gamma_st,
                gamma_rf: self.dissipation.gamma_rf.values(),
            },
        };
        spec.validate().map_err(|e| match e {
            radpair_core::Error::Spec { field, reason } => Error::Validation { field, reason },
            other => Error::Core(other),
        })?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.system()?;
        let r = &self.run;
        if !(r.t_max > 0.0 && r.t_max.is_finite()) {
            return Err(invalid("run.t_max", format!("must be positive, got {}", r.t_max)));
        }
        if !(r.grid_dt > 0.0 && r.grid_dt <= r.t_max) {
            return Err(invalid(
                "run.grid_dt",
                format!("must be positive and at most t_max, got {}", r.grid_dt),
            ));
        }
        if r.method != Method::Me && r.n_samples == 0 {
            return Err(invalid("run.n_samples", "must be at least 1"));
        }
        for (name, tol) in [("run.mcwf_tol", r.mcwf_tol), ("run.me_tol", r.me_tol)] {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(invalid(name, format!("must lie in (0, 1), got {tol}")));
            }
        }
        let c = &self.converge;
        if c.sample_sizes.len() < 2 || c.sample_sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("converge.sample_sizes", "need at least two increasing sizes"));
        }
        if c.repeats == 0 {
            return Err(invalid("converge.repeats", "must be at least 1"));
        }
        if self.bench.added_coupling_mt.is_empty() {
            return Err(invalid("bench.added_coupling_mt", "must not be empty"));
        }
        if !(self.bench.t_max > 0.0) {
            return Err(invalid("bench.t_max", "must be positive"));
        }
        Ok(())
    }

    /// Hilbert-space dimension of the configured system.
    pub fn dim(&self) -> Result<usize> {
        Ok(self.system()?.layout()?.total_dim())
    }

    pub fn grid(&self) -> Vec<f64> {
        radpair_core::mcwf::uniform_grid(self.run.t_max, self.run.grid_dt)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let cfg = SimulationConfig::from_toml_str("[kinetics]\nk_f = 1.0\n").unwrap();
        assert_eq!(cfg.dim().unwrap(), 4);
        assert_eq!(cfg.run.grid_dt, 1e-3);
    }

    #[test]
    fn negative_rate_names_the_field() {
        let err = SimulationConfig::from_toml_str("[kinetics]\nk_b = -1.0\n").unwrap_err();
        match err {
            Error::Validation { field, .. } => assert_eq!(field, "kinetics.k_b"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn isotropic_shorthand_expands() {
        let cfg = SimulationConfig::from_toml_str(
            "[[nuclei]]\nspin = 0.5\nhyperfine = { isotropic = 0.5 }\n",
        )
        .unwrap();
        let spec = cfg.system().unwrap();
        let m = spec.nuclei[0].hyperfine.matrix();
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, if i == j { 0.5 } else { 0.0 });
            }
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            SimulationConfig::from_toml_str("[run]\nsamples = 3\n"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn bad_direction_and_asymmetric_tensor() {
        let e = SimulationConfig::from_toml_str("[field]\nmagnitude_mt = 1\ndirection = [1, 1, 0]\n")
            .unwrap_err();
        assert!(matches!(e, Error::Validation { ref field, .. } if field == "field.direction"), "{e:?}");
        let e = SimulationConfig::from_toml_str(
            "[[nuclei]]\nhyperfine = { tensor = [[1, 0.5, 0], [0, 1, 0], [0, 0, 1]] }\n",
        )
        .unwrap_err();
        assert!(
            matches!(e, Error::Validation { ref field, .. } if field == "nuclei[0].hyperfine"),
            "{e:?}"
        );
    }

    #[test]
    fn toml_round_trip() {
        let cfg = SimulationConfig::from_toml_str(
            "[[nuclei]]\nspin = 1\nhyperfine = { axial = { iso = 0.5, axial = 0.2, axis = [0, 0, 1] } }\n[dissipation]\ngamma_rf = [0.1, 0.2]\n",
        )
        .unwrap();
        let again = SimulationConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
    }
}
