//! Run orchestration behind the command-line subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use radpair_core::analysis::{
    convergence_study, ensemble_yields, f_transform, rms_error, yields, ConvergenceReport,
    ObservableSeries, Yields,
};
use radpair_core::mcwf::{EnsembleResult, EnsembleSettings};
use radpair_core::me::{initial_density, integrate_master_equation_with, MeOptions, MeSeries};
use radpair_core::model::{assemble_model, ModelOperators, SpinSystemSpec};
use serde::Serialize;
use serde_json::json;

use crate::config::{ConvergeObservable, Method, OutputFormat, SimulationConfig};
use crate::diagnostics::{cpu_time, min_eigenvalue};
use crate::error::{Error, Result};
use crate::manifest::{Manifest, Timings};
use crate::output::{self, write_atomic};
use crate::parallel;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "RADPAIR_OUT";
pub const DEFAULT_OUT: &str = "radpair-out";

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// Apply to `cfg`; the result is what gets echoed into the manifest.
    pub fn apply(&self, cfg: &mut SimulationConfig) {
        if let Some(s) = self.seed {
            cfg.run.master_seed = s;
        }
        if let Some(n) = self.samples {
            cfg.run.n_samples = n;
        }
        if let Some(w) = self.workers {
            cfg.run.worker_count = w;
        }
        if let Some(o) = &self.out {
            cfg.output.directory = Some(o.clone());
        }
    }
}

pub fn output_dir(cfg: &SimulationConfig) -> PathBuf {
    cfg.output
        .directory
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

struct Clock {
    wall: Instant,
    cpu: f64,
}

impl Clock {
    fn start() -> Self {
        Self {
            wall: Instant::now(),
            cpu: cpu_time(),
        }
    }

    fn stop(&self) -> Timings {
        Timings {
            wall_s: self.wall.elapsed().as_secs_f64(),
            cpu_s: cpu_time() - self.cpu,
        }
    }
}

/// Result of an ensemble run, with `k_f` restored if it was factored out.
#[derive(Debug, Clone)]
pub struct McwfOutcome {
    pub result: EnsembleResult,
    pub yields: Yields,
    pub k_f: f64,
    pub timings: Timings,
}

pub fn run_mcwf(cfg: &SimulationConfig) -> Result<McwfOutcome> {
    let spec = cfg.system()?;
    let (k_b, k_f) = (spec.kinetics.singlet_rate(), spec.kinetics.forward_rate());
    let (model_spec, factored) = if cfg.run.factor_kf {
        spec.without_forward_rate()
    } else {
        (spec.clone(), 0.0)
    };
    let model = assemble_model(&model_spec)?;
    let settings = EnsembleSettings {
        n_samples: cfg.run.n_samples,
        strategy: cfg.run.strategy.into(),
        grid: cfg.grid(),
        t_max: cfg.run.t_max,
        master_seed: cfg.run.master_seed,
        tol: cfg.run.mcwf_tolerances(),
        integral_discount: factored,
    };
    let clock = Clock::start();
    let mut result = parallel::run_ensemble(&model, &settings, cfg.run.workers())?;
    let timings = clock.stop();
    let yields = ensemble_yields(&result, k_b, k_f);
    if factored > 0.0 {
        for (i, t) in result.grid.iter().enumerate() {
            let d = (-factored * t).exp();
            result.p1[i] *= d;
            result.p1_stderr[i] *= d;
            result.ps[i] *= d;
            result.ps_stderr[i] *= d;
        }
    }
    Ok(McwfOutcome {
        result,
        yields,
        k_f,
        timings,
    })
}

fn check_dim_cap(model: &ModelOperators, cap: usize) -> Result<()> {
    let d = model.dim();
    if d > cap {
        let nnz: usize = std::iter::once(model.generator.nnz())
            .chain(model.jumps.iter().map(|j| 2 * j.op.nnz()))
            .sum();
        return Err(Error::DimensionCap {
            dim: d,
            cap,
            estimated_bytes: (d as u128) * (d as u128) * 16,
            estimated_flops: 16.0 * d as f64 * nnz as f64,
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct MeOutcome {
    pub series: MeSeries,
    /// `(t, λ_min)` spot checks.
    pub min_eigenvalues: Vec<(f64, f64)>,
    pub yields: Yields,
    pub timings: Timings,
}

/// Spot checks of the spectrum are skipped above this dimension.
const EIGEN_CHECK_DIM: usize = 512;

pub fn run_me_with_tol(cfg: &SimulationConfig, tol: f64) -> Result<MeOutcome> {
    let spec = cfg.system()?;
    let model = assemble_model(&spec)?;
    check_dim_cap(&model, cfg.run.me_dim_cap)?;
    let grid = cfg.grid();
    let rho0 = initial_density(&model.layout)?;
    let d = model.dim();
    let checks: Vec<usize> = if d <= EIGEN_CHECK_DIM {
        (1..=4).map(|k| k * (grid.len() - 1) / 4).collect()
    } else {
        Vec::new()
    };
    let mut min_eigenvalues = Vec::new();
    let opts = MeOptions {
        tol: radpair_core::ode::Tolerances::new(tol, tol),
        ..MeOptions::default()
    };
    let clock = Clock::start();
    let series = integrate_master_equation_with(&model, &rho0, &grid, opts, |i, rho| {
        if checks.contains(&i) {
            min_eigenvalues.push((grid[i], min_eigenvalue(rho, d)));
        }
    })?;
    let timings = clock.stop();
    let y = yields(
        &ObservableSeries::p1_from_me(&series),
        &ObservableSeries::ps_from_me(&series),
        spec.kinetics.singlet_rate(),
        spec.kinetics.forward_rate(),
        cfg.run.t_max,
    )?;
    Ok(MeOutcome {
        series,
        min_eigenvalues,
        yields: y,
        timings,
    })
}

pub fn run_me(cfg: &SimulationConfig) -> Result<MeOutcome> {
    run_me_with_tol(cfg, cfg.run.me_tol)
}

/// RMS deviations of the f-transformed series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviation {
    pub e1: f64,
    pub es: f64,
}

pub struct Comparison {
    pub f1: (ObservableSeries, ObservableSeries),
    pub fs: (ObservableSeries, ObservableSeries),
    pub deviation: Deviation,
}

pub fn compare_series(mcwf: &McwfOutcome, me: &MeSeries, t_max: f64) -> Result<Comparison> {
    let k_f = mcwf.k_f;
    let f1m = f_transform(&ObservableSeries::p1_from_ensemble(&mcwf.result), k_f)?;
    let fsm = f_transform(&ObservableSeries::ps_from_ensemble(&mcwf.result), k_f)?;
    let f1e = f_transform(&ObservableSeries::p1_from_me(me), k_f)?;
    let fse = f_transform(&ObservableSeries::ps_from_me(me), k_f)?;
    let deviation = Deviation {
        e1: rms_error(&f1m, &f1e, t_max)?,
        es: rms_error(&fsm, &fse, t_max)?,
    };
    Ok(Comparison {
        f1: (f1m, f1e),
        fs: (fsm, fse),
        deviation,
    })
}

fn yields_json(y: &Yields) -> serde_json::Value {
    json!({
        "Y_S": y.y_s,
        "Y_S_stderr": y.y_s_stderr,
        "Y_1": y.y_1,
        "Y_1_stderr": y.y_1_stderr,
        "t_max_us": y.t_max,
    })
}

/// Files written by one command.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub directory: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub summary: serde_json::Value,
}

struct Writer<'a> {
    dir: PathBuf,
    cfg: &'a SimulationConfig,
    files: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(cfg: &'a SimulationConfig) -> Self {
        Self {
            dir: output_dir(cfg),
            cfg,
            files: Vec::new(),
        }
    }

    fn put(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, contents.as_bytes())?;
        self.files.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, contents: &str, title: &str, cols: &[(usize, &str)]) -> Result<()> {
        self.put(name, contents)?;
        if self.cfg.output.formats.contains(&OutputFormat::Gnuplot) {
            let script = output::gnuplot_script(name, title, cols);
            self.put(&format!("{}.gp", name.trim_end_matches(".csv")), &script)?;
        }
        Ok(())
    }

    fn finish(
        self,
        command: &str,
        timings: Timings,
        summary: serde_json::Value,
        warnings: Vec<String>,
    ) -> Result<Artifacts> {
        let spec = self.cfg.system()?;
        let layout = spec.layout()?;
        let manifest = Manifest::new(
            command,
            self.cfg.clone(),
            layout.total_dim(),
            layout.n_nuclei(),
            timings,
            self.files
                .iter()
                .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
                .collect(),
            summary.clone(),
            warnings,
        );
        let path = self.dir.join("manifest.json");
        manifest.write(&path)?;
        Ok(Artifacts {
            directory: self.dir,
            files: self.files,
            manifest: path,
            summary,
        })
    }
}

const MCWF_COLS: &[(usize, &str)] = &[(2, "p1"), (4, "pS")];
const ME_COLS: &[(usize, &str)] = &[(2, "p1"), (3, "pS")];

/// `run`: the method named in the config.
pub fn run_command(cfg: &SimulationConfig) -> Result<Artifacts> {
    match cfg.run.method {
        Method::Mcwf => {
            let mut w = Writer::new(cfg);
            let out = run_mcwf(cfg)?;
            w.csv("mcwf.csv", &output::mcwf_csv(&out.result), "MCWF ensemble", MCWF_COLS)?;
            let summary = json!({
                "n_samples": out.result.n_samples,
                "master_seed": out.result.master_seed,
                "yields": yields_json(&out.yields),
                "reaction_counts": out.result.reaction_counts,
                "lindblad_jumps": out.result.lindblad_jumps,
                "integrator_steps": out.result.steps,
            });
            w.finish("run", out.timings, summary, Vec::new())
        }
        Method::Me => {
            let mut w = Writer::new(cfg);
            let out = run_me(cfg)?;
            w.csv("me.csv", &output::me_csv(&out.series), "master equation", ME_COLS)?;
            let summary = me_summary(&out);
            w.finish("run", out.timings, summary, out.series.warnings.clone())
        }
        Method::Compare => compare_command(cfg),
    }
}

fn me_summary(out: &MeOutcome) -> serde_json::Value {
    json!({
        "yields": yields_json(&out.yields),
        "tolerance": out.series.tol.rel,
        "integrator_steps": out.series.stats.accepted,
        "min_eigenvalues": out.min_eigenvalues,
    })
}

/// `compare`: both methods on the same grid plus their deviation.
pub fn compare_command(cfg: &SimulationConfig) -> Result<Artifacts> {
    let mut w = Writer::new(cfg);
    let me = run_me(cfg)?;
    let mc = run_mcwf(cfg)?;
    let cmp = compare_series(&mc, &me.series, cfg.run.t_max)?;
    w.csv("mcwf.csv", &output::mcwf_csv(&mc.result), "MCWF ensemble", MCWF_COLS)?;
    w.csv("me.csv", &output::me_csv(&me.series), "master equation", ME_COLS)?;
    w.csv(
        "deviation.csv",
        &output::deviation_csv(
            &me.series.grid,
            (&cmp.f1.0.values, &cmp.f1.1.values),
            (&cmp.fs.0.values, &cmp.fs.1.values),
        ),
        "MCWF - ME",
        &[(4, "df1"), (7, "dfS")],
    )?;
    let summary = json!({
        "E1": cmp.deviation.e1,
        "ES": cmp.deviation.es,
        "mcwf": {
            "n_samples": mc.result.n_samples,
            "master_seed": mc.result.master_seed,
            "yields": yields_json(&mc.yields),
            "timings": mc.timings,
        },
        "me": me_summary(&me),
    });
    let timings = Timings {
        wall_s: mc.timings.wall_s + me.timings.wall_s,
        cpu_s: mc.timings.cpu_s + me.timings.cpu_s,
    };
    w.finish("compare", timings, summary, me.series.warnings.clone())
}

/// Master seed of repeat `r` at sample-size index `i`.
pub fn study_seed(master: u64, i: usize, r: usize) -> u64 {
    // splitmix64
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(1 + (i as u64) * 1_000_003 + r as u64));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_convergence(cfg: &SimulationConfig) -> Result<(ConvergenceReport, Timings)> {
    let clock = Clock::start();
    let oracle = run_me_with_tol(cfg, cfg.converge.oracle_tol)?;
    let spec = cfg.system()?;
    let k_f = spec.kinetics.forward_rate();
    let pick = |r: &EnsembleResult| match cfg.converge.observable {
        ConvergeObservable::P1 => ObservableSeries::p1_from_ensemble(r),
        ConvergeObservable::Ps => ObservableSeries::ps_from_ensemble(r),
    };
    let oracle_series = match cfg.converge.observable {
        ConvergeObservable::P1 => ObservableSeries::p1_from_me(&oracle.series),
        ConvergeObservable::Ps => ObservableSeries::ps_from_me(&oracle.series),
    };
    let oracle_f = f_transform(&oracle_series, k_f)?;
    let sizes = cfg.converge.sample_sizes.clone();
    let report = convergence_study(&sizes, cfg.converge.repeats, &oracle_f, cfg.run.t_max, |n, r| {
        let i = sizes.iter().position(|&s| s == n).unwrap();
        let mut c = cfg.clone();
        c.run.n_samples = n;
        c.run.master_seed = study_seed(cfg.run.master_seed, i, r);
        let out = run_mcwf(&c).map_err(|e| match e {
            Error::Core(c) => c,
            other => radpair_core::Error::Configuration(other.to_string()),
        })?;
        f_transform(&pick(&out.result), k_f)
    })?;
    Ok((report, clock.stop()))
}

pub fn converge_command(cfg: &SimulationConfig) -> Result<Artifacts> {
    let (report, timings) = run_convergence(cfg)?;
    let mut w = Writer::new(cfg);
    w.put("convergence.csv", &output::convergence_csv(&report))?;
    let summary = json!({
        "sample_sizes": report.sample_sizes,
        "mean_errors": report.mean_errors,
        "stderr": report.stderr,
        "slope": report.slope,
        "slope_stderr": report.slope_stderr,
    });
    w.finish("converge", timings, summary, Vec::new())
}

pub use crate::bench::{bench_command, run_bench, BenchReport, BenchRow};

/// Load a TOML config (or a JSON manifest) and apply overrides.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<SimulationConfig> {
    let mut cfg = SimulationConfig::load(path)?;
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

/// System spec with extra isotropic protons appended.
pub fn with_added_protons(spec: &SpinSystemSpec, couplings_mt: &[f64], n: usize) -> SpinSystemSpec {
    let mut s = spec.clone();
    for k in 0..n {
        s.nuclei.push(radpair_core::model::NucleusSpec {
            label: format!("H{}", k + 1),
            multiplicity: 2,
            coupled_electron: k % 2,
            hyperfine: radpair_core::model::HyperfineTensor::isotropic(
                couplings_mt[k % couplings_mt.len()],
            ),
        });
    }
    s
}
