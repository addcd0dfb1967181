//! Runtime scaling of both methods with the number of nuclei.

use std::fmt::Write as _;

use radpair_core::analysis::linear_fit;
use radpair_core::mcwf::{run_ensemble, uniform_grid, EnsembleSettings};
use radpair_core::me::{initial_density, integrate_master_equation_with, MeOptions};
use radpair_core::model::assemble_model;
use radpair_core::ode::Tolerances;
use serde::Serialize;
use serde_json::json;

use crate::commands::{output_dir, with_added_protons, Artifacts};
use crate::config::SimulationConfig;
use crate::diagnostics::thread_cpu_time;
use crate::error::Result;
use crate::manifest::{Manifest, Timings};
use crate::output::{num, write_atomic};

/// Each measurement is repeated until it has used at least this much CPU time.
pub const MIN_MEASURE_S: f64 = 0.25;

pub const BENCH_HEADER: &str =
    "added_protons,dim,me_cpu_per_grid_step_s,mcwf_cpu_per_trajectory_step_s,me_rk_steps,mcwf_rk_steps_per_trajectory";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub added_protons: usize,
    pub dim: usize,
    /// `None` when the dimension exceeds the master-equation cap.
    pub me_cpu_per_grid_step: Option<f64>,
    pub mcwf_cpu_per_trajectory_step: f64,
    pub me_rk_steps: Option<u64>,
    pub mcwf_rk_steps_per_trajectory: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// `exp` of the fitted slope of `ln(time)` against the number of added protons.
    pub me_growth: Option<f64>,
    pub mcwf_growth: f64,
}

fn measure<F: FnMut() -> Result<()>>(mut f: F) -> Result<f64> {
    let start = thread_cpu_time();
    let mut runs = 0u32;
    loop {
        f()?;
        runs += 1;
        let used = thread_cpu_time() - start;
        if used >= MIN_MEASURE_S {
            return Ok(used / runs as f64);
        }
    }
}

fn growth(points: &[(usize, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let x: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    Some(linear_fit(&x, &y).0.exp())
}

/// Single-threaded timings for `0..=max_added_protons` appended protons.
pub fn run_bench(cfg: &SimulationConfig) -> Result<BenchReport> {
    let base = cfg.system()?;
    let b = &cfg.bench;
    let grid = uniform_grid(b.t_max, cfg.run.grid_dt);
    let steps = (grid.len() - 1) as f64;
    let mut rows = Vec::new();
    for n in 0..=b.max_added_protons {
        let spec = with_added_protons(&base, &b.added_coupling_mt, n);
        let model = assemble_model(&spec)?;
        let dim = model.dim();

        let (me_cpu, me_steps) = if dim <= cfg.run.me_dim_cap {
            let rho0 = initial_density(&model.layout)?;
            let opts = MeOptions {
                tol: cfg.run.me_tolerances(),
                positivity_checks: 0,
                ..MeOptions::default()
            };
            let mut rk = 0;
            let cpu = measure(|| {
                let s = integrate_master_equation_with(&model, &rho0, &grid, opts, |_, _| {})?;
                rk = s.stats.accepted;
                Ok(())
            })?;
            (Some(cpu / steps), Some(rk))
        } else {
            (None, None)
        };

        let settings = EnsembleSettings {
            n_samples: b.trajectories,
            strategy: cfg.run.strategy.into(),
            grid: grid.clone(),
            t_max: b.t_max,
            master_seed: cfg.run.master_seed,
            tol: Tolerances::new(cfg.run.mcwf_tol, cfg.run.mcwf_tol),
            integral_discount: 0.0,
        };
        let mut rk = 0;
        let cpu = measure(|| {
            let r = run_ensemble(&model, &settings)?;
            rk = r.steps;
            Ok(())
        })?;
        rows.push(BenchRow {
            added_protons: n,
            dim,
            me_cpu_per_grid_step: me_cpu,
            mcwf_cpu_per_trajectory_step: cpu / (b.trajectories as f64 * steps),
            me_rk_steps: me_steps,
            mcwf_rk_steps_per_trajectory: rk as f64 / b.trajectories as f64,
        });
    }
    let me_points: Vec<(usize, f64)> = rows
        .iter()
        .filter_map(|r| r.me_cpu_per_grid_step.map(|t| (r.added_protons, t)))
        .collect();
    let mc_points: Vec<(usize, f64)> = rows
        .iter()
        .map(|r| (r.added_protons, r.mcwf_cpu_per_trajectory_step))
        .collect();
    Ok(BenchReport {
        me_growth: growth(&me_points),
        mcwf_growth: growth(&mc_points).unwrap_or(f64::NAN),
        rows,
    })
}

pub fn bench_csv(rep: &BenchReport) -> String {
    let mut out = String::from(BENCH_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), num);
    for r in &rep.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.added_protons,
            r.dim,
            opt(r.me_cpu_per_grid_step),
            num(r.mcwf_cpu_per_trajectory_step),
            r.me_rk_steps.map_or_else(|| "nan".to_string(), |s| s.to_string()),
            num(r.mcwf_rk_steps_per_trajectory),
        );
    }
    out
}

pub fn bench_command(cfg: &SimulationConfig) -> Result<Artifacts> {
    let wall = std::time::Instant::now();
    let cpu0 = crate::diagnostics::cpu_time();
    let rep = run_bench(cfg)?;
    let timings = Timings {
        wall_s: wall.elapsed().as_secs_f64(),
        cpu_s: crate::diagnostics::cpu_time() - cpu0,
    };
    let dir = output_dir(cfg);
    let csv = dir.join("bench.csv");
    write_atomic(&csv, bench_csv(&rep).as_bytes())?;
    let summary = json!({
        "me_growth_per_proton": rep.me_growth,
        "mcwf_growth_per_proton": rep.mcwf_growth,
        "rows": rep.rows,
    });
    let layout = cfg.system()?.layout()?;
    let manifest = Manifest::new(
        "bench",
        cfg.clone(),
        layout.total_dim(),
        layout.n_nuclei(),
        timings,
        vec!["bench.csv".into()],
        summary.clone(),
        Vec::new(),
    );
    let path = dir.join("manifest.json");
    manifest.write(&path)?;
    Ok(Artifacts {
        directory: dir,
        files: vec![csv],
        manifest: path,
        summary,
    })
}
