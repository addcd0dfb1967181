//! CSV series, gnuplot scripts and atomic file writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use radpair_core::analysis::ConvergenceReport;
use radpair_core::mcwf::EnsembleResult;
use radpair_core::me::MeSeries;

use crate::error::{Error, Result};

pub const MCWF_HEADER: &str = "t_us,p1,p1_stderr,pS,pS_stderr";
pub const ME_HEADER: &str = "t_us,p1,pS";
pub const DEVIATION_HEADER: &str = "t_us,f1_mcwf,f1_me,df1,fS_mcwf,fS_me,dfS";
pub const CONVERGENCE_HEADER: &str = "n_samples,repeat,error";

/// 17 significant digits, enough to round-trip an `f64`.
#[inline]
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn table<'a>(header: &str, rows: impl Iterator<Item = Vec<f64>> + 'a) -> String {
    let mut out = String::with_capacity(64 * 1024);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&num(*v));
        }
        out.push('\n');
    }
    out
}

pub fn mcwf_csv(r: &EnsembleResult) -> String {
    table(
        MCWF_HEADER,
        (0..r.grid.len()).map(|i| vec![r.grid[i], r.p1[i], r.p1_stderr[i], r.ps[i], r.ps_stderr[i]]),
    )
}

pub fn me_csv(s: &MeSeries) -> String {
    table(ME_HEADER, (0..s.grid.len()).map(|i| vec![s.grid[i], s.p1[i], s.ps[i]]))
}

/// Deviation table of f-transformed series on a shared grid.
pub fn deviation_csv(grid: &[f64], f1: (&[f64], &[f64]), fs: (&[f64], &[f64])) -> String {
    table(
        DEVIATION_HEADER,
        (0..grid.len()).map(|i| {
            vec![
                grid[i],
                f1.0[i],
                f1.1[i],
                f1.0[i] - f1.1[i],
                fs.0[i],
                fs.1[i],
                fs.0[i] - fs.1[i],
            ]
        }),
    )
}

pub fn convergence_csv(rep: &ConvergenceReport) -> String {
    let mut out = String::from(CONVERGENCE_HEADER);
    out.push('\n');
    for (n, errs) in rep.sample_sizes.iter().zip(&rep.errors) {
        for (r, e) in errs.iter().enumerate() {
            let _ = writeln!(out, "{n},{r},{}", num(*e));
        }
    }
    out
}

/// Plain gnuplot script plotting columns of `csv` against time.
pub fn gnuplot_script(csv: &str, title: &str, columns: &[(usize, &str)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set title '{title}'");
    let _ = writeln!(s, "set xlabel 't / us'");
    let plots: Vec<String> = columns
        .iter()
        .map(|(c, name)| format!("'{csv}' using 1:{c} with lines title '{name}'"))
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = tmp_path(path);
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp{}", std::process::id()));
    path.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.0, 1.0 / 3.0, 2.5e-17, -7.123456789012345e8] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert!(num(1.0 / 3.0).len() >= 17);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = std::env::temp_dir().join(format!("radpair-out-{}", std::process::id()));
        let p = dir.join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        std::fs::remove_dir_all(dir).unwrap();
    }
}
