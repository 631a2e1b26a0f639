//! Method sweeps and their output files.
//!
//! For every (method, accuracy) cell the runner writes
//!
//! - `history/<cell>.tsv`: one record per outer iteration,
//! - `plot/<cell>.cycle1.dat`: residual against outer iteration in the first cycle,
//! - `plot/<cell>.restarts.dat`: residual and inner iterations against restart,
//!
//! and one `summary.tsv` with a row per cell in table order.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use hsira_core::driver::{solve, MethodSpec, OuterRecord, SolveReport};
use hsira_core::{SolveConfig, SparseMatrix, C64};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{Accuracy, ConfigError, ExperimentConfig, MatrixSource};
use crate::mtx::{load_matrix_market, MtxError};
use crate::scalar::format_complex;
use crate::synthetic::planted_problem;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Matrix(#[from] MtxError),
    #[error("writing results to {path}: {source}")]
    Output { path: String, source: io::Error },
    #[error("thread pool: {0}")]
    Threads(String),
}

impl ExperimentError {
    /// 2 for unusable inputs, 1 for failures while writing results.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Matrix(_) => 2,
            Self::Output { .. } | Self::Threads(_) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub method: MethodSpec,
    pub accuracy: Accuracy,
    pub report: SolveReport,
}

impl CellResult {
    /// File stem, e.g. `RHSIRA_1e-3`.
    pub fn label(&self) -> String {
        format!("{}_{}", self.method, self.accuracy)
    }
}

/// Matrix and target for a config.
pub fn load_problem(cfg: &ExperimentConfig) -> Result<(SparseMatrix, C64), ExperimentError> {
    let sigma = cfg.sigma()?;
    match cfg.matrix_source()? {
        MatrixSource::File(path) => {
            let sigma = sigma.ok_or_else(|| ConfigError::Invalid("sigma is required for a matrix file".into()))?;
            Ok((load_matrix_market(path)?, sigma))
        }
        MatrixSource::Planted { n, complex } => {
            let p = planted_problem(cfg.seed, n, complex);
            Ok((p.matrix, sigma.unwrap_or(p.sigma)))
        }
    }
}

/// Runs every cell; results come back in the order of `cells` regardless of
/// scheduling, and each solve is itself sequential and deterministic.
pub fn run_cells(
    a: &SparseMatrix,
    base: &SolveConfig,
    cells: &[(MethodSpec, Accuracy)],
    threads: Option<usize>,
) -> Result<Vec<CellResult>, ExperimentError> {
    let run = || {
        cells
            .par_iter()
            .map(|&(method, accuracy)| {
                let cfg = SolveConfig {
                    mode: accuracy.mode(),
                    ..base.clone()
                };
                let report = solve(a, method, &cfg).expect("config validated before the sweep");
                log::info!(
                    "{method}({accuracy}): converged={} restarts={} inner={}",
                    report.converged,
                    report.i_restart,
                    report.i_inner
                );
                CellResult {
                    method,
                    accuracy,
                    report,
                }
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| ExperimentError::Threads(e.to_string()))?;
    Ok(pool.install(run))
}

/// All cells of a config, grouped by accuracy.
pub fn cells_of(cfg: &ExperimentConfig) -> Result<Vec<(MethodSpec, Accuracy)>, ConfigError> {
    let methods = cfg.method_specs()?;
    Ok(cfg
        .accuracies()?
        .into_iter()
        .flat_map(|acc| methods.iter().map(move |&m| (m, acc)))
        .collect())
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:e}"))
}

pub const HISTORY_HEADER: &str = "cycle\tm\tre_rho\tim_rho\tresidual\teps\tc_prime\tinner_iters\tcapped\tinner_rel_residual\tinner_status";

pub fn write_history<W: Write>(mut w: W, history: &[OuterRecord]) -> io::Result<()> {
    writeln!(w, "{HISTORY_HEADER}")?;
    for r in history {
        writeln!(
            w,
            "{}\t{}\t{:e}\t{:e}\t{:e}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.cycle,
            r.m,
            r.rho.re,
            r.rho.im,
            r.residual_norm,
            opt(r.eps_used),
            opt(r.c_prime),
            r.inner_iters,
            u8::from(r.capped),
            opt(r.inner_rel_residual),
            r.inner_status.map_or_else(|| "-".into(), |s| format!("{s:?}")),
        )?;
    }
    w.flush()
}

/// Residual at the last extraction of each cycle and inner iterations spent in it.
pub fn per_restart(history: &[OuterRecord]) -> Vec<(usize, f64, usize)> {
    let mut out: Vec<(usize, f64, usize)> = Vec::new();
    for r in history {
        match out.last_mut() {
            Some(last) if last.0 == r.cycle => {
                last.1 = r.residual_norm;
                last.2 += r.inner_iters;
            }
            _ => out.push((r.cycle, r.residual_norm, r.inner_iters)),
        }
    }
    out
}

pub const SUMMARY_HEADER: &str = "method\taccuracy\ti_restart\ti_outer\ti_inner\tp01\tconverged\tre_lambda\tim_lambda\tresidual\tfailure";

pub fn write_summary<W: Write>(mut w: W, cells: &[CellResult]) -> io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for c in cells {
        let r = &c.report;
        let p01 = match c.accuracy {
            Accuracy::Adaptive(_) => format!("{:.4}", r.p_01),
            _ => "-".into(),
        };
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:e}\t{:e}\t{:e}\t{}",
            c.method,
            c.accuracy,
            r.i_restart,
            r.i_outer,
            r.i_inner,
            p01,
            r.converged,
            r.eigenvalue.re,
            r.eigenvalue.im,
            r.residual_norm,
            r.failure.as_ref().map_or_else(|| "-".into(), |f| f.to_string().replace('\t', " ")),
        )?;
    }
    w.flush()
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, ExperimentError> {
    fs::File::create(path).map(BufWriter::new).map_err(|source| ExperimentError::Output {
        path: path.display().to_string(),
        source,
    })
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Output {
        path: path.display().to_string(),
        source,
    }
}

/// Writes history, plot data and summary files below `out`.
pub fn write_outputs(out: &Path, cells: &[CellResult]) -> Result<(), ExperimentError> {
    let hist_dir = out.join("history");
    let plot_dir = out.join("plot");
    for d in [&hist_dir, &plot_dir] {
        fs::create_dir_all(d).map_err(io_at(d))?;
    }
    for c in cells {
        let label = c.label();
        let path = hist_dir.join(format!("{label}.tsv"));
        write_history(create(&path)?, &c.report.history).map_err(io_at(&path))?;

        let path = plot_dir.join(format!("{label}.cycle1.dat"));
        let mut w = create(&path)?;
        let cycle1 = (|| -> io::Result<()> {
            writeln!(w, "# outer_iteration residual")?;
            for (k, r) in c.report.history.iter().take_while(|r| r.cycle == 0).enumerate() {
                writeln!(w, "{}\t{:e}", k + 1, r.residual_norm)?;
            }
            w.flush()
        })();
        cycle1.map_err(io_at(&path))?;

        let path = plot_dir.join(format!("{label}.restarts.dat"));
        let mut w = create(&path)?;
        let restarts = (|| -> io::Result<()> {
            writeln!(w, "# restart residual inner_iters")?;
            for (cycle, res, inner) in per_restart(&c.report.history) {
                writeln!(w, "{cycle}\t{res:e}\t{inner}")?;
            }
            w.flush()
        })();
        restarts.map_err(io_at(&path))?;
    }
    let path = out.join("summary.tsv");
    write_summary(create(&path)?, cells).map_err(io_at(&path))
}

/// Human-readable table, one block per accuracy.
pub fn format_table(cells: &[CellResult]) -> String {
    let mut s = format!(
        "{:<10} {:<8} {:>9} {:>9} {:>7} {:>9}  {}\n",
        "accuracy", "method", "I_restart", "I_inner", "P_0.1", "converged", "lambda"
    );
    for c in cells {
        let r = &c.report;
        let restarts = if r.converged { r.i_restart.to_string() } else { "Max".into() };
        let p01 = match c.accuracy {
            Accuracy::Adaptive(_) => format!("{:.0}%", 100.0 * r.p_01),
            _ => "-".into(),
        };
        s.push_str(&format!(
            "{:<10} {:<8} {:>9} {:>9} {:>7} {:>9}  {}\n",
            c.accuracy.to_string(),
            c.method.to_string(),
            restarts,
            r.i_inner,
            p01,
            r.converged,
            format_complex(r.eigenvalue)
        ));
    }
    s
}

/// Loads the problem, runs the sweep and writes all files; returns the results.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<CellResult>, ExperimentError> {
    cfg.validate()?;
    let (a, sigma) = load_problem(cfg)?;
    let base = cfg.solve_config(sigma)?;
    let cells = cells_of(cfg)?;
    log::info!(
        "{}: n = {}, nnz = {}, sigma = {}, {} cells",
        cfg.name.as_deref().unwrap_or("experiment"),
        a.dim(),
        a.nnz(),
        format_complex(sigma),
        cells.len()
    );
    let results = run_cells(&a, &base, &cells, cfg.threads)?;
    write_outputs(&cfg.out, &results)?;
    Ok(results)
}

/// A gnuplot script drawing the three panels for every cell in `out/summary.tsv`.
pub fn gnuplot_script(out: &Path) -> Result<String, ExperimentError> {
    let path = out.join("summary.tsv");
    let text = fs::read_to_string(&path).map_err(io_at(&path))?;
    let labels: Vec<String> = text
        .lines()
        .skip(1)
        .filter_map(|l| {
            let mut f = l.split('\t');
            Some(format!("{}_{}", f.next()?, f.next()?))
        })
        .collect();
    let plot = |file: &str, using: &str| -> String {
        labels
            .iter()
            .map(|l| format!("'plot/{l}.{file}' using {using} with lines title '{l}'"))
            .collect::<Vec<_>>()
            .join(", \\\n     ")
    };
    let mut s = String::new();
    s.push_str("# run from the output directory: gnuplot -p plots.gp\n");
    s.push_str("set logscale y\nset format y '%.0e'\nset multiplot layout 3,1\n");
    s.push_str("set title 'residual, first cycle'\nset xlabel 'outer iteration'\n");
    s.push_str(&format!("plot {}\n", plot("cycle1.dat", "1:2")));
    s.push_str("set title 'residual per restart'\nset xlabel 'restart'\n");
    s.push_str(&format!("plot {}\n", plot("restarts.dat", "1:2")));
    s.push_str("unset logscale y\nset format y '%g'\nset title 'inner iterations per restart'\n");
    s.push_str(&format!("plot {}\n", plot("restarts.dat", "1:3")));
    s.push_str("unset multiplot\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(cycle: usize, residual: f64, inner: usize) -> OuterRecord {
        OuterRecord {
            cycle,
            m: 1,
            rho: C64::new(1.0, -2.0),
            residual_norm: residual,
            eps_used: Some(1e-3),
            c_prime: Some(1.0),
            degenerate: false,
            inner_iters: inner,
            capped: false,
            inner_rel_residual: Some(5e-4),
            inner_status: None,
        }
    }

    #[test]
    fn per_restart_groups_cycles() {
        let h = [record(0, 1.0, 3), record(0, 0.5, 4), record(1, 0.2, 5), record(2, 0.1, 0)];
        assert_eq!(per_restart(&h), vec![(0, 0.5, 7), (1, 0.2, 5), (2, 0.1, 0)]);
    }

    #[test]
    fn history_has_header_and_one_line_per_record() {
        let mut buf = Vec::new();
        write_history(&mut buf, &[record(0, 1.0, 3), record(1, 0.5, 2)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], HISTORY_HEADER);
        let cols = HISTORY_HEADER.split('\t').count();
        assert!(lines.iter().all(|l| l.split('\t').count() == cols));
        assert!(lines[1].starts_with("0\t1\t1e0\t-2e0\t1e0\t1e-3\t1e0\t3\t0"));
    }
}
