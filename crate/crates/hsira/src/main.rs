use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hsira::config::{ExperimentConfig, RefinedChoice};
use hsira::experiment::{format_table, gnuplot_script, run_experiment, ExperimentError};
use hsira::scalar::format_complex;
use hsira::synthetic::planted_problem;
use hsira::save_matrix_market;

/// Restarted shift-invert eigensolvers (SIRA, JD, HSIRA, HJD, RHSIRA, RHJD)
/// for the eigenvalue of a sparse matrix closest to a target.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep of methods and inner accuracies, writing histories and a summary.
    Run(Box<RunArgs>),
    /// Print a gnuplot script for the plot data of a finished run.
    Gnuplot {
        /// Output directory of the run.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a matrix with known spectrum in Matrix Market format.
    Planted {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Complex entries and eigenvalues.
        #[arg(long)]
        complex: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file; flags given here override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Matrix Market file, or `planted:N` / `planted-complex:N`.
    #[arg(long)]
    matrix: Option<String>,
    /// Target, e.g. `-24` or `0.05+0.5i`.
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<String>,
    /// Single method (repeatable).
    #[arg(long)]
    method: Vec<String>,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    /// Target accuracy ε̃ of the adaptive rule (repeatable).
    #[arg(long)]
    eps_tilde: Vec<f64>,
    /// Also run with inner tolerance 1e-14.
    #[arg(long)]
    exact: bool,
    /// Fixed inner tolerance (repeatable).
    #[arg(long)]
    fixed_eps: Vec<f64>,
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long)]
    max_restarts: Option<usize>,
    #[arg(long)]
    ilu_droptol: Option<f64>,
    #[arg(long)]
    gmres_restart: Option<usize>,
    /// Cap on GMRES iterations per inner solve.
    #[arg(long)]
    gmres_cap: Option<usize>,
    #[arg(long)]
    tol_factor: Option<f64>,
    /// Use thin QR + SVD instead of the cross-product matrix for refined vectors.
    #[arg(long)]
    qr_refined: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the sweep (1 runs cells one after another).
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn into_config(self) -> Result<ExperimentConfig, ExperimentError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::new(String::new()),
        };
        if let Some(m) = self.matrix {
            cfg.matrix = m;
        }
        if self.sigma.is_some() {
            cfg.sigma = self.sigma;
        }
        let methods: Vec<String> = self.method.into_iter().chain(self.methods).collect();
        if !methods.is_empty() {
            cfg.methods = methods;
        }
        // any accuracy flag replaces the config's accuracy columns
        if !self.eps_tilde.is_empty() || self.exact || !self.fixed_eps.is_empty() {
            cfg.eps_tilde = self.eps_tilde;
            cfg.exact = self.exact;
            cfg.fixed_eps = self.fixed_eps;
        }
        macro_rules! set {
            ($($field:ident <- $flag:expr),* $(,)?) => {
                $(if let Some(v) = $flag { cfg.$field = v; })*
            };
        }
        set!(
            m_max <- self.m_max,
            max_restarts <- self.max_restarts,
            ilu_drop_tol <- self.ilu_droptol,
            gmres_restart <- self.gmres_restart,
            gmres_cap <- self.gmres_cap,
            tol_factor <- self.tol_factor,
            out <- self.out,
            seed <- self.seed,
        );
        if self.qr_refined {
            cfg.refined = RefinedChoice::QrSvd;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        Ok(cfg)
    }
}

fn fail(e: &dyn std::fmt::Display, code: u8) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(args) => {
            let result = args.into_config().and_then(|cfg| {
                let cells = run_experiment(&cfg)?;
                Ok((cfg, cells))
            });
            match result {
                Ok((cfg, cells)) => {
                    print!("{}", format_table(&cells));
                    println!("results written to {}", cfg.out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e, e.exit_code() as u8),
            }
        }
        Command::Gnuplot { out } => match gnuplot_script(&out) {
            Ok(s) => {
                print!("{s}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e, e.exit_code() as u8),
        },
        Command::Planted { n, seed, complex, out } => {
            if n < 4 {
                return fail(&"n must be at least 4", 2);
            }
            let p = planted_problem(seed, n, complex);
            if let Err(e) = save_matrix_market(&out, &p.matrix) {
                return fail(&e, 1);
            }
            println!("sigma = {}", format_complex(p.sigma));
            println!("target = {}", format_complex(p.target));
            ExitCode::SUCCESS
        }
    }
}
