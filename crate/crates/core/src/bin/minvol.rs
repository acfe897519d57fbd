use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use minvol::experiment::{cmd_certify, cmd_gen, cmd_report, cmd_solve, cmd_sweep, exit_code, init_thread_pool, CertifyMethod, ExperimentConfig};
use minvol::instance::{HMode, NoiseMode};
use minvol::solver::WStep;

#[derive(Parser)]
#[command(name = "minvol", version, about = "Minimum-volume NMF experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance bundle.
    Gen(Common),
    /// Certify the H of a bundle at level p; prints the certificate as JSON.
    Certify {
        bundle: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value = "exact")]
        method: CertifyMethod,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Solve a bundle; writes W_star.csv, H_star.csv and result.json.
    Solve {
        bundle: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep eps on a fixed (W, H) and fit the error slope.
    Sweep(Common),
    /// Re-fit a sweep table.
    Report { path: PathBuf },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON ExperimentConfig; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    /// Noise level (gen) or budget (solve; defaults to the bundle's).
    #[arg(long)]
    eps: Option<f64>,
    /// Comma-separated noise levels (sweep).
    #[arg(long, value_delimiter = ',')]
    eps_list: Option<Vec<f64>>,
    #[arg(long)]
    mode: Option<HMode>,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long)]
    noise: Option<NoiseMode>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_alt: Option<usize>,
    #[arg(long)]
    w_step: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path).with_context(|| format!("reading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:expr),* $(,)?) => { $(if let Some(v) = self.$flag.clone() { $field = v; })* };
        }
        set!(m => cfg.m, n => cfg.n, r => cfg.r, p => cfg.p, eps => cfg.eps, eps_list => cfg.eps_list, mode => cfg.h_mode,
             noise => cfg.noise_mode, kappa => cfg.kappa, out => cfg.out, max_outer => cfg.solver.max_outer,
             max_alt => cfg.solver.max_alt);
        if let Some(s) = self.seed {
            cfg.seed = s;
            cfg.solver.seed = s;
        }
        if self.k.is_some() {
            cfg.k = self.k;
        }
        if self.restarts.is_some() {
            cfg.restarts = self.restarts;
        }
        if let Some(w) = &self.w_step {
            cfg.solver.w_step = match w.as_str() {
                "majorize" => WStep::Majorize,
                "gradient" => WStep::Gradient,
                other => anyhow::bail!("unknown W step {other:?}"),
            };
        }
        Ok(cfg)
    }
}

fn solve_out(bundle: &Path, common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| bundle.to_path_buf())
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    init_thread_pool()?;
    match cli.command {
        Command::Gen(common) => {
            println!("{}", cmd_gen(&common.config()?)?);
            Ok(0)
        }
        Command::Certify { bundle, p, method, samples, seed } => {
            let cert = cmd_certify(&bundle, p, method, samples, seed)?;
            println!("{}", serde_json::to_string_pretty(&cert)?);
            Ok(exit_code(cert.verdict) as u8)
        }
        Command::Solve { bundle, common } => {
            let cfg = common.config()?;
            let record = cmd_solve(&bundle, common.eps, &cfg.solver_config(), &solve_out(&bundle, &common))?;
            println!("{record}");
            Ok(if record.feasible { 0 } else { 4 })
        }
        Command::Sweep(common) => {
            let outcome = cmd_sweep(&common.config()?)?;
            for &i in &outcome.infeasible {
                eprintln!("warning: eps = {:e} infeasible, excluded from the fit", outcome.report.rows[i].eps);
            }
            println!("{outcome}");
            Ok(0)
        }
        Command::Report { path } => {
            println!("{}", cmd_report(&path)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
