//! Experiment commands behind the `minvol` binary.
//!
//! Each command takes an [`ExperimentConfig`] (or a bundle path plus a few
//! parameters), does its work deterministically and returns a summary whose
//! `Display` is a single line of `key=value` pairs.

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{certify_pssc_exact, check_hp_necessary, falsify_pssc_sampled, SscCertificate, Verdict, NECESSARY_TOL};
use crate::error::{Error, Result};
use crate::eval::{match_permutation, theorem1_envelope, theorem2_envelope, SweepReport, SweepRow, Theorem1Params, Theorem2Params};
use crate::geometry::PsscLevel;
use crate::instance::{assemble, gen_noise, generate, HMode, HOptions, Instance, InstanceSpec, NoiseMode, SigmaProfile};
use crate::io::{load_bundle, read_json, save_bundle, write_json, write_matrix_csv};
use crate::norms::{sigma_r, spectral_norm};
use crate::rng::derive_seed;
use crate::solver::{solve_minvol, SolveResult, SolverConfig};

/// File name of the sweep table inside the output directory.
pub const SWEEP_CSV: &str = "sweep.csv";

/// Everything a command may need; unset keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub p: f64,
    /// Noise level of `gen`.
    pub eps: f64,
    /// Noise levels of `sweep`.
    pub eps_list: Vec<f64>,
    pub h_mode: HMode,
    /// Boundary rows of the `hp_anchored` and `boundary_cap` generators.
    pub k: Option<usize>,
    pub dirichlet_alpha: f64,
    pub noise_mode: NoiseMode,
    /// Condition number of `W`, used unless `sigmas` is given.
    pub kappa: f64,
    pub sigmas: Option<Vec<f64>>,
    pub seed: u64,
    /// Overrides `solver.restarts` when set.
    pub restarts: Option<usize>,
    pub solver: SolverConfig,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m: 10,
            n: 60,
            r: 3,
            p: 1.0,
            eps: 0.0,
            eps_list: log_space(1e-5, 1e-2, 8),
            h_mode: HMode::Separable,
            k: None,
            dirichlet_alpha: 1.0,
            noise_mode: NoiseMode::Ball,
            kappa: 2.0,
            sigmas: None,
            seed: 0,
            restarts: None,
            solver: SolverConfig::default(),
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn profile(&self) -> SigmaProfile {
        match &self.sigmas {
            Some(v) => SigmaProfile::Values(v.clone()),
            None => SigmaProfile::Kappa(self.kappa),
        }
    }

    pub fn instance_spec(&self, eps: f64) -> InstanceSpec {
        InstanceSpec {
            m: self.m,
            n: self.n,
            r: self.r,
            p: self.p,
            eps,
            profile: self.profile(),
            h_mode: self.h_mode,
            h_options: HOptions { k: self.k, dirichlet_alpha: self.dirichlet_alpha },
            noise_mode: self.noise_mode,
            seed: self.seed,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut cfg = self.solver.clone();
        if let Some(r) = self.restarts {
            cfg.restarts = r;
        }
        cfg
    }
}

/// `k` points spaced evenly in `log` between `lo` and `hi`, both included.
pub fn log_space(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k < 2 {
        return vec![lo; k];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..k).map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp()).collect()
}

/// Sizes the global thread pool from `MINVOL_THREADS` (unset or 0 means one
/// thread per core). Returns the resulting thread count.
pub fn init_thread_pool() -> Result<usize> {
    let threads = match std::env::var("MINVOL_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| Error::InvalidParameter(format!("MINVOL_THREADS = {v:?} is not a count")))?,
        Err(_) => 0,
    };
    // a pool that is already set up keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(rayon::current_num_threads())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x:e}"))
}

#[derive(Debug, Clone)]
pub struct GenSummary {
    pub out: PathBuf,
    pub certified_p: Option<f64>,
    pub certificate_method: Option<String>,
    pub k_used: Option<usize>,
}

impl fmt::Display for GenSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "out={} certified_p={} method={} k_used={}",
            self.out.display(),
            self.certified_p.map_or_else(|| "none".to_string(), |p| format!("{p:.12}")),
            self.certificate_method.as_deref().unwrap_or("none"),
            self.k_used.map_or_else(|| "none".to_string(), |k| k.to_string())
        )
    }
}

/// Generates one instance and writes it as a bundle into `cfg.out`.
pub fn cmd_gen(cfg: &ExperimentConfig) -> Result<GenSummary> {
    let inst = generate(&cfg.instance_spec(cfg.eps))?;
    save_bundle(&cfg.out, &inst)?;
    let h = inst.gen_meta.h.as_ref();
    Ok(GenSummary {
        out: cfg.out.clone(),
        certified_p: inst.gen_meta.certified_p,
        certificate_method: h.map(|m| m.certificate_method.clone()),
        k_used: h.map(|m| m.k_used),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifyMethod {
    /// Exact facet enumeration (r ≤ 3).
    Exact,
    /// Coverage of the `H_p` columns only.
    Necessary,
    /// Monte Carlo falsification on the cap boundary.
    Sampled,
}

impl std::str::FromStr for CertifyMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "necessary" => Ok(Self::Necessary),
            "sampled" => Ok(Self::Sampled),
            other => Err(Error::InvalidParameter(format!("unknown certification method {other:?}"))),
        }
    }
}

/// Process exit code for a verdict: 0 certified or necessary-only,
/// 2 falsified, 3 inconclusive.
pub fn exit_code(verdict: Verdict) -> i32 {
    match verdict {
        Verdict::Certified | Verdict::NecessaryOnly => 0,
        Verdict::Falsified => 2,
        Verdict::Inconclusive => 3,
    }
}

/// Certifies the `H` of a bundle at level `p`.
pub fn cmd_certify(bundle: &Path, p: f64, method: CertifyMethod, samples: usize, seed: u64) -> Result<SscCertificate> {
    let inst = load_bundle(bundle)?;
    let level = PsscLevel::extended(inst.r(), p)?;
    match method {
        CertifyMethod::Exact => certify_pssc_exact(&inst.h_sharp, &level),
        CertifyMethod::Necessary => check_hp_necessary(&inst.h_sharp, &level, NECESSARY_TOL),
        CertifyMethod::Sampled => falsify_pssc_sampled(&inst.h_sharp, &level, samples, seed),
    }
}

/// Contents of `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub eps: f64,
    pub r: usize,
    pub feasible: bool,
    pub residual_12: f64,
    pub volume: f64,
    pub lambda_final: f64,
    pub outer: usize,
    pub alternations: usize,
    pub restarts: usize,
    pub permutation: Vec<usize>,
    #[serde(rename = "err_W")]
    pub err_w: f64,
    #[serde(rename = "err_H")]
    pub err_h: f64,
    pub solver: SolverConfig,
}

impl fmt::Display for SolveRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "feasible={} volume={:e} err_W={:e} err_H={:e} residual={:e} eps={:e} lambda={:e} alternations={}",
            self.feasible, self.volume, self.err_w, self.err_h, self.residual_12, self.eps, self.lambda_final, self.alternations
        )
    }
}

fn solve_instance(inst: &Instance, eps: f64, cfg: &SolverConfig) -> Result<(SolveResult, SolveRecord)> {
    let res = solve_minvol(&inst.x, inst.r(), eps, cfg)?;
    let m = match_permutation(&inst.w_sharp, &res.w_star)?.with_h(&inst.h_sharp, &res.h_star)?;
    let record = SolveRecord {
        eps,
        r: inst.r(),
        feasible: res.feasible,
        residual_12: res.residual_12,
        volume: res.volume,
        lambda_final: res.lambda_final,
        outer: res.iterations.outer,
        alternations: res.iterations.alternations,
        restarts: res.iterations.restarts,
        permutation: m.permutation,
        err_w: m.err_w,
        err_h: m.err_h.unwrap_or(f64::NAN),
        solver: cfg.clone(),
    };
    Ok((res, record))
}

/// Solves a bundle and writes `W_star.csv`, `H_star.csv` and `result.json`
/// into `out`. `eps = None` uses the bundle's noise level.
pub fn cmd_solve(bundle: &Path, eps: Option<f64>, cfg: &SolverConfig, out: &Path) -> Result<SolveRecord> {
    let inst = load_bundle(bundle)?;
    let eps = eps.unwrap_or(inst.eps);
    let (res, record) = solve_instance(&inst, eps, cfg)?;
    std::fs::create_dir_all(out)?;
    write_matrix_csv(&out.join("W_star.csv"), &res.w_star)?;
    write_matrix_csv(&out.join("H_star.csv"), &res.h_star)?;
    write_json(&out.join("result.json"), &record)?;
    Ok(record)
}

pub fn validate_eps_list(eps: &[f64]) -> Result<()> {
    if eps.len() < 4 {
        return Err(Error::InvalidParameter(format!("a sweep needs at least 4 eps values, got {}", eps.len())));
    }
    if let Some(e) = eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Error::InvalidParameter(format!("sweep eps {e} must be positive")));
    }
    let lo = eps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps.iter().copied().fold(0.0, f64::max);
    if hi < 100.0 * lo * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!("sweep eps must span at least two decades, got [{lo:e}, {hi:e}]")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub report: SweepReport,
    pub csv: PathBuf,
    /// Indices (in eps order) of rows whose solve missed the budget.
    pub infeasible: Vec<usize>,
}

impl fmt::Display for SweepOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "slope={:.6} stderr={:.6} c1={} c2={} rows={} infeasible={} csv={}",
            self.report.slope,
            self.report.slope_stderr,
            fmt_opt(self.report.c1),
            fmt_opt(self.report.c2),
            self.report.rows.len(),
            self.infeasible.len(),
            self.csv.display()
        )
    }
}

/// One sweep row: fresh noise at level `eps` on the fixed `(W♯, H♯)` of `base`.
pub fn sweep_row(base: &Instance, cfg: &ExperimentConfig, index: usize, eps: f64) -> Result<SweepRow> {
    let noise_seed = derive_seed(derive_seed(cfg.seed, 2), index as u64);
    let noise = gen_noise(base.m(), base.n(), eps, cfg.noise_mode, noise_seed)?;
    let inst = assemble(base.w_sharp.clone(), base.h_sharp.clone(), noise, base.level, eps, cfg.seed, base.gen_meta.clone())?;
    let (res, record) = solve_instance(&inst, eps, &cfg.solver_config())?;
    let r = inst.r();
    let p = inst.gen_meta.certified_p.unwrap_or(cfg.p);
    let sigma = sigma_r(&inst.w_sharp, r)?;
    let t1 = theorem1_envelope(&Theorem1Params { r, p, eps, sigma_r_w: sigma, norm_w: spectral_norm(&inst.w_sharp)? });
    let t2 = theorem2_envelope(&Theorem2Params { r, p, eps, sigma_r_w: sigma, norm_wstar: spectral_norm(&res.w_star)? });
    let (env_t1, cap_t1) = t1.map_or((f64::NAN, f64::NAN), |e| (e.bound, e.eps_cap));
    let (env_t2, cap_t2) = t2.map_or((f64::NAN, f64::NAN), |e| (e.bound, e.eps_cap));
    log::info!("sweep row {index}: eps={eps:e} feasible={} err_W={:e} alternations={}", record.feasible, record.err_w, record.alternations);
    Ok(SweepRow {
        eps,
        err_w: record.err_w,
        err_h: record.err_h,
        feasible: record.feasible,
        env_t1,
        env_t2,
        cap_t1,
        cap_t2,
        runtime: record.alternations as f64,
    })
}

/// Runs the sweep over `cfg.eps_list` and writes `sweep.csv` into `cfg.out`.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    validate_eps_list(&cfg.eps_list)?;
    let base = generate(&cfg.instance_spec(0.0))?;
    let rows: Vec<SweepRow> =
        cfg.eps_list.par_iter().enumerate().map(|(i, &eps)| sweep_row(&base, cfg, i, eps)).collect::<Result<_>>()?;
    let report = SweepReport::from_rows(rows)?;
    let infeasible: Vec<usize> = report.rows.iter().enumerate().filter(|(_, r)| !r.feasible).map(|(i, _)| i).collect();
    for &i in &infeasible {
        log::warn!("eps = {:e}: solver missed the budget; row excluded from the fit", report.rows[i].eps);
    }
    std::fs::create_dir_all(&cfg.out)?;
    let csv = cfg.out.join(SWEEP_CSV);
    report.write_csv(&csv)?;
    Ok(SweepOutcome { report, csv, infeasible })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub rows: usize,
    pub feasible: usize,
    pub slope: f64,
    pub slope_stderr: f64,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub eps_min: f64,
    pub eps_max: f64,
}

impl fmt::Display for ReportSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rows={} feasible={} slope={:.6} stderr={:.6} c1={} c2={} eps_min={:e} eps_max={:e}",
            self.rows,
            self.feasible,
            self.slope,
            self.slope_stderr,
            fmt_opt(self.c1),
            fmt_opt(self.c2),
            self.eps_min,
            self.eps_max
        )
    }
}

/// Re-fits a sweep table. `path` is the CSV or the directory holding it.
pub fn cmd_report(path: &Path) -> Result<ReportSummary> {
    let csv = if path.is_dir() { path.join(SWEEP_CSV) } else { path.to_path_buf() };
    let table = SweepReport::read_csv(&csv)?;
    let report = SweepReport::from_rows(table.rows)?;
    let eps = report.rows.iter().map(|r| r.eps);
    Ok(ReportSummary {
        rows: report.rows.len(),
        feasible: report.rows.iter().filter(|r| r.feasible).count(),
        slope: report.slope,
        slope_stderr: report.slope_stderr,
        c1: report.c1,
        c2: report.c2,
        eps_min: eps.clone().fold(f64::INFINITY, f64::min),
        eps_max: eps.fold(0.0, f64::max),
    })
}
