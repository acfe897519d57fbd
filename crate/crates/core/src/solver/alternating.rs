//! Minimum-volume factorization under a column-noise budget.
//!
//! Target problem: `min det(WᵀW)` subject to `‖X − WHᵀ‖₁,₂ ≤ ε`, `He = e`,
//! `H ≥ 0`. The solver works on the penalized surrogate
//!
//! ```text
//! f_λ,μ(W, H) = Σⱼ μⱼ ‖xⱼ − W hⱼ‖² + λ · logdet(WᵀW + δI)
//! ```
//!
//! in stages. Within a stage `λ` and the column weights `μ` are fixed and the
//! solver alternates an exact `H`-update (one simplex least-squares fit per
//! column) with a `W`-update that never increases `f_λ,μ`. Between stages the
//! weights are reset from the residuals, `μⱼ ∝ (‖rⱼ‖ / maxₖ‖rₖ‖)^γ`, which
//! concentrates the fit on the columns that bind the `‖·‖₁,₂` budget, and `λ`
//! is rescaled by `θε / maxⱼ‖rⱼ‖` (clamped), since the residual scales
//! roughly linearly in `λ`. With `γ = 0` the data term is the plain
//! `‖X − WHᵀ‖_F²`. Every feasible iterate is scored by its Gram volume and
//! the smallest one is returned.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::simplex_ls::nearest_in_hull;
use super::spa::spa;
use crate::error::{Error, Result};
use crate::norms::{ensure_finite, gram_volume, singular_values, Mat, Vector};

/// How the `W` block is updated for fixed `H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WStep {
    /// Minimize the trace majorizer of the logdet term in closed form.
    Majorize,
    /// Gradient steps with Armijo backtracking.
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Initial volume weight; `None` picks `1e−2·‖X‖_F² / |logdet(W₀ᵀW₀ + δI)|`.
    pub lambda0: Option<f64>,
    pub delta: f64,
    /// Smallest per-stage multiplier of `λ`; the largest is its inverse.
    pub lambda_shrink: f64,
    pub max_outer: usize,
    pub max_alt: usize,
    pub inner_tol: f64,
    pub feas_slack: f64,
    pub seed: u64,
    pub restarts: usize,
    pub w_step: WStep,
    /// Exponent `γ` of the residual-based column weights.
    pub weight_power: f64,
    /// Fraction `θ` of the budget that the `λ` update aims for.
    pub target_fraction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda0: None,
            delta: 1e-8,
            lambda_shrink: 0.5,
            max_outer: 200,
            max_alt: 500,
            inner_tol: 1e-10,
            feas_slack: 1e-9,
            seed: 0,
            restarts: 1,
            w_step: WStep::Majorize,
            weight_power: 1.0,
            target_fraction: 0.999,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [("delta", self.delta), ("inner_tol", self.inner_tol), ("feas_slack", self.feas_slack)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(l) = self.lambda0 {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidParameter(format!("lambda0 must be positive, got {l}")));
            }
        }
        if !(self.lambda_shrink > 0.0 && self.lambda_shrink < 1.0) {
            return Err(Error::InvalidParameter(format!("lambda_shrink must lie in (0,1), got {}", self.lambda_shrink)));
        }
        if !(self.weight_power >= 0.0 && self.weight_power <= 64.0) {
            return Err(Error::InvalidParameter(format!("weight_power must lie in [0,64], got {}", self.weight_power)));
        }
        if !(self.target_fraction > 0.0 && self.target_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!("target_fraction must lie in (0,1], got {}", self.target_fraction)));
        }
        if self.max_outer == 0 || self.max_alt == 0 || self.restarts == 0 {
            return Err(Error::InvalidParameter("iteration counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationCounts {
    pub outer: usize,
    pub alternations: usize,
    pub restarts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Stage index; `λ` and the column weights are constant within a stage.
    pub stage: usize,
    pub lambda: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub w_star: Mat,
    pub h_star: Mat,
    /// `‖X − W*H*ᵀ‖₁,₂ ≤ ε + feas_slack`.
    pub feasible: bool,
    pub residual_12: f64,
    pub lambda_final: f64,
    pub volume: f64,
    pub iterations: IterationCounts,
    /// Penalized objective after every alternation of the returned restart.
    pub objective_trace: Vec<TraceEntry>,
}

/// `f_λ(W, H) = ‖X − WHᵀ‖_F² + λ · logdet(WᵀW + δI)`.
pub fn penalized_objective(x: &Mat, w: &Mat, h: &Mat, lambda: f64, delta: f64) -> f64 {
    let fit = (x - w * h.transpose()).norm_squared();
    fit + lambda * logdet_regularized(w, delta)
}

/// `f_λ,μ(W, H) = Σⱼ μⱼ‖xⱼ − W hⱼ‖² + λ · logdet(WᵀW + δI)`.
pub fn weighted_objective(x: &Mat, w: &Mat, h: &Mat, mu: &Vector, lambda: f64, delta: f64) -> f64 {
    let r = x - w * h.transpose();
    let fit: f64 = r.column_iter().zip(mu.iter()).map(|(c, m)| m * c.norm_squared()).sum();
    fit + lambda * logdet_regularized(w, delta)
}

/// `logdet(WᵀW + δI)` via Cholesky.
pub fn logdet_regularized(w: &Mat, delta: f64) -> f64 {
    let r = w.ncols();
    let z = w.transpose() * w + Mat::identity(r, r) * delta;
    match z.cholesky() {
        Some(c) => 2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>(),
        None => f64::NEG_INFINITY,
    }
}

/// `∇_W f_λ = −2(X − WHᵀ)H + 2λ W (WᵀW + δI)⁻¹`.
pub fn w_gradient(x: &Mat, w: &Mat, h: &Mat, lambda: f64, delta: f64) -> Mat {
    weighted_gradient(x, w, h, &Vector::from_element(x.ncols(), 1.0), lambda, delta)
}

fn weighted_gradient(x: &Mat, w: &Mat, h: &Mat, mu: &Vector, lambda: f64, delta: f64) -> Mat {
    let r = w.ncols();
    let z = w.transpose() * w + Mat::identity(r, r) * delta;
    let zinv = z.try_inverse().unwrap_or_else(|| Mat::identity(r, r) / delta);
    let mut res = x - w * h.transpose();
    for (mut c, m) in res.column_iter_mut().zip(mu.iter()) {
        c *= *m;
    }
    res * h * -2.0 + w * zinv * (2.0 * lambda)
}

fn fit_all_columns(x: &Mat, w: &Mat) -> Mat {
    let r = w.ncols();
    let n = x.ncols();
    let rows: Vec<Vector> = (0..n)
        .into_par_iter()
        .with_min_len(64)
        .map(|j| nearest_in_hull(w, &x.column(j).clone_owned()).h)
        .collect();
    Mat::from_fn(n, r, |i, k| rows[i][k])
}

/// Row-stochastic `H` minimizing `‖X − WHᵀ‖_F` column by column.
pub fn recover_h(w: &Mat, x: &Mat) -> Result<Mat> {
    if w.nrows() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} rows", w.nrows()),
            got: format!("{} rows", x.nrows()),
        });
    }
    let s = singular_values(w);
    if w.ncols() > w.nrows() || s.is_empty() || s[s.len() - 1] <= 1e-12 * s[0] {
        return Err(Error::RankDeficient);
    }
    Ok(fit_all_columns(x, w))
}

fn majorize_step(x: &Mat, w: &Mat, h: &Mat, mu: &Vector, lambda: f64, delta: f64) -> Option<Mat> {
    let r = w.ncols();
    let z = w.transpose() * w + Mat::identity(r, r) * delta;
    let zinv = z.try_inverse()?;
    let mut dh = h.clone();
    for (mut row, m) in dh.row_iter_mut().zip(mu.iter()) {
        row *= *m;
    }
    let a = h.transpose() * &dh + zinv * lambda;
    let rhs = (x * dh).transpose();
    // Wᵀ = A⁻¹ (XDH)ᵀ, A symmetric positive definite
    let wt = a.cholesky()?.solve(&rhs);
    Some(wt.transpose())
}

fn gradient_step(x: &Mat, w: &Mat, h: &Mat, mu: &Vector, lambda: f64, delta: f64, step: &mut f64) -> Option<Mat> {
    let f0 = weighted_objective(x, w, h, mu, lambda, delta);
    let g = weighted_gradient(x, w, h, mu, lambda, delta);
    let gg = g.norm_squared();
    if gg == 0.0 {
        return None;
    }
    let mut t = *step * 2.0;
    for _ in 0..60 {
        let cand = w - &g * t;
        if weighted_objective(x, &cand, h, mu, lambda, delta) <= f0 - 1e-4 * t * gg {
            *step = t;
            return Some(cand);
        }
        t *= 0.5;
    }
    None
}

fn column_residuals(x: &Mat, w: &Mat, h: &Mat) -> Vector {
    let r = x - w * h.transpose();
    Vector::from_iterator(r.ncols(), r.column_iter().map(|c| c.norm()))
}

/// Lawson update `μⱼ ← μⱼ (‖rⱼ‖ / maxₖ‖rₖ‖)^γ`, floored at `1e−8` and
/// normalized to mean one.
fn update_weights(mu: &mut Vector, res: &Vector, power: f64) {
    let top = res.max();
    if power == 0.0 || top.is_nan() || top <= 0.0 {
        return;
    }
    for (m, v) in mu.iter_mut().zip(res.iter()) {
        *m = (*m * (v / top).powf(power)).max(1e-8);
    }
    let mean = mu.mean();
    *mu /= mean;
}

struct Best {
    volume: f64,
    w: Mat,
    h: Mat,
    lambda: f64,
    residual: f64,
}

struct RunState<'a> {
    x: &'a Mat,
    eps: f64,
    cfg: &'a SolverConfig,
    w: Mat,
    h: Mat,
    best: Option<Best>,
    trace: Vec<TraceEntry>,
    alternations: usize,
    grad_step: f64,
}

impl RunState<'_> {
    /// Scores the current iterate; returns its column residuals.
    fn record(&mut self, lambda: f64) -> Vector {
        let res = column_residuals(self.x, &self.w, &self.h);
        let top = res.max();
        if top <= self.eps + self.cfg.feas_slack {
            let vol = gram_volume(&self.w);
            if self.best.as_ref().is_none_or(|b| vol < b.volume) {
                self.best = Some(Best { volume: vol, w: self.w.clone(), h: self.h.clone(), lambda, residual: top });
            }
        }
        res
    }

    /// Alternate at fixed `(λ, μ)` until the relative decrease stalls.
    fn run_stage(&mut self, stage: usize, lambda: f64, mu: &Vector) -> Vector {
        let cfg = self.cfg;
        let objective = |w: &Mat, h: &Mat| weighted_objective(self.x, w, h, mu, lambda, cfg.delta);
        let mut f_prev = objective(&self.w, &self.h);
        let mut res = None;
        for _ in 0..cfg.max_alt {
            self.alternations += 1;
            self.h = fit_all_columns(self.x, &self.w);
            let f_h = objective(&self.w, &self.h);
            let cand = match cfg.w_step {
                WStep::Majorize => majorize_step(self.x, &self.w, &self.h, mu, lambda, cfg.delta),
                WStep::Gradient => gradient_step(self.x, &self.w, &self.h, mu, lambda, cfg.delta, &mut self.grad_step),
            };
            let mut f = f_h;
            if let Some(wn) = cand {
                let fw = objective(&wn, &self.h);
                if fw <= f_h {
                    self.w = wn;
                    f = fw;
                }
            }
            self.trace.push(TraceEntry { stage, lambda, objective: f });
            res = Some(self.record(lambda));
            let scale = (f - lambda * logdet_regularized(&self.w, cfg.delta)).abs() + lambda * (1.0 + logdet_regularized(&self.w, cfg.delta).abs());
            if f_prev - f <= cfg.inner_tol * scale.max(f64::MIN_POSITIVE) {
                break;
            }
            f_prev = f;
        }
        res.unwrap_or_else(|| self.record(lambda))
    }
}

fn initial_lambda(x: &Mat, w0: &Mat, delta: f64) -> f64 {
    let ld = logdet_regularized(w0, delta).abs().max(1.0);
    1e-2 * x.norm_squared() / ld
}

fn perturb(w0: &Mat, seed: u64, restart: usize) -> Mat {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = crate::rng::seeded(crate::rng::derive_seed(seed, restart as u64));
    let (m, r) = w0.shape();
    let scale = 1e-2 * w0.norm() / ((m * r) as f64).sqrt();
    w0 + Mat::from_fn(m, r, |_, _| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
}

struct RunOutcome {
    best: Option<Best>,
    last_w: Mat,
    last_h: Mat,
    last_lambda: f64,
    last_residual: f64,
    trace: Vec<TraceEntry>,
    counts: IterationCounts,
}

fn solve_from(x: &Mat, eps: f64, w0: Mat, cfg: &SolverConfig) -> RunOutcome {
    let h0 = fit_all_columns(x, &w0);
    let mut state = RunState {
        x,
        eps,
        cfg,
        w: w0.clone(),
        h: h0,
        best: None,
        trace: Vec::new(),
        alternations: 0,
        grad_step: 1.0 / (x.norm_squared().max(1.0)),
    };
    let mut lambda = cfg.lambda0.unwrap_or_else(|| initial_lambda(x, &w0, cfg.delta));
    let mut mu = Vector::from_element(x.ncols(), 1.0);
    let (lo, hi) = (cfg.lambda_shrink, 1.0 / cfg.lambda_shrink);
    let mut outer = 0;
    let mut last_residual = f64::INFINITY;
    while outer < cfg.max_outer {
        let res = state.run_stage(outer, lambda, &mu);
        outer += 1;
        let top = res.max();
        log::debug!("stage {outer}: lambda {lambda:.3e}, max residual {top:.3e}, alternations {}", state.alternations);
        last_residual = top;
        let feasible = top <= eps + cfg.feas_slack;
        let factor = if top > 0.0 { (cfg.target_fraction * eps / top).clamp(lo, hi) } else { hi };
        if feasible && (factor.ln()).abs() < 1e-3 {
            break;
        }
        lambda *= factor;
        update_weights(&mut mu, &res, cfg.weight_power);
    }
    RunOutcome {
        best: state.best,
        last_w: state.w,
        last_h: state.h,
        last_lambda: lambda,
        last_residual,
        trace: state.trace,
        counts: IterationCounts { outer, alternations: state.alternations, restarts: 1 },
    }
}

/// Solve the min-vol problem for rank `r` and noise budget `eps`.
///
/// A run that never meets the budget still returns `Ok`, with
/// `feasible = false` and the last iterate of the restart that came closest.
pub fn solve_minvol(x: &Mat, r: usize, eps: f64, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    ensure_finite(x)?;
    if r < 2 {
        return Err(Error::InvalidParameter(format!("rank r = {r} must be at least 2")));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be nonnegative")));
    }
    let (_, w0) = spa(x, r)?;

    let runs: Vec<RunOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|restart| {
            let start = if restart == 0 { w0.clone() } else { perturb(&w0, cfg.seed, restart) };
            solve_from(x, eps, start, cfg)
        })
        .collect();
    let mut counts = IterationCounts::default();
    for run in &runs {
        counts.outer += run.counts.outer;
        counts.alternations += run.counts.alternations;
        counts.restarts += 1;
    }
    // feasible runs ranked by volume, infeasible ones by residual; ties go to the lower index
    let key = |o: &RunOutcome| match &o.best {
        Some(b) => (0, b.volume),
        None => (1, o.last_residual),
    };
    let run = runs
        .into_iter()
        .reduce(|a, b| if key(&b).0 < key(&a).0 || (key(&b).0 == key(&a).0 && key(&b).1 < key(&a).1) { b } else { a })
        .expect("at least one restart");
    let result = match run.best {
        Some(b) => SolveResult {
            volume: b.volume,
            w_star: b.w,
            h_star: b.h,
            feasible: true,
            residual_12: b.residual,
            lambda_final: b.lambda,
            iterations: counts,
            objective_trace: run.trace,
        },
        None => SolveResult {
            volume: gram_volume(&run.last_w),
            w_star: run.last_w,
            h_star: run.last_h,
            feasible: false,
            residual_12: run.last_residual,
            lambda_final: run.last_lambda,
            iterations: counts,
            objective_trace: run.trace,
        },
    };
    Ok(result)
}
