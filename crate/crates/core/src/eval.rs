//! Recovery errors up to permutation, bound envelopes and ε-scaling fits.
//!
//! The envelopes are the shapes of the two robustness bounds with every
//! absolute constant set to one. Sweeps fit the constant afterwards, so only
//! the dependence on `eps`, `p`, `r` and the conditioning is ever tested.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PsscLevel;
use crate::io::format_f64;
use crate::norms::Mat;

/// Outcome of matching estimated columns to reference columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// Column `j` of the reference pairs with column `permutation[j]` of the estimate.
    pub permutation: Vec<usize>,
    #[serde(rename = "err_W")]
    pub err_w: f64,
    /// `‖(H♯ − H*Π)ᵀ‖₁,₂`, when the `H` factors were supplied.
    #[serde(rename = "err_H")]
    pub err_h: Option<f64>,
}

impl MatchResult {
    /// Row-wise error of `H` under the permutation already chosen for `W`.
    pub fn with_h(mut self, h_ref: &Mat, h_est: &Mat) -> Result<Self> {
        self.err_h = Some(h_error(h_ref, h_est, &self.permutation)?);
        Ok(self)
    }
}

/// Largest brute-force size; larger problems use threshold bisection.
pub const BRUTE_FORCE_MAX_R: usize = 8;

fn cost_matrix(w_ref: &Mat, w_est: &Mat) -> Result<Vec<Vec<f64>>> {
    if w_ref.shape() != w_est.shape() {
        return Err(Error::DimensionMismatch { expected: format!("{}×{}", w_ref.nrows(), w_ref.ncols()), got: format!("{}×{}", w_est.nrows(), w_est.ncols()) });
    }
    if w_ref.is_empty() {
        return Err(Error::EmptyInput);
    }
    crate::norms::ensure_finite(w_ref)?;
    crate::norms::ensure_finite(w_est)?;
    let r = w_ref.ncols();
    Ok((0..r).map(|j| (0..r).map(|k| (w_ref.column(j) - w_est.column(k)).norm()).collect()).collect())
}

fn bottleneck(cost: &[Vec<f64>], perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(j, &k)| cost[j][k]).fold(0.0, f64::max)
}

/// Advances to the next permutation in lexicographic order.
fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let Some(i) = (0..n - 1).rev().find(|&i| p[i] < p[i + 1]) else { return false };
    let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).unwrap_or(i + 1);
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

fn brute_force(cost: &[Vec<f64>]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..cost.len()).collect();
    let mut best = perm.clone();
    let mut best_val = bottleneck(cost, &perm);
    while next_permutation(&mut perm) {
        let v = bottleneck(cost, &perm);
        if v < best_val {
            best_val = v;
            best.copy_from_slice(&perm);
        }
    }
    best
}

/// Kuhn's augmenting-path matching on `allowed`, with rows `0..fixed` already assigned.
fn has_perfect_matching(allowed: &[Vec<bool>], fixed: &[usize]) -> bool {
    let r = allowed.len();
    let mut owner: Vec<Option<usize>> = vec![None; r];
    for (j, &k) in fixed.iter().enumerate() {
        owner[k] = Some(j);
    }
    fn augment(j: usize, allowed: &[Vec<bool>], owner: &mut [Option<usize>], seen: &mut [bool], frozen: usize) -> bool {
        for k in 0..allowed.len() {
            if allowed[j][k] && !seen[k] {
                seen[k] = true;
                let free = match owner[k] {
                    None => true,
                    Some(o) => o >= frozen && augment(o, allowed, owner, seen, frozen),
                };
                if free {
                    owner[k] = Some(j);
                    return true;
                }
            }
        }
        false
    }
    (fixed.len()..r).all(|j| {
        let mut seen = vec![false; r];
        augment(j, allowed, &mut owner, &mut seen, fixed.len())
    })
}

/// Smallest bottleneck value by bisection over the sorted costs, then the
/// lexicographically smallest permutation achieving it.
fn threshold_matching(cost: &[Vec<f64>]) -> Vec<usize> {
    let r = cost.len();
    let mut values: Vec<f64> = cost.iter().flatten().copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let allowed_at = |t: f64| -> Vec<Vec<bool>> { cost.iter().map(|row| row.iter().map(|&c| c <= t).collect()).collect() };
    let (mut lo, mut hi) = (0usize, values.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if has_perfect_matching(&allowed_at(values[mid]), &[]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let allowed = allowed_at(values[lo]);
    let mut perm = Vec::with_capacity(r);
    for j in 0..r {
        let k = (0..r)
            .find(|&k| allowed[j][k] && !perm.contains(&k) && {
                let mut trial = perm.clone();
                trial.push(k);
                has_perfect_matching(&allowed, &trial)
            })
            .expect("a perfect matching exists at the bottleneck threshold");
        perm.push(k);
    }
    perm
}

/// `min_Π ‖W_ref − W_est Π‖₁,₂` and the minimising permutation.
pub fn match_permutation(w_ref: &Mat, w_est: &Mat) -> Result<MatchResult> {
    let cost = cost_matrix(w_ref, w_est)?;
    let permutation = if cost.len() <= BRUTE_FORCE_MAX_R { brute_force(&cost) } else { threshold_matching(&cost) };
    let err_w = bottleneck(&cost, &permutation);
    Ok(MatchResult { permutation, err_w, err_h: None })
}

/// `‖(H_ref − H_est Π)ᵀ‖₁,₂`: the largest row error after permuting columns.
pub fn h_error(h_ref: &Mat, h_est: &Mat, perm: &[usize]) -> Result<f64> {
    if h_ref.shape() != h_est.shape() || perm.len() != h_ref.ncols() {
        return Err(Error::DimensionMismatch { expected: format!("{}×{}", h_ref.nrows(), h_ref.ncols()), got: format!("{}×{}", h_est.nrows(), h_est.ncols()) });
    }
    let permuted = h_est.select_columns(perm);
    Ok((h_ref - permuted).row_iter().map(|row| row.norm()).fold(0.0, f64::max))
}

/// Inputs of [`theorem1_envelope`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Params {
    pub r: usize,
    pub p: f64,
    pub eps: f64,
    pub sigma_r_w: f64,
    pub norm_w: f64,
}

/// Inputs of [`theorem2_envelope`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Params {
    pub r: usize,
    pub p: f64,
    pub eps: f64,
    pub sigma_r_w: f64,
    pub norm_wstar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub bound: f64,
    pub eps_cap: f64,
    /// Largest admissible `p`, for bounds that restrict it.
    pub p_cap: Option<f64>,
}

fn check_scalars(eps: f64, sigma: f64, norm: f64) -> Result<()> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be finite and ≥ 0")));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("σ_r = {sigma} must be positive")));
    }
    if !(norm.is_finite() && norm >= 0.0) {
        return Err(Error::InvalidParameter(format!("norm = {norm} must be finite and ≥ 0")));
    }
    Ok(())
}

/// `‖W‖·√(eps·r^{7/2}·p² / (σ_r·q²·min(q²−1, 1)))` with `q = √(r − p²)`.
pub fn theorem1_envelope(params: &Theorem1Params) -> Result<Envelope> {
    let level = PsscLevel::new(params.r, params.p)?;
    check_scalars(params.eps, params.sigma_r_w, params.norm_w)?;
    let (r, p, q) = (params.r as f64, level.p(), level.q());
    let q2 = q * q;
    if q2 - 1.0 <= 0.0 {
        return Err(Error::DegenerateEnvelope);
    }
    let bound = params.norm_w * (params.eps * r.powf(3.5) * p * p / (params.sigma_r_w * q2 * (q2 - 1.0).min(1.0))).sqrt();
    let eps_cap = (q.min(2f64.sqrt()) - 1.0).powi(2) * params.sigma_r_w * q2 / (r.powf(4.5) * p * p);
    Ok(Envelope { bound, eps_cap, p_cap: None })
}

/// `‖W*‖·(r^{3/2}·eps/σ_r + r·(p − 1))`.
pub fn theorem2_envelope(params: &Theorem2Params) -> Result<Envelope> {
    let level = PsscLevel::new(params.r, params.p)?;
    check_scalars(params.eps, params.sigma_r_w, params.norm_wstar)?;
    let r = params.r as f64;
    let bound = params.norm_wstar * (r.powf(1.5) * params.eps / params.sigma_r_w + r * (level.p() - 1.0));
    Ok(Envelope { bound, eps_cap: params.sigma_r_w / r.powf(1.5), p_cap: Some(1.0 + 1.0 / r) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub used: usize,
}

/// Least-squares line through `(log eps, log err)`. Points with `err ≤ 0`
/// are dropped with a warning.
pub fn scaling_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if let Some(&(e, _)) = points.iter().find(|(e, _)| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::InvalidParameter(format!("eps = {e} must be positive")));
    }
    let usable: Vec<(f64, f64)> = points.iter().filter(|(_, v)| v.is_finite() && *v > 0.0).map(|&(e, v)| (e.ln(), v.ln())).collect();
    if usable.len() < points.len() {
        log::warn!("dropped {} point(s) with nonpositive error from the slope fit", points.len() - usable.len());
    }
    if usable.len() < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: usable.len() });
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Degenerate("all eps values coincide".into()));
    }
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = usable.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    Ok(SlopeFit { slope, stderr, intercept, used: usable.len() })
}

/// One ε of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    #[serde(rename = "err_W")]
    pub err_w: f64,
    #[serde(rename = "err_H")]
    pub err_h: f64,
    pub feasible: bool,
    /// Theorem 1 shape; NaN where it is degenerate.
    pub env_t1: f64,
    pub env_t2: f64,
    pub cap_t1: f64,
    pub cap_t2: f64,
    /// Deterministic work measure: alternating W/H updates performed.
    pub runtime: f64,
}

pub const SWEEP_HEADER: [&str; 9] = ["eps", "err_W", "err_H", "feasible", "env_t1", "env_t2", "cap_t1", "cap_t2", "runtime"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub slope: f64,
    pub slope_stderr: f64,
    /// `max err_W / env` over feasible rows.
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

fn fitted_constant(rows: &[SweepRow], env: impl Fn(&SweepRow) -> f64) -> Option<f64> {
    rows.iter()
        .filter(|r| r.feasible && env(r).is_finite() && env(r) > 0.0)
        .map(|r| r.err_w / env(r))
        .reduce(f64::max)
}

impl SweepReport {
    /// Sorts rows by eps and fits the slope on feasible rows.
    pub fn from_rows(mut rows: Vec<SweepRow>) -> Result<Self> {
        rows.sort_by(|a, b| a.eps.total_cmp(&b.eps));
        let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.feasible).map(|r| (r.eps, r.err_w)).collect();
        let fit = scaling_slope(&pts)?;
        let c1 = fitted_constant(&rows, |r| r.env_t1);
        let c2 = fitted_constant(&rows, |r| r.env_t2);
        Ok(Self { rows, slope: fit.slope, slope_stderr: fit.stderr, c1, c2 })
    }

    /// Rows violating `err_W ≤ C·env` for the given constant and shape.
    pub fn envelope_violations(&self, c: f64, env: impl Fn(&SweepRow) -> f64) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.feasible && env(r).is_finite() && r.err_w > c * env(r) * (1.0 + 1e-12))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(SWEEP_HEADER)?;
        for r in &self.rows {
            w.write_record([
                format_f64(r.eps),
                format_f64(r.err_w),
                format_f64(r.err_h),
                r.feasible.to_string(),
                format_f64(r.env_t1),
                format_f64(r.env_t2),
                format_f64(r.cap_t1),
                format_f64(r.cap_t2),
                format_f64(r.runtime),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Malformed { path: path.display().to_string(), reason };
        let mut rdr = csv::Reader::from_path(path)?;
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if header != SWEEP_HEADER {
            return Err(bad(format!("unexpected header {header:?}")));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |k: usize| -> Result<f64> {
                rec.get(k).and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad(format!("row {}: column {} is not a number", i + 1, SWEEP_HEADER[k])))
            };
            let feasible = match rec.get(3).map(str::trim) {
                Some("true") => true,
                Some("false") => false,
                _ => return Err(bad(format!("row {}: feasible must be true or false", i + 1))),
            };
            rows.push(SweepRow {
                eps: num(0)?,
                err_w: num(1)?,
                err_h: num(2)?,
                feasible,
                env_t1: num(4)?,
                env_t2: num(5)?,
                cap_t1: num(6)?,
                cap_t2: num(7)?,
                runtime: num(8)?,
            });
        }
        Self::from_rows(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_mat(m: usize, n: usize, seed: u64) -> Mat {
        let mut rng = crate::rng::seeded(seed);
        Mat::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
    }

    /// Every permutation of `0..r`, by recursion (independent of `next_permutation`).
    fn all_perms(r: usize) -> Vec<Vec<usize>> {
        if r == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in all_perms(r - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, r - 1);
                out.push(q);
            }
        }
        out
    }

    fn oracle(w_ref: &Mat, w_est: &Mat) -> f64 {
        all_perms(w_ref.ncols())
            .iter()
            .map(|p| {
                let d = w_ref - w_est.select_columns(p);
                crate::norms::norm_12(&d).unwrap()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn identity_and_reversal() {
        let w = random_mat(5, 4, 1);
        let m = match_permutation(&w, &w).unwrap();
        assert_eq!(m.err_w, 0.0);
        assert_eq!(m.permutation, vec![0, 1, 2, 3]);
        let rev = w.select_columns(&[3, 2, 1, 0]);
        let m = match_permutation(&w, &rev).unwrap();
        assert_eq!(m.err_w, 0.0);
        assert_eq!(m.permutation, vec![3, 2, 1, 0]);
        assert!(match_permutation(&w, &random_mat(5, 3, 1)).is_err());
    }

    #[test]
    fn brute_force_matches_exhaustive_oracle() {
        for seed in 0..50 {
            let a = random_mat(5, 3, seed);
            let b = random_mat(5, 3, seed + 1000);
            let m = match_permutation(&a, &b).unwrap();
            assert_relative_eq!(m.err_w, oracle(&a, &b), epsilon = 1e-15);
            let id = crate::norms::norm_12(&(&a - &b)).unwrap();
            assert!(m.err_w <= id);
        }
    }

    #[test]
    fn lexicographic_tie_break() {
        // all columns equal: every permutation ties
        let w = Mat::from_element(3, 3, 1.0);
        assert_eq!(match_permutation(&w, &w).unwrap().permutation, vec![0, 1, 2]);
        let cost = vec![vec![1.0; 4]; 4];
        assert_eq!(threshold_matching(&cost), vec![0, 1, 2, 3]);
    }

    #[test]
    fn threshold_matching_agrees_with_brute_force() {
        for seed in 0..40 {
            let r = 2 + (seed as usize % 5);
            let cost = cost_matrix(&random_mat(4, r, seed), &random_mat(4, r, seed + 77)).unwrap();
            let a = brute_force(&cost);
            let b = threshold_matching(&cost);
            assert_eq!(bottleneck(&cost, &a), bottleneck(&cost, &b));
            assert_eq!(a, b, "seed {seed}");
        }
    }

    #[test]
    fn large_r_uses_matching() {
        let w = random_mat(12, 10, 3);
        let perm = [3usize, 7, 1, 0, 9, 2, 8, 5, 6, 4];
        let m = match_permutation(&w, &w.select_columns(&perm)).unwrap();
        assert_eq!(m.err_w, 0.0);
        let inv: Vec<usize> = (0..10).map(|j| perm.iter().position(|&k| k == j).unwrap()).collect();
        assert_eq!(m.permutation, inv);
    }

    #[test]
    fn h_error_rows() {
        let h = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.3, 0.7]);
        let swapped = h.select_columns(&[1, 0]);
        let m = MatchResult { permutation: vec![1, 0], err_w: 0.0, err_h: None }.with_h(&h, &swapped).unwrap();
        assert_eq!(m.err_h, Some(0.0));
        assert_relative_eq!(h_error(&h, &swapped, &[0, 1]).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
    }

    fn t1(r: usize, p: f64, eps: f64, s: f64, w: f64) -> Result<Envelope> {
        theorem1_envelope(&Theorem1Params { r, p, eps, sigma_r_w: s, norm_w: w })
    }

    fn t2(r: usize, p: f64, eps: f64, s: f64, w: f64) -> Result<Envelope> {
        theorem2_envelope(&Theorem2Params { r, p, eps, sigma_r_w: s, norm_wstar: w })
    }

    #[test]
    fn theorem1_examples() {
        assert_eq!(t1(3, 1.1, 0.0, 1.0, 1.0).unwrap().bound, 0.0);
        let a = t1(3, 1.1, 1e-4, 0.5, 2.0).unwrap().bound;
        let b = t1(3, 1.1, 4e-4, 0.5, 2.0).unwrap().bound;
        assert_relative_eq!(b / a, 2.0, epsilon = 1e-14);
        // r = 3, p = 1.1: q² = 3 − 1.21 = 1.79, min(q² − 1, 1) = 0.79
        let bound = (1e-4 * 3f64.powf(3.5) * 1.21 / (1.79 * 0.79)).sqrt();
        let q = 1.79f64.sqrt();
        let cap = (q - 1.0).powi(2) * 1.79 / (3f64.powf(4.5) * 1.21);
        let e = t1(3, 1.1, 1e-4, 1.0, 1.0).unwrap();
        assert_relative_eq!(e.bound, bound, max_relative = 1e-14);
        assert_relative_eq!(e.eps_cap, cap, max_relative = 1e-14);
        let err = t1(3, 2f64.sqrt(), 1e-4, 1.0, 1.0).unwrap_err();
        assert_eq!(err.to_string(), "Theorem 1 envelope degenerate at p² ≥ r−1");
        assert!(t1(3, 0.9, 1e-4, 1.0, 1.0).is_err());
    }

    #[test]
    fn theorem2_examples() {
        assert_eq!(t2(3, 1.0, 0.0, 1.0, 1.0).unwrap().bound, 0.0);
        let a = t2(4, 1.0, 1e-3, 0.3, 1.5).unwrap().bound;
        let b = t2(4, 1.0, 2e-3, 0.3, 1.5).unwrap().bound;
        assert_relative_eq!(b - a, a, max_relative = 1e-13);
        let e = t2(3, 1.05, 1e-3, 1.0, 2.0).unwrap();
        let bound = 2.0 * (3f64 * 3f64.sqrt() * 1e-3 + 3.0 * 0.05);
        assert_relative_eq!(e.bound, bound, max_relative = 1e-13);
        assert_relative_eq!(e.eps_cap, 1.0 / 27f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(e.p_cap.unwrap(), 4.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn slope_examples() {
        let eps: Vec<f64> = (0..8).map(|i| 1e-5 * 10f64.powf(3.0 * i as f64 / 7.0)).collect();
        let lin: Vec<(f64, f64)> = eps.iter().map(|&e| (e, 3.0 * e)).collect();
        assert_relative_eq!(scaling_slope(&lin).unwrap().slope, 1.0, epsilon = 1e-12);
        let half: Vec<(f64, f64)> = eps.iter().map(|&e| (e, 0.2 * e.sqrt())).collect();
        assert_relative_eq!(scaling_slope(&half).unwrap().slope, 0.5, epsilon = 1e-12);
        let mut rng = crate::rng::seeded(5);
        let noisy: Vec<(f64, f64)> = eps.iter().map(|&e| (e, 2.0 * e * (1.0 + 0.01 * rng.random_range(-1.0..1.0)))).collect();
        assert!((scaling_slope(&noisy).unwrap().slope - 1.0).abs() < 0.05);
        assert!(matches!(scaling_slope(&lin[..3]), Err(Error::TooFewPoints { .. })));
        let mut zeros = lin[..4].to_vec();
        zeros[0].1 = 0.0;
        assert!(scaling_slope(&zeros).is_err());
    }

    #[test]
    fn sweep_csv_round_trip() {
        let rows: Vec<SweepRow> = (0..5)
            .rev()
            .map(|i| {
                let eps = 1e-5 * 10f64.powi(i);
                SweepRow { eps, err_w: 2.0 * eps, err_h: eps, feasible: i != 2, env_t1: eps.sqrt(), env_t2: eps, cap_t1: 0.1, cap_t2: 0.2, runtime: 10.0 }
            })
            .collect();
        let rep = SweepReport::from_rows(rows).unwrap();
        assert!(rep.rows.windows(2).all(|w| w[0].eps < w[1].eps));
        assert_relative_eq!(rep.slope, 1.0, epsilon = 1e-12);
        assert_relative_eq!(rep.c2.unwrap(), 2.0, epsilon = 1e-12);
        assert!(rep.envelope_violations(rep.c1.unwrap(), |r| r.env_t1).is_empty());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        rep.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("eps,err_W,err_H,feasible,env_t1,env_t2,cap_t1,cap_t2,runtime\n"));
        assert_eq!(SweepReport::read_csv(&path).unwrap(), rep);
    }

    proptest! {
        #[test]
        fn err_w_invariant_under_estimate_permutation(seed in 0u64..1000, shuffle in Just(()).prop_perturb(|_, mut rng| {
            let mut p: Vec<usize> = (0..4).collect();
            for i in (1..4).rev() {
                p.swap(i, rng.random_range(0..=i));
            }
            p
        })) {
            let a = random_mat(6, 4, seed);
            let b = random_mat(6, 4, seed + 1);
            let e1 = match_permutation(&a, &b).unwrap().err_w;
            let e2 = match_permutation(&a, &b.select_columns(&shuffle)).unwrap().err_w;
            prop_assert_eq!(e1, e2);
        }

        #[test]
        fn envelopes_monotone(r in 3usize..9, t in 0.0f64..0.9, eps in 1e-8f64..1e-1, s in 0.01f64..2.0) {
            let pmax = ((r - 1) as f64).sqrt();
            let p = 1.0 + t * (pmax - 1.0) * 0.95;
            let p2 = p + 0.01 * (pmax - p);
            let base = t1(r, p, eps, s, 1.0).unwrap().bound;
            prop_assert!(t1(r, p, eps * 1.5, s, 1.0).unwrap().bound >= base);
            prop_assert!(t1(r, p2, eps, s, 1.0).unwrap().bound >= base);
            prop_assert!(t1(r, p, eps, s * 1.5, 1.0).unwrap().bound <= base);
            let base = t2(r, p, eps, s, 1.0).unwrap().bound;
            prop_assert!(t2(r, p, eps * 1.5, s, 1.0).unwrap().bound >= base);
            prop_assert!(t2(r, p2, eps, s, 1.0).unwrap().bound >= base);
            prop_assert!(t2(r, p, eps, s * 1.5, 1.0).unwrap().bound <= base);
        }
    }
}
