//! Checking the scattering level of a row-stochastic `H`.
//!
//! Four routes, from cheapest to most specific:
//!
//! - [`detect_separable`]: look for the `r` unit vectors among the rows.
//! - [`check_hp_necessary`]: every column of `H_p` must lie in `conv(Hᵀ)`.
//! - [`certify_pssc_exact`]: for `r ≤ 3`, compare the hull of the rows with
//!   the support function of `Q_p ∩ Δ^r` edge by edge.
//! - [`falsify_pssc_sampled`]: draw points of `∂Q_p ∩ Δ^r` and look for one
//!   outside the hull. It can refute, never certify.
//!
//! Hull membership is decided by an exact nearest-point solve plus a
//! separating-hyperplane check, so a "falsified" verdict always carries a
//! point provably at positive distance from the hull.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_hp, sample_cap_boundary_anchored, support_qp_cap, PsscLevel};
use crate::norms::{Mat, Vector};
use crate::rng::{derive_seed, seeded};
use crate::solver::simplex_ls::nearest_in_hull;

/// Residual threshold for the `H_p` containment test.
pub const NECESSARY_TOL: f64 = 1e-8;
/// Slack on support-function comparisons in the exact checker.
pub const EXACT_TOL: f64 = 1e-10;
/// Membership threshold used by the sampled falsifier.
pub const SAMPLED_TOL: f64 = 1e-8;
/// Entry tolerance when validating a row-stochastic matrix.
pub const STOCHASTIC_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    NecessaryOnly,
    Falsified,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SeparableScan,
    HpFeasibility,
    ExactFacet,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SscCertificate {
    pub p_tested: f64,
    pub verdict: Verdict,
    pub method: Method,
    /// A point of `Q_p ∩ Δ^r` (or a column of `H_p`) outside `conv(Hᵀ)`.
    pub witness: Option<Vec<f64>>,
    /// Per-column residuals (`hp_feasibility`) or per-edge support excess (`exact_facet`).
    pub residuals: Vec<f64>,
    pub samples_used: usize,
    pub tolerance: f64,
}

impl SscCertificate {
    pub fn passes(&self) -> bool {
        matches!(self.verdict, Verdict::Certified | Verdict::NecessaryOnly)
    }
}

/// Rows nonnegative within `-tol` and summing to one within `tol`.
pub fn validate_stochastic(h: &Mat, tol: f64) -> Result<()> {
    if h.nrows() == 0 || h.ncols() < 2 {
        return Err(Error::DimensionMismatch { expected: "n ≥ 1 rows and r ≥ 2 columns".into(), got: format!("{}×{}", h.nrows(), h.ncols()) });
    }
    crate::norms::ensure_finite(h)?;
    for (i, row) in h.row_iter().enumerate() {
        if row.iter().any(|&v| v < -tol) {
            return Err(Error::InvalidParameter(format!("row {i} has a negative entry")));
        }
        if (row.sum() - 1.0).abs() > tol {
            return Err(Error::InvalidParameter(format!("row {i} sums to {}", row.sum())));
        }
    }
    Ok(())
}

fn check_level(h: &Mat, level: &PsscLevel) -> Result<()> {
    if h.ncols() != level.r() {
        return Err(Error::DimensionMismatch { expected: format!("{} columns", level.r()), got: format!("{} columns", h.ncols()) });
    }
    Ok(())
}

/// Row indices `K` (ordered by unit vector) with `H(K,:)` within `tol` of the identity.
pub fn detect_separable(h: &Mat, tol: f64) -> Result<Option<Vec<usize>>> {
    validate_stochastic(h, tol.max(STOCHASTIC_TOL))?;
    let r = h.ncols();
    let mut picks = Vec::with_capacity(r);
    for k in 0..r {
        let hit = h.row_iter().position(|row| {
            row.iter().enumerate().all(|(j, &v)| (v - if j == k { 1.0 } else { 0.0 }).abs() <= tol)
        });
        match hit {
            Some(i) => picks.push(i),
            None => return Ok(None),
        }
    }
    Ok(Some(picks))
}

/// Outcome of a point-in-hull test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Membership {
    Inside { residual: f64 },
    /// `margin` is a certified lower bound on the distance to the hull.
    Outside { residual: f64, margin: f64 },
    Undecided { residual: f64 },
}

impl Membership {
    pub fn residual(&self) -> f64 {
        match *self {
            Membership::Inside { residual } | Membership::Outside { residual, .. } | Membership::Undecided { residual } => residual,
        }
    }
}

/// Decides `x ∈ conv` of the columns of a point matrix.
///
/// The exact nearest hull point comes from [`nearest_in_hull`]; its offset
/// `w` also certifies separation, since `min_i wᵀ(pᵢ − x) / ‖w‖` bounds the
/// distance from below.
pub struct HullTester {
    points: Mat,
}

impl HullTester {
    /// `points` holds one point per column.
    pub fn new(points: &Mat) -> Self {
        Self { points: points.clone() }
    }

    pub fn from_rows(h: &Mat) -> Self {
        Self::new(&h.transpose())
    }

    /// Convex weights of the nearest hull point to `x` and its offset `w = Pv − x`.
    pub fn nearest(&self, x: &Vector) -> (Vector, Vector) {
        let np = nearest_in_hull(&self.points, x);
        (np.h, np.offset)
    }

    pub fn test(&self, x: &Vector, tol: f64) -> Membership {
        let (_, w) = self.nearest(x);
        let residual = w.norm();
        if residual <= tol {
            return Membership::Inside { residual };
        }
        let low = (0..self.points.ncols())
            .map(|j| (self.points.column(j) - x).dot(&w))
            .fold(f64::INFINITY, f64::min);
        let margin = low / residual;
        if margin > tol {
            Membership::Outside { residual, margin }
        } else {
            Membership::Undecided { residual }
        }
    }
}

/// Every column of `H_p` must be a convex combination of the rows of `H`.
pub fn check_hp_necessary(h: &Mat, level: &PsscLevel, tol: f64) -> Result<SscCertificate> {
    validate_stochastic(h, STOCHASTIC_TOL)?;
    check_level(h, level)?;
    let hp = build_hp(level);
    let tester = HullTester::from_rows(h);
    let mut residuals = Vec::with_capacity(level.r());
    let mut witness = None;
    for col in hp.column_iter() {
        let v = col.clone_owned();
        let m = tester.test(&v, tol);
        let res = m.residual();
        residuals.push(res);
        if witness.is_none() && !matches!(m, Membership::Inside { .. }) && res > tol {
            witness = Some(v.iter().copied().collect());
        }
    }
    let verdict = if witness.is_some() { Verdict::Falsified } else { Verdict::NecessaryOnly };
    Ok(SscCertificate {
        p_tested: level.p(),
        verdict,
        method: Method::HpFeasibility,
        witness,
        residuals,
        samples_used: 0,
        tolerance: tol,
    })
}

/// Orthonormal basis of `{eᵀw = 0}` in ℝ³.
fn plane_basis() -> (Vector, Vector) {
    let s2 = 2f64.sqrt();
    let s6 = 6f64.sqrt();
    (Vector::from_vec(vec![1.0 / s2, -1.0 / s2, 0.0]), Vector::from_vec(vec![1.0 / s6, 1.0 / s6, -2.0 / s6]))
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Counter-clockwise convex hull (monotone chain); collinear and coincident
/// points within `merge_tol` are dropped.
pub fn convex_hull_2d(points: &[(f64, f64)], merge_tol: f64) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|a, b| (a.0 - b.0).abs() <= merge_tol && (a.1 - b.1).abs() <= merge_tol);
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= merge_tol {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Half-planes `{x ∈ E : aᵀx ≤ b}` whose intersection is `conv(Hᵀ)` for `r = 3`
/// (a slab or a box around the hull when it is degenerate).
fn hull_halfplanes_3(h: &Mat) -> Vec<(Vector, f64)> {
    let (u1, u2) = plane_basis();
    let pts: Vec<(f64, f64)> = h.row_iter().map(|row| {
        let x = row.transpose();
        (x.dot(&u1), x.dot(&u2))
    }).collect();
    let hull = convex_hull_2d(&pts, 1e-12);
    let lift = |n: (f64, f64)| &u1 * n.0 + &u2 * n.1;
    let offset = Vector::from_element(3, 1.0 / 3.0);
    let mut planes = Vec::new();
    let mut push = |n: (f64, f64), through: (f64, f64)| {
        let a = lift(n);
        // aᵀx on E equals aᵀ(e/3 + plane point) and aᵀe = 0
        let b = n.0 * through.0 + n.1 * through.1 + a.dot(&offset);
        planes.push((a, b));
    };
    match hull.len() {
        0 => {}
        1 => {
            let p = hull[0];
            for n in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
                push(n, p);
            }
        }
        2 => {
            let (p, q) = (hull[0], hull[1]);
            let len = ((q.0 - p.0).powi(2) + (q.1 - p.1).powi(2)).sqrt();
            let n = ((q.1 - p.1) / len, -(q.0 - p.0) / len);
            push(n, p);
            push((-n.0, -n.1), p);
            let t = ((q.0 - p.0) / len, (q.1 - p.1) / len);
            push(t, q);
            push((-t.0, -t.1), p);
        }
        k => {
            for i in 0..k {
                let (p, q) = (hull[i], hull[(i + 1) % k]);
                let len = ((q.0 - p.0).powi(2) + (q.1 - p.1).powi(2)).sqrt();
                // outward normal of a counter-clockwise edge
                push(((q.1 - p.1) / len, -(q.0 - p.0) / len), p);
            }
        }
    }
    planes
}

/// Exact containment test `Q_p ∩ Δ^r ⊆ conv(Hᵀ)` for `r ∈ {2, 3}`.
pub fn certify_pssc_exact(h: &Mat, level: &PsscLevel) -> Result<SscCertificate> {
    certify_pssc_exact_tol(h, level, EXACT_TOL)
}

pub fn certify_pssc_exact_tol(h: &Mat, level: &PsscLevel, tol: f64) -> Result<SscCertificate> {
    if !(2..=3).contains(&level.r()) || h.ncols() > 3 {
        return Err(Error::ExactCertificationLimit);
    }
    validate_stochastic(h, STOCHASTIC_TOL)?;
    check_level(h, level)?;
    let mut cert = SscCertificate {
        p_tested: level.p(),
        verdict: Verdict::Certified,
        method: Method::ExactFacet,
        witness: None,
        residuals: Vec::new(),
        samples_used: 0,
        tolerance: tol,
    };
    if level.r() == 2 {
        let (tmin, tmax) = h.column(0).iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| (lo.min(t), hi.max(t)));
        let half = level.radius() / 2f64.sqrt();
        let lo = (0.5 - half).max(0.0);
        let hi = (0.5 + half).min(1.0);
        cert.residuals = vec![tmin - lo, hi - tmax];
        if tmin > lo + tol {
            cert.verdict = Verdict::Falsified;
            cert.witness = Some(vec![lo, 1.0 - lo]);
        } else if tmax < hi - tol {
            cert.verdict = Verdict::Falsified;
            cert.witness = Some(vec![hi, 1.0 - hi]);
        }
        return Ok(cert);
    }
    for (a, b) in hull_halfplanes_3(h) {
        let (value, argmax) = support_qp_cap(&a, level)?;
        let excess = value - b;
        cert.residuals.push(excess);
        if excess > tol && cert.witness.is_none() {
            cert.verdict = Verdict::Falsified;
            cert.witness = Some(argmax.iter().copied().collect());
        }
    }
    Ok(cert)
}

/// Seeded search for a point of `∂Q_p ∩ Δ^r` outside `conv(Hᵀ)`.
///
/// Sample `i` uses its own generator seeded from `(seed, i)`, so the
/// reported witness is the lowest violating index regardless of threading.
pub fn falsify_pssc_sampled(h: &Mat, level: &PsscLevel, n_samples: usize, seed: u64) -> Result<SscCertificate> {
    validate_stochastic(h, STOCHASTIC_TOL)?;
    check_level(h, level)?;
    const CHUNK: usize = 2048;
    let tester = HullTester::from_rows(h);
    let mut start = 0usize;
    while start < n_samples {
        let end = (start + CHUNK).min(n_samples);
        let hit = (start..end)
            .into_par_iter()
            .filter_map(|i| {
                let mut rng = seeded(derive_seed(seed, i as u64));
                let x = sample_cap_boundary_anchored(level, &mut rng);
                match tester.test(&x, SAMPLED_TOL) {
                    Membership::Outside { margin, .. } => Some((i, x, margin)),
                    _ => None,
                }
            })
            .min_by_key(|(i, _, _)| *i);
        if let Some((i, x, margin)) = hit {
            return Ok(SscCertificate {
                p_tested: level.p(),
                verdict: Verdict::Falsified,
                method: Method::MonteCarlo,
                witness: Some(x.iter().copied().collect()),
                residuals: vec![margin],
                samples_used: i + 1,
                tolerance: SAMPLED_TOL,
            });
        }
        start = end;
    }
    Ok(SscCertificate {
        p_tested: level.p(),
        verdict: Verdict::Inconclusive,
        method: Method::MonteCarlo,
        witness: None,
        residuals: Vec::new(),
        samples_used: n_samples,
        tolerance: SAMPLED_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMode {
    Necessary,
    Exact,
}

/// Smallest level `p` whose check passes, by bisection.
///
/// The search starts on `[1, √(r−1)]`; when the check still fails at
/// `√(r−1)` it continues on `[√(r−1), √r)`, where `Q_p` is a ball strictly
/// inside the simplex. Passing is monotone in `p` because `Q_p` and the
/// columns of `H_p` both contract towards `e/r`.
pub fn estimate_max_p(h: &Mat, mode: EstimateMode, tol_p: f64) -> Result<f64> {
    validate_stochastic(h, STOCHASTIC_TOL)?;
    let r = h.ncols();
    if mode == EstimateMode::Exact && r > 3 {
        return Err(Error::ExactCertificationLimit);
    }
    let passes = |p: f64| -> Result<bool> {
        let level = PsscLevel::extended(r, p)?;
        Ok(match mode {
            EstimateMode::Necessary => check_hp_necessary(h, &level, NECESSARY_TOL)?.passes(),
            EstimateMode::Exact => certify_pssc_exact(h, &level)?.passes(),
        })
    };
    if passes(1.0)? {
        return Ok(1.0);
    }
    let standard_top = ((r - 1) as f64).sqrt();
    let (mut lo, mut hi) = if passes(standard_top)? {
        (1.0, standard_top)
    } else {
        let top = (r as f64).sqrt() * (1.0 - 1e-9);
        if !passes(top)? {
            return Err(Error::NotScattered);
        }
        (standard_top, top)
    };
    while hi - lo > tol_p {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
