//! Closed-form geometry of the expanded scattering condition.
//!
//! On the unit-sum hyperplane `E = {x : eᵀx = 1}` the ice-cream cone
//! `S_p = {x : eᵀx ≥ p‖x‖}` cuts out the ball `Q_p` centred at `e/r` with
//! radius `ρ_p = √(1/p² − 1/r)`. A row-stochastic `H` satisfies the level-`p`
//! condition exactly when `Q_p ∩ Δ^r ⊆ conv(Hᵀ)`, and the matrix
//! `H_p = α_p E + (1 − rα_p) I` collects the points where the segments
//! `e/r → e_i` leave `S_p`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{Mat, Vector};

/// Absolute tolerance on cone inequalities.
pub const CONE_TOL: f64 = 1e-12;

/// Largest `r` accepted by [`support_qp_cap`] (the oracle visits `2^r − 1` faces).
pub const SUPPORT_MAX_R: usize = 12;

/// Scattering level `(r, p)` with the derived `q = √(r − p²)`.
///
/// [`PsscLevel::new`] enforces the regime `1 ≤ p ≤ √(r−1)` in which the
/// robustness bounds are stated. [`PsscLevel::extended`] admits any
/// `1 ≤ p < √r`, where `Q_p` is still a proper ball; certification and purity
/// estimation need that range because a finite sample of `∂Q_p` only ever
/// certifies a level strictly above `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsscLevel {
    r: usize,
    p: f64,
    q: f64,
}

impl PsscLevel {
    pub fn new(r: usize, p: f64) -> Result<Self> {
        let level = Self::extended(r, p)?;
        let pmax = ((r - 1) as f64).sqrt();
        if p > pmax * (1.0 + 1e-14) {
            return Err(Error::InvalidLevel(format!("p = {p} exceeds √(r−1) = {pmax} for r = {r}")));
        }
        Ok(level)
    }

    pub fn extended(r: usize, p: f64) -> Result<Self> {
        if r < 2 {
            return Err(Error::InvalidLevel(format!("r = {r} < 2")));
        }
        if !p.is_finite() || p < 1.0 {
            return Err(Error::InvalidLevel(format!("p = {p} < 1")));
        }
        let rf = r as f64;
        if p * p >= rf {
            return Err(Error::InvalidLevel(format!("p = {p} ≥ √r: Q_p is degenerate")));
        }
        Ok(Self { r, p, q: (rf - p * p).sqrt() })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `p ≤ √(r−1)`.
    pub fn is_standard(&self) -> bool {
        self.p <= ((self.r - 1) as f64).sqrt() * (1.0 + 1e-14)
    }

    /// `ρ_p²`, the squared radius of `Q_p` within `E`.
    pub fn radius_sq(&self) -> f64 {
        1.0 / (self.p * self.p) - 1.0 / self.r as f64
    }

    pub fn radius(&self) -> f64 {
        self.radius_sq().max(0.0).sqrt()
    }

    pub fn ball(&self) -> QpBall {
        QpBall { level: *self, radius: self.radius() }
    }

    /// Level whose ball has the given radius: `1/p² = 1/r + ρ²`.
    pub fn from_radius(r: usize, radius: f64) -> Result<Self> {
        let inv_p_sq = 1.0 / r as f64 + radius * radius;
        Self::extended(r, inv_p_sq.sqrt().recip())
    }
}

/// The ball `Q_p` inside the unit-sum hyperplane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpBall {
    pub level: PsscLevel,
    pub radius: f64,
}

impl QpBall {
    pub fn center(&self) -> Vector {
        Vector::from_element(self.level.r, 1.0 / self.level.r as f64)
    }

    /// Membership in `Q_p ∩ Δ^r`.
    pub fn contains_in_simplex(&self, x: &Vector, tol: f64) -> bool {
        let r = self.level.r;
        if x.len() != r || x.iter().any(|&v| v < -tol) || (x.sum() - 1.0).abs() > tol {
            return false;
        }
        let c = 1.0 / r as f64;
        let d2: f64 = x.iter().map(|v| (v - c) * (v - c)).sum();
        d2 <= self.radius * self.radius + tol
    }
}

pub fn alpha_p(level: &PsscLevel) -> f64 {
    let r = level.r as f64;
    (1.0 - level.q / (level.p * (r - 1.0).sqrt())) / r
}

/// `H_p = α_p E + (1 − rα_p) I`; each column lies on `∂S_p ∩ Δ^r`.
pub fn build_hp(level: &PsscLevel) -> Mat {
    let r = level.r;
    let a = alpha_p(level);
    let diag = 1.0 - r as f64 * a;
    Mat::from_fn(r, r, |i, j| if i == j { a + diag } else { a })
}

/// Closed form of `σ_r(H_p) = q / (p √(r−1))`.
pub fn hp_sigma_min(level: &PsscLevel) -> f64 {
    level.q / (level.p * ((level.r - 1) as f64).sqrt())
}

/// Closed form of `‖H_p⁻¹‖₁ = (2(r−1)^{3/2} p/q − (r−2)) / r`.
pub fn hp_inv_norm1(level: &PsscLevel) -> f64 {
    let r = level.r as f64;
    (2.0 * (r - 1.0).powf(1.5) * level.p / level.q - (r - 2.0)) / r
}

/// Uniform pixel purity implied by the level, `γ = 1/p`.
pub fn purity_from_p(level: &PsscLevel) -> f64 {
    1.0 / level.p
}

fn check_dim(x: &Vector, r: usize) -> Result<()> {
    if x.len() != r {
        return Err(Error::DimensionMismatch { expected: format!("length {r}"), got: format!("length {}", x.len()) });
    }
    Ok(())
}

/// `x ∈ S_p`: `eᵀx ≥ p‖x‖` up to `tol`.
pub fn in_cone_sp(x: &Vector, p: f64, tol: f64) -> bool {
    x.sum() >= p * x.norm() - tol
}

/// `x ∈ C_p = S_p ∩ ℝ^r_+` with the default tolerance.
pub fn in_cone_cp(x: &Vector, level: &PsscLevel) -> Result<bool> {
    in_cone_cp_tol(x, level, CONE_TOL)
}

pub fn in_cone_cp_tol(x: &Vector, level: &PsscLevel, tol: f64) -> Result<bool> {
    check_dim(x, level.r)?;
    Ok(x.iter().all(|&v| v >= -tol) && in_cone_sp(x, level.p, tol))
}

/// Maximum of `aᵀx` over `Q_p ∩ Δ^r`, with a maximizer.
///
/// Visits every face `{x_S = 0}` of the simplex. Within the affine hull of
/// a face the ball restricts to a ball around `e_T/|T|`, where the linear
/// functional is maximized in closed form; candidates that leave the face
/// are discarded. The true maximizer lies in the relative interior of some
/// face, so the best surviving candidate is exact.
pub fn support_qp_cap(a: &Vector, level: &PsscLevel) -> Result<(f64, Vector)> {
    let r = level.r;
    if r > SUPPORT_MAX_R {
        return Err(Error::SupportOracleLimit);
    }
    check_dim(a, r)?;
    let rf = r as f64;
    let center = Vector::from_element(r, 1.0 / rf);
    if a.iter().all(|&v| v == 0.0) {
        return Ok((0.0, center));
    }
    let rho_sq = level.radius_sq();
    let feas_tol = 1e-12;
    let a_norm = a.norm();

    let mut best: Option<(f64, Vector)> = None;
    let mut idx = Vec::with_capacity(r);
    for mask in 1u32..(1u32 << r) {
        idx.clear();
        idx.extend((0..r).filter(|&i| mask & (1 << i) != 0));
        let t = idx.len() as f64;
        let s = rf - t;
        let shift = s / (rf * rf) + t * (1.0 / t - 1.0 / rf).powi(2);
        let reff_sq = rho_sq - shift;
        if reff_sq < -1e-14 {
            continue;
        }
        let reff = reff_sq.max(0.0).sqrt();
        let mean = idx.iter().map(|&i| a[i]).sum::<f64>() / t;
        let mut dev: Vec<f64> = idx.iter().map(|&i| a[i] - mean).collect();
        let dev_mean = dev.iter().sum::<f64>() / t;
        dev.iter_mut().for_each(|d| *d -= dev_mean);
        let dir_norm = dev.iter().map(|d| d * d).sum::<f64>().sqrt();
        let mut x = Vector::zeros(r);
        // a direction at rounding level is constant on the face
        let flat = dir_norm <= 1e-12 * a_norm;
        for (&i, d) in idx.iter().zip(&dev) {
            x[i] = 1.0 / t;
            if !flat {
                x[i] += reff * d / dir_norm;
            }
        }
        if idx.iter().any(|&i| x[i] < -feas_tol) {
            continue;
        }
        let value = a.dot(&x);
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, x));
        }
    }
    // The centre face (all coordinates free) always survives for p < √r.
    Ok(best.unwrap_or_else(|| (a.dot(&center), center)))
}

/// Minimum of `yᵀx` over `Q_p ∩ Δ^r`.
pub fn min_over_cap(y: &Vector, level: &PsscLevel) -> Result<(f64, Vector)> {
    let (v, x) = support_qp_cap(&(-y), level)?;
    Ok((-v, x))
}

/// How dual-cone membership is decided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualMethod {
    /// Exact support oracle (r ≤ 12).
    Exact,
    /// Seeded cap samples; a `false` answer is a proof, `true` is not.
    Sampled { n_samples: usize, seed: u64 },
}

/// Membership in `C_p^* = S_q + ℝ^r_+`.
pub fn in_dual_cp(y: &Vector, level: &PsscLevel, method: DualMethod) -> Result<bool> {
    check_dim(y, level.r)?;
    match method {
        DualMethod::Exact => Ok(min_over_cap(y, level)?.0 >= -CONE_TOL),
        DualMethod::Sampled { n_samples, seed } => {
            let mut rng = crate::rng::seeded(seed);
            for _ in 0..n_samples {
                let x = sample_cap_point(level, &mut rng);
                if y.dot(&x) < -CONE_TOL {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Uniform direction on the unit sphere of `{w : eᵀw = 0}`.
pub fn random_plane_direction<R: Rng + ?Sized>(r: usize, rng: &mut R) -> Vector {
    loop {
        let mut w = Vector::from_fn(r, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mean = w.mean();
        w.add_scalar_mut(-mean);
        let n = w.norm();
        if n > 1e-12 {
            return w / n;
        }
    }
}

/// One draw on `∂Q_p`; `None` when it falls outside the simplex.
pub fn sample_cap_boundary<R: Rng + ?Sized>(level: &PsscLevel, rng: &mut R) -> Option<Vector> {
    let r = level.r;
    let w = random_plane_direction(r, rng);
    let mut x = w * level.radius();
    x.add_scalar_mut(1.0 / r as f64);
    if x.iter().all(|&v| v >= 0.0) {
        Some(x)
    } else {
        None
    }
}

/// A point of `∂Q_p ∩ Δ^r` that always succeeds.
///
/// Tries [`sample_cap_boundary`] a few times, then perturbs the direction of
/// a random column of `H_p` (which lies on `∂Q_p ∩ Δ^r`) by a shrinking
/// amount until the boundary point stays in the simplex. Near `p = 1` this
/// is the only practical route, since the cap boundary shrinks onto the
/// vertices.
pub fn sample_cap_boundary_anchored<R: Rng + ?Sized>(level: &PsscLevel, rng: &mut R) -> Vector {
    for _ in 0..64 {
        if let Some(x) = sample_cap_boundary(level, rng) {
            return x;
        }
    }
    let r = level.r;
    let c = 1.0 / r as f64;
    let hp = build_hp(level);
    let k = rng.random_range(0..r);
    let anchor = hp.column(k).add_scalar(-c);
    let base = anchor.norm();
    let rho = level.radius();
    if base <= 0.0 {
        return hp.column(k).clone_owned();
    }
    let mut s = 1.0;
    for _ in 0..60 {
        let g = random_plane_direction(r, rng);
        let w = &anchor / base + g * s;
        let mut x = &w * (rho / w.norm());
        x.add_scalar_mut(c);
        if x.iter().all(|&v| v >= 0.0) {
            return x;
        }
        s *= 0.5;
    }
    hp.column(k).clone_owned()
}

/// A point of `Q_p ∩ Δ^r`: random direction, radius drawn up to the first
/// of the ball boundary and the simplex boundary.
pub fn sample_cap_point<R: Rng + ?Sized>(level: &PsscLevel, rng: &mut R) -> Vector {
    let r = level.r;
    let c = 1.0 / r as f64;
    let w = random_plane_direction(r, rng);
    let mut tmax = level.radius();
    for &wi in w.iter() {
        if wi < 0.0 {
            tmax = tmax.min(c / -wi);
        }
    }
    let u: f64 = rng.random();
    let t = tmax * u.powf(1.0 / (r - 1) as f64);
    let mut x = w * t;
    x.add_scalar_mut(c);
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    x
}

/// A point of `S_q + ℝ^r_+`, scaled by a positive factor.
pub fn sample_dual_point<R: Rng + ?Sized>(level: &PsscLevel, rng: &mut R) -> Vector {
    let r = level.r;
    let dual_radius = (1.0 / (level.q * level.q) - 1.0 / r as f64).max(0.0).sqrt();
    let w = random_plane_direction(r, rng);
    let u: f64 = rng.random();
    let mut y = w * (dual_radius * u.powf(1.0 / (r - 1) as f64));
    y.add_scalar_mut(1.0 / r as f64);
    let scale: f64 = rng.random_range(0.1..10.0);
    let mut out = y * scale;
    for v in out.iter_mut() {
        if rng.random_bool(0.5) {
            *v += rng.random_range(0.0..2.0);
        }
    }
    out
}
