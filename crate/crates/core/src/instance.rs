//! Synthetic instances `X = W Hᵀ + N`.
//!
//! `W` has prescribed singular values, `H` is row-stochastic with a known
//! scattering level and every column of `N` has norm at most `eps`. All
//! generators are pure functions of their seed.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::certify::{check_hp_necessary, estimate_max_p, EstimateMode, NECESSARY_TOL};
use crate::error::{Error, Result};
use crate::geometry::{build_hp, sample_cap_boundary_anchored, PsscLevel};
use crate::norms::{ensure_finite, frobenius, norm_12, sigma_r, Mat, Vector};
use crate::rng::{derive_seed, seeded, SeededRng};

const STOCHASTIC_TOL: f64 = 1e-12;
const FILLER_DRAWS: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaProfile {
    /// Explicit singular values, sorted descending.
    Values(Vec<f64>),
    /// `σ₁ = 1` down to `σ_r = 1/κ`, geometrically spaced.
    Kappa(f64),
}

impl SigmaProfile {
    pub fn values(&self, r: usize) -> Result<Vec<f64>> {
        let v = match self {
            SigmaProfile::Values(v) => {
                if v.len() != r {
                    return Err(Error::DimensionMismatch { expected: format!("{r} singular values"), got: format!("{}", v.len()) });
                }
                let mut v = v.clone();
                v.sort_by(|a, b| b.total_cmp(a));
                v
            }
            SigmaProfile::Kappa(k) => {
                if !(k.is_finite() && *k >= 1.0) {
                    return Err(Error::InvalidParameter(format!("condition number {k} must be ≥ 1")));
                }
                (0..r).map(|i| if r == 1 { 1.0 } else { k.powf(-(i as f64) / (r - 1) as f64) }).collect()
            }
        };
        if v.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidParameter("singular values must be positive".into()));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HMode {
    Separable,
    HpAnchored,
    BoundaryCap,
}

impl std::str::FromStr for HMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "separable" => Ok(HMode::Separable),
            "hp_anchored" => Ok(HMode::HpAnchored),
            "boundary_cap" => Ok(HMode::BoundaryCap),
            other => Err(Error::InvalidParameter(format!("unknown H mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Every column has norm exactly `eps`.
    Sphere,
    /// Column norms `eps·u^{1/m}` with `u` uniform: uniform in the ball.
    Ball,
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(NoiseMode::Sphere),
            "ball" => Ok(NoiseMode::Ball),
            other => Err(Error::InvalidParameter(format!("unknown noise mode {other:?}"))),
        }
    }
}

/// Knobs of [`gen_h_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HOptions {
    /// Rows placed on `∂Q_p ∩ Δ^r`; `None` means `4r` (hp_anchored) or 64 (boundary_cap).
    pub k: Option<usize>,
    /// Dirichlet concentration of filler rows.
    pub dirichlet_alpha: f64,
}

impl Default for HOptions {
    fn default() -> Self {
        Self { k: None, dirichlet_alpha: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HMeta {
    pub mode: HMode,
    pub k_requested: usize,
    /// Boundary rows actually placed (capped by the available rows).
    pub k_used: usize,
    pub dirichlet_alpha: f64,
    /// Smallest level at which `H` passes the recorded method's check.
    pub certified_p: Option<f64>,
    pub certificate_method: String,
    /// Inradius level of the boundary polygon, when it has a closed form.
    pub polygon_p: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GeneratedH {
    pub h: Mat,
    pub meta: HMeta,
}

/// Orthonormal `m × r` factor from the QR of a Gaussian matrix, signs fixed
/// so that `R` has a positive diagonal.
fn haar_columns(m: usize, r: usize, rng: &mut SeededRng) -> Mat {
    let g = Mat::from_fn(m, r, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let rmat = qr.r();
    for j in 0..r {
        if rmat[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `W = U diag(σ) Vᵀ` with Haar-distributed `U`, `V`.
pub fn gen_w(m: usize, r: usize, profile: &SigmaProfile, seed: u64) -> Result<Mat> {
    if r < 2 || m < r {
        return Err(Error::InvalidParameter(format!("need m ≥ r ≥ 2, got m = {m}, r = {r}")));
    }
    let sigma = profile.values(r)?;
    let mut rng = seeded(seed);
    let u = haar_columns(m, r, &mut rng);
    let v = haar_columns(r, r, &mut rng);
    Ok(u * Mat::from_diagonal(&Vector::from_vec(sigma)) * v.transpose())
}

fn dirichlet_row(r: usize, alpha: f64, rng: &mut SeededRng) -> Result<Vector> {
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::InvalidParameter(format!("Dirichlet concentration {alpha}: {e}")))?;
    loop {
        let g = Vector::from_fn(r, |_, _| gamma.sample(rng));
        let s = g.sum();
        if s > 0.0 && s.is_finite() {
            return Ok(g / s);
        }
    }
}

/// Clamp rounding negatives and renormalise a point meant to lie in `Δ^r`.
fn snap_to_simplex(mut x: Vector) -> Vector {
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    let s = x.sum();
    x / s
}

/// A point of the unit-sum plane given by its polar coordinates around `e/3`.
fn plane_point(rho: f64, theta: f64) -> Vector {
    let s2 = 2f64.sqrt();
    let s6 = 6f64.sqrt();
    let (c, s) = (theta.cos(), theta.sin());
    Vector::from_vec(vec![
        1.0 / 3.0 + rho * (c / s2 + s / s6),
        1.0 / 3.0 + rho * (-c / s2 + s / s6),
        1.0 / 3.0 + rho * (-2.0 * s / s6),
    ])
}

/// `k` points of `∂Q_p ∩ Δ³`: equally spaced on the circle when it lies
/// inside the simplex, otherwise spread over the three arcs left inside, with
/// both endpoints of each arc on the simplex edges.
///
/// Returns the points and the radius of a ball around `e/3` that their hull
/// is guaranteed to contain (intersected with the simplex).
pub fn boundary_cap_points(level: &PsscLevel, k: usize) -> Result<(Vec<Vector>, f64)> {
    if level.r() != 3 {
        return Err(Error::InvalidParameter("boundary_cap requires r = 3".into()));
    }
    if k < 3 {
        return Err(Error::InvalidParameter(format!("boundary_cap needs K ≥ 3, got {k}")));
    }
    let rho = level.radius();
    // distance from e/3 to each simplex edge in the plane
    let edge_dist = 1.0 / 6f64.sqrt();
    if rho <= edge_dist * (1.0 + 1e-12) {
        let pts = (0..k).map(|i| snap_to_simplex(plane_point(rho, 2.0 * PI * i as f64 / k as f64))).collect();
        return Ok((pts, rho * (PI / k as f64).cos()));
    }
    if k < 6 {
        return Err(Error::InvalidParameter(format!("boundary_cap below the inscribed level needs K ≥ 6, got {k}")));
    }
    let gamma = (edge_dist / rho).min(1.0).acos();
    let half = (PI / 3.0 - gamma).max(0.0);
    // arcs are centred on the vertex directions 30°, 150°, 270°
    let centres = [PI / 6.0, 5.0 * PI / 6.0, 3.0 * PI / 2.0];
    let mut pts = Vec::with_capacity(k);
    let mut max_step = 0.0f64;
    for (a, &c) in centres.iter().enumerate() {
        let count = k / 3 + usize::from(a < k % 3);
        let step = 2.0 * half / (count - 1) as f64;
        max_step = max_step.max(step);
        for j in 0..count {
            pts.push(snap_to_simplex(plane_point(rho, c - half + step * j as f64)));
        }
    }
    Ok((pts, rho * (max_step / 2.0).cos()))
}

/// Dirichlet draw conditioned on `‖x − e/r‖ ≤ radius`; after too many
/// rejections the last draw is pulled radially onto the ball.
fn dirichlet_in_ball(r: usize, alpha: f64, radius: f64, rng: &mut SeededRng) -> Result<Vector> {
    let c = Vector::from_element(r, 1.0 / r as f64);
    let mut last = c.clone();
    for _ in 0..FILLER_DRAWS {
        last = dirichlet_row(r, alpha, rng)?;
        if (&last - &c).norm() <= radius {
            return Ok(last);
        }
    }
    let d = &last - &c;
    let scale = radius / d.norm();
    Ok(snap_to_simplex(&c + d * scale))
}

fn check_rows(n: usize, r: usize) -> Result<()> {
    if r < 2 || n < r {
        return Err(Error::InvalidParameter(format!("need n ≥ r ≥ 2, got n = {n}, r = {r}")));
    }
    Ok(())
}

pub fn gen_h(n: usize, level: &PsscLevel, mode: HMode, seed: u64) -> Result<GeneratedH> {
    gen_h_with(n, level, mode, &HOptions::default(), seed)
}

/// Row-stochastic `H` (`n × r`) scattered at `level`.
///
/// - `Separable`: `e₁..e_r` then Dirichlet rows.
/// - `HpAnchored`: the columns of `H_p`, then `K` rows on `∂Q_p ∩ Δ^r`,
///   then Dirichlet rows.
/// - `BoundaryCap` (`r = 3`): `K` rows on `∂Q_p ∩ Δ³`, then Dirichlet rows
///   restricted to a ball the boundary polygon already covers, so the
///   polygon alone fixes the certified level.
pub fn gen_h_with(n: usize, level: &PsscLevel, mode: HMode, opts: &HOptions, seed: u64) -> Result<GeneratedH> {
    let r = level.r();
    check_rows(n, r)?;
    let alpha = opts.dirichlet_alpha;
    let mut rng = seeded(seed);
    let mut rows: Vec<Vector> = Vec::with_capacity(n);
    let mut meta = HMeta {
        mode,
        k_requested: 0,
        k_used: 0,
        dirichlet_alpha: alpha,
        certified_p: None,
        certificate_method: String::new(),
        polygon_p: None,
    };
    match mode {
        HMode::Separable => {
            rows.extend((0..r).map(|k| {
                let mut e = Vector::zeros(r);
                e[k] = 1.0;
                e
            }));
            while rows.len() < n {
                rows.push(dirichlet_row(r, alpha, &mut rng)?);
            }
            meta.certified_p = Some(1.0);
            meta.certificate_method = "separable_scan".into();
        }
        HMode::HpAnchored => {
            let k = opts.k.unwrap_or(4 * r);
            meta.k_requested = k;
            let hp = build_hp(level);
            rows.extend(hp.column_iter().map(|c| c.clone_owned()));
            let k_used = k.min(n - r);
            for _ in 0..k_used {
                rows.push(snap_to_simplex(sample_cap_boundary_anchored(level, &mut rng)));
            }
            meta.k_used = k_used;
            while rows.len() < n {
                rows.push(dirichlet_row(r, alpha, &mut rng)?);
            }
        }
        HMode::BoundaryCap => {
            if r != 3 {
                return Err(Error::InvalidParameter("boundary_cap requires r = 3".into()));
            }
            let k = opts.k.unwrap_or(64);
            meta.k_requested = k;
            let k_used = k.min(n);
            let (pts, inner) = boundary_cap_points(level, k_used)?;
            meta.k_used = k_used;
            if level.radius() <= (1.0 / 6f64.sqrt()) * (1.0 + 1e-12) {
                meta.polygon_p = Some(PsscLevel::from_radius(3, inner)?.p());
            }
            rows.extend(pts);
            while rows.len() < n {
                rows.push(dirichlet_in_ball(r, alpha, inner, &mut rng)?);
            }
        }
    }
    let h = Mat::from_fn(n, r, |i, j| rows[i][j]);
    match mode {
        HMode::Separable => {}
        HMode::HpAnchored | HMode::BoundaryCap if r == 3 => {
            meta.certified_p = estimate_max_p(&h, EstimateMode::Exact, 1e-9).ok();
            meta.certificate_method = "exact_facet".into();
        }
        HMode::HpAnchored | HMode::BoundaryCap => {
            let cert = check_hp_necessary(&h, level, NECESSARY_TOL)?;
            if !cert.passes() {
                return Err(Error::Invariant(format!("hp_anchored H fails the necessary check at p = {}", level.p())));
            }
            meta.certificate_method = "hp_feasibility".into();
        }
    }
    Ok(GeneratedH { h, meta })
}

/// `m × n` noise with every column norm at most `eps`.
pub fn gen_noise(m: usize, n: usize, eps: f64, mode: NoiseMode, seed: u64) -> Result<Mat> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be finite and ≥ 0")));
    }
    let mut out = Mat::zeros(m, n);
    if eps == 0.0 || m == 0 {
        return Ok(out);
    }
    let mut rng = seeded(seed);
    for j in 0..n {
        let g = loop {
            let g = Vector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
            if g.norm() > 0.0 {
                break g;
            }
        };
        let radius = match mode {
            NoiseMode::Sphere => eps,
            NoiseMode::Ball => eps * rng.random::<f64>().powf(1.0 / m as f64),
        };
        let mut col = &g * (radius / g.norm());
        // guard against rounding above the cap
        while col.norm() > radius {
            col *= 1.0 - f64::EPSILON;
        }
        out.set_column(j, &col);
    }
    Ok(out)
}

/// Generator choices recorded alongside an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenMeta {
    pub w_profile: Option<SigmaProfile>,
    pub h: Option<HMeta>,
    pub noise_mode: Option<NoiseMode>,
    pub certified_p: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub x: Mat,
    pub w_sharp: Mat,
    pub h_sharp: Mat,
    pub n_sharp: Mat,
    pub eps: f64,
    pub level: PsscLevel,
    pub seed: u64,
    pub gen_meta: GenMeta,
}

impl Instance {
    pub fn m(&self) -> usize {
        self.x.nrows()
    }
    pub fn n(&self) -> usize {
        self.x.ncols()
    }
    pub fn r(&self) -> usize {
        self.w_sharp.ncols()
    }
}

/// Builds `X = W Hᵀ + N` and checks every instance invariant.
pub fn assemble(w: Mat, h: Mat, n: Mat, level: PsscLevel, eps: f64, seed: u64, gen_meta: GenMeta) -> Result<Instance> {
    for mat in [&w, &h, &n] {
        ensure_finite(mat)?;
    }
    let (m, r) = w.shape();
    if h.ncols() != r || level.r() != r {
        return Err(Error::DimensionMismatch { expected: format!("H with {r} columns at level r = {r}"), got: format!("H {}×{}, level r = {}", h.nrows(), h.ncols(), level.r()) });
    }
    if n.shape() != (m, h.nrows()) {
        return Err(Error::DimensionMismatch { expected: format!("N {m}×{}", h.nrows()), got: format!("{}×{}", n.nrows(), n.ncols()) });
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::Invariant(format!("eps = {eps} must be finite and ≥ 0")));
    }
    for (i, row) in h.row_iter().enumerate() {
        if row.iter().any(|&v| v < 0.0) || (row.sum() - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::Invariant(format!("H row {i} is not in the probability simplex")));
        }
    }
    let noise = norm_12(&n)?;
    if noise > eps * (1.0 + 1e-14) {
        return Err(Error::Invariant(format!("norm_12(N) = {noise:e} exceeds eps = {eps:e}")));
    }
    if sigma_r(&w, r)? <= 0.0 {
        return Err(Error::Invariant("W is rank deficient".into()));
    }
    let x = &w * h.transpose() + &n;
    let recon = frobenius(&(&x - &w * h.transpose() - &n));
    if recon > 1e-12 * frobenius(&x).max(f64::MIN_POSITIVE) {
        return Err(Error::Invariant(format!("reconstruction residual {recon:e}")));
    }
    Ok(Instance { x, w_sharp: w, h_sharp: h, n_sharp: n, eps, level, seed, gen_meta })
}

/// Everything needed to generate one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub p: f64,
    pub eps: f64,
    pub profile: SigmaProfile,
    pub h_mode: HMode,
    #[serde(default)]
    pub h_options: HOptions,
    pub noise_mode: NoiseMode,
    pub seed: u64,
}

/// Generates `W`, `H` and `N` from seeds derived from `spec.seed`.
pub fn generate(spec: &InstanceSpec) -> Result<Instance> {
    let level = PsscLevel::extended(spec.r, spec.p)?;
    let w = gen_w(spec.m, spec.r, &spec.profile, derive_seed(spec.seed, 0))?;
    let gh = gen_h_with(spec.n, &level, spec.h_mode, &spec.h_options, derive_seed(spec.seed, 1))?;
    let noise = gen_noise(spec.m, spec.n, spec.eps, spec.noise_mode, derive_seed(spec.seed, 2))?;
    let meta = GenMeta {
        w_profile: Some(spec.profile.clone()),
        certified_p: gh.meta.certified_p,
        h: Some(gh.meta),
        noise_mode: Some(spec.noise_mode),
    };
    assemble(w, gh.h, noise, level, spec.eps, spec.seed, meta)
}
