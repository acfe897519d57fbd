//! Least squares over the probability simplex.
//!
//! `min ½‖x − Ah‖²  s.t.  h ≥ 0, eᵀh = 1`, solved two ways:
//!
//! - [`SimplexLs::fit`]: FISTA with adaptive restart and the sort-based
//!   Euclidean projection onto the simplex. Cheap per iteration, any size.
//! - [`nearest_in_hull`]: Wolfe's minimum-norm-point active-set method on
//!   the translated columns `aᵢ − x`. Terminates with the exact minimiser,
//!   which the factorization solver needs at residuals near `1e−9`.

use crate::norms::{Mat, Vector};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 5000;

/// Euclidean projection onto `{h ≥ 0, eᵀh = 1}`.
pub fn project_simplex(v: &Vector) -> Vector {
    let n = v.len();
    if n == 0 {
        return v.clone();
    }
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.map(|vi| (vi - theta).max(0.0))
}

/// Outcome of one simplex-constrained fit.
#[derive(Debug, Clone)]
pub struct SimplexFit {
    pub h: Vector,
    /// `‖x − Ah‖`.
    pub residual: f64,
    /// Norm of the projected-gradient map at `h`.
    pub pg_norm: f64,
    pub iterations: usize,
}

/// A design matrix prepared for repeated simplex-constrained fits.
///
/// The Gram matrix and the Lipschitz constant are computed once; each call
/// to [`SimplexLs::fit`] then costs one pass over `Aᵀx` plus `O(k²)` per
/// iteration for `k` unknowns.
#[derive(Debug, Clone)]
pub struct SimplexLs {
    a: Mat,
    gram: Mat,
    step: f64,
}

impl SimplexLs {
    pub fn new(a: &Mat) -> Self {
        let gram = a.transpose() * a;
        // λ_max(AᵀA) from the smaller of the two Gram matrices
        let lmax = if a.nrows() < a.ncols() {
            (a * a.transpose()).symmetric_eigenvalues().max()
        } else {
            gram.symmetric_eigenvalues().max()
        };
        let step = if lmax > 0.0 { 1.0 / lmax } else { 1.0 };
        Self { a: a.clone(), gram, step }
    }

    pub fn design(&self) -> &Mat {
        &self.a
    }

    pub fn unknowns(&self) -> usize {
        self.a.ncols()
    }

    pub fn fit(&self, x: &Vector, tol: f64, max_iter: usize) -> SimplexFit {
        let k = self.unknowns();
        self.fit_from(x, &Vector::from_element(k, 1.0 / k as f64), tol, max_iter)
    }

    /// Fit starting from `h0` (projected onto the simplex first).
    pub fn fit_from(&self, x: &Vector, h0: &Vector, tol: f64, max_iter: usize) -> SimplexFit {
        let atx = self.a.transpose() * x;
        let xx = x.norm_squared();
        let objective = |h: &Vector, gh: &Vector| 0.5 * (h.dot(gh) - 2.0 * h.dot(&atx) + xx);

        let mut h = project_simplex(h0);
        let mut gh = &self.gram * &h;
        let mut f = objective(&h, &gh);
        let mut y = h.clone();
        let mut gy = gh.clone();
        let mut t = 1.0f64;
        let mut pg_norm = f64::INFINITY;
        let mut iterations = 0;

        for it in 0..max_iter {
            iterations = it + 1;
            let grad_y = &gy - &atx;
            let h_next = project_simplex(&(&y - &grad_y * self.step));
            let gh_next = &self.gram * &h_next;
            let f_next = objective(&h_next, &gh_next);

            // stationarity measured at the current iterate, not the extrapolated one
            let grad_h = &gh - &atx;
            let ph = project_simplex(&(&h - &grad_h * self.step));
            pg_norm = (&h - &ph).norm() / self.step;
            if pg_norm <= tol {
                break;
            }

            if f_next > f {
                // adaptive restart: drop momentum and take a plain projected step
                t = 1.0;
                y = h.clone();
                gy = gh.clone();
                let gph = &self.gram * &ph;
                let fph = objective(&ph, &gph);
                if fph <= f {
                    h = ph;
                    gh = gph;
                    f = fph;
                }
                continue;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            y = &h_next + (&h_next - &h) * beta;
            gy = &gh_next + (&gh_next - &gh) * beta;
            h = h_next;
            gh = gh_next;
            f = f_next;
            t = t_next;
        }
        let residual = (x - &self.a * &h).norm();
        SimplexFit { h, residual, pg_norm, iterations }
    }
}

/// Output of [`nearest_in_hull`].
#[derive(Debug, Clone)]
pub struct NearestPoint {
    /// Convex weights `h` of the nearest point `Ah`.
    pub h: Vector,
    /// `Ah − x`.
    pub offset: Vector,
}

impl NearestPoint {
    pub fn distance(&self) -> f64 {
        self.offset.norm()
    }
}

/// Exact solution of the simplex least-squares problem.
pub fn nearest_in_hull(a: &Mat, x: &Vector) -> NearestPoint {
    let (m, k) = a.shape();
    let y = Mat::from_fn(m, k, |i, j| a[(i, j)] - x[i]);
    let norms: Vec<f64> = y.column_iter().map(|c| c.norm_squared()).collect();
    let scale = norms.iter().copied().fold(0.0, f64::max).sqrt().max(f64::MIN_POSITIVE);
    let first = (0..k).min_by(|&p, &q| norms[p].total_cmp(&norms[q])).unwrap_or(0);
    let mut active = vec![first];
    let mut lambda = vec![1.0];
    let mut w = y.column(first).clone_owned();
    for _ in 0..50 * (k + m) {
        // x sits in the hull up to rounding
        if w.norm() <= 1e-14 * scale {
            break;
        }
        let scores = w.transpose() * &y;
        let (j, best) = scores.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        // optimality gap relative to ‖w‖, so tiny distances are resolved too
        if best >= w.norm_squared() - 1e-13 * w.norm() * scale || active.contains(&j) {
            break;
        }
        active.push(j);
        lambda.push(0.0);
        while let Some(alpha) = affine_minimizer(&y, &active) {
            if alpha.iter().all(|&t| t > 0.0) {
                lambda = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for (l, t) in lambda.iter().zip(&alpha) {
                if *t <= 0.0 {
                    theta = theta.min(l / (l - t));
                }
            }
            for (l, t) in lambda.iter_mut().zip(&alpha) {
                *l = theta * t + (1.0 - theta) * *l;
            }
            let keep: Vec<usize> = (0..active.len()).filter(|&i| lambda[i] > 1e-15).collect();
            if keep.is_empty() {
                break;
            }
            active = keep.iter().map(|&i| active[i]).collect();
            lambda = keep.iter().map(|&i| lambda[i]).collect();
            let s: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= s);
        }
        w = active.iter().zip(&lambda).fold(Vector::zeros(m), |acc, (&i, &l)| acc + y.column(i) * l);
    }
    let mut h = Vector::zeros(k);
    for (&i, &l) in active.iter().zip(&lambda) {
        h[i] = l;
    }
    NearestPoint { h, offset: w }
}

/// Weights `α` with `Σα = 1` minimising `‖Σ αᵢ yᵢ‖` over the active columns,
/// from a QR solve on differences to the first active column.
fn affine_minimizer(y: &Mat, active: &[usize]) -> Option<Vec<f64>> {
    let s = active.len();
    if s == 1 {
        return Some(vec![1.0]);
    }
    let base = y.column(active[0]);
    let d = Mat::from_fn(y.nrows(), s - 1, |i, j| y[(i, active[j + 1])] - base[i]);
    if d.nrows() < d.ncols() {
        return None;
    }
    let qr = d.qr();
    let diag = qr.r().diagonal().abs();
    if diag.min() <= 1e-12 * diag.max() {
        return None;
    }
    let rhs = -(qr.q().transpose() * base);
    let beta = qr.r().solve_upper_triangular(&rhs)?;
    if beta.iter().any(|b| !b.is_finite()) {
        return None;
    }
    let mut alpha = Vec::with_capacity(s);
    alpha.push(1.0 - beta.sum());
    alpha.extend(beta.iter().copied());
    Some(alpha)
}

/// One-shot convenience wrapper around [`SimplexLs`].
pub fn simplex_ls(w: &Mat, x: &Vector, tol: f64, max_iter: usize) -> Vector {
    SimplexLs::new(w).fit(x, tol, max_iter).h
}
