//! Dense-matrix helpers: the column-wise norms used by the noise model,
//! SVD-based spectral quantities, the Gram volume and the pseudoinverse.
//!
//! Every matrix in the crate is a plain [`nalgebra::DMatrix<f64>`]. Entry
//! points that accept user data call [`ensure_finite`] once; the helpers here
//! assume finite input.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Default relative truncation for [`pseudoinverse`].
pub const PINV_RTOL: f64 = 1e-12;

pub fn ensure_finite(a: &Mat) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn ensure_nonempty(a: &Mat) -> Result<()> {
    if a.is_empty() {
        Err(Error::EmptyInput)
    } else {
        Ok(())
    }
}

/// Largest Euclidean column norm, `‖A‖₁,₂`.
pub fn norm_12(a: &Mat) -> Result<f64> {
    ensure_nonempty(a)?;
    Ok(a.column_iter().map(|c| c.norm()).fold(0.0, f64::max))
}

/// Induced 1-norm: the largest absolute column sum.
pub fn norm_1_induced(a: &Mat) -> Result<f64> {
    ensure_nonempty(a)?;
    Ok(a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

pub fn frobenius(a: &Mat) -> f64 {
    a.norm()
}

/// Singular values in descending order.
pub fn singular_values(a: &Mat) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn spectral_norm(a: &Mat) -> Result<f64> {
    ensure_nonempty(a)?;
    Ok(singular_values(a)[0])
}

/// The `r`-th largest singular value (1-based).
pub fn sigma_r(a: &Mat, r: usize) -> Result<f64> {
    let k = a.nrows().min(a.ncols());
    if r == 0 || r > k {
        return Err(Error::IndexOutOfRange { index: r, max: k });
    }
    Ok(singular_values(a)[r - 1])
}

/// `‖A‖ / σ_min(A)` over the min(rows, cols) singular values.
pub fn condition_number(a: &Mat) -> Result<f64> {
    ensure_nonempty(a)?;
    let s = singular_values(a);
    Ok(s[0] / s[s.len() - 1])
}

/// Squared volume `det(WᵀW)`, computed as `Π R_ii²` from a QR factorization of `W`.
pub fn gram_volume(w: &Mat) -> f64 {
    let (m, r) = w.shape();
    if r == 0 {
        return 1.0;
    }
    if r > m {
        return 0.0;
    }
    let qr = w.clone().qr();
    qr.r().diagonal().iter().map(|d| d * d).product()
}

/// Moore–Penrose pseudoinverse with singular values below `rtol·σ₁` dropped.
pub fn pseudoinverse_with_tol(w: &Mat, rtol: f64) -> Mat {
    let (m, n) = w.shape();
    if w.is_empty() {
        return Mat::zeros(n, m);
    }
    let svd = w.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = rtol * smax;
    let mut out = Mat::zeros(n, m);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            out += (vt.row(k).transpose() / s) * u.column(k).transpose();
        }
    }
    out
}

pub fn pseudoinverse(w: &Mat) -> Mat {
    pseudoinverse_with_tol(w, PINV_RTOL)
}
