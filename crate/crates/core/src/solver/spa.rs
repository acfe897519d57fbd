//! Successive projection algorithm.

use crate::error::{Error, Result};
use crate::norms::Mat;

/// Greedy column selection: take the column of largest norm, project every
/// column onto its orthogonal complement, repeat `r` times.
///
/// Returns the selected indices (in selection order) and the matching
/// columns of `x`. Ties go to the lowest index.
pub fn spa(x: &Mat, r: usize) -> Result<(Vec<usize>, Mat)> {
    let (m, n) = x.shape();
    if x.is_empty() || r == 0 {
        return Err(Error::EmptyInput);
    }
    if r > n || r > m {
        return Err(Error::InvalidParameter(format!("cannot extract {r} columns from a {m}×{n} matrix")));
    }
    let mut residual = x.clone();
    let mut norms: Vec<f64> = residual.column_iter().map(|c| c.norm_squared()).collect();
    let scale = norms.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Degenerate("all-zero data matrix".into()));
    }
    let mut selected = Vec::with_capacity(r);
    for _ in 0..r {
        let mut best = 0;
        for (j, &v) in norms.iter().enumerate() {
            if v > norms[best] {
                best = j;
            }
        }
        if norms[best] <= 1e-28 * scale {
            return Err(Error::Degenerate(format!("numerical rank below {r}")));
        }
        selected.push(best);
        let u = residual.column(best) / norms[best].sqrt();
        let coeffs = u.transpose() * &residual;
        residual -= &u * coeffs;
        for (j, c) in residual.column_iter().enumerate() {
            norms[j] = c.norm_squared();
        }
        norms[best] = 0.0;
    }
    Ok((selected.clone(), x.select_columns(&selected)))
}
