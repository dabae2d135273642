//! Small dense linear-algebra helpers.

use nalgebra::DMatrix;

use crate::{Error, Result, C64};

/// Relative singular-value cutoff used by [`pseudo_inverse`].
pub const PINV_RCOND: f64 = 1e-10;

/// Moore–Penrose pseudoinverse through a thin SVD.
///
/// Singular values below `rcond · σ_max` are treated as zero. Returns the
/// pseudoinverse and the numerical rank.
pub fn pseudo_inverse(a: &DMatrix<C64>, rcond: f64) -> Result<(DMatrix<C64>, usize)> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::Pseudoinverse("empty matrix".into()));
    }
    if a.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::Pseudoinverse("matrix has non-finite entries".into()));
    }
    let svd = a.clone().svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Pseudoinverse("SVD did not return singular vectors".into())),
    };
    let sigma_max = svd.singular_values.max();
    if sigma_max <= 0.0 {
        return Err(Error::Pseudoinverse("matrix is identically zero".into()));
    }
    let cutoff = rcond * sigma_max;
    let mut rank = 0;
    // A⁺ = V Σ⁺ Uᴴ
    let mut scaled_v = v_t.adjoint();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        let inv = if s > cutoff {
            rank += 1;
            1.0 / s
        } else {
            0.0
        };
        scaled_v.column_mut(k).scale_mut(inv);
    }
    Ok((scaled_v * u.adjoint(), rank))
}
