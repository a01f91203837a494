//! Small dense numerical helpers shared by the torus, theta and probe code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Stacks real and imaginary parts: a complex `g×k` matrix becomes `2g×k`.
pub fn realify(m: &CMatrix) -> DMatrix<f64> {
    let g = m.nrows();
    DMatrix::from_fn(2 * g, m.ncols(), |i, j| if i < g { m[(i, j)].re } else { m[(i - g, j)].im })
}

pub fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.re)
}

pub fn imag_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.im)
}

pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn real_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Count of singular values above `rel · σ_max` (and above `abs_floor`).
pub fn numerical_rank(sv: &[f64], rel: f64, abs_floor: f64) -> usize {
    let top = sv.first().copied().unwrap_or(0.0);
    if top <= abs_floor {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel * top && s > abs_floor).count()
}

pub fn solve_real(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    a.clone().lu().solve(b).ok_or_else(|| Error::RankDeficient("singular real system".into()))
}

pub fn invert_real(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone().try_inverse().ok_or_else(|| Error::RankDeficient("singular real matrix".into()))
}

pub fn invert_complex(a: &CMatrix) -> Result<CMatrix> {
    a.clone().try_inverse().ok_or_else(|| Error::RankDeficient("singular complex matrix".into()))
}

pub fn is_positive_definite(m: &DMatrix<f64>, min_eig: f64) -> bool {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().all(|&l| l > min_eig)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Orthonormal basis (columns) of the column span, via SVD with a relative cutoff.
pub fn orthonormal_column_basis(m: &CMatrix, rel: f64) -> CMatrix {
    if m.ncols() == 0 {
        return CMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let top = svd.singular_values.max();
    let keep: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] > rel * top && top > 0.0).collect();
    CMatrix::from_fn(m.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// Orthonormal basis of the orthogonal complement of the row space.
pub fn null_space(m: &CMatrix, rel: f64) -> CMatrix {
    let n = m.ncols();
    if m.nrows() == 0 {
        return CMatrix::identity(n, n);
    }
    // pad so the SVD returns a full right factor
    let mut padded = CMatrix::zeros(m.nrows().max(n), n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested Vᵀ");
    let top = svd.singular_values.max();
    let small: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&k| top == 0.0 || svd.singular_values[k] <= rel * top).collect();
    CMatrix::from_fn(n, small.len(), |i, j| vt[(small[j], i)].conj())
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b);
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

/// Fractional part in `[0, 1)`, with values within `1e-10` of an integer
/// snapped to 0 so that roundoff does not put them next to 1.
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if !(1e-10..=1.0 - 1e-10).contains(&f) {
        0.0
    } else {
        f
    }
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

pub fn cnorm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_null_space() {
        let m = CMatrix::from_row_slice(1, 3, &[Complex64::new(1.0, 0.0), I, Complex64::new(0.0, 0.0)]);
        let ns = null_space(&m, 1e-12);
        assert_eq!(ns.ncols(), 2);
        assert!((&m * &ns).norm() < 1e-12);
        assert_eq!(numerical_rank(&singular_values(&m), 1e-6, 0.0), 1);
    }

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<Complex64> = (0..1000).map(|k| Complex64::new(k as f64, -(k as f64))).collect();
        let s = pairwise_sum(&xs);
        assert_eq!(s, Complex64::new(499500.0, -499500.0));
    }
}
