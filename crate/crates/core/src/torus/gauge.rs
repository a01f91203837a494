//! Matching `θ_A` on the product to type-`D` theta functions of the factors.
//!
//! On `u = (x, y)` the function `h(u) = e(−½uᵀQu − ℓᵀu)·θ_A(u)` has exactly
//! the automorphy of the product sections `θ[D⁻¹j + α, β](u, τ_P)`, so it is
//! a combination of products of `X`- and `Y`-sections. Here `e(t) = exp(2πit)`.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::lattice::IntMatrix;
use crate::linalg::{frac, imag_part, invert_real, real_part, CMatrix, CVector};
use crate::serde_num;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Gauge {
    #[serde(with = "serde_num::cmatrix")]
    pub q: CMatrix,
    #[serde(with = "serde_num::cvector")]
    pub l: CVector,
    #[serde(with = "serde_num::dvector")]
    pub alpha: DVector<f64>,
    #[serde(with = "serde_num::dvector")]
    pub beta: DVector<f64>,
    /// Diagonal of the product symplectic basis: `(D_X, D_Y)`.
    pub divisors: Vec<u64>,
    /// Largest violation of the exact relations the construction relies on.
    #[serde(with = "serde_num::float")]
    pub consistency: f64,
}

impl Gauge {
    /// `e(½uᵀQu + ℓᵀu)`
    pub fn factor(&self, u: &CVector) -> Complex64 {
        let quad = (u.transpose() * &self.q * u)[(0, 0)];
        let lin = (self.l.transpose() * u)[(0, 0)];
        (Complex64::new(0.0, 2.0 * std::f64::consts::PI) * (0.5 * quad + lin)).exp()
    }

    /// `log` of [`Gauge::factor`] divided by `2πi`.
    pub fn exponent(&self, u: &CVector) -> Complex64 {
        let quad = (u.transpose() * &self.q * u)[(0, 0)];
        let lin = (self.l.transpose() * u)[(0, 0)];
        0.5 * quad + lin
    }
}

pub(crate) fn compute_gauge(s: &Scenario) -> Result<Gauge> {
    let split = s.split()?;
    let g = s.g;
    let p = &split.product;
    let n = s.theta_coords();
    let tau_a = s.tau_a();

    let m_p_err = (&p.coord_change - CMatrix::identity(g, g)).camax();
    if m_p_err > 1e-12 {
        return Err(Error::Numerical("product coordinates are not normalized".into()));
    }
    let tau_p = &p.normalized_tau;
    let d: Vec<f64> = p.symplectic_divisors.iter().map(|&v| v as f64).collect();

    // A-symplectic coordinates (k; m) of the product symplectic basis, exactly
    let to_a = split.product_to_a.checked_mul(&p.symplectic_basis)?;
    let (ainv, den) = s.a.symplectic_basis.rational_inverse()?;
    let coords_num = ainv.checked_mul(&to_a)?;
    if den != 1 && (0..2 * g).any(|i| (0..2 * g).any(|j| coords_num[(i, j)] % den != 0)) {
        return Err(Error::Numerical("product lattice not inside A".into()));
    }
    let coords = IntMatrix::from_fn(2 * g, 2 * g, |i, j| coords_num[(i, j)] / den);
    let km = |j: usize| -> (CVector, CVector) {
        let k = CVector::from_fn(g, |i, _| Complex64::new(coords[(i, j)] as f64, 0.0));
        let m = CVector::from_fn(g, |i, _| Complex64::new(coords[(g + i, j)] as f64, 0.0));
        (k, m)
    };

    let mut consistency: f64 = 0.0;
    let nt = n.transpose();
    let mut q = CMatrix::zeros(g, g);
    for j in 0..g {
        let (k, m) = km(j);
        let mut lam = CVector::zeros(g);
        lam[j] = Complex64::new(d[j], 0.0);
        consistency = consistency.max((n * &lam - (&k + tau_a * &m)).camax());
        let col = -(&nt * &m) / Complex64::new(d[j], 0.0);
        q.set_column(j, &col);
    }
    consistency = consistency.max((&q - q.transpose()).camax());
    let q = (&q + q.transpose()) * Complex64::new(0.5, 0.0);

    let mut rho = CVector::zeros(g);
    let mut rho_t = CVector::zeros(g);
    for j in 0..g {
        let (_, m) = km(j);
        let mut lam = CVector::zeros(g);
        lam[j] = Complex64::new(d[j], 0.0);
        rho[j] = -0.5 * (m.transpose() * tau_a * &m)[(0, 0)] - 0.5 * (lam.transpose() * &q * &lam)[(0, 0)];

        let (k2, m2) = km(g + j);
        let lam2 = tau_p.column(j).into_owned();
        consistency = consistency.max((n * &lam2 - (&k2 + tau_a * &m2)).camax());
        let mut e_j = CVector::zeros(g);
        e_j[j] = Complex64::new(1.0, 0.0);
        consistency = consistency.max((&q * &lam2 - (&e_j - &nt * &m2)).camax());
        rho_t[j] = -0.5 * (m2.transpose() * tau_a * &m2)[(0, 0)] - 0.5 * (lam2.transpose() * &q * &lam2)[(0, 0)]
            + 0.5 * tau_p[(j, j)];
    }

    let im_l = DVector::from_fn(g, |j, _| rho[j].im / d[j]);
    let re_tau = real_part(tau_p);
    let im_tau = imag_part(tau_p);
    let rhs = rho_t.map(|z| z.im) - re_tau.transpose() * &im_l;
    let re_l = invert_real(&im_tau.transpose())? * rhs;
    let l = CVector::from_fn(g, |j, _| Complex64::new(re_l[j], im_l[j]));
    let alpha = DVector::from_fn(g, |j, _| rho[j].re / d[j] - re_l[j]);
    let tl = tau_p.transpose() * &l;
    let beta = DVector::from_fn(g, |j, _| tl[j].re - rho_t[j].re);

    Ok(Gauge {
        q,
        l,
        alpha: alpha.map(frac),
        beta: beta.map(frac),
        divisors: p.symplectic_divisors.clone(),
        consistency,
    })
}

/// Splits a product characteristic into its `X` and `Y` blocks.
pub fn split_vector(v: &DVector<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    (v.as_slice()[..n].to_vec(), v.as_slice()[n..].to_vec())
}
