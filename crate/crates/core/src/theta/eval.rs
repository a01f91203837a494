//! Riemann theta functions with characteristics,
//! `θ[a,b](z, τ) = Σ_n e(½(n+a)ᵀτ(n+a) + (n+a)ᵀ(z+b))`, `e(t) = exp(2πit)`.
//!
//! Values are returned scaled by `exp(−π·yᵀY⁻¹y)` (`y = Im z`, `Y = Im τ`),
//! which removes the exponential growth along the lattice; the exponent is
//! reported as `log_scale`.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};

use crate::error::{Error, Result};
use crate::linalg::{frac, imag_part, min_eigenvalue, pairwise_sum, CMatrix, CVector};
use crate::serde_num;

pub const DEFAULT_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaCharacteristic {
    #[serde(with = "serde_num::float_vec")]
    pub a: Vec<f64>,
    #[serde(with = "serde_num::float_vec")]
    pub b: Vec<f64>,
}

impl ThetaCharacteristic {
    /// Entries are reduced to `[0, 1)`.
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Self {
        let red = |v: Vec<f64>| v.into_iter().map(frac).collect();
        Self { a: red(a), b: red(b) }
    }

    pub fn zero(g: usize) -> Self {
        Self { a: vec![0.0; g], b: vec![0.0; g] }
    }

    pub fn half(g: usize) -> Self {
        Self { a: vec![0.5; g], b: vec![0.5; g] }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }
}

#[derive(Clone, Debug)]
pub struct ThetaValue {
    pub value: Complex64,
    /// True value = `value · exp(log_scale)`; derivatives scale the same way.
    pub log_scale: f64,
    pub gradient: Option<CVector>,
    pub hessian: Option<CMatrix>,
    /// Bound on the truncation error of every returned (scaled) quantity.
    pub error_bound: f64,
}

impl ThetaValue {
    pub fn unscaled(&self) -> Complex64 {
        self.value * self.log_scale.exp()
    }

    pub fn gradient(&self) -> &CVector {
        self.gradient.as_ref().expect("gradient requested")
    }

    pub fn hessian(&self) -> &CMatrix {
        self.hessian.as_ref().expect("hessian requested")
    }
}

/// Cached data for repeated evaluation at a fixed `τ`.
#[derive(Clone, Debug)]
pub struct ThetaEvaluator {
    tau: CMatrix,
    tau_flat: Vec<Complex64>,
    g: usize,
    y_inv: DMatrix<f64>,
    /// Upper-triangular `U` with `Im τ = UᵀU`.
    chol_u: DMatrix<f64>,
    eps: f64,
    /// Squared ellipsoid radius per derivative order, in the metric `π·Y`.
    radius2: [f64; 3],
}

fn tail_bound(g: usize, rho: f64, r: f64) -> f64 {
    if r <= rho / 2.0 {
        return f64::INFINITY;
    }
    let a = g as f64 / 2.0;
    let x = (r - rho / 2.0).powi(2);
    a * (2.0 / rho).powi(g as i32) * gamma_ur(a, x) * gamma(a)
}

/// Smallest radius whose Gaussian tail bound is below `eps`, plus a margin.
fn radius_for(g: usize, rho: f64, eps: f64) -> f64 {
    let mut r = rho / 2.0 + 0.5;
    while tail_bound(g, rho, r) > eps {
        r += 0.05;
        if r > 200.0 {
            break;
        }
    }
    r + 0.5
}

impl ThetaEvaluator {
    pub fn new(tau: &CMatrix, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::NonPositiveEps);
        }
        let g = tau.nrows();
        if tau.ncols() != g {
            return Err(Error::DimensionMismatch("tau must be square".into()));
        }
        let y = imag_part(tau);
        let y = (&y + y.transpose()) * 0.5;
        if min_eigenvalue(&y) <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        let chol = Cholesky::<f64, Dyn>::new(y.clone()).ok_or(Error::NotPositiveDefinite)?;
        let chol_u = chol.l().transpose();
        let y_inv = chol.inverse();
        let rho = (PI * min_eigenvalue(&y)).sqrt();
        // derivatives carry polynomial weights; tighten the target accordingly
        let radius2 = [
            radius_for(g, rho, eps).powi(2),
            radius_for(g, rho, eps * 1e-3).powi(2),
            radius_for(g, rho, eps * 1e-6).powi(2),
        ];
        let tau_flat = (0..g * g).map(|k| tau[(k / g, k % g)]).collect();
        Ok(Self { tau: tau.clone(), tau_flat, g, y_inv, chol_u, eps, radius2 })
    }

    pub fn tau(&self) -> &CMatrix {
        &self.tau
    }

    pub fn dim(&self) -> usize {
        self.g
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Integer points `n` with `π·(n−c)ᵀY(n−c) ≤ r²`.
    fn ellipsoid(&self, c: &DVector<f64>, r2: f64) -> Vec<i64> {
        let g = self.g;
        let u = &self.chol_u;
        let bound = r2 / PI;
        let mut out = Vec::new();
        let mut n = vec![0i64; g];
        let mut partial = vec![0.0f64; g + 1];
        self.descend(g, c, u, bound, &mut n, &mut partial, &mut out);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        level: usize,
        c: &DVector<f64>,
        u: &DMatrix<f64>,
        bound: f64,
        n: &mut Vec<i64>,
        partial: &mut Vec<f64>,
        out: &mut Vec<i64>,
    ) {
        if level == 0 {
            out.extend_from_slice(n);
            return;
        }
        let i = level - 1;
        let uii = u[(i, i)];
        let shift: f64 = (i + 1..self.g).map(|j| u[(i, j)] * (n[j] as f64 - c[j])).sum::<f64>() / uii;
        let rem = bound - partial[level];
        if rem < 0.0 {
            return;
        }
        let w = rem.sqrt() / uii;
        let center = c[i] - shift;
        let lo = (center - w).ceil() as i64;
        let hi = (center + w).floor() as i64;
        for k in lo..=hi {
            let t = uii * (k as f64 - center);
            partial[i] = partial[level] + t * t;
            n[i] = k;
            self.descend(i, c, u, bound, n, partial, out);
        }
    }

    pub fn eval(&self, ch: &ThetaCharacteristic, z: &CVector, order: usize) -> Result<ThetaValue> {
        let g = self.g;
        if z.len() != g || ch.dim() != g {
            return Err(Error::DimensionMismatch("point or characteristic length".into()));
        }
        if order > 2 {
            return Err(Error::OutOfRange("derivative order must be 0, 1 or 2".into()));
        }
        let a = DVector::from_column_slice(&ch.a);
        let zb = CVector::from_fn(g, |i, _| z[i] + ch.b[i]);
        let yv = zb.map(|w| w.im);
        let vstar = -(&self.y_inv * &yv);
        let log_scale = PI * yv.dot(&(&self.y_inv * &yv));
        let c = &vstar - &a;
        let points = self.ellipsoid(&c, self.radius2[order]);

        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        let pi_i = Complex64::new(0.0, PI);
        let count = points.len() / g.max(1);
        let mut vs = vec![0.0f64; points.len()];
        let mut vals = Vec::with_capacity(count);
        for p in 0..count {
            let v = &mut vs[p * g..(p + 1) * g];
            for i in 0..g {
                v[i] = points[p * g + i] as f64 + a[i];
            }
            let mut quad = Complex64::new(0.0, 0.0);
            let mut lin = Complex64::new(0.0, 0.0);
            for i in 0..g {
                let mut row = Complex64::new(0.0, 0.0);
                for j in 0..g {
                    row += self.tau_flat[i * g + j] * v[j];
                }
                quad += row * v[i];
                lin += zb[i] * v[i];
            }
            vals.push((pi_i * quad + two_pi_i * lin - log_scale).exp());
        }
        let value = pairwise_sum(&vals);

        let mut comp = vec![Complex64::new(0.0, 0.0); count];
        let gradient = (order >= 1).then(|| {
            CVector::from_fn(g, |k, _| {
                for p in 0..count {
                    comp[p] = vals[p] * vs[p * g + k];
                }
                two_pi_i * pairwise_sum(&comp)
            })
        });
        let hessian = (order >= 2).then(|| {
            let mut h = CMatrix::zeros(g, g);
            for k in 0..g {
                for l in k..g {
                    for p in 0..count {
                        comp[p] = vals[p] * (vs[p * g + k] * vs[p * g + l]);
                    }
                    let s = two_pi_i * two_pi_i * pairwise_sum(&comp);
                    h[(k, l)] = s;
                    h[(l, k)] = s;
                }
            }
            h
        });
        Ok(ThetaValue { value, log_scale, gradient, hessian, error_bound: self.eps })
    }

    /// Evaluation with the ellipsoid radius scaled by `factor` (for checks of
    /// the truncation policy).
    pub fn eval_with_radius_factor(&self, ch: &ThetaCharacteristic, z: &CVector, factor: f64) -> Result<Complex64> {
        let mut wide = self.clone();
        for r in wide.radius2.iter_mut() {
            *r *= factor * factor;
        }
        Ok(wide.eval(ch, z, 0)?.value)
    }
}

pub fn riemann_theta(
    ch: &ThetaCharacteristic,
    z: &CVector,
    tau: &CMatrix,
    eps: f64,
    derivative_order: usize,
) -> Result<ThetaValue> {
    ThetaEvaluator::new(tau, eps)?.eval(ch, z, derivative_order)
}

/// Exponent `t` of the automorphy factor `e(t)` of `θ[a,b]` for the shift
/// `z → z + k + τm`.
pub fn automorphy_exponent(ch: &ThetaCharacteristic, z: &CVector, tau: &CMatrix, k: &[i64], m: &[i64]) -> Complex64 {
    let g = z.len();
    let kv = CVector::from_fn(g, |i, _| Complex64::new(k[i] as f64, 0.0));
    let mv = CVector::from_fn(g, |i, _| Complex64::new(m[i] as f64, 0.0));
    let av = CVector::from_fn(g, |i, _| Complex64::new(ch.a[i], 0.0));
    let zb = CVector::from_fn(g, |i, _| z[i] + ch.b[i]);
    // z → z + k: e(aᵀk); then z + k → z + k + τm: e(−½mᵀτm − mᵀ(z + k + b))
    (av.transpose() * &kv)[(0, 0)] - 0.5 * (mv.transpose() * tau * &mv)[(0, 0)] - (mv.transpose() * (zb + kv))[(0, 0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::I;

    #[test]
    fn odd_characteristic_vanishes_at_origin() {
        let tau = CMatrix::from_element(1, 1, Complex64::new(0.3, 1.2));
        let v = riemann_theta(&ThetaCharacteristic::half(1), &CVector::zeros(1), &tau, 1e-12, 0).unwrap();
        assert!(v.value.norm() < 1e-13);
    }

    #[test]
    fn theta_constant_at_i() {
        // direct summation over |n| ≤ 30
        let direct: f64 = (-30i64..=30).map(|n| (-PI * (n * n) as f64).exp()).sum();
        let tau = CMatrix::from_element(1, 1, I);
        let v = riemann_theta(&ThetaCharacteristic::zero(1), &CVector::zeros(1), &tau, 1e-12, 0).unwrap();
        assert!((v.value - direct).norm() < 1e-13);
        assert!((direct - 1.086_434_811_213_308).abs() < 1e-14);
    }

    #[test]
    fn bad_inputs() {
        let tau = CMatrix::from_element(1, 1, Complex64::new(0.0, -1.0));
        assert!(matches!(ThetaEvaluator::new(&tau, 1e-12), Err(Error::NotPositiveDefinite)));
        assert!(matches!(ThetaEvaluator::new(&CMatrix::from_element(1, 1, I), 0.0), Err(Error::NonPositiveEps)));
    }
}
