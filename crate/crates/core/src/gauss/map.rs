//! The Gauss map `p ↦ [∇θ_A(p)]` on the smooth part of the theta divisor and
//! its differential in an affine chart.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, singular_values, CMatrix, CVector};
use crate::serde_num;
use crate::theta::AmbientTheta;

/// Vanishing and rank thresholds, all relative to the median `|θ_A|` or to
/// the largest singular value.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Gates {
    #[serde(with = "serde_num::float")]
    pub on_divisor: f64,
    #[serde(with = "serde_num::float")]
    pub smooth: f64,
    #[serde(with = "serde_num::float")]
    pub rank: f64,
    #[serde(with = "serde_num::float")]
    pub annihilator: f64,
    #[serde(with = "serde_num::float")]
    pub multiplicity: f64,
}

impl Default for Gates {
    fn default() -> Self {
        Self { on_divisor: 1e-8, smooth: 1e-4, rank: 1e-6, annihilator: 1e-6, multiplicity: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    OffDivisor,
    Smooth,
    Singular,
    /// Gradient between the singular and smooth thresholds.
    Undetermined,
}

pub fn classify(amb: &AmbientTheta, p: &CVector, gates: &Gates) -> Result<PointClass> {
    let v = amb.eval_normalized(p, 1)?;
    if v.value.norm() >= gates.on_divisor * amb.scale {
        return Ok(PointClass::OffDivisor);
    }
    let grad = v.gradient().norm();
    Ok(if grad > gates.smooth * amb.scale {
        PointClass::Smooth
    } else if grad < gates.multiplicity * amb.scale {
        PointClass::Singular
    } else {
        PointClass::Undetermined
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaussSample {
    #[serde(with = "serde_num::cvector")]
    pub point: CVector,
    /// `∇θ_A` in ambient coordinates (scaled like the value).
    #[serde(with = "serde_num::cvector")]
    pub gradient: CVector,
    /// Gradient with its first non-negligible coordinate set to 1.
    #[serde(with = "serde_num::cvector")]
    pub projective_image: CVector,
    /// Rank of the differential on the probe directions (0 when none given).
    pub jacobian_rank: usize,
    #[serde(with = "serde_num::float_vec")]
    pub singular_values: Vec<f64>,
}

/// Projective class representative: divided by the first coordinate whose
/// modulus is not negligible against the largest one.
pub fn canonical_projective(xi: &CVector) -> CVector {
    let max = xi.camax();
    let k = xi.iter().position(|c| c.norm() > 1e-8 * max).unwrap_or(0);
    let lead = xi[k];
    xi.map(|c| c / lead)
}

/// Differential of `p ↦ [∇θ(p)]` along the columns of `dirs`, in the affine
/// chart where the largest gradient coordinate is 1.
pub fn gauss_differential(xi: &CVector, hessian: &CMatrix, dirs: &CMatrix) -> CMatrix {
    let k = argmax_abs(xi);
    let xk = xi[k];
    let hv = hessian * dirs;
    let phi = xi.map(|c| c / xk);
    let mut out = CMatrix::zeros(xi.len(), dirs.ncols());
    for j in 0..dirs.ncols() {
        let col = (hv.column(j) - &phi * hv[(k, j)]) / xk;
        out.set_column(j, &col);
    }
    out
}

fn argmax_abs(xi: &CVector) -> usize {
    (0..xi.len()).max_by(|&a, &b| xi[a].norm().total_cmp(&xi[b].norm())).unwrap_or(0)
}

/// Numerical rank of the chart differential. Singular values are compared
/// with the largest one and with the size `‖H‖·‖V‖/|ξ_k|` the differential
/// would have if it did not degenerate.
pub fn differential_rank(xi: &CVector, hessian: &CMatrix, dirs: &CMatrix, rel: f64) -> (usize, Vec<f64>) {
    let d = gauss_differential(xi, hessian, dirs);
    let sv = singular_values(&d);
    let xk = xi.camax();
    let floor = rel * hessian.norm() * dirs.norm() / xk;
    (numerical_rank(&sv, rel, floor), sv)
}

pub fn gauss_sample(amb: &AmbientTheta, p: &CVector, dirs: Option<&CMatrix>, gates: &Gates) -> Result<GaussSample> {
    match classify(amb, p, gates)? {
        PointClass::OffDivisor => return Err(Error::NotOnDivisor),
        PointClass::Singular | PointClass::Undetermined => return Err(Error::GaussUndefined),
        PointClass::Smooth => {}
    }
    let v = amb.eval(p, if dirs.is_some() { 2 } else { 1 })?;
    let xi = v.gradient().clone();
    let (jacobian_rank, sv) = match dirs {
        Some(d) => differential_rank(&xi, v.hessian(), d, gates.rank),
        None => (0, Vec::new()),
    };
    Ok(GaussSample {
        point: p.clone(),
        projective_image: canonical_projective(&xi),
        gradient: xi,
        jacobian_rank,
        singular_values: sv,
    })
}

/// Two projective classes agree within `tol` after canonical normalization.
pub fn same_projective_class(a: &CVector, b: &CVector, tol: f64) -> bool {
    let (na, nb) = (canonical_projective(a), canonical_projective(b));
    (na - nb).camax() < tol
}

/// Newton along the complex line `u0 + t·d` for a zero of `θ_A`.
pub fn zero_on_line(amb: &AmbientTheta, u0: &CVector, d: &CVector, tol: f64) -> Result<Option<CVector>> {
    let mut t = Complex64::new(0.0, 0.0);
    for _ in 0..80 {
        let u = u0 + d * t;
        let v = amb.eval(&u, 1)?;
        if v.value.norm() < tol * 1e-3 * amb.scale {
            return Ok(Some(u));
        }
        let slope = (v.gradient().transpose() * d)[(0, 0)];
        if slope.norm() == 0.0 {
            return Ok(None);
        }
        let step = v.value / slope;
        t -= step;
        if !t.re.is_finite() || t.norm() > 10.0 {
            return Ok(None);
        }
    }
    let u = u0 + d * t;
    Ok((amb.eval_normalized(&u, 0)?.value.norm() < tol * amb.scale).then_some(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theta::{random_point, DEFAULT_EPS};
    use crate::torus::{control_example, seeded_rng};

    fn point_on_theta(amb: &AmbientTheta, seed: u64) -> CVector {
        let mut rng = seeded_rng(seed);
        loop {
            let u0 = random_point(&amb.torus, &mut rng);
            let d = random_point(&amb.torus, &mut rng);
            if let Some(p) = zero_on_line(amb, &u0, &d, 1e-8).unwrap() {
                return p;
            }
        }
    }

    #[test]
    fn gauss_image_is_even() {
        let s = control_example(2, 11).unwrap();
        let amb = AmbientTheta::new(&s, DEFAULT_EPS).unwrap();
        let p = point_on_theta(&amb, 2);
        let g = Gates::default();
        let a = gauss_sample(&amb, &p, None, &g).unwrap();
        let b = gauss_sample(&amb, &(-&p), None, &g).unwrap();
        assert!(same_projective_class(&a.gradient, &b.gradient, 1e-8));
        let scaled = a.gradient.map(|c| c * Complex64::new(-3.0, 0.5));
        assert!(same_projective_class(&a.gradient, &scaled, 1e-10));
    }

    #[test]
    fn off_divisor_is_rejected() {
        let s = control_example(2, 11).unwrap();
        let amb = AmbientTheta::new(&s, DEFAULT_EPS).unwrap();
        let p = random_point(&amb.torus, &mut seeded_rng(9));
        assert!(matches!(gauss_sample(&amb, &p, None, &Gates::default()), Err(Error::NotOnDivisor)));
    }

    #[test]
    fn differential_matches_finite_differences() {
        let s = control_example(2, 11).unwrap();
        let amb = AmbientTheta::new(&s, DEFAULT_EPS).unwrap();
        let p = point_on_theta(&amb, 3);
        let v = amb.eval(&p, 2).unwrap();
        let xi = v.gradient().clone();
        let dir = CMatrix::from_column_slice(2, 1, &[-xi[1], xi[0]]);
        let d = gauss_differential(&xi, v.hessian(), &dir);
        let k = argmax_abs(&xi);
        let chart = |u: &CVector| {
            let v = amb.eval(u, 1).unwrap();
            let g = v.gradient().clone();
            let gk = g[k];
            g.map(|c| c / gk)
        };
        let h = 1e-5;
        let col = dir.column(0).into_owned();
        let fd = (chart(&(&p + &col * Complex64::new(h, 0.0))) - chart(&(&p - &col * Complex64::new(h, 0.0))))
            / Complex64::new(2.0 * h, 0.0);
        let err = (&fd - d.column(0)).norm() / d.column(0).norm();
        assert!(err < 1e-6, "{err}");
    }
}
