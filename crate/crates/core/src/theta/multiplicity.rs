//! Vanishing to order two of `θ_A` at a point.

use serde::{Deserialize, Serialize};

use super::ambient::AmbientTheta;
use crate::error::Result;
use crate::linalg::CVector;
use crate::serde_num;

pub const DEFAULT_MULTIPLICITY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiplicityProbe {
    pub passed: bool,
    /// `|θ_A(p)| / scale`
    #[serde(with = "serde_num::float")]
    pub value: f64,
    /// `‖∇θ_A(p)‖ / scale` in normalized coordinates
    #[serde(with = "serde_num::float")]
    pub gradient: f64,
    #[serde(with = "serde_num::float")]
    pub hessian: f64,
}

/// Values are scaled by the median `|θ_A|`; both the value and the gradient
/// must fall below `tol`.
pub fn multiplicity_two_probe(amb: &AmbientTheta, p: &CVector, tol: f64) -> Result<MultiplicityProbe> {
    let v = amb.eval_normalized(p, 2)?;
    let value = v.value.norm() / amb.scale;
    let gradient = v.gradient().norm() / amb.scale;
    let hessian = v.hessian().norm() / amb.scale;
    Ok(MultiplicityProbe { passed: value < tol && gradient < tol, value, gradient, hessian })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theta::random_point;
    use crate::torus::{control_example, seeded_rng};

    #[test]
    fn generic_point_off_divisor_fails() {
        let s = control_example(2, 5).unwrap();
        let amb = AmbientTheta::new(&s, crate::theta::DEFAULT_EPS).unwrap();
        let p = random_point(&amb.torus, &mut seeded_rng(1));
        let probe = multiplicity_two_probe(&amb, &p, DEFAULT_MULTIPLICITY_TOL).unwrap();
        assert!(!probe.passed);
        assert!(probe.value > 1e-3);
    }
}
