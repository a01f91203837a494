//! Bases of `H⁰(L)` for a type-`D` polarization on `C^m / (D·Z^m + τ·Z^m)`:
//! the functions `θ[D⁻¹j + α, β](z, τ)` for `j ∈ ⊕ Z/dᵢ` share one automorphy
//! factor and are linearly independent.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eval::{ThetaCharacteristic, ThetaEvaluator, ThetaValue};
use crate::error::{Error, Result};
use crate::lattice::PolarizationType;
use crate::linalg::{CMatrix, CVector};
use crate::serde_num;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectionBasis {
    #[serde(with = "serde_num::cmatrix")]
    pub tau: CMatrix,
    /// Diagonal of the lattice `D·Z^m + τ·Z^m` (the type, possibly unsorted).
    pub divisors: Vec<u64>,
    pub characteristics: Vec<ThetaCharacteristic>,
}

/// `j` runs over `⊕ Z/dᵢ` in lexicographic order.
fn residues(divisors: &[u64]) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for &d in divisors {
        out = out.into_iter().flat_map(|prefix| (0..d).map(move |k| [prefix.clone(), vec![k]].concat())).collect();
    }
    out
}

impl SectionBasis {
    pub fn with_shift(tau: &CMatrix, divisors: &[u64], alpha: &[f64], beta: &[f64]) -> Result<Self> {
        let m = divisors.len();
        if tau.nrows() != m || tau.ncols() != m || alpha.len() != m || beta.len() != m {
            return Err(Error::DimensionMismatch("section basis data".into()));
        }
        let characteristics = residues(divisors)
            .into_iter()
            .map(|j| {
                let a = (0..m).map(|i| j[i] as f64 / divisors[i] as f64 + alpha[i]).collect();
                ThetaCharacteristic::new(a, beta.to_vec())
            })
            .collect();
        Ok(Self { tau: tau.clone(), divisors: divisors.to_vec(), characteristics })
    }

    pub fn len(&self) -> usize {
        self.characteristics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.characteristics.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.divisors.len()
    }

    /// The lattice `(D | τ)` the sections live on.
    pub fn lattice_basis(&self) -> CMatrix {
        let m = self.dim();
        let mut b = CMatrix::zeros(m, 2 * m);
        for i in 0..m {
            b[(i, i)] = Complex64::new(self.divisors[i] as f64, 0.0);
        }
        b.view_mut((0, m), (m, m)).copy_from(&self.tau);
        b
    }

    pub fn evaluator(&self, eps: f64) -> Result<ThetaEvaluator> {
        ThetaEvaluator::new(&self.tau, eps)
    }

    /// All sections at `z`; they share the same `log_scale`.
    pub fn eval_all(&self, ev: &ThetaEvaluator, z: &CVector, order: usize) -> Result<Vec<ThetaValue>> {
        self.characteristics.iter().map(|c| ev.eval(c, z, order)).collect()
    }

    /// Scaled values as a vector.
    pub fn values(&self, ev: &ThetaEvaluator, z: &CVector) -> Result<CVector> {
        let vals = self.eval_all(ev, z, 0)?;
        Ok(CVector::from_iterator(vals.len(), vals.iter().map(|v| v.value)))
    }
}

/// Standard basis for type `D`. For even `dᵢ` the representative has
/// `bᵢ = ½` (a symmetric bundle whose base points are not 2-torsion).
pub fn section_basis(tau: &CMatrix, d: &PolarizationType) -> Result<SectionBasis> {
    let beta: Vec<f64> = d.divisors.iter().map(|&di| if di % 2 == 0 { 0.5 } else { 0.0 }).collect();
    SectionBasis::with_shift(tau, &d.divisors, &vec![0.0; d.dim()], &beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residue_enumeration() {
        assert_eq!(residues(&[1, 2]), vec![vec![0, 0], vec![0, 1]]);
        assert_eq!(residues(&[2, 2]).len(), 4);
        assert_eq!(residues(&[1, 1]).len(), 1);
    }

    #[test]
    fn principal_has_one_section() {
        let tau = CMatrix::identity(2, 2) * crate::linalg::I;
        assert_eq!(section_basis(&tau, &PolarizationType::principal(2)).unwrap().len(), 1);
    }
}
