use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{frobenius_normal_form, IntAlternatingForm, IntMatrix, PolarizationType};
use crate::linalg::{complexify, imag_part, invert_complex, min_eigenvalue, realify, solve_real, CMatrix, CVector};
use crate::serde_num;

/// Tolerance for identities that hold exactly in theory.
pub const LINEAR_TOL: f64 = 1e-10;

/// `C^g / Λ` with `Λ` spanned by the `2g` columns of `lattice_basis`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexTorus {
    #[serde(with = "serde_num::cmatrix")]
    pub lattice_basis: CMatrix,
}

impl ComplexTorus {
    pub fn new(lattice_basis: CMatrix) -> Result<Self> {
        let g = lattice_basis.nrows();
        if g == 0 || lattice_basis.ncols() != 2 * g {
            return Err(Error::DimensionMismatch(format!(
                "lattice basis must be g x 2g, got {}x{}",
                g,
                lattice_basis.ncols()
            )));
        }
        let r = realify(&lattice_basis);
        let scale = r.amax().max(1.0);
        let sv = crate::linalg::real_singular_values(&r);
        if sv.last().copied().unwrap_or(0.0) <= 1e-12 * scale {
            return Err(Error::RankDeficient("lattice vectors are not real-linearly independent".into()));
        }
        Ok(Self { lattice_basis })
    }

    pub fn dim(&self) -> usize {
        self.lattice_basis.nrows()
    }

    pub fn covolume(&self) -> f64 {
        realify(&self.lattice_basis).determinant().abs()
    }

    /// Real coordinates of `z` in the lattice basis.
    pub fn lattice_coords(&self, z: &CVector) -> Result<DVector<f64>> {
        let g = self.dim();
        let rhs = DVector::from_fn(2 * g, |i, _| if i < g { z[i].re } else { z[i - g].im });
        solve_real(&realify(&self.lattice_basis), &rhs)
    }

    pub fn from_lattice_coords(&self, c: &DVector<f64>) -> CVector {
        &self.lattice_basis * c.map(|x| Complex64::new(x, 0.0))
    }

    /// Representative with lattice coordinates in `[0, 1)`.
    pub fn reduce(&self, z: &CVector) -> Result<CVector> {
        let c = self.lattice_coords(z)?;
        Ok(self.from_lattice_coords(&c.map(|x| x - x.floor())))
    }

    /// Lattice-coordinate distance between two points modulo the lattice.
    pub fn distance_mod_lattice(&self, a: &CVector, b: &CVector) -> Result<f64> {
        let c = self.lattice_coords(&(a - b))?;
        Ok(c.iter().map(|x| (x - x.round()).abs()).fold(0.0, f64::max))
    }
}

/// Outcome of [`check_riemann_relations`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RiemannCheck {
    pub holds: bool,
    /// `‖JᵀEJ − E‖_max` with `J` multiplication by `i` in lattice coordinates.
    #[serde(with = "serde_num::float")]
    pub compatibility_residual: f64,
    /// Smallest eigenvalue of the symmetric form `E(x, iy)`.
    #[serde(with = "serde_num::float")]
    pub min_eigenvalue: f64,
}

/// Multiplication by `i` expressed in real lattice coordinates.
pub fn complex_structure_matrix(torus: &ComplexTorus) -> Result<DMatrix<f64>> {
    let g = torus.dim();
    let r = realify(&torus.lattice_basis);
    let mut std = DMatrix::zeros(2 * g, 2 * g);
    for k in 0..g {
        std[(k, g + k)] = -1.0;
        std[(g + k, k)] = 1.0;
    }
    let rinv = crate::linalg::invert_real(&r)?;
    Ok(rinv * std * r)
}

pub fn check_riemann_relations(torus: &ComplexTorus, e: &IntAlternatingForm) -> Result<RiemannCheck> {
    if e.dim() != 2 * torus.dim() {
        return Err(Error::DimensionMismatch(format!(
            "form of rank {} on a torus of dimension {}",
            e.dim(),
            torus.dim()
        )));
    }
    let j = complex_structure_matrix(torus)?;
    let em = e.matrix().to_f64();
    let residual = (j.transpose() * &em * &j - &em).amax();
    let sym = &em * &j;
    let asym = (&sym - sym.transpose()).amax();
    let min_eig = min_eigenvalue(&sym);
    let scale = em.amax().max(1.0) * j.amax().max(1.0);
    let compat = residual.max(asym);
    Ok(RiemannCheck {
        holds: compat <= LINEAR_TOL * scale * j.amax().max(1.0) && min_eig > LINEAR_TOL,
        compatibility_residual: compat,
        min_eigenvalue: min_eig,
    })
}

/// Complex torus with a polarization, normalized so that in the coordinates
/// `w = M·z` the lattice becomes `D·Z^g + τ·Z^g`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolarizedTorus {
    pub torus: ComplexTorus,
    pub form: IntAlternatingForm,
    #[serde(rename = "type")]
    pub ty: PolarizationType,
    /// Columns `λ₁…λ_g, μ₁…μ_g` (lattice coordinates) of a symplectic basis.
    pub symplectic_basis: IntMatrix,
    /// `E(λᵢ, μᵢ)`; equals the type up to ordering.
    pub symplectic_divisors: Vec<u64>,
    #[serde(with = "serde_num::cmatrix")]
    pub coord_change: CMatrix,
    #[serde(with = "serde_num::cmatrix")]
    pub normalized_tau: CMatrix,
}

impl PolarizedTorus {
    pub fn new(torus: ComplexTorus, form: IntAlternatingForm) -> Result<Self> {
        let check = check_riemann_relations(&torus, &form)?;
        if !check.holds {
            return Err(Error::NotAPolarization);
        }
        let (ty, u) = frobenius_normal_form(&form)?;
        let divisors = ty.divisors.clone();
        Self::assemble(torus, form, ty, u.into_matrix(), divisors)
    }

    /// Uses the given symplectic basis instead of the Frobenius one.
    pub fn with_symplectic_basis(torus: ComplexTorus, form: IntAlternatingForm, basis: IntMatrix) -> Result<Self> {
        let check = check_riemann_relations(&torus, &form)?;
        if !check.holds {
            return Err(Error::NotAPolarization);
        }
        let g = torus.dim();
        let gram = basis.congruence(form.matrix())?;
        let mut divisors = Vec::with_capacity(g);
        for i in 0..g {
            let d = gram[(i, g + i)];
            if d <= 0 {
                return Err(Error::Numerical("basis is not symplectic".into()));
            }
            divisors.push(d as u64);
        }
        let expected = IntMatrix::from_fn(2 * g, 2 * g, |i, j| {
            if j == i + g {
                divisors[i] as i64
            } else if i == j + g {
                -(divisors[j] as i64)
            } else {
                0
            }
        });
        if gram != expected {
            return Err(Error::Numerical("basis is not symplectic".into()));
        }
        let (ty, _) = frobenius_normal_form(&form)?;
        Self::assemble(torus, form, ty, basis, divisors)
    }

    /// Torus with lattice basis `(D | τ)` and the standard form of type `D`.
    pub fn from_normalized(tau: CMatrix, ty: &PolarizationType) -> Result<Self> {
        let g = ty.dim();
        if tau.nrows() != g || tau.ncols() != g {
            return Err(Error::DimensionMismatch("tau must be g x g".into()));
        }
        let mut basis = CMatrix::zeros(g, 2 * g);
        for i in 0..g {
            basis[(i, i)] = Complex64::new(ty.divisors[i] as f64, 0.0);
        }
        basis.view_mut((0, g), (g, g)).copy_from(&tau);
        Self::new(ComplexTorus::new(basis)?, IntAlternatingForm::standard(ty))
    }

    fn assemble(
        torus: ComplexTorus,
        form: IntAlternatingForm,
        ty: PolarizationType,
        basis: IntMatrix,
        divisors: Vec<u64>,
    ) -> Result<Self> {
        let g = torus.dim();
        let pu = &torus.lattice_basis * complexify(&basis.to_f64());
        let p1 = pu.columns(0, g).into_owned();
        let p2 = pu.columns(g, g).into_owned();
        let d =
            CMatrix::from_diagonal(&DVector::from_iterator(g, divisors.iter().map(|&x| Complex64::new(x as f64, 0.0))));
        let m = d * invert_complex(&p1)?;
        let tau = &m * p2;
        let scale = tau.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if (&tau - tau.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max) > 1e-9 * scale {
            return Err(Error::NotAPolarization);
        }
        let tau = (&tau + tau.transpose()) * Complex64::new(0.5, 0.0);
        if min_eigenvalue(&imag_part(&tau)) <= 0.0 {
            return Err(Error::NotAPolarization);
        }
        Ok(Self {
            torus,
            form,
            ty,
            symplectic_basis: basis,
            symplectic_divisors: divisors,
            coord_change: m,
            normalized_tau: tau,
        })
    }

    pub fn dim(&self) -> usize {
        self.torus.dim()
    }

    /// `(D | τ)`, the lattice in normalized coordinates.
    pub fn normalized_lattice_basis(&self) -> CMatrix {
        let g = self.dim();
        let mut b = CMatrix::zeros(g, 2 * g);
        for i in 0..g {
            b[(i, i)] = Complex64::new(self.symplectic_divisors[i] as f64, 0.0);
        }
        b.view_mut((0, g), (g, g)).copy_from(&self.normalized_tau);
        b
    }

    pub fn normalized_torus(&self) -> Result<ComplexTorus> {
        ComplexTorus::new(self.normalized_lattice_basis())
    }
}

/// `(τ, D)` of a polarized torus.
pub fn normalized_period_matrix(p: &PolarizedTorus) -> (CMatrix, PolarizationType) {
    (p.normalized_tau.clone(), p.ty.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::I;

    fn g1() -> ComplexTorus {
        ComplexTorus::new(CMatrix::from_row_slice(1, 2, &[Complex64::new(1.0, 0.0), I])).unwrap()
    }

    #[test]
    fn square_lattice_is_polarized() {
        let e = IntAlternatingForm::from_rows(&[vec![0, 1], vec![-1, 0]]).unwrap();
        assert!(check_riemann_relations(&g1(), &e).unwrap().holds);
        let neg = IntAlternatingForm::from_rows(&[vec![0, -1], vec![1, 0]]).unwrap();
        assert!(!check_riemann_relations(&g1(), &neg).unwrap().holds);
        let p = PolarizedTorus::new(g1(), e).unwrap();
        assert!((p.normalized_tau[(0, 0)] - I).norm() < 1e-15);
    }

    #[test]
    fn negated_form_is_rejected() {
        let neg = IntAlternatingForm::from_rows(&[vec![0, -1], vec![1, 0]]).unwrap();
        assert!(matches!(PolarizedTorus::new(g1(), neg), Err(Error::NotAPolarization)));
    }

    #[test]
    fn normalized_input_is_fixed() {
        let tau = CMatrix::from_diagonal_element(2, 2, I);
        let p = PolarizedTorus::from_normalized(tau.clone(), &PolarizationType::principal(2)).unwrap();
        assert!((&p.normalized_tau - tau).norm() < 1e-14);
        assert_eq!(p.symplectic_basis, IntMatrix::identity(4));
    }

    #[test]
    fn dimension_mismatch() {
        let e = IntAlternatingForm::standard(&PolarizationType::principal(2));
        assert!(matches!(check_riemann_relations(&g1(), &e), Err(Error::DimensionMismatch(_))));
    }
}
