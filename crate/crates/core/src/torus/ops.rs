use num_complex::Complex64;
use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::polarized::{ComplexTorus, PolarizedTorus};
use crate::error::{Error, Result};
use crate::lattice::smith::column_lattice_basis;
use crate::lattice::{FiniteSubgroup, IntAlternatingForm, IntMatrix, PolarizationType};
use crate::linalg::{complexify, null_space, CMatrix};
use crate::serde_num;

/// `X × Y` with the exterior-product polarization. The symplectic basis is
/// `(λ_X, λ_Y, μ_X, μ_Y)`, so the normalized period matrix is block diagonal.
pub fn build_product(x: &PolarizedTorus, y: &PolarizedTorus) -> Result<PolarizedTorus> {
    let (n, m) = (x.dim(), y.dim());
    let g = n + m;
    let mut basis = CMatrix::zeros(g, 2 * g);
    basis.view_mut((0, 0), (n, 2 * n)).copy_from(&x.torus.lattice_basis);
    basis.view_mut((n, 2 * n), (m, 2 * m)).copy_from(&y.torus.lattice_basis);
    let form = x.form.block_sum(&y.form);

    let ux = &x.symplectic_basis;
    let uy = &y.symplectic_basis;
    let block = ux.block_diag(uy);
    // reorder columns (λ_X, μ_X, λ_Y, μ_Y) -> (λ_X, λ_Y, μ_X, μ_Y)
    let order: Vec<usize> = (0..n).chain(2 * n..2 * n + m).chain(n..2 * n).chain(2 * n + m..2 * g).collect();
    let sym = IntMatrix::from_fn(2 * g, 2 * g, |i, j| block[(i, order[j])]);
    PolarizedTorus::with_symplectic_basis(ComplexTorus::new(basis)?, form, sym)
}

/// Quotient torus together with its lattice basis expressed in the parent
/// lattice coordinates as `numer / den`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Quotient {
    pub torus: PolarizedTorus,
    pub basis_numer: IntMatrix,
    pub basis_den: i64,
}

impl Quotient {
    pub fn basis_f64(&self) -> nalgebra::DMatrix<f64> {
        self.basis_numer.to_f64() / self.basis_den as f64
    }

    /// Integer matrix taking parent lattice coordinates to quotient lattice
    /// coordinates (the parent lattice is a sublattice).
    pub fn parent_to_quotient(&self) -> Result<IntMatrix> {
        let (inv, den) = self.basis_numer.rational_inverse()?;
        // (numer/den_b)^{-1} = den_b · inv / den
        let m = IntMatrix::from_fn(inv.nrows(), inv.ncols(), |i, j| inv[(i, j)] * self.basis_den);
        if (0..m.nrows()).any(|i| (0..m.ncols()).any(|j| m[(i, j)] % den != 0)) {
            return Err(Error::Numerical("parent lattice not contained in quotient lattice".into()));
        }
        Ok(IntMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] / den))
    }
}

/// Lattice `Λ + K`: adjoins the generators of `K` (rational parent lattice
/// coordinates) and resaturates; the form must stay integral.
pub fn quotient_by_kernel(p: &PolarizedTorus, k: &FiniteSubgroup) -> Result<Quotient> {
    let dim = 2 * p.dim();
    let den = k.generators.iter().flat_map(|t| t.coords.iter()).fold(1i64, |acc, q| acc.lcm(q.denom()));
    let mut cols: Vec<Vec<i64>> = (0..dim)
        .map(|i| {
            let mut e = vec![0; dim];
            e[i] = den;
            e
        })
        .collect();
    for t in &k.generators {
        if t.dim() != dim {
            return Err(Error::DimensionMismatch("kernel generator length".into()));
        }
        cols.push(t.coords.iter().map(|q| q.numer() * (den / q.denom())).collect());
    }
    let numer = column_lattice_basis(&IntMatrix::from_columns(&cols, dim)?);
    let gram = numer.congruence(p.form.matrix())?;
    let den2 = den * den;
    if (0..dim).any(|i| (0..dim).any(|j| gram[(i, j)] % den2 != 0)) {
        return Err(Error::KernelNotIsotropic);
    }
    let form = IntAlternatingForm::new(IntMatrix::from_fn(dim, dim, |i, j| gram[(i, j)] / den2))?;
    let basis = &p.torus.lattice_basis * complexify(&numer.to_f64()) / Complex64::new(den as f64, 0.0);
    let torus = PolarizedTorus::new(ComplexTorus::new(basis)?, form)?;
    Ok(Quotient { torus, basis_numer: numer, basis_den: den })
}

/// Linear forms (rows) on the ambient space vanishing on the columns of
/// `tangent`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Annihilator {
    #[serde(with = "serde_num::cmatrix")]
    pub forms: CMatrix,
    pub projective_dim: usize,
}

impl Annihilator {
    /// `‖ξ·T‖ / ‖ξ‖` for a covector `ξ`, with `T` an orthonormalized tangent basis.
    pub fn residual(&self, xi: &nalgebra::DVector<Complex64>, tangent_orthonormal: &CMatrix) -> f64 {
        let row = xi.transpose() * tangent_orthonormal;
        row.norm() / xi.norm()
    }
}

pub fn annihilator_subspace(ambient_dim: usize, tangent: &CMatrix) -> Result<Annihilator> {
    if tangent.nrows() != ambient_dim {
        return Err(Error::DimensionMismatch("tangent map rows".into()));
    }
    let sv = crate::linalg::singular_values(tangent);
    if crate::linalg::numerical_rank(&sv, 1e-10, 0.0) != tangent.ncols() {
        return Err(Error::RankDeficient("tangent map is not injective".into()));
    }
    // ξ·T = 0  <=>  Tᵀ ξᵀ = 0
    let ns = null_space(&tangent.transpose(), 1e-10);
    if ns.ncols() == 0 {
        return Err(Error::RankDeficient("empty annihilator".into()));
    }
    Ok(Annihilator { forms: ns.transpose(), projective_dim: ns.ncols() - 1 })
}

/// `n(n+1)/2 + (g−n)(g−n+1)/2`
pub fn moduli_dimension(n: usize, g: usize) -> Result<usize> {
    if n < 1 || n + 1 > g {
        return Err(Error::OutOfRange(format!("need 1 <= n <= g-1, got n={n}, g={g}")));
    }
    let m = g - n;
    Ok(n * (n + 1) / 2 + m * (m + 1) / 2)
}

/// `τ = Q + i(RᵀR + ½·I)`: `Q` symmetric with entries uniform in `[−½, ½]`,
/// `R` with entries uniform in `[−1, 1]`.
pub fn random_tau(rng: &mut ChaCha20Rng, g: usize) -> CMatrix {
    let mut q = nalgebra::DMatrix::<f64>::zeros(g, g);
    for i in 0..g {
        for j in i..g {
            let v = rng.gen_range(-0.5..=0.5);
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    let r = nalgebra::DMatrix::<f64>::from_fn(g, g, |_, _| rng.gen_range(-1.0..=1.0));
    let y = r.transpose() * r + nalgebra::DMatrix::<f64>::identity(g, g) * 0.5;
    CMatrix::from_fn(g, g, |i, j| Complex64::new(q[(i, j)], 0.5 * (y[(i, j)] + y[(j, i)])))
}

pub fn seeded_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Principal type of dimension `n` ending in `δ`: `(1, …, 1, δ)`.
pub fn one_delta_type(n: usize, delta: u64) -> Result<PolarizationType> {
    if n == 0 || delta == 0 {
        return Err(Error::OutOfRange("empty type".into()));
    }
    let mut d = vec![1; n];
    d[n - 1] = delta;
    PolarizationType::new(d)
}
