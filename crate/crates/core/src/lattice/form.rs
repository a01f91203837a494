//! Alternating integer forms and their symplectic (Frobenius) normal form.

use serde::{Deserialize, Serialize};

use super::matrix::IntMatrix;
use super::smith::{smith_normal_form, SmithForm};
use crate::error::{Error, Result};

/// Antisymmetric integer matrix on a lattice of even rank.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IntMatrix", into = "IntMatrix")]
pub struct IntAlternatingForm {
    entries: IntMatrix,
}

impl TryFrom<IntMatrix> for IntAlternatingForm {
    type Error = Error;
    fn try_from(m: IntMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<IntAlternatingForm> for IntMatrix {
    fn from(f: IntAlternatingForm) -> IntMatrix {
        f.entries
    }
}

impl IntAlternatingForm {
    pub fn new(entries: IntMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch("form must be square".into()));
        }
        if !is_antisymmetric(&entries) {
            return Err(Error::NotAntisymmetric);
        }
        if !entries.nrows().is_multiple_of(2) {
            return Err(Error::OddRank);
        }
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::new(IntMatrix::from_rows(rows)?)
    }

    /// `((0, D), (−D, 0))`.
    pub fn standard(ty: &PolarizationType) -> Self {
        let m = ty.divisors.len();
        let mut e = IntMatrix::zeros(2 * m, 2 * m);
        for (i, &d) in ty.divisors.iter().enumerate() {
            e[(i, m + i)] = d as i64;
            e[(m + i, i)] = -(d as i64);
        }
        Self { entries: e }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.entries
    }

    pub fn eval(&self, x: &[i64], y: &[i64]) -> i64 {
        let ey = self.entries.mul_vec(y);
        x.iter().zip(&ey).map(|(a, b)| a * b).sum()
    }

    pub fn determinant(&self) -> Result<i128> {
        self.entries.determinant()
    }

    pub fn is_nondegenerate(&self) -> bool {
        matches!(self.determinant(), Ok(d) if d != 0)
    }

    pub fn block_sum(&self, other: &Self) -> Self {
        Self { entries: self.entries.block_diag(&other.entries) }
    }

    /// The form in a new basis given by the columns of `change`.
    pub fn transform(&self, change: &IntMatrix) -> Result<Self> {
        Self::new(change.congruence(&self.entries)?)
    }
}

pub fn is_antisymmetric(m: &IntMatrix) -> bool {
    m.is_square() && (0..m.nrows()).all(|i| m[(i, i)] == 0 && (0..i).all(|j| m[(i, j)] == -m[(j, i)]))
}

/// Elementary divisors `d₁ | d₂ | … | d_m` of a polarization.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolarizationType {
    pub divisors: Vec<u64>,
}

impl PolarizationType {
    pub fn new(divisors: Vec<u64>) -> Result<Self> {
        if divisors.is_empty() || divisors.contains(&0) {
            return Err(Error::OutOfRange("divisors must be positive".into()));
        }
        if divisors.windows(2).any(|w| w[1] % w[0] != 0) {
            return Err(Error::OutOfRange(format!("divisor chain {divisors:?} violates d_i | d_i+1")));
        }
        Ok(Self { divisors })
    }

    pub fn principal(m: usize) -> Self {
        Self { divisors: vec![1; m] }
    }

    /// `(1, …, 1, δ)` of length `m`.
    pub fn one_delta(m: usize, delta: u64) -> Self {
        let mut divisors = vec![1; m];
        if let Some(last) = divisors.last_mut() {
            *last = delta;
        }
        Self { divisors }
    }

    pub fn dim(&self) -> usize {
        self.divisors.len()
    }

    pub fn degree(&self) -> u64 {
        self.divisors.iter().product()
    }

    pub fn is_principal(&self) -> bool {
        self.divisors.iter().all(|&d| d == 1)
    }
}

/// Integer change of basis with determinant ±1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IntMatrix", into = "IntMatrix")]
pub struct UnimodularChange {
    matrix: IntMatrix,
}

impl TryFrom<IntMatrix> for UnimodularChange {
    type Error = Error;
    fn try_from(m: IntMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<UnimodularChange> for IntMatrix {
    fn from(u: UnimodularChange) -> IntMatrix {
        u.matrix
    }
}

impl UnimodularChange {
    pub fn new(matrix: IntMatrix) -> Result<Self> {
        match matrix.determinant()? {
            1 | -1 => Ok(Self { matrix }),
            d => Err(Error::OutOfRange(format!("determinant {d} is not a unit"))),
        }
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> IntMatrix {
        self.matrix
    }
}

/// Gram matrix of a form together with the basis realizing it; every basis
/// operation is applied to both so that `basisᵀ·E·basis == gram` throughout.
struct Congruence {
    gram: IntMatrix,
    basis: IntMatrix,
}

impl Congruence {
    /// x_k += c·x_l
    fn add(&mut self, k: usize, l: usize, c: i64) {
        if c == 0 {
            return;
        }
        self.basis.add_col_multiple(k, l, c);
        self.gram.add_row_multiple(k, l, c);
        self.gram.add_col_multiple(k, l, c);
    }

    fn negate(&mut self, k: usize) {
        self.basis.negate_col(k);
        self.gram.negate_row(k);
        self.gram.negate_col(k);
    }

    fn at(&self, i: usize, j: usize) -> i64 {
        self.gram[(i, j)]
    }
}

/// Symplectic basis `U` with `Uᵀ·E·U = ((0, D), (−D, 0))`.
///
/// Pivots are chosen as the smallest absolute nonzero entry among the
/// remaining basis vectors, first in row-major order.
pub fn frobenius_normal_form(e: &IntAlternatingForm) -> Result<(PolarizationType, UnimodularChange)> {
    let n = e.dim();
    if !n.is_multiple_of(2) {
        return Err(Error::OddRank);
    }
    if !e.is_nondegenerate() {
        return Err(Error::DegenerateForm);
    }
    let mut w = Congruence { gram: e.matrix().clone(), basis: IntMatrix::identity(n) };
    let mut active: Vec<usize> = (0..n).collect();
    let mut pairs: Vec<(usize, usize, i64)> = Vec::new();

    while !active.is_empty() {
        let (ei, fi, d) = loop {
            let mut pivot: Option<(usize, usize, i64)> = None;
            for &i in &active {
                for &j in &active {
                    let v = w.at(i, j);
                    if v != 0 && pivot.is_none_or(|(_, _, p)| v.abs() < p.abs()) {
                        pivot = Some((i, j, v));
                    }
                }
            }
            let (ei, fi, d) = pivot.ok_or(Error::DegenerateForm)?;

            let mut dirty = false;
            for &k in &active {
                if k == ei || k == fi {
                    continue;
                }
                w.add(k, fi, -(w.at(ei, k) / d));
                w.add(k, ei, w.at(fi, k) / d);
                dirty |= w.at(ei, k) != 0 || w.at(fi, k) != 0;
            }
            if dirty {
                continue;
            }
            let rest: Vec<usize> = active.iter().copied().filter(|&k| k != ei && k != fi).collect();
            let offender =
                rest.iter().flat_map(|&a| rest.iter().map(move |&b| (a, b))).find(|&(a, b)| w.at(a, b) % d != 0);
            match offender {
                Some((a, b)) => {
                    // E(e + x_a, x_b) is not a multiple of d; one reduction step
                    // leaves a remainder smaller than |d|.
                    w.add(ei, a, 1);
                    w.add(b, fi, -(w.at(ei, b) / d));
                }
                None => break (ei, fi, d),
            }
        };
        let d = if d < 0 {
            w.negate(fi);
            -d
        } else {
            d
        };
        pairs.push((ei, fi, d));
        active.retain(|&k| k != ei && k != fi);
    }

    let m = pairs.len();
    let mut u = IntMatrix::zeros(n, n);
    for (slot, &(ei, fi, _)) in pairs.iter().enumerate() {
        for r in 0..n {
            u[(r, slot)] = w.basis[(r, ei)];
            u[(r, m + slot)] = w.basis[(r, fi)];
        }
    }
    let ty = PolarizationType::new(pairs.iter().map(|p| p.2 as u64).collect())?;
    Ok((ty, UnimodularChange::new(u)?))
}

/// Smith divisors of `E` taken in pairs; equals the Frobenius type for
/// nondegenerate alternating forms.
pub fn paired_elementary_divisors(e: &IntAlternatingForm) -> Result<Vec<u64>> {
    let SmithForm { divisors, .. } = smith_normal_form(e.matrix());
    if divisors.len() % 2 != 0 {
        return Err(Error::OddRank);
    }
    let mut out = Vec::with_capacity(divisors.len() / 2);
    for pair in divisors.chunks(2) {
        if pair[0] != pair[1] {
            return Err(Error::Numerical(format!("unpaired elementary divisors {divisors:?}")));
        }
        out.push(pair[0] as u64);
    }
    Ok(out)
}

/// Entry `(i, j)` of the result is `basisᵢᵀ·E·basisⱼ`.
pub fn restrict_form(e: &IntAlternatingForm, basis: &[Vec<i64>]) -> Result<IntAlternatingForm> {
    if basis.is_empty() || !basis.len().is_multiple_of(2) {
        return Err(Error::BadBasis);
    }
    let b = IntMatrix::from_columns(basis, e.dim()).map_err(|_| Error::BadBasis)?;
    if smith_normal_form(&b).rank() != basis.len() {
        return Err(Error::BadBasis);
    }
    e.transform(&b)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn e_s() -> IntAlternatingForm {
        IntAlternatingForm::from_rows(&[vec![0, 2, -2, 0], vec![-2, 0, 1, 0], vec![2, -1, 0, 1], vec![0, 0, -1, 0]])
            .unwrap()
    }

    fn assert_normal(e: &IntAlternatingForm) -> PolarizationType {
        let (ty, u) = frobenius_normal_form(e).unwrap();
        let std = IntAlternatingForm::standard(&ty);
        assert_eq!(&u.matrix().congruence(e.matrix()).unwrap(), std.matrix());
        ty
    }

    #[test]
    fn type_of_e_s() {
        assert_eq!(assert_normal(&e_s()).divisors, vec![1, 2]);
    }

    #[test]
    fn standard_form_is_fixed() {
        let e = IntAlternatingForm::from_rows(&[vec![0, 1], vec![-1, 0]]).unwrap();
        let (ty, u) = frobenius_normal_form(&e).unwrap();
        assert_eq!(ty.divisors, vec![1]);
        assert_eq!(u.matrix(), &IntMatrix::identity(2));
    }

    #[test]
    fn degenerate_and_odd() {
        let z = IntAlternatingForm::new(IntMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(frobenius_normal_form(&z), Err(Error::DegenerateForm)));
        assert!(matches!(IntAlternatingForm::new(IntMatrix::zeros(3, 3)), Err(Error::OddRank)));
    }

    #[test]
    fn restrict_to_full_basis_is_identity() {
        let e = e_s();
        let basis: Vec<Vec<i64>> = (0..4).map(|j| IntMatrix::identity(4).column(j)).collect();
        assert_eq!(restrict_form(&e, &basis).unwrap(), e);
    }

    #[test]
    fn restrict_rejects_dependent() {
        let e = e_s();
        let basis = vec![vec![1, 0, 0, 0], vec![2, 0, 0, 0]];
        assert!(matches!(restrict_form(&e, &basis), Err(Error::BadBasis)));
        assert!(matches!(restrict_form(&e, &basis[..1]), Err(Error::BadBasis)));
    }

    #[test]
    fn paired_divisors_match() {
        assert_eq!(paired_elementary_divisors(&e_s()).unwrap(), vec![1, 2]);
    }
}
