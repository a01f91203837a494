//! Bounded search for integral complex structures compatible with a form.
//!
//! A complex structure here is an integer matrix `J` (columns are the images
//! of the basis vectors) with `J² = −I`, `JᵀEJ = E`, and `E(x, Jy)` positive
//! definite, i.e. the symmetric matrix `E·J` is positive definite.

use super::form::IntAlternatingForm;
use super::matrix::IntMatrix;
use crate::error::{Error, Result};

/// Default entry bound used when no bound is configured.
pub const DEFAULT_ENTRY_BOUND: i64 = 2;

#[derive(Clone, Debug, Default)]
pub struct StructureConstraints {
    /// Each value `s` requires `J` to map `span(e₀ … e_{s−1})` into itself.
    pub invariant_prefixes: Vec<usize>,
    /// Require `E(x, Jx)` to be even for every `x`, i.e. `E·J` has an even
    /// diagonal. For a unimodular form of rank 8 this selects the `E8` lattice
    /// rather than `Z⁸`.
    pub even: bool,
}

pub fn find_complex_structure(e: &IntAlternatingForm, entry_bound: i64) -> Result<IntMatrix> {
    find_complex_structure_with(e, entry_bound, &StructureConstraints::default())
}

pub fn find_complex_structure_with(
    e: &IntAlternatingForm,
    entry_bound: i64,
    constraints: &StructureConstraints,
) -> Result<IntMatrix> {
    if !e.is_nondegenerate() {
        return Err(Error::DegenerateForm);
    }
    let n = e.dim();
    let em = e.matrix();
    let bound = entry_bound.max(0);

    // candidate columns, smallest first; one list per support size
    let mut supports: Vec<usize> = constraints.invariant_prefixes.iter().copied().filter(|&s| s < n).collect();
    supports.push(n);
    supports.sort_unstable();
    supports.dedup();
    let pools: Vec<(usize, Vec<Vec<i64>>)> = supports.iter().map(|&s| (s, candidates(n, s, bound))).collect();

    let mut search =
        Search { e: em, n, even: constraints.even, cols: Vec::with_capacity(n), ecols: Vec::with_capacity(n) };
    let pool_for =
        |j: usize| -> &Vec<Vec<i64>> { &pools.iter().find(|(s, _)| j < *s).expect("support n always present").1 };
    if search.descend(&pool_for) {
        let cols = search.cols;
        IntMatrix::from_columns(&cols, n)
    } else {
        Err(Error::NoComplexStructure { bound })
    }
}

fn candidates(n: usize, support: usize, bound: i64) -> Vec<Vec<i64>> {
    let width = (2 * bound + 1) as usize;
    let total = width.pow(support as u32);
    let mut out = Vec::with_capacity(total);
    for code in 0..total {
        let mut v = vec![0i64; n];
        let mut c = code;
        for slot in v.iter_mut().take(support) {
            *slot = (c % width) as i64 - bound;
            c /= width;
        }
        if v.iter().any(|&x| x != 0) {
            out.push(v);
        }
    }
    out.sort_by(|a, b| {
        let na: i64 = a.iter().map(|x| x.abs()).sum();
        let nb: i64 = b.iter().map(|x| x.abs()).sum();
        na.cmp(&nb).then_with(|| a.cmp(b))
    });
    out
}

struct Search<'a> {
    e: &'a IntMatrix,
    n: usize,
    even: bool,
    cols: Vec<Vec<i64>>,
    /// `E·c_i` for each chosen column
    ecols: Vec<Vec<i64>>,
}

impl Search<'_> {
    fn descend<'p>(&mut self, pool_for: &dyn Fn(usize) -> &'p Vec<Vec<i64>>) -> bool {
        let j = self.cols.len();
        if j == self.n {
            return self.squares_to_minus_identity();
        }
        // rows cᵢᵀE for the compatibility equations cᵢᵀ E c = E_ij
        let rows: Vec<Vec<i64>> = self.cols.iter().map(|c| self.e.transpose().mul_vec(c)).collect();
        for cand in pool_for(j) {
            let ec = self.e.mul_vec(cand);
            if ec[j] <= 0 || (self.even && ec[j] % 2 != 0) {
                continue;
            }
            let ok = (0..j).all(|i| dot(&rows[i], cand) == self.e[(i, j)] && ec[i] == self.ecols[i][j]);
            if !ok {
                continue;
            }
            self.cols.push(cand.clone());
            self.ecols.push(ec);
            if self.leading_minor_positive() && self.partial_square_ok() && self.descend(pool_for) {
                return true;
            }
            self.cols.pop();
            self.ecols.pop();
        }
        false
    }

    fn leading_minor_positive(&self) -> bool {
        let k = self.cols.len();
        let g = IntMatrix::from_fn(k, k, |a, b| self.ecols[b][a]);
        matches!(g.determinant(), Ok(d) if d > 0)
    }

    /// `J·c_k = −e_k` for every chosen column whose support is already covered.
    fn partial_square_ok(&self) -> bool {
        let k = self.cols.len();
        for (idx, c) in self.cols.iter().enumerate() {
            if c.iter().skip(k).any(|&x| x != 0) {
                continue;
            }
            for r in 0..self.n {
                let v: i64 = (0..k).map(|m| c[m] * self.cols[m][r]).sum();
                if v != if r == idx { -1 } else { 0 } {
                    return false;
                }
            }
        }
        true
    }

    fn squares_to_minus_identity(&self) -> bool {
        let j = IntMatrix::from_columns(&self.cols, self.n).expect("square");
        let sq = &j * &j;
        sq == IntMatrix::identity(self.n).neg()
    }
}

fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Checks the three defining identities exactly; returns the reason on failure.
pub fn verify_complex_structure(e: &IntAlternatingForm, j: &IntMatrix) -> std::result::Result<(), String> {
    let n = e.dim();
    if j.nrows() != n || j.ncols() != n {
        return Err("shape mismatch".into());
    }
    if (j * j) != IntMatrix::identity(n).neg() {
        return Err("J² ≠ −I".into());
    }
    let jej = j.congruence(e.matrix()).map_err(|err| err.to_string())?;
    if &jej != e.matrix() {
        return Err("JᵀEJ ≠ E".into());
    }
    let g = e.matrix() * j;
    if g != g.transpose() {
        return Err("E·J not symmetric".into());
    }
    for k in 1..=n {
        let minor = IntMatrix::from_fn(k, k, |a, b| g[(a, b)]);
        if !matches!(minor.determinant(), Ok(d) if d > 0) {
            return Err(format!("E·J not positive definite (leading minor {k})"));
        }
    }
    Ok(())
}

/// True when `J` maps the span of the given integer columns into itself.
pub fn preserves_span(j: &IntMatrix, basis: &IntMatrix) -> bool {
    use super::smith::smith_normal_form;
    let rank = smith_normal_form(basis).rank();
    let image = j * basis;
    smith_normal_form(&basis.hstack(&image)).rank() == rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_structure_g1() {
        let e = IntAlternatingForm::from_rows(&[vec![0, 1], vec![-1, 0]]).unwrap();
        let j = find_complex_structure(&e, 2).unwrap();
        assert_eq!(j, IntMatrix::from_rows(&[vec![0, -1], vec![1, 0]]).unwrap());
        verify_complex_structure(&e, &j).unwrap();
    }

    #[test]
    fn degenerate_is_rejected() {
        let e = IntAlternatingForm::new(IntMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(find_complex_structure(&e, 2), Err(Error::DegenerateForm)));
    }

    #[test]
    fn type_one_two_surface() {
        let e = IntAlternatingForm::standard(&super::super::form::PolarizationType::new(vec![1, 2]).unwrap());
        let j = find_complex_structure(&e, 2).unwrap();
        verify_complex_structure(&e, &j).unwrap();
    }
}
