//! Smith normal form over the integers.

use super::matrix::IntMatrix;

/// `left · M · right = diag(divisors)` with `divisors[i] | divisors[i+1]`.
#[derive(Clone, Debug)]
pub struct SmithForm {
    pub divisors: Vec<i64>,
    pub left: IntMatrix,
    pub right: IntMatrix,
}

impl SmithForm {
    pub fn rank(&self) -> usize {
        self.divisors.iter().filter(|&&d| d != 0).count()
    }
}

fn smallest_entry(a: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, i64)> = None;
    for i in t..a.nrows() {
        for j in t..a.ncols() {
            let v = a[(i, j)].abs();
            if v != 0 && best.is_none_or(|(_, _, b)| v < b) {
                best = Some((i, j, v));
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}

pub fn smith_normal_form(m: &IntMatrix) -> SmithForm {
    let (r, c) = (m.nrows(), m.ncols());
    let mut a = m.clone();
    let mut left = IntMatrix::identity(r);
    let mut right = IntMatrix::identity(c);

    for t in 0..r.min(c) {
        while let Some((pi, pj)) = smallest_entry(&a, t) {
            a.swap_rows(t, pi);
            left.swap_rows(t, pi);
            a.swap_cols(t, pj);
            right.swap_cols(t, pj);

            let p = a[(t, t)];
            let mut dirty = false;
            for i in t + 1..r {
                let q = a[(i, t)] / p;
                a.add_row_multiple(i, t, -q);
                left.add_row_multiple(i, t, -q);
                dirty |= a[(i, t)] != 0;
            }
            for j in t + 1..c {
                let q = a[(t, j)] / p;
                a.add_col_multiple(j, t, -q);
                right.add_col_multiple(j, t, -q);
                dirty |= a[(t, j)] != 0;
            }
            if dirty {
                continue;
            }
            // divisibility of the remaining block
            let offender = (t + 1..r).find(|&i| (t + 1..c).any(|j| a[(i, j)] % p != 0));
            match offender {
                Some(i) => {
                    a.add_row_multiple(t, i, 1);
                    left.add_row_multiple(t, i, 1);
                }
                None => break,
            }
        }
        if a[(t, t)] < 0 {
            a.negate_row(t);
            left.negate_row(t);
        }
    }

    let divisors = (0..r.min(c)).map(|i| a[(i, i)]).collect();
    SmithForm { divisors, left, right }
}

/// Basis (as columns) of the lattice spanned by the columns of `m`.
pub fn column_lattice_basis(m: &IntMatrix) -> IntMatrix {
    let snf = smith_normal_form(m);
    let rank = snf.rank();
    let inv_left = unimodular_inverse(&snf.left);
    let mut basis = IntMatrix::zeros(m.nrows(), rank);
    for k in 0..rank {
        for i in 0..m.nrows() {
            basis[(i, k)] = inv_left[(i, k)] * snf.divisors[k];
        }
    }
    basis
}

/// Basis of `span_Q(columns of m) ∩ Z^n`, i.e. the saturation.
pub fn saturate_columns(m: &IntMatrix) -> IntMatrix {
    let snf = smith_normal_form(m);
    let rank = snf.rank();
    let inv_left = unimodular_inverse(&snf.left);
    inv_left.columns(0, rank)
}

/// Integer basis (columns) of the kernel `{v : m v = 0}`.
pub fn integer_kernel(m: &IntMatrix) -> IntMatrix {
    let snf = smith_normal_form(m);
    let rank = snf.rank();
    snf.right.columns(rank, m.ncols())
}

/// Extends a saturated set of columns to a unimodular basis of `Z^n`;
/// the given columns come first.
pub fn complete_to_unimodular(cols: &IntMatrix) -> IntMatrix {
    let snf = smith_normal_form(cols);
    debug_assert!(snf.divisors.iter().all(|&d| d == 1), "columns not saturated");
    let inv_left = unimodular_inverse(&snf.left);
    let rank = snf.rank();
    // inv_left · diag · right⁻¹ = cols, so cols = inv_left[:, :rank] · right⁻¹
    cols.hstack(&inv_left.columns(rank, cols.nrows()))
}

/// Inverse of a unimodular matrix, computed exactly by Gauss–Jordan over Z.
pub fn unimodular_inverse(u: &IntMatrix) -> IntMatrix {
    let snf = smith_normal_form(u);
    assert!(snf.divisors.iter().all(|&d| d == 1), "matrix is not unimodular");
    // left·U·right = I  =>  U⁻¹ = right·left
    &snf.right * &snf.left
}
