//! Smallest J-stable rational subspace containing given real vectors.

use nalgebra::{DMatrix, DVector};
use num_integer::Integer;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use super::matrix::IntMatrix;
use super::smith::{saturate_columns, smith_normal_form};
use crate::linalg::{complexify, real_singular_values, CMatrix};

const RANK_TOL: f64 = 1e-9;
const MAX_DEN: i64 = 64;

/// A saturated sublattice (columns, in lattice coordinates).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedSubspace {
    pub basis: IntMatrix,
    /// True when the rational hull could not be recognized from the input and
    /// the coordinate-support hull was used instead.
    pub support_fallback: bool,
}

impl GeneratedSubspace {
    pub fn real_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn complex_dim(&self) -> usize {
        self.basis.ncols() / 2
    }

    /// Images of the basis vectors under the lattice basis `Π` (g × 2g).
    pub fn complex_span(&self, lattice_basis: &CMatrix) -> CMatrix {
        lattice_basis * complexify(&self.basis.to_f64())
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        let r = smith_normal_form(&self.basis).rank();
        let m = self.basis.hstack(&IntMatrix::from_columns(&[v.to_vec()], v.len()).expect("length"));
        smith_normal_form(&m).rank() == r
    }
}

/// Vectors are real lattice coordinates; `j` acts on lattice coordinates.
pub fn generated_subspace(j: &IntMatrix, vectors: &[DVector<f64>]) -> GeneratedSubspace {
    let n = j.nrows();
    if vectors.is_empty() {
        return GeneratedSubspace { basis: IntMatrix::zeros(n, 0), support_fallback: false };
    }
    let jf = j.to_f64();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(2 * vectors.len());
    for v in vectors {
        cols.push(v.clone());
        cols.push(&jf * v);
    }
    let w = DMatrix::from_columns(&cols);
    let (seed, fallback) = match rational_row_space(&w.transpose()) {
        Some(rows) => (rows, false),
        None => (support_hull(&w), true),
    };
    GeneratedSubspace { basis: j_closure(j, seed), support_fallback: fallback }
}

/// Closes an integer column set under `j` and saturates it.
fn j_closure(j: &IntMatrix, mut basis: IntMatrix) -> IntMatrix {
    if basis.ncols() == 0 {
        return basis;
    }
    loop {
        let sat = saturate_columns(&basis);
        let grown = saturate_columns(&sat.hstack(&(j * &sat)));
        if grown.ncols() == sat.ncols() {
            return sat;
        }
        basis = grown;
    }
}

fn reconstruct(x: f64) -> Option<Rational64> {
    for q in 1..=MAX_DEN {
        let p = (x * q as f64).round();
        if (x - p / q as f64).abs() < 1e-8 * (1.0 + x.abs()) {
            return Some(Rational64::new(p as i64, q));
        }
    }
    None
}

/// Reduced row echelon form of the row space of `rows`; when every entry is
/// recognisably rational, returns an integral basis (as columns).
fn rational_row_space(rows: &DMatrix<f64>) -> Option<IntMatrix> {
    let mut a = rows.clone();
    let (r, c) = a.shape();
    let scale = a.amax().max(1.0);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..c {
        if row == r {
            break;
        }
        let (best, val) =
            (row..r).map(|i| (i, a[(i, col)].abs())).fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= RANK_TOL * scale {
            continue;
        }
        a.swap_rows(row, best);
        let p = a[(row, col)];
        for k in 0..c {
            a[(row, k)] /= p;
        }
        for i in 0..r {
            if i != row {
                let f = a[(i, col)];
                if f != 0.0 {
                    for k in 0..c {
                        a[(i, k)] -= f * a[(row, k)];
                    }
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let mut out = Vec::with_capacity(pivots.len());
    for i in 0..pivots.len() {
        let qs: Vec<Rational64> = (0..c).map(|k| reconstruct(a[(i, k)])).collect::<Option<_>>()?;
        let den = qs.iter().fold(1i64, |acc, q| acc.lcm(q.denom()));
        out.push(qs.iter().map(|q| q.numer() * (den / q.denom())).collect::<Vec<i64>>());
    }
    // the reconstructed rows must still span the input
    let ints = IntMatrix::from_columns(&out, c).ok()?;
    let stacked =
        DMatrix::from_fn(
            c,
            out.len() + r,
            |i, k| {
                if k < out.len() {
                    ints[(i, k)] as f64
                } else {
                    rows[(k - out.len(), i)]
                }
            },
        );
    let sv = real_singular_values(&stacked);
    let top = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > 1e-8 * top).count();
    (rank == out.len()).then_some(ints)
}

fn support_hull(w: &DMatrix<f64>) -> IntMatrix {
    let n = w.nrows();
    let scale = w.amax();
    let cols: Vec<Vec<i64>> = (0..n)
        .filter(|&i| w.row(i).iter().any(|x| x.abs() > RANK_TOL * scale))
        .map(|i| {
            let mut e = vec![0; n];
            e[i] = 1;
            e
        })
        .collect();
    IntMatrix::from_columns(&cols, n).expect("unit columns")
}
