//! Common zeros of a section basis, found by grid search plus Newton.
//!
//! The residual `r(z) = Σ|sᵢ(z)|²` (scaled values) is tabulated on a grid of
//! the fundamental parallelotope; its local minima seed a complex Newton
//! iteration (minimum-norm steps when there are fewer sections than
//! variables). The common scale factor of the sections cancels in the step.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::{ThetaEvaluator, DEFAULT_EPS};
use super::sections::SectionBasis;
use crate::error::{Error, Result};
use crate::lattice::torsion::{point_order, DEFAULT_MAX_DENOMINATOR};
use crate::linalg::{median, numerical_rank, singular_values, CMatrix, CVector};
use crate::serde_num;
use crate::torus::{seeded_rng, ComplexTorus};

pub const DEFAULT_GRID: usize = 16;
/// Upper bound on tabulated grid points; the per-axis resolution is lowered
/// to respect it in high dimension.
pub const MAX_GRID_POINTS: usize = 1 << 20;
pub const DEFAULT_TOL: f64 = 1e-8;
const NEWTON_TOL: f64 = 1e-13;
const NEWTON_MAX_ITER: usize = 60;
const DEDUPE_TOL: f64 = 1e-6;
const MAX_SEEDS: usize = 512;
const SAMPLING_SEED: u64 = 0xba5e;
/// Random Newton seeds when the locus is positive-dimensional.
pub const SAMPLED_SEEDS: usize = 32;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasePoint {
    #[serde(with = "serde_num::cvector")]
    pub z: CVector,
    /// Torsion order in `C^m / (D·Z^m + τ·Z^m)`, if it has a small denominator.
    pub order: Option<u64>,
    #[serde(with = "serde_num::float")]
    pub residual: f64,
    /// Number of Newton seeds that converged here.
    pub basin: usize,
    /// `m − rank` of the Jacobian of the sections.
    pub local_dim: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaseLocus {
    pub points: Vec<BasePoint>,
    pub positive_dimensional: bool,
    /// Grid resolution per real axis actually used (0 when seeds are random).
    pub grid: usize,
    pub seeds: usize,
    pub converged: usize,
    /// Smallest relative grid residual; bounded away from zero when the
    /// locus is empty.
    #[serde(with = "serde_num::float")]
    pub min_grid_residual: f64,
    #[serde(with = "serde_num::float")]
    pub scale: f64,
}

impl BaseLocus {
    pub fn orders(&self) -> Vec<Option<u64>> {
        self.points.iter().map(|p| p.order).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.points.iter().map(|p| p.residual).fold(0.0, f64::max)
    }
}

struct Searcher<'a> {
    basis: &'a SectionBasis,
    ev: ThetaEvaluator,
    torus: ComplexTorus,
}

impl Searcher<'_> {
    fn values(&self, z: &CVector) -> Result<CVector> {
        self.basis.values(&self.ev, z)
    }

    fn jet(&self, z: &CVector) -> Result<(CVector, CMatrix)> {
        let vals = self.basis.eval_all(&self.ev, z, 1)?;
        let m = self.basis.dim();
        let f = CVector::from_iterator(vals.len(), vals.iter().map(|v| v.value));
        let mut j = CMatrix::zeros(vals.len(), m);
        for (i, v) in vals.iter().enumerate() {
            j.set_row(i, &v.gradient().transpose());
        }
        Ok((f, j))
    }

    /// Newton from `start`; the best iterate is kept and accepted when its
    /// relative residual is below `tol`.
    fn newton(&self, start: &CVector, scale: f64, tol: f64) -> Result<Option<(CVector, f64)>> {
        let mut z = start.clone();
        let mut best: Option<(CVector, f64)> = None;
        for _ in 0..NEWTON_MAX_ITER {
            let (f, j) = self.jet(&z)?;
            let res = f.norm() / scale;
            if best.as_ref().is_none_or(|b| res < b.1) {
                best = Some((z.clone(), res));
            }
            if res < NEWTON_TOL {
                break;
            }
            let step = match j.clone().pseudo_inverse(1e-14 * j.norm()) {
                Ok(p) => p * &f,
                Err(_) => break,
            };
            z -= &step;
            if !z.iter().all(|c| c.re.is_finite() && c.im.is_finite()) || step.norm() > 1e3 {
                break;
            }
        }
        match best {
            Some((z, res)) if res < tol => Ok(Some((self.torus.reduce(&z)?, res))),
            _ => Ok(None),
        }
    }

    fn local_dim(&self, z: &CVector) -> Result<usize> {
        let (_, j) = self.jet(z)?;
        let sv = singular_values(&j);
        Ok(self.basis.dim() - numerical_rank(&sv, 1e-6, 0.0))
    }
}

/// Grid resolution per real axis so that the whole grid has at most
/// [`MAX_GRID_POINTS`] points.
pub fn effective_grid(requested: usize, real_dim: usize) -> usize {
    let mut g = requested.max(2);
    while g > 2 && (g as f64).powi(real_dim as i32) > MAX_GRID_POINTS as f64 {
        g -= 1;
    }
    g
}

fn grid_index(mut k: usize, grid: usize, dim: usize) -> Vec<usize> {
    let mut idx = vec![0; dim];
    for slot in idx.iter_mut() {
        *slot = k % grid;
        k /= grid;
    }
    idx
}

fn flat_index(idx: &[usize], grid: usize) -> usize {
    idx.iter().rev().fold(0, |acc, &i| acc * grid + i)
}

/// Base locus with the default grid; `tol` bounds `‖s(z)‖` relative to the
/// median grid value.
pub fn base_locus_finite(basis: &SectionBasis, tol: f64) -> Result<BaseLocus> {
    base_locus(basis, DEFAULT_GRID, tol)
}

/// Finite base locus when `δ ≤ m`; an empty result when `δ > m` and no common
/// zero turns up; sampled points with `positive_dimensional` when `δ < m`.
pub fn base_locus(basis: &SectionBasis, grid: usize, tol: f64) -> Result<BaseLocus> {
    if !(tol > 0.0) {
        return Err(Error::OutOfRange("tolerance must be positive".into()));
    }
    let m = basis.dim();
    let delta = basis.len();
    let searcher =
        Searcher { basis, ev: basis.evaluator(DEFAULT_EPS)?, torus: ComplexTorus::new(basis.lattice_basis())? };
    let real_dim = 2 * m;
    let positive_dimensional = delta < m;
    let mut rng = seeded_rng(SAMPLING_SEED);
    let random_start = |rng: &mut rand_chacha::ChaCha20Rng| {
        let c = DVector::from_fn(real_dim, |_, _| rng.gen::<f64>());
        searcher.torus.from_lattice_coords(&c)
    };

    let (grid, scale, min_grid_residual, starts) = if positive_dimensional {
        // the locus meets every region, so random seeds replace the grid
        let mut mags = Vec::with_capacity(SAMPLED_SEEDS);
        let mut starts = Vec::with_capacity(SAMPLED_SEEDS);
        for _ in 0..SAMPLED_SEEDS {
            let z = random_start(&mut rng);
            mags.push(searcher.values(&z)?.norm());
            starts.push(z);
        }
        (0, median(mags), 0.0, starts)
    } else {
        let grid = effective_grid(grid, real_dim);
        let total = grid.pow(real_dim as u32);
        let at = |k: usize| {
            let idx = grid_index(k, grid, real_dim);
            let c = DVector::from_iterator(real_dim, idx.iter().map(|&i| i as f64 / grid as f64));
            searcher.torus.from_lattice_coords(&c)
        };
        let residuals: Vec<f64> =
            (0..total).into_par_iter().map(|k| searcher.values(&at(k)).map(|v| v.norm())).collect::<Result<_>>()?;
        let scale = median(residuals.clone());
        let min_res = residuals.iter().cloned().fold(f64::INFINITY, f64::min) / scale;
        // periodic local minima along the coordinate axes
        let mut minima: Vec<usize> = (0..total)
            .into_par_iter()
            .filter(|&k| {
                let idx = grid_index(k, grid, real_dim);
                (0..real_dim).all(|a| {
                    [1, grid - 1].iter().all(|&off| {
                        let mut nb = idx.clone();
                        nb[a] = (nb[a] + off) % grid;
                        residuals[flat_index(&nb, grid)] >= residuals[k]
                    })
                })
            })
            .collect();
        minima.sort_by(|&a, &b| residuals[a].total_cmp(&residuals[b]));
        minima.truncate(MAX_SEEDS);
        (grid, scale, min_res, minima.into_iter().map(at).collect())
    };
    if !(scale > 0.0) {
        return Err(Error::Numerical("sections vanish at every seed".into()));
    }

    let results: Vec<Option<(CVector, f64)>> =
        starts.par_iter().map(|z| searcher.newton(z, scale, tol)).collect::<Result<_>>()?;
    let converged = results.iter().filter(|r| r.is_some()).count();

    let mut points: Vec<BasePoint> = Vec::new();
    for (z, res) in results.into_iter().flatten() {
        let dup = if positive_dimensional {
            None
        } else {
            points
                .iter()
                .position(|p| searcher.torus.distance_mod_lattice(&p.z, &z).map(|d| d < DEDUPE_TOL).unwrap_or(false))
        };
        match dup {
            Some(i) => points[i].basin += 1,
            None => points.push(BasePoint {
                order: point_order(&searcher.torus.lattice_basis, &z, DEFAULT_MAX_DENOMINATOR)?,
                local_dim: searcher.local_dim(&z)?,
                z,
                residual: res,
                basin: 1,
            }),
        }
    }
    if points.is_empty() && delta <= m {
        return Err(Error::NoBasePoint);
    }
    Ok(BaseLocus { points, positive_dimensional, grid, seeds: starts.len(), converged, min_grid_residual, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::PolarizationType;
    use crate::theta::section_basis;
    use crate::torus::random_tau;

    fn surface(ty: &[u64], seed: u64) -> SectionBasis {
        let tau = random_tau(&mut seeded_rng(seed), 2);
        section_basis(&tau, &PolarizationType::new(ty.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn one_two_surface_has_four_base_points() {
        let bl = base_locus_finite(&surface(&[1, 2], 3), DEFAULT_TOL).unwrap();
        assert_eq!(bl.points.len(), 4);
        assert!(bl.orders().iter().all(|o| *o == Some(4)));
        assert!(bl.max_residual() < 1e-8);
    }

    #[test]
    fn two_two_surface_has_no_base_points() {
        let bl = base_locus_finite(&surface(&[2, 2], 3), DEFAULT_TOL).unwrap();
        assert!(bl.points.is_empty());
        assert!(bl.min_grid_residual > 1e-3);
    }

    #[test]
    fn elliptic_curve_has_one_zero_of_order_two() {
        let tau = CMatrix::from_element(1, 1, num_complex::Complex64::new(0.31, 1.17));
        let basis = section_basis(&tau, &PolarizationType::principal(1)).unwrap();
        let bl = base_locus_finite(&basis, DEFAULT_TOL).unwrap();
        assert_eq!(bl.points.len(), 1);
        assert_eq!(bl.points[0].order, Some(2));
    }

    #[test]
    fn grid_is_capped() {
        assert_eq!(effective_grid(16, 4), 16);
        assert!(effective_grid(16, 6).pow(6) <= MAX_GRID_POINTS);
    }
}
