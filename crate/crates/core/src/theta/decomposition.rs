//! Least-squares fit of the pulled-back `θ_A` by products of factor sections.

use serde::{Deserialize, Serialize};

use super::ambient::{factor_sections, gauged_ambient_value, random_point, AmbientTheta};
use super::eval::DEFAULT_EPS;
use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, singular_values, CMatrix, CVector};
use crate::serde_num;
use crate::torus::{seeded_rng, Scenario};

const FIT_SEED: u64 = 0xdec0;
/// Sample matrices of factor sections with a worse condition number are
/// rejected: the fit would not determine the coefficients.
pub const MAX_CONDITION: f64 = 1e8;
pub const RANK_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionFit {
    pub rank: usize,
    /// `‖F − S_X·C·S_Yᵀ‖ / ‖F‖` over the sample grid.
    #[serde(with = "serde_num::float")]
    pub residual: f64,
    #[serde(with = "serde_num::cmatrix")]
    pub coefficients: CMatrix,
    #[serde(with = "serde_num::float_vec")]
    pub singular_values: Vec<f64>,
    #[serde(with = "serde_num::float")]
    pub condition_x: f64,
    #[serde(with = "serde_num::float")]
    pub condition_y: f64,
    pub samples: usize,
}

fn condition(sv: &[f64]) -> f64 {
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `grid_size` random points on each factor; the data matrix runs over all
/// `grid_size²` pairs.
pub fn decomposition_fit(s: &Scenario, grid_size: usize) -> Result<DecompositionFit> {
    let fs = factor_sections(s)?;
    let (dx, dy) = (fs.x.len(), fs.y.len());
    if grid_size < dx.max(dy) {
        return Err(Error::OutOfRange(format!("grid size {grid_size} below section count {}", dx.max(dy))));
    }
    let split = s.split()?;
    let amb = AmbientTheta::new(s, DEFAULT_EPS)?;
    let ev_x = fs.x.evaluator(DEFAULT_EPS)?;
    let ev_y = fs.y.evaluator(DEFAULT_EPS)?;
    let mut rng = seeded_rng(FIT_SEED);

    let sample = |ev, basis: &super::SectionBasis, torus, rng: &mut _| -> Result<(Vec<CVector>, CMatrix, Vec<f64>)> {
        let mut pts = Vec::with_capacity(grid_size);
        let mut m = CMatrix::zeros(grid_size, basis.len());
        let mut scales = Vec::with_capacity(grid_size);
        for i in 0..grid_size {
            let p = random_point(torus, rng);
            let vals = basis.eval_all(ev, &p, 0)?;
            for (j, v) in vals.iter().enumerate() {
                m[(i, j)] = v.value;
            }
            scales.push(vals[0].log_scale);
            pts.push(p);
        }
        Ok((pts, m, scales))
    };
    let (xs, sx, lx) = sample(&ev_x, &fs.x, &fs.x_torus, &mut rng)?;
    let (ys, sy, ly) = sample(&ev_y, &fs.y, &fs.y_torus, &mut rng)?;

    let condition_x = condition(&singular_values(&sx));
    let condition_y = condition(&singular_values(&sy));
    if condition_x > MAX_CONDITION || condition_y > MAX_CONDITION {
        return Err(Error::IllConditioned);
    }

    let mut f = CMatrix::zeros(grid_size, grid_size);
    for i in 0..grid_size {
        for j in 0..grid_size {
            let u = split.ambient(&xs[i], &ys[j]);
            f[(i, j)] = gauged_ambient_value(&amb, s, &u, lx[i], ly[j])?;
        }
    }

    let px = sx.clone().pseudo_inverse(0.0).map_err(|e| Error::Numerical(e.to_string()))?;
    let py = sy.transpose().pseudo_inverse(0.0).map_err(|e| Error::Numerical(e.to_string()))?;
    let c = &px * &f * &py;
    let fit = &sx * &c * sy.transpose();
    let norm = f.norm();
    if norm == 0.0 {
        return Err(Error::Numerical("pullback vanishes on the sample grid".into()));
    }
    let residual = (&f - fit).norm() / norm;
    let sv = singular_values(&c);
    let rank = numerical_rank(&sv, RANK_TOL, 0.0);
    Ok(DecompositionFit {
        rank,
        residual,
        coefficients: c,
        singular_values: sv,
        condition_x,
        condition_y,
        samples: grid_size * grid_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{build_complementary_example, product_example};

    #[test]
    fn product_pullback_is_a_single_product() {
        let s = product_example(2, 4, 3).unwrap();
        let fit = decomposition_fit(&s, 6).unwrap();
        assert_eq!(fit.rank, 1);
        assert!(fit.residual < 1e-9, "{}", fit.residual);
    }

    #[test]
    fn complementary_pullback_decomposes() {
        let s = build_complementary_example(2, 4, 2, 7).unwrap();
        let fit = decomposition_fit(&s, 8).unwrap();
        assert!(fit.rank <= 2);
        assert!(fit.residual < 1e-8, "{}", fit.residual);
    }
}
