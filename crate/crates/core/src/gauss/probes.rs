//! Containment of subtorus translates in `Θ`, Gauss-fiber rank probes and the
//! singular locus coming from pairs of base points.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::map::{classify, gauss_sample, zero_on_line, Gates, GaussSample, PointClass};
use crate::error::{Error, Result};
use crate::lattice::torsion::{point_order, DEFAULT_MAX_DENOMINATOR};
use crate::linalg::{frac, median, numerical_rank, orthonormal_column_basis, singular_values, CMatrix, CVector};
use crate::serde_num;
use crate::theta::base_locus::DEFAULT_GRID;
use crate::theta::{
    base_locus, factor_sections, multiplicity_two_probe, random_point, AmbientTheta, BaseLocus, FactorSections,
    MultiplicityProbe, SectionBasis, DEFAULT_EPS,
};
use crate::torus::{annihilator_subspace, seeded_rng, ComplexTorus, Scenario};

const DEDUPE_TOL: f64 = 1e-6;
const SECTION_SCALE_SAMPLES: usize = 64;
/// Base points must make the opposite sections vanish to this relative level.
pub const BASE_POINT_TOL: f64 = 1e-6;
pub const BASE_LOCUS_TOL: f64 = 1e-8;
pub const DEFAULT_SINGULAR_SAMPLES: usize = 16;
const CRITICAL_GRID: usize = 10;
const CRITICAL_SEEDS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    X,
    Y,
}

impl Factor {
    pub fn other(self) -> Self {
        match self {
            Factor::X => Factor::Y,
            Factor::Y => Factor::X,
        }
    }
}

/// Shared state for the probes of one scenario.
pub struct Probe<'a> {
    pub scenario: &'a Scenario,
    pub theta: AmbientTheta,
    pub sections: Option<FactorSections>,
    pub gates: Gates,
    /// Seeds per real dimension for the base-locus scan.
    pub base_grid: usize,
}

impl<'a> Probe<'a> {
    pub fn new(s: &'a Scenario, gates: Gates) -> Result<Self> {
        let theta = AmbientTheta::new(s, DEFAULT_EPS)?;
        let sections = if s.split.is_some() { Some(factor_sections(s)?) } else { None };
        Ok(Self { scenario: s, theta, sections, gates, base_grid: DEFAULT_GRID })
    }

    fn sections(&self) -> Result<&FactorSections> {
        self.sections.as_ref().ok_or_else(|| Error::Config("scenario has no complementary pair".into()))
    }

    pub fn basis(&self, which: Factor) -> Result<(&SectionBasis, &ComplexTorus)> {
        let fs = self.sections()?;
        Ok(match which {
            Factor::X => (&fs.x, &fs.x_torus),
            Factor::Y => (&fs.y, &fs.y_torus),
        })
    }

    pub fn base_locus(&self, which: Factor) -> Result<BaseLocus> {
        base_locus(self.basis(which)?.0, self.base_grid, BASE_LOCUS_TOL)
    }

    /// Ambient point of a point on `which` and a point on the other factor.
    pub fn ambient(&self, which: Factor, on_factor: &CVector, on_other: &CVector) -> Result<CVector> {
        let split = self.scenario.split()?;
        Ok(match which {
            Factor::X => split.ambient(on_factor, on_other),
            Factor::Y => split.ambient(on_other, on_factor),
        })
    }

    fn tangent(&self, which: Factor) -> Result<&CMatrix> {
        let split = self.scenario.split()?;
        Ok(match which {
            Factor::X => &split.x.tangent_map,
            Factor::Y => &split.y.tangent_map,
        })
    }

    fn check_base_point(&self, factor: Factor, p: &CVector) -> Result<()> {
        let (basis, torus) = self.basis(factor)?;
        if p.len() != basis.dim() {
            return Err(Error::InvalidBasePoint(format!("expected {} coordinates", basis.dim())));
        }
        let ev = basis.evaluator(DEFAULT_EPS)?;
        let mut rng = seeded_rng(0);
        let mut mags = Vec::with_capacity(SECTION_SCALE_SAMPLES);
        for _ in 0..SECTION_SCALE_SAMPLES {
            mags.push(basis.values(&ev, &random_point(torus, &mut rng))?.norm());
        }
        let rel = basis.values(&ev, p)?.norm() / median(mags);
        if rel > BASE_POINT_TOL {
            return Err(Error::InvalidBasePoint(format!("sections do not vanish (relative size {rel:e})")));
        }
        Ok(())
    }

    /// Max `|θ_A|/scale` over `samples` seeded points of the translate of
    /// `which` through `base_point` (a base point of the other factor).
    pub fn containment_check(&self, which: Factor, base_point: &CVector, samples: usize, seed: u64) -> Result<f64> {
        self.check_base_point(which.other(), base_point)?;
        self.translate_residual(which, base_point, samples, seed)
    }

    /// Same as [`Probe::containment_check`] without validating the base point.
    pub fn translate_residual(&self, which: Factor, through: &CVector, samples: usize, seed: u64) -> Result<f64> {
        let (_, torus) = self.basis(which)?;
        let mut rng = seeded_rng(seed);
        let pts: Vec<CVector> = (0..samples).map(|_| random_point(torus, &mut rng)).collect();
        let res: Vec<f64> = pts
            .par_iter()
            .map(|q| {
                let u = self.ambient(which, q, through)?;
                Ok(self.theta.eval_normalized(&u, 0)?.value.norm() / self.theta.scale)
            })
            .collect::<Result<_>>()?;
        Ok(res.into_iter().fold(0.0, f64::max))
    }

    pub fn fiber_rank_probe(&self, base_point: &CVector, sample_count: usize, seed: u64) -> Result<FiberProbeReport> {
        let s = self.scenario;
        let (_, y_torus) = self.basis(Factor::Y)?;
        let tangent = self.tangent(Factor::Y)?.clone();
        let ann = annihilator_subspace(s.g, &tangent)?;
        let t_orth = orthonormal_column_basis(&tangent, 1e-12);
        let mut rng = seeded_rng(seed);
        let pts: Vec<CVector> = (0..sample_count)
            .map(|_| self.ambient(Factor::Y, &random_point(y_torus, &mut rng), base_point))
            .collect::<Result<_>>()?;
        let probed: Vec<(PointClass, Option<GaussSample>)> = pts
            .par_iter()
            .map(|p| {
                let class = classify(&self.theta, p, &self.gates)?;
                let sample = match class {
                    PointClass::Smooth => Some(gauss_sample(&self.theta, p, Some(&tangent), &self.gates)?),
                    _ => None,
                };
                Ok((class, sample))
            })
            .collect::<Result<_>>()?;
        let counts = ClassCounts::from(probed.iter().map(|(c, _)| *c));
        let samples: Vec<GaussSample> = probed.into_iter().filter_map(|(_, g)| g).collect();
        if samples.is_empty() {
            return Err(Error::TranslateSingular);
        }
        let annihilator_residual = samples.iter().map(|g| ann.residual(&g.gradient, &t_orth)).fold(0.0, f64::max);
        let image_rank = samples.iter().map(|g| g.jacobian_rank).max().unwrap_or(0);
        let probed_dim = tangent.ncols();
        let fiber_dim_lower_bound = probed_dim - image_rank;
        let claimed = (s.g + 1).saturating_sub(2 * s.n);
        let full_rank_fraction =
            samples.iter().filter(|g| g.jacobian_rank == probed_dim).count() as f64 / samples.len() as f64;
        Ok(FiberProbeReport {
            probed_dim,
            image_rank,
            fiber_dim_lower_bound,
            claimed_fiber_dim: claimed,
            annihilator_residual,
            full_rank_fraction,
            verdict: fiber_dim_lower_bound >= claimed && annihilator_residual < self.gates.annihilator,
            counts,
            samples,
        })
    }

    /// Fiber probe without a subtorus: points of `Θ` from Newton along random
    /// complex lines, each probed along one random tangent direction of `Θ`.
    pub fn fiber_rank_probe_generic(&self, sample_count: usize, seed: u64) -> Result<FiberProbeReport> {
        let g = self.scenario.g;
        let mut rng = seeded_rng(seed);
        let mut samples = Vec::with_capacity(sample_count);
        let mut classes = Vec::with_capacity(sample_count);
        let mut attempts = 0;
        while samples.len() < sample_count && attempts < 20 * sample_count {
            attempts += 1;
            let u0 = random_point(&self.theta.torus, &mut rng);
            let d = random_point(&self.theta.torus, &mut rng);
            let raw = CVector::from_fn(g, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            let Some(p) = zero_on_line(&self.theta, &u0, &d, self.gates.on_divisor)? else {
                continue;
            };
            let class = classify(&self.theta, &p, &self.gates)?;
            classes.push(class);
            if class != PointClass::Smooth {
                continue;
            }
            // project onto the tangent hyperplane ξ·v = 0
            let xi = self.theta.eval(&p, 1)?.gradient().clone();
            let xn = xi.norm_squared();
            let proj = &raw - xi.map(|c| c.conj()) * ((xi.transpose() * &raw)[(0, 0)] / xn);
            let dir = CMatrix::from_column_slice(g, 1, proj.as_slice());
            samples.push(gauss_sample(&self.theta, &p, Some(&dir), &self.gates)?);
        }
        if samples.is_empty() {
            return Err(Error::Numerical("no smooth point of the theta divisor found".into()));
        }
        let image_rank = samples.iter().map(|s| s.jacobian_rank).max().unwrap_or(0);
        let full_rank_fraction = samples.iter().filter(|s| s.jacobian_rank == 1).count() as f64 / samples.len() as f64;
        Ok(FiberProbeReport {
            probed_dim: 1,
            image_rank,
            fiber_dim_lower_bound: 1 - image_rank,
            claimed_fiber_dim: 1,
            annihilator_residual: 0.0,
            full_rank_fraction,
            verdict: image_rank == 0,
            counts: ClassCounts::from(classes.into_iter()),
            samples,
        })
    }

    /// Points `π(b_X, b_Y)` for base points of the two factors that pass the
    /// multiplicity-two test. Positive-dimensional base loci contribute at
    /// most `max_samples` sampled points each.
    pub fn singular_locus_probe(&self, max_samples: usize) -> Result<SingularProbeReport> {
        let bx = self.base_locus(Factor::X)?;
        let by = self.base_locus(Factor::Y)?;
        self.singular_from_loci(&bx, &by, max_samples)
    }

    /// [`Probe::singular_locus_probe`] with the base loci already computed.
    pub fn singular_from_loci(
        &self,
        bx: &BaseLocus,
        by: &BaseLocus,
        max_samples: usize,
    ) -> Result<SingularProbeReport> {
        let s = self.scenario;
        let take = |b: &BaseLocus| b.points.iter().take(max_samples).cloned().collect::<Vec<_>>();
        let (px, py) = (take(bx), take(by));
        let mut candidates = Vec::new();
        for a in &px {
            for b in &py {
                let u = self.theta.torus.reduce(&self.ambient(Factor::X, &a.z, &b.z)?)?;
                let rank = (a.z.len() - a.local_dim) + (b.z.len() - b.local_dim);
                candidates.push((u, rank));
            }
        }
        let probes: Vec<MultiplicityProbe> = candidates
            .par_iter()
            .map(|(u, _)| multiplicity_two_probe(&self.theta, u, self.gates.multiplicity))
            .collect::<Result<_>>()?;
        let mut points: Vec<SingularPoint> = Vec::new();
        let mut rejected = 0;
        for ((u, rank), probe) in candidates.into_iter().zip(probes) {
            if !probe.passed {
                rejected += 1;
                continue;
            }
            if let Some(existing) = points
                .iter_mut()
                .find(|p| self.theta.torus.distance_mod_lattice(&p.point, &u).map(|d| d < DEDUPE_TOL).unwrap_or(false))
            {
                existing.multiplicity_of_pairs += 1;
                continue;
            }
            points.push(SingularPoint {
                order: point_order(&self.theta.torus.lattice_basis, &u, DEFAULT_MAX_DENOMINATOR)?,
                lattice_coords: canonical_coords(&self.theta.torus, &u)?,
                point: u,
                section_jacobian_rank: rank,
                local_dim_estimate: s.g.saturating_sub(rank),
                probe,
                multiplicity_of_pairs: 1,
            });
        }
        points.sort_by(|a, b| canonical_cmp(&a.lattice_coords, &b.lattice_coords));
        let claimed_bound = s.g as i64 - 2 * s.delta as i64;
        Ok(SingularProbeReport {
            count: points.len(),
            points,
            rejected,
            claimed_bound,
            base_locus_x: bx.points.len(),
            base_locus_y: by.points.len(),
            positive_dimensional: bx.positive_dimensional || by.positive_dimensional,
            method: SingularMethod::BasePointPairs,
        })
    }

    /// Critical points of `θ_A` on `Θ`: Gauss-Newton on `θ = ∇θ = 0` started
    /// from the smallest grid values of `|θ|² + ‖∇θ‖²`. Used when the scenario
    /// has no complementary pair.
    pub fn critical_point_search(&self) -> Result<SingularProbeReport> {
        let g = self.scenario.g;
        let torus = &self.theta.torus;
        let real_dim = 2 * g;
        let grid = crate::theta::base_locus::effective_grid(CRITICAL_GRID, real_dim).min(CRITICAL_GRID);
        let total = grid.pow(real_dim as u32);
        let at = |mut k: usize| {
            let c = DVector::from_fn(real_dim, |_, _| {
                let i = k % grid;
                k /= grid;
                i as f64 / grid as f64
            });
            torus.from_lattice_coords(&c)
        };
        let score = |u: &CVector| -> Result<f64> {
            let v = self.theta.eval_normalized(u, 1)?;
            Ok(v.value.norm_sqr() + v.gradient().norm_squared())
        };
        let mut scored: Vec<(f64, usize)> =
            (0..total).into_par_iter().map(|k| Ok((score(&at(k))?, k))).collect::<Result<_>>()?;
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        scored.truncate(CRITICAL_SEEDS);
        let found: Vec<Option<CVector>> =
            scored.par_iter().map(|&(_, k)| self.critical_newton(&at(k))).collect::<Result<_>>()?;
        let mut points: Vec<SingularPoint> = Vec::new();
        for u in found.into_iter().flatten() {
            let u = torus.reduce(&u)?;
            let probe = multiplicity_two_probe(&self.theta, &u, self.gates.multiplicity)?;
            if !probe.passed {
                continue;
            }
            if points.iter().any(|p| torus.distance_mod_lattice(&p.point, &u).map(|d| d < DEDUPE_TOL).unwrap_or(false))
            {
                continue;
            }
            points.push(SingularPoint {
                order: point_order(&torus.lattice_basis, &u, DEFAULT_MAX_DENOMINATOR)?,
                lattice_coords: canonical_coords(torus, &u)?,
                point: u,
                section_jacobian_rank: 0,
                local_dim_estimate: 0,
                probe,
                multiplicity_of_pairs: 0,
            });
        }
        points.sort_by(|a, b| canonical_cmp(&a.lattice_coords, &b.lattice_coords));
        Ok(SingularProbeReport {
            count: points.len(),
            points,
            rejected: 0,
            claimed_bound: -(g as i64),
            base_locus_x: 0,
            base_locus_y: 0,
            positive_dimensional: false,
            method: SingularMethod::CriticalPointSearch,
        })
    }

    fn critical_newton(&self, start: &CVector) -> Result<Option<CVector>> {
        let g = self.scenario.g;
        let mut u = start.clone();
        for _ in 0..40 {
            let v = self.theta.eval(&u, 2)?;
            let mut f = CVector::zeros(g + 1);
            f[0] = v.value;
            f.rows_mut(1, g).copy_from(v.gradient());
            let mut j = CMatrix::zeros(g + 1, g);
            j.row_mut(0).copy_from(&v.gradient().transpose());
            j.rows_mut(1, g).copy_from(v.hessian());
            let step = match j.clone().pseudo_inverse(1e-14 * j.norm()) {
                Ok(p) => p * &f,
                Err(_) => return Ok(None),
            };
            u -= &step;
            if !u.iter().all(|c| c.re.is_finite() && c.im.is_finite()) || step.norm() > 10.0 {
                return Ok(None);
            }
            if step.norm() < 1e-13 {
                break;
            }
        }
        Ok(Some(u))
    }
}

fn canonical_coords(torus: &ComplexTorus, u: &CVector) -> Result<Vec<f64>> {
    Ok(torus.lattice_coords(u)?.iter().map(|&c| frac(c)).collect())
}

fn canonical_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let (x, y) = ((x * 1e6).round(), (y * 1e6).round());
        match x.total_cmp(&y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Preimages in `X × Y` of the singular points, in product lattice
/// coordinates reduced to `[0, 1)` and sorted: every point is lifted by all
/// elements of the kernel. Different kernels give different quotients, and
/// this is the common space where their singular sets can be compared.
pub fn product_preimages(s: &Scenario, report: &SingularProbeReport) -> Result<Vec<Vec<f64>>> {
    let split = s.split()?;
    let dim = 2 * s.g;
    let lifts = split.kernel.elements(dim);
    let mut out = Vec::with_capacity(report.points.len() * lifts.len());
    for p in &report.points {
        let c = split.product.torus.lattice_coords(&p.point)?;
        for k in &lifts {
            let shift = k.to_f64();
            out.push((0..dim).map(|i| frac(c[i] + shift[i])).collect::<Vec<_>>());
        }
    }
    out.sort_by(|a, b| canonical_cmp(a, b));
    Ok(out)
}

/// Equality of two finite point sets given by coordinates modulo 1.
pub fn same_point_set(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    let close = |x: &[f64], y: &[f64]| {
        x.iter().zip(y).all(|(p, q)| {
            let d = frac(p - q);
            d.min(1.0 - d) < tol
        })
    };
    a.len() == b.len()
        && a.iter().all(|x| b.iter().any(|y| close(x, y)))
        && b.iter().all(|y| a.iter().any(|x| close(x, y)))
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub smooth: usize,
    pub singular: usize,
    pub undetermined: usize,
    pub off_divisor: usize,
}

impl<I: Iterator<Item = PointClass>> From<I> for ClassCounts {
    fn from(it: I) -> Self {
        let mut c = ClassCounts::default();
        for class in it {
            match class {
                PointClass::Smooth => c.smooth += 1,
                PointClass::Singular => c.singular += 1,
                PointClass::Undetermined => c.undetermined += 1,
                PointClass::OffDivisor => c.off_divisor += 1,
            }
        }
        c
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiberProbeReport {
    pub probed_dim: usize,
    pub image_rank: usize,
    pub fiber_dim_lower_bound: usize,
    /// `g − 2n + 1`
    pub claimed_fiber_dim: usize,
    #[serde(with = "serde_num::float")]
    pub annihilator_residual: f64,
    /// Fraction of smooth samples whose differential has full rank.
    #[serde(with = "serde_num::float")]
    pub full_rank_fraction: f64,
    pub verdict: bool,
    pub counts: ClassCounts,
    pub samples: Vec<GaussSample>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularMethod {
    BasePointPairs,
    CriticalPointSearch,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingularPoint {
    #[serde(with = "serde_num::cvector")]
    pub point: CVector,
    #[serde(with = "serde_num::float_vec")]
    pub lattice_coords: Vec<f64>,
    pub order: Option<u64>,
    /// Rank of the block Jacobian of both section bases at the pair.
    pub section_jacobian_rank: usize,
    pub local_dim_estimate: usize,
    pub probe: MultiplicityProbe,
    /// Number of base-point pairs mapping here.
    pub multiplicity_of_pairs: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingularProbeReport {
    pub points: Vec<SingularPoint>,
    pub count: usize,
    /// Pairs failing the multiplicity-two test.
    pub rejected: usize,
    /// `g − 2δ`
    pub claimed_bound: i64,
    pub base_locus_x: usize,
    pub base_locus_y: usize,
    pub positive_dimensional: bool,
    pub method: SingularMethod,
}

impl SingularProbeReport {
    pub fn all_two_torsion(&self) -> bool {
        self.points.iter().all(|p| matches!(p.order, Some(1) | Some(2)))
    }
}

pub fn section_jacobian_rank(basis: &SectionBasis, z: &CVector) -> Result<usize> {
    let ev = basis.evaluator(DEFAULT_EPS)?;
    let vals = basis.eval_all(&ev, z, 1)?;
    let mut j = CMatrix::zeros(vals.len(), basis.dim());
    for (i, v) in vals.iter().enumerate() {
        j.set_row(i, &v.gradient().transpose());
    }
    Ok(numerical_rank(&singular_values(&j), 1e-6, 0.0))
}

pub fn gauss_point(s: &Scenario, p: &CVector) -> Result<GaussSample> {
    let probe = Probe::new(s, Gates::default())?;
    gauss_sample(&probe.theta, p, None, &probe.gates)
}

pub fn containment_check(s: &Scenario, which: Factor, base_point: &CVector, samples: usize) -> Result<f64> {
    Probe::new(s, Gates::default())?.containment_check(which, base_point, samples, s.seed.unwrap_or(0))
}

pub fn fiber_rank_probe(s: &Scenario, base_point: &CVector, sample_count: usize) -> Result<FiberProbeReport> {
    Probe::new(s, Gates::default())?.fiber_rank_probe(base_point, sample_count, s.seed.unwrap_or(0))
}

pub fn singular_locus_probe(s: &Scenario) -> Result<SingularProbeReport> {
    let probe = Probe::new(s, Gates::default())?;
    if s.split.is_some() {
        probe.singular_locus_probe(DEFAULT_SINGULAR_SAMPLES)
    } else {
        probe.critical_point_search()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::build_complementary_example;

    #[test]
    fn point_sets_modulo_one() {
        let a = vec![vec![0.0, 0.5], vec![0.25, 0.75]];
        let b = vec![vec![0.25, 0.75 - 1e-12], vec![1.0 - 1e-12, 0.5]];
        assert!(same_point_set(&a, &b, 1e-9));
        assert!(!same_point_set(&a, &b[..1], 1e-9));
        assert!(!same_point_set(&a, &[vec![0.0, 0.5], vec![0.25, 0.5]], 1e-9));
    }

    #[test]
    fn containment_needs_a_base_point() {
        let s = build_complementary_example(2, 4, 2, 7).unwrap();
        let probe = Probe::new(&s, Gates::default()).unwrap();
        let off = CVector::from_element(2, Complex64::new(0.1234, 0.0567));
        assert!(matches!(probe.containment_check(Factor::Y, &off, 4, 0), Err(Error::InvalidBasePoint(_))));
        let short = CVector::zeros(1);
        assert!(matches!(probe.containment_check(Factor::Y, &short, 4, 0), Err(Error::InvalidBasePoint(_))));

        let bx = probe.base_locus(Factor::X).unwrap();
        assert!(probe.containment_check(Factor::Y, &bx.points[0].z, 8, 0).unwrap() < 1e-8);
        // a generic translate is not contained
        assert!(probe.translate_residual(Factor::Y, &off, 8, 0).unwrap() > 1e-2);
    }

    #[test]
    fn control_has_no_factor_sections() {
        let s = crate::torus::control_example(2, 3).unwrap();
        let probe = Probe::new(&s, Gates::default()).unwrap();
        assert!(probe.base_locus(Factor::X).is_err());
        assert_eq!(Factor::X.other(), Factor::Y);
    }
}
