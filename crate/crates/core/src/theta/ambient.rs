//! The principal theta function of `A` and the section bases of the factors,
//! all expressed in the ambient coordinates `u = (x, y)` of a scenario.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use super::eval::{ThetaCharacteristic, ThetaEvaluator, ThetaValue};
use super::sections::SectionBasis;
use crate::error::Result;
use crate::linalg::{median, CMatrix, CVector};
use crate::torus::{seeded_rng, ComplexTorus, Scenario};

/// Reference sample size for the typical magnitude of `θ_A`.
const SCALE_SAMPLES: usize = 64;
const SCALE_SEED: u64 = 0x5eed;

/// `θ_A(u) = θ(N·u, τ_A)` with derivatives taken in `u`.
#[derive(Clone, Debug)]
pub struct AmbientTheta {
    pub n: CMatrix,
    pub evaluator: ThetaEvaluator,
    pub torus: ComplexTorus,
    /// Median scaled `|θ_A|` over a fixed random sample of `A`.
    pub scale: f64,
    characteristic: ThetaCharacteristic,
}

impl AmbientTheta {
    pub fn new(s: &Scenario, eps: f64) -> Result<Self> {
        let evaluator = ThetaEvaluator::new(s.tau_a(), eps)?;
        let mut out = Self {
            n: s.theta_coords().clone(),
            evaluator,
            torus: s.a_torus().clone(),
            scale: 1.0,
            characteristic: ThetaCharacteristic::zero(s.g),
        };
        let mut rng = seeded_rng(SCALE_SEED);
        let mut mags = Vec::with_capacity(SCALE_SAMPLES);
        for _ in 0..SCALE_SAMPLES {
            let u = random_point(&out.torus, &mut rng);
            mags.push(out.eval(&u, 0)?.value.norm());
        }
        out.scale = median(mags);
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.n.ncols()
    }

    /// Value with `u`-derivatives; same scaling conventions as [`ThetaValue`].
    pub fn eval(&self, u: &CVector, order: usize) -> Result<ThetaValue> {
        let w = &self.n * u;
        let mut v = self.evaluator.eval(&self.characteristic, &w, order)?;
        let nt = self.n.transpose();
        v.gradient = v.gradient.map(|gr| &nt * gr);
        v.hessian = v.hessian.map(|h| &nt * h * &self.n);
        Ok(v)
    }

    /// Value with derivatives in the normalized coordinates `w = N·u`, where
    /// the lattice has unit size; the vanishing gates use these.
    pub fn eval_normalized(&self, u: &CVector, order: usize) -> Result<ThetaValue> {
        self.evaluator.eval(&self.characteristic, &(&self.n * u), order)
    }
}

/// Uniform point of the fundamental parallelotope of `torus`.
pub fn random_point<R: Rng>(torus: &ComplexTorus, rng: &mut R) -> CVector {
    let m = torus.lattice_basis.ncols();
    let c = DVector::from_fn(m, |_, _| rng.gen::<f64>());
    torus.from_lattice_coords(&c)
}

/// Section bases of `X` and `Y` compatible with `θ_A`: with the gauge factor
/// removed, the pullback of `θ_A` is a combination of their products.
#[derive(Clone, Debug)]
pub struct FactorSections {
    pub x: SectionBasis,
    pub y: SectionBasis,
    pub x_torus: ComplexTorus,
    pub y_torus: ComplexTorus,
}

pub fn factor_sections(s: &Scenario) -> Result<FactorSections> {
    let split = s.split()?;
    let gauge = s.gauge()?;
    let (n, g) = (s.n, s.g);
    let tau_p = &split.product.normalized_tau;
    let tau_x = tau_p.view((0, 0), (n, n)).into_owned();
    let tau_y = tau_p.view((n, n), (g - n, g - n)).into_owned();
    let (dx, dy) = gauge.divisors.split_at(n);
    let a = gauge.alpha.as_slice();
    let b = gauge.beta.as_slice();
    let x = SectionBasis::with_shift(&tau_x, dx, &a[..n], &b[..n])?;
    let y = SectionBasis::with_shift(&tau_y, dy, &a[n..], &b[n..])?;
    let x_torus = ComplexTorus::new(x.lattice_basis())?;
    let y_torus = ComplexTorus::new(y.lattice_basis())?;
    Ok(FactorSections { x, y, x_torus, y_torus })
}

/// `log` of the unscaled `θ_A(u)·e(−½uᵀQu − ℓᵀu)` relative to the product of
/// the factor scalings, combined into one complex exponent so the result stays
/// representable.
pub fn gauged_ambient_value(
    amb: &AmbientTheta,
    s: &Scenario,
    u: &CVector,
    log_scale_x: f64,
    log_scale_y: f64,
) -> Result<Complex64> {
    let gauge = s.gauge()?;
    let v = amb.eval(u, 0)?;
    let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    let exponent = Complex64::new(v.log_scale - log_scale_x - log_scale_y, 0.0) - two_pi_i * gauge.exponent(u);
    Ok(v.value * exponent.exp())
}
