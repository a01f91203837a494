//! Bundled constructions: a principally polarized `A` isogenous to `X × Y`
//! with `X`, `Y` complementary of the same degree.
//!
//! Ambient coordinates are always the product coordinates `u = (x, y)`, so
//! `T₀X = [I; 0]` and `T₀Y = [0; I]`, and `π(x, y) = x + y` is the identity
//! on coordinates. Only the lattice changes: `Λ_A ⊃ Λ_X ⊕ Λ_Y`.

use std::sync::OnceLock;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gauge::{compute_gauge, Gauge};
use super::ops::{build_product, one_delta_type, quotient_by_kernel, random_tau, seeded_rng};
use super::polarized::{check_riemann_relations, ComplexTorus, PolarizedTorus};
use crate::error::{Error, Result};
use crate::lattice::smith::{complete_to_unimodular, integer_kernel, saturate_columns, unimodular_inverse};
use crate::lattice::{
    enumerate_graph_isotropic, find_complex_structure_with, frobenius_normal_form, k_group_generators, preserves_span,
    restrict_form, verify_complex_structure, CombinedPairing, FiniteSubgroup, IntAlternatingForm, IntMatrix,
    PolarizationType, StructureConstraints, TorsionPoint, DEFAULT_ENTRY_BOUND,
};
use crate::linalg::{invert_complex, null_space, CMatrix, I};
use crate::serde_num;

/// The alternating form on the rank-8 lattice of the g = 4 example.
pub const E8_FORM: [[i64; 8]; 8] = [
    [0, 2, -2, 0, 0, 0, 0, 1],
    [-2, 0, 1, 0, 0, 0, 0, -1],
    [2, -1, 0, 1, -1, 0, 0, 1],
    [0, 0, -1, 0, 1, 0, 0, -1],
    [0, 0, 1, -1, 0, 1, -1, 1],
    [0, 0, 0, 0, -1, 0, 1, -1],
    [0, 0, 0, 0, 1, -1, 0, 1],
    [-1, 1, -1, 1, -1, 1, -1, 0],
];

/// The basis `v₁ = e₄, v₂ = e₁, v₃ = −e₁−e₂−e₃, v₄ = e₂−e₄` of `S = ⟨e₁…e₄⟩`.
pub const E8_V_BASIS: [[i64; 8]; 4] =
    [[0, 0, 0, 1, 0, 0, 0, 0], [1, 0, 0, 0, 0, 0, 0, 0], [-1, -1, -1, 0, 0, 0, 0, 0], [0, 1, 0, -1, 0, 0, 0, 0]];

pub fn e8_form() -> IntAlternatingForm {
    IntAlternatingForm::from_rows(&E8_FORM.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).expect("antisymmetric")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Complementary,
    E8,
    /// Trivial kernel, principal factors.
    Product,
    /// A generic principal torus with no splitting data.
    Control,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubtorusEmbedding {
    pub sub: PolarizedTorus,
    /// Ambient coordinates of the sub-torus coordinates (g × dim).
    #[serde(with = "serde_num::cmatrix")]
    pub tangent_map: CMatrix,
    /// Sub-lattice coordinates to `A`-lattice coordinates.
    pub lattice_map: IntMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Split {
    pub x: SubtorusEmbedding,
    pub y: SubtorusEmbedding,
    /// In product lattice coordinates `(Λ_X, Λ_Y)`.
    pub kernel: FiniteSubgroup,
    pub product: PolarizedTorus,
    /// Product lattice coordinates to `A`-lattice coordinates.
    pub product_to_a: IntMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub n: usize,
    pub g: usize,
    pub delta: u64,
    pub seed: Option<u64>,
    pub kernel_index: Option<usize>,
    pub a: PolarizedTorus,
    pub split: Option<Split>,
    pub complex_structure: Option<IntMatrix>,
    #[serde(skip)]
    gauge: OnceLock<Gauge>,
}

/// Checked scenario invariants.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioInvariants {
    pub degree_x: u64,
    pub degree_y: u64,
    pub a_principal: bool,
    pub kernel_order: u64,
    #[serde(with = "serde_num::float")]
    pub covolume_ratio: f64,
    pub riemann_relations: bool,
    pub kernel_graph_isotropic: bool,
    pub holds: bool,
}

impl Scenario {
    pub fn split(&self) -> Result<&Split> {
        self.split.as_ref().ok_or_else(|| Error::Config("scenario has no complementary pair".into()))
    }

    pub fn gauge(&self) -> Result<&Gauge> {
        if let Some(g) = self.gauge.get() {
            return Ok(g);
        }
        let computed = compute_gauge(self)?;
        let _ = self.gauge.set(computed);
        Ok(self.gauge.get().expect("just set"))
    }

    /// `N` with `θ_A(u) = θ(N·u, τ_A)`.
    pub fn theta_coords(&self) -> &CMatrix {
        &self.a.coord_change
    }

    pub fn tau_a(&self) -> &CMatrix {
        &self.a.normalized_tau
    }

    pub fn a_torus(&self) -> &ComplexTorus {
        &self.a.torus
    }

    pub fn check_invariants(&self) -> Result<ScenarioInvariants> {
        let riemann = check_riemann_relations(&self.a.torus, &self.a.form)?.holds;
        let a_principal = self.a.ty.is_principal();
        let Some(split) = &self.split else {
            return Ok(ScenarioInvariants {
                degree_x: 1,
                degree_y: 1,
                a_principal,
                kernel_order: 1,
                covolume_ratio: 1.0,
                riemann_relations: riemann,
                kernel_graph_isotropic: true,
                holds: riemann && a_principal,
            });
        };
        let dx = split.x.sub.ty.degree();
        let dy = split.y.sub.ty.degree();
        let ratio = split.product.torus.covolume() / self.a.torus.covolume();
        let nx = 2 * split.x.sub.dim();
        let ny = 2 * split.y.sub.dim();
        let graph = crate::lattice::is_graph(&split.kernel, nx, ny)
            && crate::lattice::is_isotropic(&split.kernel, &split.x.sub.form, &split.y.sub.form, CombinedPairing::Sum);
        let order = split.kernel.group_order;
        let expected = (self.delta * self.delta) as f64;
        let holds = riemann
            && a_principal
            && dx == self.delta
            && dy == self.delta
            && order == self.delta * self.delta
            && (ratio - expected).abs() < 1e-8 * expected
            && graph;
        Ok(ScenarioInvariants {
            degree_x: dx,
            degree_y: dy,
            a_principal,
            kernel_order: order,
            covolume_ratio: ratio,
            riemann_relations: riemann,
            kernel_graph_isotropic: graph,
            holds,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        if !s.check_invariants()?.holds {
            return Err(Error::Parse("scenario invariants do not hold".into()));
        }
        Ok(s)
    }
}

/// `2 ≤ δ ≤ n ≤ g/2`
pub fn check_parameters(n: usize, g: usize, delta: u64) -> Result<()> {
    if delta >= 2 && delta as usize <= n && 2 * n <= g {
        Ok(())
    } else {
        Err(Error::ParametersOutOfRange { n, g, delta })
    }
}

pub fn build_complementary_example(n: usize, g: usize, delta: u64, seed: u64) -> Result<Scenario> {
    build_complementary_example_with_kernel(n, g, delta, seed, 0)
}

/// Number of admissible kernels for the factors drawn from `seed`.
pub fn admissible_kernel_count(n: usize, g: usize, delta: u64) -> Result<usize> {
    check_parameters(n, g, delta)?;
    let tx = one_delta_type(n, delta)?;
    let ty = one_delta_type(g - n, delta)?;
    let ex = IntAlternatingForm::standard(&tx);
    let ey = IntAlternatingForm::standard(&ty);
    let (kx, ky) = (k_group_generators(&tx), k_group_generators(&ty));
    Ok(enumerate_graph_isotropic(&kx, &ex, &ky, &ey, CombinedPairing::Sum).len())
}

/// Same draw of `X`, `Y` as [`build_complementary_example`], with the kernel
/// at position `kernel_index` of the canonical enumeration.
pub fn build_complementary_example_with_kernel(
    n: usize,
    g: usize,
    delta: u64,
    seed: u64,
    kernel_index: usize,
) -> Result<Scenario> {
    check_parameters(n, g, delta)?;
    let mut rng = seeded_rng(seed);
    let tx = one_delta_type(n, delta)?;
    let ty = one_delta_type(g - n, delta)?;
    let x = PolarizedTorus::from_normalized(random_tau(&mut rng, n), &tx)?;
    let y = PolarizedTorus::from_normalized(random_tau(&mut rng, g - n), &ty)?;
    let (kx, ky) = (k_group_generators(&tx), k_group_generators(&ty));
    let kernels = enumerate_graph_isotropic(&kx, &x.form, &ky, &y.form, CombinedPairing::Sum);
    let kernel = kernels
        .into_iter()
        .nth(kernel_index)
        .ok_or_else(|| Error::OutOfRange(format!("kernel index {kernel_index}")))?;
    let mut s = split_scenario(x, y, kernel, ScenarioKind::Complementary, delta)?;
    s.seed = Some(seed);
    s.kernel_index = Some(kernel_index);
    Ok(s)
}

/// `X × Y` with principal factors and trivial kernel.
pub fn product_example(n: usize, g: usize, seed: u64) -> Result<Scenario> {
    if n == 0 || n >= g {
        return Err(Error::OutOfRange(format!("need 1 <= n < g, got n={n}, g={g}")));
    }
    let mut rng = seeded_rng(seed);
    let x = PolarizedTorus::from_normalized(random_tau(&mut rng, n), &PolarizationType::principal(n))?;
    let y = PolarizedTorus::from_normalized(random_tau(&mut rng, g - n), &PolarizationType::principal(g - n))?;
    let mut s = split_scenario(x, y, FiniteSubgroup::trivial(2 * g), ScenarioKind::Product, 1)?;
    s.seed = Some(seed);
    Ok(s)
}

/// A principal torus with seeded random `τ` and no splitting data.
pub fn control_example(g: usize, seed: u64) -> Result<Scenario> {
    let mut rng = seeded_rng(seed);
    let a = PolarizedTorus::from_normalized(random_tau(&mut rng, g), &PolarizationType::principal(g))?;
    Ok(Scenario {
        kind: ScenarioKind::Control,
        n: 0,
        g,
        delta: 1,
        seed: Some(seed),
        kernel_index: None,
        a,
        split: None,
        complex_structure: None,
        gauge: OnceLock::new(),
    })
}

fn split_scenario(
    x: PolarizedTorus,
    y: PolarizedTorus,
    kernel: FiniteSubgroup,
    kind: ScenarioKind,
    delta: u64,
) -> Result<Scenario> {
    let (n, m) = (x.dim(), y.dim());
    let g = n + m;
    let product = build_product(&x, &y)?;
    let q = quotient_by_kernel(&product, &kernel)?;
    let product_to_a = q.parent_to_quotient()?;
    assemble(x, y, kernel, product, product_to_a, q.torus.torus, q.torus.form, kind, delta, g)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    x: PolarizedTorus,
    y: PolarizedTorus,
    kernel: FiniteSubgroup,
    product: PolarizedTorus,
    product_to_a: IntMatrix,
    a_torus: ComplexTorus,
    a_form: IntAlternatingForm,
    kind: ScenarioKind,
    delta: u64,
    g: usize,
) -> Result<Scenario> {
    let n = x.dim();
    // Lagrangian spanned by the D-halves of both factors
    let lagrangian = &product_to_a * &product.symplectic_basis.columns(0, g);
    let basis = lagrangian_symplectic_basis(&a_form, &lagrangian)?;
    let a = PolarizedTorus::with_symplectic_basis(a_torus, a_form, basis)?;
    if !a.ty.is_principal() {
        return Err(Error::Numerical("quotient polarization is not principal".into()));
    }
    let tx = CMatrix::from_fn(g, n, |i, j| Complex64::new((i == j) as i64 as f64, 0.0));
    let ty = CMatrix::from_fn(g, g - n, |i, j| Complex64::new((i == n + j) as i64 as f64, 0.0));
    let x_map = product_to_a.columns(0, 2 * n);
    let y_map = product_to_a.columns(2 * n, 2 * g);
    Ok(Scenario {
        kind,
        n,
        g,
        delta,
        seed: None,
        kernel_index: None,
        a,
        split: Some(Split {
            x: SubtorusEmbedding { sub: x, tangent_map: tx, lattice_map: x_map },
            y: SubtorusEmbedding { sub: y, tangent_map: ty, lattice_map: y_map },
            kernel,
            product,
            product_to_a,
        }),
        complex_structure: None,
        gauge: OnceLock::new(),
    })
}

/// Symplectic basis `(L | F)` of a unimodular form whose first half spans the
/// saturation of the given isotropic columns.
pub fn lagrangian_symplectic_basis(e: &IntAlternatingForm, isotropic: &IntMatrix) -> Result<IntMatrix> {
    let dim = e.dim();
    let g = dim / 2;
    let l = saturate_columns(isotropic);
    if l.ncols() != g {
        return Err(Error::RankDeficient("isotropic columns do not span a Lagrangian".into()));
    }
    if !l.congruence(e.matrix())?.is_zero() {
        return Err(Error::Numerical("columns are not isotropic".into()));
    }
    let full = complete_to_unimodular(&l);
    let c = full.columns(g, dim);
    let b = l.transpose().checked_mul(e.matrix())?.checked_mul(&c)?;
    if b.determinant()?.abs() != 1 {
        return Err(Error::NotAPolarization);
    }
    let f = c.checked_mul(&unimodular_inverse(&b))?;
    let s = f.congruence(e.matrix())?;
    let w = IntMatrix::from_fn(g, g, |i, j| if j > i { s[(i, j)] } else { 0 });
    let f = IntMatrix::from_fn(dim, g, |i, j| f[(i, j)] + (0..g).map(|k| l[(i, k)] * w[(k, j)]).sum::<i64>());
    let basis = l.hstack(&f);
    let std = IntAlternatingForm::standard(&PolarizationType::principal(g));
    if &basis.congruence(e.matrix())? != std.matrix() {
        return Err(Error::Numerical("symplectic completion failed".into()));
    }
    Ok(basis)
}

/// Diagnostics of the exact steps of [`e8_scenario`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct E8Construction {
    pub j: IntMatrix,
    pub entry_bound: i64,
    pub s_stable: bool,
    pub complement: IntMatrix,
    pub complement_stable: bool,
    pub type_x: PolarizationType,
    pub type_y: PolarizationType,
}

pub fn e8_scenario() -> Result<Scenario> {
    e8_scenario_with_form(&e8_form()).map(|(s, _)| s)
}

pub fn e8_scenario_with_form(e: &IntAlternatingForm) -> Result<(Scenario, E8Construction)> {
    if e.dim() != 8 {
        return Err(Error::DimensionMismatch("rank-8 form expected".into()));
    }
    let (j, bound) = e8_complex_structure(e)?;
    e8_scenario_from_structure(e, j, bound)
}

/// Largest entry bound tried before giving up.
pub const E8_MAX_ENTRY_BOUND: i64 = 3;

/// A complex structure for the rank-8 form that keeps `S = ⟨e₁…e₄⟩` stable
/// and makes `E·J` even, with the entry bound at which it was found.
pub fn e8_complex_structure(e: &IntAlternatingForm) -> Result<(IntMatrix, i64)> {
    if e.dim() != 8 {
        return Err(Error::DimensionMismatch("rank-8 form expected".into()));
    }
    let constraints = StructureConstraints { invariant_prefixes: vec![4], even: true };
    let mut bound = DEFAULT_ENTRY_BOUND;
    loop {
        match find_complex_structure_with(e, bound, &constraints) {
            Ok(j) => return Ok((j, bound)),
            Err(Error::NoComplexStructure { .. }) if bound < E8_MAX_ENTRY_BOUND => bound += 1,
            Err(err) => return Err(err),
        }
    }
}

pub fn e8_scenario_from_structure(
    e: &IntAlternatingForm,
    j: IntMatrix,
    bound: i64,
) -> Result<(Scenario, E8Construction)> {
    if e.dim() != 8 {
        return Err(Error::DimensionMismatch("rank-8 form expected".into()));
    }
    verify_complex_structure(e, &j).map_err(Error::Numerical)?;
    let sx = IntMatrix::from_fn(8, 4, |i, k| (i == k) as i64);
    let s_stable = preserves_span(&j, &sx);
    if !s_stable {
        return Err(Error::Numerical("S is not J-stable".into()));
    }
    let sy = integer_kernel(&sx.transpose().checked_mul(e.matrix())?);
    let complement_stable = preserves_span(&j, &sy);

    let ex = restrict_form(e, &(0..4).map(|k| sx.column(k)).collect::<Vec<_>>())?;
    let ey = restrict_form(e, &(0..sy.ncols()).map(|k| sy.column(k)).collect::<Vec<_>>())?;
    let (type_x, ux) = frobenius_normal_form(&ex)?;
    let (type_y, uy) = frobenius_normal_form(&ey)?;
    let bx = sx.checked_mul(ux.matrix())?;
    let by = sy.checked_mul(uy.matrix())?;

    // complex coordinates: rows r with r·J = i·r
    let jc = j.to_f64().map(|v| Complex64::new(v, 0.0));
    let shifted = jc.transpose() - CMatrix::identity(8, 8) * I;
    let eig = null_space(&shifted, 1e-9);
    if eig.ncols() != 4 {
        return Err(Error::Numerical("i-eigenspace of J has wrong dimension".into()));
    }
    let pi = eig.transpose();

    let (tx, tau_x) = factor_coordinates(&pi, &bx, &type_x)?;
    let (ty_map, tau_y) = factor_coordinates(&pi, &by, &type_y)?;
    let mut t = CMatrix::zeros(4, 4);
    t.view_mut((0, 0), (4, 2)).copy_from(&tx);
    t.view_mut((0, 2), (4, 2)).copy_from(&ty_map);
    let pi_u = invert_complex(&t)? * &pi;

    let x = PolarizedTorus::from_normalized(tau_x, &type_x)?;
    let y = PolarizedTorus::from_normalized(tau_y, &type_y)?;
    let product = build_product(&x, &y)?;
    let c = bx.hstack(&by);
    let (cinv, den) = c.rational_inverse()?;
    let gens: Vec<TorsionPoint> =
        (0..8).map(|k| TorsionPoint::from_fractions(&cinv.column(k), den)).filter(|p| !p.is_zero()).collect();
    let kernel = FiniteSubgroup::generated_by(8, gens);

    // the product lattice must sit inside Λ_A as c says
    let predicted = &pi_u * c.to_f64().map(|v| Complex64::new(v, 0.0));
    let err = (&predicted - &product.torus.lattice_basis).camax();
    if err > 1e-9 {
        return Err(Error::Numerical(format!("product lattice mismatch {err:e}")));
    }

    let delta = type_x.degree();
    let mut s = assemble(x, y, kernel, product, c, ComplexTorus::new(pi_u)?, e.clone(), ScenarioKind::E8, delta, 4)?;
    s.complex_structure = Some(j.clone());
    let info = E8Construction { j, entry_bound: bound, s_stable, complement: sy, complement_stable, type_x, type_y };
    Ok((s, info))
}

/// For a sublattice with symplectic basis columns `b` (type `ty`): the
/// tangent map `T` with `Π·b = T·(D | τ)`, and `τ`.
fn factor_coordinates(pi: &CMatrix, b: &IntMatrix, ty: &PolarizationType) -> Result<(CMatrix, CMatrix)> {
    let m = ty.dim();
    let v = pi * b.to_f64().map(|x| Complex64::new(x, 0.0));
    let t = CMatrix::from_fn(pi.nrows(), m, |i, j| v[(i, j)] / ty.divisors[j] as f64);
    let second = v.columns(m, m).into_owned();
    let pinv = t.clone().pseudo_inverse(1e-12).map_err(|e| Error::Numerical(e.to_string()))?;
    let tau = &pinv * &second;
    if (&t * &tau - &second).camax() > 1e-9 {
        return Err(Error::Numerical("sublattice is not a complex subtorus".into()));
    }
    Ok((t, tau))
}

impl Split {
    /// Ambient point `π(x, y)` from factor coordinates.
    pub fn ambient(&self, x: &DVector<Complex64>, y: &DVector<Complex64>) -> DVector<Complex64> {
        &self.x.tangent_map * x + &self.y.tangent_map * y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_gate() {
        assert!(matches!(build_complementary_example(1, 4, 2, 0), Err(Error::ParametersOutOfRange { .. })));
        assert!(matches!(check_parameters(3, 4, 2), Err(Error::ParametersOutOfRange { .. })));
        assert!(check_parameters(2, 4, 2).is_ok());
    }

    #[test]
    fn g4_example_invariants() {
        let s = build_complementary_example(2, 4, 2, 7).unwrap();
        let inv = s.check_invariants().unwrap();
        assert!(inv.holds, "{inv:?}");
        assert_eq!(s.g, 4);
        assert_eq!(s.split().unwrap().kernel.group_order, 4);
    }

    #[test]
    fn g6_example_types() {
        let s = build_complementary_example(2, 6, 2, 1).unwrap();
        let split = s.split().unwrap();
        assert_eq!(split.x.sub.dim(), 2);
        assert_eq!(split.y.sub.dim(), 4);
        assert_eq!(split.y.sub.ty.divisors, vec![1, 1, 1, 2]);
        assert!(s.check_invariants().unwrap().holds);
    }

    #[test]
    fn e8_construction() {
        let (s, info) = e8_scenario_with_form(&e8_form()).unwrap();
        assert_eq!(info.type_x.divisors, vec![1, 2]);
        assert_eq!(info.type_y.divisors, vec![1, 2]);
        assert!(info.s_stable && info.complement_stable);
        assert!(s.a.ty.is_principal());
        assert_eq!(s.split().unwrap().kernel.group_order, 4);
        assert!(s.check_invariants().unwrap().holds);
    }

    #[test]
    fn json_round_trip() {
        let s = build_complementary_example(2, 4, 2, 7).unwrap();
        let back = Scenario::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back.a.normalized_tau, s.a.normalized_tau);
        assert_eq!(back.split().unwrap().kernel, s.split().unwrap().kernel);
    }
}
