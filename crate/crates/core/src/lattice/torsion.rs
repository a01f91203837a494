//! Torsion points in rational lattice coordinates and finite subgroups of
//! `Q^{2m}/Z^{2m}`.

use std::collections::{BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::form::{IntAlternatingForm, PolarizationType};
use crate::error::{Error, Result};

/// Default rational-reconstruction tolerance for [`point_order`].
pub const RECONSTRUCTION_TOL: f64 = 1e-6;
/// Default largest denominator tried by [`point_order`].
pub const DEFAULT_MAX_DENOMINATOR: u64 = 16;

fn frac(q: Rational64) -> Rational64 {
    q - q.floor()
}

/// A point of `Q^{2m}/Z^{2m}`; coordinates are kept reduced to `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TorsionPoint {
    #[serde(with = "rational_vec")]
    pub coords: Vec<Rational64>,
    pub order: Option<u64>,
}

impl TorsionPoint {
    pub fn new(coords: Vec<Rational64>) -> Self {
        let coords: Vec<Rational64> = coords.into_iter().map(frac).collect();
        let order = coords.iter().fold(1i64, |acc, c| acc.lcm(c.denom())) as u64;
        Self { coords, order: Some(order) }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(vec![Rational64::zero(); dim])
    }

    /// `num[i] / den` for each coordinate.
    pub fn from_fractions(num: &[i64], den: i64) -> Self {
        Self::new(num.iter().map(|&p| Rational64::new(p, den)).collect())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, k: i64) -> Self {
        Self::new(self.coords.iter().map(|a| a * Rational64::from_integer(k)).collect())
    }

    pub fn concat(&self, other: &Self) -> Self {
        Self::new(self.coords.iter().chain(&other.coords).copied().collect())
    }

    pub fn split_at(&self, k: usize) -> (Self, Self) {
        (Self::new(self.coords[..k].to_vec()), Self::new(self.coords[k..].to_vec()))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|c| *c.numer() as f64 / *c.denom() as f64).collect()
    }
}

mod rational_vec {
    use num_rational::Rational64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|q| format!("{}/{}", q.numer(), q.denom())).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational64>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| {
                let (p, q) = s.split_once('/').unwrap_or((s.as_str(), "1"));
                let p: i64 = p.trim().parse().map_err(serde::de::Error::custom)?;
                let q: i64 = q.trim().parse().map_err(serde::de::Error::custom)?;
                if q == 0 {
                    return Err(serde::de::Error::custom("zero denominator"));
                }
                Ok(Rational64::new(p, q))
            })
            .collect()
    }
}

/// Finite subgroup of `Q^{2m}/Z^{2m}` given by generators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteSubgroup {
    pub generators: Vec<TorsionPoint>,
    pub group_order: u64,
}

impl FiniteSubgroup {
    pub fn generated_by(dim: usize, generators: Vec<TorsionPoint>) -> Self {
        let generators: Vec<TorsionPoint> = generators.into_iter().filter(|g| !g.is_zero()).collect();
        let group_order = closure(dim, &generators).len() as u64;
        Self { generators, group_order }
    }

    pub fn trivial(dim: usize) -> Self {
        Self::generated_by(dim, Vec::new())
    }

    /// Elements in canonical (lexicographic) order.
    pub fn elements(&self, dim: usize) -> Vec<TorsionPoint> {
        closure(dim, &self.generators).into_iter().collect()
    }

    pub fn contains(&self, dim: usize, p: &TorsionPoint) -> bool {
        self.elements(dim).contains(p)
    }
}

fn closure(dim: usize, generators: &[TorsionPoint]) -> BTreeSet<TorsionPoint> {
    let mut set = BTreeSet::new();
    let zero = TorsionPoint::zero(dim);
    set.insert(zero.clone());
    let mut frontier = vec![zero];
    while let Some(p) = frontier.pop() {
        for g in generators {
            let q = p.add(g);
            if set.insert(q.clone()) {
                frontier.push(q);
            }
        }
    }
    set
}

/// Generators `(1/dᵢ)·λᵢ`, `(1/dᵢ)·μᵢ` of `K(L) ≅ ⊕ (Z/dᵢ)²` in symplectic
/// lattice coordinates; trivial generators (dᵢ = 1) are omitted.
pub fn k_group_generators(ty: &PolarizationType) -> FiniteSubgroup {
    let m = ty.dim();
    let mut gens = Vec::new();
    for (i, &d) in ty.divisors.iter().enumerate() {
        if d == 1 {
            continue;
        }
        for slot in [i, m + i] {
            let mut c = vec![Rational64::zero(); 2 * m];
            c[slot] = Rational64::new(1, d as i64);
            gens.push(TorsionPoint::new(c));
        }
    }
    FiniteSubgroup::generated_by(2 * m, gens)
}

/// Exponent `q` of the pairing value `exp(2πi·q)`: `E(x̃, ỹ) mod 1`.
pub fn weil_pairing(e: &IntAlternatingForm, x: &TorsionPoint, y: &TorsionPoint) -> Rational64 {
    let m = e.matrix();
    let mut acc = Rational64::zero();
    for i in 0..e.dim() {
        if x.coords[i].is_zero() {
            continue;
        }
        for j in 0..e.dim() {
            let eij = m[(i, j)];
            if eij != 0 {
                acc += x.coords[i] * y.coords[j] * Rational64::from_integer(eij);
            }
        }
    }
    frac(acc)
}

/// How the pairings on the two factors combine on `Kx ⊕ Ky`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CombinedPairing {
    /// `e_X · e_Y`: the pairing of the exterior product `L_X ⊠ L_Y`; a
    /// subgroup isotropic for it is exactly one along which the form descends.
    Sum,
    /// `e_X · e_Y⁻¹`
    Difference,
}

impl CombinedPairing {
    pub fn eval(
        self,
        ex: &IntAlternatingForm,
        ey: &IntAlternatingForm,
        a: &TorsionPoint,
        b: &TorsionPoint,
    ) -> Rational64 {
        let nx = ex.dim();
        let (ax, ay) = a.split_at(nx);
        let (bx, by) = b.split_at(nx);
        let qx = weil_pairing(ex, &ax, &bx);
        let qy = weil_pairing(ey, &ay, &by);
        frac(match self {
            Self::Sum => qx + qy,
            Self::Difference => qx - qy,
        })
    }
}

/// True when every pair of elements pairs to zero.
pub fn is_isotropic(
    k: &FiniteSubgroup,
    ex: &IntAlternatingForm,
    ey: &IntAlternatingForm,
    pairing: CombinedPairing,
) -> bool {
    k.generators.iter().all(|a| k.generators.iter().all(|b| pairing.eval(ex, ey, a, b).is_zero()))
}

/// `K ∩ (Kx ⊕ 0) = 0` and `K ∩ (0 ⊕ Ky) = 0`.
pub fn is_graph(k: &FiniteSubgroup, nx: usize, ny: usize) -> bool {
    k.elements(nx + ny).iter().filter(|p| !p.is_zero()).all(|p| {
        let (x, y) = p.split_at(nx);
        !x.is_zero() && !y.is_zero()
    })
}

/// All graphs of isomorphisms `Kx → Ky` that are isotropic for the combined
/// pairing, in canonical order (lexicographic in the generator images).
pub fn enumerate_graph_isotropic(
    kx: &FiniteSubgroup,
    ex: &IntAlternatingForm,
    ky: &FiniteSubgroup,
    ey: &IntAlternatingForm,
    pairing: CombinedPairing,
) -> Vec<FiniteSubgroup> {
    let (nx, ny) = (ex.dim(), ey.dim());
    if kx.group_order != ky.group_order {
        return Vec::new();
    }
    let ys = ky.elements(ny);
    let gx = &kx.generators;
    let gen_orders: Vec<i64> = gx.iter().map(|g| g.order.unwrap_or(1) as i64).collect();

    let mut out = Vec::new();
    let mut choice = vec![0usize; gx.len()];
    loop {
        let images: Vec<&TorsionPoint> = choice.iter().map(|&c| &ys[c]).collect();
        if let Some(graph) = graph_of(gx, &gen_orders, &images, nx, ny, kx.group_order) {
            let pairs_ok = gx.iter().zip(&images).all(|(a, ia)| {
                gx.iter().zip(&images).all(|(b, ib)| pairing.eval(ex, ey, &a.concat(ia), &b.concat(ib)).is_zero())
            });
            if pairs_ok {
                out.push(graph);
            }
        }
        // odometer over generator images
        let mut slot = 0;
        loop {
            if slot == choice.len() {
                return out;
            }
            choice[slot] += 1;
            if choice[slot] < ys.len() {
                break;
            }
            choice[slot] = 0;
            slot += 1;
        }
    }
}

/// Graph subgroup when the generator images define an isomorphism.
fn graph_of(
    gx: &[TorsionPoint],
    orders: &[i64],
    images: &[&TorsionPoint],
    nx: usize,
    ny: usize,
    order: u64,
) -> Option<FiniteSubgroup> {
    let mut map: HashMap<TorsionPoint, TorsionPoint> = HashMap::new();
    let mut coeffs = vec![0i64; gx.len()];
    loop {
        let mut x = TorsionPoint::zero(nx);
        let mut y = TorsionPoint::zero(ny);
        for (i, &a) in coeffs.iter().enumerate() {
            x = x.add(&gx[i].scale(a));
            y = y.add(&images[i].scale(a));
        }
        match map.get(&x) {
            Some(prev) if *prev != y => return None,
            Some(_) => {}
            None => {
                map.insert(x, y);
            }
        }
        let mut slot = 0;
        loop {
            if slot == coeffs.len() {
                let distinct: BTreeSet<&TorsionPoint> = map.values().collect();
                if distinct.len() as u64 != order || map.len() as u64 != order {
                    return None;
                }
                let gens = gx.iter().zip(images).map(|(a, b)| a.concat(b)).collect();
                return Some(FiniteSubgroup::generated_by(nx + ny, gens));
            }
            coeffs[slot] += 1;
            if coeffs[slot] < orders[slot] {
                break;
            }
            coeffs[slot] = 0;
            slot += 1;
        }
    }
}

/// Reduced fraction `p/q` (q ≤ max_den) within `tol` of `c` modulo 1.
fn reconstruct(c: f64, max_den: u64, tol: f64) -> Result<Option<Rational64>> {
    let f = c - c.floor();
    let mut found: Option<Rational64> = None;
    for q in 1..=max_den as i64 {
        let p = (f * q as f64).round();
        if (f - p / q as f64).abs() < tol {
            let r = frac(Rational64::new(p as i64, q));
            match found {
                Some(prev) if prev != r => return Err(Error::TorsionUndecidable),
                _ => found = Some(r),
            }
        }
    }
    Ok(found)
}

/// Real lattice coordinates of a complex point: solves `Re/Im(Π·c) = z`.
pub fn lattice_coordinates(lattice_basis: &DMatrix<Complex64>, z: &DVector<Complex64>) -> Result<DVector<f64>> {
    let g = lattice_basis.nrows();
    if lattice_basis.ncols() != 2 * g || z.len() != g {
        return Err(Error::DimensionMismatch("lattice basis must be g x 2g".into()));
    }
    let real = crate::linalg::realify(lattice_basis);
    let rhs = DVector::from_fn(2 * g, |i, _| if i < g { z[i].re } else { z[i - g].im });
    real.lu().solve(&rhs).ok_or_else(|| Error::RankDeficient("lattice basis is not of full real rank".into()))
}

/// Least `m` with `m·z` in the lattice, from rational reconstruction of the
/// lattice coordinates of `z`; `None` when some coordinate is not rational
/// with denominator at most `max_denominator`.
pub fn point_order(
    lattice_basis: &DMatrix<Complex64>,
    z: &DVector<Complex64>,
    max_denominator: u64,
) -> Result<Option<u64>> {
    let coords = lattice_coordinates(lattice_basis, z)?;
    point_order_from_coords(coords.as_slice(), max_denominator, RECONSTRUCTION_TOL)
}

pub fn point_order_from_coords(coords: &[f64], max_denominator: u64, tol: f64) -> Result<Option<u64>> {
    let mut order = 1i64;
    for &c in coords {
        match reconstruct(c, max_denominator, tol)? {
            Some(r) => order = order.lcm(r.denom()),
            None => return Ok(None),
        }
    }
    Ok(Some(order as u64))
}

/// Rational lattice coordinates reduced mod 1, when reconstructible.
pub fn torsion_point_from_coords(coords: &[f64], max_denominator: u64) -> Result<Option<TorsionPoint>> {
    let mut out = Vec::with_capacity(coords.len());
    for &c in coords {
        match reconstruct(c, max_denominator, RECONSTRUCTION_TOL)? {
            Some(r) => out.push(r),
            None => return Ok(None),
        }
    }
    Ok(Some(TorsionPoint::new(out)))
}

impl Default for TorsionPoint {
    fn default() -> Self {
        Self { coords: Vec::new(), order: Some(1) }
    }
}

#[allow(dead_code)]
fn is_unit(q: &Rational64) -> bool {
    q.is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_form(d: Vec<u64>) -> IntAlternatingForm {
        IntAlternatingForm::standard(&PolarizationType::new(d).unwrap())
    }

    #[test]
    fn k_group_orders() {
        assert_eq!(k_group_generators(&PolarizationType::new(vec![1, 2]).unwrap()).group_order, 4);
        assert_eq!(k_group_generators(&PolarizationType::new(vec![1, 1]).unwrap()).group_order, 1);
        let k = k_group_generators(&PolarizationType::new(vec![2, 4]).unwrap());
        assert_eq!(k.group_order, 64);
        assert_eq!(k.elements(4).len(), 64);
    }

    #[test]
    fn generators_pair_to_half() {
        let e = std_form(vec![1, 2]);
        let k = k_group_generators(&PolarizationType::new(vec![1, 2]).unwrap());
        assert_eq!(weil_pairing(&e, &k.generators[0], &k.generators[1]), Rational64::new(1, 2));
        assert!(weil_pairing(&e, &k.generators[0], &k.generators[0]).is_zero());
    }

    #[test]
    fn six_graph_kernels_for_delta_two() {
        let ty = PolarizationType::new(vec![1, 2]).unwrap();
        let e = std_form(vec![1, 2]);
        let k = k_group_generators(&ty);
        for pairing in [CombinedPairing::Sum, CombinedPairing::Difference] {
            let all = enumerate_graph_isotropic(&k, &e, &k, &e, pairing);
            assert_eq!(all.len(), 6);
            for sub in &all {
                assert_eq!(sub.group_order, 4);
                assert!(is_graph(sub, 4, 4));
                assert!(is_isotropic(sub, &e, &e, pairing));
            }
        }
    }

    #[test]
    fn product_subgroup_is_rejected() {
        let ty = PolarizationType::new(vec![1, 2]).unwrap();
        let e = std_form(vec![1, 2]);
        let k = k_group_generators(&ty);
        let gens = k.generators.iter().map(|g| g.concat(&TorsionPoint::zero(4))).collect();
        let kx0 = FiniteSubgroup::generated_by(8, gens);
        assert_eq!(kx0.group_order, 4);
        assert!(!is_graph(&kx0, 4, 4));
        assert!(!is_isotropic(&kx0, &e, &e, CombinedPairing::Sum));
        assert!(!is_isotropic(&kx0, &e, &e, CombinedPairing::Difference));
    }

    #[test]
    fn trivial_case() {
        let e = std_form(vec![1, 1]);
        let k = k_group_generators(&PolarizationType::principal(2));
        let all = enumerate_graph_isotropic(&k, &e, &k, &e, CombinedPairing::Sum);
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].group_order, 1);
    }

    #[test]
    fn orders_from_coordinates() {
        assert_eq!(point_order_from_coords(&[0.5, 0.0], 16, 1e-6).unwrap(), Some(2));
        assert_eq!(point_order_from_coords(&[0.25, 0.5], 16, 1e-6).unwrap(), Some(4));
        assert_eq!(point_order_from_coords(&[2f64.sqrt(), 0.0], 16, 1e-6).unwrap(), None);
        assert!(matches!(point_order_from_coords(&[0.5], 16, 0.1), Err(Error::TorsionUndecidable)));
    }

    #[test]
    fn half_lattice_vector_has_order_two() {
        let basis = DMatrix::from_row_slice(1, 2, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        let z = DVector::from_element(1, Complex64::new(0.0, 0.5));
        assert_eq!(point_order(&basis, &z, 16).unwrap(), Some(2));
        let w = DVector::from_element(1, Complex64::new(0.1 * 2f64.sqrt(), 0.0));
        assert_eq!(point_order(&basis, &w, 16).unwrap(), None);
    }
}
