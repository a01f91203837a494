use std::collections::BTreeSet;

use nalgebra::DVector;
use num_integer::Integer;
use num_traits::Zero;
use proptest::prelude::*;
use theta_lab::lattice::{
    enumerate_graph_isotropic, frobenius_normal_form, generated_subspace, k_group_generators, smith_normal_form,
    weil_pairing, CombinedPairing, FiniteSubgroup, IntAlternatingForm, IntMatrix, PolarizationType, TorsionPoint,
};

/// Random unimodular matrix as a word in elementary moves.
fn unimodular(n: usize, moves: &[(usize, usize, i64)]) -> IntMatrix {
    let mut u = IntMatrix::identity(n);
    for &(a, b, k) in moves {
        let (a, b) = (a % n, b % n);
        if a == b {
            u.negate_col(a);
        } else {
            u.add_col_multiple(a, b, k);
        }
    }
    u
}

fn polarization_type() -> impl Strategy<Value = Vec<u64>> {
    // divisor chains d1 | d2 | d3 from step factors
    prop::collection::vec(1u64..4, 1..=3).prop_map(|steps| {
        let mut d = 1;
        steps
            .into_iter()
            .map(|s| {
                d *= s;
                d
            })
            .collect()
    })
}

fn moves() -> impl Strategy<Value = Vec<(usize, usize, i64)>> {
    prop::collection::vec((0usize..6, 0usize..6, -2i64..=2), 0..24)
}

/// gcd of all k×k minors, by cofactor expansion; small matrices only.
fn determinantal_divisor(m: &IntMatrix, k: usize) -> i64 {
    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        (0..n)
            .flat_map(|last| {
                subsets(last, k - 1).into_iter().map(move |mut s| {
                    s.push(last);
                    s
                })
            })
            .collect()
    }
    let mut g = 0i64;
    for rows in subsets(m.nrows(), k) {
        for cols in subsets(m.ncols(), k) {
            let minor = IntMatrix::from_fn(k, k, |i, j| m[(rows[i], cols[j])]);
            g = g.gcd(&(minor.determinant().unwrap() as i64));
        }
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn frobenius_type_survives_change_of_basis(divs in polarization_type(), mv in moves()) {
        let ty = PolarizationType::new(divs.clone()).unwrap();
        let std = IntAlternatingForm::standard(&ty);
        let u = unimodular(std.dim(), &mv);
        let e = std.transform(&u).unwrap();
        let (found, change) = frobenius_normal_form(&e).unwrap();
        prop_assert_eq!(&found.divisors, &divs);
        let back = e.transform(change.matrix()).unwrap();
        prop_assert_eq!(back.matrix(), std.matrix());
    }

    #[test]
    fn smith_matches_determinantal_divisors(rows in prop::collection::vec(prop::collection::vec(-6i64..=6, 3), 3)) {
        let m = IntMatrix::from_rows(&rows).unwrap();
        let s = smith_normal_form(&m);
        let lmr = s.left.checked_mul(&m).unwrap().checked_mul(&s.right).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(lmr[(i, j)], if i == j { s.divisors[i] } else { 0 });
            }
        }
        let mut prev = 1i64;
        for k in 1..=3 {
            let dk = determinantal_divisor(&m, k);
            let expected = if dk == 0 { 0 } else { dk / prev };
            prop_assert_eq!(s.divisors[k - 1].abs(), expected);
            if dk != 0 { prev = dk; }
        }
    }

    #[test]
    fn weil_pairing_is_bilinear_and_alternating(
        x in prop::collection::vec(0i64..6, 4),
        y in prop::collection::vec(0i64..6, 4),
        z in prop::collection::vec(0i64..6, 4),
    ) {
        let e = IntAlternatingForm::standard(&PolarizationType::new(vec![2, 6]).unwrap());
        // K(L) for type (2, 6): denominators 2, 6, 2, 6
        let p = |v: &[i64]| TorsionPoint::from_fractions(&[3 * v[0], v[1], 3 * v[2], v[3]], 6);
        let (x, y, z) = (p(&x), p(&y), p(&z));
        let sum = weil_pairing(&e, &x.add(&y), &z);
        let split = weil_pairing(&e, &x, &z) + weil_pairing(&e, &y, &z);
        prop_assert!((sum - split).fract().is_zero());
        prop_assert!(weil_pairing(&e, &x, &x).is_zero());
        prop_assert!((weil_pairing(&e, &x, &y) + weil_pairing(&e, &y, &x)).fract().is_zero());
    }

    #[test]
    fn generated_subspace_is_idempotent_and_monotone(
        a in prop::collection::vec(prop::collection::vec(-3i64..=3, 4), 1..=2),
        b in prop::collection::vec(-3i64..=3, 4),
    ) {
        let j = IntMatrix::from_rows(&[
            vec![0, 0, -1, 0],
            vec![0, 0, 0, -1],
            vec![1, 0, 0, 0],
            vec![0, 1, 0, 0],
        ]).unwrap();
        let f = |v: &Vec<i64>| DVector::from_iterator(4, v.iter().map(|&x| x as f64));
        let small: Vec<_> = a.iter().map(f).collect();
        let w = generated_subspace(&j, &small);
        prop_assert!(!w.support_fallback);
        let cols: Vec<_> = (0..w.real_dim()).map(|c| f(&w.basis.column(c))).collect();
        let again = generated_subspace(&j, &cols);
        prop_assert_eq!(again.real_dim(), w.real_dim());
        for c in 0..again.real_dim() {
            prop_assert!(w.contains(&again.basis.column(c)));
        }
        let mut large = small.clone();
        large.push(f(&b));
        let big = generated_subspace(&j, &large);
        prop_assert!(big.real_dim() >= w.real_dim());
        for c in 0..w.real_dim() {
            prop_assert!(big.contains(&w.basis.column(c)));
        }
        for v in &a {
            if v.iter().any(|&x| x != 0) {
                prop_assert!(w.contains(v));
            }
        }
    }
}

/// Every subgroup of `Kx ⊕ Ky` spanned by two elements, as element sets.
fn two_generated_subgroups(
    kx: &FiniteSubgroup,
    ky: &FiniteSubgroup,
    nx: usize,
    ny: usize,
) -> BTreeSet<Vec<TorsionPoint>> {
    let xs = kx.elements(nx);
    let ys = ky.elements(ny);
    let all: Vec<TorsionPoint> = xs.iter().flat_map(|x| ys.iter().map(move |y| x.concat(y))).collect();
    let mut out = BTreeSet::new();
    for a in &all {
        for b in &all {
            out.insert(FiniteSubgroup::generated_by(nx + ny, vec![a.clone(), b.clone()]).elements(nx + ny));
        }
    }
    out
}

fn brute_force_kernels(delta: u64) -> (BTreeSet<Vec<TorsionPoint>>, BTreeSet<Vec<TorsionPoint>>) {
    let ty = PolarizationType::one_delta(2, delta);
    let e = IntAlternatingForm::standard(&ty);
    let k = k_group_generators(&ty);
    let (nx, ny) = (e.dim(), e.dim());
    let order = k.group_order as usize;
    let brute: BTreeSet<_> = two_generated_subgroups(&k, &k, nx, ny)
        .into_iter()
        .filter(|els| els.len() == order)
        .filter(|els| {
            els.iter().filter(|p| !p.is_zero()).all(|p| {
                let (x, y) = p.split_at(nx);
                !x.is_zero() && !y.is_zero()
            })
        })
        .filter(|els| els.iter().all(|a| els.iter().all(|b| CombinedPairing::Sum.eval(&e, &e, a, b).is_zero())))
        .collect();
    let found: BTreeSet<_> = enumerate_graph_isotropic(&k, &e, &k, &e, CombinedPairing::Sum)
        .into_iter()
        .map(|g| g.elements(nx + ny))
        .collect();
    (brute, found)
}

#[test]
fn graph_isotropic_kernels_match_brute_force() {
    for delta in [2u64, 3] {
        let (brute, found) = brute_force_kernels(delta);
        assert_eq!(brute, found, "delta = {delta}");
        // anti-symplectic isomorphisms of (Z/p)², counted by |SL2(F_p)|
        let p = delta as usize;
        assert_eq!(found.len(), p * (p * p - 1), "delta = {delta}");
    }
}

#[test]
fn weil_pairing_is_perfect_on_k_group() {
    let ty = PolarizationType::new(vec![2, 4]).unwrap();
    let e = IntAlternatingForm::standard(&ty);
    let els = k_group_generators(&ty).elements(4);
    assert_eq!(els.len(), 64);
    for x in els.iter().filter(|x| !x.is_zero()) {
        assert!(els.iter().any(|y| !weil_pairing(&e, x, y).is_zero()));
    }
}
