//! Acceptance criteria 1–7, one pass/fail line each. Runs without the libtest
//! harness so the lines are always printed.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use rand::Rng;
use theta_lab::gauss::probes::DEFAULT_SINGULAR_SAMPLES;
use theta_lab::gauss::{andreotti_mayer_report, Factor, Probe};
use theta_lab::lattice::{
    frobenius_normal_form, paired_elementary_divisors, IntAlternatingForm, IntMatrix, PolarizationType,
};
use theta_lab::linalg::{cnorm, CMatrix, CVector};
use theta_lab::theta::{
    automorphy_exponent, base_locus, decomposition_fit, section_basis, BaseLocus, ThetaCharacteristic, ThetaEvaluator,
    DEFAULT_EPS,
};
use theta_lab::torus::scenario::E8_MAX_ENTRY_BOUND;
use theta_lab::torus::{
    build_complementary_example, control_example, e8_form, moduli_dimension, random_tau, seeded_rng, ComplexTorus,
    Scenario, E8_V_BASIS,
};
use theta_lab::verify::{e8_exact_checks, kernel_sweep, RunConfig, Status};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn lib<T>(r: theta_lab::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn int_to_f64(m: &IntMatrix) -> DMatrix<f64> {
    m.to_f64()
}

// 1. exact reproduction of the rank-8 example
fn e8_exact() -> Outcome {
    let e = e8_form();
    let em = e.matrix();
    let records = e8_exact_checks(em);
    for rec in &records {
        ensure(rec.status == Status::Pass, format!("{} is {}", rec.name, rec.status.label()))?;
    }

    // independent recomputation of the v-basis identity
    let v = IntMatrix::from_rows(&E8_V_BASIS.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap().transpose();
    let gram = v.transpose().checked_mul(em).and_then(|m| m.checked_mul(&v)).unwrap();
    let expected = [[0, 0, 1, 0], [0, 0, 0, 2], [-1, 0, 0, 0], [0, -2, 0, 0]];
    ensure(gram.to_rows() == expected.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), "v-basis Gram matrix")?;
    let (ty, _) = lib(frobenius_normal_form(&e))?;
    ensure(ty.divisors == vec![1, 1, 1, 1], "Frobenius type of E")?;

    // the structure found by the exact suite, re-verified here
    let cs = records.iter().find(|r| r.name == "complex_structure").ok_or("no complex_structure record")?;
    let j_rows: Vec<Vec<i64>> = serde_json::from_value(cs.measured["j"].clone()).map_err(|e| e.to_string())?;
    let j = IntMatrix::from_rows(&j_rows).unwrap();
    let bound = cs.measured["entry_bound"].as_i64().ok_or("entry bound")?;
    ensure(bound <= E8_MAX_ENTRY_BOUND && j.max_abs() <= bound, "entry bound")?;
    let jj = j.checked_mul(&j).unwrap();
    ensure(jj == IntMatrix::identity(8).neg(), "J² = −I")?;
    let jej = j.transpose().checked_mul(em).and_then(|m| m.checked_mul(&j)).unwrap();
    ensure(&jej == em, "JᵀEJ = E")?;
    let ej = int_to_f64(&em.checked_mul(&j).unwrap());
    let sym = (&ej + ej.transpose()) * 0.5;
    ensure((&ej - ej.transpose()).norm() == 0.0, "E·J symmetric")?;
    ensure(Cholesky::new(sym).is_some(), "E·J positive definite")?;
    for c in 0..4 {
        ensure((4..8).all(|r| j[(r, c)] == 0), "J maps S into S")?;
    }
    Ok(format!("J found with entries bounded by {bound}"))
}

fn point_sets_agree(torus: &ComplexTorus, a: &BaseLocus, b: &BaseLocus, tol: f64) -> bool {
    a.points.len() == b.points.len()
        && a.points
            .iter()
            .all(|p| b.points.iter().any(|q| torus.distance_mod_lattice(&p.z, &q.z).map(|d| d < tol).unwrap_or(false)))
}

// 2. base locus of a (1,2) surface
fn base_locus_one_two() -> Outcome {
    let tau = random_tau(&mut seeded_rng(2024), 2);
    let basis = lib(section_basis(&tau, &PolarizationType::one_delta(2, 2)))?;
    let coarse = lib(base_locus(&basis, 16, 1e-8))?;
    let fine = lib(base_locus(&basis, 32, 1e-8))?;
    ensure(!coarse.positive_dimensional, "finite locus expected")?;
    ensure(coarse.points.len() == 4, format!("{} points", coarse.points.len()))?;
    ensure(coarse.max_residual() < 1e-8, format!("residual {:e}", coarse.max_residual()))?;
    ensure(coarse.orders().iter().all(|o| *o == Some(4)), format!("orders {:?}", coarse.orders()))?;
    let torus = lib(ComplexTorus::new(basis.lattice_basis()))?;
    ensure(point_sets_agree(&torus, &coarse, &fine, 1e-8), "grid doubling moved the locus")?;
    Ok(format!("4 points of order 4, residual {:.1e}", coarse.max_residual()))
}

fn g4_scenario() -> Result<Scenario, String> {
    lib(build_complementary_example(2, 4, 2, 7))
}

// 3. g = 4 construction
fn construction_g4() -> Outcome {
    let s = g4_scenario()?;
    let inv = lib(s.check_invariants())?;
    ensure(inv.holds && inv.a_principal, "A is not principal")?;
    let fit = lib(decomposition_fit(&s, 8))?;
    ensure(fit.rank <= 2 && fit.residual < 1e-8, format!("fit rank {} residual {:e}", fit.rank, fit.residual))?;

    let probe = lib(Probe::new(&s, Default::default()))?;
    let bx = lib(probe.base_locus(Factor::X))?;
    let by = lib(probe.base_locus(Factor::Y))?;
    let ry = lib(probe.containment_check(Factor::Y, &bx.points[0].z, 64, 7))?;
    let rx = lib(probe.containment_check(Factor::X, &by.points[0].z, 64, 7))?;
    ensure(rx < 1e-8 && ry < 1e-8, format!("containment {rx:e}, {ry:e}"))?;

    let sing = lib(probe.singular_from_loci(&bx, &by, DEFAULT_SINGULAR_SAMPLES))?;
    // |Bs L_X|·|Bs L_Y| pairs, each point hit δ² times
    let expected = bx.points.len() * by.points.len() / 4;
    ensure(expected == 4 && sing.count == 4, format!("{} singular points, expected {expected}", sing.count))?;
    ensure(sing.all_two_torsion(), "not all 2-torsion")?;
    let worst = sing.points.iter().map(|p| p.probe.value.max(p.probe.gradient)).fold(0.0, f64::max);
    ensure(worst < 1e-6, format!("|θ|, |∇θ| up to {worst:e}"))?;

    let sweep = lib(kernel_sweep(&s, &RunConfig::default()))?;
    ensure(sweep.counts.len() == 6, format!("{} kernels", sweep.counts.len()))?;
    ensure(sweep.invariant && sweep.all_two_torsion, format!("kernel sweep counts {:?}", sweep.counts))?;
    Ok(format!("fit residual {:.1e}, containment {:.1e}, 4 points over 6 kernels", fit.residual, rx.max(ry)))
}

// 4. Gauss fibers on a contained translate, g = 4
fn gauss_fibers_g4() -> Outcome {
    let s = g4_scenario()?;
    let probe = lib(Probe::new(&s, Default::default()))?;
    let bx = lib(probe.base_locus(Factor::X))?;
    let rep = lib(probe.fiber_rank_probe(&bx.points[0].z, 64, 7))?;
    ensure(rep.samples.len() >= 50, format!("{} smooth samples", rep.samples.len()))?;
    ensure(rep.annihilator_residual < 1e-6, format!("annihilator {:e}", rep.annihilator_residual))?;
    ensure(rep.image_rank <= 1, format!("rank {}", rep.image_rank))?;
    ensure(rep.fiber_dim_lower_bound >= 1, "fiber bound")?;
    Ok(format!(
        "{} smooth samples, annihilator {:.1e}, fiber dimension >= {}",
        rep.samples.len(),
        rep.annihilator_residual,
        rep.fiber_dim_lower_bound
    ))
}

// 5. g = 6, n = δ = 2
fn scaling_g6() -> Outcome {
    let s = lib(build_complementary_example(2, 6, 2, 1))?;
    let probe = lib(Probe::new(&s, Default::default()))?;
    let bx = lib(probe.base_locus(Factor::X))?;
    let by = lib(probe.base_locus(Factor::Y))?;
    let ry = lib(probe.containment_check(Factor::Y, &bx.points[0].z, 64, 1))?;
    let rx = lib(probe.containment_check(Factor::X, &by.points[0].z, 64, 1))?;
    ensure(rx < 1e-7 && ry < 1e-7, format!("containment {rx:e}, {ry:e}"))?;

    let sing = lib(probe.singular_from_loci(&bx, &by, DEFAULT_SINGULAR_SAMPLES))?;
    let passing = sing.points.iter().filter(|p| p.probe.passed).count();
    ensure(passing >= 5, format!("{passing} points pass the multiplicity gate"))?;
    let (ybasis, _) = lib(probe.basis(Factor::Y))?;
    for b in &by.points {
        let rank = lib(theta_lab::gauss::section_jacobian_rank(ybasis, &b.z))?;
        ensure(rank == 2, format!("section Jacobian rank {rank}"))?;
    }
    let fiber = lib(probe.fiber_rank_probe(&bx.points[0].z, 64, 1))?;
    ensure(fiber.fiber_dim_lower_bound >= 3, format!("fiber bound {}", fiber.fiber_dim_lower_bound))?;
    Ok(format!(
        "containment {:.1e}, {passing} singular points, {} Y base points of rank 2, fiber dimension >= {}",
        rx.max(ry),
        by.points.len(),
        fiber.fiber_dim_lower_bound
    ))
}

// 6. a simple principal surface
fn negative_control() -> Outcome {
    let s = lib(control_example(2, 3))?;
    let probe = lib(Probe::new(&s, Default::default()))?;
    let sing = lib(probe.critical_point_search())?;
    ensure(sing.count == 0, format!("{} singular points", sing.count))?;
    let fiber = lib(probe.fiber_rank_probe_generic(64, 3))?;
    ensure(fiber.full_rank_fraction >= 0.95, format!("full rank at {:.2}", fiber.full_rank_fraction))?;
    Ok(format!(
        "no singular point, full rank at {:.0}% of {} samples",
        100.0 * fiber.full_rank_fraction,
        fiber.samples.len()
    ))
}

fn quasi_periodicity(tau: &CMatrix, seed: u64) -> Result<f64, String> {
    let g = tau.nrows();
    let ev = lib(ThetaEvaluator::new(tau, DEFAULT_EPS))?;
    let mut rng = seeded_rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let ch = ThetaCharacteristic::new(
            (0..g).map(|_| rng.gen_range(0..4) as f64 / 4.0).collect(),
            (0..g).map(|_| rng.gen_range(0..4) as f64 / 4.0).collect(),
        );
        let z = CVector::from_fn(g, |_, _| Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)));
        let k: Vec<i64> = (0..g).map(|_| rng.gen_range(-2..=2)).collect();
        let m: Vec<i64> = (0..g).map(|_| rng.gen_range(-1..=1)).collect();
        let shift = CVector::from_fn(g, |i, _| {
            Complex64::new(k[i] as f64, 0.0) + (0..g).map(|j| tau[(i, j)] * m[j] as f64).sum::<Complex64>()
        });
        let v0 = lib(ev.eval(&ch, &z, 0))?;
        let v1 = lib(ev.eval(&ch, &(&z + shift), 0))?;
        let t = automorphy_exponent(&ch, &z, tau, &k, &m);
        let rhs = v0.value * (v0.log_scale - v1.log_scale + Complex64::new(0.0, 2.0 * PI) * t).exp();
        worst = worst.max((v1.value - rhs).norm() / v1.value.norm().max(1.0));
    }
    Ok(worst)
}

fn finite_differences(tau: &CMatrix, seed: u64) -> Result<f64, String> {
    let g = tau.nrows();
    let ev = lib(ThetaEvaluator::new(tau, DEFAULT_EPS))?;
    let mut rng = seeded_rng(seed);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let ch = ThetaCharacteristic::new((0..g).map(|_| rng.gen()).collect(), (0..g).map(|_| rng.gen()).collect());
        let z = CVector::from_fn(g, |_, _| Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)));
        let v = lib(ev.eval(&ch, &z, 2))?;
        let mut fd_grad = CVector::zeros(g);
        let mut fd_hess = CMatrix::zeros(g, g);
        for k in 0..g {
            let mut step = CVector::zeros(g);
            step[k] = Complex64::new(h, 0.0);
            let p = lib(ev.eval(&ch, &(&z + &step), 1))?;
            let q = lib(ev.eval(&ch, &(&z - &step), 1))?;
            let (sp, sq) = ((p.log_scale - v.log_scale).exp(), (q.log_scale - v.log_scale).exp());
            fd_grad[k] = (p.value * sp - q.value * sq) / (2.0 * h);
            for l in 0..g {
                fd_hess[(l, k)] = (p.gradient()[l] * sp - q.gradient()[l] * sq) / (2.0 * h);
            }
        }
        let eg = cnorm(&(v.gradient() - &fd_grad)) / cnorm(v.gradient()).max(1.0);
        let eh = (v.hessian() - &fd_hess).norm() / v.hessian().norm().max(1.0);
        worst = worst.max(eg).max(eh);
    }
    Ok(worst)
}

/// A unimodular matrix from a seeded word of elementary column moves.
fn random_unimodular(n: usize, rng: &mut impl Rng) -> IntMatrix {
    let mut u = IntMatrix::identity(n);
    for _ in 0..3 * n {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            u.add_col_multiple(a, b, rng.gen_range(-2..=2));
        } else {
            u.negate_col(a);
        }
    }
    u
}

// 7. numerical property suites and closed-form counts
fn properties() -> Outcome {
    let g4 = g4_scenario()?;
    let control = lib(control_example(2, 3))?;
    let mut qp: f64 = 0.0;
    let mut fd: f64 = 0.0;
    for (k, s) in [&g4, &control].into_iter().enumerate() {
        qp = qp.max(quasi_periodicity(s.tau_a(), 100 + k as u64)?);
        fd = fd.max(finite_differences(s.tau_a(), 200 + k as u64)?);
    }
    ensure(qp < 10.0 * DEFAULT_EPS, format!("quasi-periodicity {qp:e}"))?;
    ensure(fd < 1e-6, format!("finite differences {fd:e}"))?;

    let mut rng = seeded_rng(300);
    let types: [&[u64]; 5] = [&[1, 2], &[2, 2], &[1, 1, 3], &[1, 2, 4], &[2, 6]];
    for i in 0..200 {
        let ty = PolarizationType::new(types[i % types.len()].to_vec()).unwrap();
        let std = IntAlternatingForm::standard(&ty);
        let e = lib(std.transform(&random_unimodular(std.dim(), &mut rng)))?;
        let (found, change) = lib(frobenius_normal_form(&e))?;
        let paired = lib(paired_elementary_divisors(&e))?;
        ensure(found.divisors == ty.divisors && paired == ty.divisors, format!("type mismatch on form {i}"))?;
        ensure(lib(e.transform(change.matrix()))?.matrix() == std.matrix(), format!("basis change {i}"))?;
    }

    ensure(lib(moduli_dimension(2, 4))? == 6, "moduli dimension")?;
    ensure(lib(andreotti_mayer_report(4, 2, 2))?.k == 0, "Andreotti–Mayer k")?;
    Ok(format!("quasi-periodicity {qp:.1e}, finite differences {fd:.1e}, 200 conjugated forms"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 rank-8 example, exact", e8_exact, Duration::from_secs(10)),
        ("2 base locus of a (1,2) surface", base_locus_one_two, Duration::from_secs(60)),
        ("3 construction, g = 4", construction_g4, Duration::from_secs(300)),
        ("4 Gauss fibers, g = 4", gauss_fibers_g4, Duration::from_secs(300)),
        ("5 scaling, g = 6", scaling_g6, Duration::from_secs(1800)),
        ("6 simple principal surface", negative_control, Duration::from_secs(120)),
        ("7 property suites", properties, Duration::from_secs(600)),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > limit => Err(format!("{detail}; over the {}s limit", limit.as_secs())),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} ({:.1}s)", took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why} ({:.1}s)", took.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
