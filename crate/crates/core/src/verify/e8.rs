//! The exact and numerical checks of the rank-8 example, in order. A failed
//! step leaves the checks that depend on it undetermined.

use std::time::Instant;

use serde_json::Value;

use super::config::RunConfig;
use super::report::{timed, CheckRecord, RunReport, Status};
use crate::error::Error;
use crate::gauss::Probe;
use crate::lattice::{
    enumerate_graph_isotropic, frobenius_normal_form, is_antisymmetric, k_group_generators, preserves_span,
    restrict_form, verify_complex_structure, CombinedPairing, IntAlternatingForm, IntMatrix, PolarizationType,
};
use crate::theta::{base_locus, section_basis};
use crate::torus::{e8_complex_structure, e8_scenario_from_structure, E8Construction, Scenario, E8_V_BASIS};

pub const E8_KERNEL_COUNT: usize = 6;
pub const E8_BASE_POINTS: usize = 4;
pub const E8_BASE_POINT_ORDER: u64 = 4;
pub const E8_SINGULAR_POINTS: usize = 4;

fn s_basis() -> Vec<Vec<i64>> {
    (0..4).map(|k| (0..8).map(|i| (i == k) as i64).collect()).collect()
}

fn rows(m: &IntMatrix) -> Value {
    Value::from(m.to_rows())
}

/// Runs every check on `matrix`. The numerical steps need the exact ones.
pub fn e8_check(matrix: &IntMatrix, cfg: &RunConfig) -> RunReport {
    let start = Instant::now();
    let mut report = RunReport::new("e8-check", cfg);
    let (exact, built) = exact_checks(matrix);
    report.extend(exact);
    match built {
        Some((scenario, info)) => {
            report.scenario = Some((&scenario).into());
            report.extend(numerical_checks(&scenario, &info, cfg));
        }
        None => report.extend(NUMERICAL.iter().map(|(n, a)| CheckRecord::skipped(n, a, "exact steps failed"))),
    }
    report.runtime_s = start.elapsed().as_secs_f64();
    report
}

/// Only the exact steps.
pub fn e8_exact_checks(matrix: &IntMatrix) -> Vec<CheckRecord> {
    exact_checks(matrix).0
}

const NUMERICAL: [(&str, &str); 4] = [
    ("scenario_invariants", "scenario.invariants"),
    ("base_locus_x", "e8.base_points_order_four"),
    ("kernel_count", "e8.kernel_count"),
    ("singular_points", "e8.singular_two_torsion"),
];

fn skip_rest(out: &mut Vec<CheckRecord>, names: &[(&str, &str)], why: &str) {
    out.extend(names.iter().map(|(n, a)| CheckRecord::skipped(n, a, why)));
}

fn exact_checks(matrix: &IntMatrix) -> (Vec<CheckRecord>, Option<(Scenario, E8Construction)>) {
    let mut out = Vec::new();
    let dim_ok = matrix.is_square() && matrix.nrows() == 8;
    let anti = timed("antisymmetric", "e8.antisymmetric", |r| {
        r.count("rows", matrix.nrows() as i64).count("cols", matrix.ncols() as i64);
        Ok(Status::from_bool(dim_ok && is_antisymmetric(matrix)))
    });
    let form = (anti.status == Status::Pass).then(|| IntAlternatingForm::new(matrix.clone()).ok()).flatten();
    out.push(anti);
    let Some(form) = form else {
        let rest = [
            ("frobenius_type", "e8.principal_type"),
            ("restriction_type", "e8.restriction_type"),
            ("v_basis_identity", "e8.v_basis"),
            ("complex_structure", "e8.complex_structure"),
            ("s_stable", "e8.s_stable"),
        ];
        skip_rest(&mut out, &rest, "matrix is not an antisymmetric 8x8 form");
        return (out, None);
    };

    let principal = timed("frobenius_type", "e8.principal_type", |r| {
        let (ty, u) = frobenius_normal_form(&form)?;
        let exact = &u.matrix().congruence(form.matrix())? == IntAlternatingForm::standard(&ty).matrix();
        r.measure_value("divisors", Value::from(ty.divisors.clone()))
            .measure_value("normal_form_identity", Value::Bool(exact));
        Ok(Status::from_bool(exact && ty.is_principal()))
    });
    let is_principal = principal.status == Status::Pass;
    out.push(principal);

    out.push(timed("restriction_type", "e8.restriction_type", |r| {
        let es = restrict_form(&form, &s_basis())?;
        let (ty, _) = frobenius_normal_form(&es)?;
        r.measure_value("restricted", rows(es.matrix())).measure_value("divisors", Value::from(ty.divisors.clone()));
        Ok(Status::from_bool(ty == PolarizationType::new(vec![1, 2])?))
    }));

    out.push(timed("v_basis_identity", "e8.v_basis", |r| {
        let v: Vec<Vec<i64>> = E8_V_BASIS.iter().map(|row| row.to_vec()).collect();
        let ev = restrict_form(&form, &v)?;
        let target = IntAlternatingForm::standard(&PolarizationType::new(vec![1, 2])?);
        r.measure_value("restricted", rows(ev.matrix()));
        Ok(Status::from_bool(ev == target))
    }));

    if !is_principal {
        skip_rest(
            &mut out,
            &[("complex_structure", "e8.complex_structure"), ("s_stable", "e8.s_stable")],
            "form is not unimodular",
        );
        return (out, None);
    }

    let mut found = None;
    out.push(timed("complex_structure", "e8.complex_structure", |r| {
        let (j, bound) = e8_complex_structure(&form)?;
        let verified = verify_complex_structure(&form, &j);
        r.count("entry_bound", bound).count("max_entry", j.max_abs()).measure_value("j", rows(&j));
        if let Err(why) = &verified {
            r.note(why.clone());
        }
        let ok = verified.is_ok();
        found = Some((j, bound));
        Ok(Status::from_bool(ok))
    }));
    let Some((j, bound)) = found else {
        skip_rest(&mut out, &[("s_stable", "e8.s_stable")], "no complex structure");
        return (out, None);
    };
    out.push(timed("s_stable", "e8.s_stable", |_| {
        let s = IntMatrix::from_columns(&s_basis(), 8)?;
        Ok(Status::from_bool(preserves_span(&j, &s)))
    }));

    match e8_scenario_from_structure(&form, j, bound) {
        Ok(built) => (out, Some(built)),
        Err(e) => {
            let mut rec = CheckRecord::new("scenario", "e8.scenario");
            rec.status = Status::Fail;
            rec.note(e.to_string());
            out.push(rec);
            (out, None)
        }
    }
}

fn numerical_checks(scenario: &Scenario, info: &E8Construction, cfg: &RunConfig) -> Vec<CheckRecord> {
    let mut out = vec![super::suites::invariants_check(scenario)];
    let split = match scenario.split() {
        Ok(s) => s,
        Err(e) => {
            skip_rest(&mut out, &NUMERICAL[1..], &e.to_string());
            return out;
        }
    };

    out.push(timed("base_locus_x", "e8.base_points_order_four", |r| {
        let x = &split.x.sub;
        let basis = section_basis(&x.normalized_tau, &info.type_x)?;
        let locus = base_locus(&basis, cfg.base_grid, crate::theta::base_locus::DEFAULT_TOL)?;
        let orders: Vec<Value> =
            locus.orders().into_iter().map(|o| o.map(Value::from).unwrap_or(Value::Null)).collect();
        r.count("points", locus.points.len() as i64)
            .measure("max_residual", locus.max_residual())
            .measure_value("orders", Value::Array(orders));
        let ok = locus.points.len() == E8_BASE_POINTS && locus.orders().iter().all(|o| *o == Some(E8_BASE_POINT_ORDER));
        Ok(Status::from_bool(ok))
    }));

    out.push(timed("kernel_count", "e8.kernel_count", |r| {
        let (x, y) = (&split.x.sub, &split.y.sub);
        let kernels = enumerate_graph_isotropic(
            &k_group_generators(&x.ty),
            &IntAlternatingForm::standard(&x.ty),
            &k_group_generators(&y.ty),
            &IntAlternatingForm::standard(&y.ty),
            CombinedPairing::Sum,
        );
        r.count("kernels", kernels.len() as i64);
        Ok(Status::from_bool(kernels.len() == E8_KERNEL_COUNT))
    }));

    out.push(timed("singular_points", "e8.singular_two_torsion", |r| {
        let mut probe = Probe::new(scenario, cfg.gates)?;
        probe.base_grid = cfg.base_grid;
        let rep = probe.singular_locus_probe(cfg.singular_samples)?;
        if rep.positive_dimensional {
            return Err(Error::Numerical("base locus is not finite".into()));
        }
        let orders: Vec<Value> = rep.points.iter().map(|p| p.order.map(Value::from).unwrap_or(Value::Null)).collect();
        r.count("points", rep.count as i64)
            .count("base_points_x", rep.base_locus_x as i64)
            .count("base_points_y", rep.base_locus_y as i64)
            .measure_value("orders", Value::Array(orders));
        Ok(Status::from_bool(rep.count == E8_SINGULAR_POINTS && rep.all_two_torsion()))
    }));
    out
}
