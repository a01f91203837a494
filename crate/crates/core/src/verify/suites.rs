//! Probe suites behind a name registry. `containment`, `singular` and
//! `gauss` each test one structural claim on a scenario; `all` selects every
//! registered suite in registration order.

use std::time::Instant;

use serde_json::Value;

use super::config::RunConfig;
use super::report::{timed, CheckRecord, RunReport, Status};
use crate::error::{Error, Result};
use crate::gauss::{
    andreotti_mayer_report, gauss_sample, product_preimages, same_point_set, same_projective_class, Factor, Probe,
    SingularProbeReport,
};
use crate::theta::{decomposition_fit, random_point, BaseLocus};
use crate::torus::{
    admissible_kernel_count, build_complementary_example_with_kernel, seeded_rng, Scenario, ScenarioKind,
};

/// Translates through a point off the base locus must leave `Θ` by this much.
const SEPARATION: f64 = 1e-2;
/// Share of generic Gauss differentials that must have full rank on a simple ppav.
const CONTROL_FULL_RANK: f64 = 0.95;
const POINT_SET_TOL: f64 = 1e-6;

/// Shared inputs of one run: the scenario, its probe state and, when the
/// scenario splits, both base loci.
pub struct SuiteContext<'a> {
    pub scenario: &'a Scenario,
    pub config: &'a RunConfig,
    pub probe: Probe<'a>,
    loci: Option<std::result::Result<(BaseLocus, BaseLocus), String>>,
}

impl<'a> SuiteContext<'a> {
    pub fn new(scenario: &'a Scenario, config: &'a RunConfig) -> Result<Self> {
        let mut probe = Probe::new(scenario, config.gates)?;
        probe.base_grid = config.base_grid;
        let loci = scenario.split.is_some().then(|| {
            let bx = probe.base_locus(Factor::X).map_err(|e| e.to_string())?;
            let by = probe.base_locus(Factor::Y).map_err(|e| e.to_string())?;
            Ok((bx, by))
        });
        Ok(Self { scenario, config, probe, loci })
    }

    pub fn loci(&self) -> Result<(&BaseLocus, &BaseLocus)> {
        match &self.loci {
            Some(Ok((x, y))) => Ok((x, y)),
            Some(Err(e)) => Err(Error::Numerical(e.clone())),
            None => Err(Error::Config("scenario has no complementary pair".into())),
        }
    }

    fn splits(&self) -> bool {
        self.scenario.split.is_some()
    }
}

pub trait Suite: Send + Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn run(&self, ctx: &SuiteContext) -> Vec<CheckRecord>;
}

pub struct Registry {
    suites: Vec<Box<dyn Suite>>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Containment));
        r.register(Box::new(Singular));
        r.register(Box::new(GaussFibers));
        r
    }
}

impl Registry {
    pub const ALL: &'static str = "all";

    pub fn empty() -> Self {
        Self { suites: Vec::new() }
    }

    pub fn register(&mut self, suite: Box<dyn Suite>) {
        self.suites.retain(|s| s.name() != suite.name());
        self.suites.push(suite);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.suites.iter().map(|s| s.name()).chain([Self::ALL]).collect()
    }

    pub fn get(&self, name: &str) -> Option<&dyn Suite> {
        self.suites.iter().find(|s| s.name() == name).map(|s| s.as_ref())
    }

    pub fn resolve(&self, name: &str) -> Result<Vec<&dyn Suite>> {
        if name == Self::ALL {
            return Ok(self.suites.iter().map(|s| s.as_ref()).collect());
        }
        self.get(name).map(|s| vec![s]).ok_or_else(|| {
            Error::Config(format!("unknown suite {name:?}; expected one of {}", self.names().join(", ")))
        })
    }

    /// Scenario invariants first, then the selected suites in order.
    pub fn run(&self, scenario: &Scenario, config: &RunConfig) -> Result<RunReport> {
        let start = Instant::now();
        let suites = self.resolve(&config.suite)?;
        config.validate()?;
        let mut report = RunReport::new("verify", config);
        report.scenario = Some(scenario.into());
        report.extend([invariants_check(scenario)]);
        let ctx = SuiteContext::new(scenario, config)?;
        for suite in suites {
            report.extend(suite.run(&ctx));
        }
        report.runtime_s = start.elapsed().as_secs_f64();
        Ok(report)
    }
}

pub fn invariants_check(s: &Scenario) -> CheckRecord {
    timed("scenario_invariants", "scenario.invariants", |r| {
        let inv = s.check_invariants()?;
        r.count("degree_x", inv.degree_x as i64)
            .count("degree_y", inv.degree_y as i64)
            .count("kernel_order", inv.kernel_order as i64)
            .measure("covolume_ratio", inv.covolume_ratio)
            .measure_value("a_principal", Value::Bool(inv.a_principal))
            .measure_value("riemann_relations", Value::Bool(inv.riemann_relations));
        if s.split.is_some() {
            // needs simple, mutually non-isogenous factors; not decidable from samples
            r.measure_value("theta_irreducible", Value::from("assumed, not checked"));
        }
        Ok(Status::from_bool(inv.holds))
    })
}

fn not_split(name: &str, anchor: &str) -> CheckRecord {
    CheckRecord::skipped(name, anchor, "scenario has no complementary pair")
}

pub struct Containment;

impl Suite for Containment {
    fn name(&self) -> &'static str {
        "containment"
    }

    fn describe(&self) -> &'static str {
        "pullback decomposition and translates of X and Y inside the theta divisor"
    }

    fn run(&self, ctx: &SuiteContext) -> Vec<CheckRecord> {
        let (s, cfg, probe) = (ctx.scenario, ctx.config, &ctx.probe);
        if s.kind == ScenarioKind::Control {
            // nothing to contain; the control checks live in the other suites
            return Vec::new();
        }
        if !ctx.splits() {
            return vec![not_split("y_translate_in_theta", "containment.y_translate")];
        }
        let mut out = vec![timed("decomposition", "pullback.sum_of_products", |r| {
            let fit = decomposition_fit(s, cfg.grid)?;
            r.count("rank", fit.rank as i64)
                .count("delta", s.delta as i64)
                .measure("residual", fit.residual)
                .count("samples", fit.samples as i64)
                .tolerance("residual", cfg.tol);
            Ok(Status::from_bool(fit.rank as u64 <= s.delta && fit.residual < cfg.tol))
        })];
        out.push(timed("base_loci_nonempty", "base_locus.nonempty", |r| {
            let (bx, by) = ctx.loci()?;
            r.count("points_x", bx.points.len() as i64)
                .count("points_y", by.points.len() as i64)
                .measure("max_residual_x", bx.max_residual())
                .measure("max_residual_y", by.max_residual())
                .measure_value("positive_dimensional_y", Value::Bool(by.positive_dimensional));
            Ok(Status::from_bool(!bx.points.is_empty() && !by.points.is_empty()))
        }));
        for (name, anchor, which) in [
            ("y_translate_in_theta", "containment.y_translate", Factor::Y),
            ("x_translate_in_theta", "containment.x_translate", Factor::X),
        ] {
            out.push(timed(name, anchor, |r| {
                let (bx, by) = ctx.loci()?;
                let through = match which {
                    Factor::Y => bx,
                    Factor::X => by,
                };
                let b = through.points.first().ok_or(Error::NoBasePoint)?;
                let res = probe.containment_check(which, &b.z, cfg.samples, cfg.seed)?;
                r.measure("residual", res).count("samples", cfg.samples as i64).tolerance("residual", cfg.tol);
                Ok(Status::from_bool(res < cfg.tol))
            }));
        }
        out.push(timed("generic_translate_leaves_theta", "containment.generic_translate", |r| {
            let (_, torus) = probe.basis(Factor::X)?;
            let off = random_point(torus, &mut seeded_rng(cfg.seed ^ 0x0ff));
            let res = probe.translate_residual(Factor::Y, &off, cfg.samples, cfg.seed)?;
            r.measure("residual", res).tolerance("min_residual", SEPARATION);
            Ok(Status::from_bool(res > SEPARATION))
        }));
        out
    }
}

pub struct Singular;

impl Suite for Singular {
    fn name(&self) -> &'static str {
        "singular"
    }

    fn describe(&self) -> &'static str {
        "singular points from pairs of base points and the dimension bound g - 2 delta"
    }

    fn run(&self, ctx: &SuiteContext) -> Vec<CheckRecord> {
        let (s, cfg, probe) = (ctx.scenario, ctx.config, &ctx.probe);
        if !ctx.splits() {
            return vec![timed("control_singular_set_empty", "control.smooth_theta", |r| {
                let rep = probe.critical_point_search()?;
                r.count("points", rep.count as i64);
                Ok(Status::from_bool(rep.count == 0))
            })];
        }
        let report = ctx.loci().and_then(|(bx, by)| probe.singular_from_loci(bx, by, cfg.singular_samples));
        let report = match report {
            Ok(r) => r,
            Err(e) => {
                let mut rec = CheckRecord::new("singular_points", "singular.multiplicity_two");
                rec.status = Status::Fail;
                rec.note(e.to_string());
                return vec![rec];
            }
        };
        let mut out = vec![timed("singular_points", "singular.multiplicity_two", |r| {
            let max_value = report.points.iter().map(|p| p.probe.value).fold(0.0, f64::max);
            let max_grad = report.points.iter().map(|p| p.probe.gradient).fold(0.0, f64::max);
            r.count("points", report.count as i64)
                .count("rejected_pairs", report.rejected as i64)
                .measure("max_value", max_value)
                .measure("max_gradient", max_grad)
                .tolerance("multiplicity", cfg.gates.multiplicity);
            let ok = report.count > 0 && report.points.iter().all(|p| p.probe.passed);
            Ok(Status::from_bool(ok))
        })];
        if report.positive_dimensional {
            out.push(timed("section_jacobian_rank", "singular.section_jacobian_rank", |r| {
                let (_, by) = ctx.loci()?;
                let dim_y = s.g - s.n;
                let ranks: Vec<usize> = by.points.iter().map(|p| dim_y - p.local_dim).collect();
                let (lo, hi) = (ranks.iter().min().copied().unwrap_or(0), ranks.iter().max().copied().unwrap_or(0));
                r.count("min_rank_y", lo as i64).count("max_rank_y", hi as i64).count("sections", s.delta as i64);
                Ok(Status::from_bool(!ranks.is_empty() && lo == hi && hi as u64 == s.delta))
            }));
        } else {
            out.push(timed("finite_singular_set", "singular.two_torsion_count", |r| {
                let (bx, by) = ctx.loci()?;
                let pairs = bx.points.len() * by.points.len();
                let expected = pairs / (s.delta * s.delta) as usize;
                let orders: Vec<Value> =
                    report.points.iter().map(|p| p.order.map(Value::from).unwrap_or(Value::Null)).collect();
                r.count("points", report.count as i64)
                    .count("expected", expected as i64)
                    .measure_value("orders", Value::Array(orders));
                Ok(Status::from_bool(report.count == expected && report.all_two_torsion()))
            }));
        }
        out.push(andreotti_mayer_check(s, &report));
        if cfg.kernel_sweep {
            out.push(timed("kernel_invariance", "singular.kernel_invariance", |r| {
                let sweep = kernel_sweep(s, cfg)?;
                r.count("kernels", sweep.counts.len() as i64)
                    .measure_value("counts", Value::from(sweep.counts.clone()))
                    .measure_value("all_two_torsion", Value::Bool(sweep.all_two_torsion));
                Ok(Status::from_bool(sweep.invariant))
            }));
        }
        out
    }
}

fn andreotti_mayer_check(s: &Scenario, report: &SingularProbeReport) -> CheckRecord {
    timed("andreotti_mayer_bound", "andreotti_mayer.bound", |r| {
        let claim = match andreotti_mayer_report(s.g, s.delta, s.n) {
            Ok(c) => c,
            Err(e) => {
                r.note(e.to_string());
                return Ok(Status::Undetermined);
            }
        };
        let local = report.points.iter().map(|p| p.local_dim_estimate).min();
        r.count("k", claim.k as i64).count("moduli_lower_bound", claim.moduli_lower_bound as i64);
        if let Some(d) = local {
            r.count("min_local_dim_estimate", d as i64);
        }
        if let Some(n) = &claim.note {
            r.note(n.clone());
        }
        Ok(Status::from_bool(local.is_some_and(|d| d >= claim.k)))
    })
}

/// Singular sets of the scenarios for every admissible kernel, compared in
/// `X × Y` through their preimages.
#[derive(Clone, Debug)]
pub struct KernelSweep {
    pub counts: Vec<usize>,
    pub all_two_torsion: bool,
    pub invariant: bool,
}

pub fn kernel_sweep(s: &Scenario, cfg: &RunConfig) -> Result<KernelSweep> {
    if s.kind != ScenarioKind::Complementary {
        return Err(Error::Config("kernel sweep needs a seeded complementary scenario".into()));
    }
    let seed = s.seed.ok_or_else(|| Error::Config("scenario has no seed".into()))?;
    let count = admissible_kernel_count(s.n, s.g, s.delta)?;
    let mut counts = Vec::with_capacity(count);
    let mut all_two_torsion = true;
    let mut reference: Option<Vec<Vec<f64>>> = None;
    let mut invariant = true;
    for k in 0..count {
        let sk = build_complementary_example_with_kernel(s.n, s.g, s.delta, seed, k)?;
        let mut probe = Probe::new(&sk, cfg.gates)?;
        probe.base_grid = cfg.base_grid;
        let rep = probe.singular_locus_probe(cfg.singular_samples)?;
        counts.push(rep.count);
        all_two_torsion &= rep.all_two_torsion();
        let pre = product_preimages(&sk, &rep)?;
        match &reference {
            None => reference = Some(pre),
            Some(r) => invariant &= same_point_set(r, &pre, POINT_SET_TOL),
        }
    }
    Ok(KernelSweep { counts, all_two_torsion, invariant })
}

pub struct GaussFibers;

impl Suite for GaussFibers {
    fn name(&self) -> &'static str {
        "gauss"
    }

    fn describe(&self) -> &'static str {
        "Gauss map along a contained translate of Y: annihilator and fiber dimension"
    }

    fn run(&self, ctx: &SuiteContext) -> Vec<CheckRecord> {
        let (cfg, probe) = (ctx.config, &ctx.probe);
        if !ctx.splits() {
            return vec![timed("no_positive_dimensional_fiber", "control.finite_gauss_fibers", |r| {
                let rep = probe.fiber_rank_probe_generic(cfg.samples, cfg.seed)?;
                r.count("samples", rep.samples.len() as i64)
                    .measure("full_rank_fraction", rep.full_rank_fraction)
                    .tolerance("min_full_rank_fraction", CONTROL_FULL_RANK);
                let ok = rep.full_rank_fraction >= CONTROL_FULL_RANK;
                if ok {
                    r.note("no positive-dimensional fiber found");
                }
                Ok(Status::from_bool(ok))
            })];
        }
        let fiber = ctx.loci().and_then(|(bx, _)| {
            let b = bx.points.first().ok_or(Error::NoBasePoint)?;
            probe.fiber_rank_probe(&b.z, cfg.samples, cfg.seed)
        });
        let fiber = match fiber {
            Ok(f) => f,
            Err(e) => {
                let mut rec = CheckRecord::new("fiber_dimension", "gauss.fiber_dimension");
                rec.status = Status::Fail;
                rec.note(e.to_string());
                return vec![rec];
            }
        };
        let mut out = vec![timed("gauss_image_in_annihilator", "gauss.annihilator", |r| {
            r.count("smooth_samples", fiber.samples.len() as i64)
                .count("singular_samples", fiber.counts.singular as i64)
                .count("undetermined_samples", fiber.counts.undetermined as i64)
                .measure("residual", fiber.annihilator_residual)
                .tolerance("residual", cfg.gates.annihilator);
            Ok(Status::from_bool(fiber.annihilator_residual < cfg.gates.annihilator))
        })];
        out.push(timed("fiber_dimension", "gauss.fiber_dimension", |r| {
            r.count("probed_dim", fiber.probed_dim as i64)
                .count("image_rank", fiber.image_rank as i64)
                .count("fiber_dim_lower_bound", fiber.fiber_dim_lower_bound as i64)
                .count("claimed", fiber.claimed_fiber_dim as i64)
                .tolerance("rank", cfg.gates.rank);
            Ok(Status::from_bool(fiber.fiber_dim_lower_bound >= fiber.claimed_fiber_dim))
        }));
        out.push(timed("gauss_image_even", "gauss.even", |r| {
            let p = &fiber.samples[0].point;
            let a = gauss_sample(&probe.theta, p, None, &cfg.gates)?;
            let b = gauss_sample(&probe.theta, &(-p), None, &cfg.gates)?;
            let same = same_projective_class(&a.gradient, &b.gradient, 1e-8);
            r.measure_value("same_class", Value::Bool(same));
            Ok(Status::from_bool(same))
        }));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{build_complementary_example, control_example};

    #[test]
    fn registry_names_and_lookup() {
        let reg = Registry::default();
        assert_eq!(reg.names(), vec!["containment", "singular", "gauss", "all"]);
        assert_eq!(reg.resolve("all").unwrap().len(), 3);
        assert_eq!(reg.resolve("gauss").unwrap().len(), 1);
        assert!(matches!(reg.resolve("bogus"), Err(Error::Config(_))));
    }

    #[test]
    fn g4_passes_every_suite_in_declaration_order() {
        let s = build_complementary_example(2, 4, 2, 7).unwrap();
        let report = Registry::default().run(&s, &RunConfig::default()).unwrap();
        assert_eq!(report.verdict, Status::Pass, "{}", report.summary());
        let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names[0], "scenario_invariants");
        let pos = |n: &str| names.iter().position(|x| *x == n).unwrap();
        assert!(pos("decomposition") < pos("finite_singular_set"));
        assert!(pos("finite_singular_set") < pos("fiber_dimension"));
        let rec = report.check("finite_singular_set").unwrap();
        assert_eq!(rec.measured["points"], Value::from(4));
        assert_eq!(rec.measured["expected"], Value::from(4));
    }

    #[test]
    fn control_reports_no_fiber() {
        let s = control_example(2, 3).unwrap();
        let cfg = RunConfig { suite: "gauss".into(), ..RunConfig::default() };
        let report = Registry::default().run(&s, &cfg).unwrap();
        assert_eq!(report.verdict, Status::Pass);
        let rec = report.check("no_positive_dimensional_fiber").unwrap();
        assert_eq!(rec.note.as_deref(), Some("no positive-dimensional fiber found"));
    }

    #[test]
    fn reports_are_reproducible_apart_from_runtimes() {
        let s = build_complementary_example(2, 4, 2, 7).unwrap();
        let cfg = RunConfig { suite: "containment".into(), ..RunConfig::default() };
        let strip = |mut r: RunReport| {
            r.runtime_s = 0.0;
            r.checks.iter_mut().for_each(|c| c.runtime_s = 0.0);
            r.to_json().unwrap()
        };
        let a = strip(Registry::default().run(&s, &cfg).unwrap());
        let b = strip(Registry::default().run(&s, &cfg).unwrap());
        assert_eq!(a, b);
    }
}
