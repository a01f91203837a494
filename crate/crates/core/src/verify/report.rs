//! Check records and run reports. Field order in the JSON output follows the
//! declaration order below; measured values and tolerances are keyed maps in
//! sorted key order. Floats carry 17 significant digits.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::config::RunConfig;
use crate::error::Result;
use crate::serde_num;
use crate::torus::{Scenario, ScenarioKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Undetermined,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    /// Any failure fails; otherwise any undetermined check leaves the whole
    /// undetermined.
    pub fn combine<I: IntoIterator<Item = Status>>(it: I) -> Self {
        let mut out = Status::Pass;
        for s in it {
            match s {
                Status::Fail => return Status::Fail,
                Status::Undetermined => out = Status::Undetermined,
                Status::Pass => {}
            }
        }
        out
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Undetermined => "undetermined",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// Identifier of the claim this check tests.
    pub anchor: String,
    pub status: Status,
    pub measured: Map<String, Value>,
    pub tolerances: Map<String, Value>,
    pub note: Option<String>,
    #[serde(with = "serde_num::float")]
    pub runtime_s: f64,
}

impl CheckRecord {
    pub fn new(name: &str, anchor: &str) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            status: Status::Undetermined,
            measured: Map::new(),
            tolerances: Map::new(),
            note: None,
            runtime_s: 0.0,
        }
    }

    pub fn measure(&mut self, key: &str, x: f64) -> &mut Self {
        self.measured.insert(key.into(), serde_num::number(x));
        self
    }

    pub fn count(&mut self, key: &str, x: impl Into<i64>) -> &mut Self {
        self.measured.insert(key.into(), Value::from(x.into()));
        self
    }

    pub fn measure_value(&mut self, key: &str, v: Value) -> &mut Self {
        self.measured.insert(key.into(), v);
        self
    }

    pub fn tolerance(&mut self, key: &str, x: f64) -> &mut Self {
        self.tolerances.insert(key.into(), serde_num::number(x));
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.note = Some(text.into());
        self
    }

    /// A check that was not run because an earlier step failed or the
    /// scenario does not carry the data it needs.
    pub fn skipped(name: &str, anchor: &str, why: &str) -> Self {
        let mut r = Self::new(name, anchor);
        r.note(why);
        r
    }
}

/// Runs `f` on a fresh record and times it. The closure returns the status;
/// an error fails the check and is kept as its note.
pub fn timed(name: &str, anchor: &str, f: impl FnOnce(&mut CheckRecord) -> Result<Status>) -> CheckRecord {
    let mut rec = CheckRecord::new(name, anchor);
    let start = Instant::now();
    match f(&mut rec) {
        Ok(status) => rec.status = status,
        Err(e) => {
            rec.status = Status::Fail;
            rec.note = Some(e.to_string());
        }
    }
    rec.runtime_s = start.elapsed().as_secs_f64();
    rec
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub kind: ScenarioKind,
    pub n: usize,
    pub g: usize,
    pub delta: u64,
    pub seed: Option<u64>,
    pub kernel_index: Option<usize>,
}

impl From<&Scenario> for ScenarioSummary {
    fn from(s: &Scenario) -> Self {
        Self { kind: s.kind, n: s.n, g: s.g, delta: s.delta, seed: s.seed, kernel_index: s.kernel_index }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub scenario: Option<ScenarioSummary>,
    pub checks: Vec<CheckRecord>,
    pub verdict: Status,
    #[serde(with = "serde_num::float")]
    pub runtime_s: f64,
}

impl RunReport {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            tool: "theta-lab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            scenario: None,
            checks: Vec::new(),
            verdict: Status::Undetermined,
            runtime_s: 0.0,
        }
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = CheckRecord>) {
        self.checks.extend(checks);
        self.verdict = Status::combine(self.checks.iter().map(|c| c.status));
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.verdict == Status::Pass {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One line per check, then the verdict.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        if let Some(s) = &self.scenario {
            out.push_str(&format!("scenario {:?} n={} g={} delta={}\n", s.kind, s.n, s.g, s.delta));
        }
        for c in &self.checks {
            let note = c.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default();
            out.push_str(&format!("{:<12} {:<36} {:>8.3}s{}\n", c.status.label(), c.name, c.runtime_s, note));
        }
        out.push_str(&format!("verdict: {} ({:.2}s)\n", self.verdict.label(), self.runtime_s));
        out
    }
}
