//! Run configuration: flat `key = value` text with `#` comments. Every key
//! has a default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::Gates;
use crate::lattice::IntMatrix;
use crate::serde_num;

pub const THREADS_VAR: &str = "THETA_LAB_THREADS";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub g: usize,
    pub delta: u64,
    pub seed: u64,
    /// Position of the kernel in the canonical enumeration.
    pub kernel: usize,
    /// Containment and decomposition residual bound, relative.
    #[serde(with = "serde_num::float")]
    pub tol: f64,
    /// Samples per axis for the decomposition fit.
    pub grid: usize,
    /// Seeds per real dimension for base-locus scans.
    pub base_grid: usize,
    /// Points per translate for containment and fiber probes.
    pub samples: usize,
    /// Base points per factor used when a base locus is positive-dimensional.
    pub singular_samples: usize,
    /// Rebuild the scenario for every admissible kernel and compare singular sets.
    pub kernel_sweep: bool,
    pub gates: Gates,
    pub suite: String,
    pub verbosity: u8,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 2,
            g: 4,
            delta: 2,
            seed: 7,
            kernel: 0,
            tol: 1e-8,
            grid: 8,
            base_grid: crate::theta::base_locus::DEFAULT_GRID,
            samples: 64,
            singular_samples: crate::gauss::probes::DEFAULT_SINGULAR_SAMPLES,
            kernel_sweep: false,
            gates: Gates::default(),
            suite: "all".into(),
            verbosity: 0,
        }
    }
}

fn value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Config(format!("bad value for {key}: {raw:?}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        match key {
            "n" => self.n = value(key, raw)?,
            "g" => self.g = value(key, raw)?,
            "delta" => self.delta = value(key, raw)?,
            "seed" => self.seed = value(key, raw)?,
            "kernel" => self.kernel = value(key, raw)?,
            "tol" => self.tol = value(key, raw)?,
            "grid" => self.grid = value(key, raw)?,
            "base_grid" => self.base_grid = value(key, raw)?,
            "samples" => self.samples = value(key, raw)?,
            "singular_samples" => self.singular_samples = value(key, raw)?,
            "kernel_sweep" => self.kernel_sweep = value(key, raw)?,
            "on_divisor_gate" => self.gates.on_divisor = value(key, raw)?,
            "smooth_gate" => self.gates.smooth = value(key, raw)?,
            "rank_gate" => self.gates.rank = value(key, raw)?,
            "annihilator_gate" => self.gates.annihilator = value(key, raw)?,
            "multiplicity_gate" => self.gates.multiplicity = value(key, raw)?,
            "suite" => self.suite = raw.to_string(),
            "verbosity" => self.verbosity = value(key, raw)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.gates;
        let tols = [self.tol, g.on_divisor, g.smooth, g.rank, g.annihilator, g.multiplicity];
        if tols.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if g.multiplicity > g.smooth {
            return Err(Error::Config("multiplicity gate above the smoothness gate".into()));
        }
        if self.grid == 0 || self.base_grid == 0 || self.samples == 0 || self.singular_samples == 0 {
            return Err(Error::Config("grid sizes and sample counts must be positive".into()));
        }
        Ok(())
    }
}

/// Integer matrix from text: one row per line, entries separated by
/// whitespace or commas, `#` comments.
pub fn parse_int_matrix(text: &str) -> Result<IntMatrix> {
    let rows: Vec<Vec<i64>> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<i64>().map_err(|_| Error::Parse(format!("bad integer {t:?}"))))
                .collect()
        })
        .collect::<Result<_>>()?;
    IntMatrix::from_rows(&rows)
}

/// Caps the global worker pool from `THETA_LAB_THREADS` (unset or 0: one
/// worker per core). Returns the cap in effect.
pub fn init_threads() -> Result<usize> {
    let n = match std::env::var(THREADS_VAR) {
        Ok(v) if !v.trim().is_empty() => value::<usize>(THREADS_VAR, v.trim())?,
        _ => 0,
    };
    // a second initialization (e.g. from tests) keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(rayon::current_num_threads())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let cfg =
            RunConfig::parse("# g=6 run\nn = 2\ng = 6 # ambient\n\ndelta=2\ntol = 1e-7\nsuite = singular\n").unwrap();
        assert_eq!((cfg.n, cfg.g, cfg.delta), (2, 6, 2));
        assert_eq!(cfg.tol, 1e-7);
        assert_eq!(cfg.suite, "singular");
        assert_eq!(cfg.samples, RunConfig::default().samples);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(RunConfig::parse("colour = red"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("g = four"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("tol = -1"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("just text"), Err(Error::Config(_))));
    }

    #[test]
    fn matrix_text() {
        let m = parse_int_matrix("# E\n0, 1\n-1 0\n").unwrap();
        assert_eq!(m.to_rows(), vec![vec![0, 1], vec![-1, 0]]);
        assert!(parse_int_matrix("0 1\n-1").is_err());
    }
}
