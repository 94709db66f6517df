//! Declarative scenario files (TOML, or JSON with the same schema).

use std::path::Path;

use serde::{Deserialize, Serialize};
use solenoid::disintegration::Tolerances;
use solenoid::dynamics::DEFAULT_NODE_BUDGET;
use solenoid::measures::TestFamily;
use solenoid::weights::{DeltaMode, HStart};
use solenoid::Summation;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    #[serde(default)]
    pub arithmetic: Arithmetic,
    pub system: SystemConfig,
    pub weight: WeightConfig,
    pub delta: DeltaConfig,
    pub measure: MeasureConfig,
    pub tests: TestFamily,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub h: HConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arithmetic {
    #[default]
    Float,
    /// Exact quadratic-surd arithmetic; subshifts only.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    Circle { degree: u32 },
    /// `transitions[a][b] = 1` iff `a` may precede `b`.
    Subshift { transitions: Vec<Vec<u8>> },
    /// `z ↦ z² + c` with `c = [re, im]`.
    Julia { c: [f64; 2] },
}

impl SystemConfig {
    pub fn family(&self) -> &'static str {
        match self {
            SystemConfig::Circle { .. } => "circle",
            SystemConfig::Subshift { .. } => "subshift",
            SystemConfig::Julia { .. } => "julia",
        }
    }
}

/// A number written as a TOML/JSON number or as exact text (`"3/2"`, `"1+2*sqrt(5)"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Float(f64),
    Text(String),
}

impl Number {
    pub fn text(&self) -> String {
        match self {
            // shortest round-trip decimal, which the exact parser reads as written
            Number::Float(x) => format!("{x:?}"),
            Number::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightConfig {
    Constant {
        value: Number,
    },
    /// `V(x) = Σ cos[k]·cos 2πkx + Σ sin[k]·sin 2πkx`, index 0 the constant term.
    TrigPolynomial {
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// `V = |m|²` for `m(x) = Σ a_k e^{2πikx}`, taps as `[re, im]`.
    FilterSquared {
        taps: Vec<[f64; 2]>,
    },
    Haar {},
    StretchedHaar {},
    /// `V` by leading symbol.
    SymbolTable {
        values: Vec<Number>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaConfig {
    pub mode: DeltaMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureConfig {
    /// Midpoint rule on `grid` nodes.
    LebesgueGrid { grid: usize },
    /// The Markov measure with the fixed-point property, to cylinder `depth`.
    Perron { depth: usize },
    Bernoulli { probs: Vec<Number>, depth: usize },
    /// Equal-weight cloud from random backward iteration.
    Brolin {
        samples: usize,
        #[serde(default = "default_burn")]
        burn: usize,
        #[serde(default = "one")]
        thin: usize,
        #[serde(default = "one")]
        chains: usize,
        /// Defaults to `run.seed`.
        #[serde(default)]
        seed: Option<u64>,
    },
}

fn default_burn() -> usize {
    64
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    FixedPoint,
    Disintegration,
    QuasiInvariance,
    Duality,
    Pushforward,
    CrossOracle,
}

impl CheckKind {
    pub const ALL: [CheckKind; 6] = [
        CheckKind::FixedPoint,
        CheckKind::Disintegration,
        CheckKind::QuasiInvariance,
        CheckKind::Duality,
        CheckKind::Pushforward,
        CheckKind::CrossOracle,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub depths: Vec<usize>,
    pub checks: Vec<CheckKind>,
    /// One tolerance for every check (pushforward capped at 1e-15).
    pub tolerance: Option<f64>,
    /// Per-check tolerances; takes precedence over `tolerance`.
    pub tolerances: Option<Tolerances>,
    pub seed: u64,
    pub budget: u64,
    pub summation: Summation,
    /// Report path for `verify` when `--out` is absent.
    pub report: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            depths: vec![0, 1, 2, 3],
            checks: CheckKind::ALL.to_vec(),
            tolerance: None,
            tolerances: None,
            seed: 0,
            budget: DEFAULT_NODE_BUDGET,
            summation: Summation::Parallel,
            report: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HConfig {
    pub grid: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub start: HStart,
}

impl Default for HConfig {
    fn default() -> Self {
        HConfig { grid: 4096, tol: 1e-10, max_iters: 10_000, start: HStart::Ones }
    }
}

impl ScenarioConfig {
    /// Parses by extension: `.json` as JSON, anything else as TOML.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|e| CliError::Config(format!("{}: not UTF-8: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let cfg = if is_json { Self::from_json(text) } else { Self::from_toml(text) }
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok((cfg, bytes))
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("{e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
id = "t"
[system]
family = "circle"
degree = 2
[weight]
variant = "haar"
[delta]
mode = "strongly-invariant"
[measure]
kind = "lebesgue-grid"
grid = 64
[tests]
family = "trig"
max_freq = 2
"#;

    #[test]
    fn minimal_toml_parses_with_defaults() {
        let c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.system, SystemConfig::Circle { degree: 2 });
        assert_eq!(c.run.checks.len(), 6);
        assert_eq!(c.arithmetic, Arithmetic::Float);
    }

    #[test]
    fn unknown_field_is_reported_with_line() {
        let bad = MINIMAL.replace("grid = 64", "grid = 64\ngrdi = 3");
        let e = ScenarioConfig::from_toml(&bad).unwrap_err();
        assert!(e.contains("grdi"), "{e}");
        // tagged tables report the line of their header
        assert!(e.contains("line 10"), "{e}");
        let bad = format!("{MINIMAL}[run]\ndepth = [1]\n");
        assert!(ScenarioConfig::from_toml(&bad).unwrap_err().contains("depth"));
    }

    #[test]
    fn json_is_the_same_schema() {
        let c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        let j = serde_json::to_string(&c).unwrap();
        assert_eq!(ScenarioConfig::from_json(&j).unwrap(), c);
    }

    #[test]
    fn numbers_accept_text() {
        let w: WeightConfig = toml::from_str("variant = \"symbol-table\"\nvalues = [\"3/2\", 0.5]").unwrap();
        match w {
            WeightConfig::SymbolTable { values } => {
                assert_eq!(values[0].text(), "3/2");
                assert_eq!(values[1].text(), "0.5");
            }
            other => panic!("{other:?}"),
        }
    }
}
