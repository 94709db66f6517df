//! Turning a [`ScenarioConfig`] into a validated bundle.

use num_complex::Complex64;
use solenoid::disintegration::{ScenarioBundle, Tolerances};
use solenoid::dynamics::{Circle, CirclePoint, QuadraticJulia, Subshift, Word};
use solenoid::measures::{
    brolin_sample, perron_fixed_measure, BrolinOptions, CylinderTable, EmpiricalCloud, GridDensity, TestFamily,
    TestFunctionSet,
};
use solenoid::scalar::parse_scalar;
use solenoid::weights::{DeriveDelta, WeightFunction};
use solenoid::{Scalar, Summation, Surd};

use crate::config::{Arithmetic, MeasureConfig, Number, ScenarioConfig, SystemConfig, WeightConfig};
use crate::error::CliError;

/// Default tolerance for Monte Carlo bundles (about 4σ at 10⁵ samples for
/// moments of degree ≤ 2 on the unit circle).
pub const MONTE_CARLO_TOL: f64 = 0.02;

/// Command-line overrides of the `run` block.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub budget: Option<u64>,
    pub deterministic_sum: bool,
}

pub enum Scenario {
    Circle(ScenarioBundle<Circle, f64, GridDensity>),
    SubshiftFloat(ScenarioBundle<Subshift, f64, CylinderTable<f64>>),
    SubshiftExact(ScenarioBundle<Subshift, Surd, CylinderTable<Surd>>),
    Julia(ScenarioBundle<QuadraticJulia, f64, EmpiricalCloud<Complex64>>),
}

/// The effective run parameters after overrides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Effective {
    pub seed: u64,
    pub budget: u64,
    pub summation: Summation,
    pub tolerances: Tolerances,
}

pub fn effective(cfg: &ScenarioConfig, ov: &Overrides) -> Effective {
    let run = &cfg.run;
    let default = match (&cfg.arithmetic, &cfg.measure) {
        (Arithmetic::Exact, _) => Tolerances::exact(),
        (_, MeasureConfig::Brolin { .. }) => Tolerances::uniform(MONTE_CARLO_TOL),
        _ => Tolerances::default(),
    };
    let tolerances = run.tolerances.or(run.tolerance.map(Tolerances::uniform)).unwrap_or(default);
    Effective {
        seed: ov.seed.unwrap_or(run.seed),
        budget: ov.budget.unwrap_or(run.budget),
        summation: if ov.deterministic_sum { Summation::Sequential } else { run.summation },
        tolerances,
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn scalar<S: Scalar>(n: &Number, field: &str) -> Result<S, CliError> {
    parse_scalar(&n.text()).map_err(|e| config_err(format!("{field}: {e}")))
}

fn float(n: &Number, field: &str) -> Result<f64, CliError> {
    scalar::<f64>(n, field)
}

pub fn subshift(cfg: &ScenarioConfig) -> Result<Subshift, CliError> {
    match &cfg.system {
        SystemConfig::Subshift { transitions } => Ok(Subshift::new(transitions.clone())?),
        other => Err(config_err(format!("expected a subshift system, found {}", other.family()))),
    }
}

pub fn subshift_weight<S: Scalar>(cfg: &ScenarioConfig) -> Result<WeightFunction<S, Word>, CliError> {
    match &cfg.weight {
        WeightConfig::Constant { value } => Ok(WeightFunction::Constant(scalar(value, "weight.value")?)),
        WeightConfig::SymbolTable { values } => Ok(WeightFunction::SymbolTable(
            values.iter().map(|v| scalar(v, "weight.values")).collect::<Result<_, _>>()?,
        )),
        other => Err(config_err(format!("weight variant {} is not defined on subshifts", variant(other)))),
    }
}

fn circle_weight(w: &WeightConfig) -> Result<WeightFunction<f64, CirclePoint>, CliError> {
    Ok(match w {
        WeightConfig::Constant { value } => WeightFunction::Constant(float(value, "weight.value")?),
        WeightConfig::TrigPolynomial { cos, sin } => {
            WeightFunction::TrigPolynomial { cos: cos.clone(), sin: sin.clone() }
        }
        WeightConfig::FilterSquared { taps } => {
            WeightFunction::FilterSquared { taps: taps.iter().map(|[re, im]| Complex64::new(*re, *im)).collect() }
        }
        WeightConfig::Haar {} => WeightFunction::haar(),
        WeightConfig::StretchedHaar {} => WeightFunction::stretched_haar(),
        other => return Err(config_err(format!("weight variant {} is not defined on the circle", variant(other)))),
    })
}

fn variant(w: &WeightConfig) -> &'static str {
    match w {
        WeightConfig::Constant { .. } => "constant",
        WeightConfig::TrigPolynomial { .. } => "trig-polynomial",
        WeightConfig::FilterSquared { .. } => "filter-squared",
        WeightConfig::Haar {} => "haar",
        WeightConfig::StretchedHaar {} => "stretched-haar",
        WeightConfig::SymbolTable { .. } => "symbol-table",
    }
}

pub fn circle(cfg: &ScenarioConfig) -> Result<Circle, CliError> {
    match &cfg.system {
        SystemConfig::Circle { degree } => Ok(Circle::new(*degree)?),
        other => Err(config_err(format!("expected a circle system, found {}", other.family()))),
    }
}

pub fn brolin_options(cfg: &ScenarioConfig, seed: u64) -> Option<BrolinOptions> {
    match &cfg.measure {
        MeasureConfig::Brolin { samples, burn, thin, chains, seed: s } => Some(BrolinOptions {
            samples: *samples,
            burn: *burn,
            thin: *thin,
            chains: *chains,
            seed: s.unwrap_or(seed),
            ..BrolinOptions::default()
        }),
        _ => None,
    }
}

fn wrong_tests(family: &TestFamily, system: &str) -> CliError {
    config_err(format!("test family {} does not apply to {system} systems", family.describe()))
}

fn wrong_measure(system: &str) -> CliError {
    config_err(format!("measure kind does not apply to {system} systems"))
}

/// Builds and validates the bundle: weight checks, `Δ` derivation and the
/// fixed-point property of `μ₀` all run here.
pub fn build(cfg: &ScenarioConfig, ov: &Overrides) -> Result<Scenario, CliError> {
    let eff = effective(cfg, ov);
    let (tol, budget, sum) = (eff.tolerances, eff.budget, eff.summation);
    if cfg.arithmetic == Arithmetic::Exact && !matches!(cfg.system, SystemConfig::Subshift { .. }) {
        return Err(config_err("exact arithmetic is available for subshifts only"));
    }
    match &cfg.system {
        SystemConfig::Circle { .. } => {
            let sys = circle(cfg)?;
            let w = circle_weight(&cfg.weight)?;
            let delta = sys.derive_delta(&w, cfg.delta.mode)?;
            let mu0 = match &cfg.measure {
                MeasureConfig::LebesgueGrid { grid } => GridDensity::lebesgue(*grid),
                _ => return Err(wrong_measure("circle")),
            };
            let tests = match cfg.tests {
                TestFamily::Trig { max_freq } => {
                    mu0.check_nyquist(max_freq)?;
                    TestFunctionSet::trig(max_freq)
                }
                ref t => return Err(wrong_tests(t, "circle")),
            };
            Ok(Scenario::Circle(ScenarioBundle::new(&cfg.id, w, delta, mu0, tests, tol, budget, sum)?))
        }
        SystemConfig::Subshift { .. } => match cfg.arithmetic {
            Arithmetic::Float => Ok(Scenario::SubshiftFloat(subshift_bundle::<f64>(cfg, tol, budget, sum)?)),
            Arithmetic::Exact => Ok(Scenario::SubshiftExact(subshift_bundle::<Surd>(cfg, tol, budget, sum)?)),
        },
        SystemConfig::Julia { c } => {
            let sys = QuadraticJulia::new(Complex64::new(c[0], c[1]));
            let w = match &cfg.weight {
                WeightConfig::Constant { value } => WeightFunction::Constant(float(value, "weight.value")?),
                other => return Err(config_err(format!("weight variant {} is not defined on Julia sets", variant(other)))),
            };
            let delta = sys.derive_delta(&w, cfg.delta.mode)?;
            let opts = brolin_options(cfg, eff.seed).ok_or_else(|| wrong_measure("julia"))?;
            let mu0 = brolin_sample(&sys, &opts)?;
            let tests = match cfg.tests {
                TestFamily::Moments { max_degree } => TestFunctionSet::moments(max_degree),
                ref t => return Err(wrong_tests(t, "julia")),
            };
            Ok(Scenario::Julia(ScenarioBundle::new(&cfg.id, w, delta, mu0, tests, tol, budget, sum)?))
        }
    }
}

fn subshift_bundle<S: Scalar>(
    cfg: &ScenarioConfig,
    tol: Tolerances,
    budget: u64,
    sum: Summation,
) -> Result<ScenarioBundle<Subshift, S, CylinderTable<S>>, CliError> {
    let sys = subshift(cfg)?;
    let w = subshift_weight::<S>(cfg)?;
    let delta = sys.derive_delta(&w, cfg.delta.mode)?;
    let mu0 = match &cfg.measure {
        MeasureConfig::Perron { depth } => perron_fixed_measure(&sys, &w, *depth)?,
        MeasureConfig::Bernoulli { probs, depth } => {
            if probs.len() != sys.alphabet() || sys != Subshift::full(probs.len()) {
                return Err(config_err("a Bernoulli measure needs the full shift on as many symbols as probabilities"));
            }
            let probs = probs.iter().map(|p| scalar(p, "measure.probs")).collect::<Result<Vec<S>, _>>()?;
            CylinderTable::bernoulli(probs, *depth)?
        }
        _ => return Err(wrong_measure("subshift")),
    };
    let tests = match cfg.tests {
        TestFamily::Cylinders { max_depth } => TestFunctionSet::cylinders(&sys, max_depth),
        ref t => return Err(wrong_tests(t, "subshift")),
    };
    Ok(ScenarioBundle::new(&cfg.id, w, delta, mu0, tests, tol, budget, sum)?)
}
