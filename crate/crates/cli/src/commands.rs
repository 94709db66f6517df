//! Subcommand implementations. Each writes its outputs and a manifest and
//! returns the overall pass flag.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use solenoid::disintegration::{CheckReport, ScenarioBundle};
use solenoid::dynamics::{BranchSystem, CirclePoint, QuadraticJulia, Word};
use solenoid::io::{rasterize, write_cloud_csv, write_cylinder_table, write_pgm};
use solenoid::measures::{brolin_sample, perron_fixed_measure, BrolinOptions, Quadrature};
use solenoid::pathspace::{sample_path, PathPrefix};
use solenoid::scalar::format_f64;
use solenoid::weights::{fixed_point_h_circle, fixed_point_h_subshift, HOptions, TransitionDensity};
use solenoid::{rng, Scalar, Surd};

use crate::config::{Arithmetic, CheckKind, MeasureConfig, ScenarioConfig};
use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::scenario::{build, effective, subshift, subshift_weight, Overrides, Scenario};

/// Largest `|c|` accepted by `brolin`.
pub const BROLIN_C_MAX: f64 = 4.0;

/// Depth of the label-path frequency summary in `sample-paths` output.
pub const SUMMARY_DEPTH: usize = 3;

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub scenario: String,
    pub family: String,
    pub pass: bool,
    pub seed: u64,
    pub budget: u64,
    pub summation: solenoid::Summation,
    pub checks: Vec<CheckReport>,
    pub config: ScenarioConfig,
}

fn checks_for<D, S, M>(b: &ScenarioBundle<D, S, M>, cfg: &ScenarioConfig) -> Result<Vec<CheckReport>, CliError>
where
    D: BranchSystem + 'static,
    S: Scalar,
    M: Quadrature<D::Point, S>,
{
    let depths = &cfg.run.depths;
    let positive: Vec<usize> = depths.iter().copied().filter(|&n| n >= 1).collect();
    let mut kinds = cfg.run.checks.clone();
    kinds.sort();
    kinds.dedup();
    let mut out = Vec::new();
    for kind in kinds {
        let report = match kind {
            CheckKind::FixedPoint => b.fixed_point_report().clone(),
            CheckKind::Disintegration => b.verify_disintegration(depths)?,
            CheckKind::QuasiInvariance => b.verify_quasi_invariance(&positive)?,
            CheckKind::Duality => b.verify_duality()?,
            CheckKind::Pushforward => b.verify_pushforward()?,
            CheckKind::CrossOracle => b.verify_cross_oracle(depths)?,
        };
        out.push(report);
    }
    Ok(out)
}

/// Builds the bundle and runs every enabled check.
pub fn verify_report(cfg: &ScenarioConfig, ov: &Overrides) -> Result<VerifyReport, CliError> {
    let eff = effective(cfg, ov);
    let checks = match build(cfg, ov)? {
        Scenario::Circle(b) => checks_for(&b, cfg)?,
        Scenario::SubshiftFloat(b) => checks_for(&b, cfg)?,
        Scenario::SubshiftExact(b) => checks_for(&b, cfg)?,
        Scenario::Julia(b) => checks_for(&b, cfg)?,
    };
    Ok(VerifyReport {
        scenario: cfg.id.clone(),
        family: cfg.system.family().into(),
        pass: checks.iter().all(|c| c.pass),
        seed: eff.seed,
        budget: eff.budget,
        summation: eff.summation,
        checks,
        config: cfg.clone(),
    })
}

fn base_manifest(command: &str, bytes: &[u8], cfg: &ScenarioConfig, ov: &Overrides) -> RunManifest {
    let eff = effective(cfg, ov);
    let mut m = RunManifest::new(command, bytes, Some(eff.seed));
    m.param("scenario", &cfg.id);
    m.param("budget", eff.budget);
    m.param("summation", format!("{:?}", eff.summation).to_lowercase());
    m
}

pub fn cmd_verify(scenario: &Path, out: Option<&Path>, ov: &Overrides) -> Result<bool, CliError> {
    let (cfg, bytes) = ScenarioConfig::load(scenario)?;
    let started = std::time::Instant::now();
    let report = verify_report(&cfg, ov)?;
    let out = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.run.report.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(format!("{}.report.json", cfg.id)));
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    let mut manifest = base_manifest("verify", &bytes, &cfg, ov);
    manifest.write_output(&out, text.as_bytes())?;
    manifest.finish(&out)?;
    for c in &report.checks {
        eprintln!(
            "{:<17} {}  max discrepancy {:.3e} (tol {:.1e})",
            c.check,
            if c.pass { "pass" } else { "FAIL" },
            c.max_discrepancy,
            c.tolerance
        );
    }
    eprintln!("elapsed {:.2?}", started.elapsed());
    if !report.pass {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.check.as_str()).collect();
        return Err(CliError::Check(format!("{} failed; report at {}", failed.join(", "), out.display())));
    }
    println!("{}: all checks pass; report at {}", cfg.id, out.display());
    Ok(true)
}

/// `count` paths of depth `depth` from `x₀`; path `i` reads stream `(seed, i)`.
pub fn sample_paths<D: BranchSystem, S: Scalar>(
    delta: &TransitionDensity<D, S>,
    x0: &D::Point,
    depth: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<PathPrefix<D::Point>>, CliError> {
    Ok((0..count)
        .into_par_iter()
        .map(|i| sample_path(delta, x0, depth, &mut rng::stream(seed, i as u64)))
        .collect::<solenoid::Result<Vec<_>>>()?)
}

/// Relative frequency of every observed label prefix of length `1..=max_k`.
pub fn label_frequencies<P: Clone>(paths: &[PathPrefix<P>], max_k: usize) -> BTreeMap<Vec<usize>, f64> {
    let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for p in paths {
        for k in 1..=max_k.min(p.labels().len()) {
            *counts.entry(p.labels()[..k].to_vec()).or_default() += 1;
        }
    }
    counts.into_iter().map(|(k, c)| (k, c as f64 / paths.len() as f64)).collect()
}

fn join_labels(labels: &[usize]) -> String {
    labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(":")
}

fn paths_csv<P: Clone>(paths: &[PathPrefix<P>], seed: u64, fmt: impl Fn(&P) -> String) -> String {
    let mut s = String::from("kind,seed,chain,labels,points,frequency\n");
    for (i, p) in paths.iter().enumerate() {
        let pts: Vec<String> = p.points().iter().map(&fmt).collect();
        writeln!(s, "path,{seed},{i},{},{},", join_labels(p.labels()), pts.join(";")).unwrap();
    }
    if !paths.is_empty() {
        let mut rows: Vec<(Vec<usize>, f64)> = label_frequencies(paths, SUMMARY_DEPTH).into_iter().collect();
        rows.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        for (labels, f) in rows {
            writeln!(s, "summary,{seed},,{},,{}", join_labels(&labels), format_f64(f)).unwrap();
        }
    }
    s
}

fn complex_text(z: &Complex64) -> String {
    let im = format_f64(z.im);
    let sign = if im.starts_with('-') { "" } else { "+" };
    format!("{}{sign}{im}i", format_f64(z.re))
}

pub fn parse_complex(text: &str) -> Result<Complex64, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| CliError::Config(format!("bad complex number {text:?}")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(CliError::Config(format!("bad complex number {text:?}; expected re or re,im"))),
    }
}

pub struct SampleArgs<'a> {
    pub x0: Option<&'a str>,
    pub depth: usize,
    pub count: usize,
    pub out: &'a Path,
}

pub fn cmd_sample_paths(scenario: &Path, args: &SampleArgs, ov: &Overrides) -> Result<bool, CliError> {
    let (cfg, bytes) = ScenarioConfig::load(scenario)?;
    let seed = effective(&cfg, ov).seed;
    let x0 = args.x0.unwrap_or("0");
    let csv = match build(&cfg, ov)? {
        Scenario::Circle(b) => {
            let x = CirclePoint::parse(x0)?;
            paths_csv(&sample_paths(b.delta(), &x, args.depth, args.count, seed)?, seed, |p| format!("{p:?}"))
        }
        Scenario::SubshiftFloat(b) => {
            let x = Word::parse(x0)?;
            paths_csv(&sample_paths(b.delta(), &x, args.depth, args.count, seed)?, seed, |p| format!("{p:?}"))
        }
        Scenario::SubshiftExact(b) => {
            let x = Word::parse(x0)?;
            paths_csv(&sample_paths(b.delta(), &x, args.depth, args.count, seed)?, seed, |p| format!("{p:?}"))
        }
        Scenario::Julia(b) => {
            let x = parse_complex(args.x0.ok_or_else(|| CliError::Config("julia scenarios need --x0 re,im".into()))?)?;
            paths_csv(&sample_paths(b.delta(), &x, args.depth, args.count, seed)?, seed, complex_text)
        }
    };
    let mut manifest = base_manifest("sample-paths", &bytes, &cfg, ov);
    manifest.param("x0", x0);
    manifest.param("depth", args.depth);
    manifest.param("count", args.count);
    manifest.write_output(args.out, csv.as_bytes())?;
    manifest.finish(args.out)?;
    println!("{} paths written to {}", args.count, args.out.display());
    Ok(true)
}

pub struct HArgs<'a> {
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub out: &'a Path,
}

pub fn cmd_h_function(scenario: &Path, args: &HArgs, ov: &Overrides) -> Result<bool, CliError> {
    let (cfg, bytes) = ScenarioConfig::load(scenario)?;
    let opts = HOptions {
        grid: args.grid.unwrap_or(cfg.h.grid),
        tol: args.tol.unwrap_or(cfg.h.tol),
        max_iters: args.max_iters.unwrap_or(cfg.h.max_iters),
        start: cfg.h.start,
    };
    let (csv, residual, iterations, converged, sup_dev) = match build(&cfg, ov)? {
        Scenario::Circle(b) => {
            let h = fixed_point_h_circle(b.delta(), &opts, Some(b.mu0()))?;
            let mut s = String::from("x,h\n");
            for (k, v) in h.values.iter().enumerate() {
                writeln!(s, "{},{}", format_f64(h.node(k)), format_f64(*v)).unwrap();
            }
            (s, h.residual, h.iterations, h.converged, h.distance_from_one())
        }
        Scenario::SubshiftFloat(b) => {
            let h = fixed_point_h_subshift(b.delta(), &opts, Some(b.mu0()))?;
            h_table_csv(&h.words, &h.values, h.residual, h.iterations, h.converged)
        }
        Scenario::SubshiftExact(b) => {
            let h = fixed_point_h_subshift(b.delta(), &opts, Some(b.mu0()))?;
            h_table_csv(&h.words, &h.values, h.residual, h.iterations, h.converged)
        }
        Scenario::Julia(_) => return Err(CliError::Config("h-function needs a circle or subshift scenario".into())),
    };
    let mut manifest = base_manifest("h-function", &bytes, &cfg, ov);
    manifest.param("grid", opts.grid);
    manifest.param("tol", format_f64(opts.tol));
    manifest.param("max_iters", opts.max_iters);
    manifest.param("start", format!("{:?}", opts.start).to_lowercase());
    manifest.param("residual", format_f64(residual));
    manifest.param("iterations", iterations);
    manifest.param("sup_abs_h_minus_1", format_f64(sup_dev));
    manifest.write_output(args.out, csv.as_bytes())?;
    manifest.finish(args.out)?;
    println!("residual {residual:.3e} after {iterations} iterations; ‖h − 1‖∞ = {sup_dev:.6}");
    if !converged {
        return Err(CliError::Check(format!(
            "NoConvergence: residual {residual:e} > tol {:e} after {iterations} iterations (table written)",
            opts.tol
        )));
    }
    Ok(true)
}

fn h_table_csv<S: Scalar>(
    words: &[Word],
    values: &[S],
    residual: f64,
    iterations: usize,
    converged: bool,
) -> (String, f64, usize, bool, f64) {
    let mut s = String::from("word,h\n");
    let mut dev = 0.0f64;
    for (w, v) in words.iter().zip(values) {
        writeln!(s, "{w:?},{}", v.to_text()).unwrap();
        dev = dev.max((v.to_f64() - 1.0).abs());
    }
    (s, residual, iterations, converged, dev)
}

pub struct BrolinArgs<'a> {
    pub c: Complex64,
    pub samples: usize,
    pub burn: usize,
    pub thin: usize,
    pub chains: usize,
    pub grid: usize,
    pub sixteen_bit: bool,
    pub seed: u64,
    pub out: &'a Path,
    pub cloud: bool,
}

/// `E[z^a z̄^b]` for `a + b ≤ 2`.
pub fn moments(points: &[Complex64]) -> Vec<(u32, u32, Complex64)> {
    let mut rows = Vec::new();
    for total in 0..=2u32 {
        for a in (0..=total).rev() {
            let b = total - a;
            let sum: Complex64 = points.iter().map(|z| z.powu(a) * z.conj().powu(b)).sum();
            let mean = if points.is_empty() { Complex64::new(0.0, 0.0) } else { sum / points.len() as f64 };
            rows.push((a, b, mean));
        }
    }
    rows
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn cmd_brolin(args: &BrolinArgs) -> Result<bool, CliError> {
    if !(args.c.norm() <= BROLIN_C_MAX) {
        return Err(CliError::Config(format!("|c| = {} is outside the supported range |c| ≤ {BROLIN_C_MAX}", args.c.norm())));
    }
    if args.grid == 0 {
        return Err(CliError::Config("--grid must be positive".into()));
    }
    let sys = QuadraticJulia::new(args.c);
    let opts = BrolinOptions {
        samples: args.samples,
        burn: args.burn,
        thin: args.thin,
        chains: args.chains,
        seed: args.seed,
        ..BrolinOptions::default()
    };
    let cloud = brolin_sample(&sys, &opts)?;
    let r = sys.escape_radius();
    let cells = rasterize(cloud.points(), r, args.grid, args.grid);
    let mut pgm = Vec::new();
    write_pgm(&mut pgm, &cells, args.grid, args.grid, args.sixteen_bit)?;
    let mut csv = String::from("a,b,re,im\n");
    for (a, b, m) in moments(cloud.points()) {
        writeln!(csv, "{a},{b},{},{}", format_f64(m.re), format_f64(m.im)).unwrap();
    }

    let canonical = format!(
        "brolin c={},{} samples={} burn={} thin={} chains={} grid={} bits={}",
        format_f64(args.c.re),
        format_f64(args.c.im),
        args.samples,
        args.burn,
        args.thin,
        args.chains,
        args.grid,
        if args.sixteen_bit { 16 } else { 8 }
    );
    let mut manifest = RunManifest::new("brolin", canonical.as_bytes(), Some(args.seed));
    manifest.param("arguments", &canonical);
    manifest.param("bounding_box", format!("[-{r}, {r}]^2", r = format_f64(r)));
    manifest.write_output(args.out, &pgm)?;
    manifest.write_output(&sibling(args.out, ".moments.csv"), csv.as_bytes())?;
    if args.cloud {
        let mut pts = Vec::new();
        write_cloud_csv(&cloud, &mut pts)?;
        manifest.write_output(&sibling(args.out, ".cloud.csv"), &pts)?;
    }
    manifest.finish(args.out)?;
    println!("{} samples; density written to {}", cloud.len(), args.out.display());
    Ok(true)
}

pub fn cmd_eigmeasure(scenario: &Path, depth: Option<usize>, out: &Path, ov: &Overrides) -> Result<bool, CliError> {
    let (cfg, bytes) = ScenarioConfig::load(scenario)?;
    let depth = depth.unwrap_or(match cfg.measure {
        MeasureConfig::Perron { depth } => depth,
        _ => 4,
    });
    let sys = subshift(&cfg)?;
    let mut text = Vec::new();
    match cfg.arithmetic {
        Arithmetic::Float => {
            let t = perron_fixed_measure::<f64>(&sys, &subshift_weight(&cfg)?, depth)?;
            write_cylinder_table(&t, &mut text)?;
        }
        Arithmetic::Exact => {
            let t = perron_fixed_measure::<Surd>(&sys, &subshift_weight(&cfg)?, depth)?;
            write_cylinder_table(&t, &mut text)?;
        }
    }
    let mut manifest = base_manifest("eigmeasure", &bytes, &cfg, ov);
    manifest.param("depth", depth);
    manifest.write_output(out, &text)?;
    manifest.finish(out)?;
    println!("cylinder table of depth {depth} written to {}", out.display());
    Ok(true)
}
