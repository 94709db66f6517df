use std::collections::BTreeMap;

use num_complex::Complex64;
use proptest::prelude::*;
use solenoid::disintegration::{ScenarioBundle, Tolerances};
use solenoid::dynamics::{BranchSystem, Circle, CirclePoint, QuadraticJulia, Subshift, Word, DEFAULT_NODE_BUDGET};
use solenoid::io::{read_cylinder_table, write_cylinder_table};
use solenoid::measures::{brolin_sample, perron_fixed_measure, BrolinOptions, GridDensity, TestFunctionSet};
use solenoid::pathspace::{path_integral, CylinderFunctional};
use solenoid::weights::{DeltaMode, DeriveDelta, WeightFunction};
use solenoid::{Scalar, Summation, Surd};

fn golden_table<S: Scalar>(depth: usize) -> solenoid::measures::CylinderTable<S> {
    perron_fixed_measure(&Subshift::golden_mean(), &WeightFunction::Constant(S::one()), depth).unwrap()
}

#[test]
fn golden_mean_measure_matches_parry_closed_form() {
    // μ[w₀…w_k] = u_{w₀} u_{w_k} / (λ^k Σ u_a²), u = (λ, 1)
    let lambda = (1.0 + 5f64.sqrt()) / 2.0;
    let u = [lambda, 1.0];
    let norm = lambda * lambda + 1.0;
    let table = golden_table::<Surd>(5);
    let mut seen = 0;
    for (w, m) in table.entries() {
        let s = w.symbols();
        let k = s.len() as i32 - 1;
        let expected = u[s[0] as usize] * u[*s.last().unwrap() as usize] / (lambda.powi(k) * norm);
        assert!((m.to_f64() - expected).abs() < 1e-15, "{w:?}");
        seen += 1;
    }
    // admissible words of lengths 1..=5: 2 + 3 + 5 + 8 + 13
    assert_eq!(seen, 31);
}

#[test]
fn exact_and_float_tables_agree() {
    let exact = golden_table::<Surd>(4);
    let float = golden_table::<f64>(4);
    for (w, m) in exact.entries() {
        assert!((m.to_f64() - float.mass(w).unwrap()).abs() < 1e-15);
    }
}

#[test]
fn written_tables_read_back_identically() {
    let table = golden_table::<Surd>(4);
    let mut buf = Vec::new();
    write_cylinder_table(&table, &mut buf).unwrap();
    let back = read_cylinder_table::<Surd>(Subshift::golden_mean(), std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(back, table);
}

#[test]
fn three_shift_bundle_disintegrates_exactly() {
    // V = (2, 1/2, 1/2): ρ(K) = ΣV = 3 = ρ(T), so Δ = V/3 and μ₀ is uniform Bernoulli
    let sys = Subshift::full(3);
    let v = vec![Surd::integer(2), Surd::ratio(1, 2), Surd::ratio(1, 2)];
    let w = WeightFunction::SymbolTable(v);
    let delta = sys.derive_delta(&w, DeltaMode::SubshiftPerron).unwrap();
    assert_eq!(delta.density(&Word::new(vec![0, 2])).unwrap(), Surd::ratio(2, 3));
    assert_eq!(delta.density(&Word::new(vec![1, 0])).unwrap(), Surd::ratio(1, 6));

    let mu0 = perron_fixed_measure(&sys, &w, 3).unwrap();
    assert_eq!(mu0.mass(&Word::new(vec![2, 1])).unwrap(), Surd::ratio(1, 9));

    let two = CylinderFunctional::label_indicator(vec![0, 0]);
    let p = path_integral(&delta, &Word::new(vec![1]), &two, 2, DEFAULT_NODE_BUDGET, Summation::Sequential).unwrap();
    assert_eq!(p, Surd::ratio(4, 9));

    let tests = TestFunctionSet::cylinders(&sys, 2);
    let b = ScenarioBundle::new("three", w, delta, mu0, tests, Tolerances::exact(), DEFAULT_NODE_BUDGET, Summation::Parallel)
        .unwrap();
    for r in [
        b.verify_disintegration(&[0, 1, 2, 3]).unwrap(),
        b.verify_quasi_invariance(&[1, 2, 3]).unwrap(),
        b.verify_duality().unwrap(),
        b.verify_cross_oracle(&[0, 1, 2, 3]).unwrap(),
    ] {
        assert!(r.pass, "{}: {}", r.check, r.max_discrepancy);
        assert_eq!(r.max_discrepancy, 0.0);
    }
}

fn haar_bundle() -> ScenarioBundle<Circle, f64, GridDensity> {
    let sys = Circle::new(2).unwrap();
    let w = WeightFunction::haar();
    let delta = sys.derive_delta(&w, DeltaMode::StronglyInvariant).unwrap();
    ScenarioBundle::new(
        "haar",
        w,
        delta,
        GridDensity::lebesgue(512),
        TestFunctionSet::trig(4),
        Tolerances::default(),
        DEFAULT_NODE_BUDGET,
        Summation::Parallel,
    )
    .unwrap()
}

#[test]
fn parallel_reports_do_not_depend_on_thread_count() {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let b = haar_bundle();
            (b.verify_disintegration(&[0, 2, 4]).unwrap(), b.verify_cross_oracle(&[3]).unwrap())
        })
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert!(one.0.pass && one.1.pass);
}

#[test]
fn brolin_seeds_agree_on_half_plane_mass() {
    let sys = QuadraticJulia::new(Complex64::new(0.0, 0.0));
    let n = 20_000;
    let upper = |seed| {
        let opts = BrolinOptions { samples: n, seed, thin: 16, ..BrolinOptions::default() };
        let cloud = brolin_sample(&sys, &opts).unwrap();
        cloud.points().iter().filter(|z| z.im > 0.0).count() as f64 / n as f64
    };
    let (a, b) = (upper(1), upper(2));
    let sigma = (2.0 * 0.25 / n as f64).sqrt();
    assert!((a - b).abs() < 4.0 * sigma, "{a} vs {b}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn label_path_masses_sum_to_one(k in 0u128..1024, n in 0usize..6) {
        let sys = Circle::new(2).unwrap();
        let delta = sys.derive_delta(&WeightFunction::stretched_haar(), DeltaMode::StronglyInvariant).unwrap();
        let x0 = CirclePoint::rational(k, 1024).unwrap();
        let mut masses = BTreeMap::new();
        for code in 0..(1usize << n) {
            let labels: Vec<usize> = (0..n).map(|i| (code >> i) & 1).collect();
            let f = CylinderFunctional::label_indicator(labels.clone());
            let p = path_integral(&delta, &x0, &f, n, DEFAULT_NODE_BUDGET, Summation::Sequential).unwrap();
            prop_assert!(p >= 0.0);
            masses.insert(labels, p);
        }
        let total: f64 = masses.values().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert_eq!(sys.degree(), 2);
    }
}
