use bisym_core::expr::{Assignment, Sampler, SymbolTable};
use bisym_harness::catalog::bundled_catalog_dir;
use bisym_harness::report::{normalized_json, report_text, VerificationReport};
use bisym_harness::verify::find_entry;
use bisym_harness::{emit_report, emit_summary, verify_all, verify_entry, Format, Mutation, Status, Summary, VerifyConfig};

const EX1: &str = "ex1_A4_9_0_iv__A4_9_0";

fn entry(id: &str) -> bisym_harness::CatalogEntry {
    find_entry(&bundled_catalog_dir(), id).unwrap().unwrap()
}

fn ex1_report(mutation: Option<Mutation>) -> VerificationReport {
    let cfg = VerifyConfig {
        mutation,
        ..VerifyConfig::default()
    };
    verify_entry(&entry(EX1), &cfg)
}

#[test]
fn bundled_catalog_passes() {
    let s = verify_all(&bundled_catalog_dir(), &VerifyConfig::default()).unwrap();
    assert_eq!((s.verified, s.passed), (6, 6), "{:?}", s.reports.iter().map(|r| r.failing()).collect::<Vec<_>>());
    assert_eq!(s.status, Status::Pass);
}

#[test]
fn trivial_entry_skips_representation_checks() {
    let r = verify_entry(&entry("trivial_abelian"), &VerifyConfig::default());
    assert_eq!(r.status, Status::Pass);
    for name in ["lie.representation.gt", "lie.representation.g", "q.sts", "q.invariants", "rmatrix.cybe.gt"] {
        assert_eq!(r.check(name).unwrap().status, Status::Skipped, "{name}");
    }
}

#[test]
fn checks_run_in_the_documented_order() {
    let r = ex1_report(None);
    let groups = ["lie.", "rmatrix.", "symplectic.", "poisson.", "q.", "exchange.", "flow."];
    let position = |prefix: &str| r.checks.iter().position(|c| c.name.starts_with(prefix)).unwrap();
    let order: Vec<usize> = groups.iter().map(|g| position(g)).collect();
    assert!(order.windows(2).all(|w| w[0] < w[1]), "{order:?}");
}

#[test]
fn required_checks_are_present_somewhere_in_the_catalog() {
    let s = verify_all(&bundled_catalog_dir(), &VerifyConfig::default()).unwrap();
    let required = [
        "lie.antisymmetry.g",
        "lie.jacobi.g",
        "lie.antisymmetry.gt",
        "lie.jacobi.gt",
        "lie.double.jacobi",
        "lie.double.ad_invariance",
        "lie.isomorphism",
        "lie.representation.gt",
        "lie.representation.g",
        "rmatrix.skew.gt",
        "rmatrix.cybe.gt",
        "rmatrix.skew.g",
        "rmatrix.cybe.g",
        "rmatrix.relation",
        "rmatrix.cobracket",
        "symplectic.closure.g",
        "symplectic.closure.gt",
        "poisson.g",
        "poisson.gt",
        "poisson.identity.g",
        "poisson.identity.gt",
        "darboux.g",
        "darboux.gt",
        "symmetry.g",
        "symmetry.gt",
        "involution.g",
        "involution.gt",
        "invariants.involution.g",
        "invariants.independence.g",
        "q.sts",
        "q.invariants",
        "q.trace_square",
        "exchange.pushforward",
        "exchange.tilde_symmetry",
        "exchange.q_relation",
        "exchange.tilde_functions",
        "exchange.chart_map",
        "exchange.classification",
    ];
    for name in required {
        let exercised = s
            .reports
            .iter()
            .any(|r| r.check(name).is_some_and(|c| c.status == Status::Pass));
        assert!(exercised, "no entry passes `{name}`");
    }
    assert!(s.reports.iter().any(|r| r.checks.iter().any(|c| c.name.starts_with("flow.g.") && c.status == Status::Pass)));
    assert!(s.reports.iter().any(|r| r.checks.iter().any(|c| c.name.starts_with("flow.gt.") && c.status == Status::Pass)));
}

#[test]
fn every_mutation_flips_a_check() {
    let base = ex1_report(None);
    for m in Mutation::ALL {
        let r = ex1_report(Some(m));
        assert_eq!(r.status, Status::Fail, "{}", m.name());
        assert_eq!(r.mutation.as_deref(), Some(m.name()));
        let flipped: Vec<&str> = r
            .failing()
            .into_iter()
            .filter(|n| base.check(n).is_some_and(|c| c.status == Status::Pass))
            .collect();
        assert!(!flipped.is_empty(), "{}", m.name());
    }
    let swapped = ex1_report(Some(Mutation::SwapCRows));
    assert!(swapped.failing().contains(&"lie.isomorphism"));
    let fail = swapped.check("lie.isomorphism").unwrap();
    assert!(fail.witness.is_some());
}

#[test]
fn reports_are_deterministic() {
    let dir = bundled_catalog_dir();
    let cfg = VerifyConfig::default();
    let a = verify_all(&dir, &cfg).unwrap();
    let b = verify_all(&dir, &cfg).unwrap();
    assert_eq!(normalized_json(&a), normalized_json(&b));
}

#[test]
fn seed_changes_the_samples() {
    let e = entry(EX1);
    let mut cfg = VerifyConfig::default();
    let a = verify_entry(&e, &cfg);
    cfg.equiv.seed = 7;
    let b = verify_entry(&e, &cfg);
    assert_eq!(b.status, Status::Pass);
    assert_ne!(a.parameter_samples, b.parameter_samples);
}

#[test]
fn json_round_trips() {
    for r in [ex1_report(None), ex1_report(Some(Mutation::PerturbR))] {
        let bytes = emit_report(&r, Format::Json);
        let back: VerificationReport = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back, r);
    }
    let s = verify_all(&bundled_catalog_dir(), &VerifyConfig::default()).unwrap();
    let back: Summary = serde_json::from_slice(&emit_summary(&s, Format::Json)).unwrap();
    assert_eq!(back, s);
}

#[test]
fn json_carries_status_residuals_and_exact_witnesses() {
    let pass = String::from_utf8(emit_report(&ex1_report(None), Format::Json)).unwrap();
    assert!(pass.contains("\"status\": \"pass\""));
    assert!(pass.contains("\"max_residual\""));

    let r = ex1_report(Some(Mutation::DropMapTerm));
    let text = String::from_utf8(emit_report(&r, Format::Json)).unwrap();
    assert!(text.contains("\"status\": \"fail\""));
    let back: VerificationReport = serde_json::from_str(&text).unwrap();
    let (orig, parsed) = r
        .checks
        .iter()
        .zip(&back.checks)
        .find(|(c, _)| c.witness.is_some())
        .expect("a failing sampled check carries a witness");
    for ((_, a), (_, b)) in orig.witness.as_ref().unwrap().point.iter().zip(&parsed.witness.as_ref().unwrap().point) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn text_report_lists_every_check() {
    let r = ex1_report(Some(Mutation::SwapCRows));
    let text = report_text(&r);
    assert!(text.contains("[fail]"));
    assert!(text.contains("mutation: swap-c-rows"));
    for c in &r.checks {
        assert!(text.contains(&c.name), "{}", c.name);
    }
}

/// Rendering every catalog expression and parsing it back gives the same
/// values at exact sample points.
#[test]
fn catalog_expressions_survive_render_and_parse() {
    let e = entry("ex3_A4_9_0__A4_9_0_iv");
    let names: Vec<String> = e
        .g
        .coords
        .iter()
        .chain(&e.gt.coords)
        .chain(&e.g.chart_symbols)
        .chain(&e.gt.chart_symbols)
        .map(|s| s.name().to_string())
        .collect();
    let params: Vec<String> = e.parameter_symbols().iter().map(|s| s.name().to_string()).collect();
    let table = SymbolTable::new().with_coordinates(names.iter().map(String::as_str)).with_parameters(params.iter().map(String::as_str));
    let mut exprs: Vec<_> = e.g.functions.iter().chain(&e.gt.functions).cloned().collect();
    exprs.extend(e.coordinate_map.exprs.iter().cloned());
    exprs.extend(e.g.chart.iter().chain(&e.gt.chart).cloned());
    let all_symbols: Vec<_> = e.g.coords.iter().chain(&e.gt.coords).chain(&e.g.chart_symbols).chain(&e.gt.chart_symbols).cloned().collect();
    let sampler = Sampler::new(all_symbols, e.parameter_symbols());
    for (k, expr) in exprs.iter().enumerate() {
        let back = table.parse(&expr.render()).unwrap();
        let mut a: Assignment = sampler.parameter_assignment(3, 0);
        for (s, v) in sampler.coords.iter().zip(sampler.coordinate_sample(3, 0, k)) {
            a.set_exact(s, v);
        }
        let (x, y) = (expr.eval(&a).unwrap().to_f64(), back.eval(&a).unwrap().to_f64());
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{} : {x} vs {y}", expr.render());
    }
}
