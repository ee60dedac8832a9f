//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use bisym_core::dynsys::{build_q, find_involutive_pairs, invariants, DynamicalSystem};
use bisym_core::exact::RatMatrix;
use bisym_core::exchange::classify_transformation;
use bisym_core::expr::{check_identities, rat, Sampler, SymbolTable};
use bisym_core::flow::{hamiltonian_vector_field, integrate};
use bisym_core::symplectic::PoissonField;
use bisym_harness::catalog::bundled_catalog_dir;
use bisym_harness::report::normalized_json;
use bisym_harness::verify::{find_entry, load_dir};
use bisym_harness::{verify_all, verify_entry, CatalogEntry, Mutation, Side, Status, Summary, VerificationReport, VerifyConfig};

const EXAMPLES: [&str; 5] = [
    "ex1_A4_9_0_iv__A4_9_0",
    "ex2_A2+A2__A2+A2_vi",
    "ex3_A4_9_0__A4_9_0_iv",
    "ex4_A4_9_1__A4_9_1_i",
    "ex5_A4_7_i__A4_7",
];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn(&Context) -> Outcome);

struct Context {
    summary: Summary,
    elapsed: Duration,
    cfg: VerifyConfig,
}

impl Context {
    fn report(&self, id: &str) -> Result<&VerificationReport, String> {
        self.summary
            .reports
            .iter()
            .find(|r| r.entry == id)
            .ok_or_else(|| format!("no report for {id}"))
    }

    fn entry(&self, id: &str) -> Result<CatalogEntry, String> {
        find_entry(&bundled_catalog_dir(), id)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("entry {id} not found"))
    }
}

/// Which residual a criterion bounds.
#[derive(Clone, Copy)]
enum Bound {
    None,
    /// The absolute residual, used for exact checks and flow drift.
    Absolute(f64),
    /// The residual relative to the evaluation scale.
    Normalized(f64),
}

/// Every check whose name matches `select` must exist in each example report
/// and be in an acceptable state.
fn require(ctx: &Context, select: impl Fn(&str) -> bool, allow_skip: bool, bound: Bound) -> Outcome {
    let mut seen = 0;
    for id in EXAMPLES {
        let report = ctx.report(id)?;
        let mut here = 0;
        for c in report.checks.iter().filter(|c| select(&c.name)) {
            here += 1;
            let ok = c.status == Status::Pass || (allow_skip && c.status == Status::Skipped);
            if !ok {
                return Err(format!("{id}: {} is {} ({})", c.name, c.status.as_str(), c.detail));
            }
            let (limit, value) = match bound {
                Bound::None => continue,
                Bound::Absolute(l) => (l, c.max_residual),
                Bound::Normalized(l) => (l, c.normalized_residual),
            };
            if let Some(r) = value {
                if r > limit {
                    return Err(format!("{id}: {} residual {r:e} above {limit:e}", c.name));
                }
            }
        }
        if here == 0 {
            return Err(format!("{id}: no matching checks"));
        }
        seen += here;
    }
    Ok(format!("{seen} checks"))
}

fn exact_suite(ctx: &Context) -> Outcome {
    for id in EXAMPLES {
        let r = ctx.report(id)?;
        let parametric = r.parameter_samples.first().is_some_and(|s| !s.is_empty());
        if parametric && r.parameter_samples.len() < 5 {
            return Err(format!("{id}: only {} parameter samples", r.parameter_samples.len()));
        }
        for sample in &r.parameter_samples {
            if sample.values().any(|v| v == "0") {
                return Err(format!("{id}: zero parameter in sample"));
            }
        }
    }
    let exact = |n: &str| {
        n.starts_with("lie.antisymmetry.")
            || n.starts_with("lie.jacobi.")
            || n.starts_with("lie.double.")
            || n.starts_with("symplectic.closure.")
            || n.starts_with("rmatrix.cybe.")
    };
    let counted = require(ctx, exact, true, Bound::Absolute(0.0))?;
    if ctx.elapsed >= Duration::from_secs(10) {
        return Err(format!("catalog took {:?}", ctx.elapsed));
    }
    Ok(format!("{counted} exactly zero at >= 5 samples, catalog run {:?}", ctx.elapsed))
}

fn randomized_suite(ctx: &Context) -> Outcome {
    let eq = &ctx.cfg.equiv;
    if eq.trials < 20 || eq.param_samples < 3 {
        return Err("sampling below 20 points x 3 parameter samples".into());
    }
    if eq.abs_tol > 1e-9 || eq.rel_tol > 1e-9 {
        return Err("identity tolerance looser than 1e-9".into());
    }
    let randomized = |n: &str| {
        n.starts_with("darboux.")
            || n.starts_with("symmetry.")
            || n == "exchange.pushforward"
            || n == "exchange.tilde_symmetry"
    };
    let counted = require(ctx, randomized, false, Bound::Normalized(eq.abs_tol + eq.rel_tol))?;
    if ctx.elapsed >= Duration::from_secs(60) {
        return Err(format!("catalog took {:?}", ctx.elapsed));
    }
    Ok(format!("{counted} within abs 1e-9 + rel 1e-9"))
}

fn representation_suite(ctx: &Context) -> Outcome {
    let id = EXAMPLES[0];
    let report = ctx.report(id)?;
    for name in ["lie.representation.gt", "q.sts", "invariants.involution.g"] {
        let c = report.check(name).ok_or_else(|| format!("missing {name}"))?;
        if c.status != Status::Pass {
            return Err(format!("{name} is {}", c.status.as_str()));
        }
    }
    let rep_residual = report.check("lie.representation.gt").and_then(|c| c.exact_residual.clone());
    if rep_residual.as_deref() != Some("0") {
        return Err(format!("representation residual {rep_residual:?}"));
    }

    // Independent oracle: the invariants as displayed, written out here.
    let e = ctx.entry(id)?;
    let (rep, rt) = match (&e.rep_dual, &e.r_dual) {
        (Some(rep), Some(rt)) => (rep, rt),
        _ => return Err("entry lacks representation or r-matrix".into()),
    };
    let q = build_q(&e.g.functions_on_coordinates(), &rt.r, rep).map_err(|x| x.to_string())?;
    let traces = invariants(&q, 2).map_err(|x| x.to_string())?;
    let t = SymbolTable::new()
        .with_coordinates(["z1", "z2", "z3", "z4"])
        .with_parameters(["d"]);
    let parse = |s: &str| t.parse(s).map(|x| e.g.on_coordinates(&x)).map_err(|x| x.to_string());
    let i1 = parse("d*z4 + 2*z3")?;
    let i2 = parse("(d*z4)^2 + 2*z3^2")?;
    let pg = &e.g.poisson;
    let sampler = Sampler::new(e.g.coords.clone(), e.parameter_symbols());
    let ids = vec![
        ("tr Q".to_string(), traces[0].sub(&i1)),
        ("tr Q^2".to_string(), traces[1].sub(&i2)),
        ("{I1, I2}".to_string(), pg.bracket(&i1, &i2)),
    ];
    let r = check_identities(ids, &sampler, &ctx.cfg.equiv).map_err(|x| x.to_string())?;
    if !r.holds() {
        return Err(format!("failed: {:?}", r.failures()));
    }
    Ok(format!("traces match displayed invariants, max residual {:.1e}", r.max_residual()))
}

fn involutive_pairs(ctx: &Context) -> Outcome {
    let expected: [(&str, Side, &[[usize; 2]]); 4] = [
        (EXAMPLES[1], Side::G, &[[1, 3], [2, 4], [1, 4], [2, 3]]),
        (EXAMPLES[1], Side::Gt, &[[1, 3], [2, 4], [1, 4], [2, 3]]),
        (EXAMPLES[2], Side::G, &[[3, 4], [2, 4]]),
        (EXAMPLES[2], Side::Gt, &[[1, 2], [1, 3], [3, 4]]),
    ];
    let mut checked = 0;
    for (id, side, pairs) in expected {
        let e = ctx.entry(id)?;
        let data = e.side(side);
        let target = match side {
            Side::G => e.symmetry_target.constants.clone(),
            Side::Gt => e.algebra.constants.clone(),
        };
        let sys = DynamicalSystem {
            phase: data.poisson.clone(),
            s: data.functions_on_coordinates(),
            target,
        };
        let sampler = Sampler::new(data.coords.clone(), e.parameter_symbols());
        let mut found = find_involutive_pairs(&sys, &sampler, &ctx.cfg.equiv).map_err(|x| x.to_string())?;
        found.sort();
        let mut want: Vec<Vec<usize>> = pairs.iter().map(|p| vec![p[0] - 1, p[1] - 1]).collect();
        want.sort();
        if found != want {
            return Err(format!("{id} {}: found {found:?}, expected {want:?} (zero-based)", side.key()));
        }
        checked += 1;
    }
    Ok(format!("{checked} family lists reproduced"))
}

fn classification(ctx: &Context) -> Outcome {
    let counted = require(ctx, |n| n == "exchange.classification", false, Bound::None)?;
    for id in EXAMPLES {
        let d = &ctx.report(id)?.check("exchange.classification").unwrap().detail;
        let want = if id == EXAMPLES[0] {
            "bracket-preserving yes (expected yes), invariant-mapping no"
        } else {
            "bracket-preserving yes (expected yes), invariant-mapping yes"
        };
        if !d.starts_with(want) {
            return Err(format!("{id}: {d}"));
        }
    }

    // Independent oracle for one mapping: S1 -> S~4/4, S2 -> S~3, S3 -> S~2, S4 -> S~1.
    let e = ctx.entry(EXAMPLES[3])?;
    let map = &e.chart_map.map;
    let sampler = Sampler::new(map.source.clone(), e.parameter_symbols());
    let class = classify_transformation(map, &e.g.functions, &e.gt.functions, &sampler, &ctx.cfg.equiv)
        .map_err(|x| x.to_string())?;
    let (o, l) = (rat(0, 1), rat(1, 1));
    let want = RatMatrix::from_rows(vec![
        vec![o.clone(), o.clone(), o.clone(), rat(1, 4)],
        vec![o.clone(), o.clone(), l.clone(), o.clone()],
        vec![o.clone(), l.clone(), o.clone(), o.clone()],
        vec![l, o.clone(), o.clone(), o],
    ]);
    if !class.canonical() || class.coefficients.iter().any(|m| m.as_ref() != Some(&want)) {
        return Err(format!("recovered coefficients {:?}", class.coefficients));
    }
    Ok(format!("{counted} classifications as expected, coefficients exact"))
}

fn oscillator_error(dt: f64) -> Result<f64, String> {
    let t = SymbolTable::new().with_coordinates(["q", "p"]);
    let coords = vec![t.get("q").unwrap(), t.get("p").unwrap()];
    let h = t.parse("(q^2 + p^2)/2").unwrap();
    let field = hamiltonian_vector_field(&PoissonField::canonical(coords.clone()), &h);
    let tr = integrate(&field, &coords, &[1.0, 0.0], dt, 2.0 * PI, 1e-12).map_err(|x| x.to_string())?;
    let x = tr.last_state();
    Ok(((x[0] - 1.0).powi(2) + x[1].powi(2)).sqrt())
}

fn flow_conservation(ctx: &Context) -> Outcome {
    let counted = require(ctx, |n| n.starts_with("flow."), true, Bound::Absolute(ctx.cfg.flow.tolerance))?;
    let mut integrated = 0;
    for id in EXAMPLES {
        let r = ctx.report(id)?;
        let n = r.checks.iter().filter(|c| c.name.starts_with("flow.") && c.status == Status::Pass).count();
        if n == 0 {
            return Err(format!("{id}: no flow was integrated"));
        }
        integrated += n;
    }
    let ratio = oscillator_error(0.1)? / oscillator_error(0.05)?;
    if !(12.0..=20.0).contains(&ratio) {
        return Err(format!("oscillator error ratio {ratio:.2}"));
    }
    Ok(format!("{integrated} of {counted} flows within 1e-6, oscillator ratio {ratio:.2}"))
}

fn negative_controls(ctx: &Context) -> Outcome {
    let baseline = ctx.report(EXAMPLES[0])?;
    let e = ctx.entry(EXAMPLES[0])?;
    let mut notes = Vec::new();
    for m in Mutation::ALL {
        let cfg = VerifyConfig {
            mutation: Some(m),
            ..ctx.cfg.clone()
        };
        let mutated = verify_entry(&e, &cfg);
        let flipped = baseline
            .checks
            .iter()
            .filter(|c| c.status == Status::Pass)
            .filter(|c| mutated.check(&c.name).is_some_and(|x| x.status == Status::Fail))
            .count();
        if flipped == 0 {
            return Err(format!("{} flipped nothing", m.name()));
        }
        notes.push(format!("{} {flipped}", m.name()));
    }
    Ok(notes.join(", "))
}

fn determinism(ctx: &Context) -> Outcome {
    let again = verify_all(&bundled_catalog_dir(), &ctx.cfg).map_err(|x| x.to_string())?;
    let (a, b) = (normalized_json(&ctx.summary), normalized_json(&again));
    if a != b {
        return Err("reports differ between runs".into());
    }
    Ok(format!("{} bytes identical", a.len()))
}

fn main() {
    let cfg = VerifyConfig::default();
    let dir = bundled_catalog_dir();
    let start = Instant::now();
    let summary = verify_all(&dir, &cfg).expect("bundled catalog readable");
    let elapsed = start.elapsed();
    let (entries, _) = load_dir(&dir).expect("bundled catalog readable");
    println!(
        "acceptance: {} entries, {}/{} pass, seed {}",
        entries.len(),
        summary.passed,
        summary.verified,
        cfg.equiv.seed
    );
    let ctx = Context { summary, elapsed, cfg };
    let criteria: [Criterion; 8] = [
        ("exact algebraic identities", exact_suite),
        ("randomized identities", randomized_suite),
        ("representation and invariants of the first example", representation_suite),
        ("involutive families", involutive_pairs),
        ("classification of chart maps", classification),
        ("flow conservation and RK4 order", flow_conservation),
        ("negative controls", negative_controls),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (label, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, note) = match run(&ctx) {
            Ok(n) => ("PASS", n),
            Err(n) => {
                failed += 1;
                ("FAIL", n)
            }
        };
        println!("criterion {} {tag}: {label}: {note} [{:.2?}]", i + 1, t.elapsed());
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
