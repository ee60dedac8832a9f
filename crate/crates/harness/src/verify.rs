//! Runs every check an entry supports and collects the outcomes.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::time::Instant;

use bisym_core::dynsys::{
    build_q, check_darboux, involution_check, invariants, jacobian_ranks, maximal_involutive_subsets, sts_residual,
    symmetry_residual, trace_square_by_sum, DarbouxChart, DynamicalSystem,
};
use bisym_core::exact::{parameter_samples, ExactResidual, RatTensor3};
use bisym_core::exchange::{
    classify_transformation, coefficients_match, require_invertible, verify_theorem1, CoordinateMap, ExchangeBundle,
    ExchangeReps,
};
use bisym_core::expr::identity::check_identities;
use bisym_core::expr::{Assignment, EquivConfig, Expr, IdentityReport, Node, Rational, Sampler, Symbol};
use bisym_core::flow::{conservation_drift, hamiltonian_vector_field, integrate, FlowError, Trajectory};
use bisym_core::liealg::{
    apply_isomorphism, check_antisymmetry, check_jacobi, check_representation, cobracket_from_r, verify_manin_triple,
};
use bisym_core::rmatrix::{cybe_residual, skew_residual, transform_r};
use bisym_core::symplectic::closure_residual;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::catalog::{self, CatalogEntry, ChartMapDirection, FamilyKind, LoadError, Side, SideData};
use crate::report::{CheckResult, LoadFailure, Status, Summary, VerificationReport, Witness};

/// Built-in corruptions of an entry, used to confirm the checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mutation {
    /// Exchange the first two rows of the isomorphism matrix.
    SwapCRows,
    /// Double the first nonzero upper entry of the dual r-matrix.
    PerturbR,
    /// Remove the last term of the first coordinate-map component that is a sum.
    DropMapTerm,
}

impl Mutation {
    pub const ALL: [Mutation; 3] = [Mutation::SwapCRows, Mutation::PerturbR, Mutation::DropMapTerm];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::SwapCRows => "swap-c-rows",
            Mutation::PerturbR => "perturb-r",
            Mutation::DropMapTerm => "drop-map-term",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Largest accepted relative drift of the conserved function.
    pub tolerance: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub equiv: EquivConfig,
    /// Parameter samples used by the exact algebraic checks.
    pub exact_samples: usize,
    pub flow: FlowConfig,
    pub mutation: Option<Mutation>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            equiv: EquivConfig {
                seed: 42,
                ..EquivConfig::default()
            },
            exact_samples: 5,
            flow: FlowConfig::default(),
            mutation: None,
        }
    }
}

/// Applies a mutation, or explains why the entry cannot carry it.
pub fn apply_mutation(entry: &CatalogEntry, m: Mutation) -> Result<CatalogEntry, String> {
    let mut e = entry.clone();
    match m {
        Mutation::SwapCRows => {
            let c = &mut e.isomorphism;
            if c.rows() < 2 {
                return Err("isomorphism has fewer than two rows".into());
            }
            for j in 0..c.cols() {
                let a = c.get(0, j).clone();
                let b = c.get(1, j).clone();
                c.set(0, j, b);
                c.set(1, j, a);
            }
        }
        Mutation::PerturbR => {
            let r = e.r_dual.as_mut().ok_or("entry has no dual r-matrix")?;
            let n = r.dim();
            let (i, j) = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| !r.r.get(i, j).is_zero())
                .ok_or("dual r-matrix is zero")?;
            let two = Expr::integer(2);
            let (a, b) = (r.r.get(i, j).mul(&two), r.r.get(j, i).mul(&two));
            r.r.set(i, j, a);
            r.r.set(j, i, b);
        }
        Mutation::DropMapTerm => {
            let map = &e.coordinate_map;
            let (k, shorter) = map
                .exprs
                .iter()
                .enumerate()
                .find_map(|(k, ex)| match ex.node() {
                    Node::Sum(terms) if terms.len() >= 2 => Some((k, Expr::sum(terms[..terms.len() - 1].to_vec()))),
                    _ => None,
                })
                .ok_or("no coordinate-map component is a sum")?;
            let mut exprs = map.exprs.clone();
            exprs[k] = shorter;
            e.coordinate_map =
                CoordinateMap::new(map.source.clone(), map.target.clone(), exprs).map_err(|err| err.to_string())?;
        }
    }
    Ok(e)
}

enum Problem {
    Fail(String),
    Error(String),
}

fn err(e: impl Display) -> Problem {
    Problem::Error(e.to_string())
}

fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn sample_point(a: &Assignment) -> Vec<(String, f64)> {
    a.iter().map(|(s, v)| (s.name().to_string(), v.to_f64())).collect()
}

fn one_based(idx: &[usize]) -> String {
    let v: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
    format!("[{}]", v.join(","))
}

fn tensor_diff(a: &RatTensor3, b: &RatTensor3) -> ExactResidual {
    RatTensor3::from_fn(a.dim(), |i, j, k| &a[(i, j, k)] - &b[(i, j, k)]).max_abs()
}

struct Run<'a> {
    entry: &'a CatalogEntry,
    cfg: &'a VerifyConfig,
    params: Vec<Symbol>,
    samples: Vec<Assignment>,
    checks: Vec<CheckResult>,
}

impl<'a> Run<'a> {
    fn push(&mut self, name: &str, status: Status, max_residual: Option<f64>, exact: Option<String>, witness: Option<Witness>, detail: String) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            status,
            max_residual,
            exact_residual: exact,
            normalized_residual: None,
            witness,
            detail,
        });
    }

    fn skip(&mut self, name: &str, why: &str) {
        self.push(name, Status::Skipped, None, None, None, why.to_string());
    }

    fn problem(&mut self, name: &str, p: Problem) {
        let (status, detail) = match p {
            Problem::Fail(d) => (Status::Fail, d),
            Problem::Error(d) => (Status::Error, d),
        };
        self.push(name, status, None, None, None, detail);
    }

    /// An exact check evaluated at every parameter sample; the residual kept
    /// is the largest over samples.
    fn exact(&mut self, name: &str, mut f: impl FnMut(&Assignment) -> Result<ExactResidual, Problem>) {
        let mut worst = ExactResidual::zero();
        let mut worst_sample = None;
        for a in &self.samples {
            match f(a) {
                Ok(r) => {
                    if r.max > worst.max {
                        worst = r;
                        worst_sample = Some(a.clone());
                    }
                }
                Err(p) => return self.problem(name, p),
            }
        }
        let n = self.samples.len();
        let witness = worst_sample.map(|a| Witness {
            label: format!("index {}", one_based(worst.witness.as_deref().unwrap_or(&[]))),
            point: sample_point(&a),
        });
        let (status, detail) = if worst.is_zero() {
            (Status::Pass, format!("exactly zero at {n} parameter samples"))
        } else {
            (Status::Fail, format!("nonzero residual {}", worst.max))
        };
        self.push(name, status, Some(to_f64(&worst.max)), Some(worst.max.to_string()), witness, detail);
    }

    fn identities<E: Display>(&mut self, name: &str, r: Result<IdentityReport, E>) {
        let rep = match r {
            Ok(rep) => rep,
            Err(e) => return self.problem(name, err(e)),
        };
        let failures = rep.failures();
        let (status, detail) = if failures.is_empty() {
            (Status::Pass, format!("{} identities hold", rep.items.len()))
        } else {
            let shown: Vec<&str> = failures.iter().take(6).copied().collect();
            let more = if failures.len() > shown.len() { ", ..." } else { "" };
            (
                Status::Fail,
                format!("{} of {} fail: {}{}", failures.len(), rep.items.len(), shown.join(", "), more),
            )
        };
        let witness = rep.first_witness().map(|(label, pt)| Witness {
            label: label.to_string(),
            point: pt.to_vec(),
        });
        self.push(name, status, Some(rep.max_residual()), None, witness, detail);
        if let Some(last) = self.checks.last_mut() {
            last.normalized_residual = Some(rep.max_normalized());
        }
    }

    fn sampler(&self, side: Side) -> Sampler {
        Sampler::new(self.entry.side(side).coords.clone(), self.params.clone())
    }

    fn run(&mut self) {
        self.lie_checks();
        self.rmatrix_checks();
        self.symplectic_checks();
        for side in Side::BOTH {
            self.dynsys_checks(side);
        }
        self.q_checks();
        self.exchange_checks();
        for side in Side::BOTH {
            self.flow_checks(side);
        }
    }

    fn lie_checks(&mut self) {
        let e = self.entry;
        for (key, alg) in [("g", &e.algebra), ("gt", &e.dual)] {
            self.exact(&format!("lie.antisymmetry.{key}"), |a| {
                Ok(check_antisymmetry(&alg.constants.instantiate(a).map_err(err)?))
            });
            self.exact(&format!("lie.jacobi.{key}"), |a| Ok(check_jacobi(&alg.constants.instantiate(a).map_err(err)?)));
        }
        let manin = |a: &Assignment| {
            let g = e.algebra.constants.instantiate(a).map_err(err)?;
            let gd = e.dual.constants.instantiate(a).map_err(err)?;
            verify_manin_triple(&g, &gd).map_err(err)
        };
        self.exact("lie.double.jacobi", |a| Ok(manin(a)?.double_jacobi));
        self.exact("lie.double.ad_invariance", |a| Ok(manin(a)?.ad_invariance));
        self.exact("lie.isomorphism", |a| {
            let c = e.isomorphism.eval_exact(a).map_err(err)?;
            let f = e.algebra.constants.instantiate(a).map_err(err)?;
            let target = e.symmetry_target.constants.instantiate(a).map_err(err)?;
            let mapped = apply_isomorphism(&c, &f).map_err(|x| Problem::Fail(format!("isomorphism unusable: {x}")))?;
            Ok(tensor_diff(&mapped, &target))
        });
        match &e.rep_dual {
            None => {
                self.skip("lie.representation.gt", "no representation given");
                self.skip("lie.representation.g", "no representation given");
            }
            Some(rep) => {
                self.exact("lie.representation.gt", |a| {
                    let rho = rep.instantiate(a).map_err(err)?;
                    check_representation(&rho, &e.dual.constants.instantiate(a).map_err(err)?).map_err(err)
                });
                match e.isomorphism.inverse() {
                    Err(x) => self.problem("lie.representation.g", err(x)),
                    Ok(ci) => {
                        let conj = rep.recombine(&ci);
                        self.exact("lie.representation.g", |a| {
                            let rho = conj.instantiate(a).map_err(err)?;
                            check_representation(&rho, &e.algebra.constants.instantiate(a).map_err(err)?).map_err(err)
                        });
                    }
                }
            }
        }
    }

    fn rmatrix_checks(&mut self) {
        let e = self.entry;
        for (key, r, alg) in [("gt", &e.r_dual, &e.dual), ("g", &e.r_algebra, &e.algebra)] {
            match r {
                None => {
                    self.skip(&format!("rmatrix.skew.{key}"), "no r-matrix given");
                    self.skip(&format!("rmatrix.cybe.{key}"), "no r-matrix given");
                }
                Some(r) => {
                    self.exact(&format!("rmatrix.skew.{key}"), |a| Ok(skew_residual(&r.instantiate(a).map_err(err)?)));
                    self.exact(&format!("rmatrix.cybe.{key}"), |a| {
                        let rm = r.instantiate(a).map_err(err)?;
                        let f = alg.constants.instantiate(a).map_err(err)?;
                        Ok(cybe_residual(&rm, &f).map_err(err)?.1)
                    });
                }
            }
        }
        match (&e.r_dual, &e.r_algebra) {
            (Some(rt), Some(r)) => self.exact("rmatrix.relation", |a| {
                let c = e.isomorphism.eval_exact(a).map_err(err)?;
                let moved = transform_r(&c, &r.instantiate(a).map_err(err)?)
                    .map_err(|x| Problem::Fail(format!("isomorphism unusable: {x}")))?;
                Ok(moved.sub(&rt.instantiate(a).map_err(err)?).map_err(err)?.max_abs())
            }),
            _ => self.skip("rmatrix.relation", "needs r-matrices on both algebras"),
        }
        match &e.r_dual {
            None => self.skip("rmatrix.cobracket", "no dual r-matrix given"),
            Some(rt) => {
                let mut factors = Vec::new();
                self.exact("rmatrix.cobracket", |a| {
                    let cob = cobracket_from_r(&rt.instantiate(a).map_err(err)?, &e.dual.constants.instantiate(a).map_err(err)?)
                        .map_err(err)?;
                    let f = e.algebra.constants.instantiate(a).map_err(err)?;
                    let n = f.dim();
                    let lambda = (0..n * n * n)
                        .map(|x| (x / (n * n), (x / n) % n, x % n))
                        .find(|&ix| !f[ix].is_zero())
                        .map_or_else(Rational::zero, |ix| &cob[ix] / &f[ix]);
                    if lambda.is_zero() && !f.is_zero() {
                        return Err(Problem::Fail("cobracket of r vanishes on a non-abelian algebra".into()));
                    }
                    factors.push(lambda.clone());
                    let scaled = RatTensor3::from_fn(n, |i, j, k| &f[(i, j, k)] * &lambda);
                    Ok(tensor_diff(&cob, &scaled))
                });
                if let Some(last) = self.checks.last_mut() {
                    if last.status == Status::Pass {
                        factors.dedup();
                        let shown: Vec<String> = factors.iter().map(|x| x.to_string()).collect();
                        last.detail = format!("cobracket = lambda * bracket, lambda in {{{}}}", shown.join(", "));
                    }
                }
            }
        }
    }

    fn symplectic_checks(&mut self) {
        let e = self.entry;
        for side in Side::BOTH {
            let alg = match side {
                Side::G => &e.algebra,
                Side::Gt => &e.dual,
            };
            let omega = &e.side(side).omega;
            self.exact(&format!("symplectic.closure.{}", side.key()), |a| {
                let w = omega.instantiate(a).map_err(err)?;
                let rep = closure_residual(&w, &alg.constants.instantiate(a).map_err(err)?).map_err(err)?;
                if rep.determinant.is_zero() {
                    return Err(Problem::Fail("form is degenerate".into()));
                }
                Ok(rep.cyclic.merge(rep.skew))
            });
        }
    }

    fn dynsys_checks(&mut self, side: Side) {
        let e = self.entry;
        let k = side.key();
        let data = e.side(side);
        let sampler = self.sampler(side);
        let cfg = &self.cfg.equiv;
        self.identities(&format!("poisson.{k}"), data.poisson.check_poisson(&sampler, cfg));
        if e.poisson_lie {
            let mut worst = 0.0f64;
            let mut problem = None;
            for a in &self.samples {
                match data.poisson.identity_magnitude(a, 0.0) {
                    Ok(v) => worst = worst.max(v),
                    Err(x) => problem = Some(x.to_string()),
                }
            }
            let name = format!("poisson.identity.{k}");
            match problem {
                Some(p) => self.problem(&name, Problem::Error(p)),
                None => {
                    let ok = worst <= 1e-12;
                    let status = if ok { Status::Pass } else { Status::Fail };
                    self.push(&name, status, Some(worst), None, None, "bracket at the identity".into());
                }
            }
        } else {
            self.skip(&format!("poisson.identity.{k}"), "entry is not a Poisson-Lie group");
        }
        let chart = DarbouxChart { z: data.chart.clone() };
        self.identities(&format!("darboux.{k}"), check_darboux(&data.poisson, &chart, &sampler, cfg));
        let target = match side {
            Side::G => &e.symmetry_target,
            Side::Gt => &e.algebra,
        };
        let sys = DynamicalSystem {
            phase: data.poisson.clone(),
            s: data.functions_on_coordinates(),
            target: target.constants.clone(),
        };
        self.identities(&format!("symmetry.{k}"), symmetry_residual(&sys, &sampler, cfg));
        let name = format!("involution.{k}");
        match &data.families {
            None => self.skip(&name, "no involutive families listed"),
            Some(expected) => match involution_check(&sys.phase, &sys.s, &sampler, cfg) {
                Err(x) => self.problem(&name, err(x)),
                Ok(table) => {
                    let found = maximal_involutive_subsets(&table.commute);
                    let show = |v: &Vec<Vec<usize>>| {
                        v.iter().map(|f| one_based(f)).collect::<Vec<_>>().join(" ")
                    };
                    let (status, detail) = if &found == expected {
                        (Status::Pass, format!("families {}", show(&found)))
                    } else {
                        (Status::Fail, format!("found {}, expected {}", show(&found), show(expected)))
                    };
                    self.push(&name, status, None, None, None, detail);
                }
            },
        }
        match data.invariants_on_coordinates() {
            None => {
                self.skip(&format!("invariants.involution.{k}"), "no invariants listed");
                self.skip(&format!("invariants.independence.{k}"), "no invariants listed");
            }
            Some(inv) => {
                let table = involution_check(&data.poisson, &inv, &sampler, cfg).map(|t| t.report);
                self.identities(&format!("invariants.involution.{k}"), table);
                let name = format!("invariants.independence.{k}");
                match jacobian_ranks(&data.poisson, &inv, &sampler, cfg, 5) {
                    Err(x) => self.problem(&name, err(x)),
                    Ok(ranks) => {
                        let ok = !ranks.is_empty() && ranks.iter().all(|&r| r == inv.len());
                        let status = if ok { Status::Pass } else { Status::Fail };
                        self.push(&name, status, None, None, None, format!("jacobian ranks {ranks:?} for {} functions", inv.len()));
                    }
                }
            }
        }
    }

    fn q_checks(&mut self) {
        let e = self.entry;
        let (Some(rep), Some(rt)) = (&e.rep_dual, &e.r_dual) else {
            for n in ["q.sts", "q.invariants", "q.trace_square"] {
                self.skip(n, "no representation given");
            }
            return;
        };
        let s = e.g.functions_on_coordinates();
        let q = match build_q(&s, &rt.r, rep) {
            Ok(q) => q,
            Err(x) => {
                for n in ["q.sts", "q.invariants", "q.trace_square"] {
                    self.problem(n, err(&x));
                }
                return;
            }
        };
        let sampler = self.sampler(Side::G);
        let cfg = &self.cfg.equiv;
        self.identities("q.sts", sts_residual(&q, &rt.r, rep, &e.g.poisson, &sampler, cfg));
        match e.g.invariants_on_coordinates() {
            None => self.skip("q.invariants", "no invariants listed"),
            Some(expected) => {
                let traces = invariants(&q, expected.len());
                let r = traces.map_err(|x| x.to_string()).and_then(|t| {
                    let ids = t
                        .iter()
                        .zip(&expected)
                        .enumerate()
                        .map(|(k, (tr, ex))| (format!("tr(Q^{}) - I{}", k + 1, k + 1), tr.sub(ex)))
                        .collect();
                    check_identities(ids, &sampler, cfg).map_err(|x| x.to_string())
                });
                self.identities("q.invariants", r);
            }
        }
        let r = invariants(&q, 2).map_err(|x| x.to_string()).and_then(|t| {
            let ids = vec![("tr(Q^2) - sum Q_ab Q_ba".to_string(), t[1].sub(&trace_square_by_sum(&q)))];
            check_identities(ids, &sampler, cfg).map_err(|x| x.to_string())
        });
        self.identities("q.trace_square", r);
    }

    fn exchange_checks(&mut self) {
        let e = self.entry;
        let names = [
            "exchange.pushforward",
            "exchange.tilde_symmetry",
            "exchange.q_relation",
            "exchange.tilde_functions",
        ];
        if let Err(x) = require_invertible(&e.isomorphism, &self.samples) {
            for n in names {
                self.problem(n, err(&x));
            }
        } else {
            let reps = match (&e.rep_dual, &e.r_dual, &e.r_algebra) {
                (Some(rep), Some(rt), Some(r)) => Some(ExchangeReps {
                    r_tilde: rt.r.clone(),
                    rep_tilde: rep.clone(),
                    r: r.r.clone(),
                }),
                _ => None,
            };
            let bundle = ExchangeBundle {
                f: e.algebra.constants.clone(),
                c: e.isomorphism.clone(),
                s: e.g.functions_on_coordinates(),
                map: e.coordinate_map.clone(),
                pg: e.g.poisson.clone(),
                pgt: e.gt.poisson.clone(),
                reps,
            };
            let sampler = self.sampler(Side::Gt);
            let cfg = &self.cfg.equiv;
            match verify_theorem1(&bundle, &sampler, cfg) {
                Err(x) => {
                    for n in &names[..3] {
                        self.problem(n, err(&x));
                    }
                }
                Ok(t) => {
                    self.identities::<String>("exchange.pushforward", Ok(t.phase_exchange));
                    self.identities::<String>("exchange.tilde_symmetry", Ok(t.tilde_symmetry));
                    match t.q_relation {
                        None => self.skip("exchange.q_relation", "no representation given"),
                        Some(q) => self.identities::<String>("exchange.q_relation", Ok(q)),
                    }
                }
            }
            let r = bundle.transformed_functions().map_err(|x| x.to_string()).and_then(|st| {
                let ids = st
                    .iter()
                    .zip(e.gt.functions_on_coordinates())
                    .enumerate()
                    .map(|(i, (a, b))| (format!("St{}", i + 1), a.sub(&b)))
                    .collect();
                check_identities(ids, &sampler, cfg).map_err(|x| x.to_string())
            });
            self.identities("exchange.tilde_functions", r);
        }
        self.chart_map_check();
        self.classification_check();
    }

    fn chart_map_check(&mut self) {
        let e = self.entry;
        let cm = &e.chart_map;
        let z_of_y = e.coordinate_map.pull_back_all(&e.g.chart);
        let ids: Vec<(String, Expr)> = match cm.direction {
            ChartMapDirection::ChartTildeOfChart => {
                let sub = e.g.chart_symbols.iter().cloned().zip(z_of_y).collect();
                cm.map
                    .exprs
                    .iter()
                    .zip(&e.gt.chart)
                    .enumerate()
                    .map(|(i, (phi, zt))| (format!("zt{}", i + 1), phi.substitute(&sub).sub(zt)))
                    .collect()
            }
            ChartMapDirection::ChartOfChartTilde => {
                let sub = e.gt.chart_symbols.iter().cloned().zip(e.gt.chart.iter().cloned()).collect();
                cm.map
                    .exprs
                    .iter()
                    .zip(z_of_y)
                    .enumerate()
                    .map(|(i, (phi, z))| (format!("z{}", i + 1), z.sub(&phi.substitute(&sub))))
                    .collect()
            }
        };
        let sampler = self.sampler(Side::Gt);
        self.identities("exchange.chart_map", check_identities(ids, &sampler, &self.cfg.equiv));
    }

    fn classification_check(&mut self) {
        let name = "exchange.classification";
        let e = self.entry;
        let Some(expected) = &e.classification else {
            return self.skip(name, "no expected classification");
        };
        let family = |d: &SideData| -> Option<Vec<Expr>> {
            match expected.families {
                FamilyKind::DynamicalFunctions => Some(d.functions.clone()),
                FamilyKind::Invariants => d.invariants.clone(),
            }
        };
        let (Some(fg), Some(fgt)) = (family(&e.g), family(&e.gt)) else {
            return self.problem(name, Problem::Error("families missing".into()));
        };
        let map = &e.chart_map.map;
        let (inv_a, inv_b) = match e.chart_map.direction {
            ChartMapDirection::ChartTildeOfChart => (fgt, fg),
            ChartMapDirection::ChartOfChartTilde => (fg, fgt),
        };
        let stray = |fs: &[Expr], allowed: &[Symbol]| {
            fs.iter()
                .flat_map(|f| f.free_symbols())
                .find(|s| !s.is_parameter() && !allowed.contains(s))
        };
        if let Some(s) = stray(&inv_a, &map.target).or_else(|| stray(&inv_b, &map.source)) {
            return self.problem(
                name,
                Problem::Error(format!("classified functions must be written over the charts; found `{s}`")),
            );
        }
        let sampler = Sampler::new(map.source.clone(), self.params.clone());
        let class = match classify_transformation(map, &inv_a, &inv_b, &sampler, &self.cfg.equiv) {
            Ok(c) => c,
            Err(x) => return self.problem(name, err(x)),
        };
        let mapping_ok = match &expected.mapping {
            None => Ok(true),
            Some(m) => coefficients_match(&class, m),
        };
        let mapping_ok = match mapping_ok {
            Ok(v) => v,
            Err(x) => return self.problem(name, err(x)),
        };
        let yn = |b: bool| if b { "yes" } else { "no" };
        let mut detail = format!(
            "bracket-preserving {} (expected {}), invariant-mapping {} (expected {})",
            yn(class.bracket_preserving),
            yn(expected.bracket_preserving),
            yn(class.invariant_mapping),
            yn(expected.invariant_mapping)
        );
        if expected.mapping.is_some() {
            detail.push_str(&format!(", coefficients {}", if mapping_ok { "match" } else { "differ" }));
        }
        let ok = class.bracket_preserving == expected.bracket_preserving
            && class.invariant_mapping == expected.invariant_mapping
            && mapping_ok;
        let witness = class.bracket_report.first_witness().map(|(l, p)| Witness {
            label: l.to_string(),
            point: p.to_vec(),
        });
        let status = if ok { Status::Pass } else { Status::Fail };
        self.push(name, status, Some(class.bracket_report.max_residual()), None, witness, detail);
    }

    fn flow_checks(&mut self, side: Side) {
        let pairs = flow_pairs(self.entry, side);
        if pairs.is_empty() {
            return self.skip(&format!("flow.{}", side.key()), "no involutive pairs listed");
        }
        let fc = &self.cfg.flow;
        for (h, f) in pairs {
            let name = format!("flow.{}.{}-{}", side.key(), h, f);
            match flow_drift(self.entry, side, &h, &f, self.cfg) {
                Err(x) => self.problem(&name, Problem::Fail(x)),
                Ok(drift) => {
                    let status = if drift <= fc.tolerance { Status::Pass } else { Status::Fail };
                    let detail = format!("relative drift of {f} under {h}, dt {}, T {}", fc.dt, fc.t_end);
                    self.push(&name, status, Some(drift), None, None, detail);
                }
            }
        }
    }
}

/// Named functions of one side, written over its coordinates: `S1..`/`St1..`
/// for the dynamical functions, `I1..`/`It1..` for invariants.
pub fn named_functions(entry: &CatalogEntry, side: Side) -> Vec<(String, Expr)> {
    let data = entry.side(side);
    let suffix = match side {
        Side::G => "",
        Side::Gt => "t",
    };
    let mut out: Vec<(String, Expr)> = data
        .functions_on_coordinates()
        .into_iter()
        .enumerate()
        .map(|(i, e)| (format!("S{suffix}{}", i + 1), e))
        .collect();
    if let Some(inv) = data.invariants_on_coordinates() {
        out.extend(inv.into_iter().enumerate().map(|(i, e)| (format!("I{suffix}{}", i + 1), e)));
    }
    out
}

/// `(H, F)` name pairs: within each listed family the first member drives
/// the flow and every other member is monitored, and likewise for invariants.
pub fn flow_pairs(entry: &CatalogEntry, side: Side) -> Vec<(String, String)> {
    let data = entry.side(side);
    let suffix = match side {
        Side::G => "",
        Side::Gt => "t",
    };
    let mut out = Vec::new();
    for fam in data.families.iter().flatten() {
        for &m in &fam[1..] {
            out.push((format!("S{suffix}{}", fam[0] + 1), format!("S{suffix}{}", m + 1)));
        }
    }
    if let Some(inv) = &data.invariants {
        for m in 1..inv.len() {
            out.push((format!("I{suffix}1"), format!("I{suffix}{}", m + 1)));
        }
    }
    out
}

/// Start point of the flow on one side: the listed one, else every coordinate 1/2.
pub fn flow_start(entry: &CatalogEntry, side: Side) -> Vec<f64> {
    let data = entry.side(side);
    match &data.flow_start {
        Some(v) => v.iter().map(to_f64).collect(),
        None => vec![0.5; data.coords.len()],
    }
}

/// Integrates the Hamiltonian flow of the named function with the entry's
/// flow parameters.
pub fn run_flow(entry: &CatalogEntry, side: Side, hamiltonian: &str, dt: f64, t_end: f64, den_guard: f64) -> Result<Trajectory, String> {
    let named = named_functions(entry, side);
    let h = named
        .iter()
        .find(|(n, _)| n == hamiltonian)
        .ok_or_else(|| format!("no function named `{hamiltonian}` on side {}", side.key()))?;
    let params = &entry.flow_parameters;
    let data = entry.side(side);
    let field: Vec<Expr> = hamiltonian_vector_field(&data.poisson, &h.1)
        .iter()
        .map(|e| e.with_parameters(params))
        .collect();
    integrate(&field, &data.coords, &flow_start(entry, side), dt, t_end, den_guard).map_err(|e| match e {
        FlowError::Halted { t, reason, .. } => format!("integration halted at t = {t}: {reason}"),
        other => other.to_string(),
    })
}

fn flow_drift(entry: &CatalogEntry, side: Side, h: &str, f: &str, cfg: &VerifyConfig) -> Result<f64, String> {
    let traj = run_flow(entry, side, h, cfg.flow.dt, cfg.flow.t_end, cfg.equiv.den_guard)?;
    let params = &entry.flow_parameters;
    let fe = named_functions(entry, side)
        .into_iter()
        .find(|(n, _)| n == f)
        .map(|(_, e)| e.with_parameters(params))
        .ok_or_else(|| format!("no function named `{f}`"))?;
    let report = conservation_drift(&traj, &[fe], &entry.side(side).coords, cfg.equiv.den_guard).map_err(|e| e.to_string())?;
    Ok(report.drifts[0].relative)
}

/// Verifies one entry. Failures are part of the report, never an `Err`.
pub fn verify_entry(entry: &CatalogEntry, cfg: &VerifyConfig) -> VerificationReport {
    let start = Instant::now();
    let mutated;
    let (target, mutation_note) = match cfg.mutation {
        None => (entry, None),
        Some(m) => match apply_mutation(entry, m) {
            Ok(e) => {
                mutated = e;
                (&mutated, Some(m.name().to_string()))
            }
            Err(why) => {
                let mut r = VerificationReport {
                    entry: entry.id.clone(),
                    status: Status::Error,
                    seed: cfg.equiv.seed,
                    mutation: Some(m.name().to_string()),
                    parameter_samples: Vec::new(),
                    checks: Vec::new(),
                    wall_time_ms: 0,
                };
                r.checks.push(CheckResult {
                    name: "mutation".into(),
                    status: Status::Error,
                    max_residual: None,
                    exact_residual: None,
                    normalized_residual: None,
                    witness: None,
                    detail: why,
                });
                r.wall_time_ms = start.elapsed().as_millis() as u64;
                return r;
            }
        },
    };
    let params = target.parameter_symbols();
    let samples = parameter_samples(&params, cfg.equiv.seed, cfg.exact_samples.max(1));
    let mut run = Run {
        entry: target,
        cfg,
        params,
        samples,
        checks: Vec::new(),
    };
    run.run();
    let status = if run.checks.iter().all(|c| c.status.is_ok()) {
        Status::Pass
    } else {
        Status::Fail
    };
    let parameter_samples = run
        .samples
        .iter()
        .map(|a| a.iter().map(|(s, v)| (s.name().to_string(), exact_string(v))).collect::<BTreeMap<_, _>>())
        .collect();
    VerificationReport {
        entry: entry.id.clone(),
        status,
        seed: cfg.equiv.seed,
        mutation: mutation_note,
        parameter_samples,
        checks: run.checks,
        wall_time_ms: start.elapsed().as_millis() as u64,
    }
}

fn exact_string(v: &bisym_core::expr::Value) -> String {
    match v {
        bisym_core::expr::Value::Exact(r) => r.to_string(),
        other => format!("{:?}", other.to_f64()),
    }
}

/// Loads every entry in `dir` and verifies those that load, in parallel.
/// Unreadable entries are listed in the summary.
pub fn verify_all(dir: &Path, cfg: &VerifyConfig) -> Result<Summary, LoadError> {
    let (entries, failures) = load_dir(dir)?;
    let reports: Vec<VerificationReport> = entries.par_iter().map(|e| verify_entry(e, cfg)).collect();
    Ok(Summary::from_parts(reports, failures))
}

/// Loads every `.json` file of `dir` in name order.
pub fn load_dir(dir: &Path) -> Result<(Vec<CatalogEntry>, Vec<LoadFailure>), LoadError> {
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for path in catalog::catalog_files(dir)? {
        match catalog::load_entry(&path) {
            Ok(e) => entries.push(e),
            Err(e) => failures.push(LoadFailure {
                path: path.display().to_string(),
                message: e.to_string(),
            }),
        }
    }
    Ok((entries, failures))
}

/// Finds the entry with the given id in `dir`.
pub fn find_entry(dir: &Path, id: &str) -> Result<Option<CatalogEntry>, LoadError> {
    let direct = dir.join(format!("{id}.json"));
    if direct.is_file() {
        let e = catalog::load_entry(&direct)?;
        if e.id == id {
            return Ok(Some(e));
        }
    }
    let (entries, _) = load_dir(dir)?;
    Ok(entries.into_iter().find(|e| e.id == id))
}
