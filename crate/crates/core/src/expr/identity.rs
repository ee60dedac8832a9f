//! Randomized identity testing: an expression is declared identically zero
//! when it vanishes, within tolerance, at every sampled nonsingular point.

use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::eval::Tape;
use super::{int, rat, Assignment, EvalError, Expr, Rational, Symbol, DEFAULT_DEN_GUARD};

/// Tolerances and sample counts for [`equiv_zero`].
#[derive(Debug, Clone, PartialEq)]
pub struct EquivConfig {
    pub trials: usize,
    pub param_samples: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub den_guard: f64,
    pub seed: u64,
}

impl Default for EquivConfig {
    fn default() -> Self {
        Self {
            trials: 20,
            param_samples: 3,
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            den_guard: DEFAULT_DEN_GUARD,
            seed: 0,
        }
    }
}

/// Where sample points come from: declared coordinates drawn from a rational
/// interval, declared parameters drawn from a finite set of nonzero values.
#[derive(Debug, Clone)]
pub struct Sampler {
    pub coords: Vec<Symbol>,
    pub params: Vec<Symbol>,
    /// Coordinates are `n/1000` with `n` uniform in this inclusive range.
    pub coord_millis: (i64, i64),
    pub param_choices: Vec<Rational>,
}

impl Sampler {
    pub fn new(coords: Vec<Symbol>, params: Vec<Symbol>) -> Self {
        Self {
            coords,
            params,
            coord_millis: (200, 1500),
            param_choices: default_param_choices(),
        }
    }

    /// Exact parameter values for parameter sample `p`.
    pub fn parameter_sample(&self, seed: u64, p: usize) -> Vec<Rational> {
        let mut rng = stream(seed, p as u64, u32::MAX as u64);
        self.params
            .iter()
            .map(|_| self.param_choices.choose(&mut rng).expect("no parameter choices").clone())
            .collect()
    }

    /// Exact coordinate values for trial `t` of parameter sample `p`.
    pub fn coordinate_sample(&self, seed: u64, p: usize, t: usize) -> Vec<Rational> {
        let mut rng = stream(seed, p as u64, t as u64);
        self.coords
            .iter()
            .map(|_| rat(rng.gen_range(self.coord_millis.0..=self.coord_millis.1), 1000))
            .collect()
    }

    /// Parameter assignment for sample `p`, as exact rationals.
    pub fn parameter_assignment(&self, seed: u64, p: usize) -> Assignment {
        let mut a = Assignment::new();
        for (s, v) in self.params.iter().zip(self.parameter_sample(seed, p)) {
            a.set_exact(s, v);
        }
        a
    }

    fn inputs(&self) -> Vec<Symbol> {
        self.coords.iter().chain(self.params.iter()).cloned().collect()
    }

    /// All sample points as `f64` input vectors in `inputs()` order, grouped
    /// by parameter sample.
    fn points(&self, cfg: &EquivConfig) -> Vec<Vec<f64>> {
        let samples = if self.params.is_empty() { 1 } else { cfg.param_samples.max(1) };
        let mut out = Vec::with_capacity(samples * cfg.trials);
        for p in 0..samples {
            let pv: Vec<f64> = self
                .parameter_sample(cfg.seed, p)
                .iter()
                .map(|r| r.to_f64().unwrap())
                .collect();
            for t in 0..cfg.trials {
                let mut v: Vec<f64> = self
                    .coordinate_sample(cfg.seed, p, t)
                    .iter()
                    .map(|r| r.to_f64().unwrap())
                    .collect();
                v.extend_from_slice(&pv);
                out.push(v);
            }
        }
        out
    }
}

pub fn default_param_choices() -> Vec<Rational> {
    [rat(1, 2), int(1), int(2), int(3)]
        .into_iter()
        .flat_map(|r| [r.clone(), -r])
        .collect()
}

/// Deterministic RNG for a given master seed and (sample, trial) pair.
pub fn stream(seed: u64, sample: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((sample << 32) | (trial & 0xFFFF_FFFF));
    rng
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error("every sampled point was singular")]
    Inconclusive,
    #[error(transparent)]
    Unbound(#[from] UnboundSymbol),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("symbol `{0}` is not covered by the sampler")]
pub struct UnboundSymbol(pub String);

/// Result of testing one expression.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivOutcome {
    pub holds: bool,
    /// Largest `|value|` seen over evaluated points.
    pub max_residual: f64,
    /// Largest `|value| / max(1, scale)`, where scale is the biggest
    /// intermediate magnitude met at that point.
    pub max_normalized: f64,
    /// First failing point as (symbol, value) pairs, when `holds` is false.
    pub witness: Option<Vec<(String, f64)>>,
    pub evaluated: usize,
    pub singular: usize,
}

impl EquivOutcome {
    fn empty() -> Self {
        Self {
            holds: true,
            max_residual: 0.0,
            max_normalized: 0.0,
            witness: None,
            evaluated: 0,
            singular: 0,
        }
    }
}

/// Tests whether `e` vanishes identically.
pub fn equiv_zero(e: &Expr, sampler: &Sampler, cfg: &EquivConfig) -> Result<EquivOutcome, EquivError> {
    equiv_zero_all(std::slice::from_ref(e), sampler, cfg)?
        .pop()
        .unwrap()
}

/// Tests several expressions against the same sample points. Each entry is
/// `Err(Inconclusive)` when every point was singular for that expression.
pub fn equiv_zero_all(
    exprs: &[Expr],
    sampler: &Sampler,
    cfg: &EquivConfig,
) -> Result<Vec<Result<EquivOutcome, EquivError>>, EquivError> {
    let inputs = sampler.inputs();
    let tape = Tape::compile(exprs, &inputs).map_err(|e| match e {
        EvalError::Unbound(s) => EquivError::Unbound(UnboundSymbol(s)),
        _ => unreachable!("compilation only fails on unbound symbols"),
    })?;
    let mut outcomes = vec![EquivOutcome::empty(); exprs.len()];
    for point in sampler.points(cfg) {
        for (k, r) in tape.eval(&point, cfg.den_guard).into_iter().enumerate() {
            let o = &mut outcomes[k];
            match r {
                Err(_) => o.singular += 1,
                Ok((v, scale)) => {
                    o.evaluated += 1;
                    let mag = v.abs();
                    o.max_residual = o.max_residual.max(mag);
                    o.max_normalized = o.max_normalized.max(mag / scale.max(1.0));
                    if mag > cfg.abs_tol + cfg.rel_tol * scale && o.witness.is_none() {
                        o.holds = false;
                        o.witness = Some(
                            inputs
                                .iter()
                                .zip(&point)
                                .map(|(s, x)| (s.name().to_string(), *x))
                                .collect(),
                        );
                    }
                }
            }
        }
    }
    Ok(outcomes
        .into_iter()
        .map(|o| if o.evaluated == 0 { Err(EquivError::Inconclusive) } else { Ok(o) })
        .collect())
}

/// One labeled identity and its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledOutcome {
    pub label: String,
    pub outcome: Result<EquivOutcome, EquivError>,
}

/// Outcomes of a batch of identities sharing sample points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IdentityReport {
    pub items: Vec<LabeledOutcome>,
}

impl IdentityReport {
    /// True when every identity was evaluated somewhere and held everywhere.
    pub fn holds(&self) -> bool {
        self.items
            .iter()
            .all(|i| matches!(&i.outcome, Ok(o) if o.holds))
    }

    pub fn max_residual(&self) -> f64 {
        self.items
            .iter()
            .filter_map(|i| i.outcome.as_ref().ok())
            .map(|o| o.max_residual)
            .fold(0.0, f64::max)
    }

    pub fn max_normalized(&self) -> f64 {
        self.items
            .iter()
            .filter_map(|i| i.outcome.as_ref().ok())
            .map(|o| o.max_normalized)
            .fold(0.0, f64::max)
    }

    /// Labels of identities that failed or could not be evaluated.
    pub fn failures(&self) -> Vec<&str> {
        self.items
            .iter()
            .filter(|i| !matches!(&i.outcome, Ok(o) if o.holds))
            .map(|i| i.label.as_str())
            .collect()
    }

    /// The first failing identity together with its witness point.
    pub fn first_witness(&self) -> Option<(&str, &[(String, f64)])> {
        self.items.iter().find_map(|i| match &i.outcome {
            Ok(EquivOutcome {
                witness: Some(w), ..
            }) => Some((i.label.as_str(), w.as_slice())),
            _ => None,
        })
    }

    pub fn merge(mut self, other: IdentityReport) -> Self {
        self.items.extend(other.items);
        self
    }
}

/// Tests a batch of labeled expressions for vanishing.
pub fn check_identities(
    labeled: Vec<(String, Expr)>,
    sampler: &Sampler,
    cfg: &EquivConfig,
) -> Result<IdentityReport, EquivError> {
    let (labels, exprs): (Vec<String>, Vec<Expr>) = labeled.into_iter().unzip();
    let outcomes = equiv_zero_all(&exprs, sampler, cfg)?;
    Ok(IdentityReport {
        items: labels
            .into_iter()
            .zip(outcomes)
            .map(|(label, outcome)| LabeledOutcome { label, outcome })
            .collect(),
    })
}
