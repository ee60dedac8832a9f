//! Dynamical functions realizing a symmetry algebra, Darboux charts, the
//! Q-matrix construction with its trace invariants, and involution tests.

use thiserror::Error;

use crate::expr::identity::{check_identities, IdentityReport, UnboundSymbol};
use crate::expr::{EquivConfig, EquivError, EvalError, Expr, ExprMatrix, MatrixError, Sampler, Tape};
use crate::liealg::{MatrixRep, StructureConstants};
use crate::symplectic::PoissonField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynError {
    #[error("dimension mismatch: {what} has {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl From<UnboundSymbol> for DynError {
    fn from(u: UnboundSymbol) -> Self {
        Self::Equiv(EquivError::Unbound(u))
    }
}

fn expect_len(what: &'static str, got: usize, expected: usize) -> Result<(), DynError> {
    if got == expected {
        Ok(())
    } else {
        Err(DynError::Dimension { what, got, expected })
    }
}

/// Functions `z_1..z_{2n}` expected to satisfy `{z_i, z_{n+i}} = 1`, all other
/// brackets zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DarbouxChart {
    pub z: Vec<Expr>,
}

pub fn darboux_identities(phase: &PoissonField, chart: &DarbouxChart) -> Vec<(String, Expr)> {
    let m = chart.z.len();
    let n = m / 2;
    let grads: Vec<Vec<Expr>> = chart.z.iter().map(|z| z.gradient(&phase.coords)).collect();
    let mut out = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let b = phase.contract(&grads[i], &grads[j]);
            let (e, label) = if j == i + n {
                (b.sub(&Expr::one()), format!("{{z{},z{}}} - 1", i + 1, j + 1))
            } else {
                (b, format!("{{z{},z{}}}", i + 1, j + 1))
            };
            out.push((label, e));
        }
    }
    out
}

pub fn check_darboux(
    phase: &PoissonField,
    chart: &DarbouxChart,
    sampler: &Sampler,
    cfg: &EquivConfig,
) -> Result<IdentityReport, DynError> {
    expect_len("chart", chart.z.len(), phase.dim())?;
    Ok(check_identities(darboux_identities(phase, chart), sampler, cfg)?)
}

/// Functions `S^i` on a phase space together with the constants
/// `target[i][j][k]` their brackets must realize: `{S^i, S^j} = t^{ij}_k S^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicalSystem {
    pub phase: PoissonField,
    pub s: Vec<Expr>,
    pub target: StructureConstants,
}

impl DynamicalSystem {
    pub fn symmetry_identities(&self) -> Vec<(String, Expr)> {
        let n = self.s.len();
        let grads: Vec<Vec<Expr>> = self.s.iter().map(|s| s.gradient(&self.phase.coords)).collect();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let lhs = self.phase.contract(&grads[i], &grads[j]);
                let rhs = Expr::sum((0..n).map(|k| self.target.get(i, j, k).mul(&self.s[k])));
                out.push((format!("{{S{},S{}}}", i + 1, j + 1), lhs.sub(&rhs)));
            }
        }
        out
    }
}

/// Checks every bracket `{S^i, S^j} − t^{ij}_k S^k` for `i < j`.
pub fn symmetry_residual(
    sys: &DynamicalSystem,
    sampler: &Sampler,
    cfg: &EquivConfig,
) -> Result<IdentityReport, DynError> {
    expect_len("S-list", sys.s.len(), sys.target.dim())?;
    Ok(check_identities(sys.symmetry_identities(), sampler, cfg)?)
}

/// `Q = Σ_{ij} S_i r^{ij} ρ_j`.
pub fn build_q(s: &[Expr], r: &ExprMatrix, rep: &MatrixRep) -> Result<ExprMatrix, DynError> {
    let n = s.len();
    expect_len("r rows", r.rows(), n)?;
    expect_len("r cols", r.cols(), n)?;
    expect_len("representation", rep.len(), n)?;
    let m = rep.size();
    let mut q = ExprMatrix::zeros(m, m);
    for i in 0..n {
        for j in 0..n {
            let rij = r.get(i, j);
            if rij.is_zero() || s[i].is_zero() {
                continue;
            }
            q = q.add(&rep.rho[j].scale(&s[i].mul(rij)))?;
        }
    }
    Ok(q)
}

/// `Σ r^{ij} ρ_i ⊗ ρ_j`.
pub fn r_tensor(r: &ExprMatrix, rep: &MatrixRep) -> Result<ExprMatrix, DynError> {
    let n = rep.len();
    let m = rep.size();
    expect_len("r rows", r.rows(), n)?;
    let mut out = ExprMatrix::zeros(m * m, m * m);
    for i in 0..n {
        for j in 0..n {
            let rij = r.get(i, j);
            if rij.is_zero() {
                continue;
            }
            out = out.add(&rep.rho[i].kron(&rep.rho[j]).scale(rij))?;
        }
    }
    Ok(out)
}

/// Entries of `{Q ⊗, Q} + [Q⊗I + I⊗Q, r]`, where `{Q ⊗, Q}` has
/// `{Q_ab, Q_cd}` at row `a·m+c`, column `b·m+d` and `r = Σ r^{ij} ρ_i⊗ρ_j`.
pub fn sts_identities(
    q: &ExprMatrix,
    r: &ExprMatrix,
    rep: &MatrixRep,
    phase: &PoissonField,
) -> Result<Vec<(String, Expr)>, DynError> {
    let m = q.rows();
    expect_len("representation size", rep.size(), m)?;
    let grads: Vec<Vec<Expr>> = q.entries().iter().map(|e| e.gradient(&phase.coords)).collect();
    let id = ExprMatrix::identity(m);
    let sum = q.kron(&id).add(&id.kron(q))?;
    let rt = r_tensor(r, rep)?;
    let comm = sum.commutator(&rt)?;
    let mut out = Vec::with_capacity(m.pow(4));
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let pb = phase.contract(&grads[a * m + b], &grads[c * m + d]);
                    let (row, col) = (a * m + c, b * m + d);
                    out.push((
                        format!("sts[{},{},{},{}]", a + 1, b + 1, c + 1, d + 1),
                        pb.add(comm.get(row, col)),
                    ));
                }
            }
        }
    }
    Ok(out)
}

pub fn sts_residual(
    q: &ExprMatrix,
    r: &ExprMatrix,
    rep: &MatrixRep,
    phase: &PoissonField,
    sampler: &Sampler,
    cfg: &EquivConfig,
) -> Result<IdentityReport, DynError> {
    Ok(check_identities(sts_identities(q, r, rep, phase)?, sampler, cfg)?)
}

/// `I_k = trace(Q^k)` for `k = 1..=kmax`.
pub fn invariants(q: &ExprMatrix, kmax: usize) -> Result<Vec<Expr>, DynError> {
    let mut out = Vec::with_capacity(kmax);
    let mut power = q.clone();
    for k in 1..=kmax {
        if k > 1 {
            power = power.mul(q)?;
        }
        out.push(power.trace());
    }
    Ok(out)
}

/// `Σ_{ab} Q_ab Q_ba`, an independent route to `trace(Q²)`.
pub fn trace_square_by_sum(q: &ExprMatrix) -> Expr {
    let m = q.rows();
    Expr::sum((0..m).flat_map(|a| (0..m).map(move |b| (a, b))).map(|(a, b)| q.get(a, b).mul(q.get(b, a))))
}

/// Pairwise involution of a function family.
#[derive(Debug, Clone, PartialEq)]
pub struct InvolutionTable {
    /// `commute[a][b]` is true when `{F_a, F_b}` passes the identity test.
    pub commute: Vec<Vec<bool>>,
    pub report: IdentityReport,
}

impl InvolutionTable {
    pub fn all_commute(&self) -> bool {
        self.commute.iter().all(|row| row.iter().all(|&c| c))
    }
}

pub fn involution_check(
    phase: &PoissonField,
    fs: &[Expr],
    sampler: &Sampler,
    cfg: &EquivConfig,
) -> Result<InvolutionTable, DynError> {
    let k = fs.len();
    let grads: Vec<Vec<Expr>> = fs.iter().map(|f| f.gradient(&phase.coords)).collect();
    let mut labeled = Vec::new();
    let mut pairs = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            labeled.push((format!("{{F{},F{}}}", a + 1, b + 1), phase.contract(&grads[a], &grads[b])));
            pairs.push((a, b));
        }
    }
    let report = check_identities(labeled, sampler, cfg)?;
    let mut commute = vec![vec![true; k]; k];
    for ((a, b), item) in pairs.into_iter().zip(&report.items) {
        let ok = matches!(&item.outcome, Ok(o) if o.holds);
        commute[a][b] = ok;
        commute[b][a] = ok;
    }
    Ok(InvolutionTable { commute, report })
}

/// Maximal subsets (of size at least two) whose members pairwise commute,
/// in lexicographic order of their sorted index lists.
pub fn maximal_involutive_subsets(commute: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let k = commute.len();
    let qualifies = |set: &[usize]| set.iter().enumerate().all(|(x, &a)| set[x + 1..].iter().all(|&b| commute[a][b]));
    let mut all: Vec<Vec<usize>> = (1u64..(1u64 << k))
        .map(|mask| (0..k).filter(|i| mask & (1 << i) != 0).collect::<Vec<_>>())
        .filter(|s| s.len() >= 2 && qualifies(s))
        .collect();
    all.sort();
    let maximal: Vec<Vec<usize>> = all
        .iter()
        .filter(|s| !all.iter().any(|t| t.len() > s.len() && s.iter().all(|x| t.contains(x))))
        .cloned()
        .collect();
    maximal
}

/// Involutive families among the dynamical functions of `sys`.
pub fn find_involutive_pairs(
    sys: &DynamicalSystem,
    sampler: &Sampler,
    cfg: &EquivConfig,
) -> Result<Vec<Vec<usize>>, DynError> {
    let table = involution_check(&sys.phase, &sys.s, sampler, cfg)?;
    Ok(maximal_involutive_subsets(&table.commute))
}

/// Numerical rank of `[∂F_a/∂x^i]` at the first `points` sample points of
/// the first parameter sample; singular points are skipped.
pub fn jacobian_ranks(
    phase: &PoissonField,
    fs: &[Expr],
    sampler: &Sampler,
    cfg: &EquivConfig,
    points: usize,
) -> Result<Vec<usize>, DynError> {
    let n = phase.dim();
    let entries: Vec<Expr> = fs.iter().flat_map(|f| f.gradient(&phase.coords)).collect();
    let inputs: Vec<_> = sampler.coords.iter().chain(&sampler.params).cloned().collect();
    let tape = Tape::compile(&entries, &inputs).map_err(|e| match e {
        EvalError::Unbound(s) => DynError::from(UnboundSymbol(s)),
        other => DynError::Eval(other),
    })?;
    let params: Vec<f64> = sampler
        .parameter_sample(cfg.seed, 0)
        .iter()
        .map(|r| num_traits::ToPrimitive::to_f64(r).unwrap())
        .collect();
    let mut ranks = Vec::new();
    let mut t = 0;
    while ranks.len() < points && t < points * 20 {
        let mut x: Vec<f64> = sampler
            .coordinate_sample(cfg.seed, 0, t)
            .iter()
            .map(|r| num_traits::ToPrimitive::to_f64(r).unwrap())
            .collect();
        x.extend_from_slice(&params);
        t += 1;
        if let Ok(vals) = tape.eval_values(&x, cfg.den_guard) {
            ranks.push(numeric_rank(vals, fs.len(), n));
        }
    }
    Ok(ranks)
}

fn numeric_rank(mut a: Vec<f64>, rows: usize, cols: usize) -> usize {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let tol = scale * 1e-9;
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let (p, best) = (rank..rows)
            .map(|r| (r, a[r * cols + col].abs()))
            .fold((rank, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol {
            continue;
        }
        for c in 0..cols {
            a.swap(rank * cols + c, p * cols + c);
        }
        for r in rank + 1..rows {
            let factor = a[r * cols + col] / a[rank * cols + col];
            for c in col..cols {
                a[r * cols + c] -= factor * a[rank * cols + c];
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::SymbolTable;

    fn canonical() -> (SymbolTable, PoissonField, Sampler) {
        let t = SymbolTable::new().with_coordinates(["z1", "z2", "z3", "z4"]);
        let coords: Vec<_> = ["z1", "z2", "z3", "z4"].iter().map(|n| t.get(n).unwrap()).collect();
        let s = Sampler::new(coords.clone(), vec![]);
        (t, PoissonField::canonical(coords), s)
    }

    #[test]
    fn identity_chart_on_canonical_field() {
        let (t, f, s) = canonical();
        let chart = DarbouxChart {
            z: ["z1", "z2", "z3", "z4"].iter().map(|n| t.parse(n).unwrap()).collect(),
        };
        assert!(check_darboux(&f, &chart, &s, &EquivConfig::default()).unwrap().holds());
        let swapped = DarbouxChart {
            z: ["z1", "z3", "z2", "z4"].iter().map(|n| t.parse(n).unwrap()).collect(),
        };
        assert!(!check_darboux(&f, &swapped, &s, &EquivConfig::default()).unwrap().holds());
    }

    #[test]
    fn constant_functions_with_abelian_target() {
        let (t, f, s) = canonical();
        let sys = DynamicalSystem {
            phase: f,
            s: ["1", "2", "3", "z1"].iter().map(|n| t.parse(n).unwrap()).collect(),
            target: StructureConstants::abelian(4),
        };
        assert!(symmetry_residual(&sys, &s, &EquivConfig::default()).unwrap().holds());
        let fam = find_involutive_pairs(&sys, &s, &EquivConfig::default()).unwrap();
        assert_eq!(fam, vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn involution_of_conjugate_pair() {
        let (t, f, s) = canonical();
        let fs: Vec<_> = ["z1", "z3"].iter().map(|n| t.parse(n).unwrap()).collect();
        let tab = involution_check(&f, &fs, &s, &EquivConfig::default()).unwrap();
        assert!(!tab.commute[0][1]);
        let fs: Vec<_> = ["z1", "z2"].iter().map(|n| t.parse(n).unwrap()).collect();
        assert!(involution_check(&f, &fs, &s, &EquivConfig::default()).unwrap().all_commute());
    }

    #[test]
    fn diagonal_q_traces() {
        let t = SymbolTable::new().with_coordinates(["u"]);
        let u = t.parse("u").unwrap();
        let q = ExprMatrix::from_fn(4, 4, |i, j| match (i, j) {
            (0, 0) => u.clone(),
            (1, 1) => u.neg(),
            _ => Expr::zero(),
        });
        let inv = invariants(&q, 3).unwrap();
        let a = crate::expr::Assignment::new().with_exact(&t.get("u").unwrap(), crate::expr::int(3));
        assert_eq!(inv[0].eval_exact(&a).unwrap(), crate::expr::int(0));
        assert_eq!(inv[1].eval_exact(&a).unwrap(), crate::expr::int(18));
        assert_eq!(trace_square_by_sum(&q).eval_exact(&a).unwrap(), crate::expr::int(18));
        let zero = invariants(&ExprMatrix::zeros(4, 4), 3).unwrap();
        assert!(zero.iter().all(Expr::is_zero));
    }

    #[test]
    fn zero_r_gives_zero_q_and_sts() {
        let (t, f, s) = canonical();
        let rep = MatrixRep::new(vec![ExprMatrix::identity(2); 4]).unwrap();
        let sf: Vec<_> = ["z1", "z2", "z3", "z4"].iter().map(|n| t.parse(n).unwrap()).collect();
        let r = ExprMatrix::zeros(4, 4);
        let q = build_q(&sf, &r, &rep).unwrap();
        assert!(q.entries().iter().all(Expr::is_zero));
        assert!(sts_residual(&q, &r, &rep, &f, &s, &EquivConfig::default()).unwrap().holds());
    }

    #[test]
    fn single_r_entry_scales_one_generator() {
        let rho: Vec<_> = (0..4)
            .map(|k| ExprMatrix::from_fn(2, 2, |i, j| if i == 0 && j == 1 { Expr::integer(k + 1) } else { Expr::zero() }))
            .collect();
        let rep = MatrixRep::new(rho).unwrap();
        let s: Vec<_> = (0..4).map(|k| Expr::integer(k + 10)).collect();
        let mut r = ExprMatrix::zeros(4, 4);
        r.set(1, 2, Expr::one());
        let q = build_q(&s, &r, &rep).unwrap();
        // S_2 · ρ_3 = 11 · 3 on the (1,2) slot
        assert_eq!(q.get(0, 1).as_const().unwrap(), &crate::expr::int(33));
    }

    #[test]
    fn maximal_subsets() {
        let c = |pairs: &[(usize, usize)]| {
            let mut m = vec![vec![false; 4]; 4];
            for i in 0..4 {
                m[i][i] = true;
            }
            for &(a, b) in pairs {
                m[a][b] = true;
                m[b][a] = true;
            }
            m
        };
        assert_eq!(
            maximal_involutive_subsets(&c(&[(0, 2), (1, 3), (0, 3), (1, 2)])),
            vec![vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3]]
        );
        assert_eq!(maximal_involutive_subsets(&c(&[(0, 1), (1, 2), (0, 2)])), vec![vec![0, 1, 2]]);
        assert!(maximal_involutive_subsets(&c(&[])).is_empty());
    }

    #[test]
    fn rank_of_independent_and_dependent_families() {
        let (t, f, s) = canonical();
        let fs: Vec<_> = ["z1 + z2", "z3*z4", "2*z1 + 2*z2"].iter().map(|n| t.parse(n).unwrap()).collect();
        let ranks = jacobian_ranks(&f, &fs, &s, &EquivConfig::default(), 5).unwrap();
        assert_eq!(ranks, vec![2; 5]);
    }
}
