//! Hamiltonian vector fields, fixed-step RK4 integration and drift of
//! would-be constants of motion along the computed trajectory.

use std::io::Write;

use thiserror::Error;

use crate::expr::{EvalError, Expr, Symbol, Tape};
use crate::symplectic::PoissonField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("step size and horizon must be positive and finite (dt = {dt}, t = {t_end})")]
    BadStep { dt: f64, t_end: f64 },
    #[error("state has {got} components, the field has {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("cannot compile field: {0}")]
    Compile(EvalError),
    #[error("integration halted at t = {t}: {reason}")]
    Halted {
        t: f64,
        reason: EvalError,
        partial: Box<Trajectory>,
    },
    #[error("csv export: {0}")]
    Csv(String),
}

/// `ẋ^i = {x^i, H} = P^{ij} ∂_j H`.
pub fn hamiltonian_vector_field(p: &PoissonField, h: &Expr) -> Vec<Expr> {
    let grad = h.gradient(&p.coords);
    let n = p.dim();
    (0..n)
        .map(|i| Expr::sum((0..n).map(|j| p.p.get(i, j).mul(&grad[j]))))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub method: &'static str,
    pub dt: f64,
}

impl Trajectory {
    pub fn last_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Classical RK4 with `ceil(t_end/dt)` equal steps ending exactly at
/// `t_end`. The field must be free of parameters (substitute them first).
/// A denominator below `den_guard` or a non-finite value stops the run and
/// returns the trajectory so far inside the error.
pub fn integrate(
    field: &[Expr],
    coords: &[Symbol],
    x0: &[f64],
    dt: f64,
    t_end: f64,
    den_guard: f64,
) -> Result<Trajectory, FlowError> {
    if !(dt > 0.0 && dt.is_finite() && t_end > 0.0 && t_end.is_finite()) {
        return Err(FlowError::BadStep { dt, t_end });
    }
    if x0.len() != coords.len() || field.len() != coords.len() {
        return Err(FlowError::Dimension {
            got: x0.len(),
            expected: field.len(),
        });
    }
    let tape = Tape::compile(field, coords).map_err(FlowError::Compile)?;
    let steps = (t_end / dt).ceil() as usize;
    let h = t_end / steps as f64;
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        method: "rk4",
        dt: h,
    };
    traj.times.push(0.0);
    traj.states.push(x0.to_vec());
    let mut x = x0.to_vec();
    let n = x.len();
    let axpy = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for step in 0..steps {
        let t = step as f64 * h;
        let stage = |y: &[f64]| tape.eval_values(y, den_guard);
        let result = (|| {
            let k1 = stage(&x)?;
            let k2 = stage(&axpy(&x, &k1, h / 2.0))?;
            let k3 = stage(&axpy(&x, &k2, h / 2.0))?;
            let k4 = stage(&axpy(&x, &k3, h))?;
            let next: Vec<f64> = (0..n)
                .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect();
            if next.iter().all(|v| v.is_finite()) {
                Ok(next)
            } else {
                Err(EvalError::NonFinite)
            }
        })();
        match result {
            Ok(next) => {
                x = next;
                traj.times.push((step + 1) as f64 * h);
                traj.states.push(x.clone());
            }
            Err(reason) => {
                return Err(FlowError::Halted {
                    t,
                    reason,
                    partial: Box::new(traj),
                })
            }
        }
    }
    Ok(traj)
}

/// Values of each function at each trajectory state, row per state.
pub fn evaluate_along(traj: &Trajectory, fs: &[Expr], coords: &[Symbol], den_guard: f64) -> Result<Vec<Vec<f64>>, EvalError> {
    let tape = Tape::compile(fs, coords)?;
    traj.states.iter().map(|x| tape.eval_values(x, den_guard)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Drift {
    pub initial: f64,
    /// `max_t |F(x(t)) − F(x(0))|`.
    pub max_abs: f64,
    /// `max_abs / |F(x(0))|` when `|F(x(0))| > 1e-12`, else `max_abs`.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub drifts: Vec<Drift>,
}

pub fn conservation_drift(
    traj: &Trajectory,
    fs: &[Expr],
    coords: &[Symbol],
    den_guard: f64,
) -> Result<DriftReport, EvalError> {
    let values = evaluate_along(traj, fs, coords, den_guard)?;
    let drifts = (0..fs.len())
        .map(|k| {
            let initial = values.first().map_or(0.0, |row| row[k]);
            let max_abs = values.iter().map(|row| (row[k] - initial).abs()).fold(0.0, f64::max);
            let relative = if initial.abs() > 1e-12 { max_abs / initial.abs() } else { max_abs };
            Drift {
                initial,
                max_abs,
                relative,
            }
        })
        .collect();
    Ok(DriftReport { drifts })
}

/// Writes `t, x1..x2n, F1..Fk`, one row per state, with full `f64` precision.
pub fn write_csv<W: Write>(
    out: W,
    traj: &Trajectory,
    coords: &[Symbol],
    fs: &[(String, Expr)],
    den_guard: f64,
) -> Result<(), FlowError> {
    let exprs: Vec<Expr> = fs.iter().map(|(_, e)| e.clone()).collect();
    let values = evaluate_along(traj, &exprs, coords, den_guard).map_err(|e| FlowError::Csv(e.to_string()))?;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| FlowError::Csv(e.to_string());
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(coords.iter().map(|s| s.name().to_string()))
        .chain(fs.iter().map(|(n, _)| n.clone()))
        .collect();
    w.write_record(&header).map_err(csv_err)?;
    for ((t, x), f) in traj.times.iter().zip(&traj.states).zip(&values) {
        let row: Vec<String> = std::iter::once(t).chain(x).chain(f).map(|v| format!("{v:e}")).collect();
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| FlowError::Csv(e.to_string()))
}
