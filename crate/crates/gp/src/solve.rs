//! Log-barrier path-following solver for the convex (log-space) form.
//!
//! Inner iterations are damped Newton steps with backtracking; the barrier
//! parameter grows by a factor of 10 per outer stage starting from 1, and the
//! solve terminates once the duality-gap bound `m / t` drops below tolerance.
//! Infeasible starts are handled by a phase-I minimization of the maximum
//! constraint value. The method is fully deterministic.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::convex::{ConvexForm, LogSumExp};
use crate::kkt::check_kkt;
use crate::{GeometricProgram, GpError, GpSolution, Status};

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Duality-gap target; also the strict-feasibility margin scale.
    pub tol: f64,
    /// Total damped-Newton iteration budget across all stages.
    pub max_newton: usize,
    /// Record the iterate sequence for diagnosis.
    pub debug: bool,
    /// Optional starting point in the original (positive) space. Ignored when
    /// the program has monomial equalities.
    pub initial: Option<BTreeMap<String, f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_newton: 2000, debug: false, initial: None }
    }
}

/// One recorded Newton iterate.
#[derive(Debug, Clone)]
pub struct IterateRecord {
    pub barrier_t: f64,
    pub point: Vec<f64>,
    pub merit: f64,
}

#[derive(Debug, Clone, Default)]
pub struct DebugLog {
    pub vars: Vec<String>,
    pub iterates: Vec<IterateRecord>,
}

/// Objective plus constraints over one variable block.
struct Smooth<'a> {
    objective: &'a LogSumExp,
    constraints: &'a [LogSumExp],
    dim: usize,
}

struct Eval {
    merit: f64,
    feasible: bool,
}

impl Smooth<'_> {
    /// Merit `f0 + phi/t`; infeasible points get +inf.
    fn merit(&self, w: &[f64], t: f64) -> Eval {
        let mut m = self.objective.eval(w);
        for c in self.constraints {
            let f = c.eval(w);
            if f >= 0.0 || !f.is_finite() {
                return Eval { merit: f64::INFINITY, feasible: false };
            }
            m += -(-f).ln() / t;
        }
        Eval { merit: m, feasible: m.is_finite() }
    }

    /// Gradient and Hessian of the merit at a strictly feasible `w`.
    fn derivatives(&self, w: &[f64], t: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let n = self.dim;
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        let mut gbuf = vec![0.0; n];

        let (_, acts) = self.objective.eval_grad(w, &mut gbuf);
        for (i, g) in gbuf.iter().enumerate() {
            grad[i] += g;
        }
        accumulate_quadratic(&mut hess, self.objective, &acts, &gbuf, 1.0, -1.0);

        for c in self.constraints {
            let (f, acts) = c.eval_grad(w, &mut gbuf);
            if f >= 0.0 || !f.is_finite() {
                return None;
            }
            let u = -f;
            let inv = 1.0 / (t * u);
            for (i, g) in gbuf.iter().enumerate() {
                grad[i] += g * inv;
            }
            // d2/dw2 [-ln(-f)]/t = S/(t u) + g g^T (1 - u)/(t u^2)
            accumulate_quadratic(&mut hess, c, &acts, &gbuf, inv, (1.0 - u) / (t * u * u));
        }
        Some((grad, hess))
    }
}

/// Adds `c_soft * sum_k act_k a_k a_k^T + c_rank1 * g g^T` to `hess`.
fn accumulate_quadratic(
    hess: &mut DMatrix<f64>,
    lse: &LogSumExp,
    acts: &[f64],
    grad: &[f64],
    c_soft: f64,
    c_rank1: f64,
) {
    for ((coefs, _), &wk) in lse.rows.iter().zip(acts.iter()) {
        let scale = c_soft * wk;
        if scale == 0.0 {
            continue;
        }
        for &(j1, e1) in coefs {
            for &(j2, e2) in coefs {
                hess[(j1, j2)] += scale * e1 * e2;
            }
        }
    }
    if c_rank1 != 0.0 {
        for &j1 in &lse.support() {
            let gj1 = grad[j1];
            if gj1 == 0.0 {
                continue;
            }
            for &j2 in &lse.support() {
                hess[(j1, j2)] += c_rank1 * gj1 * grad[j2];
            }
        }
    }
}

/// Solve `(H + lam I) d = -g`, escalating `lam` until the factorization holds.
fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let n = hess.nrows();
    let scale = 1.0 + hess.diagonal().amax();
    let mut lam = 0.0f64;
    for _ in 0..24 {
        let mut h = hess.clone();
        if lam > 0.0 {
            for i in 0..n {
                h[(i, i)] += lam;
            }
        }
        if let Some(chol) = h.cholesky() {
            return Some(chol.solve(&(-grad)));
        }
        lam = if lam == 0.0 { 1e-12 * scale } else { lam * 100.0 };
    }
    None
}

struct StageOutcome {
    iters: usize,
    /// Stop early once `objective value < early_exit` (phase I only).
    hit_early_exit: bool,
}

/// Damped Newton to (approximate) centrality for one barrier stage.
#[allow(clippy::too_many_arguments)]
fn center(
    smooth: &Smooth,
    w: &mut Vec<f64>,
    t: f64,
    budget: usize,
    early_exit: Option<f64>,
    debug: &mut Option<DebugLog>,
) -> StageOutcome {
    let mut iters = 0usize;
    while iters < budget {
        if let Some(thresh) = early_exit {
            if smooth.objective.eval(w) < thresh {
                return StageOutcome { iters, hit_early_exit: true };
            }
        }
        let Some((grad, hess)) = smooth.derivatives(w, t) else { break };
        let Some(dir) = newton_direction(&hess, &grad) else { break };
        let slope = grad.dot(&dir);
        // Newton decrement^2 = -slope when the solve is exact.
        if -slope * 0.5 <= 1e-15 {
            break;
        }
        let base = smooth.merit(w, t).merit;
        // near convergence the Armijo decrease falls below representable
        // differences of the merit; tolerate that noise floor
        let noise = 4.0 * f64::EPSILON * base.abs();
        let mut alpha = 1.0f64;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> =
                w.iter().zip(dir.iter()).map(|(wi, di)| wi + alpha * di).collect();
            let ev = smooth.merit(&trial, t);
            if ev.feasible && ev.merit <= base + 0.01 * alpha * slope + noise {
                *w = trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        iters += 1;
        if let Some(log) = debug.as_mut() {
            log.iterates.push(IterateRecord {
                barrier_t: t,
                point: w.clone(),
                merit: smooth.merit(w, t).merit,
            });
        }
        if !accepted {
            break;
        }
    }
    StageOutcome { iters, hit_early_exit: false }
}

/// Phase I: minimize `s` subject to `f_i(w) <= s`; returns a strictly feasible
/// `w` or the infeasibility certificate (the optimal `s* >= 0`).
fn phase_one(
    form: &ConvexForm,
    w0: &[f64],
    budget: &mut usize,
    debug: &mut Option<DebugLog>,
) -> Result<Vec<f64>, GpError> {
    let n = form.free_dim;
    let s_idx = n;
    let augmented: Vec<LogSumExp> = form
        .constraints
        .iter()
        .map(|c| LogSumExp {
            rows: c
                .rows
                .iter()
                .map(|(coefs, b)| {
                    let mut coefs = coefs.clone();
                    coefs.push((s_idx, -1.0));
                    (coefs, *b)
                })
                .collect(),
        })
        .collect();
    let objective = LogSumExp { rows: vec![(vec![(s_idx, 1.0)], 0.0)] };
    let smooth = Smooth { objective: &objective, constraints: &augmented, dim: n + 1 };

    let s0 = form
        .constraints
        .iter()
        .map(|c| c.eval(w0))
        .fold(f64::NEG_INFINITY, f64::max)
        + 1.0;
    let mut w = w0.to_vec();
    w.push(s0);

    let m = augmented.len().max(1) as f64;
    let mut t = 1.0f64;
    loop {
        let out = center(&smooth, &mut w, t, (*budget).min(80), Some(-1e-6), debug);
        *budget = budget.saturating_sub(out.iters);
        if out.hit_early_exit || w[s_idx] < -1e-6 {
            w.pop();
            return Ok(w);
        }
        if m / t <= 1e-9 || *budget == 0 {
            let s_star = w[s_idx];
            if s_star < -1e-9 {
                w.pop();
                return Ok(w);
            }
            return Err(GpError::Infeasible(s_star));
        }
        t *= 10.0;
    }
}

pub(crate) fn solve(gp: &GeometricProgram, options: &SolveOptions) -> Result<GpSolution, GpError> {
    let form = gp.to_convex()?;
    let n = form.free_dim;
    let mut debug = options.debug.then(|| DebugLog { vars: form.vars.clone(), iterates: vec![] });

    // Starting point: caller-provided (no equalities only), else the origin.
    let mut w = vec![0.0; n];
    if form.subspace.is_none() {
        if let Some(init) = &options.initial {
            let mut z = Vec::with_capacity(n);
            for v in &form.vars {
                let y = *init.get(v).ok_or_else(|| GpError::MissingValue(v.clone()))?;
                if !(y > 0.0) {
                    return Err(GpError::NonPositiveValue(v.clone(), y));
                }
                z.push(y.ln());
            }
            w = z;
        }
    }

    let mut budget = options.max_newton;
    let strictly_feasible = form.constraints.iter().all(|c| c.eval(&w) < 0.0);
    if !strictly_feasible {
        w = phase_one(&form, &w, &mut budget, &mut debug)?;
    }

    let smooth =
        Smooth { objective: &form.objective, constraints: &form.constraints, dim: n };
    let m = form.constraints.len() as f64;
    let mut t = 1.0f64;
    let mut total_iters = options.max_newton - budget;
    let mut gap_reached = m == 0.0;
    loop {
        let out = center(&smooth, &mut w, t, budget.min(80), None, &mut debug);
        budget = budget.saturating_sub(out.iters);
        total_iters += out.iters;
        if m == 0.0 || m / t <= options.tol {
            gap_reached = true;
            break;
        }
        if budget == 0 {
            break;
        }
        t *= 10.0;
    }

    let values = form.values_from_free(&w);
    let objective = gp.objective().eval(&values)?;
    let kkt = check_kkt(gp, &values)?;
    let mut feasible_enough = true;
    for c in gp.constraints() {
        if c.eval(&values)? > 1.0 + 1e-8 {
            feasible_enough = false;
        }
    }
    for e in gp.equalities() {
        if (e.eval(&values)? - 1.0).abs() > 1e-8 {
            feasible_enough = false;
        }
    }
    let status = if gap_reached && feasible_enough && kkt.residual() <= 1e-6 {
        Status::Optimal
    } else {
        Status::MaxIter
    };
    Ok(GpSolution { status, values, objective, kkt, newton_iters: total_iters, debug })
}
