//! First-order optimality residuals for a candidate GP solution, computed in
//! the convex (log-space) form: multipliers for the active constraints are fit
//! by nonnegative least squares and the stationarity defect reported.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::{GeometricProgram, GpError};

/// Activity thresholds tried on the log-space constraint values. A candidate
/// is judged by the best threshold: exact optima certify under the tightest,
/// while grid-accurate points sit slightly inside their active constraints and
/// need a looser notion of activity.
const ACTIVE_TOLS: [f64; 3] = [1e-6, 1e-4, 1e-3];

/// Residuals of the convex-form KKT system at a candidate point.
#[derive(Debug, Clone, Copy)]
pub struct KktReport {
    /// `max-norm` of `grad f0 + sum lambda_i grad f_i`, scaled by `max(1, |grad f0|)`.
    pub stationarity: f64,
    /// Worst violation of `f_i(y) <= 1` / `|g_j(y) - 1|`.
    pub primal: f64,
    /// Worst `|lambda_i * f_i|` over inactive-but-weighted constraints (log space).
    pub complementarity: f64,
}

impl KktReport {
    pub fn residual(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.complementarity)
    }
}

/// Evaluate the stationarity/feasibility/complementarity residuals of `values`
/// for `gp`. Fails on non-positive candidate values.
pub fn check_kkt(
    gp: &GeometricProgram,
    values: &BTreeMap<String, f64>,
) -> Result<KktReport, GpError> {
    for (v, &y) in values {
        if !(y > 0.0) || !y.is_finite() {
            return Err(GpError::NonPositiveValue(v.clone(), y));
        }
    }
    let form = gp.to_convex()?;
    // work in full z-space (ignore equality elimination: equalities enter the
    // primal residual; stationarity is projected onto the free subspace below)
    let z: Vec<f64> = form
        .vars
        .iter()
        .map(|v| values.get(v).map(|y| y.ln()).ok_or_else(|| GpError::MissingValue(v.clone())))
        .collect::<Result<_, _>>()?;
    let free = match &form.subspace {
        None => z.clone(),
        Some(_) => {
            // candidate must satisfy the equalities; residual handled below,
            // stationarity computed in w-space requires the projection of z.
            // For simplicity (and because eliminated programs are rare here)
            // we fit multipliers in w-space only when a subspace exists.
            vec![]
        }
    };

    let mut primal = 0.0f64;
    for c in gp.constraints() {
        primal = primal.max(c.eval(values)? - 1.0);
    }
    for e in gp.equalities() {
        primal = primal.max((e.eval(values)? - 1.0).abs());
    }
    primal = primal.max(0.0);

    // Gradients in the space the solver actually optimizes.
    let (dim, obj, cons, point): (usize, _, _, Vec<f64>) = if form.subspace.is_some() {
        // Project z onto the free coordinates: w entries are the free vars of
        // the elimination, which are exactly preserved coordinates of z.
        // to_convex built `map` with identity rows on free columns, so the
        // free components can be recovered by least squares; given the rare
        // use, recompute via the subspace map pseudo-inverse.
        let sub = form.subspace.as_ref().unwrap();
        let n = form.vars.len();
        let mcols = form.free_dim;
        let a = DMatrix::from_fn(n, mcols, |i, j| sub.map[i][j]);
        let rhs = DVector::from_fn(n, |i, _| z[i] - sub.offset[i]);
        let w = a
            .clone()
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|_| GpError::InconsistentEqualities(f64::NAN))?;
        (mcols, form.objective.clone(), form.constraints.clone(), w.iter().copied().collect())
    } else {
        (form.free_dim, form.objective.clone(), form.constraints.clone(), free)
    };

    let mut g0 = vec![0.0; dim];
    obj.eval_grad(&point, &mut g0);
    let scale = 1.0 + g0.iter().fold(0.0f64, |a, b| a.max(b.abs()));

    let mut fvals = Vec::with_capacity(cons.len());
    let mut grads: Vec<Vec<f64>> = Vec::with_capacity(cons.len());
    let mut buf = vec![0.0; dim];
    for c in &cons {
        let (f, _) = c.eval_grad(&point, &mut buf);
        fvals.push(f);
        grads.push(buf.clone());
    }
    let mut best: Option<KktReport> = None;
    for active_tol in ACTIVE_TOLS {
        let active: Vec<usize> =
            (0..cons.len()).filter(|&i| fvals[i] >= -active_tol).collect();

        // Nonnegative least squares for the active multipliers by iterative
        // support clipping (small systems; deterministic).
        let mut lambda = vec![0.0; cons.len()];
        if !active.is_empty() {
            let mut support: Vec<usize> = active.clone();
            for _ in 0..16 {
                if support.is_empty() {
                    break;
                }
                let a = DMatrix::from_fn(dim, support.len(), |r, c| grads[support[c]][r]);
                let rhs = DVector::from_fn(dim, |r, _| -g0[r]);
                let sol = a.clone().svd(true, true).solve(&rhs, 1e-12);
                let Ok(sol) = sol else { break };
                let neg: Vec<usize> =
                    (0..support.len()).filter(|&c| sol[c] < 0.0).map(|c| support[c]).collect();
                for l in lambda.iter_mut() {
                    *l = 0.0;
                }
                for (c, &i) in support.iter().enumerate() {
                    lambda[i] = sol[c].max(0.0);
                }
                if neg.is_empty() {
                    break;
                }
                support.retain(|i| !neg.contains(i));
            }
        }

        let mut resid = g0.clone();
        for (i, g) in grads.iter().enumerate() {
            if lambda[i] != 0.0 {
                for (r, gi) in resid.iter_mut().zip(g.iter()) {
                    *r += lambda[i] * gi;
                }
            }
        }
        let stationarity = resid.iter().fold(0.0f64, |a, b| a.max(b.abs())) / scale;
        let complementarity = (0..cons.len())
            .map(|i| (lambda[i] * fvals[i]).abs())
            .fold(0.0f64, f64::max);
        let report = KktReport { stationarity, primal, complementarity };
        if best.map_or(true, |b| report.residual() < b.residual()) {
            best = Some(report);
        }
    }
    Ok(best.expect("at least one threshold evaluated"))
}
