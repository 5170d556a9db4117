//! Emulation-based gain design.
//!
//! Two stages: control gains are designed for the continuous-time controller
//! by a geometric program whose constraints certify the diagonal ellipsoid
//! check; event-triggering gains are then designed by a second geometric
//! program that preserves the certificate under held samples. A linear
//! program (closed-form corner rule) picks the Lyapunov weighting beforehand
//! when none is supplied.

use gp::{GeometricProgram, GpError, Monomial, Posynomial, SolveOptions, Status};
use thiserror::Error;

use crate::model::{GainSet, ModelError, Network, Objective};
use crate::verify::{
    self, drift, gain_mass, Certificate, VerifyError,
};

/// Default closure constant for the strict inequalities of the design
/// programs ("any positive constant").
pub const DEFAULT_EPS: f64 = 1e-6;

/// Default per-node bounds for the Lyapunov-parameter LP.
pub const DEFAULT_P_BOUNDS: (f64, f64) = (0.5, 2.0);

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("geometric program: {0}")]
    Gp(#[from] GpError),
    #[error("objective {m} unreachable under the gain bounds: budget constant {value:.6e} must be positive")]
    ObjectiveUnreachable { m: usize, value: f64 },
    #[error("{stage} design infeasible: {reason}")]
    StageInfeasible { stage: &'static str, reason: String },
    #[error("{stage} solver stopped at status {status:?} (kkt residual {residual:.3e})")]
    SolverIncomplete { stage: &'static str, status: Status, residual: f64 },
    #[error("trigger design precondition violated at nodes {nodes:?}: achieved gain mass does not dominate the negative drift")]
    GainMassTooSmall { nodes: Vec<usize> },
    #[error("p bounds must satisfy 0 < lo <= hi componentwise (node {node})")]
    BadPBounds { node: usize },
    #[error("gain bound {name}[{index}] = {value} must be positive")]
    BadGainBound { name: &'static str, index: usize, value: f64 },
    #[error("eps must be positive and small, got {0}")]
    BadEps(f64),
}

/// Box bounds for the control gains: `k in (0, k_bar]`, `l in (0, l_bar]`
/// with `l_bar <= beta_bar` per edge.
#[derive(Debug, Clone)]
pub struct GainBounds {
    pub k_bar: Vec<f64>,
    pub l_bar: Vec<f64>,
}

impl GainBounds {
    /// Uniform caps, with `l_bar` clipped to each edge's `beta_bar`.
    pub fn uniform(net: &Network, k_bar: f64, l_bar: f64) -> Self {
        Self {
            k_bar: vec![k_bar; net.node_count()],
            l_bar: net.edges().iter().map(|e| l_bar.min(e.beta_bar)).collect(),
        }
    }

    fn validate(&self, net: &Network) -> Result<(), SynthError> {
        if self.k_bar.len() != net.node_count() {
            return Err(ModelError::Dimension {
                expected: net.node_count(),
                got: self.k_bar.len(),
            }
            .into());
        }
        if self.l_bar.len() != net.edge_count() {
            return Err(ModelError::Dimension {
                expected: net.edge_count(),
                got: self.l_bar.len(),
            }
            .into());
        }
        for (i, &k) in self.k_bar.iter().enumerate() {
            if !(k > 0.0) || !k.is_finite() {
                return Err(SynthError::BadGainBound { name: "k_bar", index: i, value: k });
            }
        }
        for (e, &l) in self.l_bar.iter().enumerate() {
            if !(l > 0.0) || l > net.edges()[e].beta_bar {
                return Err(SynthError::BadGainBound { name: "l_bar", index: e, value: l });
            }
        }
        Ok(())
    }
}

/// Constants shared by the design programs.
#[derive(Debug, Clone)]
pub struct SynthesisConstants {
    /// `drift_i = sum_out p_j beta_ij - p_i delta_i` (uncontrolled p-weighted).
    pub drift: Vec<f64>,
    /// `cap_i = p_i k_bar_i + sum_out p_j l_bar_ij` (maximal gain mass).
    pub gain_cap: Vec<f64>,
    /// Nodes with nonnegative drift, sorted.
    pub hot: Vec<usize>,
    /// Per-objective budget `2 p*_m d_bar_m - sum_{i not hot} p_i drift_i / cap_i`.
    pub budget: Vec<f64>,
}

/// Assemble the design constants for `net`/`obj` under `bounds`.
pub fn constants(
    net: &Network,
    obj: &Objective,
    bounds: &GainBounds,
) -> Result<SynthesisConstants, SynthError> {
    bounds.validate(net)?;
    let p = obj.p();
    let drift = drift(net, p);
    let gain_cap = gain_mass(net, &bounds.k_bar, &bounds.l_bar, p);
    let hot: Vec<usize> =
        (0..net.node_count()).filter(|&i| drift[i] >= 0.0).collect();
    let cold_sum: f64 = (0..net.node_count())
        .filter(|&i| drift[i] < 0.0)
        .map(|i| p[i] * drift[i] / gain_cap[i])
        .sum();
    let budget = (0..obj.len())
        .map(|m| 2.0 * obj.p_star(m) * obj.d_bar()[m] - cold_sum)
        .collect();
    Ok(SynthesisConstants { drift, gain_cap, hot, budget })
}

/// Lyapunov-parameter LP: minimize the total drift over `p_lo <= p <= p_hi`.
/// The objective is separable and linear, so each coordinate sits at a bound:
/// the coefficient of `p_i` is `(sum_in beta_ji) - delta_i`; positive
/// coefficients take the lower bound, negative the upper, ties the lower.
pub fn design_lyapunov_p(
    net: &Network,
    p_lo: &[f64],
    p_hi: &[f64],
) -> Result<Vec<f64>, SynthError> {
    let n = net.node_count();
    if p_lo.len() != n || p_hi.len() != n {
        return Err(ModelError::Dimension { expected: n, got: p_lo.len().min(p_hi.len()) }.into());
    }
    for i in 0..n {
        if !(p_lo[i] > 0.0) || p_lo[i] > p_hi[i] || !p_hi[i].is_finite() {
            return Err(SynthError::BadPBounds { node: i });
        }
    }
    let mut coef: Vec<f64> = net.delta_bar().iter().map(|d| -d).collect();
    for edge in net.edges() {
        coef[edge.dst] += edge.beta_bar;
    }
    Ok((0..n)
        .map(|i| if coef[i] > 0.0 { p_lo[i] } else if coef[i] < 0.0 { p_hi[i] } else { p_lo[i] })
        .collect())
}

/// Per-stage solve summary.
#[derive(Debug, Clone)]
pub struct StageReport {
    pub objective: f64,
    pub status: Status,
    pub newton_iters: usize,
}

/// Stage-1 output: designed control gains plus the certificate weights the
/// program optimized.
#[derive(Debug, Clone)]
pub struct ControlDesign {
    pub k: Vec<f64>,
    pub l: Vec<f64>,
    /// Diagonal certificate weights `s_c` chosen by the program.
    pub cert_weights: Vec<f64>,
    pub report: StageReport,
}

/// Stage-2 output: event-triggering gains plus the relaxed-certificate
/// quantities the program optimized (`relaxed_r` is zero off the hot set).
#[derive(Debug, Clone)]
pub struct TriggerDesign {
    pub sigma: Vec<f64>,
    pub eta: Vec<f64>,
    pub relaxed_s: Vec<f64>,
    pub relaxed_r: Vec<f64>,
    pub report: StageReport,
}

fn mono(c: f64) -> Monomial {
    Monomial::new(c).expect("positive coefficient")
}

fn run_stage(
    stage: &'static str,
    program: &GeometricProgram,
    initial: Option<std::collections::BTreeMap<String, f64>>,
) -> Result<gp::GpSolution, SynthError> {
    let opts = SolveOptions { initial, ..SolveOptions::default() };
    match program.solve(&opts) {
        Ok(sol) => match sol.status {
            Status::Optimal => Ok(sol),
            Status::MaxIter => Err(SynthError::SolverIncomplete {
                stage,
                status: sol.status,
                residual: sol.kkt.residual(),
            }),
            Status::Infeasible => Err(SynthError::StageInfeasible {
                stage,
                reason: "solver flagged infeasible".into(),
            }),
        },
        Err(GpError::Infeasible(cert)) => Err(SynthError::StageInfeasible {
            stage,
            reason: format!("phase-I certificate: max residual {cert:.3e} >= 0"),
        }),
        Err(e) => Err(e.into()),
    }
}

/// Stage 1: control gains under the continuous-time controller.
///
/// Decision variables are the slacks `k_slack = k_bar - k`,
/// `l_slack = l_bar - l`, the certificate weights `s_c`, and the auxiliary
/// square `xi` bounding the product of certificate sums. The default cost
/// `sum k_bar/k_slack + sum l_bar/l_slack` favors small gains.
pub fn design_control_gains(
    net: &Network,
    obj: &Objective,
    bounds: &GainBounds,
    eps: f64,
    cost: Option<Posynomial>,
) -> Result<ControlDesign, SynthError> {
    if !(eps > 0.0) || !(eps < 1.0) {
        return Err(SynthError::BadEps(eps));
    }
    let consts = constants(net, obj, bounds)?;
    for (m, &b) in consts.budget.iter().enumerate() {
        if b <= 0.0 {
            return Err(SynthError::ObjectiveUnreachable { m, value: b });
        }
    }
    let n = net.node_count();
    let p = obj.p();
    let ks = |i: usize| format!("ks{i}");
    let ls = |e: usize| format!("ls{e}");
    let sc = |i: usize| format!("sc{i}");
    let any_drift = consts.drift.iter().any(|&d| d != 0.0);

    let cost = cost.unwrap_or_else(|| {
        let mut terms = Vec::new();
        for i in 0..n {
            terms.push(mono(bounds.k_bar[i]).pow(ks(i), -1.0).unwrap());
        }
        for e in 0..net.edge_count() {
            terms.push(mono(bounds.l_bar[e]).pow(ls(e), -1.0).unwrap());
        }
        Posynomial::new(terms).unwrap()
    });
    let mut program = GeometricProgram::new(cost);

    // gain-mass budget per node: (s_c + p k_slack + sum p l_slack) / cap <= 1
    for i in 0..n {
        let cap = consts.gain_cap[i];
        let mut terms = vec![
            mono(1.0 / cap).pow(sc(i), 1.0).unwrap(),
            mono(p[i] / cap).pow(ks(i), 1.0).unwrap(),
        ];
        for &e in net.out_edges(i) {
            terms.push(mono(p[net.edges()[e].dst] / cap).pow(ls(e), 1.0).unwrap());
        }
        program.add_constraint(Posynomial::new(terms).unwrap());
    }
    // strict box closure: (slack + eps)/bound <= 1
    for i in 0..n {
        program.add_constraint(
            Posynomial::new(vec![
                mono(1.0 / bounds.k_bar[i]).pow(ks(i), 1.0).unwrap(),
                mono(eps / bounds.k_bar[i]),
            ])
            .unwrap(),
        );
    }
    for e in 0..net.edge_count() {
        program.add_constraint(
            Posynomial::new(vec![
                mono(1.0 / bounds.l_bar[e]).pow(ls(e), 1.0).unwrap(),
                mono(eps / bounds.l_bar[e]),
            ])
            .unwrap(),
        );
    }
    if any_drift {
        // level budget per objective: (xi^(1/2) + sum_hot p drift / s_c) / budget <= 1
        for (m, &b) in consts.budget.iter().enumerate() {
            let _ = m;
            let mut terms = vec![mono(1.0 / b).pow("xic", 0.5).unwrap()];
            for &i in &consts.hot {
                if consts.drift[i] != 0.0 {
                    terms.push(
                        mono(p[i] * consts.drift[i] / b).pow(sc(i), -1.0).unwrap(),
                    );
                }
            }
            program.add_constraint(Posynomial::new(terms).unwrap());
        }
        // product bound: (sum p^2/s_c)(sum drift^2/s_c) <= xi, expanded
        let mut terms = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if consts.drift[j] != 0.0 {
                    let c = p[i] * p[i] * consts.drift[j] * consts.drift[j];
                    terms.push(
                        mono(c)
                            .pow(sc(i), -1.0)
                            .unwrap()
                            .pow(sc(j), -1.0)
                            .unwrap()
                            .pow("xic", -1.0)
                            .unwrap(),
                    );
                }
            }
        }
        program.add_constraint(Posynomial::new(terms).unwrap());
    }
    // cold nodes additionally keep the achieved mass above the drift deficit,
    // so the stage-2 precondition holds by construction
    for i in 0..n {
        if consts.drift[i] >= 0.0 {
            continue;
        }
        let beta_mass: f64 = net
            .out_edges(i)
            .iter()
            .map(|&e| p[net.edges()[e].dst] * net.edges()[e].beta_bar)
            .sum();
        let rhs = consts.gain_cap[i] + beta_mass;
        let mut terms = vec![
            mono(p[i] / rhs).pow(ks(i), 1.0).unwrap(),
            mono((p[i] * net.delta_bar()[i] + eps) / rhs),
        ];
        for &e in net.out_edges(i) {
            terms.push(mono(p[net.edges()[e].dst] / rhs).pow(ls(e), 1.0).unwrap());
        }
        program.add_constraint(Posynomial::new(terms).unwrap());
    }

    // near-feasible warm start: half slack, certificate weights at half the
    // remaining mass
    let mut initial = std::collections::BTreeMap::new();
    for i in 0..n {
        initial.insert(ks(i), 0.45 * bounds.k_bar[i]);
        initial.insert(sc(i), 0.25 * consts.gain_cap[i]);
    }
    for e in 0..net.edge_count() {
        initial.insert(ls(e), 0.45 * bounds.l_bar[e]);
    }
    if any_drift {
        let s0: Vec<f64> = (0..n).map(|i| 0.25 * consts.gain_cap[i]).collect();
        let prod: f64 = (0..n).map(|i| p[i] * p[i] / s0[i]).sum::<f64>()
            * (0..n).map(|i| consts.drift[i] * consts.drift[i] / s0[i]).sum::<f64>();
        initial.insert("xic".into(), 1.05 * prod.max(1e-30));
    }

    let sol = run_stage("control-gain", &program, Some(initial))?;
    let k: Vec<f64> = (0..n)
        .map(|i| bounds.k_bar[i] - sol.value(&ks(i)).unwrap())
        .collect();
    let l: Vec<f64> = (0..net.edge_count())
        .map(|e| bounds.l_bar[e] - sol.value(&ls(e)).unwrap())
        .collect();
    let cert_weights: Vec<f64> = (0..n).map(|i| sol.value(&sc(i)).unwrap()).collect();
    Ok(ControlDesign {
        k,
        l,
        cert_weights,
        report: StageReport {
            objective: sol.objective,
            status: sol.status,
            newton_iters: sol.newton_iters,
        },
    })
}

/// Stage 2: event-triggering gains for fixed control gains.
///
/// Variables are the complements `sigma_comp = 1 - sigma`, the relaxed
/// certificate weights `s_e`, and (on the hot set) `eta` and the drift bounds
/// `r_e`. Off the hot set `eta` is the closed-form fill-in `-drift / c3`,
/// which the precondition keeps inside (0, 1). The default cost
/// `sum sigma_comp + sum_hot 1/eta` favors large triggering gains.
pub fn design_event_gains(
    net: &Network,
    obj: &Objective,
    k: &[f64],
    l: &[f64],
    eps: f64,
    cost: Option<Posynomial>,
) -> Result<TriggerDesign, SynthError> {
    if !(eps > 0.0) || !(eps < 1.0) {
        return Err(SynthError::BadEps(eps));
    }
    let n = net.node_count();
    let p = obj.p();
    let drift_v = drift(net, p);
    let c3 = gain_mass(net, k, l, p);
    let bad: Vec<usize> = (0..n)
        .filter(|&i| drift_v[i] < 0.0 && c3[i] + drift_v[i] <= 0.0)
        .collect();
    if !bad.is_empty() {
        return Err(SynthError::GainMassTooSmall { nodes: bad });
    }
    let hot: Vec<usize> = (0..n).filter(|&i| drift_v[i] >= 0.0).collect();

    let fill_in = |i: usize| -drift_v[i] / c3[i];

    if hot.is_empty() {
        // Degenerate program: with every drift negative the relaxed set is the
        // origin and any trigger gains certify; the cost's infimum (sigma -> 1)
        // is open, so close it with eps like the strict constraints.
        let sigma = vec![1.0 - eps; n];
        let eta: Vec<f64> = (0..n).map(fill_in).collect();
        let relaxed_s: Vec<f64> = (0..n).map(|i| eps * c3[i] * (1.0 - 1e-9)).collect();
        return Ok(TriggerDesign {
            sigma,
            eta,
            relaxed_s,
            relaxed_r: vec![0.0; n],
            report: StageReport {
                objective: n as f64 * eps,
                status: Status::Optimal,
                newton_iters: 0,
            },
        });
    }

    for m in 0..obj.len() {
        let b = 2.0 * obj.p_star(m) * obj.d_bar()[m];
        if b <= 0.0 {
            return Err(SynthError::StageInfeasible {
                stage: "trigger-gain",
                reason: format!("objective {m} has zero threshold budget"),
            });
        }
    }

    let sg = |i: usize| format!("sg{i}");
    let se = |i: usize| format!("se{i}");
    let eta_v = |i: usize| format!("eta{i}");
    let re = |i: usize| format!("re{i}");

    let cost = cost.unwrap_or_else(|| {
        let mut terms: Vec<Monomial> =
            (0..n).map(|i| mono(1.0).pow(sg(i), 1.0).unwrap()).collect();
        for &i in &hot {
            terms.push(mono(1.0).pow(eta_v(i), -1.0).unwrap());
        }
        Posynomial::new(terms).unwrap()
    });
    let mut program = GeometricProgram::new(cost);

    // s_e <= c3 * sigma_comp
    for i in 0..n {
        program.add_constraint(
            mono(1.0 / c3[i])
                .pow(se(i), 1.0)
                .unwrap()
                .pow(sg(i), -1.0)
                .unwrap()
                .into(),
        );
    }
    // hot drift bounds: (drift + c3 eta)/r_e <= 1
    for &i in &hot {
        let mut terms = vec![mono(c3[i])
            .pow(eta_v(i), 1.0)
            .unwrap()
            .pow(re(i), -1.0)
            .unwrap()];
        if drift_v[i] != 0.0 {
            terms.push(mono(drift_v[i]).pow(re(i), -1.0).unwrap());
        }
        program.add_constraint(Posynomial::new(terms).unwrap());
    }
    // open-interval closures
    for i in 0..n {
        program.add_constraint(
            Posynomial::new(vec![mono(1.0).pow(sg(i), 1.0).unwrap(), mono(eps)]).unwrap(),
        );
    }
    for &i in &hot {
        program.add_constraint(
            Posynomial::new(vec![mono(1.0).pow(eta_v(i), 1.0).unwrap(), mono(eps)]).unwrap(),
        );
    }
    // level budgets
    for m in 0..obj.len() {
        let b = 2.0 * obj.p_star(m) * obj.d_bar()[m];
        let mut terms = vec![mono(1.0 / b).pow("xie", 0.5).unwrap()];
        for &i in &hot {
            terms.push(
                mono(p[i] / b)
                    .pow(re(i), 1.0)
                    .unwrap()
                    .pow(se(i), -1.0)
                    .unwrap(),
            );
        }
        program.add_constraint(Posynomial::new(terms).unwrap());
    }
    // product bound (sum_all p^2/s_e)(sum_hot r_e^2/s_e) <= xi
    let mut terms = Vec::new();
    for i in 0..n {
        for &j in &hot {
            terms.push(
                mono(p[i] * p[i])
                    .pow(se(i), -1.0)
                    .unwrap()
                    .pow(re(j), 2.0)
                    .unwrap()
                    .pow(se(j), -1.0)
                    .unwrap()
                    .pow("xie", -1.0)
                    .unwrap(),
            );
        }
    }
    program.add_constraint(Posynomial::new(terms).unwrap());

    // warm start: moderate sigma, small eta, tight-ish drift bounds
    let mut initial = std::collections::BTreeMap::new();
    for i in 0..n {
        initial.insert(sg(i), 0.9);
        initial.insert(se(i), 0.45 * c3[i]);
    }
    let mut r0 = vec![0.0; n];
    for &i in &hot {
        initial.insert(eta_v(i), 0.01);
        r0[i] = 1.5 * (drift_v[i] + c3[i] * 0.01);
        initial.insert(re(i), r0[i]);
    }
    let prod: f64 = (0..n).map(|i| p[i] * p[i] / (0.45 * c3[i])).sum::<f64>()
        * hot.iter().map(|&j| r0[j] * r0[j] / (0.45 * c3[j])).sum::<f64>();
    initial.insert("xie".into(), 1.05 * prod.max(1e-30));

    let sol = run_stage("trigger-gain", &program, Some(initial))?;
    let sigma: Vec<f64> = (0..n).map(|i| 1.0 - sol.value(&sg(i)).unwrap()).collect();
    let mut eta = vec![0.0; n];
    let mut relaxed_r = vec![0.0; n];
    for i in 0..n {
        if drift_v[i] >= 0.0 {
            eta[i] = sol.value(&eta_v(i)).unwrap();
            relaxed_r[i] = sol.value(&re(i)).unwrap();
        } else {
            eta[i] = fill_in(i);
            debug_assert!(eta[i] > 0.0 && eta[i] < 1.0);
        }
    }
    let relaxed_s: Vec<f64> = (0..n).map(|i| sol.value(&se(i)).unwrap()).collect();
    Ok(TriggerDesign {
        sigma,
        eta,
        relaxed_s,
        relaxed_r,
        report: StageReport {
            objective: sol.objective,
            status: sol.status,
            newton_iters: sol.newton_iters,
        },
    })
}

/// Inputs to [`full_pipeline`].
#[derive(Debug, Clone)]
pub struct PipelineSpec {
    /// Objective selector supports.
    pub supports: Vec<Vec<usize>>,
    pub d_bar: Vec<f64>,
    /// Explicit Lyapunov parameter; designed by the LP when absent.
    pub p: Option<Vec<f64>>,
    /// LP bounds used when `p` is absent.
    pub p_bounds: (f64, f64),
    pub eps: f64,
    /// Verdict slack forwarded to the verifier.
    pub slack: f64,
}

impl PipelineSpec {
    pub fn new(supports: Vec<Vec<usize>>, d_bar: Vec<f64>) -> Self {
        Self {
            supports,
            d_bar,
            p: None,
            p_bounds: DEFAULT_P_BOUNDS,
            eps: DEFAULT_EPS,
            slack: 0.0,
        }
    }
}

/// Full design output: gains, the objective with its (possibly designed) `p`,
/// stage reports, and both certificates.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub gains: GainSet,
    pub objective: Objective,
    pub stage1: StageReport,
    pub stage2: StageReport,
    /// Relaxed-check quantities from stage 2.
    pub relaxed_s: Vec<f64>,
    pub relaxed_r: Vec<f64>,
    /// Exact-check certificate for the designed gains.
    pub certificate: Certificate,
    /// Relaxed-check certificate at the stage-2 weights (passes by
    /// construction on success).
    pub relaxed_certificate: Certificate,
}

/// Lyapunov parameter (if needed), then control gains, then trigger gains,
/// then the exact certificate. Fails at the first infeasible stage.
pub fn full_pipeline(
    net: &Network,
    bounds: &GainBounds,
    spec: &PipelineSpec,
) -> Result<PipelineOutput, SynthError> {
    let n = net.node_count();
    let p = match &spec.p {
        Some(p) => p.clone(),
        None => design_lyapunov_p(
            net,
            &vec![spec.p_bounds.0; n],
            &vec![spec.p_bounds.1; n],
        )?,
    };
    let obj = Objective::from_supports(spec.supports.clone(), spec.d_bar.clone(), p, n)?;
    let stage1 = design_control_gains(net, &obj, bounds, spec.eps, None)?;
    let stage2 = design_event_gains(net, &obj, &stage1.k, &stage1.l, spec.eps, None)?;
    let gains = GainSet {
        k: stage1.k.clone(),
        l: stage1.l.clone(),
        sigma: stage2.sigma.clone(),
        eta: stage2.eta.clone(),
        k_bar: bounds.k_bar.clone(),
        l_bar: bounds.l_bar.clone(),
    };
    gains.validate(net)?;
    let certificate = verify::verify_exact(net, &gains, &obj, spec.slack)?;
    let relaxed_certificate = verify::verify_relaxed(
        net,
        &gains,
        &obj,
        &stage2.relaxed_s,
        &stage2.relaxed_r,
        spec.slack,
    )?;
    Ok(PipelineOutput {
        gains,
        objective: obj,
        stage1: stage1.report,
        stage2: stage2.report,
        relaxed_s: stage2.relaxed_s,
        relaxed_r: stage2.relaxed_r,
        certificate,
        relaxed_certificate,
    })
}
