//! Closed-loop simulation under three controller modes, with per-node
//! event-trigger detection.
//!
//! Integration is classical fixed-step RK4. Within a step, trigger crossings
//! are located on a cubic Hermite interpolant built from the step's endpoint
//! states and derivatives; the step is then re-integrated from the earliest
//! crossing with the refreshed held sample, so a trigger influences the
//! dynamics from its crossing time onward.

use thiserror::Error;

use crate::model::{sis_rhs_unchecked, GainSet, ModelError, Network, STATE_TOL};

/// Default integrator step, in abstract time units.
pub const DEFAULT_STEP: f64 = 0.01;

/// Bisection time tolerance, relative to the nominal step.
pub const CROSSING_TOL_FACTOR: f64 = 1e-9;

/// Hard cap on triggers processed within a single nominal step.
const CASCADE_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("horizon and step must be positive and finite")]
    BadTiming,
    #[error("gains are required for mode {0:?}")]
    MissingGains(Mode),
    #[error("initial trigger time for node {node} must be nonnegative, got {value}")]
    BadInitialTrigger { node: usize, value: f64 },
    #[error("state escaped [0,1] at t = {t}: node {node} = {value}")]
    StateEscape { t: f64, node: usize, value: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("bracket [{t_a}, {t_b}] does not straddle a trigger crossing")]
    BadBracket { t_a: f64, t_b: f64 },
    #[error("more than {CASCADE_CAP} triggers within one step at t = {t}")]
    TriggerCascade { t: f64 },
}

/// Controller mode for a closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Inputs held between per-node trigger times.
    EventTriggered,
    /// Inputs recomputed from the instantaneous state.
    Continuous,
    /// Zero inputs throughout.
    Uncontrolled,
}

/// The event-triggering condition: returns true (no trigger) iff
/// `|e_i| < sigma_i * x_i + eta_i`.
pub fn event_condition(x_i: f64, e_i: f64, sigma_i: f64, eta_i: f64) -> bool {
    e_i.abs() < sigma_i * x_i + eta_i
}

/// Inputs from held samples: `u_i = k_i * held_i`, `v_ij = l_ij * held_i`.
/// Since `held in [0,1]` and `l <= l_bar <= beta_bar`, `v` never exceeds its
/// box. The continuous controller is the same map applied to the current
/// state.
pub fn control_inputs(net: &Network, gains: &GainSet, held: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let u = gains.k.iter().zip(held.iter()).map(|(k, h)| k * h).collect();
    let v = net
        .edges()
        .iter()
        .zip(gains.l.iter())
        .map(|(e, l)| l * held[e.src])
        .collect();
    (u, v)
}

/// One trigger: the time and the sample held from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerEvent {
    pub time: f64,
    pub held_value: f64,
}

/// Ordered trigger history per node.
#[derive(Debug, Clone, Default)]
pub struct TriggerLog {
    per_node: Vec<Vec<TriggerEvent>>,
}

impl TriggerLog {
    fn new(n: usize) -> Self {
        Self { per_node: vec![Vec::new(); n] }
    }

    fn push(&mut self, node: usize, time: f64, held_value: f64) {
        debug_assert!(self.per_node[node].last().map_or(true, |e| e.time < time));
        self.per_node[node].push(TriggerEvent { time, held_value });
    }

    pub fn node(&self, i: usize) -> &[TriggerEvent] {
        &self.per_node[i]
    }

    pub fn node_count(&self) -> usize {
        self.per_node.len()
    }

    pub fn total(&self) -> usize {
        self.per_node.iter().map(Vec::len).sum()
    }
}

/// Min/mean/max of a node's inter-event times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterEventStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    pub intervals: usize,
}

/// Per-node inter-event statistics; nodes with fewer than two triggers report
/// `None` (absent intervals, not zero).
pub fn inter_event_stats(log: &TriggerLog) -> Vec<Option<InterEventStats>> {
    (0..log.node_count())
        .map(|i| {
            let times = log.node(i);
            if times.len() < 2 {
                return None;
            }
            let mut min = f64::INFINITY;
            let mut max = 0.0f64;
            let mut sum = 0.0;
            for w in times.windows(2) {
                let dt = w[1].time - w[0].time;
                min = min.min(dt);
                max = max.max(dt);
                sum += dt;
            }
            Some(InterEventStats {
                min,
                mean: sum / (times.len() - 1) as f64,
                max,
                intervals: times.len() - 1,
            })
        })
        .collect()
}

/// Bisection for the earliest point in `(t_a, t_b]` where `margin` becomes
/// nonpositive. `margin(t) = sigma x(t) + eta - |e(t)|` must be positive at
/// `t_a` and nonpositive at `t_b`.
pub fn locate_crossing(
    margin: impl Fn(f64) -> f64,
    t_a: f64,
    t_b: f64,
    tol: f64,
) -> Result<f64, SimError> {
    if !(margin(t_a) > 0.0) || margin(t_b) > 0.0 {
        return Err(SimError::BadBracket { t_a, t_b });
    }
    let (mut lo, mut hi) = (t_a, t_b);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if margin(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Simulation settings.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub horizon: f64,
    pub step: f64,
    /// Keep every `record_stride`-th grid sample (the final one always).
    pub record_stride: usize,
    /// Per-node initial trigger times; nodes apply zero input before theirs.
    pub initial_trigger_times: Option<Vec<f64>>,
}

impl SimConfig {
    pub fn new(horizon: f64, step: f64) -> Self {
        Self { horizon, step, record_stride: 1, initial_trigger_times: None }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }
}

/// Recorded closed-loop run: uniform sample grid, states, held samples, and
/// the trigger log. Inputs are reconstructed on demand from the held samples
/// and gains, never stored densely per edge.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub mode: Mode,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    held: Vec<Vec<f64>>,
    active_from: Vec<f64>,
    triggers: TriggerLog,
    k: Vec<f64>,
    l: Vec<f64>,
    edge_src: Vec<usize>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn state(&self, sample: usize) -> &[f64] {
        &self.states[sample]
    }

    pub fn triggers(&self) -> &TriggerLog {
        &self.triggers
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Applied inputs `(u, v)` at a recorded sample.
    pub fn inputs_at(&self, sample: usize) -> (Vec<f64>, Vec<f64>) {
        let n = self.states[sample].len();
        match self.mode {
            Mode::Uncontrolled => (vec![0.0; n], vec![0.0; self.edge_src.len()]),
            Mode::Continuous => {
                let x = &self.states[sample];
                let u = self.k.iter().zip(x.iter()).map(|(k, xi)| k * xi).collect();
                let v = self
                    .edge_src
                    .iter()
                    .zip(self.l.iter())
                    .map(|(&s, l)| l * x[s])
                    .collect();
                (u, v)
            }
            Mode::EventTriggered => {
                let t = self.times[sample];
                let h = &self.held[sample];
                let gate =
                    |i: usize| if t >= self.active_from[i] { h[i] } else { 0.0 };
                let u = (0..n).map(|i| self.k[i] * gate(i)).collect();
                let v = self
                    .edge_src
                    .iter()
                    .zip(self.l.iter())
                    .map(|(&s, l)| l * gate(s))
                    .collect();
                (u, v)
            }
        }
    }

    /// Held sample vector at a recorded sample (event mode).
    pub fn held_at(&self, sample: usize) -> &[f64] {
        &self.held[sample]
    }

    /// The last `fraction` of recorded samples (at least one).
    pub fn tail(&self, fraction: f64) -> &[Vec<f64>] {
        let len = self.states.len();
        let keep = ((len as f64) * fraction).ceil() as usize;
        &self.states[len - keep.clamp(1, len)..]
    }
}

/// Cubic Hermite interpolant over one integration interval.
struct Hermite<'a> {
    t0: f64,
    h: f64,
    x0: &'a [f64],
    x1: &'a [f64],
    f0: &'a [f64],
    f1: &'a [f64],
}

impl Hermite<'_> {
    fn component(&self, i: usize, t: f64) -> f64 {
        let th = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let t2 = th * th;
        let t3 = t2 * th;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.x0[i]
            + (t3 - 2.0 * t2 + th) * self.h * self.f0[i]
            + (-2.0 * t3 + 3.0 * t2) * self.x1[i]
            + (t3 - t2) * self.h * self.f1[i]
    }

    fn fill(&self, t: f64, out: &mut [f64]) {
        for i in 0..out.len() {
            out[i] = self.component(i, t);
        }
    }
}

/// RK4 step of length `h` under frozen inputs; returns endpoint derivatives
/// `k4` for the interpolant (the endpoint derivative to RK4's local order
/// without another RHS evaluation).
struct Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            stage: vec![0.0; n],
        }
    }
}

fn rk4_frozen(
    net: &Network,
    x: &[f64],
    u: &[f64],
    v: &[f64],
    h: f64,
    ws: &mut Workspace,
    out: &mut [f64],
) {
    sis_rhs_unchecked(net, x, u, v, &mut ws.k1);
    for i in 0..x.len() {
        ws.stage[i] = x[i] + 0.5 * h * ws.k1[i];
    }
    sis_rhs_unchecked(net, &ws.stage, u, v, &mut ws.k2);
    for i in 0..x.len() {
        ws.stage[i] = x[i] + 0.5 * h * ws.k2[i];
    }
    sis_rhs_unchecked(net, &ws.stage, u, v, &mut ws.k3);
    for i in 0..x.len() {
        ws.stage[i] = x[i] + h * ws.k3[i];
    }
    sis_rhs_unchecked(net, &ws.stage, u, v, &mut ws.k4);
    for i in 0..x.len() {
        out[i] = x[i]
            + h / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
    }
}

/// Closed-loop RHS for continuous mode: `u = k.x`, `v = l.x_src` at the stage
/// state itself.
fn rhs_closed(net: &Network, gains: &GainSet, x: &[f64], dx: &mut [f64]) {
    dx.fill(0.0);
    for (e, edge) in net.edges().iter().enumerate() {
        let v = gains.l[e] * x[edge.src];
        dx[edge.dst] += (edge.beta_bar - v) * x[edge.src];
    }
    for i in 0..net.node_count() {
        let u = gains.k[i] * x[i];
        dx[i] = -(net.delta_bar()[i] + u) * x[i] + (1.0 - x[i]) * dx[i];
    }
}

fn rk4_closed(net: &Network, gains: &GainSet, x: &[f64], h: f64, ws: &mut Workspace, out: &mut [f64]) {
    rhs_closed(net, gains, x, &mut ws.k1);
    for i in 0..x.len() {
        ws.stage[i] = x[i] + 0.5 * h * ws.k1[i];
    }
    rhs_closed(net, gains, &ws.stage, &mut ws.k2);
    for i in 0..x.len() {
        ws.stage[i] = x[i] + 0.5 * h * ws.k2[i];
    }
    rhs_closed(net, gains, &ws.stage, &mut ws.k3);
    for i in 0..x.len() {
        ws.stage[i] = x[i] + h * ws.k3[i];
    }
    rhs_closed(net, gains, &ws.stage, &mut ws.k4);
    for i in 0..x.len() {
        out[i] = x[i]
            + h / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
    }
}

/// Validates a candidate accepted state: distinguishes float noise (clamped)
/// from integrator escape (error).
fn settle_state(x: &mut [f64], t: f64) -> Result<(), SimError> {
    for (node, v) in x.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(SimError::NonFinite { t });
        }
        if *v < -STATE_TOL || *v > 1.0 + STATE_TOL {
            return Err(SimError::StateEscape { t, node, value: *v });
        }
        *v = v.clamp(0.0, 1.0);
    }
    Ok(())
}

/// Integrate the closed loop from `x0` under `mode`.
///
/// In event-triggered mode the held sample of node `i` refreshes exactly at
/// the logged trigger times: the configured initial time first, then each
/// located crossing of the event condition.
pub fn simulate(
    net: &Network,
    gains: Option<&GainSet>,
    mode: Mode,
    x0: &[f64],
    config: &SimConfig,
) -> Result<Trajectory, SimError> {
    net.check_state(x0)?;
    if !(config.horizon > 0.0) || !(config.step > 0.0) || !config.horizon.is_finite() {
        return Err(SimError::BadTiming);
    }
    let n = net.node_count();
    let gains = match mode {
        Mode::Uncontrolled => gains,
        _ => {
            let g = gains.ok_or(SimError::MissingGains(mode))?;
            g.validate(net)?;
            Some(g)
        }
    };
    let t0 = match &config.initial_trigger_times {
        None => vec![0.0; n],
        Some(v) => {
            if v.len() != n {
                return Err(ModelError::Dimension { expected: n, got: v.len() }.into());
            }
            for (node, &t) in v.iter().enumerate() {
                if !(t >= 0.0) || !t.is_finite() {
                    return Err(SimError::BadInitialTrigger { node, value: t });
                }
            }
            v.clone()
        }
    };

    let h = config.step;
    let steps = (config.horizon / h).ceil() as usize;
    let cross_tol = CROSSING_TOL_FACTOR * h;

    let mut x: Vec<f64> = x0.to_vec();
    settle_state(&mut x, 0.0)?;
    let mut held = x.clone();
    let mut active = vec![false; n];
    let mut triggers = TriggerLog::new(n);
    if mode == Mode::EventTriggered {
        for i in 0..n {
            if t0[i] == 0.0 {
                active[i] = true;
                triggers.push(i, 0.0, held[i]);
            }
        }
    }

    let (k, l, edge_src): (Vec<f64>, Vec<f64>, Vec<usize>) = match gains {
        Some(g) => (
            g.k.clone(),
            g.l.clone(),
            net.edges().iter().map(|e| e.src).collect(),
        ),
        None => (vec![0.0; n], vec![0.0; net.edge_count()], net.edges().iter().map(|e| e.src).collect()),
    };

    let stride = config.record_stride.max(1);
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    let mut held_samples = vec![held.clone()];

    let mut ws = Workspace::new(n);
    let mut x_next = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; net.edge_count()];
    let mut x_tau = vec![0.0; n];

    for step_idx in 0..steps {
        let t_start = step_idx as f64 * h;
        let t_end = (t_start + h).min(config.horizon);

        match mode {
            Mode::Uncontrolled => {
                u.fill(0.0);
                v.fill(0.0);
                rk4_frozen(net, &x, &u, &v, t_end - t_start, &mut ws, &mut x_next);
                x.copy_from_slice(&x_next);
                settle_state(&mut x, t_end)?;
            }
            Mode::Continuous => {
                rk4_closed(net, gains.unwrap(), &x, t_end - t_start, &mut ws, &mut x_next);
                x.copy_from_slice(&x_next);
                settle_state(&mut x, t_end)?;
            }
            Mode::EventTriggered => {
                let g = gains.unwrap();
                let mut t_cur = t_start;
                let mut cascade = 0usize;
                loop {
                    // frozen inputs for the sub-interval [t_cur, t_end]
                    for i in 0..n {
                        u[i] = if active[i] { g.k[i] * held[i] } else { 0.0 };
                    }
                    for (e, edge) in net.edges().iter().enumerate() {
                        v[e] = if active[edge.src] { g.l[e] * held[edge.src] } else { 0.0 };
                    }
                    let span = t_end - t_cur;
                    rk4_frozen(net, &x, &u, &v, span, &mut ws, &mut x_next);
                    let interp = Hermite {
                        t0: t_cur,
                        h: span,
                        x0: &x,
                        x1: &x_next,
                        f0: &ws.k1,
                        f1: &ws.k4,
                    };

                    // earliest candidate event in (t_cur, t_end]
                    let mut earliest: Option<(f64, usize)> = None;
                    let consider = |t: f64, node: usize, earliest: &mut Option<(f64, usize)>| {
                        if earliest.map_or(true, |(tb, _)| t < tb) {
                            *earliest = Some((t, node));
                        }
                    };
                    for i in 0..n {
                        if !active[i] && t0[i] > t_cur && t0[i] <= t_end {
                            consider(t0[i], i, &mut earliest);
                        }
                    }
                    for i in 0..n {
                        if !active[i] {
                            continue;
                        }
                        let margin = |t: f64| {
                            let xi = interp.component(i, t);
                            g.sigma[i] * xi + g.eta[i] - (xi - held[i]).abs()
                        };
                        let mut prev = t_cur;
                        for frac in [0.25, 0.5, 0.75, 1.0] {
                            let t_probe = t_cur + frac * span;
                            if margin(t_probe) <= 0.0 {
                                let t_hit = locate_crossing(margin, prev, t_probe, cross_tol)?;
                                consider(t_hit, i, &mut earliest);
                                break;
                            }
                            prev = t_probe;
                        }
                    }

                    let Some((tau, first_node)) = earliest else {
                        x.copy_from_slice(&x_next);
                        settle_state(&mut x, t_end)?;
                        break;
                    };

                    // advance to the crossing on the interpolant
                    interp.fill(tau, &mut x_tau);
                    settle_state(&mut x_tau, tau)?;
                    x.copy_from_slice(&x_tau);
                    t_cur = tau;

                    if !active[first_node] {
                        active[first_node] = true;
                    }
                    held[first_node] = x[first_node];
                    triggers.push(first_node, tau, x[first_node]);
                    cascade += 1;

                    // simultaneous crossings: any other active node already at
                    // or past its threshold fires at the same instant
                    for i in 0..n {
                        if i == first_node || !active[i] {
                            continue;
                        }
                        if !event_condition(x[i], x[i] - held[i], g.sigma[i], g.eta[i]) {
                            held[i] = x[i];
                            triggers.push(i, tau, x[i]);
                            cascade += 1;
                        }
                    }
                    if cascade > CASCADE_CAP {
                        return Err(SimError::TriggerCascade { t: tau });
                    }
                    if t_end - t_cur <= f64::EPSILON * t_end.max(1.0) {
                        settle_state(&mut x, t_end)?;
                        break;
                    }
                }
            }
        }

        let grid_idx = step_idx + 1;
        if grid_idx % stride == 0 || grid_idx == steps {
            times.push(t_end);
            states.push(x.clone());
            held_samples.push(held.clone());
        }
    }

    Ok(Trajectory {
        mode,
        times,
        states,
        held: held_samples,
        active_from: t0,
        triggers,
        k,
        l,
        edge_src,
    })
}
