//! Network, gains, objective, and the controlled SIS vector field.

use thiserror::Error;

/// Componentwise tolerance for "state within [0,1]" checks.
pub const STATE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("node count must be at least 2, got {0}")]
    TooFewNodes(usize),
    #[error("recovery rate of node {node} must be positive, got {value}")]
    BadRecoveryRate { node: usize, value: f64 },
    #[error("edge {src}->{dst}: infection rate must be positive, got {value}")]
    BadInfectionRate { src: usize, dst: usize, value: f64 },
    #[error("edge {src}->{dst}: self-loops are not allowed")]
    SelfLoop { src: usize, dst: usize },
    #[error("edge {src}->{dst}: node id out of range (n = {n})")]
    EdgeOutOfRange { src: usize, dst: usize, n: usize },
    #[error("duplicate edge {src}->{dst}")]
    DuplicateEdge { src: usize, dst: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("state component {node} = {value} outside [0,1] (tolerance {STATE_TOL:e})")]
    StateOutOfRange { node: usize, value: f64 },
    #[error("control input u[{node}] = {value} must be nonnegative")]
    BadNodeInput { node: usize, value: f64 },
    #[error("edge input v[{edge}] = {value} outside [0, beta_bar = {bound}]")]
    BadEdgeInput { edge: usize, value: f64, bound: f64 },
    #[error("gain k[{node}] = {value} outside (0, {bound}]")]
    BadControlGain { node: usize, value: f64, bound: f64 },
    #[error("edge gain l[{edge}] = {value} outside (0, {bound}]")]
    BadEdgeGain { edge: usize, value: f64, bound: f64 },
    #[error("gain bound l_bar[{edge}] = {value} exceeds beta_bar = {bound}")]
    BadEdgeGainBound { edge: usize, value: f64, bound: f64 },
    #[error("trigger gain {name}[{node}] = {value} outside (0,1)")]
    BadTriggerGain { name: &'static str, node: usize, value: f64 },
    #[error("objective {index}: selector must be a 0/1 vector with nonempty support")]
    BadSelector { index: usize },
    #[error("objective {index}: threshold must be nonnegative, got {value}")]
    BadThreshold { index: usize, value: f64 },
    #[error("lyapunov parameter p[{node}] = {value} must be positive")]
    BadLyapunovParameter { node: usize, value: f64 },
    #[error("objective count mismatch: {selectors} selectors vs {thresholds} thresholds")]
    ObjectiveCount { selectors: usize, thresholds: usize },
    #[error("empty state sequence")]
    EmptyTail,
}

/// Directed edge with its baseline infection rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub beta_bar: f64,
}

/// Directed contact network with per-node baseline recovery rates and
/// per-edge baseline infection rates (edge-sparse).
#[derive(Debug, Clone)]
pub struct Network {
    n: usize,
    delta_bar: Vec<f64>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

impl Network {
    pub fn new(delta_bar: Vec<f64>, edges: Vec<Edge>) -> Result<Self, ModelError> {
        let n = delta_bar.len();
        if n < 2 {
            return Err(ModelError::TooFewNodes(n));
        }
        for (node, &d) in delta_bar.iter().enumerate() {
            if !(d > 0.0) || !d.is_finite() {
                return Err(ModelError::BadRecoveryRate { node, value: d });
            }
        }
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        let mut seen = std::collections::BTreeSet::new();
        for (idx, e) in edges.iter().enumerate() {
            if e.src >= n || e.dst >= n {
                return Err(ModelError::EdgeOutOfRange { src: e.src, dst: e.dst, n });
            }
            if e.src == e.dst {
                return Err(ModelError::SelfLoop { src: e.src, dst: e.dst });
            }
            if !(e.beta_bar > 0.0) || !e.beta_bar.is_finite() {
                return Err(ModelError::BadInfectionRate {
                    src: e.src,
                    dst: e.dst,
                    value: e.beta_bar,
                });
            }
            if !seen.insert((e.src, e.dst)) {
                return Err(ModelError::DuplicateEdge { src: e.src, dst: e.dst });
            }
            out_edges[e.src].push(idx);
            in_edges[e.dst].push(idx);
        }
        Ok(Self { n, delta_bar, edges, out_edges, in_edges })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn delta_bar(&self) -> &[f64] {
        &self.delta_bar
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Indices into `edges()` of the out-edges of `node`.
    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out_edges[node]
    }

    /// Indices into `edges()` of the in-edges of `node`.
    pub fn in_edges(&self, node: usize) -> &[usize] {
        &self.in_edges[node]
    }

    /// Validates `x` as a state vector (dimension and range).
    pub fn check_state(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.n {
            return Err(ModelError::Dimension { expected: self.n, got: x.len() });
        }
        for (node, &v) in x.iter().enumerate() {
            if !v.is_finite() || v < -STATE_TOL || v > 1.0 + STATE_TOL {
                return Err(ModelError::StateOutOfRange { node, value: v });
            }
        }
        Ok(())
    }
}

/// Control gains (k per node, l per edge) and event-triggering gains
/// (sigma, eta per node), together with their box upper bounds.
#[derive(Debug, Clone)]
pub struct GainSet {
    pub k: Vec<f64>,
    /// Parallel to `Network::edges()`.
    pub l: Vec<f64>,
    pub sigma: Vec<f64>,
    pub eta: Vec<f64>,
    pub k_bar: Vec<f64>,
    pub l_bar: Vec<f64>,
}

impl GainSet {
    /// Validates all interval and box constraints against `net`:
    /// `k in (0, k_bar]`, `l in (0, l_bar]`, `l_bar <= beta_bar`,
    /// `sigma, eta in (0, 1)`.
    pub fn validate(&self, net: &Network) -> Result<(), ModelError> {
        let n = net.node_count();
        for len in [self.k.len(), self.sigma.len(), self.eta.len(), self.k_bar.len()] {
            if len != n {
                return Err(ModelError::Dimension { expected: n, got: len });
            }
        }
        if self.l.len() != net.edge_count() || self.l_bar.len() != net.edge_count() {
            return Err(ModelError::Dimension {
                expected: net.edge_count(),
                got: self.l.len(),
            });
        }
        for i in 0..n {
            if !(self.k[i] > 0.0) || self.k[i] > self.k_bar[i] {
                return Err(ModelError::BadControlGain {
                    node: i,
                    value: self.k[i],
                    bound: self.k_bar[i],
                });
            }
            for (name, v) in [("sigma", self.sigma[i]), ("eta", self.eta[i])] {
                if !(v > 0.0 && v < 1.0) {
                    return Err(ModelError::BadTriggerGain { name, node: i, value: v });
                }
            }
        }
        for (e, edge) in net.edges().iter().enumerate() {
            if self.l_bar[e] > edge.beta_bar {
                return Err(ModelError::BadEdgeGainBound {
                    edge: e,
                    value: self.l_bar[e],
                    bound: edge.beta_bar,
                });
            }
            if !(self.l[e] > 0.0) || self.l[e] > self.l_bar[e] {
                return Err(ModelError::BadEdgeGain {
                    edge: e,
                    value: self.l[e],
                    bound: self.l_bar[e],
                });
            }
        }
        Ok(())
    }
}

/// Containment objective: `limsup_t w_m . x(t) <= d_bar_m` for each of the
/// `M` binary selectors, plus the Lyapunov weighting `p`.
#[derive(Debug, Clone)]
pub struct Objective {
    /// Sorted support of each 0/1 selector.
    supports: Vec<Vec<usize>>,
    d_bar: Vec<f64>,
    p: Vec<f64>,
}

impl Objective {
    /// Build from explicit 0/1 selector vectors; any other weight is rejected.
    pub fn from_selectors(
        selectors: &[Vec<f64>],
        d_bar: Vec<f64>,
        p: Vec<f64>,
        n: usize,
    ) -> Result<Self, ModelError> {
        let supports = selectors
            .iter()
            .enumerate()
            .map(|(index, w)| {
                if w.len() != n {
                    return Err(ModelError::Dimension { expected: n, got: w.len() });
                }
                let mut support = Vec::new();
                for (i, &wi) in w.iter().enumerate() {
                    if wi == 1.0 {
                        support.push(i);
                    } else if wi != 0.0 {
                        return Err(ModelError::BadSelector { index });
                    }
                }
                if support.is_empty() {
                    return Err(ModelError::BadSelector { index });
                }
                Ok(support)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_supports(supports, d_bar, p, n)
    }

    /// Build from node-index support sets.
    pub fn from_supports(
        supports: Vec<Vec<usize>>,
        d_bar: Vec<f64>,
        p: Vec<f64>,
        n: usize,
    ) -> Result<Self, ModelError> {
        if supports.len() != d_bar.len() {
            return Err(ModelError::ObjectiveCount {
                selectors: supports.len(),
                thresholds: d_bar.len(),
            });
        }
        let mut supports = supports;
        for (index, s) in supports.iter_mut().enumerate() {
            s.sort_unstable();
            s.dedup();
            if s.is_empty() || s.iter().any(|&i| i >= n) {
                return Err(ModelError::BadSelector { index });
            }
        }
        for (index, &d) in d_bar.iter().enumerate() {
            if !(d >= 0.0) || !d.is_finite() {
                return Err(ModelError::BadThreshold { index, value: d });
            }
        }
        if p.len() != n {
            return Err(ModelError::Dimension { expected: n, got: p.len() });
        }
        for (node, &pi) in p.iter().enumerate() {
            if !(pi > 0.0) || !pi.is_finite() {
                return Err(ModelError::BadLyapunovParameter { node, value: pi });
            }
        }
        Ok(Self { supports, d_bar, p })
    }

    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    pub fn support(&self, m: usize) -> &[usize] {
        &self.supports[m]
    }

    pub fn d_bar(&self) -> &[f64] {
        &self.d_bar
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Replace the Lyapunov parameter (e.g. with the LP design).
    pub fn with_p(mut self, p: Vec<f64>) -> Result<Self, ModelError> {
        for (node, &pi) in p.iter().enumerate() {
            if !(pi > 0.0) || !pi.is_finite() {
                return Err(ModelError::BadLyapunovParameter { node, value: pi });
            }
        }
        if p.len() != self.p.len() {
            return Err(ModelError::Dimension { expected: self.p.len(), got: p.len() });
        }
        self.p = p;
        Ok(self)
    }

    /// `min_{i in supp(w_m)} p_i`.
    pub fn p_star(&self, m: usize) -> f64 {
        self.supports[m]
            .iter()
            .map(|&i| self.p[i])
            .fold(f64::INFINITY, f64::min)
    }

    /// `w_m . x`.
    pub fn selector_dot(&self, m: usize, x: &[f64]) -> f64 {
        self.supports[m].iter().map(|&i| x[i]).sum()
    }
}

/// Controlled SIS vector field:
/// `dx_i = -(delta_i + u_i) x_i + (1 - x_i) sum_{j in N_in(i)} (beta_ji - v_ji) x_j`.
///
/// `u` is per node, `v` per edge (parallel to `net.edges()`). All inputs are
/// validated; see [`sis_rhs_unchecked`] for the hot path.
pub fn sis_rhs(net: &Network, x: &[f64], u: &[f64], v: &[f64]) -> Result<Vec<f64>, ModelError> {
    net.check_state(x)?;
    if u.len() != net.node_count() {
        return Err(ModelError::Dimension { expected: net.node_count(), got: u.len() });
    }
    if v.len() != net.edge_count() {
        return Err(ModelError::Dimension { expected: net.edge_count(), got: v.len() });
    }
    for (node, &ui) in u.iter().enumerate() {
        if !(ui >= 0.0) || !ui.is_finite() {
            return Err(ModelError::BadNodeInput { node, value: ui });
        }
    }
    for (edge, &ve) in v.iter().enumerate() {
        let bound = net.edges()[edge].beta_bar;
        if !(ve >= 0.0) || ve > bound {
            return Err(ModelError::BadEdgeInput { edge, value: ve, bound });
        }
    }
    let mut dx = vec![0.0; net.node_count()];
    sis_rhs_unchecked(net, x, u, v, &mut dx);
    Ok(dx)
}

/// Hot-path RHS evaluation without validation; `dx` is overwritten.
pub fn sis_rhs_unchecked(net: &Network, x: &[f64], u: &[f64], v: &[f64], dx: &mut [f64]) {
    dx.fill(0.0);
    for (e, edge) in net.edges().iter().enumerate() {
        dx[edge.dst] += (edge.beta_bar - v[e]) * x[edge.src];
    }
    for i in 0..net.node_count() {
        dx[i] = -(net.delta_bar()[i] + u[i]) * x[i] + (1.0 - x[i]) * dx[i];
    }
}

/// Per-objective verdicts over a tail window of states: true for `m` iff
/// `max_tail w_m . x <= d_bar_m + tol`.
pub fn objective_satisfied(
    obj: &Objective,
    tail: &[Vec<f64>],
    tol: f64,
) -> Result<Vec<bool>, ModelError> {
    if tail.is_empty() {
        return Err(ModelError::EmptyTail);
    }
    Ok((0..obj.len())
        .map(|m| {
            let worst = tail
                .iter()
                .map(|x| obj.selector_dot(m, x))
                .fold(f64::NEG_INFINITY, f64::max);
            worst <= obj.d_bar()[m] + tol
        })
        .collect())
}
