//! Certificates for the containment objective.
//!
//! All three checks bound the asymptotic Lyapunov level `limsup p.x(t)` by the
//! maximum of `p.x` over a quadratic sublevel set `W = {x : x'Qx - r'x <= 0}`
//! and compare it with `p*_m d_bar_m` per objective:
//!
//! * the exact check uses the full closed-loop `Q` (diagonal plus one
//!   off-diagonal entry per edge) and symmetrizes it before maximizing;
//! * the continuous-controller check replaces `Q` by a diagonal bound valid
//!   for instantaneous feedback;
//! * the relaxed check replaces `Q` by a diagonal lower bound and `r` by an
//!   upper bound, which is what the gain-synthesis programs certify.
//!
//! Maximization over an ellipsoid has the closed form implemented in
//! [`theta_star`]; failure of the positive-definiteness factorization is a
//! distinct error ("certificate machinery broke"), never a silent verdict.

use nalgebra::{Cholesky, DMatrix, DVector};
use thiserror::Error;

use crate::model::{GainSet, ModelError, Network, Objective};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("symmetrized quadratic form is not positive definite: certificate machinery cannot proceed")]
    NotPositiveDefinite,
    #[error("certificate weight s[{node}] = {value} outside (0, {bound}]")]
    BadWeight { node: usize, value: f64, bound: f64 },
    #[error("relaxed drift bound r[{node}] = {value} below required minimum {bound}")]
    BadDriftBound { node: usize, value: f64, bound: f64 },
    #[error("objective count mismatch with certificate inputs")]
    ObjectiveMismatch,
}

/// Which check produced a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// Full quadratic form of the event-triggered closed loop.
    ExactEllipsoid,
    /// Diagonal form for the continuous-time controller.
    ContinuousDiagonal,
    /// Diagonal relaxation of the event-triggered form.
    RelaxedDiagonal,
}

/// Assembled quantities defining the sublevel set `W`.
#[derive(Debug, Clone)]
pub struct CertificateInputs {
    /// Diagonal weights `s_i = (1 - sigma_i)(p_i k_i + sum_out p_j l_ij)`.
    pub s: Vec<f64>,
    /// Linear coefficients `r_i = sum_out p_j beta_ij - p_i delta_i + eta_i c_i`.
    pub r: Vec<f64>,
    /// Off-diagonal entries, one per edge `(i, j)`: value at (row j, col i).
    pub q_off: Vec<(usize, usize, f64)>,
    /// Per-objective `min_{i in supp} p_i`.
    pub p_star: Vec<f64>,
}

impl CertificateInputs {
    /// Column-dominance margins `q_ii - sum_{j != i} q_ji`; positive for every
    /// admissible gain set.
    pub fn dominance_margins(&self) -> Vec<f64> {
        let mut m = self.s.clone();
        for &(_, col, v) in &self.q_off {
            m[col] -= v;
        }
        m
    }

    /// Dense symmetrization `(Q + Q')/2`.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        let n = self.s.len();
        let mut q = DMatrix::zeros(n, n);
        for i in 0..n {
            q[(i, i)] = self.s[i];
        }
        for &(row, col, v) in &self.q_off {
            q[(row, col)] += 0.5 * v;
            q[(col, row)] += 0.5 * v;
        }
        q
    }
}

/// Verification outcome: the certified level, per-objective margins, and
/// verdicts. `margins[m] = p*_m d_bar_m - level`.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub check: CheckKind,
    pub level: f64,
    pub margins: Vec<f64>,
    pub verdicts: Vec<bool>,
    pub slack: f64,
}

impl Certificate {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|&v| v)
    }

    fn from_level(check: CheckKind, level: f64, obj: &Objective, slack: f64) -> Self {
        let margins: Vec<f64> = (0..obj.len())
            .map(|m| obj.p_star(m) * obj.d_bar()[m] - level)
            .collect();
        let verdicts = margins.iter().map(|&g| g + slack >= 0.0).collect();
        Certificate { check, level, margins, verdicts, slack }
    }
}

/// Per-node gain mass `c_i = p_i k_i + sum_{j in N_out(i)} p_j l_ij`.
pub fn gain_mass(net: &Network, k: &[f64], l: &[f64], p: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = (0..net.node_count()).map(|i| p[i] * k[i]).collect();
    for (e, edge) in net.edges().iter().enumerate() {
        c[edge.src] += p[edge.dst] * l[e];
    }
    c
}

/// Uncontrolled p-weighted drift `sum_{j in N_out(i)} p_j beta_ij - p_i delta_i`.
pub fn drift(net: &Network, p: &[f64]) -> Vec<f64> {
    let mut r: Vec<f64> = (0..net.node_count())
        .map(|i| -p[i] * net.delta_bar()[i])
        .collect();
    for edge in net.edges() {
        r[edge.src] += p[edge.dst] * edge.beta_bar;
    }
    r
}

/// Assemble `s`, `r`, and the edge-sparse off-diagonal of `Q` for admissible
/// gains.
pub fn build_certificate_inputs(
    net: &Network,
    gains: &GainSet,
    obj: &Objective,
) -> Result<CertificateInputs, VerifyError> {
    gains.validate(net)?;
    let p = obj.p();
    let c = gain_mass(net, &gains.k, &gains.l, p);
    let base = drift(net, p);
    let s: Vec<f64> = (0..net.node_count())
        .map(|i| (1.0 - gains.sigma[i]) * c[i])
        .collect();
    let r: Vec<f64> = (0..net.node_count())
        .map(|i| base[i] + gains.eta[i] * c[i])
        .collect();
    let q_off = net
        .edges()
        .iter()
        .zip(gains.l.iter())
        .map(|(edge, &l)| {
            let i = edge.src;
            let coef = 0.5 * (1.0 - gains.sigma[i]) * (gains.sigma[i] + gains.eta[i]);
            (edge.dst, i, coef * p[edge.dst] * l)
        })
        .collect();
    let p_star = (0..obj.len()).map(|m| obj.p_star(m)).collect();
    Ok(CertificateInputs { s, r, q_off, p_star })
}

/// Closed-form maximum of `p.x` over `{x : x' Q_s x - r'x <= 0}` for a
/// symmetric positive definite `Q_s`:
///
/// `theta* = p.(Qs^-1 r)/2 + sqrt( (r.(Qs^-1 r)/4) * (p.(Qs^-1 p)) )`.
pub fn theta_star(q_sym: &DMatrix<f64>, r: &[f64], p: &[f64]) -> Result<f64, VerifyError> {
    let chol = Cholesky::new(q_sym.clone()).ok_or(VerifyError::NotPositiveDefinite)?;
    let rv = DVector::from_column_slice(r);
    let pv = DVector::from_column_slice(p);
    let qinv_r = chol.solve(&rv);
    let qinv_p = chol.solve(&pv);
    let r_qr = rv.dot(&qinv_r);
    let p_qp = pv.dot(&qinv_p);
    Ok(0.5 * pv.dot(&qinv_r) + (0.25 * r_qr * p_qp).sqrt())
}

/// Diagonal specialization: `theta* = (1/2) sqrt(sum p^2/s) sqrt(sum r^2/s)
/// + (1/2) sum p r / s`, valid for any `s > 0`.
pub fn theta_star_diagonal(s: &[f64], r: &[f64], p: &[f64]) -> Result<f64, VerifyError> {
    let mut p2 = 0.0;
    let mut r2 = 0.0;
    let mut pr = 0.0;
    for i in 0..s.len() {
        if !(s[i] > 0.0) {
            return Err(VerifyError::BadWeight { node: i, value: s[i], bound: f64::INFINITY });
        }
        p2 += p[i] * p[i] / s[i];
        r2 += r[i] * r[i] / s[i];
        pr += p[i] * r[i] / s[i];
    }
    Ok(0.5 * (p2 * r2).sqrt() + 0.5 * pr)
}

/// Exact check: assembles the full quadratic form, symmetrizes it, and
/// compares the ellipsoid maximum with every `p*_m d_bar_m`.
pub fn verify_exact(
    net: &Network,
    gains: &GainSet,
    obj: &Objective,
    slack: f64,
) -> Result<Certificate, VerifyError> {
    let inputs = build_certificate_inputs(net, gains, obj)?;
    let level = theta_star(&inputs.symmetrized(), &inputs.r, obj.p())?;
    Ok(Certificate::from_level(CheckKind::ExactEllipsoid, level, obj, slack))
}

/// Continuous-controller check with caller-chosen diagonal weights
/// `0 < s_c <= p_i k_i + sum_out p_j l_ij` (componentwise).
pub fn verify_continuous(
    net: &Network,
    k: &[f64],
    l: &[f64],
    obj: &Objective,
    s_c: &[f64],
    slack: f64,
) -> Result<Certificate, VerifyError> {
    let n = net.node_count();
    if k.len() != n || s_c.len() != n || l.len() != net.edge_count() {
        return Err(ModelError::Dimension { expected: n, got: k.len().min(s_c.len()) }.into());
    }
    let p = obj.p();
    let c = gain_mass(net, k, l, p);
    for i in 0..n {
        if !(s_c[i] > 0.0) || s_c[i] > c[i] {
            return Err(VerifyError::BadWeight { node: i, value: s_c[i], bound: c[i] });
        }
    }
    let r = drift(net, p);
    let level = theta_star_diagonal(s_c, &r, p)?;
    Ok(Certificate::from_level(CheckKind::ContinuousDiagonal, level, obj, slack))
}

/// Relaxed event-triggered check with diagonal weights `0 < s_e <=
/// (1-sigma_i) c_i` and drift bounds `r_e >= r` (componentwise, where `r` is
/// the exact check's linear coefficient). A pass here implies a pass of the
/// exact check on the nonnegative orthant, where trajectories live.
pub fn verify_relaxed(
    net: &Network,
    gains: &GainSet,
    obj: &Objective,
    s_e: &[f64],
    r_e: &[f64],
    slack: f64,
) -> Result<Certificate, VerifyError> {
    gains.validate(net)?;
    let n = net.node_count();
    if s_e.len() != n || r_e.len() != n {
        return Err(ModelError::Dimension { expected: n, got: s_e.len().min(r_e.len()) }.into());
    }
    let p = obj.p();
    let c = gain_mass(net, &gains.k, &gains.l, p);
    let base = drift(net, p);
    for i in 0..n {
        let cap = (1.0 - gains.sigma[i]) * c[i];
        if !(s_e[i] > 0.0) || s_e[i] > cap * (1.0 + 1e-12) {
            return Err(VerifyError::BadWeight { node: i, value: s_e[i], bound: cap });
        }
        let floor = base[i] + gains.eta[i] * c[i];
        if r_e[i] < floor - 1e-12 * floor.abs().max(1.0) {
            return Err(VerifyError::BadDriftBound { node: i, value: r_e[i], bound: floor });
        }
    }
    let level = theta_star_diagonal(s_e, r_e, p)?;
    Ok(Certificate::from_level(CheckKind::RelaxedDiagonal, level, obj, slack))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Edge;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chain(beta: f64) -> Network {
        Network::new(vec![0.1, 0.1], vec![Edge { src: 0, dst: 1, beta_bar: beta }]).unwrap()
    }

    fn objective_for(n: usize, d: f64, p: Vec<f64>) -> Objective {
        Objective::from_supports(vec![(0..n).collect()], vec![d], p, n).unwrap()
    }

    fn admissible(net: &Network, rng: &mut ChaCha8Rng, floor: f64) -> GainSet {
        let n = net.node_count();
        GainSet {
            k: (0..n).map(|_| rng.gen_range(floor * 0.52..=0.52)).collect(),
            l: net
                .edges()
                .iter()
                .map(|e| {
                    let lb = e.beta_bar.min(0.054);
                    rng.gen_range(floor * lb..=lb)
                })
                .collect(),
            sigma: (0..n).map(|_| rng.gen_range(0.01..0.99)).collect(),
            eta: (0..n).map(|_| rng.gen_range(0.01..0.99)).collect(),
            k_bar: vec![0.52; n],
            l_bar: net.edges().iter().map(|e| e.beta_bar.min(0.054)).collect(),
        }
    }

    fn random_net(rng: &mut ChaCha8Rng, n_max: usize) -> Network {
        let n = rng.gen_range(2..=n_max);
        let mut edges = Vec::new();
        // ring plus extras so every node has in- and out-edges
        for a in 0..n {
            edges.push(Edge { src: a, dst: (a + 1) % n, beta_bar: rng.gen_range(0.005..0.05) });
        }
        for _ in 0..rng.gen_range(0..2 * n) {
            let s = rng.gen_range(0..n);
            let d = rng.gen_range(0..n);
            if s != d && !edges.iter().any(|e| e.src == s && e.dst == d) {
                edges.push(Edge { src: s, dst: d, beta_bar: rng.gen_range(0.005..0.05) });
            }
        }
        Network::new((0..n).map(|_| rng.gen_range(0.08..0.1)).collect(), edges).unwrap()
    }

    #[test]
    fn vanishing_trigger_gains_recover_continuous_quantities() {
        let net = chain(0.05);
        let mut g = admissible(&net, &mut ChaCha8Rng::seed_from_u64(1), 0.3);
        g.sigma = vec![1e-12, 1e-12];
        g.eta = vec![1e-12, 1e-12];
        let p = vec![1.0, 1.5];
        let obj = objective_for(2, 0.5, p.clone());
        let inp = build_certificate_inputs(&net, &g, &obj).unwrap();
        let c = gain_mass(&net, &g.k, &g.l, &p);
        let base = drift(&net, &p);
        for i in 0..2 {
            assert!((inp.s[i] - c[i]).abs() < 1e-10);
            assert!((inp.r[i] - base[i]).abs() < 1e-10);
        }
        for &(_, _, v) in &inp.q_off {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn off_diagonal_hand_value() {
        let net = chain(0.05);
        let p = vec![1.0, 2.0];
        let obj = objective_for(2, 0.5, p);
        let g = GainSet {
            k: vec![0.3, 0.2],
            l: vec![0.04],
            sigma: vec![0.25, 0.5],
            eta: vec![0.1, 0.2],
            k_bar: vec![0.52, 0.52],
            l_bar: vec![0.05],
        };
        let inp = build_certificate_inputs(&net, &g, &obj).unwrap();
        // edge (0,1): value at (row 1, col 0) = 0.5 (1-sigma_0)(sigma_0+eta_0) p_1 l_01
        let expect = 0.5 * (1.0 - 0.25) * (0.25 + 0.1) * 2.0 * 0.04;
        assert_eq!(inp.q_off.len(), 1);
        let (row, col, v) = inp.q_off[0];
        assert_eq!((row, col), (1, 0));
        assert!((v - expect).abs() < 1e-15);
    }

    #[test]
    fn dominance_margin_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let net = random_net(&mut rng, 10);
            let n = net.node_count();
            let g = admissible(&net, &mut rng, 0.0);
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
            let obj = objective_for(n, 1.0, p.clone());
            let inp = build_certificate_inputs(&net, &g, &obj).unwrap();
            let margins = inp.dominance_margins();
            for i in 0..n {
                let lsum: f64 = net
                    .out_edges(i)
                    .iter()
                    .map(|&e| p[net.edges()[e].dst] * g.l[e])
                    .sum();
                let closed = (1.0 - g.sigma[i])
                    * (p[i] * g.k[i] + (1.0 - 0.5 * (g.sigma[i] + g.eta[i])) * lsum);
                assert!((margins[i] - closed).abs() < 1e-12 * closed.max(1.0));
                assert!(margins[i] > 0.0);
            }
        }
    }

    #[test]
    fn zero_linear_part_gives_zero_level() {
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.7, 0.9]));
        let th = theta_star(&q, &[0.0, 0.0, 0.0], &[1.0, 2.0, 0.5]).unwrap();
        assert_eq!(th, 0.0);
    }

    #[test]
    fn diagonal_matches_dedicated_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = rng.gen_range(1..=8usize);
            let s: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..2.0)).collect();
            let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
            let q = DMatrix::from_diagonal(&DVector::from_column_slice(&s));
            let a = theta_star(&q, &r, &p).unwrap();
            let b = theta_star_diagonal(&s, &r, &p).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
            assert!(b >= 0.0);
        }
    }

    /// Independent numeric oracle: minimize the single-constraint dual
    /// `g(mu) = max_x [p.x - mu (x'Qx - r.x)]` over `mu > 0` by golden-section
    /// search on `ln mu` (LU solves, no closed form).
    fn qcqp_oracle(q: &DMatrix<f64>, r: &[f64], p: &[f64]) -> f64 {
        let n = r.len();
        let rv = DVector::from_column_slice(r);
        let pv = DVector::from_column_slice(p);
        let dual = |ln_mu: f64| -> f64 {
            let mu = ln_mu.exp();
            let m = q.clone() * (2.0 * mu);
            let rhs = &pv + &rv * mu;
            let lu = m.lu();
            let x = lu.solve(&rhs).unwrap_or_else(|| DVector::zeros(n));
            let qx = q * &x;
            pv.dot(&x) - mu * (x.dot(&qx) - rv.dot(&x))
        };
        let (mut lo, mut hi) = (-25.0f64, 25.0f64);
        let phi = 0.5 * (5.0f64.sqrt() - 1.0);
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let (mut f1, mut f2) = (dual(x1), dual(x2));
        for _ in 0..300 {
            if f1 > f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = dual(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = dual(x1);
            }
        }
        f1.min(f2)
    }

    #[test]
    fn closed_form_matches_numeric_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let n = rng.gen_range(2..=6usize);
            // random SPD: A'A + small ridge
            let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0f64..1.0));
            let q = &a.transpose() * &a + DMatrix::identity(n, n) * 0.2;
            let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
            let closed = theta_star(&q, &r, &p).unwrap();
            let oracle = qcqp_oracle(&q, &r, &p);
            assert!(
                (closed - oracle).abs() <= 1e-6 * closed.abs().max(1.0),
                "closed {closed} oracle {oracle}"
            );
        }
    }

    #[test]
    fn loose_threshold_always_passes() {
        let net = chain(0.05);
        let g = admissible(&net, &mut ChaCha8Rng::seed_from_u64(2), 0.3);
        let obj = objective_for(2, 1e6, vec![1.0, 1.0]);
        let cert = verify_exact(&net, &g, &obj, 0.0).unwrap();
        assert!(cert.all_pass());
        assert!(cert.level >= 0.0);
        assert_eq!(cert.check, CheckKind::ExactEllipsoid);
    }

    #[test]
    fn tight_continuous_weights_are_least_conservative() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let net = random_net(&mut rng, 8);
            let g = admissible(&net, &mut rng, 0.05);
            let p: Vec<f64> = (0..net.node_count()).map(|_| rng.gen_range(0.5..2.0)).collect();
            let obj = objective_for(net.node_count(), 1.0, p.clone());
            let tight = gain_mass(&net, &g.k, &g.l, &p);
            let half: Vec<f64> = tight.iter().map(|c| 0.5 * c).collect();
            let a = verify_continuous(&net, &g.k, &g.l, &obj, &tight, 0.0).unwrap();
            let b = verify_continuous(&net, &g.k, &g.l, &obj, &half, 0.0).unwrap();
            assert!(a.level <= b.level + 1e-12, "tight {} vs half {}", a.level, b.level);
        }
    }

    #[test]
    fn continuous_drift_hand_value() {
        // r_c[i] = sum_out p_j beta_ij - p_i delta_i
        let net = chain(0.05);
        let p = vec![1.0, 2.0];
        let r = drift(&net, &p);
        assert!((r[0] - (2.0 * 0.05 - 1.0 * 0.1)).abs() < 1e-15);
        assert!((r[1] - (-2.0 * 0.1)).abs() < 1e-15);
    }

    #[test]
    fn continuous_weight_bound_is_enforced() {
        let net = chain(0.05);
        let g = admissible(&net, &mut ChaCha8Rng::seed_from_u64(3), 0.3);
        let p = vec![1.0, 1.0];
        let obj = objective_for(2, 0.5, p.clone());
        let mut s = gain_mass(&net, &g.k, &g.l, &p);
        s[0] *= 1.5; // violates s <= p(K+L)
        assert!(matches!(
            verify_continuous(&net, &g.k, &g.l, &obj, &s, 0.0),
            Err(VerifyError::BadWeight { .. })
        ));
    }

    #[test]
    fn relaxed_bounds_are_enforced_and_conservative() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..30 {
            let net = random_net(&mut rng, 8);
            let n = net.node_count();
            let g = admissible(&net, &mut rng, 0.05);
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
            let obj = objective_for(n, 1.0, p.clone());
            let inp = build_certificate_inputs(&net, &g, &obj).unwrap();
            // tight admissible choices
            let relaxed = verify_relaxed(&net, &g, &obj, &inp.s, &inp.r, 0.0).unwrap();
            let exact = verify_exact(&net, &g, &obj, 0.0);
            if let Ok(exact) = exact {
                // The diagonal relaxation dominates the exact level on the
                // nonnegative orthant, where trajectories live. Over all of
                // R^n the exact maximizer can exploit mixed-sign coordinates
                // where the off-diagonal mass cuts the quadratic form, so
                // with fully tight weights the gap can go slightly the other
                // way; it is bounded by the off-diagonal scale.
                let cross: f64 = inp.q_off.iter().map(|&(_, _, v)| v).sum();
                let s_min = inp.s.iter().cloned().fold(f64::INFINITY, f64::min);
                let wobble = exact.level * (cross / s_min).min(1.0);
                assert!(
                    relaxed.level >= exact.level - wobble - 1e-12,
                    "relaxed {} < exact {} beyond the cross-term wobble {}",
                    relaxed.level,
                    exact.level,
                    wobble
                );
            }
            // bound violations are rejected
            let mut bad_s = inp.s.clone();
            bad_s[0] *= 1.5;
            assert!(verify_relaxed(&net, &g, &obj, &bad_s, &inp.r, 0.0).is_err());
            let mut bad_r = inp.r.clone();
            bad_r[0] -= 1.0;
            assert!(verify_relaxed(&net, &g, &obj, &inp.s, &bad_r, 0.0).is_err());
        }
    }

    #[test]
    fn continuous_level_never_exceeds_exact_level() {
        // the exact form keeps (1-sigma) shrinkage and the eta drift inflation
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut checked = 0;
        for _ in 0..60 {
            let net = random_net(&mut rng, 8);
            let n = net.node_count();
            let g = admissible(&net, &mut rng, 0.05);
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
            let obj = objective_for(n, 1.0, p.clone());
            let tight = gain_mass(&net, &g.k, &g.l, &p);
            let cont = verify_continuous(&net, &g.k, &g.l, &obj, &tight, 0.0).unwrap();
            let Ok(exact) = verify_exact(&net, &g, &obj, 0.0) else { continue };
            assert!(
                cont.level <= exact.level + 1e-9 * exact.level.abs().max(1.0),
                "continuous {} > exact {}",
                cont.level,
                exact.level
            );
            checked += 1;
        }
        assert!(checked >= 50);
    }

    #[test]
    fn admissible_gains_exist_whose_symmetrized_form_is_indefinite() {
        // Column dominance of Q does not bound the symmetric part: a node with
        // a tiny recovery gain and a strongly driven in-edge yields an
        // indefinite symmetrization. The factorization failure surfaces as the
        // dedicated error, distinct from an objective failure.
        let net = chain(0.05);
        let g = GainSet {
            k: vec![0.52, 4e-4],
            l: vec![0.05],
            sigma: vec![0.5, 0.5],
            eta: vec![0.9, 0.5],
            k_bar: vec![0.52, 0.52],
            l_bar: vec![0.05],
        };
        let obj = objective_for(2, 0.5, vec![1.0, 1.0]);
        let inp = build_certificate_inputs(&net, &g, &obj).unwrap();
        for m in inp.dominance_margins() {
            assert!(m > 0.0, "column dominance always holds");
        }
        match verify_exact(&net, &g, &obj, 0.0) {
            Err(VerifyError::NotPositiveDefinite) => {}
            other => panic!("expected factorization failure, got {other:?}"),
        }
    }
}
