//! Logarithmic change of variables: `y = exp(z)` turns each posynomial into a
//! log-sum-exp of affine forms and each monomial equality into an affine
//! equation, which is eliminated by Gaussian pivoting so the solver only sees
//! free variables.

use std::collections::BTreeMap;

use crate::{GeometricProgram, GpError, Posynomial};

/// `log sum_k exp(a_k . z + b_k)` with sparse rows.
#[derive(Debug, Clone)]
pub struct LogSumExp {
    /// One row per monomial: sparse `(var index, exponent)` pairs plus `ln c`.
    pub rows: Vec<(Vec<(usize, f64)>, f64)>,
}

impl LogSumExp {
    /// Value at `z`, max-shifted for stability.
    pub fn eval(&self, z: &[f64]) -> f64 {
        let mut m = f64::NEG_INFINITY;
        let mut acts = Vec::with_capacity(self.rows.len());
        for (coefs, b) in &self.rows {
            let mut a = *b;
            for &(j, e) in coefs {
                a += e * z[j];
            }
            if a > m {
                m = a;
            }
            acts.push(a);
        }
        let sum: f64 = acts.iter().map(|a| (a - m).exp()).sum();
        m + sum.ln()
    }

    /// Value, gradient, and softmax row activations at `z`.
    ///
    /// The gradient is written into `grad` (dense, zeroed first); activations
    /// are returned for Hessian assembly.
    pub fn eval_grad(&self, z: &[f64], grad: &mut [f64]) -> (f64, Vec<f64>) {
        for g in grad.iter_mut() {
            *g = 0.0;
        }
        let mut m = f64::NEG_INFINITY;
        let mut acts = Vec::with_capacity(self.rows.len());
        for (coefs, b) in &self.rows {
            let mut a = *b;
            for &(j, e) in coefs {
                a += e * z[j];
            }
            if a > m {
                m = a;
            }
            acts.push(a);
        }
        let mut sum = 0.0;
        for a in acts.iter_mut() {
            *a = (*a - m).exp();
            sum += *a;
        }
        for a in acts.iter_mut() {
            *a /= sum;
        }
        for ((coefs, _), w) in self.rows.iter().zip(acts.iter()) {
            for &(j, e) in coefs {
                grad[j] += w * e;
            }
        }
        (m + sum.ln(), acts)
    }

    /// Union of variable indices touched by any row.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .rows
            .iter()
            .flat_map(|(coefs, _)| coefs.iter().map(|&(j, _)| j))
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// Affine parametrization `z = map * w + offset` produced by eliminating
/// monomial equalities.
#[derive(Debug, Clone)]
pub struct AffineSubspace {
    /// Row-major `n x m` matrix, `n` original variables, `m` free variables.
    pub map: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvexForm {
    /// Original variable names, index order used by all rows.
    pub vars: Vec<String>,
    /// Objective as a log-sum-exp over the free variables `w`.
    pub objective: LogSumExp,
    /// Constraints `lse_i(w) <= 0` over the free variables.
    pub constraints: Vec<LogSumExp>,
    /// Present when equalities were eliminated.
    pub subspace: Option<AffineSubspace>,
    /// Number of free variables (`vars.len()` when no equalities).
    pub free_dim: usize,
}

impl ConvexForm {
    /// Recover original-space values from a free-variable point.
    pub fn values_from_free(&self, w: &[f64]) -> BTreeMap<String, f64> {
        let z = self.z_from_free(w);
        self.vars
            .iter()
            .cloned()
            .zip(z.iter().map(|zi| zi.exp()))
            .collect()
    }

    pub fn z_from_free(&self, w: &[f64]) -> Vec<f64> {
        match &self.subspace {
            None => w.to_vec(),
            Some(sub) => {
                let mut z = sub.offset.clone();
                for (zi, row) in z.iter_mut().zip(sub.map.iter()) {
                    for (a, wi) in row.iter().zip(w.iter()) {
                        *zi += a * wi;
                    }
                }
                z
            }
        }
    }
}

fn lse_rows(posy: &Posynomial, index: &BTreeMap<&str, usize>) -> Vec<(Vec<(usize, f64)>, f64)> {
    posy.terms()
        .iter()
        .map(|t| {
            let coefs: Vec<(usize, f64)> =
                t.exponents().map(|(v, e)| (index[v], e)).collect();
            (coefs, t.coeff().ln())
        })
        .collect()
}

/// Re-express an LSE over `z` as an LSE over `w` given `z = M w + off`.
fn compose(lse: &LogSumExp, sub: &AffineSubspace) -> LogSumExp {
    let m = sub.map.first().map_or(0, |r| r.len());
    let rows = lse
        .rows
        .iter()
        .map(|(coefs, b)| {
            let mut dense = vec![0.0; m];
            let mut b2 = *b;
            for &(j, e) in coefs {
                b2 += e * sub.offset[j];
                for (d, a) in dense.iter_mut().zip(sub.map[j].iter()) {
                    *d += e * a;
                }
            }
            let sparse: Vec<(usize, f64)> = dense
                .into_iter()
                .enumerate()
                .filter(|&(_, v)| v != 0.0)
                .collect();
            (sparse, b2)
        })
        .collect();
    LogSumExp { rows }
}

#[cfg(test)]
mod tests {
    use crate::{GeometricProgram, Monomial, Posynomial};

    #[test]
    fn single_monomial_is_affine() {
        // 3 * y^2 -> one row: 2 z + ln 3
        let gp = GeometricProgram::new(Monomial::term(3.0, "y", 2.0).unwrap().into());
        let form = gp.to_convex().unwrap();
        assert_eq!(form.objective.rows.len(), 1);
        let (coefs, b) = &form.objective.rows[0];
        assert_eq!(coefs, &vec![(0usize, 2.0)]);
        assert!((b - 3.0f64.ln()).abs() < 1e-15);
        assert!((form.objective.eval(&[0.5]) - (3.0f64.ln() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn symmetric_posynomial_value_at_one() {
        // y + 1/y at y = 1 (z = 0): log-sum-exp = ln 2
        let posy = Posynomial::new(vec![
            Monomial::term(1.0, "y", 1.0).unwrap(),
            Monomial::term(1.0, "y", -1.0).unwrap(),
        ])
        .unwrap();
        let gp = GeometricProgram::new(posy);
        let form = gp.to_convex().unwrap();
        assert!((form.objective.eval(&[0.0]) - 2.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_space_form_is_midpoint_convex() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut terms = Vec::new();
        for _ in 0..4 {
            let mut m = Monomial::new(rng.gen_range(0.1f64..3.0)).unwrap();
            for v in ["a", "b", "c"] {
                m = m.pow(v, rng.gen_range(-2.0f64..2.0)).unwrap();
            }
            terms.push(m);
        }
        let gp = GeometricProgram::new(Posynomial::new(terms).unwrap());
        let form = gp.to_convex().unwrap();
        for _ in 0..1000 {
            let z1: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0f64..3.0)).collect();
            let z2: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0f64..3.0)).collect();
            let mid: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| 0.5 * (a + b)).collect();
            let lhs = form.objective.eval(&mid);
            let rhs = 0.5 * form.objective.eval(&z1) + 0.5 * form.objective.eval(&z2);
            assert!(lhs <= rhs + 1e-12, "midpoint convexity violated: {lhs} > {rhs}");
        }
    }

    #[test]
    fn round_trip_exp_of_log_point() {
        let posy = Posynomial::new(vec![
            Monomial::term(2.0, "y1", 1.5).unwrap(),
            Monomial::term(0.5, "y2", -1.0).unwrap(),
        ])
        .unwrap();
        let gp = GeometricProgram::new(posy.clone());
        let form = gp.to_convex().unwrap();
        let w = [0.3f64, -0.7];
        let vals = form.values_from_free(&w);
        assert!((vals["y1"] - 0.3f64.exp()).abs() < 1e-15);
        assert!((vals["y2"] - (-0.7f64).exp()).abs() < 1e-15);
        // log of the posynomial equals the LSE value
        assert!((posy.eval(&vals).unwrap().ln() - form.objective.eval(&w)).abs() < 1e-12);
    }
}

pub(crate) fn build(gp: &GeometricProgram) -> Result<ConvexForm, GpError> {
    let vars = gp.variables();
    if vars.is_empty() {
        return Err(GpError::NoVariables);
    }
    let index: BTreeMap<&str, usize> =
        vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let n = vars.len();

    let objective = LogSumExp { rows: lse_rows(gp.objective(), &index) };
    let constraints: Vec<LogSumExp> = gp
        .constraints()
        .iter()
        .map(|c| LogSumExp { rows: lse_rows(c, &index) })
        .collect();

    if gp.equalities().is_empty() {
        return Ok(ConvexForm { vars, objective, constraints, subspace: None, free_dim: n });
    }

    // Each monomial equality c * prod v^a == 1 is affine in z: a.z = -ln c.
    // Gaussian elimination with partial pivoting yields z = M w + off.
    let q = gp.equalities().len();
    let mut aug = vec![vec![0.0f64; n + 1]; q];
    for (row, mono) in aug.iter_mut().zip(gp.equalities().iter()) {
        for (v, e) in mono.exponents() {
            row[index[v]] = e;
        }
        row[n] = -mono.coeff().ln();
    }
    let mut pivot_of_row: Vec<usize> = Vec::new();
    let mut r = 0usize;
    for col in 0..n {
        let (best, mag) = (r..q)
            .map(|i| (i, aug[i][col].abs()))
            .fold((r, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag < 1e-12 {
            continue;
        }
        aug.swap(r, best);
        let piv = aug[r][col];
        for x in aug[r].iter_mut() {
            *x /= piv;
        }
        for i in 0..q {
            if i != r && aug[i][col] != 0.0 {
                let f = aug[i][col];
                for c2 in 0..=n {
                    aug[i][c2] -= f * aug[r][c2];
                }
            }
        }
        pivot_of_row.push(col);
        r += 1;
        if r == q {
            break;
        }
    }
    // Rows below the rank must have zero RHS.
    for row in aug.iter().skip(r) {
        if row[n].abs() > 1e-9 {
            return Err(GpError::InconsistentEqualities(row[n].abs()));
        }
    }
    let pivots: BTreeMap<usize, usize> =
        pivot_of_row.iter().enumerate().map(|(row, &col)| (col, row)).collect();
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains_key(c)).collect();
    let m = free.len();
    let mut map = vec![vec![0.0; m]; n];
    let mut offset = vec![0.0; n];
    for (w_idx, &col) in free.iter().enumerate() {
        map[col][w_idx] = 1.0;
    }
    for (&col, &row) in &pivots {
        offset[col] = aug[row][n];
        for (w_idx, &fc) in free.iter().enumerate() {
            map[col][w_idx] = -aug[row][fc];
        }
    }
    let sub = AffineSubspace { map, offset };
    let objective = compose(&objective, &sub);
    let constraints = constraints.iter().map(|c| compose(c, &sub)).collect();
    Ok(ConvexForm { vars, objective, constraints, subspace: Some(sub), free_dim: m })
}
