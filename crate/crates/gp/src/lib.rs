//! Geometric programming: posynomial algebra, the logarithmic change of
//! variables that turns a GP into a smooth convex program, and a log-barrier
//! interior-point solver with KKT certification.
//!
//! A geometric program in standard form is
//!
//! ```text
//! minimize    f0(y)
//! subject to  fi(y) <= 1      (posynomial inequalities)
//!             gj(y) == 1      (monomial equalities)
//! ```
//!
//! over positive variables `y`. Substituting `y = exp(z)` maps every
//! posynomial to a log-sum-exp of affine functions of `z`, which is convex;
//! monomial equalities become affine and are eliminated before solving.

use std::collections::{BTreeMap, BTreeSet};

mod convex;
mod kkt;
mod solve;

pub use convex::{AffineSubspace, ConvexForm, LogSumExp};
pub use kkt::{check_kkt, KktReport};
pub use solve::{DebugLog, IterateRecord, SolveOptions};

/// Errors raised while building or solving a geometric program.
#[derive(Debug, thiserror::Error)]
pub enum GpError {
    #[error("monomial coefficient must be positive and finite, got {0}")]
    BadCoefficient(f64),
    #[error("exponent for variable `{0}` must be finite, got {1}")]
    BadExponent(String, f64),
    #[error("posynomial must have at least one term")]
    EmptyPosynomial,
    #[error("variable `{0}` must be positive, got {1}")]
    NonPositiveValue(String, f64),
    #[error("missing value for variable `{0}`")]
    MissingValue(String),
    #[error("program has no variables")]
    NoVariables,
    #[error("monomial equalities are inconsistent: residual {0:.3e} on eliminated system")]
    InconsistentEqualities(f64),
    #[error("problem is infeasible (phase-I optimum {0:.3e} >= 0)")]
    Infeasible(f64),
}

/// Single positive-coefficient power product `c * prod_v v^(a_v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    coeff: f64,
    exponents: BTreeMap<String, f64>,
}

impl Monomial {
    pub fn new(coeff: f64) -> Result<Self, GpError> {
        if !(coeff > 0.0) || !coeff.is_finite() {
            return Err(GpError::BadCoefficient(coeff));
        }
        Ok(Self { coeff, exponents: BTreeMap::new() })
    }

    /// Multiply by `var^exponent`. Exponents on the same variable accumulate.
    pub fn pow(mut self, var: impl Into<String>, exponent: f64) -> Result<Self, GpError> {
        let var = var.into();
        if !exponent.is_finite() {
            return Err(GpError::BadExponent(var, exponent));
        }
        let e = self.exponents.entry(var).or_insert(0.0);
        *e += exponent;
        if *e == 0.0 {
            // keep the representation canonical
            let var = self
                .exponents
                .iter()
                .find(|(_, v)| **v == 0.0)
                .map(|(k, _)| k.clone());
            if let Some(v) = var {
                self.exponents.remove(&v);
            }
        }
        Ok(self)
    }

    /// Convenience constructor for `coeff * var^exponent`.
    pub fn term(coeff: f64, var: impl Into<String>, exponent: f64) -> Result<Self, GpError> {
        Monomial::new(coeff)?.pow(var, exponent)
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn exponents(&self) -> impl Iterator<Item = (&str, f64)> {
        self.exponents.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn eval(&self, values: &BTreeMap<String, f64>) -> Result<f64, GpError> {
        let mut out = self.coeff;
        for (v, a) in &self.exponents {
            let y = *values.get(v).ok_or_else(|| GpError::MissingValue(v.clone()))?;
            if !(y > 0.0) {
                return Err(GpError::NonPositiveValue(v.clone(), y));
            }
            out *= y.powf(*a);
        }
        Ok(out)
    }
}

/// Sum of monomials; all coefficients positive, never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Posynomial {
    terms: Vec<Monomial>,
}

impl Posynomial {
    pub fn new(terms: Vec<Monomial>) -> Result<Self, GpError> {
        if terms.is_empty() {
            return Err(GpError::EmptyPosynomial);
        }
        Ok(Self { terms })
    }

    pub fn push(&mut self, term: Monomial) {
        self.terms.push(term);
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn eval(&self, values: &BTreeMap<String, f64>) -> Result<f64, GpError> {
        let mut acc = 0.0;
        for t in &self.terms {
            acc += t.eval(values)?;
        }
        Ok(acc)
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in &self.terms {
            for (v, _) in t.exponents() {
                out.insert(v.to_string());
            }
        }
        out
    }
}

impl From<Monomial> for Posynomial {
    fn from(m: Monomial) -> Self {
        Posynomial { terms: vec![m] }
    }
}

/// Standard-form geometric program.
#[derive(Debug, Clone)]
pub struct GeometricProgram {
    objective: Posynomial,
    constraints: Vec<Posynomial>,
    equalities: Vec<Monomial>,
}

impl GeometricProgram {
    pub fn new(objective: Posynomial) -> Self {
        Self { objective, constraints: Vec::new(), equalities: Vec::new() }
    }

    /// Add a posynomial inequality `posy <= 1`.
    pub fn add_constraint(&mut self, posy: Posynomial) {
        self.constraints.push(posy);
    }

    /// Add a monomial equality `mono == 1`.
    pub fn add_equality(&mut self, mono: Monomial) {
        self.equalities.push(mono);
    }

    pub fn objective(&self) -> &Posynomial {
        &self.objective
    }

    pub fn constraints(&self) -> &[Posynomial] {
        &self.constraints
    }

    pub fn equalities(&self) -> &[Monomial] {
        &self.equalities
    }

    /// Sorted list of all variables appearing anywhere in the program.
    pub fn variables(&self) -> Vec<String> {
        let mut vars = self.objective.variables();
        for c in &self.constraints {
            vars.extend(c.variables());
        }
        for m in &self.equalities {
            for (v, _) in m.exponents() {
                vars.insert(v.to_string());
            }
        }
        vars.into_iter().collect()
    }

    /// Log-space convex form (equalities eliminated).
    pub fn to_convex(&self) -> Result<ConvexForm, GpError> {
        convex::build(self)
    }

    pub fn solve(&self, options: &SolveOptions) -> Result<GpSolution, GpError> {
        solve::solve(self, options)
    }
}

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Duality gap below tolerance and KKT residual certified.
    Optimal,
    /// Phase I proved no strictly feasible point exists.
    Infeasible,
    /// Iteration budget exhausted; best iterate returned.
    MaxIter,
}

/// Result of a geometric-program solve.
#[derive(Debug, Clone)]
pub struct GpSolution {
    pub status: Status,
    /// Variable values in the original (positive) space.
    pub values: BTreeMap<String, f64>,
    /// Objective value `f0(y)` at `values`.
    pub objective: f64,
    /// KKT residual report at `values`.
    pub kkt: KktReport,
    /// Total damped-Newton iterations across all barrier stages.
    pub newton_iters: usize,
    /// Iterate log, present when `SolveOptions::debug` is set.
    pub debug: Option<DebugLog>,
}

impl GpSolution {
    pub fn value(&self, var: &str) -> Option<f64> {
        self.values.get(var).copied()
    }
}
