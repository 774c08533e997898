//! Simple properties "f has value a" and the lattices they are compared to.
//!
//! A simple property is a predicate on states, so its extension is a subset
//! of the state space and the connectives are set operations. That lattice
//! is Boolean. Projections ordered by range inclusion form a lattice too,
//! but it fails distributivity already on a qubit.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{expectation, Observable};
use crate::state_space::{face_join, face_meet, FaceHandle, StateOperator, EQ_TOL};

/// Default tolerance for "has value a".
pub const DEFAULT_PROPERTY_TOL: f64 = 1e-9;

/// Registered real-valued functions on the state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "evaluator", rename_all = "lowercase")]
pub enum Evaluator {
    /// tr(A·T)
    Average { observable: Observable },
    /// tr(A²·T) − tr(A·T)²
    Variance { observable: Observable },
    /// `index`-th eigenvalue of T, ascending
    Eigenvalue { index: usize },
    /// tr T²
    Purity,
}

impl Evaluator {
    pub fn evaluate(&self, t: &StateOperator) -> Result<f64> {
        match self {
            Evaluator::Average { observable } => expectation(observable, t),
            Evaluator::Variance { observable } => {
                let a = observable.matrix();
                let mean = expectation(observable, t)?;
                let second = a.matmul(a)?.matmul(t.matrix())?.trace().re;
                Ok(second - mean * mean)
            }
            Evaluator::Eigenvalue { index } => t.eigenvalues().get(*index).copied().ok_or_else(|| {
                Error::InvalidConfig(format!("eigenvalue index {index} out of range for dimension {}", t.dim()))
            }),
            Evaluator::Purity => Ok(t.purity()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Evaluator::Average { .. } => "average",
            Evaluator::Variance { .. } => "variance",
            Evaluator::Eigenvalue { .. } => "eigenvalue",
            Evaluator::Purity => "purity",
        }
    }
}

/// The proposition `|f(T) − target| ≤ tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PropertyRepr")]
pub struct SimpleProperty {
    #[serde(flatten)]
    pub evaluator: Evaluator,
    pub target: f64,
    pub tol: f64,
}

#[derive(Deserialize)]
struct PropertyRepr {
    #[serde(flatten)]
    evaluator: Evaluator,
    target: f64,
    #[serde(default = "default_tol")]
    tol: f64,
}

fn default_tol() -> f64 {
    DEFAULT_PROPERTY_TOL
}

impl TryFrom<PropertyRepr> for SimpleProperty {
    type Error = Error;

    fn try_from(r: PropertyRepr) -> Result<Self> {
        SimpleProperty::new(r.evaluator, r.target, r.tol)
    }
}

impl SimpleProperty {
    pub fn new(evaluator: Evaluator, target: f64, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) || !target.is_finite() {
            return Err(Error::InvalidConfig(format!("property needs finite target and tol > 0, got {target}, {tol}")));
        }
        Ok(Self { evaluator, target, tol })
    }

    pub fn holds(&self, t: &StateOperator) -> Result<bool> {
        Ok((self.evaluator.evaluate(t)? - self.target).abs() <= self.tol)
    }
}

/// "The average of `obs` has value `target`".
pub fn average_property(obs: &Observable, target: f64, tol: f64) -> Result<SimpleProperty> {
    SimpleProperty::new(Evaluator::Average { observable: obs.clone() }, target, tol)
}

/// Boolean combination of simple properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropertyExpr {
    Atom(SimpleProperty),
    And(Vec<PropertyExpr>),
    Or(Vec<PropertyExpr>),
    Not(Box<PropertyExpr>),
}

impl PropertyExpr {
    pub fn atom(p: SimpleProperty) -> Self {
        PropertyExpr::Atom(p)
    }

    pub fn and(a: PropertyExpr, b: PropertyExpr) -> Self {
        PropertyExpr::And(vec![a, b])
    }

    pub fn or(a: PropertyExpr, b: PropertyExpr) -> Self {
        PropertyExpr::Or(vec![a, b])
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: PropertyExpr) -> Self {
        PropertyExpr::Not(Box::new(a))
    }
}

pub fn eval_expr(e: &PropertyExpr, t: &StateOperator) -> Result<bool> {
    match e {
        PropertyExpr::Atom(p) => p.holds(t),
        PropertyExpr::And(xs) => {
            for x in xs {
                if !eval_expr(x, t)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        PropertyExpr::Or(xs) => {
            for x in xs {
                if eval_expr(x, t)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        PropertyExpr::Not(x) => Ok(!eval_expr(x, t)?),
    }
}

/// Indices of the states in `sample` that satisfy `e`, computed with set
/// intersection, union and complement instead of Boolean evaluation.
pub fn extension(e: &PropertyExpr, sample: &[StateOperator]) -> Result<BTreeSet<usize>> {
    match e {
        PropertyExpr::Atom(p) => {
            let mut set = BTreeSet::new();
            for (i, t) in sample.iter().enumerate() {
                if p.holds(t)? {
                    set.insert(i);
                }
            }
            Ok(set)
        }
        PropertyExpr::And(xs) => {
            let mut acc: BTreeSet<usize> = (0..sample.len()).collect();
            for x in xs {
                let s = extension(x, sample)?;
                acc = acc.intersection(&s).copied().collect();
            }
            Ok(acc)
        }
        PropertyExpr::Or(xs) => {
            let mut acc = BTreeSet::new();
            for x in xs {
                acc.extend(extension(x, sample)?);
            }
            Ok(acc)
        }
        PropertyExpr::Not(x) => {
            let inner = extension(x, sample)?;
            Ok((0..sample.len()).filter(|i| !inner.contains(i)).collect())
        }
    }
}

/// Result of comparing the two sides of one lattice law on a sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawCheck {
    pub law: String,
    pub states_checked: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BooleanLawReport {
    /// How many sampled states satisfy each atom.
    pub atom_true_counts: Vec<usize>,
    pub laws: Vec<LawCheck>,
    pub all_hold: bool,
}

/// The Boolean laws over three atoms, as `(name, lhs, rhs)`.
pub fn boolean_laws(p: &SimpleProperty, q: &SimpleProperty, r: &SimpleProperty) -> Vec<(&'static str, PropertyExpr, PropertyExpr)> {
    use PropertyExpr as E;
    let (p, q, r) = (E::atom(p.clone()), E::atom(q.clone()), E::atom(r.clone()));
    vec![
        ("commutativity of and", E::and(p.clone(), q.clone()), E::and(q.clone(), p.clone())),
        ("commutativity of or", E::or(p.clone(), q.clone()), E::or(q.clone(), p.clone())),
        (
            "associativity of and",
            E::and(E::and(p.clone(), q.clone()), r.clone()),
            E::and(p.clone(), E::and(q.clone(), r.clone())),
        ),
        (
            "associativity of or",
            E::or(E::or(p.clone(), q.clone()), r.clone()),
            E::or(p.clone(), E::or(q.clone(), r.clone())),
        ),
        (
            "distributivity of and over or",
            E::and(p.clone(), E::or(q.clone(), r.clone())),
            E::or(E::and(p.clone(), q.clone()), E::and(p.clone(), r.clone())),
        ),
        (
            "distributivity of or over and",
            E::or(p.clone(), E::and(q.clone(), r.clone())),
            E::and(E::or(p.clone(), q.clone()), E::or(p.clone(), r.clone())),
        ),
        (
            "de morgan (not and)",
            E::not(E::and(p.clone(), q.clone())),
            E::or(E::not(p.clone()), E::not(q.clone())),
        ),
        (
            "de morgan (not or)",
            E::not(E::or(p.clone(), q.clone())),
            E::and(E::not(p.clone()), E::not(q.clone())),
        ),
        ("double negation", E::not(E::not(p.clone())), p.clone()),
        ("absorption", E::and(p.clone(), E::or(p.clone(), q.clone())), p),
    ]
}

/// Checks every law of [`boolean_laws`] pointwise on `sample`.
pub fn check_boolean_laws(
    atoms: [&SimpleProperty; 3],
    sample: &[StateOperator],
) -> Result<BooleanLawReport> {
    let atom_true_counts = atoms
        .iter()
        .map(|a| sample.iter().map(|t| a.holds(t)).filter(|r| matches!(r, Ok(true))).count())
        .collect();
    let mut laws = Vec::new();
    for (name, lhs, rhs) in boolean_laws(atoms[0], atoms[1], atoms[2]) {
        let mut violations = 0;
        for t in sample {
            if eval_expr(&lhs, t)? != eval_expr(&rhs, t)? {
                violations += 1;
            }
        }
        laws.push(LawCheck { law: name.to_string(), states_checked: sample.len(), violations });
    }
    let all_hold = laws.iter().all(|l| l.violations == 0);
    Ok(BooleanLawReport { atom_true_counts, laws, all_hold })
}

/// Projection onto the intersection of the ranges.
pub fn projection_meet(p: &FaceHandle, q: &FaceHandle) -> Result<FaceHandle> {
    face_meet(p, q)
}

/// Projection onto the span of the ranges.
pub fn projection_join(p: &FaceHandle, q: &FaceHandle) -> Result<FaceHandle> {
    face_join(p, q)
}

/// Both sides of `P ∧ (Q ∨ R) = (P ∧ Q) ∨ (P ∧ R)` in the projection lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributivityCheck {
    pub join_qr_rank: usize,
    pub meet_pq_rank: usize,
    pub meet_pr_rank: usize,
    pub lhs: FaceHandle,
    pub rhs: FaceHandle,
    pub lhs_rank: usize,
    pub rhs_rank: usize,
    pub distributive: bool,
}

pub fn check_distributivity(p: &FaceHandle, q: &FaceHandle, r: &FaceHandle) -> Result<DistributivityCheck> {
    let join_qr = projection_join(q, r)?;
    let meet_pq = projection_meet(p, q)?;
    let meet_pr = projection_meet(p, r)?;
    let lhs = projection_meet(p, &join_qr)?;
    let rhs = projection_join(&meet_pq, &meet_pr)?;
    let distributive = lhs.projection().max_abs_diff(rhs.projection()) <= EQ_TOL;
    Ok(DistributivityCheck {
        join_qr_rank: join_qr.rank(),
        meet_pq_rank: meet_pq.rank(),
        meet_pr_rank: meet_pr.rank(),
        lhs_rank: lhs.rank(),
        rhs_rank: rhs.rank(),
        lhs,
        rhs,
        distributive,
    })
}

/// The qubit triple |0⟩⟨0|, |+⟩⟨+|, |−⟩⟨−|.
pub fn qubit_witness_triple() -> [FaceHandle; 3] {
    use crate::kernel::DenseMatrix;
    let p = DenseMatrix::from_diag(&[1.0, 0.0]).expect("finite");
    let plus = DenseMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).expect("finite");
    let minus = DenseMatrix::from_real_rows(&[&[0.5, -0.5], &[-0.5, 0.5]]).expect("finite");
    [p, plus, minus].map(|m| FaceHandle::from_projection(m).expect("projection"))
}
