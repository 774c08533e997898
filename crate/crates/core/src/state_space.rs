//! The convex set of state operators and its faces.
//!
//! A face of the state space is identified with the projection onto the
//! subspace its members live in: `T` belongs to the face of `P` exactly when
//! `T = P·T·P`. The smallest face containing a state is the face of its
//! support projection, and the extremal states are the rank-one projectors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kernel::{hermitian_eig, inner, vec_norm, DenseMatrix, HermitianEigensystem, HERMITIAN_TOL, PSD_TOL};

/// Allowed deviation of the trace from 1.
pub const TRACE_TOL: f64 = 1e-9;

/// Eigenvalues above this count towards the rank of a state.
pub const RANK_TOL: f64 = 1e-9;

/// Max-entry distance under which two operators are considered equal.
pub const EQ_TOL: f64 = 1e-9;

const MIN_VECTOR_NORM: f64 = 1e-12;

/// A positive, unit-trace Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct StateOperator {
    matrix: DenseMatrix,
    tol: f64,
    eigen: HermitianEigensystem,
}

/// What a repairing constructor changed to make its input valid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Repair {
    pub min_eigenvalue_before: f64,
    pub trace_before: f64,
    /// Total weight of the negative eigenvalues that were set to zero.
    pub clipped_mass: f64,
    pub max_entry_change: f64,
}

impl StateOperator {
    /// Validates with the default positivity tolerance.
    pub fn new(m: DenseMatrix) -> Result<Self> {
        Self::with_tolerance(m, PSD_TOL)
    }

    /// Validates `m` as a state operator. Near-valid inputs are rejected;
    /// see [`StateOperator::repair`] for the clipping alternative.
    pub fn with_tolerance(m: DenseMatrix, tol: f64) -> Result<Self> {
        let asym = m.max_asymmetry();
        if asym > HERMITIAN_TOL {
            return Err(Error::NotHermitian { max_asymmetry: asym });
        }
        let matrix = m.hermitian_part();
        let eigen = hermitian_eig(&matrix)?;
        let min = eigen.min_eigenvalue();
        if min < -tol {
            return Err(Error::NotPositive { min_eigenvalue: min, tol });
        }
        let trace = matrix.trace().re;
        let deviation = (trace - 1.0).abs();
        if deviation > TRACE_TOL {
            return Err(Error::TraceViolation { trace, deviation });
        }
        Ok(Self { matrix, tol, eigen })
    }

    /// Clips negative eigenvalues to zero and rescales to unit trace,
    /// reporting the correction. Non-Hermitian input is still rejected.
    pub fn repair(m: DenseMatrix, tol: f64) -> Result<(Self, Repair)> {
        let asym = m.max_asymmetry();
        if asym > HERMITIAN_TOL {
            return Err(Error::NotHermitian { max_asymmetry: asym });
        }
        let h = m.hermitian_part();
        let eigen = hermitian_eig(&h)?;
        let trace_before = h.trace().re;
        let clipped_mass: f64 = eigen.eigenvalues.iter().filter(|&&x| x < 0.0).map(|x| -x).sum();
        let kept: f64 = eigen.eigenvalues.iter().map(|&x| x.max(0.0)).sum();
        if kept <= 0.0 {
            return Err(Error::TraceViolation { trace: kept, deviation: (kept - 1.0).abs() });
        }
        let fixed = eigen.spectral_map(|x| x.max(0.0) / kept);
        let repair = Repair {
            min_eigenvalue_before: eigen.min_eigenvalue(),
            trace_before,
            clipped_mass,
            max_entry_change: fixed.max_abs_diff(&m),
        };
        Ok((Self::with_tolerance(fixed, tol)?, repair))
    }

    /// |ψ⟩⟨ψ| for ψ = v/‖v‖.
    pub fn pure(v: &[Complex64]) -> Result<Self> {
        let norm = vec_norm(v);
        if norm <= MIN_VECTOR_NORM {
            return Err(Error::ZeroVector { norm });
        }
        let psi: Vec<Complex64> = v.iter().map(|z| z / norm).collect();
        Self::new(DenseMatrix::outer(&psi)?)
    }

    /// The maximally mixed state I/d.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self::new(DenseMatrix::identity(dim).scale_real(1.0 / dim as f64)).expect("I/d is a state")
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn eigen(&self) -> &HermitianEigensystem {
        &self.eigen
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.eigenvalues
    }

    pub fn rank(&self) -> usize {
        self.rank_with(RANK_TOL)
    }

    pub fn rank_with(&self, rank_tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&x| x > rank_tol).count()
    }

    /// tr T².
    pub fn purity(&self) -> f64 {
        self.eigenvalues().iter().map(|x| x * x).sum()
    }

    /// Max-entry distance to another state.
    pub fn distance(&self, other: &Self) -> f64 {
        self.matrix.max_abs_diff(&other.matrix)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    /// U·T·U†, revalidated.
    pub fn evolve(&self, u: &DenseMatrix) -> Result<Self> {
        Self::with_tolerance(self.matrix.conjugate_by(u)?, self.tol)
    }
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    #[serde(flatten)]
    matrix: DenseMatrix,
    #[serde(default = "default_tol")]
    tol: f64,
}

fn default_tol() -> f64 {
    PSD_TOL
}

impl Serialize for StateOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        StateRepr { matrix: self.matrix.clone(), tol: self.tol }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StateOperator {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = StateRepr::deserialize(deserializer)?;
        StateOperator::with_tolerance(repr.matrix, repr.tol).map_err(serde::de::Error::custom)
    }
}

/// A face of the state space, carried by its projection.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceHandle {
    projection: DenseMatrix,
    rank: usize,
}

impl FaceHandle {
    /// Validates `p` as an orthogonal projection. The zero projection is
    /// accepted and stands for the empty face.
    pub fn from_projection(p: DenseMatrix) -> Result<Self> {
        let asym = p.max_asymmetry();
        if asym > EQ_TOL {
            return Err(Error::NotProjection(format!("asymmetry {asym:e}")));
        }
        let idem = p.matmul(&p)?.max_abs_diff(&p);
        if idem > EQ_TOL {
            return Err(Error::NotProjection(format!("|P\u{b2} - P| = {idem:e}")));
        }
        let tr = p.trace().re;
        let rank = tr.round();
        if (tr - rank).abs() > EQ_TOL || rank < 0.0 {
            return Err(Error::NotProjection(format!("non-integer trace {tr}")));
        }
        Ok(Self { projection: p.hermitian_part(), rank: rank as usize })
    }

    /// The whole state space.
    pub fn full(dim: usize) -> Self {
        Self { projection: DenseMatrix::identity(dim), rank: dim }
    }

    /// The empty face.
    pub fn empty(dim: usize) -> Self {
        Self { projection: DenseMatrix::zeros(dim), rank: 0 }
    }

    fn from_eigen_selection(eigen: &HermitianEigensystem, keep: impl Fn(f64) -> bool) -> Self {
        let rank = eigen.eigenvalues.iter().filter(|&&x| keep(x)).count();
        Self { projection: eigen.projection_where(keep), rank }
    }

    pub fn projection(&self) -> &DenseMatrix {
        &self.projection
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.projection.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.rank == 0
    }

    fn ensure_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: dim });
        }
        Ok(())
    }
}

impl Serialize for FaceHandle {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.projection.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FaceHandle {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let p = DenseMatrix::deserialize(deserializer)?;
        FaceHandle::from_projection(p).map_err(serde::de::Error::custom)
    }
}

/// Projection onto the range of `t`: the smallest face containing it.
pub fn support_projection(t: &StateOperator) -> FaceHandle {
    support_projection_with(t, RANK_TOL)
}

pub fn support_projection_with(t: &StateOperator, rank_tol: f64) -> FaceHandle {
    FaceHandle::from_eigen_selection(t.eigen(), |x| x > rank_tol)
}

/// `t` lies in face `f` iff `t = P·t·P`.
pub fn face_contains(f: &FaceHandle, t: &StateOperator) -> Result<bool> {
    f.ensure_dim(t.dim())?;
    let compressed = t.matrix().conjugate_by(f.projection())?;
    Ok(compressed.max_abs_diff(t.matrix()) <= EQ_TOL)
}

/// Face inclusion `f1 ⊆ f2`, decided by range inclusion `P₂P₁P₂ = P₁`.
pub fn face_leq(f1: &FaceHandle, f2: &FaceHandle) -> Result<bool> {
    f1.ensure_dim(f2.dim())?;
    let sandwiched = f1.projection().conjugate_by(f2.projection())?;
    Ok(sandwiched.max_abs_diff(f1.projection()) <= EQ_TOL)
}

/// Intersection of two faces: the projection onto the intersection of the
/// ranges, read off the null space of `(I − P₁) + (I − P₂)`.
pub fn face_meet(f1: &FaceHandle, f2: &FaceHandle) -> Result<FaceHandle> {
    f1.ensure_dim(f2.dim())?;
    let id = DenseMatrix::identity(f1.dim());
    let m = id.sub(f1.projection())?.add(&id.sub(f2.projection())?)?;
    let eigen = hermitian_eig(&m)?;
    Ok(FaceHandle::from_eigen_selection(&eigen, |x| x <= RANK_TOL))
}

/// Smallest face containing both: the projection onto the span of the ranges.
pub fn face_join(f1: &FaceHandle, f2: &FaceHandle) -> Result<FaceHandle> {
    f1.ensure_dim(f2.dim())?;
    let eigen = hermitian_eig(&f1.projection().add(f2.projection())?)?;
    Ok(FaceHandle::from_eigen_selection(&eigen, |x| x > RANK_TOL))
}

/// Rank-one test: extremal states are exactly the pure ones.
pub fn is_extremal(t: &StateOperator) -> bool {
    let ev = t.eigenvalues();
    ev.len() < 2 || ev[ev.len() - 2] <= RANK_TOL
}

/// Σ wᵢ·Tᵢ for nonnegative weights summing to one.
pub fn convex_combine(parts: &[(f64, StateOperator)]) -> Result<StateOperator> {
    let (_, first) = parts.first().ok_or(Error::WeightSum { sum: 0.0 })?;
    let dim = first.dim();
    let mut sum_w = 0.0;
    let mut acc = DenseMatrix::zeros(dim);
    let mut tol = 0.0f64;
    for (w, t) in parts {
        if !(w.is_finite() && *w >= 0.0) {
            return Err(Error::InvalidWeight { weight: *w });
        }
        if t.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: t.dim() });
        }
        sum_w += w;
        tol = tol.max(t.tol());
        acc = acc.add(&t.matrix().scale_real(*w))?;
    }
    if (sum_w - 1.0).abs() > 1e-12 {
        return Err(Error::WeightSum { sum: sum_w });
    }
    StateOperator::with_tolerance(acc, tol)
}

/// Largest `w` with `t2 − w·t1` positive; zero exactly when `t1` is not a
/// convex component of `t2`.
///
/// With `S` the pseudo-inverse square root of `t2` on its support, the
/// answer is `1/λ_max(S·t1·S)` provided the support of `t1` sits inside the
/// support of `t2`.
pub fn max_component_weight(t1: &StateOperator, t2: &StateOperator) -> Result<f64> {
    if t1.dim() != t2.dim() {
        return Err(Error::DimensionMismatch { expected: t2.dim(), found: t1.dim() });
    }
    if !face_leq(&support_projection(t1), &support_projection(t2))? {
        return Ok(0.0);
    }
    let s = t2.eigen().spectral_map(|x| if x > RANK_TOL { 1.0 / x.sqrt() } else { 0.0 });
    let sandwich = t1.matrix().conjugate_by(&s)?;
    let lambda_max = hermitian_eig(&sandwich.hermitian_part())?.max_eigenvalue();
    if lambda_max <= 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 / lambda_max).min(1.0))
}

/// `max_k ⟨k|t1|k⟩ / ⟨k|t2|k⟩` over an orthonormal set.
///
/// Terms where both sides vanish are skipped; a vanishing denominator
/// under a nonzero numerator makes the ratio infinite. Without an explicit
/// basis the full eigenbasis of `t2` is used, kernel directions included,
/// so mass of `t1` outside the support of `t2` shows up as infinity.
pub fn sup_ratio(t1: &StateOperator, t2: &StateOperator, basis: Option<&[Vec<Complex64>]>) -> Result<f64> {
    if t1.dim() != t2.dim() {
        return Err(Error::DimensionMismatch { expected: t2.dim(), found: t1.dim() });
    }
    const VANISH: f64 = 1e-12;
    let default_basis;
    let basis = match basis {
        Some(b) => {
            validate_orthonormal(b, t2.dim())?;
            b
        }
        None => {
            default_basis = (0..t2.dim()).map(|k| t2.eigen().vector(k)).collect::<Vec<_>>();
            &default_basis[..]
        }
    };
    let mut sup = 0.0f64;
    for k in basis {
        let num = t1.matrix().expectation_in(k)?.re;
        let den = t2.matrix().expectation_in(k)?.re;
        match (num > VANISH, den > VANISH) {
            (false, false) => continue,
            (true, false) => return Ok(f64::INFINITY),
            _ => sup = sup.max(num / den),
        }
    }
    Ok(sup)
}

/// Checks that `vectors` are orthonormal within [`EQ_TOL`] in `C^dim`.
pub fn validate_orthonormal(vectors: &[Vec<Complex64>], dim: usize) -> Result<()> {
    if vectors.is_empty() || vectors.len() > dim {
        return Err(Error::InvalidBasis(format!("{} vectors in dimension {dim}", vectors.len())));
    }
    for (i, u) in vectors.iter().enumerate() {
        if u.len() != dim {
            return Err(Error::InvalidBasis(format!("vector {i} has length {}", u.len())));
        }
        for (j, v) in vectors.iter().enumerate().skip(i) {
            let expect = if i == j { 1.0 } else { 0.0 };
            let dev = (inner(u, v) - Complex64::new(expect, 0.0)).norm();
            if dev > EQ_TOL {
                return Err(Error::InvalidBasis(format!("<{i}|{j}> deviates by {dev:e}")));
            }
        }
    }
    Ok(())
}

/// Which basis a [`ComponentReport`] used for its ratio diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisLabel {
    Eigen,
    Custom,
}

/// Convex-component analysis of one state relative to another.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentReport {
    pub max_weight: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub sup_ratio: f64,
    pub basis_used: BasisLabel,
    pub is_component: bool,
}

/// Serializes `+∞` as the string `"infinity"`; JSON has no infinite number.
pub fn serialize_extended<S: Serializer>(x: &f64, serializer: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_infinite() {
        serializer.serialize_str(if *x > 0.0 { "infinity" } else { "-infinity" })
    } else {
        serializer.serialize_f64(*x)
    }
}

pub fn component_report(
    t1: &StateOperator,
    t2: &StateOperator,
    basis: Option<&[Vec<Complex64>]>,
) -> Result<ComponentReport> {
    let max_weight = max_component_weight(t1, t2)?;
    let sup_ratio = sup_ratio(t1, t2, basis)?;
    Ok(ComponentReport {
        max_weight,
        sup_ratio,
        basis_used: if basis.is_some() { BasisLabel::Custom } else { BasisLabel::Eigen },
        is_component: max_weight > 0.0,
    })
}
