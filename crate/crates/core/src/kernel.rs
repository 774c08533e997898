//! Dense complex linear algebra for small operators.
//!
//! Everything here works on square row-major matrices of [`Complex64`].
//! The Hermitian eigensolver is a cyclic complex Jacobi iteration, which is
//! slow for large `d` but very accurate for the handful of dimensions the
//! rest of the crate needs.

use std::fmt;
use std::ops::Index;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexScalar = Complex64;

/// Largest dimension a tensor product may produce unless overridden by
/// the `STATESPACE_MAX_DIM` environment variable.
pub const DEFAULT_MAX_DIM: usize = 4096;

/// Max-entry asymmetry accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Default absolute tolerance for positivity checks.
pub const PSD_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Configured maximum dimension for tensor products.
pub fn max_dim() -> usize {
    static MAX: OnceLock<usize> = OnceLock::new();
    *MAX.get_or_init(|| {
        std::env::var("STATESPACE_MAX_DIM")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v >= 1)
            .unwrap_or(DEFAULT_MAX_DIM)
    })
}

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries, rejecting empty or
    /// non-finite input.
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("dimension must be at least 1".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::Shape(format!(
                "expected {} entries for dimension {dim}, got {}",
                dim * dim,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { row: k / dim, col: k % dim });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::Shape(format!(
                "row of length {} in a {dim}-row matrix",
                r.len()
            )));
        }
        Self::new(dim, rows.concat())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Self { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Diagonal matrix with real entries.
    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        let dim = diag.len();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (i, &x) in diag.iter().enumerate() {
            data[i * dim + i] = Complex64::new(x, 0.0);
        }
        Self::new(dim, data)
    }

    /// The unnormalized outer product |v⟩⟨v|.
    pub fn outer(v: &[Complex64]) -> Result<Self> {
        let dim = v.len();
        let mut data = Vec::with_capacity(dim * dim);
        for a in v {
            for b in v {
                data.push(a * b.conj());
            }
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks(self.dim)
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.dim).map(|r| self.get(r, col)).collect()
    }

    fn ensure_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut data = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                data.push(self.data[j * d + i].conj());
            }
        }
        Self { dim: d, data }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.ensure_same_dim(other)?;
        let d = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let row = &other.data[k * d..(k + 1) * d];
                for (out, b) in data[i * d..(i + 1) * d].iter_mut().zip(row) {
                    *out += a * b;
                }
            }
        }
        Ok(Self { dim: d, data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.ensure_same_dim(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { dim: self.dim, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.ensure_same_dim(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { dim: self.dim, data })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// `A·B·A†`, the congruence used for unitary evolution and sandwiches.
    pub fn conjugate_by(&self, a: &Self) -> Result<Self> {
        a.matmul(self)?.matmul(&a.adjoint())
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: v.len() });
        }
        Ok(self
            .rows()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// ⟨v|M|v⟩ for a (not necessarily normalized) vector.
    pub fn expectation_in(&self, v: &[Complex64]) -> Result<Complex64> {
        let mv = self.apply(v)?;
        Ok(v.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum())
    }

    /// Largest entrywise modulus of `self - other`; infinite when the
    /// dimensions differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let diff = (self.data[i * d + j] - self.data[j * d + i].conj()).norm();
                worst = worst.max(diff);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_asymmetry() <= tol
    }

    /// (M + M†)/2.
    pub fn hermitian_part(&self) -> Self {
        let d = self.dim;
        let mut out = self.clone();
        for i in 0..d {
            for j in 0..d {
                out.data[i * d + j] = (self.data[i * d + j] + self.data[j * d + i].conj()) * 0.5;
            }
        }
        out
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;

    fn index(&self, (row, col): (usize, usize)) -> &Complex64 {
        &self.data[row * self.dim + col]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix({}x{})", self.dim, self.dim)?;
        for row in self.rows() {
            let cells: Vec<String> =
                row.iter().map(|z| format!("{:+.6}{:+.6}i", z.re, z.im)).collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    dim: usize,
    entries: Vec<Vec<[f64; 2]>>,
}

impl Serialize for DenseMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            dim: self.dim,
            entries: self.rows().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DenseMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        if repr.entries.len() != repr.dim {
            return Err(serde::de::Error::custom(format!(
                "\"dim\" is {} but \"entries\" has {} rows",
                repr.dim,
                repr.entries.len()
            )));
        }
        let rows: Vec<Vec<Complex64>> = repr
            .entries
            .iter()
            .map(|r| r.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
            .collect();
        DenseMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Kronecker product with the configured dimension cap.
pub fn tensor_product(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    tensor_product_capped(a, b, max_dim())
}

/// Kronecker product: entry `(i·db + k, j·db + l)` is `a[i,j]·b[k,l]`.
pub fn tensor_product_capped(a: &DenseMatrix, b: &DenseMatrix, cap: usize) -> Result<DenseMatrix> {
    let (da, db) = (a.dim, b.dim);
    let dim = da
        .checked_mul(db)
        .ok_or(Error::DimensionOverflow { dim: usize::MAX, max: cap })?;
    if dim > cap {
        return Err(Error::DimensionOverflow { dim, max: cap });
    }
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..da {
        for j in 0..da {
            let aij = a.data[i * da + j];
            for k in 0..db {
                let row = (i * db + k) * dim + j * db;
                for l in 0..db {
                    data[row + l] = aij * b.data[k * db + l];
                }
            }
        }
    }
    Ok(DenseMatrix { dim, data })
}

/// Tensor product of two vectors.
pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Which tensor factor of a bipartite operator to trace out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// Partial trace of an operator on `C^dA ⊗ C^dB` over one factor.
pub fn partial_trace(m: &DenseMatrix, dims: (usize, usize), over: Subsystem) -> Result<DenseMatrix> {
    let (da, db) = dims;
    let total = da.saturating_mul(db);
    if da == 0 || db == 0 || total != m.dim {
        return Err(Error::DimensionMismatch { expected: m.dim, found: total });
    }
    let d = m.dim;
    let zero = Complex64::new(0.0, 0.0);
    match over {
        Subsystem::B => {
            let mut data = vec![zero; da * da];
            for i in 0..da {
                for j in 0..da {
                    data[i * da + j] = (0..db).map(|k| m.data[(i * db + k) * d + j * db + k]).sum();
                }
            }
            DenseMatrix::new(da, data)
        }
        Subsystem::A => {
            let mut data = vec![zero; db * db];
            for k in 0..db {
                for l in 0..db {
                    data[k * db + l] = (0..da).map(|i| m.data[(i * db + k) * d + i * db + l]).sum();
                }
            }
            DenseMatrix::new(db, data)
        }
    }
}

/// Eigenvalues in ascending order with orthonormal eigenvectors stored as
/// the columns of `eigenvectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEigensystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

impl HermitianEigensystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// V·diag(f(λ))·V†.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let d = self.dim();
        let mut out = DenseMatrix::zeros(d);
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let w = f(lambda);
            if w == 0.0 {
                continue;
            }
            for i in 0..d {
                let vi = self.eigenvectors.get(i, k) * w;
                for j in 0..d {
                    out.data[i * d + j] += vi * self.eigenvectors.get(j, k).conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.spectral_map(|x| x)
    }

    /// Projection onto the span of eigenvectors whose eigenvalue satisfies
    /// `keep`.
    pub fn projection_where(&self, keep: impl Fn(f64) -> bool) -> DenseMatrix {
        self.spectral_map(|x| if keep(x) { 1.0 } else { 0.0 })
    }
}

/// Diagonalizes a Hermitian matrix.
///
/// Inputs within [`HERMITIAN_TOL`] of Hermitian are symmetrized first;
/// anything further off is rejected with the measured asymmetry.
pub fn hermitian_eig(m: &DenseMatrix) -> Result<HermitianEigensystem> {
    let asym = m.max_asymmetry();
    if asym > HERMITIAN_TOL {
        return Err(Error::NotHermitian { max_asymmetry: asym });
    }
    Ok(jacobi_eig(m.hermitian_part()))
}

fn jacobi_eig(mut a: DenseMatrix) -> HermitianEigensystem {
    let d = a.dim;
    let mut v = DenseMatrix::identity(d);
    let scale = a.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let threshold = (f64::EPSILON * scale).max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.data[i * d + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    let diag: Vec<f64> = (0..d).map(|i| a.data[i * d + i].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let mut vecs = DenseMatrix::zeros(d);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..d {
            vecs.data[r * d + new_col] = v.data[r * d + old_col];
        }
    }
    HermitianEigensystem { eigenvalues, eigenvectors: vecs }
}

// One complex Jacobi rotation zeroing a[p,q]. The rotation is G = D·R with
// D = diag(1, e^{-iφ}) removing the phase of a[p,q] and R the real rotation
// that diagonalizes the resulting real symmetric 2×2 block.
fn rotate(a: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize) {
    let d = a.dim;
    let apq = a.data[p * d + q];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r;
    let app = a.data[p * d + p].re;
    let aqq = a.data[q * d + q].re;
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let ph = phase.conj();
    let g_pp = Complex64::new(c, 0.0);
    let g_pq = Complex64::new(s, 0.0);
    let g_qp = ph * (-s);
    let g_qq = ph * c;

    // A ← A·G
    for k in 0..d {
        let akp = a.data[k * d + p];
        let akq = a.data[k * d + q];
        a.data[k * d + p] = akp * g_pp + akq * g_qp;
        a.data[k * d + q] = akp * g_pq + akq * g_qq;
    }
    // A ← G†·A
    for k in 0..d {
        let apk = a.data[p * d + k];
        let aqk = a.data[q * d + k];
        a.data[p * d + k] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a.data[q * d + k] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a.data[p * d + q] = Complex64::new(0.0, 0.0);
    a.data[q * d + p] = Complex64::new(0.0, 0.0);
    a.data[p * d + p].im = 0.0;
    a.data[q * d + q].im = 0.0;

    for k in 0..d {
        let vkp = v.data[k * d + p];
        let vkq = v.data[k * d + q];
        v.data[k * d + p] = vkp * g_pp + vkq * g_qp;
        v.data[k * d + q] = vkp * g_pq + vkq * g_qq;
    }
}

/// Outcome of a positivity test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdCheck {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

/// Positive semidefiniteness up to an absolute eigenvalue tolerance.
pub fn psd_check(m: &DenseMatrix, tol: f64) -> Result<PsdCheck> {
    let eig = hermitian_eig(m)?;
    let min_eigenvalue = eig.min_eigenvalue();
    Ok(PsdCheck { is_psd: min_eigenvalue >= -tol, min_eigenvalue })
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ⟨a|b⟩.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Hermitian matrix `x·σx + y·σy + z·σz` for a real 3-vector.
pub fn pauli_dot(n: [f64; 3]) -> DenseMatrix {
    let [x, y, z] = n;
    DenseMatrix {
        dim: 2,
        data: vec![
            Complex64::new(z, 0.0),
            Complex64::new(x, -y),
            Complex64::new(x, y),
            Complex64::new(-z, 0.0),
        ],
    }
}

pub fn pauli_x() -> DenseMatrix {
    pauli_dot([1.0, 0.0, 0.0])
}

pub fn pauli_y() -> DenseMatrix {
    pauli_dot([0.0, 1.0, 0.0])
}

pub fn pauli_z() -> DenseMatrix {
    pauli_dot([0.0, 0.0, 1.0])
}
