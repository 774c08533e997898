//! Random operators for tests, property suites and the demo commands.
//!
//! All samplers take an explicit generator so results are reproducible from
//! a seed.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::kernel::{vec_norm, DenseMatrix};
use crate::state_space::StateOperator;

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Matrix with i.i.d. complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DenseMatrix {
    let data = (0..dim * dim).map(|_| complex_gaussian(rng)).collect();
    DenseMatrix::new(dim, data).expect("gaussian entries are finite")
}

pub fn hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DenseMatrix {
    ginibre(dim, rng).hermitian_part()
}

/// Haar-distributed unit vector.
pub fn unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        let n = vec_norm(&v);
        if n > 1e-6 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

/// Uniform point on the unit 2-sphere.
pub fn unit_3vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-6 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Orthonormal columns obtained by Gram-Schmidt on Gaussian vectors.
pub fn orthonormal_vectors<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Vec<Vec<Complex64>> {
    assert!(count <= dim);
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(count);
    while out.len() < count {
        let mut v: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        for _ in 0..2 {
            for u in &out {
                let proj: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let n = vec_norm(&v);
        if n > 1e-6 {
            out.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    out
}

/// Haar-random unitary.
pub fn unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DenseMatrix {
    let cols = orthonormal_vectors(dim, dim, rng);
    let data = (0..dim).flat_map(|r| cols.iter().map(move |c| c[r])).collect();
    DenseMatrix::new(dim, data).expect("finite")
}

/// Orthogonal projection onto the span of the given orthonormal vectors.
pub fn projection_onto(dim: usize, vectors: &[Vec<Complex64>]) -> DenseMatrix {
    let mut p = DenseMatrix::zeros(dim);
    for v in vectors {
        p = p.add(&DenseMatrix::outer(v).expect("finite")).expect("same dim");
    }
    p
}

/// Random rank-`rank` projection.
pub fn projection<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DenseMatrix {
    projection_onto(dim, &orthonormal_vectors(dim, rank, rng))
}

/// Random pure state |ψ⟩⟨ψ|.
pub fn pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateOperator {
    StateOperator::pure(&unit_vector(dim, rng)).expect("unit vector")
}

/// Random full-rank state from the Hilbert-Schmidt ensemble.
pub fn mixed_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateOperator {
    let g = ginibre(dim, rng);
    let m = g.matmul(&g.adjoint()).expect("same dim");
    let tr = m.trace().re;
    StateOperator::new(m.scale_real(1.0 / tr)).expect("Gram matrix is a state")
}

/// Random state of the given rank with every nonzero eigenvalue at least
/// `min_eigenvalue`.
pub fn state_with_rank<R: Rng + ?Sized>(dim: usize, rank: usize, min_eigenvalue: f64, rng: &mut R) -> StateOperator {
    assert!(rank >= 1 && rank <= dim && min_eigenvalue * rank as f64 <= 1.0);
    let raw: Vec<f64> = (0..rank).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let free = 1.0 - min_eigenvalue * rank as f64;
    let vecs = orthonormal_vectors(dim, rank, rng);
    let mut m = DenseMatrix::zeros(dim);
    for (v, x) in vecs.iter().zip(&raw) {
        let w = min_eigenvalue + free * x / total;
        m = m.add(&DenseMatrix::outer(v).expect("finite").scale_real(w)).expect("same dim");
    }
    StateOperator::new(m).expect("positive combination of projectors")
}

/// Random state supported inside the range of projection `p`.
pub fn state_in_projection<R: Rng + ?Sized>(p: &DenseMatrix, rng: &mut R) -> StateOperator {
    let g = ginibre(p.dim(), rng);
    let m = g.matmul(&g.adjoint()).expect("same dim").conjugate_by(p).expect("same dim");
    let tr = m.trace().re;
    StateOperator::new(m.scale_real(1.0 / tr).hermitian_part()).expect("compressed Gram matrix is a state")
}
