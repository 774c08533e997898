#![allow(dead_code)]

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statespace::random;
use statespace::preparation::NodeKind;
use statespace::{DenseMatrix, PreparationNode, StateOperator};

pub const LABELS: [&str; 4] = ["a", "b", "c", "d"];

pub fn random_tree(d: usize, depth: usize, rng: &mut ChaCha8Rng) -> PreparationNode {
    if depth == 0 || rng.random_bool(0.3) {
        let label = LABELS[rng.random_range(0..LABELS.len())];
        let state = if rng.random_bool(0.5) { random::pure_state(d, rng) } else { random::mixed_state(d, rng) };
        return PreparationNode::leaf(label, state);
    }
    let k = rng.random_range(2..4);
    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = raw.iter().sum();
    PreparationNode::mix(raw.iter().map(|x| (x / total, random_tree(d, depth - 1, rng))).collect()).unwrap()
}

/// Shuffles children at every level, keeping the shape.
pub fn permute(node: &PreparationNode, rng: &mut ChaCha8Rng) -> PreparationNode {
    match node.kind() {
        NodeKind::Leaf { .. } => node.clone(),
        NodeKind::Mix(children) => {
            let mut children: Vec<(f64, PreparationNode)> =
                children.iter().map(|(w, c)| (*w, permute(c, rng))).collect();
            children.shuffle(rng);
            PreparationNode::mix(children).unwrap()
        }
    }
}

/// Shuffles the flattened leaves and regroups them into a fresh two-level tree.
pub fn reassociate(node: &PreparationNode, rng: &mut ChaCha8Rng) -> PreparationNode {
    let mut leaves: Vec<(f64, String, StateOperator)> =
        node.leaves().into_iter().map(|(w, l, s)| (w, l.to_string(), s.clone())).collect();
    leaves.shuffle(rng);
    if leaves.len() == 1 {
        let (_, l, s) = leaves.pop().unwrap();
        return PreparationNode::leaf(l, s);
    }
    let mut groups: Vec<Vec<(f64, String, StateOperator)>> = Vec::new();
    for leaf in leaves {
        match groups.last_mut() {
            Some(g) if rng.random_bool(0.5) => g.push(leaf),
            _ => groups.push(vec![leaf]),
        }
    }
    let children = groups
        .into_iter()
        .map(|g| {
            let total: f64 = g.iter().map(|(w, _, _)| w).sum();
            let sub = g.into_iter().map(|(w, l, s)| ((w / total).min(1.0), PreparationNode::leaf(l, s))).collect();
            (total.min(1.0), PreparationNode::mix(sub).unwrap())
        })
        .collect();
    PreparationNode::mix(children).unwrap()
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Plain row-major product, independent of the library's matmul.
pub fn naive_matmul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = a.len();
    let mut out = vec![vec![c(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn naive_kron(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let (m, n) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); m * n]; m * n];
    for i in 0..m {
        for j in 0..m {
            for k in 0..n {
                for l in 0..n {
                    out[i * n + k][j * n + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn naive_trace(a: &[Vec<Complex64>]) -> Complex64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

/// x·σ written out entrywise.
pub fn spin(x: [f64; 3]) -> Vec<Vec<Complex64>> {
    vec![vec![c(x[2], 0.0), c(x[0], -x[1])], vec![c(x[0], x[1]), c(-x[2], 0.0)]]
}

pub fn to_rows(m: &DenseMatrix) -> Vec<Vec<Complex64>> {
    (0..m.dim()).map(|i| (0..m.dim()).map(|j| m[(i, j)]).collect()).collect()
}

/// Cholesky test for A + shift·I ⪰ 0.
pub fn cholesky_psd(a: &[Vec<Complex64>], shift: f64) -> bool {
    let n = a.len();
    let mut l = vec![vec![c(0.0, 0.0); n]; n];
    for j in 0..n {
        let mut d = a[j][j].re + shift;
        for k in 0..j {
            d -= l[j][k].norm_sqr();
        }
        if d.is_nan() || d <= 0.0 {
            return false;
        }
        let d = d.sqrt();
        l[j][j] = c(d, 0.0);
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k].conj();
            }
            l[i][j] = s / d;
        }
    }
    true
}

/// Largest w in [0, 1] with t2 − w·t1 ⪰ 0, by bisection on a Cholesky test.
pub fn bisection_weight(t1: &DenseMatrix, t2: &DenseMatrix, shift: f64) -> f64 {
    let (a, b) = (to_rows(t1), to_rows(t2));
    let feasible = |w: f64| {
        let m: Vec<Vec<Complex64>> =
            (0..a.len()).map(|i| (0..a.len()).map(|j| b[i][j] - a[i][j] * w).collect()).collect();
        cholesky_psd(&m, shift)
    };
    if feasible(1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
