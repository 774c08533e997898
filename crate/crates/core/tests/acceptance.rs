//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{c, naive_kron, naive_matmul, naive_trace, spin};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statespace::kernel::{partial_trace, pauli_x, pauli_y, pauli_z, tensor_product};
use statespace::measurement::{
    anticorrelated_gemenge, chsh_value, distinguishability_demo, expectation, run_ensemble_parallel, sampled_chsh,
    singlet,
};
use statespace::properties::{
    average_property, check_boolean_laws, check_distributivity, eval_expr, projection_join, projection_meet,
    qubit_witness_triple, Evaluator,
};
use statespace::random;
use statespace::state_space::{face_contains, face_leq, is_extremal, max_component_weight, sup_ratio, support_projection};
use statespace::{ChshConfig, DenseMatrix, FaceHandle, Observable, PreparationNode, PropertyExpr, SimpleProperty, StateOperator, Subsystem};

const EPR_TOL: f64 = 1e-12;
const EPR_RUNTIME: Duration = Duration::from_millis(1);
const EXTREMAL_GAP: f64 = 1e-3;
const FACE_STATES_PER_PAIR: usize = 20;
const FACE_ORACLE_TOL: f64 = 1e-9;
const BOUND_SLACK: f64 = 1e-9;
const BISECTION_TOL: f64 = 1e-6;
const CHOLESKY_SHIFT: f64 = 1e-11;
const MIN_TREES: usize = 100;
const COMMUTE_TOL: f64 = 1e-10;
const LOCAL_TOL: f64 = 1e-12;
const TSIRELSON_TOL: f64 = 1e-9;
const CLASSICAL_BOUND: f64 = 2.0 + 1e-9;
const DEMO_RUNTIME: Duration = Duration::from_secs(1);
const MC_SAMPLES: u64 = 100_000;
const MC_SEEDS: [u64; 10] = [1, 2, 3, 5, 8, 13, 21, 34, 55, 89];
const MC_CHSH_TOL: f64 = 0.05;
const ENSEMBLE_RUNS: u64 = 100;
const ENSEMBLE_SAMPLES: u64 = 4000;
const ENSEMBLE_MIN_HITS: usize = 99;
const MC_RUNTIME: Duration = Duration::from_secs(30);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn epr_reduction() -> Outcome {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi = [0.0, h, -h, 0.0];
    let rows: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| psi[i] * psi[j]).collect()).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let projector = DenseMatrix::from_real_rows(&refs).unwrap();

    let start = Instant::now();
    let reduced = partial_trace(&projector, (2, 2), Subsystem::B).unwrap();
    let elapsed = start.elapsed();

    let mut err: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expect = if i == j { 0.5 } else { 0.0 };
            err = err.max((reduced[(i, j)] - c(expect, 0.0)).norm());
        }
    }
    outcome(
        err <= EPR_TOL && elapsed < EPR_RUNTIME,
        format!("max entry error {err:.1e} (tol {EPR_TOL:.0e}), {} us", elapsed.as_micros()),
    )
}

fn extremality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE47);
    let mut wrong = 0;
    for _ in 0..100 {
        let d = rng.random_range(1..=6);
        if !is_extremal(&random::pure_state(d, &mut rng)) {
            wrong += 1;
        }
    }
    for _ in 0..100 {
        let d = rng.random_range(2..=6);
        let rank = rng.random_range(2..=d);
        let t = random::state_with_rank(d, rank, EXTREMAL_GAP, &mut rng);
        if is_extremal(&t) {
            wrong += 1;
        }
    }
    outcome(wrong == 0, format!("{wrong} misclassifications in 200 states"))
}

// tr((I − P)·T) vanishes exactly when the PSD matrix T lives in the range of P.
fn outside_weight(p: &DenseMatrix, t: &StateOperator) -> f64 {
    let d = p.dim();
    let mut w = 0.0;
    for i in 0..d {
        for j in 0..d {
            let comp = if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) } - p[(i, j)];
            w += (comp * t.matrix()[(j, i)]).re;
        }
    }
    w
}

fn face_order() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xFACE);
    let (mut agree, mut nested) = (0, 0);
    for k in 0..50 {
        let d = rng.random_range(2..=6);
        let r2 = rng.random_range(1..=d);
        let basis = random::orthonormal_vectors(d, r2, &mut rng);
        let p2 = random::projection_onto(d, &basis);
        let p1 = if k % 2 == 0 {
            let r1 = rng.random_range(1..=r2);
            let u = random::unitary(r2, &mut rng);
            let rotated: Vec<Vec<Complex64>> = (0..r1)
                .map(|col| (0..d).map(|row| (0..r2).map(|m| basis[m][row] * u[(m, col)]).sum()).collect())
                .collect();
            random::projection_onto(d, &rotated)
        } else {
            random::projection(d, rng.random_range(1..=d), &mut rng)
        };
        let f1 = FaceHandle::from_projection(p1.clone()).unwrap();
        let f2 = FaceHandle::from_projection(p2.clone()).unwrap();
        let leq = face_leq(&f1, &f2).unwrap();
        let sampled: Vec<StateOperator> =
            (0..FACE_STATES_PER_PAIR).map(|_| random::state_in_projection(&p1, &mut rng)).collect();
        let oracle = sampled.iter().all(|t| outside_weight(&p2, t) <= FACE_ORACLE_TOL);
        let library = sampled.iter().all(|t| face_contains(&f2, t).unwrap());
        if leq == oracle && leq == library {
            agree += 1;
        }
        if oracle {
            nested += 1;
        }
    }
    outcome(agree == 50, format!("{agree}/50 pairs agree ({nested} nested, {} not)", 50 - nested))
}

fn component_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0);
    let (mut bound_fail, mut oracle_fail, mut worst) = (0, 0, 0.0f64);
    for k in 0..200 {
        let d = rng.random_range(1..=4);
        let t2 = random::state_with_rank(d, rng.random_range(1..=d), 0.02, &mut rng);
        let t1 = match k % 3 {
            0 => random::mixed_state(d, &mut rng),
            1 => random::state_in_projection(support_projection(&t2).projection(), &mut rng),
            _ => random::state_with_rank(d, rng.random_range(1..=d), 0.02, &mut rng),
        };
        let w = max_component_weight(&t1, &t2).unwrap();
        let ratio = sup_ratio(&t1, &t2, None).unwrap();
        if w > 1.0 / ratio + BOUND_SLACK {
            bound_fail += 1;
        }
        let oracle = common::bisection_weight(t1.matrix(), t2.matrix(), CHOLESKY_SHIFT);
        let diff = (w - oracle).abs();
        worst = worst.max(diff);
        if diff > BISECTION_TOL {
            oracle_fail += 1;
        }
    }
    outcome(
        bound_fail == 0 && oracle_fail == 0,
        format!("bound violations {bound_fail}/200, oracle mismatches {oracle_fail}/200, worst diff {worst:.1e}"),
    )
}

fn gemenge_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6E);
    let (mut invariant, mut commute, mut worst) = (0, 0, 0.0f64);
    let trees = MIN_TREES + 28;
    for _ in 0..trees {
        let a = common::random_tree(2, 3, &mut rng);
        let b = common::random_tree(2, 2, &mut rng);
        let shuffled = common::reassociate(&common::permute(&a, &mut rng), &mut rng);
        if a.leaf_decomposition().same_as(&shuffled.leaf_decomposition())
            && common::permute(&a, &mut rng).leaf_decomposition().same_as(&a.leaf_decomposition())
        {
            invariant += 1;
        }

        let u = random::unitary(2, &mut rng);
        let ta = a.resolve_state().unwrap();
        let tb = b.resolve_state().unwrap();
        let mut diffs = vec![a
            .evolve(&u)
            .unwrap()
            .resolve_state()
            .unwrap()
            .matrix()
            .max_abs_diff(&ta.matrix().conjugate_by(&u).unwrap())];
        let ab = PreparationNode::compose(&a, &b).unwrap();
        let tab = tensor_product(ta.matrix(), tb.matrix()).unwrap();
        diffs.push(ab.resolve_state().unwrap().matrix().max_abs_diff(&tab));
        for over in [Subsystem::A, Subsystem::B] {
            let reduced = ab.reduce_subsystem((2, 2), over).unwrap().resolve_state().unwrap();
            diffs.push(reduced.matrix().max_abs_diff(&partial_trace(&tab, (2, 2), over).unwrap()));
        }
        let m = diffs.into_iter().fold(0.0, f64::max);
        worst = worst.max(m);
        if m <= COMMUTE_TOL {
            commute += 1;
        }
    }
    outcome(
        invariant == trees && commute == trees,
        format!("{invariant}/{trees} canonical forms invariant, {commute}/{trees} commute (worst {worst:.1e})"),
    )
}

fn oracle_correlator(rho: &[Vec<Complex64>], x: [f64; 3], y: [f64; 3]) -> f64 {
    naive_trace(&naive_matmul(rho, &naive_kron(&spin(x), &spin(y)))).re
}

fn oracle_chsh(rho: &[Vec<Complex64>], cfg: &ChshConfig) -> f64 {
    oracle_correlator(rho, cfg.a, cfg.b) - oracle_correlator(rho, cfg.a, cfg.b_prime)
        + oracle_correlator(rho, cfg.a_prime, cfg.b)
        + oracle_correlator(rho, cfg.a_prime, cfg.b_prime)
}

fn local_vs_composite() -> Outcome {
    let cfg = ChshConfig::default();
    let start = Instant::now();
    let report = distinguishability_demo(&cfg).unwrap();
    let singlet_s = chsh_value(&singlet(), &cfg).unwrap();
    let gemenge_s = chsh_value(&anticorrelated_gemenge().resolve_state().unwrap(), &cfg).unwrap();
    let elapsed = start.elapsed();

    let rs = StateOperator::new(partial_trace(singlet().matrix(), (2, 2), Subsystem::B).unwrap()).unwrap();
    let rg = anticorrelated_gemenge().reduce_subsystem((2, 2), Subsystem::B).unwrap().resolve_state().unwrap();
    let local = [pauli_x(), pauli_y(), pauli_z()]
        .into_iter()
        .map(|m| {
            let obs = Observable::new(m).unwrap();
            (expectation(&obs, &rs).unwrap() - expectation(&obs, &rg).unwrap()).abs()
        })
        .fold(0.0, f64::max);
    let report_local = report.local.paulis.iter().map(|p| p.difference).fold(0.0, f64::max);

    let oracle_singlet = oracle_chsh(&common::to_rows(singlet().matrix()), &cfg);
    let diag = [0.0, 0.5, 0.5, 0.0];
    let rho_g: Vec<Vec<Complex64>> =
        (0..4).map(|i| (0..4).map(|j| c(if i == j { diag[i] } else { 0.0 }, 0.0)).collect()).collect();
    let oracle_gemenge = oracle_chsh(&rho_g, &cfg);
    let tsirelson = 2.0 * std::f64::consts::SQRT_2;

    let pass = local <= LOCAL_TOL
        && report_local <= LOCAL_TOL
        && report.locally_indistinguishable
        && report.composite_distinguishable
        && (singlet_s - tsirelson).abs() <= TSIRELSON_TOL
        && (oracle_singlet - tsirelson).abs() <= TSIRELSON_TOL
        && (report.exact.singlet.s - tsirelson).abs() <= TSIRELSON_TOL
        && gemenge_s.abs() <= CLASSICAL_BOUND
        && (gemenge_s - oracle_gemenge).abs() <= TSIRELSON_TOL
        && report.exact.gemenge.s.abs() <= CLASSICAL_BOUND
        && elapsed < DEMO_RUNTIME;
    outcome(
        pass,
        format!(
            "local diff {local:.1e}, S singlet {singlet_s:.10} (oracle {oracle_singlet:.10}), S gemenge {gemenge_s:.10}, {} ms",
            elapsed.as_millis()
        ),
    )
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let singlet_prep = PreparationNode::leaf("singlet", singlet());
    let gemenge = anticorrelated_gemenge();
    let base = ChshConfig::default();
    let exact_singlet = chsh_value(&singlet(), &base).unwrap();
    let exact_gemenge = chsh_value(&gemenge.resolve_state().unwrap(), &base).unwrap();
    let mut chsh_worst = 0.0f64;
    let mut chsh_hits = 0;
    for seed in MC_SEEDS {
        let cfg = ChshConfig { n_samples: MC_SAMPLES, seed: Some(seed), ..base.clone() };
        let ds = (sampled_chsh(&singlet_prep, &cfg, workers()).unwrap().s - exact_singlet).abs();
        let dg = (sampled_chsh(&gemenge, &cfg, workers()).unwrap().s - exact_gemenge).abs();
        chsh_worst = chsh_worst.max(ds).max(dg);
        if ds <= MC_CHSH_TOL && dg <= MC_CHSH_TOL {
            chsh_hits += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x3C);
    let mut hits = 0;
    let mut misses = Vec::new();
    for run in 0..ENSEMBLE_RUNS {
        let d = rng.random_range(2..=4);
        let prep = common::random_tree(d, 3, &mut rng);
        let obs = Observable::new(random::hermitian(d, &mut rng)).unwrap();
        let seed = 1000 + run;
        let rep = run_ensemble_parallel(&prep, &obs, ENSEMBLE_SAMPLES, seed, workers()).unwrap();
        if rep.abs_error <= 4.0 * rep.std_error {
            hits += 1;
        } else {
            misses.push(seed);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        chsh_hits == MC_SEEDS.len() && hits >= ENSEMBLE_MIN_HITS && elapsed < MC_RUNTIME,
        format!(
            "CHSH within {MC_CHSH_TOL} for {chsh_hits}/{} seeds (worst {chsh_worst:.4}), ensembles {hits}/{ENSEMBLE_RUNS} within 4 SE (seeds 1000..{}, misses {misses:?}), {:.1} s",
            MC_SEEDS.len(),
            1000 + ENSEMBLE_RUNS - 1,
            elapsed.as_secs_f64()
        ),
    )
}

fn random_atom(d: usize, rng: &mut ChaCha8Rng) -> SimpleProperty {
    match rng.random_range(0..3) {
        0 => {
            let obs = Observable::new(random::hermitian(d, rng).scale_real(0.5)).unwrap();
            average_property(&obs, rng.random_range(-0.5..0.5), 0.3).unwrap()
        }
        1 => SimpleProperty::new(Evaluator::Purity, rng.random_range(0.5..1.0), 0.15).unwrap(),
        _ => SimpleProperty::new(Evaluator::Eigenvalue { index: d - 1 }, rng.random_range(0.4..0.9), 0.15).unwrap(),
    }
}

fn random_expr(atoms: &[SimpleProperty], depth: usize, rng: &mut ChaCha8Rng) -> PropertyExpr {
    if depth == 0 || rng.random_bool(0.25) {
        return PropertyExpr::atom(atoms[rng.random_range(0..atoms.len())].clone());
    }
    match rng.random_range(0..3) {
        0 => PropertyExpr::and(random_expr(atoms, depth - 1, rng), random_expr(atoms, depth - 1, rng)),
        1 => PropertyExpr::or(random_expr(atoms, depth - 1, rng), random_expr(atoms, depth - 1, rng)),
        _ => PropertyExpr::not(random_expr(atoms, depth - 1, rng)),
    }
}

fn truth(e: &PropertyExpr, atoms: &[SimpleProperty], values: &[bool]) -> bool {
    match e {
        PropertyExpr::Atom(p) => values[atoms.iter().position(|a| a == p).unwrap()],
        PropertyExpr::And(xs) => xs.iter().all(|x| truth(x, atoms, values)),
        PropertyExpr::Or(xs) => xs.iter().any(|x| truth(x, atoms, values)),
        PropertyExpr::Not(x) => !truth(x, atoms, values),
    }
}

fn lattice_contrast() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1A7);
    let d = 3;
    let states: Vec<StateOperator> = (0..100).map(|_| random::mixed_state(d, &mut rng)).collect();
    let (mut laws_ok, mut exprs_ok) = (0, 0);
    let rounds = 20;
    for _ in 0..rounds {
        let atoms: Vec<SimpleProperty> = (0..3).map(|_| random_atom(d, &mut rng)).collect();
        if check_boolean_laws([&atoms[0], &atoms[1], &atoms[2]], &states).unwrap().all_hold {
            laws_ok += 1;
        }
        let e = random_expr(&atoms, 4, &mut rng);
        let consistent = states.iter().all(|t| {
            let values: Vec<bool> = atoms.iter().map(|a| a.holds(t).unwrap()).collect();
            eval_expr(&e, t).unwrap() == truth(&e, &atoms, &values)
        });
        if consistent {
            exprs_ok += 1;
        }
    }

    let [p, q, r] = qubit_witness_triple();
    let lhs = projection_meet(&p, &projection_join(&q, &r).unwrap()).unwrap();
    let rhs = projection_join(&projection_meet(&p, &q).unwrap(), &projection_meet(&p, &r).unwrap()).unwrap();
    let lhs_is_p = lhs.projection().max_abs_diff(p.projection()) <= FACE_ORACLE_TOL;
    let rhs_is_zero = rhs.projection().max_abs() <= FACE_ORACLE_TOL && rhs.rank() == 0;
    let check = check_distributivity(&p, &q, &r).unwrap();
    outcome(
        laws_ok == rounds && exprs_ok == rounds && lhs_is_p && rhs_is_zero && !check.distributive,
        format!(
            "Boolean laws {laws_ok}/{rounds} atom triples, expressions {exprs_ok}/{rounds} on 100 states; witness lhs rank {} (= P: {lhs_is_p}), rhs rank {} (= 0: {rhs_is_zero})",
            lhs.rank(),
            rhs.rank()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 EPR reduction", epr_reduction),
        ("2 extremality", extremality),
        ("3 face order isomorphism", face_order),
        ("4 component-weight bound", component_bound),
        ("5 gemenge laws", gemenge_laws),
        ("6 local vs composite distinguishability", local_vs_composite),
        ("7 Monte Carlo consistency", monte_carlo),
        ("8 lattice contrast", lattice_contrast),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = check();
        if !result.pass {
            failed += 1;
        }
        println!("{} [{name}] {}", if result.pass { "PASS" } else { "FAIL" }, result.detail);
    }
    println!("acceptance: {}/{} criteria passed", 8 - failed, 8);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
