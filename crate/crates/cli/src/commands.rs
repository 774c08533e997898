//! One function per subcommand. Each returns the JSON report and a
//! human-readable table.

use std::path::Path;

use statespace::kernel::ComplexScalar as Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use statespace::kernel::{hermitian_eig, pauli_x, pauli_z, PSD_TOL};
use statespace::measurement::{chsh_report, distinguishability_demo, run_ensemble_parallel, sampled_chsh};
use statespace::properties::{average_property, check_boolean_laws, check_distributivity, qubit_witness_triple, Evaluator};
use statespace::state_space::{
    component_report, face_join, face_leq, face_meet, is_extremal, serialize_extended, support_projection,
    validate_orthonormal,
};
use statespace::{random, ChshConfig, Observable, PreparationNode, SimpleProperty, StateOperator, Subsystem};

use crate::io::{check_dim, read_json, read_matrix, to_value, CliError, CliResult, Report, EXIT_VALIDATION};
use crate::table::Table;

/// Tolerance precedence: command line, then the file, then the default.
fn pick_tol(flag: Option<f64>, file: Option<f64>) -> CliResult<f64> {
    let tol = flag.or(file).unwrap_or(PSD_TOL);
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::input(format!("tolerance must be positive, got {tol}")));
    }
    Ok(tol)
}

pub fn load_state(path: &Path, tol: Option<f64>) -> CliResult<StateOperator> {
    let loaded = read_matrix(path)?;
    let tol = pick_tol(tol, loaded.tol)?;
    Ok(StateOperator::with_tolerance(loaded.matrix, tol)?)
}

fn require_seed(seed: Option<u64>, command: &str) -> CliResult<u64> {
    seed.ok_or_else(|| CliError::from(statespace::Error::InvalidConfig(format!("{command} needs --seed"))))
}

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Serialize)]
struct ValidateReport {
    file: String,
    valid: bool,
    dim: usize,
    tol: f64,
    trace: f64,
    max_asymmetry: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_eigenvalue: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

fn validation(path: &Path, tol: Option<f64>) -> CliResult<(ValidateReport, Option<StateOperator>)> {
    let loaded = read_matrix(path)?;
    let tol = pick_tol(tol, loaded.tol)?;
    let m = loaded.matrix;
    let max_asymmetry = m.max_asymmetry();
    let min_eigenvalue = hermitian_eig(&m.hermitian_part()).ok().map(|e| e.min_eigenvalue());
    let mut report = ValidateReport {
        file: path.display().to_string(),
        valid: false,
        dim: m.dim(),
        tol,
        trace: m.trace().re,
        max_asymmetry,
        min_eigenvalue,
        error: None,
        message: None,
    };
    match StateOperator::with_tolerance(m, tol) {
        Ok(t) => {
            report.valid = true;
            Ok((report, Some(t)))
        }
        Err(e) if e.is_dimensional() => Err(e.into()),
        Err(e) => {
            report.error = Some(e.code().to_string());
            report.message = Some(e.to_string());
            Ok((report, None))
        }
    }
}

fn validate_table(r: &ValidateReport) -> Table {
    let mut t = Table::new();
    t.row("file", &r.file);
    t.row("valid", r.valid);
    t.row("dim", r.dim);
    t.row("tol", format!("{:e}", r.tol));
    t.row("trace", format!("{:.12}", r.trace));
    t.row("max asymmetry", format!("{:.3e}", r.max_asymmetry));
    if let Some(x) = r.min_eigenvalue {
        t.row("min eigenvalue", format!("{x:.12}"));
    }
    if let Some(m) = &r.message {
        t.row("error", m);
    }
    t
}

fn invalid(report: &ValidateReport, human: Table) -> CliError {
    CliError {
        code: EXIT_VALIDATION,
        message: format!("{} is not a valid state", report.file),
        report: Some(Report { json: to_value(report), human }),
    }
}

pub fn validate(path: &Path, tol: Option<f64>) -> CliResult<Report> {
    let (report, state) = validation(path, tol)?;
    let human = validate_table(&report);
    if state.is_none() {
        return Err(invalid(&report, human));
    }
    Ok(Report { json: to_value(&report), human })
}

#[derive(Serialize)]
struct AnalyzeReport {
    file: String,
    valid: bool,
    dim: usize,
    tol: f64,
    eigenvalues: Vec<f64>,
    rank: usize,
    extremal: bool,
    purity: f64,
    support_projection: statespace::DenseMatrix,
}

pub fn analyze(path: &Path, tol: Option<f64>) -> CliResult<Report> {
    let (check, state) = validation(path, tol)?;
    let Some(t) = state else {
        let human = validate_table(&check);
        return Err(invalid(&check, human));
    };
    let report = AnalyzeReport {
        file: check.file,
        valid: true,
        dim: t.dim(),
        tol: t.tol(),
        eigenvalues: t.eigenvalues().to_vec(),
        rank: t.rank(),
        extremal: is_extremal(&t),
        purity: t.purity(),
        support_projection: support_projection(&t).projection().clone(),
    };
    let mut human = Table::new();
    human.row("file", &report.file);
    human.row("valid", true);
    human.row("dim", report.dim);
    human.row("eigenvalues", fmt_list(&report.eigenvalues));
    human.row("rank", report.rank);
    human.row("extremal", report.extremal);
    human.row("purity", format!("{:.12}", report.purity));
    human.matrix("support projection", &report.support_projection);
    Ok(Report { json: to_value(&report), human })
}

#[derive(Serialize)]
struct FaceSummary {
    file: String,
    rank: usize,
    projection: statespace::DenseMatrix,
}

#[derive(Serialize)]
struct FaceRelation {
    first_leq_second: bool,
    second_leq_first: bool,
    meet_rank: usize,
    join_rank: usize,
    meet: statespace::DenseMatrix,
    join: statespace::DenseMatrix,
}

pub fn face(paths: &[std::path::PathBuf], tol: Option<f64>) -> CliResult<Report> {
    let states = paths.iter().map(|p| load_state(p, tol)).collect::<CliResult<Vec<_>>>()?;
    let faces: Vec<_> = states.iter().map(support_projection).collect();
    let summaries: Vec<FaceSummary> = paths
        .iter()
        .zip(&faces)
        .map(|(p, f)| FaceSummary { file: p.display().to_string(), rank: f.rank(), projection: f.projection().clone() })
        .collect();
    let mut human = Table::new();
    for s in &summaries {
        human.row("file", &s.file);
        human.row("face rank", s.rank);
        human.matrix("projection", &s.projection);
    }
    let mut json = json!({ "faces": to_value(&summaries) });
    if let [f1, f2] = faces.as_slice() {
        let meet = face_meet(f1, f2)?;
        let join = face_join(f1, f2)?;
        let rel = FaceRelation {
            first_leq_second: face_leq(f1, f2)?,
            second_leq_first: face_leq(f2, f1)?,
            meet_rank: meet.rank(),
            join_rank: join.rank(),
            meet: meet.projection().clone(),
            join: join.projection().clone(),
        };
        human.row("first <= second", rel.first_leq_second);
        human.row("second <= first", rel.second_leq_first);
        human.row("meet rank", rel.meet_rank);
        human.row("join rank", rel.join_rank);
        json["relation"] = to_value(&rel);
    }
    Ok(Report { json, human })
}

pub fn load_basis(path: &Path, dim: usize) -> CliResult<Vec<Vec<Complex64>>> {
    let raw: Vec<Vec<[f64; 2]>> = read_json(path)?;
    let basis: Vec<Vec<Complex64>> =
        raw.iter().map(|v| v.iter().map(|&[re, im]| Complex64::new(re, im)).collect()).collect();
    validate_orthonormal(&basis, dim)?;
    Ok(basis)
}

#[derive(Serialize)]
struct ComponentOutput {
    first: String,
    second: String,
    max_weight: f64,
    #[serde(serialize_with = "serialize_extended")]
    sup_ratio: f64,
    basis_used: statespace::state_space::BasisLabel,
    is_component: bool,
    verdict: String,
}

pub fn component(t1: &Path, t2: &Path, basis: Option<&Path>, tol: Option<f64>) -> CliResult<Report> {
    let s1 = load_state(t1, tol)?;
    let s2 = load_state(t2, tol)?;
    let basis = basis.map(|p| load_basis(p, s2.dim())).transpose()?;
    let r = component_report(&s1, &s2, basis.as_deref())?;
    let verdict = if r.is_component { "is a convex component" } else { "is not a convex component" };
    let out = ComponentOutput {
        first: t1.display().to_string(),
        second: t2.display().to_string(),
        max_weight: r.max_weight,
        sup_ratio: r.sup_ratio,
        basis_used: r.basis_used,
        is_component: r.is_component,
        verdict: format!("{} {verdict} of {}", t1.display(), t2.display()),
    };
    let mut human = Table::new();
    human.row("max weight", format!("{:.12}", out.max_weight));
    human.row("sup ratio", fmt_extended(out.sup_ratio));
    human.row("basis", to_value(&out.basis_used).as_str().unwrap_or_default());
    human.row("verdict", &out.verdict);
    Ok(Report { json: to_value(&out), human })
}

pub fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected two dimensions like 2,2")?;
    let a: usize = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

pub fn ptrace(path: &Path, dims: (usize, usize), over: Subsystem, tol: Option<f64>) -> CliResult<Report> {
    let t = load_state(path, tol)?;
    let prep = PreparationNode::leaf("input", t);
    let reduced = prep.reduce_subsystem(dims, over)?.resolve_state()?;
    let json = json!({
        "file": path.display().to_string(),
        "dims": [dims.0, dims.1],
        "traced_over": to_value(&over),
        "reduced": to_value(reduced.matrix()),
        "eigenvalues": reduced.eigenvalues(),
        "purity": reduced.purity(),
    });
    let mut human = Table::new();
    human.row("file", path.display());
    human.row("dims", format!("{} x {}", dims.0, dims.1));
    human.row("traced over", format!("{over:?}"));
    human.matrix("reduced state", reduced.matrix());
    human.row("eigenvalues", fmt_list(reduced.eigenvalues()));
    human.row("purity", format!("{:.12}", reduced.purity()));
    Ok(Report { json, human })
}

pub fn load_chsh_config(path: Option<&Path>, seed: Option<u64>, n: Option<u64>) -> CliResult<ChshConfig> {
    let mut cfg = match path {
        Some(p) => read_json(p)?,
        None => ChshConfig::default(),
    };
    if seed.is_some() {
        cfg.seed = seed;
    }
    if let Some(n) = n {
        cfg.n_samples = n;
    }
    cfg.validate()?;
    if cfg.n_samples > 0 && cfg.seed.is_none() {
        return Err(statespace::Error::InvalidConfig("sampling needs a seed (--seed or \"seed\")".into()).into());
    }
    Ok(cfg)
}

pub fn chsh(path: &Path, cfg: &ChshConfig, tol: Option<f64>) -> CliResult<Report> {
    let t = load_state(path, tol)?;
    let exact = chsh_report(&t, cfg)?;
    let mut human = Table::new();
    human.row("file", path.display());
    human.row("E(a,b)", format!("{:.12}", exact.correlators.ab));
    human.row("E(a,b')", format!("{:.12}", exact.correlators.ab_prime));
    human.row("E(a',b)", format!("{:.12}", exact.correlators.a_prime_b));
    human.row("E(a',b')", format!("{:.12}", exact.correlators.a_prime_b_prime));
    human.row("S exact", format!("{:.12}", exact.s));
    let mut json = json!({ "file": path.display().to_string(), "exact": to_value(&exact) });
    if cfg.n_samples > 0 {
        let sampled = sampled_chsh(&PreparationNode::leaf("input", t), cfg, workers())?;
        human.row("S sampled", format!("{:.6} +/- {:.6} (n = {}, seed {})", sampled.s, sampled.std_error, sampled.n_per_correlator, sampled.seed));
        json["sampled"] = to_value(&sampled);
    }
    Ok(Report { json, human })
}

pub fn ensemble(prep: &Path, obs: &Path, n: Option<u64>, seed: Option<u64>) -> CliResult<Report> {
    let seed = require_seed(seed, "ensemble")?;
    let n = n.ok_or_else(|| CliError::from(statespace::Error::InvalidConfig("ensemble needs --n".into())))?;
    let tree: PreparationNode = read_json(prep)?;
    check_dim(tree.dim())?;
    let loaded = read_matrix(obs)?;
    let observable = Observable::new(loaded.matrix)?;
    let r = run_ensemble_parallel(&tree, &observable, n, seed, workers())?;
    let mut human = Table::new();
    human.row("samples", r.n_samples);
    for (k, v) in &r.outcome_counts {
        human.row(&format!("outcome {k}"), v);
    }
    human.row("empirical mean", format!("{:.12}", r.empirical_mean));
    human.row("exact mean", format!("{:.12}", r.exact_mean));
    human.row("std error", format!("{:.12}", r.std_error));
    human.row("abs error", format!("{:.12}", r.abs_error));
    human.row("seed", r.seed);
    human.row("rng", &r.rng);
    Ok(Report { json: to_value(&r), human })
}

pub fn lattice_demo(seed: Option<u64>, n: Option<u64>) -> CliResult<Report> {
    let seed = require_seed(seed, "lattice-demo")?;
    let n = n.unwrap_or(100);
    if n == 0 {
        return Err(statespace::Error::InvalidConfig("lattice-demo needs at least one state".into()).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<StateOperator> = (0..n).map(|_| random::mixed_state(2, &mut rng)).collect();
    let atoms: [SimpleProperty; 3] = [
        average_property(&Observable::new(pauli_z())?, 0.0, 0.5)?,
        average_property(&Observable::new(pauli_x())?, 0.0, 0.5)?,
        SimpleProperty::new(Evaluator::Purity, 1.0, 0.25)?,
    ];
    let laws = check_boolean_laws([&atoms[0], &atoms[1], &atoms[2]], &states)?;
    let [p, q, r] = qubit_witness_triple();
    let witness = check_distributivity(&p, &q, &r)?;
    let json = json!({
        "seed": seed,
        "states": n,
        "atoms": to_value(&atoms),
        "boolean_laws": to_value(&laws),
        "projection_witness": to_value(&witness),
    });
    let mut human = Table::new();
    human.row("seed", seed);
    human.row("states", n);
    for l in &laws.laws {
        human.row(&l.law, format!("{} violations", l.violations));
    }
    human.row("boolean laws hold", laws.all_hold);
    human.row("P and (Q or R)", format!("rank {}", witness.lhs_rank));
    human.row("(P and Q) or (P and R)", format!("rank {}", witness.rhs_rank));
    human.row("projections distributive", witness.distributive);
    Ok(Report { json, human })
}

pub fn distinguish(cfg: &ChshConfig) -> CliResult<Report> {
    let r = distinguishability_demo(cfg)?;
    let mut human = Table::new();
    for p in &r.local.paulis {
        human.row(&format!("<{}> on subsystem 1", p.observable), format!("{:.12} vs {:.12}", p.singlet_reduced, p.gemenge_reduced));
    }
    human.row("reduced state difference", format!("{:.3e}", r.local.max_state_difference));
    human.row("S singlet", format!("{:.12}", r.exact.singlet.s));
    human.row("S gemenge", format!("{:.12}", r.exact.gemenge.s));
    if let Some(s) = &r.sampled {
        human.row("S singlet sampled", format!("{:.6} +/- {:.6}", s.singlet.s, s.singlet.std_error));
        human.row("S gemenge sampled", format!("{:.6} +/- {:.6}", s.gemenge.s, s.gemenge.std_error));
    }
    human.row("locally indistinguishable", r.locally_indistinguishable);
    human.row("composite distinguishable", r.composite_distinguishable);
    human.row("conclusion", &r.conclusion);
    Ok(Report { json: to_value(&r), human })
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(" ")
}

fn fmt_extended(x: f64) -> String {
    if x.is_infinite() {
        "infinity".into()
    } else {
        format!("{x:.12}")
    }
}
