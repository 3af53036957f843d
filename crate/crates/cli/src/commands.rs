//! The five subcommands. Each returns the process exit code: 0 ok, 2
//! verification failure, 3 truncated path (input problems surface as
//! `CliError`, which main maps to 1).

use comlasso_core::oracle::{FixedLambdaSolver, OracleOptions};
use comlasso_core::path::{solve_path, PathOptions, PathStatus};
use comlasso_core::select::{self, CvReport, Folds, StabilityOptions, StabilityReport};
use comlasso_core::{verify_kkt, GroupStructure, LossSpec, ProblemSpec, ResidualKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::io::{self, IngestOptions};
use crate::{
    CliError, CvArgs, DataArgs, FitArgs, SimulateArgs, StabilityArgs, Task, VerifyArgs,
};

/// Seed precedence: flag, then COMLASSO_SEED, then 0.
fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("COMLASSO_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("COMLASSO_SEED is not an unsigned integer: '{v}'"))),
        Err(_) => Ok(0),
    }
}

fn status_str(status: PathStatus) -> &'static str {
    match status {
        PathStatus::Completed => "completed",
        PathStatus::MaxKinks => "max-kinks",
        PathStatus::DegenerateKkt => "degenerate-kkt",
    }
}

/// Ingest data + groups + loss into a ready problem.
pub fn build_problem(args: &DataArgs) -> Result<(ProblemSpec, Vec<String>), CliError> {
    let raw = io::read_data_csv(&args.data)?;
    let opts = IngestOptions {
        raw: args.raw,
        normalize: args.normalize,
        pseudocount: args.pseudocount,
    };
    let x = io::build_design(&raw.rows, &opts, &args.data)?;
    let groups = match &args.groups {
        Some(path) => io::read_groups_csv(path, &raw.names)?,
        None => GroupStructure::zero_sum(raw.names.len())?,
    };
    if args.loss == "quadratic" && args.loss_param.is_some() {
        return Err(CliError::Input("the quadratic loss takes no --loss-param".into()));
    }
    let (h, gamma) = if args.loss == "squared-hinge" {
        (None, args.loss_param)
    } else {
        (args.loss_param, None)
    };
    let loss = LossSpec::builtin(&args.loss, h, gamma)?;
    match (loss.kind(), args.task) {
        (ResidualKind::Margin, Task::Regression) => {
            return Err(CliError::Input(format!(
                "loss '{}' is a classification loss; pass --task classification",
                args.loss
            )));
        }
        (ResidualKind::Residual, Task::Classification) => {
            return Err(CliError::Input(format!(
                "--task classification needs a margin loss, not '{}'",
                args.loss
            )));
        }
        _ => {}
    }
    let problem = ProblemSpec::new(x, raw.y, loss, groups)?;
    Ok((problem, raw.names))
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

pub fn run_fit(args: &FitArgs) -> Result<i32, CliError> {
    let (problem, names) = build_problem(&args.data)?;
    let opts = PathOptions {
        lambda_min: args.lambda_min,
        max_kinks: args.max_kinks,
        ridge_diagnostic: false,
    };
    let mut notes: Vec<String> = Vec::new();
    let path = if args.adaptive_weights {
        let pilot = select::pilot_weights(&problem)?;
        notes.extend(pilot.warnings);
        let (transformed, back) = select::adaptive_reparametrize(&problem, &pilot.weights)?;
        back.path(&solve_path(&transformed, &opts)?)
    } else {
        solve_path(&problem, &opts)?
    };
    println!("lambda_max = {}", io::fmt_f64(path.lambda_max));
    println!("kinks = {}", path.kinks.len());
    println!("status = {}", status_str(path.status));
    for note in notes.iter().chain(&path.notes) {
        println!("note: {note}");
    }
    if let Some(file) = &args.out_path {
        io::write_path_csv(file, &path, problem.p(), problem.groups().num_groups())?;
        println!("path written to {}", file.display());
    }
    if let Some(file) = &args.out_plot {
        io::write_plot_csv(file, &path, &names)?;
        println!("plot data written to {}", file.display());
    }
    Ok(if path.status == PathStatus::Completed { 0 } else { 3 })
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

pub fn run_verify(args: &VerifyArgs) -> Result<i32, CliError> {
    let (problem, _names) = build_problem(&args.data)?;
    let rows = io::read_path_csv(&args.path_file)?;
    let k = problem.groups().num_groups();
    if rows[0].beta.len() != problem.p() || rows[0].mu.len() != k {
        return Err(CliError::Input(format!(
            "{}: path has {} coefficients / {} groups, data has {} / {}",
            args.path_file.display(),
            rows[0].beta.len(),
            rows[0].mu.len(),
            problem.p(),
            k
        )));
    }
    for w in rows.windows(2) {
        if w[1].lambda > w[0].lambda {
            return Err(CliError::Input(format!(
                "{}: kink lambdas are not descending",
                args.path_file.display()
            )));
        }
    }
    let mut failed = false;
    let mut worst_kkt = 0.0f64;
    let mut worst_con = 0.0f64;
    for row in &rows {
        let report = verify_kkt(&problem, &row.beta, row.lambda, Some(args.tol))?;
        worst_kkt = worst_kkt.max(report.worst_violation);
        worst_con = worst_con.max(report.constraint_violation);
        if !report.ok {
            println!(
                "kink {} (lambda = {}): kkt violation {:.3e}, constraint violation {:.3e}",
                row.index,
                io::fmt_f64(row.lambda),
                report.worst_violation,
                report.constraint_violation
            );
            failed = true;
        }
    }
    println!(
        "checked {} kinks: worst kkt violation {:.3e}, worst constraint violation {:.3e}",
        rows.len(),
        worst_kkt,
        worst_con
    );
    if failed {
        return Ok(2);
    }
    if let Some(solves) = args.oracle {
        let seed = resolve_seed(args.seed)?;
        let sol_path = io::path_from_rows(&rows);
        let lo = rows.last().unwrap().lambda;
        let hi = rows[0].lambda;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut solver = FixedLambdaSolver::new(&problem, OracleOptions::default())?;
        let mut max_gap = 0.0f64;
        for _ in 0..solves {
            let lambda = lo + (hi - lo) * rng.random::<f64>();
            let reference = solver.solve(lambda);
            if !reference.converged {
                println!("note: oracle did not converge at lambda = {}", io::fmt_f64(lambda));
            }
            let ours = sol_path.beta_at(lambda).expect("lambda drawn inside the path range");
            let gap = ours
                .iter()
                .zip(&reference.beta)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            max_gap = max_gap.max(gap);
        }
        println!("oracle check: max gap {max_gap:.3e} over {solves} lambdas");
        if max_gap > args.oracle_tol {
            println!("oracle gap exceeds tolerance {:.3e}", args.oracle_tol);
            return Ok(2);
        }
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// cv
// ---------------------------------------------------------------------------

fn parse_folds(text: &str) -> Result<Folds, CliError> {
    if text.eq_ignore_ascii_case("loo") {
        return Ok(Folds::LeaveOneOut);
    }
    text.parse::<usize>()
        .map(Folds::K)
        .map_err(|_| CliError::Input(format!("--folds takes a count or 'loo', got '{text}'")))
}

/// Same computation as `select::cross_validate`, with the fold fits spread
/// over at most `jobs` threads. Reduction is by fold index, so the report
/// (and every byte of output) is identical to the sequential one.
fn cv_parallel(
    problem: &ProblemSpec,
    folds: Folds,
    seed: u64,
    opts: &PathOptions,
    jobs: usize,
) -> Result<CvReport, CliError> {
    let full = solve_path(problem, opts)?;
    let grid = select::cv_grid(&full);
    let assignment = select::cv_folds(problem.n(), folds, seed)?;
    let mut warnings = Vec::new();
    if full.status != PathStatus::Completed {
        warnings.push(format!("full-data path stopped early ({:?})", full.status));
    }
    type FoldResult = Result<(Vec<f64>, Vec<String>), comlasso_core::ModelError>;
    let mut slots: Vec<Option<FoldResult>> = (0..assignment.len()).map(|_| None).collect();
    let chunk = assignment.len().div_ceil(jobs.min(assignment.len()));
    std::thread::scope(|scope| {
        for (out, work) in slots.chunks_mut(chunk).zip(assignment.chunks(chunk)) {
            let grid = &grid;
            scope.spawn(move || {
                for (slot, held) in out.iter_mut().zip(work) {
                    *slot = Some(select::cv_fold_scores(problem, grid, held, opts));
                }
            });
        }
    });
    let mut totals = vec![0.0; grid.len()];
    for (f, slot) in slots.into_iter().enumerate() {
        let (scores, mut fold_warnings) = slot.expect("every fold slot filled")?;
        for (t, s) in scores.iter().enumerate() {
            totals[t] += s;
        }
        for msg in fold_warnings.drain(..) {
            warnings.push(format!("fold {f}: {msg}"));
        }
    }
    let n = problem.n() as f64;
    let scores: Vec<f64> = totals.iter().map(|t| t / n).collect();
    let mut chosen = 0usize;
    for (t, s) in scores.iter().enumerate() {
        if *s < scores[chosen] {
            chosen = t;
        }
    }
    Ok(CvReport { lambdas: grid, scores, chosen, warnings })
}

pub fn run_cv(args: &CvArgs) -> Result<i32, CliError> {
    if args.jobs == 0 {
        return Err(CliError::Input("--jobs must be at least 1".into()));
    }
    let (problem, _names) = build_problem(&args.data)?;
    let folds = parse_folds(&args.folds)?;
    let seed = resolve_seed(args.seed)?;
    let opts = PathOptions::default();
    let report = if args.jobs == 1 {
        select::cross_validate(&problem, folds, seed, &opts)?
    } else {
        cv_parallel(&problem, folds, seed, &opts, args.jobs)?
    };
    for (t, (lam, score)) in report.lambdas.iter().zip(&report.scores).enumerate() {
        let mark = if t == report.chosen { "  <- chosen" } else { "" };
        println!("lambda {} score {}{}", io::fmt_f64(*lam), io::fmt_f64(*score), mark);
    }
    println!(
        "chosen lambda = {} (score {})",
        io::fmt_f64(report.lambdas[report.chosen]),
        io::fmt_f64(report.scores[report.chosen])
    );
    for w in &report.warnings {
        println!("note: {w}");
    }
    if let Some(file) = &args.out_report {
        io::write_cv_csv(file, &report)?;
        println!("report written to {}", file.display());
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// stability
// ---------------------------------------------------------------------------

/// Same computation as `select::stability_selection` with the subsample
/// fits spread over threads; counts are reduced by subsample index.
fn stability_parallel(
    problem: &ProblemSpec,
    opts: &StabilityOptions,
    jobs: usize,
) -> Result<StabilityReport, CliError> {
    if !(opts.weakness > 0.0 && opts.weakness <= 1.0) {
        return Err(CliError::Input(format!("weakness = {} must lie in (0, 1]", opts.weakness)));
    }
    if opts.subsamples == 0 {
        return Err(CliError::Input("need at least one subsample".into()));
    }
    let folds = Folds::K(5.min(problem.n()));
    let cv = select::cross_validate(problem, folds, opts.seed, &opts.path)?;
    let lambda = cv.lambdas[cv.chosen];
    let mut warnings = cv.warnings;

    type RunResult = Result<Option<Vec<bool>>, comlasso_core::ModelError>;
    let mut slots: Vec<Option<RunResult>> = (0..opts.subsamples).map(|_| None).collect();
    let chunk = opts.subsamples.div_ceil(jobs.min(opts.subsamples));
    std::thread::scope(|scope| {
        for (w, out) in slots.chunks_mut(chunk).enumerate() {
            scope.spawn(move || {
                for (off, slot) in out.iter_mut().enumerate() {
                    *slot = Some(select::stability_run_one(problem, lambda, opts, w * chunk + off));
                }
            });
        }
    });
    let mut counts = vec![0usize; problem.p()];
    let mut counted = 0usize;
    let mut skipped = 0usize;
    for slot in slots {
        match slot.expect("every subsample slot filled")? {
            Some(mask) => {
                counted += 1;
                for (c, m) in counts.iter_mut().zip(&mask) {
                    *c += usize::from(*m);
                }
            }
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        warnings.push(format!(
            "{skipped} of {} subsample paths could not be evaluated at lambda = {lambda} \
             and count as all-inactive",
            opts.subsamples
        ));
    }
    let denom = opts.subsamples as f64;
    Ok(StabilityReport {
        lambda,
        probability: counts.iter().map(|c| *c as f64 / denom).collect(),
        counted,
        skipped,
        warnings,
    })
}

pub fn run_stability(args: &StabilityArgs) -> Result<i32, CliError> {
    if args.jobs == 0 {
        return Err(CliError::Input("--jobs must be at least 1".into()));
    }
    let (problem, names) = build_problem(&args.data)?;
    let opts = StabilityOptions {
        subsamples: args.subsamples,
        weakness: args.weakness,
        seed: resolve_seed(args.seed)?,
        subsample_size: args.subsample_size,
        path: PathOptions::default(),
    };
    let report = if args.jobs == 1 {
        select::stability_selection(&problem, &opts)?
    } else {
        stability_parallel(&problem, &opts, args.jobs)?
    };
    println!("cv lambda = {}", io::fmt_f64(report.lambda));
    println!(
        "subsamples = {} (counted {}, skipped {})",
        args.subsamples, report.counted, report.skipped
    );
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| {
        report.probability[b]
            .partial_cmp(&report.probability[a])
            .expect("probabilities are finite")
            .then(a.cmp(&b))
    });
    for j in order {
        println!("{} {:.4}", names[j], report.probability[j]);
    }
    for w in &report.warnings {
        println!("note: {w}");
    }
    if let Some(file) = &args.out_report {
        io::write_stability_csv(file, &names, &report)?;
        println!("report written to {}", file.display());
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn parse_sizes(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Input(format!("bad group size '{t}' in --groups")))
        })
        .collect()
}

pub fn run_simulate(args: &SimulateArgs) -> Result<i32, CliError> {
    let sizes = parse_sizes(&args.groups)?;
    let seed = resolve_seed(args.seed)?;
    let syn = crate::gen::generate(args.n, &sizes, seed)?;
    io::write_data_csv(&args.out_data, &syn.names, &syn.y, &syn.comps)?;
    io::write_truth_csv(&args.out_truth, &syn.names, &syn.beta_star)?;
    io::write_groups_csv(&args.out_groups, &syn.names, &syn.sizes)?;
    println!(
        "wrote {} samples, {} components in {} group(s), seed {}",
        args.n,
        syn.names.len(),
        sizes.len(),
        seed
    );
    println!("data: {}", args.out_data.display());
    println!("truth: {}", args.out_truth.display());
    println!("groups: {}", args.out_groups.display());
    Ok(0)
}
