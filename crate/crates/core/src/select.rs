//! Model selection on top of the path: BIC, cross-validation, adaptive
//! (reweighted) penalties, and stability selection.
//!
//! Everything here is deterministic given a seed. Randomized procedures
//! derive one independent ChaCha stream per unit of work (fold assignment,
//! subsample index), so results do not depend on evaluation order and a
//! caller may farm the units out to threads and reduce by index.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::ModelError;
use crate::kkt::active_threshold;
use crate::path::{solve_path, PathOptions, PathStatus, SolutionPath};
use crate::problem::{reweight_problem, ProblemSpec};

// ---------------------------------------------------------------------------
// BIC
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BicEntry {
    pub lambda: f64,
    /// Active coordinates less one for the group constraint, floored at 0.
    pub df: usize,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct BicReport {
    /// One entry per kink, in path (descending lambda) order.
    pub entries: Vec<BicEntry>,
    /// Index of the winning kink; ties resolve to the larger lambda.
    pub chosen: usize,
    pub warnings: Vec<String>,
}

/// Score every kink of a quadratic-loss path with
/// `n ln(RSS/n) + ln(n) * df`.
///
/// The Gaussian log-likelihood behind this formula only makes sense for the
/// plain squared-error loss, so anything else is rejected.
pub fn bic_along_path(
    problem: &ProblemSpec,
    path: &SolutionPath,
) -> Result<BicReport, ModelError> {
    if !problem.loss().is_plain_quadratic() {
        return Err(ModelError::BadArgument(
            "BIC scoring requires the plain quadratic loss".into(),
        ));
    }
    if path.kinks.is_empty() {
        return Err(ModelError::Empty);
    }
    let n = problem.n() as f64;
    let ss_y: f64 = problem.y().iter().map(|v| v * v).sum();
    let rss_floor = 1e-12 * ss_y.max(1.0);
    let mut warnings = Vec::new();
    let mut entries = Vec::with_capacity(path.kinks.len());
    let mut chosen = 0usize;
    for (t, kink) in path.kinks.iter().enumerate() {
        let mut rss = 0.0;
        for i in 0..problem.n() {
            let e = problem.y()[i] - problem.predict(i, &kink.beta);
            rss += e * e;
        }
        if rss < rss_floor {
            if warnings.is_empty() {
                warnings.push(format!(
                    "RSS under {rss_floor:.3e} floored at kink lambda = {}; \
                     the fit is numerically exact there and BIC is saturated",
                    kink.lambda
                ));
            }
            rss = rss_floor;
        }
        let thresh = active_threshold(&kink.beta);
        let active = kink.beta.iter().filter(|b| b.abs() > thresh).count();
        let df = active.saturating_sub(1);
        let score = n * crate::math::ln(rss / n) + crate::math::ln(n) * df as f64;
        if score < entries.get(chosen).map_or(f64::INFINITY, |e: &BicEntry| e.score) {
            chosen = t;
        }
        entries.push(BicEntry { lambda: kink.lambda, df, score });
    }
    Ok(BicReport { entries, chosen, warnings })
}

// ---------------------------------------------------------------------------
// Adaptive penalty via reparametrization
// ---------------------------------------------------------------------------

/// Maps solutions of the reweighted problem back to the original
/// coordinates (`beta_j = gamma_j / w_j`; multipliers carry over as-is).
#[derive(Debug, Clone)]
pub struct BackMap {
    weights: Vec<f64>,
}

impl BackMap {
    pub fn beta(&self, gamma: &[f64]) -> Vec<f64> {
        gamma.iter().zip(&self.weights).map(|(g, w)| g / w).collect()
    }

    /// Back-map a whole path kink by kink (lambda values are shared between
    /// the two parametrizations).
    pub fn path(&self, path: &SolutionPath) -> SolutionPath {
        let mut out = path.clone();
        for kink in &mut out.kinks {
            kink.beta = self.beta(&kink.beta);
        }
        out
    }
}

/// Turn a weighted-penalty problem `L(beta) + lambda sum w_j |beta_j|` into
/// a standard one by scaling columns and constraint weights by `1/w_j`. The
/// standard path of the returned problem, pushed through the [`BackMap`],
/// is exactly the weighted path of the original.
pub fn adaptive_reparametrize(
    problem: &ProblemSpec,
    weights: &[f64],
) -> Result<(ProblemSpec, BackMap), ModelError> {
    let transformed = reweight_problem(problem, weights)?;
    Ok((transformed, BackMap { weights: weights.to_vec() }))
}

#[derive(Debug, Clone)]
pub struct PilotFit {
    pub weights: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Adaptive weights `w_j = 1 / max(|pilot_j|, floor)` from a pilot fit: the
/// unpenalized solution when `n >= p`, otherwise a barely-penalized one
/// (flagged, since the unpenalized problem is then ill-posed).
pub fn pilot_weights(problem: &ProblemSpec) -> Result<PilotFit, ModelError> {
    let mut warnings = Vec::new();
    let pilot = if problem.n() >= problem.p() {
        let sol = crate::oracle::solve_fixed_lambda(
            problem,
            0.0,
            crate::oracle::OracleOptions::default(),
        )?;
        if sol.converged {
            sol.beta
        } else {
            warnings.push(
                "unpenalized pilot fit did not converge; fell back to a tiny penalty".into(),
            );
            tiny_lambda_pilot(problem)?
        }
    } else {
        warnings.push(format!(
            "n = {} < p = {}: pilot fit uses a small penalty instead of lambda = 0",
            problem.n(),
            problem.p()
        ));
        tiny_lambda_pilot(problem)?
    };
    let scale = crate::linalg::inf_norm(&pilot).max(1.0);
    let floor = 1e-8 * scale;
    let weights = pilot.iter().map(|b| 1.0 / b.abs().max(floor)).collect();
    Ok(PilotFit { weights, warnings })
}

fn tiny_lambda_pilot(problem: &ProblemSpec) -> Result<Vec<f64>, ModelError> {
    let lm = crate::kkt::lambda_max(problem).lambda_max;
    let sol = crate::oracle::solve_fixed_lambda(
        problem,
        1e-6 * lm,
        crate::oracle::OracleOptions::default(),
    )?;
    Ok(sol.beta)
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Folds {
    K(usize),
    LeaveOneOut,
}

#[derive(Debug, Clone)]
pub struct CvReport {
    /// Candidate lambda values (the full-data kink locations, descending).
    pub lambdas: Vec<f64>,
    /// Mean held-out error per lambda: MSE for regression losses,
    /// misclassification rate for margin losses.
    pub scores: Vec<f64>,
    /// Index of the winner; ties resolve to the larger lambda.
    pub chosen: usize,
    pub warnings: Vec<String>,
}

/// Deterministic fold assignment: a seeded shuffle of `0..n` cut into `k`
/// nearly equal held-out blocks.
pub fn cv_folds(n: usize, folds: Folds, seed: u64) -> Result<Vec<Vec<usize>>, ModelError> {
    let k = match folds {
        Folds::K(k) => k,
        Folds::LeaveOneOut => n,
    };
    if k < 2 || k > n {
        return Err(ModelError::BadArgument(format!(
            "fold count {k} must lie in [2, n = {n}]"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    let base = n / k;
    let extra = n % k;
    let mut out = Vec::with_capacity(k);
    let mut at = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut held: Vec<usize> = idx[at..at + len].to_vec();
        held.sort_unstable();
        out.push(held);
        at += len;
    }
    Ok(out)
}

/// The lambda grid induced by a path: kink locations with adjacent
/// duplicates (zero-length steps) collapsed.
pub fn cv_grid(path: &SolutionPath) -> Vec<f64> {
    let mut grid: Vec<f64> = Vec::with_capacity(path.kinks.len());
    for k in &path.kinks {
        if grid.last() != Some(&k.lambda) {
            grid.push(k.lambda);
        }
    }
    grid
}

/// Total held-out error of one fold at every grid lambda. This is the unit
/// of work a multi-threaded runner distributes; summing the returned vectors
/// over folds and dividing by `n` reproduces [`cross_validate`]'s scores
/// exactly regardless of scheduling.
pub fn cv_fold_scores(
    problem: &ProblemSpec,
    grid: &[f64],
    held_out: &[usize],
    opts: &PathOptions,
) -> Result<(Vec<f64>, Vec<String>), ModelError> {
    let mut warnings = Vec::new();
    let held: Vec<bool> = {
        let mut m = vec![false; problem.n()];
        for &i in held_out {
            m[i] = true;
        }
        m
    };
    let train: Vec<usize> = (0..problem.n()).filter(|i| !held[*i]).collect();
    let sub = problem.subset_rows(&train)?;
    let path = solve_path(&sub, opts)?;
    if path.status != PathStatus::Completed {
        warnings.push(format!(
            "fold path stopped early ({:?}); smaller lambdas reuse its last kink",
            path.status
        ));
    }
    let terminal = path
        .terminal()
        .map(|k| k.beta.clone())
        .unwrap_or_else(|| vec![0.0; problem.p()]);
    let mut scores = Vec::with_capacity(grid.len());
    for &lam in grid {
        let beta = path.beta_at(lam).unwrap_or_else(|| terminal.clone());
        let mut total = 0.0;
        for &i in held_out {
            total += problem.prediction_error(i, &beta);
        }
        scores.push(total);
    }
    Ok((scores, warnings))
}

/// K-fold (or leave-one-out) cross-validation over the path's own lambda
/// grid.
pub fn cross_validate(
    problem: &ProblemSpec,
    folds: Folds,
    seed: u64,
    opts: &PathOptions,
) -> Result<CvReport, ModelError> {
    let full = solve_path(problem, opts)?;
    let grid = cv_grid(&full);
    let assignment = cv_folds(problem.n(), folds, seed)?;
    let mut totals = vec![0.0; grid.len()];
    let mut warnings = Vec::new();
    if full.status != PathStatus::Completed {
        warnings.push(format!("full-data path stopped early ({:?})", full.status));
    }
    for (f, held) in assignment.iter().enumerate() {
        let (scores, mut w) = cv_fold_scores(problem, &grid, held, opts)?;
        for (t, s) in scores.iter().enumerate() {
            totals[t] += s;
        }
        for msg in w.drain(..) {
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

// ---------------------------------------------------------------------------
// Stability selection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct StabilityOptions {
    pub subsamples: usize,
    /// Lower end of the random penalty multipliers, in (0, 1].
    pub weakness: f64,
    pub seed: u64,
    /// Rows per subsample; defaults to `n / 2`.
    pub subsample_size: Option<usize>,
    pub path: PathOptions,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            subsamples: 100,
            weakness: 0.5,
            seed: 0,
            subsample_size: None,
            path: PathOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// The lambda everything was evaluated at (5-fold CV on the full data).
    pub lambda: f64,
    /// Per-coordinate selection frequency, with skipped subsamples counted
    /// in the denominator.
    pub probability: Vec<f64>,
    pub counted: usize,
    pub skipped: usize,
    pub warnings: Vec<String>,
}

/// One subsample's active mask at `lambda`, or `None` when its randomized
/// path could not be evaluated there (truncated early). Subsample `t` draws
/// from an independent ChaCha stream, so any subset of `t` values can be
/// computed in any order — this is the parallelizable unit.
pub fn stability_run_one(
    problem: &ProblemSpec,
    lambda: f64,
    opts: &StabilityOptions,
    t: usize,
) -> Result<Option<Vec<bool>>, ModelError> {
    let n = problem.n();
    let size = opts.subsample_size.unwrap_or(n / 2).clamp(2, n);
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    rng.set_stream(t as u64 + 1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    idx.truncate(size);
    idx.sort_unstable();
    let sub = problem.subset_rows(&idx)?;
    let mult: Vec<f64> = (0..problem.p())
        .map(|_| opts.weakness + (1.0 - opts.weakness) * rng.random::<f64>())
        .collect();
    let weights: Vec<f64> = mult.iter().map(|m| 1.0 / m).collect();
    let (transformed, _) = adaptive_reparametrize(&sub, &weights)?;
    let path = solve_path(&transformed, &opts.path)?;
    match path.beta_at(lambda) {
        Some(gamma) => {
            let thresh = active_threshold(&gamma);
            Ok(Some(gamma.iter().map(|g| g.abs() > thresh).collect()))
        }
        None => Ok(None),
    }
}

/// Randomized-penalty stability selection: pick one lambda by 5-fold CV on
/// the full data, then refit on random half-samples with penalty weights
/// `1 / U[weakness, 1]` and report how often each coordinate is active.
pub fn stability_selection(
    problem: &ProblemSpec,
    opts: &StabilityOptions,
) -> Result<StabilityReport, ModelError> {
    if !(opts.weakness > 0.0 && opts.weakness <= 1.0) {
        return Err(ModelError::BadArgument(format!(
            "weakness = {} must lie in (0, 1]",
            opts.weakness
        )));
    }
    if opts.subsamples == 0 {
        return Err(ModelError::BadArgument("need at least one subsample".into()));
    }
    let folds = Folds::K(5.min(problem.n()));
    let cv = cross_validate(problem, folds, opts.seed, &opts.path)?;
    let lambda = cv.lambdas[cv.chosen];
    let mut warnings = cv.warnings;

    let mut counts = vec![0usize; problem.p()];
    let mut counted = 0usize;
    let mut skipped = 0usize;
    for t in 0..opts.subsamples {
        match stability_run_one(problem, lambda, opts, t)? {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupStructure;
    use crate::loss::LossSpec;
    use crate::oracle::{solve_fixed_lambda, OracleOptions};

    fn identity_problem(y: Vec<f64>) -> ProblemSpec {
        let p = y.len();
        let mut x = vec![0.0; p * p];
        for j in 0..p {
            x[j * p + j] = 1.0;
        }
        ProblemSpec::new(x, y, LossSpec::quadratic(), GroupStructure::zero_sum(p).unwrap())
            .unwrap()
    }

    #[test]
    fn bic_scores_follow_the_closed_form() {
        // Path kinks (hand-checked in the path tests): beta = 0 at 1.5,
        // (1, 0, -1) at 0.5, (4/3, 1/3, -5/3) at 0. RSS = 6, 2, 4/3 with
        // df = 0, 1, 2.
        let p = identity_problem(vec![2.0, 1.0, -1.0]);
        let path = solve_path(&p, &PathOptions::default()).unwrap();
        let bic = bic_along_path(&p, &path).unwrap();
        let n = 3.0_f64;
        let expect = [
            n * (6.0_f64 / 3.0).ln(),
            n * (2.0_f64 / 3.0).ln() + 3.0_f64.ln(),
            n * (4.0_f64 / 9.0).ln() + 2.0 * 3.0_f64.ln(),
        ];
        assert_eq!(bic.entries.len(), 3);
        for (e, want) in bic.entries.iter().zip(expect) {
            assert!((e.score - want).abs() < 1e-12, "{} vs {want}", e.score);
        }
        assert_eq!(bic.entries[1].df, 1);
        assert_eq!(bic.chosen, 2);
    }

    #[test]
    fn bic_refuses_non_quadratic_losses() {
        let x = vec![1.0, 0.0, 0.0, 1.0];
        let p = ProblemSpec::new(
            x,
            vec![1.0, -1.0],
            LossSpec::huber_regression(1.0).unwrap(),
            GroupStructure::zero_sum(2).unwrap(),
        )
        .unwrap();
        let path = solve_path(&p, &PathOptions::default()).unwrap();
        assert!(bic_along_path(&p, &path).is_err());
    }

    #[test]
    fn constant_weights_only_rescale_lambda() {
        let p = identity_problem(vec![2.0, 1.0, -1.0]);
        let base = solve_path(&p, &PathOptions::default()).unwrap();
        let (tp, back) = adaptive_reparametrize(&p, &[2.0, 2.0, 2.0]).unwrap();
        let scaled = solve_path(&tp, &PathOptions::default()).unwrap();
        assert_eq!(base.kinks.len(), scaled.kinks.len());
        for (a, b) in base.kinks.iter().zip(&scaled.kinks) {
            assert!((a.lambda - 2.0 * b.lambda).abs() < 1e-12);
            let mapped = back.beta(&b.beta);
            for (x, y) in a.beta.iter().zip(&mapped) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reparametrized_path_matches_weighted_oracle() {
        // Weights (1, 2) on the two-coordinate regression pair: the weighted
        // optimum at lambda is (1 - 1.5 lambda) * (1, -1).
        let p = identity_problem(vec![1.0, -1.0]);
        let w = [1.0, 2.0];
        let (tp, back) = adaptive_reparametrize(&p, &w).unwrap();
        let path = solve_path(&tp, &PathOptions::default()).unwrap();
        for lam in [0.5, 0.4, 0.2, 0.1] {
            let beta = back.beta(&path.beta_at(lam).unwrap());
            let oracle = solve_fixed_lambda(
                &p,
                lam,
                OracleOptions { weights: Some(w.to_vec()), ..Default::default() },
            )
            .unwrap();
            assert!(oracle.converged);
            for (a, b) in beta.iter().zip(&oracle.beta) {
                assert!((a - b).abs() < 1e-6, "lambda {lam}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn pilot_weights_invert_the_unpenalized_fit() {
        let p = identity_problem(vec![2.0, 1.0, -1.0]);
        let pilot = pilot_weights(&p).unwrap();
        assert!(pilot.warnings.is_empty());
        let want = [3.0 / 4.0, 3.0, 3.0 / 5.0];
        for (w, want) in pilot.weights.iter().zip(want) {
            assert!((w - want).abs() < 1e-5, "{w} vs {want}");
        }
    }

    #[test]
    fn folds_partition_the_rows() {
        let folds = cv_folds(7, Folds::K(3), 9).unwrap();
        assert_eq!(folds.len(), 3);
        assert_eq!(folds.iter().map(|f| f.len()).sum::<usize>(), 7);
        let mut seen = [false; 7];
        for f in &folds {
            for &i in f {
                assert!(!seen[i], "row {i} in two folds");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        assert_eq!(cv_folds(7, Folds::K(3), 9).unwrap(), folds, "same seed, same folds");

        let loo = cv_folds(4, Folds::LeaveOneOut, 0).unwrap();
        assert_eq!(loo.len(), 4);
        assert!(loo.iter().all(|f| f.len() == 1));
    }

    #[test]
    fn cross_validation_picks_an_argmin_preferring_larger_lambda() {
        // Strong signal, mild noise: the winner must score no worse than
        // every other grid point, and everything before it strictly worse.
        let y = vec![3.0, 2.9, -3.1, -2.8, 0.1, -0.1, 3.05, -2.95];
        let x = vec![
            1.0, 0.0, 0.1, //
            0.9, 0.1, 0.0, //
            -1.0, 0.1, 0.0, //
            -0.9, -0.1, 0.1, //
            0.0, 1.0, -0.1, //
            0.1, -1.0, 0.0, //
            1.1, 0.0, -0.1, //
            -1.0, 0.0, 0.1, //
        ];
        let p = ProblemSpec::new(x, y, LossSpec::quadratic(), GroupStructure::zero_sum(3).unwrap())
            .unwrap();
        let cv = cross_validate(&p, Folds::K(4), 3, &PathOptions::default()).unwrap();
        let best = cv.scores[cv.chosen];
        for (t, s) in cv.scores.iter().enumerate() {
            assert!(*s >= best);
            if t < cv.chosen {
                assert!(*s > best, "tie should have gone to the larger lambda");
            }
        }
        // Determinism end to end.
        let again = cross_validate(&p, Folds::K(4), 3, &PathOptions::default()).unwrap();
        assert_eq!(cv.lambdas, again.lambdas);
        assert_eq!(cv.scores, again.scores);
    }

    #[test]
    fn stability_prefers_real_signal() {
        // Two strong coordinates out of twelve, with enough noise that the
        // cross-validated lambda sits in the interior of the path (at
        // lambda near 0 everything is numerically active and frequencies
        // carry no information). The true pair should clearly dominate.
        let (n, p) = (40, 12);
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let mut x = vec![0.0; n * p];
        for v in x.iter_mut() {
            *v = rng.random::<f64>() * 2.0 - 1.0;
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = 3.0 * x[i * p] - 3.0 * x[i * p + 1] + 3.0 * (rng.random::<f64>() - 0.5);
        }
        let prob =
            ProblemSpec::new(x, y, LossSpec::quadratic(), GroupStructure::zero_sum(p).unwrap())
                .unwrap();
        let opts = StabilityOptions { subsamples: 40, seed: 7, ..Default::default() };
        let rep = stability_selection(&prob, &opts).unwrap();
        assert_eq!(rep.counted + rep.skipped, 40);
        let signal = 0.5 * (rep.probability[0] + rep.probability[1]);
        let noise = rep.probability[2..].iter().sum::<f64>() / (p - 2) as f64;
        assert!(
            signal > noise + 0.4,
            "mean signal {signal} vs mean noise {noise}: {:?}",
            rep.probability
        );
        // Reruns reproduce bit for bit.
        let again = stability_selection(&prob, &opts).unwrap();
        assert_eq!(rep.probability, again.probability);
    }
}
