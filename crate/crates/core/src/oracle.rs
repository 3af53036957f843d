//! Independent fixed-`lambda` solvers used to referee the path algorithm.
//!
//! Nothing here shares logic with the homotopy in [`crate::path`]: the main
//! solver is a three-operator splitting iteration (projection onto the
//! constraint set + soft thresholding + gradient step), finished by an exact
//! solve on the face the iterate identifies; the fallback is a grid search
//! over the constraint null space, and `lambda_max_bisect` recovers the
//! entry point of the path by pure bisection on the KKT verdict. Agreement
//! between these and the path is therefore evidence, not tautology.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::ModelError;
use crate::kkt;
use crate::linalg;
use crate::problem::ProblemSpec;

/// Tuning for [`FixedLambdaSolver`]. `weights` switches the penalty to
/// `lambda * sum_j w_j |beta_j|`, which is what the adaptive variant needs.
#[derive(Debug, Clone)]
pub struct OracleOptions {
    /// Relative stopping tolerance on the splitting residuals.
    pub tol: f64,
    /// Iteration budget before giving up with `converged = false`.
    pub max_iter: usize,
    /// Optional positive per-coordinate penalty weights.
    pub weights: Option<Vec<f64>>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 200_000, weights: None }
    }
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub beta: Vec<f64>,
    /// Objective value (weighted penalty if weights were supplied).
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Davis–Yin style splitting solver with persistent internal state, so a
/// sweep over a `lambda` grid warm-starts each solve from the previous one.
pub struct FixedLambdaSolver<'a> {
    problem: &'a ProblemSpec,
    opts: OracleOptions,
    z: Vec<f64>,
    gamma: f64,
}

impl<'a> FixedLambdaSolver<'a> {
    pub fn new(problem: &'a ProblemSpec, opts: OracleOptions) -> Result<Self, ModelError> {
        if let Some(w) = &opts.weights {
            if w.len() != problem.p() {
                return Err(ModelError::DimensionMismatch(format!(
                    "weights length {} != p = {}",
                    w.len(),
                    problem.p()
                )));
            }
            if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(ModelError::BadArgument(
                    "penalty weights must be positive and finite".into(),
                ));
            }
        }
        // Step size from the smoothness of the data term:
        // lip = 2 a_max ||Z||_op^2, gamma safely inside (0, 2/lip).
        let op = linalg::op_norm_sq(problem.z(), problem.n(), problem.p(), 50);
        let lip = 2.0 * problem.loss().max_curvature() * op;
        let gamma = if lip > 1e-300 { 1.0 / (1.05 * lip) } else { 1.0 };
        Ok(Self { problem, opts, z: vec![0.0; problem.p()], gamma })
    }

    /// Reset the warm-start state to the origin.
    pub fn reset(&mut self) {
        self.z.fill(0.0);
    }

    pub fn solve(&mut self, lambda: f64) -> OracleSolution {
        let p = self.problem.p();
        let tol = self.opts.tol;
        let mut u = vec![0.0; p];
        let mut v = vec![0.0; p];
        let mut u_prev = vec![0.0; p];
        let mut have_prev = false;
        let mut iterations = 0;
        let mut converged = false;

        while iterations < self.opts.max_iter {
            iterations += 1;

            // u = project(z): exactly feasible by construction.
            u.copy_from_slice(&self.z);
            project_constraints(self.problem, &mut u);

            // v = soft-threshold(2u - z - gamma grad L(u)).
            let grad = self.problem.gradient(&u);
            let mut primal = 0.0_f64;
            for j in 0..p {
                let w = self.opts.weights.as_ref().map_or(1.0, |w| w[j]);
                let t = 2.0 * u[j] - self.z[j] - self.gamma * grad[j];
                v[j] = soft_threshold(t, self.gamma * lambda * w);
                primal = primal.max((u[j] - v[j]).abs());
            }
            let dual = if have_prev {
                let mut m = 0.0_f64;
                for j in 0..p {
                    m = m.max((u[j] - u_prev[j]).abs());
                }
                m
            } else {
                f64::INFINITY
            };
            let scale = linalg::inf_norm(&u).max(1.0);
            if primal <= tol * scale && dual <= tol * scale {
                converged = true;
                break;
            }

            for j in 0..p {
                self.z[j] += v[j] - u[j];
            }
            u_prev.copy_from_slice(&u);
            have_prev = true;

            // Faces with little curvature make the iteration crawl; try to
            // finish the job exactly on the face the iterate points at. The
            // first iterate of a warm-started solve is often the closest
            // point the iteration sees for a while, so probe it right away.
            let warm_first = iterations == 1 && linalg::inf_norm(&u) > 0.0;
            if (warm_first || iterations % 512 == 0) && self.opts.weights.is_none() {
                if let Some(exact) = polish(self.problem, lambda, &u) {
                    return self.finish(exact, lambda, iterations);
                }
            }

            // The step size is derived from a power-method estimate; if that
            // undershot and the iteration blows up, back off and restart.
            if iterations % 128 == 0 && linalg::inf_norm(&self.z) > 1e10 {
                self.gamma *= 0.5;
                self.z.fill(0.0);
                have_prev = false;
            }
        }

        // Exact refinement both tightens a converged iterate and rescues a
        // crawling one. `polish` only ever returns certified points, so this
        // cannot make the answer worse.
        if self.opts.weights.is_none() {
            if let Some(exact) = polish(self.problem, lambda, &u) {
                return self.finish(exact, lambda, iterations);
            }
        }

        let objective = match &self.opts.weights {
            Some(w) => self.problem.weighted_objective(&u, lambda, w),
            None => self.problem.objective(&u, lambda),
        };
        OracleSolution { beta: u, objective, converged, iterations }
    }

    fn finish(&mut self, beta: Vec<f64>, lambda: f64, iterations: usize) -> OracleSolution {
        self.z.copy_from_slice(&beta);
        let objective = self.problem.objective(&beta, lambda);
        OracleSolution { beta, objective, converged: true, iterations }
    }
}

/// Finish a splitting solve exactly. The iterate suggests a face: which
/// coordinates are nonzero, their signs, and which loss segment each sample
/// sits on. On that face the stationarity conditions are a linear system, so
/// solve it, re-derive the assignments from the solution, and repeat until
/// they stop moving. Coordinates whose solved value crosses zero are
/// dropped; the sweep over thresholds and entry slacks covers the cases
/// where the initial cut kept too much or (when the iterate is still far
/// off) missed coordinates that are active at the optimum. A candidate is
/// returned only when the KKT certificate vouches for it, which keeps wrong
/// face guesses out of the results.
fn polish(problem: &ProblemSpec, lambda: f64, start: &[f64]) -> Option<Vec<f64>> {
    let scale = linalg::inf_norm(start).max(1.0);
    for entry in [None, Some(0.05), Some(0.25)] {
        for rel in [1e-8, 1e-5, 1e-3, 1e-2] {
            if let Some(beta) = polish_face(problem, lambda, start, rel * scale, entry) {
                return Some(beta);
            }
        }
    }
    None
}

fn polish_face(
    problem: &ProblemSpec,
    lambda: f64,
    start: &[f64],
    thr: f64,
    entry: Option<f64>,
) -> Option<Vec<f64>> {
    let p = problem.p();
    let n = problem.n();
    let z = problem.z();
    let loss = problem.loss();
    let groups = problem.groups();
    let d = groups.d();

    let mut active: Vec<bool> = start.iter().map(|b| b.abs() > thr).collect();
    let mut sign: Vec<f64> =
        start.iter().map(|b| if *b >= 0.0 { 1.0 } else { -1.0 }).collect();
    let mut beta: Vec<f64> = (0..p).map(|j| if active[j] { start[j] } else { 0.0 }).collect();

    // An iterate crawling toward the optimum can hold coordinates near zero
    // that belong on the face. With an entry slack, let every coordinate
    // whose stationarity term sits close to the bound (at the verifier's
    // witness multipliers) join the initial guess; wrong entries exit
    // through the sign check below.
    if let Some(frac) = entry {
        let report = kkt::verify_kkt(problem, &beta, lambda, None).ok()?;
        let grad = problem.gradient(&beta);
        let slack = frac * lambda + 1e-8 * problem.gradient_scale();
        for j in 0..p {
            if active[j] {
                continue;
            }
            let mu = report.mu[groups.group_of(j)].filter(|_| d[j] != 0.0).unwrap_or(0.0);
            let shifted = grad[j] + mu * d[j];
            if shifted.abs() >= lambda - slack {
                active[j] = true;
                sign[j] = if shifted > 0.0 { -1.0 } else { 1.0 };
            }
        }
    }

    let mut seg: Vec<usize> = (0..n)
        .map(|i| loss.segment_index(problem.r0(i) + linalg::dot(&z[i * p..(i + 1) * p], &beta)))
        .collect();

    for _ in 0..60 {
        // A group cannot hold exactly one nonzero constrained coordinate:
        // its constraint would pin that coordinate to zero anyway.
        loop {
            let mut pruned = false;
            for k in 0..groups.num_groups() {
                let mut count = 0;
                let mut lone = 0;
                for j in groups.members(k) {
                    if active[j] && d[j] != 0.0 {
                        count += 1;
                        lone = j;
                    }
                }
                if count == 1 {
                    active[lone] = false;
                    pruned = true;
                }
            }
            if !pruned {
                break;
            }
        }
        let cols: Vec<usize> = (0..p).filter(|j| active[*j]).collect();
        let grps: Vec<usize> = (0..groups.num_groups())
            .filter(|k| groups.members(*k).any(|j| active[j] && d[j] != 0.0))
            .collect();
        let na = cols.len();
        let m = na + grps.len();

        // Stationarity on the face: for every active j,
        //   sum_i (2 a_i r_i + b_i) z_ij + lambda s_j + mu_k d_j = 0,
        // which with r_i = r0_i + z_i' beta is linear in (beta_A, mu).
        let mut candidate = vec![0.0; p];
        if m > 0 {
            let mut mat = vec![0.0; m * m];
            let mut rhs = vec![0.0; m];
            for i in 0..n {
                let sg = loss.segment(seg[i]);
                if sg.a == 0.0 && sg.b == 0.0 {
                    continue;
                }
                let zi = &z[i * p..(i + 1) * p];
                let r0 = problem.r0(i);
                for (r, &jr) in cols.iter().enumerate() {
                    rhs[r] -= (2.0 * sg.a * r0 + sg.b) * zi[jr];
                    if sg.a != 0.0 {
                        for (c, &jc) in cols.iter().enumerate() {
                            mat[r * m + c] += 2.0 * sg.a * zi[jr] * zi[jc];
                        }
                    }
                }
            }
            for (r, &jr) in cols.iter().enumerate() {
                rhs[r] -= lambda * sign[jr];
                if d[jr] != 0.0 {
                    if let Some(t) = grps.iter().position(|&k| k == groups.group_of(jr)) {
                        mat[r * m + (na + t)] = d[jr];
                        mat[(na + t) * m + r] = d[jr];
                    }
                }
            }
            if !linalg::solve_in_place(&mut mat, &mut rhs, m) {
                return None;
            }
            for (r, &jr) in cols.iter().enumerate() {
                if !rhs[r].is_finite() {
                    return None;
                }
                candidate[jr] = rhs[r];
            }
        }

        if candidate.iter().any(|v| !v.is_finite()) {
            return None;
        }

        // Damp the move with an exact line search on the true objective.
        // A full step from a wrong segment assignment can bounce a sample
        // across its knot forever; a monotone decrease cannot cycle.
        let mut drift = 0.0_f64;
        for j in 0..p {
            drift = drift.max((candidate[j] - beta[j]).abs());
        }
        let objective_at = |t: f64| {
            let point: Vec<f64> =
                (0..p).map(|j| beta[j] + t * (candidate[j] - beta[j])).collect();
            problem.objective(&point, lambda)
        };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        if objective_at(1.0) > objective_at(0.0) {
            let ratio = 0.5 * (5.0_f64.sqrt() - 1.0);
            let (mut m1, mut m2) = (hi - ratio * (hi - lo), lo + ratio * (hi - lo));
            let (mut f1, mut f2) = (objective_at(m1), objective_at(m2));
            for _ in 0..48 {
                if f1 <= f2 {
                    hi = m2;
                    m2 = m1;
                    f2 = f1;
                    m1 = hi - ratio * (hi - lo);
                    f1 = objective_at(m1);
                } else {
                    lo = m1;
                    m1 = m2;
                    f1 = f2;
                    m2 = lo + ratio * (hi - lo);
                    f2 = objective_at(m2);
                }
            }
        }
        let step = hi;
        for j in 0..p {
            beta[j] += step * (candidate[j] - beta[j]);
        }

        // Re-derive the face from the damped point.
        let mut sign_changed = false;
        for &jr in &cols {
            if beta[jr] * sign[jr] <= 0.0 {
                active[jr] = false;
                beta[jr] = 0.0;
                sign_changed = true;
            }
        }
        let mut seg_changed = false;
        for i in 0..n {
            let s =
                loss.segment_index(problem.r0(i) + linalg::dot(&z[i * p..(i + 1) * p], &beta));
            if s != seg[i] {
                seg[i] = s;
                seg_changed = true;
            }
        }
        // Segment flips without movement are knot-boundary dithering; the
        // loss is C^1 there, so either assignment gives the same point.
        let settled = drift <= 1e-13 * linalg::inf_norm(&beta).max(1.0);
        if step == 1.0 && !sign_changed && (!seg_changed || settled) {
            let report = kkt::verify_kkt(problem, &beta, lambda, Some(1e-9)).ok()?;
            return if report.ok { Some(beta) } else { None };
        }
    }
    None
}

/// One-shot convenience wrapper around [`FixedLambdaSolver`].
pub fn solve_fixed_lambda(
    problem: &ProblemSpec,
    lambda: f64,
    opts: OracleOptions,
) -> Result<OracleSolution, ModelError> {
    Ok(FixedLambdaSolver::new(problem, opts)?.solve(lambda))
}

fn soft_threshold(t: f64, thr: f64) -> f64 {
    if t > thr {
        t - thr
    } else if t < -thr {
        t + thr
    } else {
        0.0
    }
}

/// Orthogonal projection onto `{beta : d_k' beta_k = 0 for all k}`, applied
/// group by group.
fn project_constraints(problem: &ProblemSpec, beta: &mut [f64]) {
    let groups = problem.groups();
    let d = groups.d();
    for k in 0..groups.num_groups() {
        let members = groups.members(k);
        let mut val = 0.0;
        let mut nsq = 0.0;
        for j in members.clone() {
            val += d[j] * beta[j];
            nsq += d[j] * d[j];
        }
        if nsq == 0.0 {
            continue;
        }
        let shift = val / nsq;
        for j in members {
            beta[j] -= d[j] * shift;
        }
    }
}

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub beta: Vec<f64>,
    pub objective: f64,
    /// True when the minimizer sits on the edge of the search box, i.e. the
    /// radius was too small to trust the answer.
    pub on_boundary: bool,
}

/// Exhaustive grid minimization for problems with a single group and at most
/// four coordinates. The grid lives in a basis of the constraint null space
/// (so every evaluated point is exactly feasible) and each basis coefficient
/// ranges over `[-grid_radius, grid_radius]` in steps of `grid_step`.
pub fn brute_force_tiny(
    problem: &ProblemSpec,
    lambda: f64,
    grid_radius: f64,
    grid_step: f64,
) -> Result<BruteForceResult, ModelError> {
    let p = problem.p();
    if problem.groups().num_groups() != 1 || p > 4 {
        return Err(ModelError::BadArgument(
            "brute force supports a single group with p <= 4".into(),
        ));
    }
    if !(grid_radius > 0.0 && grid_step > 0.0 && grid_step <= grid_radius) {
        return Err(ModelError::BadArgument(
            "need 0 < grid_step <= grid_radius".into(),
        ));
    }
    let d = problem.groups().d();
    // Null-space basis: pivot on the largest |d|, pair every other
    // constrained coordinate with it, and pass free coordinates through.
    let pivot = (0..p)
        .max_by(|&a, &b| d[a].abs().partial_cmp(&d[b].abs()).unwrap())
        .unwrap();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for j in 0..p {
        if j == pivot {
            continue;
        }
        let mut v = vec![0.0; p];
        v[j] = 1.0;
        if d[j] != 0.0 {
            v[pivot] = -d[j] / d[pivot];
        }
        basis.push(v);
    }

    let steps = (grid_radius / grid_step) as i64;
    let axis: Vec<f64> = (-steps..=steps).map(|s| s as f64 * grid_step).collect();
    let q = basis.len();
    let mut idx = vec![0usize; q];
    let mut best = f64::INFINITY;
    let mut best_beta = vec![0.0; p];
    let mut best_boundary = false;
    loop {
        let mut beta = vec![0.0; p];
        let mut boundary = false;
        for t in 0..q {
            let c = axis[idx[t]];
            if c.abs() >= grid_radius - 0.5 * grid_step {
                boundary = true;
            }
            for j in 0..p {
                beta[j] += c * basis[t][j];
            }
        }
        let obj = problem.objective(&beta, lambda);
        if obj < best {
            best = obj;
            best_beta = beta;
            best_boundary = boundary;
        }
        // Odometer increment over the q grid axes.
        let mut t = 0;
        loop {
            if t == q {
                return Ok(BruteForceResult {
                    beta: best_beta,
                    objective: best,
                    on_boundary: best_boundary,
                });
            }
            idx[t] += 1;
            if idx[t] < axis.len() {
                break;
            }
            idx[t] = 0;
            t += 1;
        }
    }
}

/// Recover the entry point of the path by bisecting on the KKT verdict for
/// `beta = 0`. Shares no algebra with [`crate::kkt::lambda_max`] beyond the
/// verifier itself, which makes it a useful cross-check.
pub fn lambda_max_bisect(problem: &ProblemSpec) -> f64 {
    let grad0 = problem.gradient(&vec![0.0; problem.p()]);
    let zero = vec![0.0; problem.p()];
    // ||grad L(0)||_inf always certifies beta = 0: every dual interval then
    // contains the weighted mediant of the group's -grad_j / d_j values.
    let mut hi = linalg::inf_norm(&grad0);
    if hi == 0.0 {
        return 0.0;
    }
    let feasible =
        |lam: f64| verify_zero(problem, &zero, lam);
    if feasible(0.0) {
        return 0.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn verify_zero(problem: &ProblemSpec, zero: &[f64], lam: f64) -> bool {
    kkt::verify_kkt(problem, zero, lam, Some(1e-13))
        .map(|r| r.ok)
        .unwrap_or(false)
}

/// Closed-form equality-constrained least squares (`lambda = 0`) for a plain
/// quadratic loss: solve the bordered normal equations
///
/// ```text
/// [ 2a Z'Z  D ] [beta]   [ -2a Z'r0 ]
/// [ D'      0 ] [ mu ] = [    0     ]
/// ```
///
/// Returns `(beta, mu)`. Available as an independent reference for tests and
/// pilot fits; fails when the system is singular (e.g. n < p).
pub fn constrained_least_squares(
    problem: &ProblemSpec,
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    if !problem.loss().is_plain_quadratic() {
        return Err(ModelError::BadArgument(
            "closed-form solve needs a plain quadratic loss".into(),
        ));
    }
    let curv = 0.5; // the plain quadratic has l(r) = r^2 / 2
    let p = problem.p();
    let k = problem.groups().num_groups();
    let m = p + k;
    let z = problem.z();
    let n = problem.n();
    let mut a = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for i in 0..n {
        let zi = &z[i * p..(i + 1) * p];
        let r0 = problem.r0(i);
        for r in 0..p {
            let w = 2.0 * curv * zi[r];
            rhs[r] -= w * r0;
            for c in 0..p {
                a[r * m + c] += w * zi[c];
            }
        }
    }
    let d = problem.groups().d();
    for g in 0..k {
        for j in problem.groups().members(g) {
            a[j * m + (p + g)] = d[j];
            a[(p + g) * m + j] = d[j];
        }
    }
    if !linalg::solve_in_place(&mut a, &mut rhs, m) {
        return Err(ModelError::BadArgument(
            "constrained least-squares system is singular".into(),
        ));
    }
    let mu = rhs.split_off(p);
    Ok((rhs, mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupStructure;
    use crate::kkt::lambda_max;
    use crate::loss::LossSpec;

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
    fn closed_form_centers_the_response() {
        // X = I, zero-sum: the lambda = 0 fit is y minus its mean, and the
        // multiplier absorbs the mean.
        let p = identity_problem(vec![2.0, 1.0, -1.0]);
        let (beta, mu) = constrained_least_squares(&p).unwrap();
        let want = [4.0 / 3.0, 1.0 / 3.0, -5.0 / 3.0];
        for j in 0..3 {
            assert!((beta[j] - want[j]).abs() < 1e-12);
        }
        assert_eq!(mu.len(), 1);
        assert!((mu[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn splitting_matches_closed_form_at_lambda_zero() {
        let p = identity_problem(vec![2.0, 1.0, -1.0]);
        let (beta, _) = constrained_least_squares(&p).unwrap();
        let sol = solve_fixed_lambda(&p, 0.0, OracleOptions::default()).unwrap();
        assert!(sol.converged);
        for j in 0..3 {
            assert!((sol.beta[j] - beta[j]).abs() < 1e-7, "coord {j}: {}", sol.beta[j]);
        }
    }

    #[test]
    fn face_polish_makes_the_answer_exact() {
        // With the face refinement the solver should agree with the closed
        // form to near machine precision, not just splitting tolerance.
        let p = identity_problem(vec![2.0, 1.0, -1.0]);
        let (want, _) = constrained_least_squares(&p).unwrap();
        let sol = solve_fixed_lambda(&p, 0.0, OracleOptions::default()).unwrap();
        assert!(sol.converged);
        for j in 0..3 {
            assert!((sol.beta[j] - want[j]).abs() < 1e-12, "coord {j}: {}", sol.beta[j]);
        }
    }

    #[test]
    fn splitting_matches_hand_solution_on_regression_pair() {
        // X = I2, y = (1, -1): optimum is (1 - lambda, lambda - 1).
        let p = identity_problem(vec![1.0, -1.0]);
        let sol = solve_fixed_lambda(&p, 0.4, OracleOptions::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.beta[0] - 0.6).abs() < 1e-7);
        assert!((sol.beta[1] + 0.6).abs() < 1e-7);
        assert!((sol.objective - 0.64).abs() < 1e-8);
        // Feasibility is exact by construction of the output.
        assert!((sol.beta[0] + sol.beta[1]).abs() < 1e-15);
    }

    #[test]
    fn splitting_matches_hand_solution_on_margin_pair() {
        // Squared hinge, rows (1,0) label +1 and (0,1) label -1; on the
        // feasible line beta = (t, -t) the objective is (t-1)^2 + 2 lambda t,
        // minimized at t = 1 - lambda.
        let x = vec![1.0, 0.0, 0.0, 1.0];
        let y = vec![1.0, -1.0];
        let p = ProblemSpec::new(
            x,
            y,
            LossSpec::squared_hinge(0.0).unwrap(),
            GroupStructure::zero_sum(2).unwrap(),
        )
        .unwrap();
        let sol = solve_fixed_lambda(&p, 0.3, OracleOptions::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.beta[0] - 0.7).abs() < 1e-7);
        assert!((sol.beta[1] + 0.7).abs() < 1e-7);
    }

    #[test]
    fn weighted_penalty_shifts_the_optimum() {
        // Weights (1, 2) on the regression pair: minimize (1-t)^2 + 3 lambda t
        // over beta = (t, -t), so t = 1 - 1.5 lambda.
        let p = identity_problem(vec![1.0, -1.0]);
        let opts = OracleOptions { weights: Some(vec![1.0, 2.0]), ..Default::default() };
        let sol = solve_fixed_lambda(&p, 0.4, opts).unwrap();
        assert!(sol.converged);
        assert!((sol.beta[0] - 0.4).abs() < 1e-7);
        assert!((sol.beta[1] + 0.4).abs() < 1e-7);
    }

    #[test]
    fn warm_started_sweep_agrees_with_fresh_solves() {
        let p = identity_problem(vec![1.5, 0.25, -1.0]);
        let mut solver = FixedLambdaSolver::new(&p, OracleOptions::default()).unwrap();
        for lam in [0.9, 0.6, 0.3, 0.05] {
            let warm = solver.solve(lam);
            let fresh = solve_fixed_lambda(&p, lam, OracleOptions::default()).unwrap();
            assert!(warm.converged && fresh.converged);
            for j in 0..3 {
                assert!((warm.beta[j] - fresh.beta[j]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn grid_search_brackets_the_splitting_answer() {
        let p = identity_problem(vec![1.2, -0.4, -0.8]);
        let lam = 0.3;
        let grid = brute_force_tiny(&p, lam, 2.0, 0.01).unwrap();
        assert!(!grid.on_boundary);
        let sol = solve_fixed_lambda(&p, lam, OracleOptions::default()).unwrap();
        assert!(sol.converged);
        // The iterative solution can only improve on a grid point, and the
        // strictly convex objective keeps the argmins within a grid cell.
        assert!(sol.objective <= grid.objective + 1e-9);
        for j in 0..3 {
            assert!((sol.beta[j] - grid.beta[j]).abs() < 0.02);
        }
    }

    #[test]
    fn boundary_flag_fires_when_radius_too_small() {
        let p = identity_problem(vec![4.0, -4.0]);
        // Optimum near (4, -4) with tiny lambda; radius 1 cannot hold it.
        let grid = brute_force_tiny(&p, 0.01, 1.0, 0.05).unwrap();
        assert!(grid.on_boundary);
    }

    #[test]
    fn bisection_recovers_the_entry_point() {
        let p = identity_problem(vec![1.0, 1.0, -2.0]);
        let direct = lambda_max(&p).lambda_max;
        let bis = lambda_max_bisect(&p);
        assert!((direct - 1.5).abs() < 1e-14);
        assert!((bis - direct).abs() < 1e-10, "bisect {bis} vs direct {direct}");
    }
}
