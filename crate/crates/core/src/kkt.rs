//! Optimality machinery: entry point of the path (`lambda_max`) and an
//! independent certificate checker (`verify_kkt`).
//!
//! Stationarity at a point `beta` with group multipliers `mu_k` reads, for a
//! coordinate `j` in group `k`,
//!
//! ```text
//! grad_j + d_j mu_k = -lambda sign(beta_j)      if beta_j != 0
//! |grad_j + d_j mu_k| <= lambda                 if beta_j == 0
//! ```
//!
//! For fixed `beta` and `lambda` each condition constrains `mu_k` to an
//! interval (a point for active coordinates), so optimality of a whole group
//! is simply "the intervals intersect". That reformulation is what makes an
//! exact `lambda_max` and a cheap verifier possible, and it is deliberately
//! independent of how the path solver organizes its bookkeeping.

use alloc::format;
use alloc::vec::Vec;

use crate::error::ModelError;
use crate::linalg;
use crate::problem::ProblemSpec;

/// Allowed range of a group multiplier implied by one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualInterval {
    pub lo: f64,
    pub hi: f64,
}

impl DualInterval {
    /// Interval for an inactive coordinate: `|grad_j + d_j mu| <= lambda`.
    /// Both orientations of `d_j` collapse to the same `lo/hi` form.
    pub fn inactive(grad_j: f64, d_j: f64, lambda: f64) -> Self {
        let ad = d_j.abs();
        Self {
            lo: -lambda / ad - grad_j / d_j,
            hi: lambda / ad - grad_j / d_j,
        }
    }

    /// Degenerate interval for an active coordinate with sign `s`:
    /// `grad_j + d_j mu = -lambda s` pins `mu` to a point.
    pub fn active(grad_j: f64, d_j: f64, lambda: f64, s: f64) -> Self {
        let c = -(grad_j + lambda * s) / d_j;
        Self { lo: c, hi: c }
    }
}

/// Which coordinates enter the model at `lambda_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    /// A constrained group starts with two coordinates at once: `hi` hits the
    /// upper dual bound (sign `-sign(d_hi)`), `lo` the lower (sign
    /// `+sign(d_lo)`), and the group multiplier starts at the pinch value
    /// `mu`.
    Pair { group: usize, hi: usize, lo: usize, mu: f64 },
    /// An unconstrained coordinate (`d_j = 0`) enters alone with sign
    /// `-sign(grad_j)`.
    Single { coord: usize },
    /// The gradient at zero vanishes; the zero vector is optimal for every
    /// `lambda >= 0` and there is nothing to activate.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaMaxResult {
    pub lambda_max: f64,
    pub activation: Activation,
}

/// Smallest `lambda` at which `beta = 0` is optimal, together with the first
/// activation event.
///
/// For a constrained group the zero vector is optimal iff the inactive
/// intervals of its members intersect. The lower ends fall and the upper ends
/// rise as `lambda` grows, so the critical value is the largest pairwise
/// pinch
///
/// ```text
/// lambda(u, v) = (grad_v / d_v - grad_u / d_u) / (1/|d_u| + 1/|d_v|)
/// ```
///
/// over ordered pairs in the group; unconstrained coordinates contribute
/// `|grad_j|` on their own. Ties go to the smallest `(group, hi, lo)` in
/// iteration order. Rather than enumerating all pairs, each group is solved
/// by walking crossings of the two piecewise-linear dual envelopes (see
/// [`group_pinch`]), which lands on the exact pairwise formula value of the
/// winning pair in a handful of linear scans.
pub fn lambda_max(problem: &ProblemSpec) -> LambdaMaxResult {
    let grad = problem.gradient(&alloc::vec![0.0; problem.p()]);
    let groups = problem.groups();
    let d = groups.d();
    let mut best = 0.0_f64;
    let mut activation = Activation::None;
    for k in 0..groups.num_groups() {
        let members: Vec<usize> = groups.members(k).filter(|&j| d[j] != 0.0).collect();
        if let Some((cand, v, u)) = group_pinch(&members, &grad, d, best) {
            if cand > best {
                let lo_end = -cand / d[u].abs() - grad[u] / d[u];
                let hi_end = cand / d[v].abs() - grad[v] / d[v];
                best = cand;
                activation = Activation::Pair {
                    group: k,
                    hi: v,
                    lo: u,
                    mu: 0.5 * (lo_end + hi_end),
                };
            }
        }
        for j in groups.members(k) {
            if d[j] == 0.0 && grad[j].abs() > best {
                best = grad[j].abs();
                activation = Activation::Single { coord: j };
            }
        }
    }
    LambdaMaxResult { lambda_max: best, activation }
}

/// Largest pairwise pinch value of one group, with the witnessing
/// `(hi, lo)` pair, or `None` when every pair pinches at or below `floor`.
///
/// Feasibility of `mu` at a given `lambda` says
/// `max_u [-q_u - lambda w_u] + max_v [q_v - lambda w_v] <= 0` with
/// `q_j = grad_j / d_j`, `w_j = 1 / |d_j|`. The left side is a sum of two
/// upper envelopes of lines, so it is convex and strictly decreasing in
/// `lambda`; its root is the group's pinch. Starting at `floor` and
/// repeatedly jumping to the zero of the currently-highest (distinct) line
/// pair reaches that root exactly: each jump is the closed-form pinch of one
/// pair, the sequence increases, and it stops when the envelope value at the
/// current point is no longer positive. Argmax scans keep the smallest index
/// on ties, which makes the reported pair the lexicographically smallest
/// `(hi, lo)` among the winners.
fn group_pinch(
    members: &[usize],
    grad: &[f64],
    d: &[f64],
    floor: f64,
) -> Option<(f64, usize, usize)> {
    if members.len() < 2 {
        return None;
    }
    // Line families at a trial lambda: hi side q_j - lambda w_j, lo side
    // -q_j - lambda w_j.
    let line = |j: usize, lam: f64, hi_side: bool| -> f64 {
        let q = grad[j] / d[j];
        let w = 1.0 / d[j].abs();
        if hi_side {
            q - lam * w
        } else {
            -q - lam * w
        }
    };
    // Best and second-best member of one family, smallest index on ties.
    let top2 = |lam: f64, hi_side: bool| -> (usize, usize) {
        let mut b0 = members[0];
        for &j in &members[1..] {
            if line(j, lam, hi_side) > line(b0, lam, hi_side) {
                b0 = j;
            }
        }
        let mut b1 = usize::MAX;
        for &j in members {
            if j == b0 {
                continue;
            }
            if b1 == usize::MAX || line(j, lam, hi_side) > line(b1, lam, hi_side) {
                b1 = j;
            }
        }
        (b0, b1)
    };

    let mut lam = floor;
    let mut found: Option<(f64, usize, usize)> = None;
    for _ in 0..200 {
        let (v0, v1) = top2(lam, true);
        let (u0, u1) = top2(lam, false);
        // The optimal pair must be distinct; when both envelopes peak at the
        // same coordinate, the runner-up on one side takes over (whichever
        // combination keeps the larger sum, smaller `hi` on a tie).
        let (v, u) = if v0 != u0 {
            (v0, u0)
        } else {
            let s_hi = line(v0, lam, true) + line(u1, lam, false);
            let s_lo = line(v1, lam, true) + line(u0, lam, false);
            if s_hi > s_lo || (s_hi == s_lo && v0 < v1) {
                (v0, u1)
            } else {
                (v1, u0)
            }
        };
        if line(v, lam, true) + line(u, lam, false) <= 0.0 {
            break;
        }
        let cross = (grad[v] / d[v] - grad[u] / d[u]) / (1.0 / d[u].abs() + 1.0 / d[v].abs());
        if cross <= lam {
            break;
        }
        lam = cross;
        found = Some((cross, v, u));
    }
    found
}

/// Outcome of a KKT check at a fixed `(beta, lambda)`.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    /// All stationarity intervals intersect (within tolerance) and every
    /// group constraint holds.
    pub ok: bool,
    /// Largest stationarity violation at the best multipliers, in gradient
    /// units. `ok` compares this against `tol * max(1, ||grad L(0)||_inf)`.
    pub worst_violation: f64,
    /// Largest `|d_k' beta_k| / max(1, ||beta_k||_1)` over groups.
    pub constraint_violation: f64,
    /// Witness multiplier per group (the minimizer of that group's worst
    /// stationarity violation); `None` for a group with no constrained
    /// coordinates.
    pub mu: Vec<Option<f64>>,
}

/// Active-set cutoff used consistently across the crate: a coordinate counts
/// as active when `|beta_j| > 1e-12 * max(1, ||beta||_inf)`.
pub(crate) fn active_threshold(beta: &[f64]) -> f64 {
    1e-12 * linalg::inf_norm(beta).max(1.0)
}

/// Check the optimality certificate of `beta` at `lambda`.
///
/// `tol` is relative (default `1e-8`); stationarity is measured against
/// `tol * max(1, ||grad L(0)||_inf)` and the group constraints against
/// `tol * max(1, ||beta_k||_1)`. The verdict comes from exact interval
/// intersection; the reported violation and witness multipliers are then
/// refined by a ternary search per group, since the worst violation as a
/// function of `mu_k` is a max of V-shaped pieces and hence convex.
pub fn verify_kkt(
    problem: &ProblemSpec,
    beta: &[f64],
    lambda: f64,
    tol: Option<f64>,
) -> Result<VerifyReport, ModelError> {
    let p = problem.p();
    if beta.len() != p {
        return Err(ModelError::DimensionMismatch(format!(
            "beta has length {}, expected {}",
            beta.len(),
            p
        )));
    }
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite("beta"));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(ModelError::BadArgument(format!("lambda = {lambda} must be >= 0")));
    }
    let tol_rel = tol.unwrap_or(1e-8);
    let tol_abs = tol_rel * problem.gradient_scale();
    let grad = problem.gradient(beta);
    let thresh = active_threshold(beta);
    let groups = problem.groups();
    let d = groups.d();

    let mut ok = true;
    let mut worst = 0.0_f64;
    let mut constraint_worst = 0.0_f64;
    let mut mu = Vec::with_capacity(groups.num_groups());

    for k in 0..groups.num_groups() {
        let members = groups.members(k);

        // Group constraint, relative to the group's own scale.
        let cval = groups.constraint_value(k, beta).abs();
        let bscale: f64 = members.clone().map(|j| beta[j].abs()).sum::<f64>().max(1.0);
        let crel = cval / bscale;
        constraint_worst = constraint_worst.max(crel);
        if crel > tol_rel {
            ok = false;
        }

        // Intersect the multiplier intervals, inflated by the per-coordinate
        // slack tol_abs / |d_j|; track the uninflated hull for the search
        // bracket and fold mu-free (d_j = 0) coordinates in as constants.
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut hull = (f64::INFINITY, f64::NEG_INFINITY);
        let mut const_viol = 0.0_f64;
        let mut constrained: Vec<(f64, f64, f64)> = Vec::new(); // (grad_j, d_j, sign or NAN)
        for j in members {
            let active = beta[j].abs() > thresh;
            if d[j] != 0.0 {
                let slack = tol_abs / d[j].abs();
                let iv = if active {
                    DualInterval::active(grad[j], d[j], lambda, beta[j].signum())
                } else {
                    DualInterval::inactive(grad[j], d[j], lambda)
                };
                lo = lo.max(iv.lo - slack);
                hi = hi.min(iv.hi + slack);
                hull.0 = hull.0.min(iv.lo);
                hull.1 = hull.1.max(iv.hi);
                constrained.push((grad[j], d[j], if active { beta[j].signum() } else { f64::NAN }));
            } else {
                let v = if active {
                    (grad[j] + lambda * beta[j].signum()).abs()
                } else {
                    (grad[j].abs() - lambda).max(0.0)
                };
                const_viol = const_viol.max(v);
            }
        }
        if const_viol > tol_abs {
            ok = false;
        }

        if constrained.is_empty() {
            worst = worst.max(const_viol);
            mu.push(None);
            continue;
        }
        if lo > hi {
            ok = false;
        }

        // Refine the witness: minimize the group's worst violation over mu.
        let viol_at = |m: f64| -> f64 {
            let mut v = 0.0_f64;
            for &(g, dj, s) in &constrained {
                let phi = g + dj * m;
                v = v.max(if s.is_nan() {
                    (phi.abs() - lambda).max(0.0)
                } else {
                    (phi + lambda * s).abs()
                });
            }
            v
        };
        let (mut a, mut b) = (hull.0 - 1.0, hull.1 + 1.0);
        for _ in 0..200 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if viol_at(m1) <= viol_at(m2) {
                b = m2;
            } else {
                a = m1;
            }
        }
        let witness = 0.5 * (a + b);
        worst = worst.max(viol_at(witness)).max(const_viol);
        mu.push(Some(witness));
    }

    Ok(VerifyReport { ok, worst_violation: worst, constraint_violation: constraint_worst, mu })
}
