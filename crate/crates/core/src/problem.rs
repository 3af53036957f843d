//! Problem container: data, loss, and group constraints, plus the gradient
//! and curvature machinery shared by the path solver, the KKT checker, and
//! the fixed-λ oracle.
//!
//! Internally both task kinds collapse to one parametrization. Writing
//! `r_i = r0_i + z_i' beta` with
//!
//! - regression: `r0_i = y_i`, `z_i = -x_i`
//! - margin:     `r0_i = 0`,   `z_i = y_i x_i`
//!
//! gives `grad L(beta) = sum_i l'(r_i) z_i` and curvature matrix
//! `H = sum_i 2 a(r_i) z_i z_i'` in both cases (for margins, `y_i^2 = 1`
//! makes `H` identical to the regression form). Every downstream module works
//! in `(r0, Z)` and never branches on the task again.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::ModelError;
use crate::groups::GroupStructure;
use crate::linalg;
use crate::loss::{LossSpec, ResidualKind};

/// An immutable, validated problem instance. Construction is the only place
/// dimensions and label conventions are checked; everything downstream
/// trusts it.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    x: Vec<f64>, // n * p, row-major, already log-transformed for compositional use
    y: Vec<f64>,
    z: Vec<f64>, // n * p, row-major: -x or y.*x depending on the loss kind
    n: usize,
    p: usize,
    loss: LossSpec,
    groups: GroupStructure,
}

impl ProblemSpec {
    pub fn new(
        x: Vec<f64>,
        y: Vec<f64>,
        loss: LossSpec,
        groups: GroupStructure,
    ) -> Result<Self, ModelError> {
        let n = y.len();
        let p = groups.p();
        if n == 0 || p == 0 {
            return Err(ModelError::Empty);
        }
        if x.len() != n * p {
            return Err(ModelError::DimensionMismatch(format!(
                "design matrix has {} entries, expected n*p = {}*{}",
                x.len(),
                n,
                p
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("design matrix"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("response"));
        }
        if loss.kind() == ResidualKind::Margin {
            for (row, &v) in y.iter().enumerate() {
                if v != 1.0 && v != -1.0 {
                    return Err(ModelError::BadLabel { row, value: v });
                }
            }
        }
        let mut z = vec![0.0; n * p];
        match loss.kind() {
            ResidualKind::Residual => {
                for (zi, xi) in z.iter_mut().zip(x.iter()) {
                    *zi = -xi;
                }
            }
            ResidualKind::Margin => {
                for i in 0..n {
                    for j in 0..p {
                        z[i * p + j] = y[i] * x[i * p + j];
                    }
                }
            }
        }
        Ok(Self { x, y, z, n, p, loss, groups })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn loss(&self) -> &LossSpec {
        &self.loss
    }

    pub fn groups(&self) -> &GroupStructure {
        &self.groups
    }

    /// Unified data row: `-x_i` for regression, `y_i * x_i` for margins.
    pub(crate) fn z_row(&self, i: usize) -> &[f64] {
        &self.z[i * self.p..(i + 1) * self.p]
    }

    pub(crate) fn z(&self) -> &[f64] {
        &self.z
    }

    /// Baseline residual at `beta = 0`.
    pub(crate) fn r0(&self, i: usize) -> f64 {
        match self.loss.kind() {
            ResidualKind::Residual => self.y[i],
            ResidualKind::Margin => 0.0,
        }
    }

    /// Linear predictor `x_i' beta`.
    pub fn predict(&self, i: usize, beta: &[f64]) -> f64 {
        linalg::dot(self.x_row(i), beta)
    }

    /// All `r_i = r0_i + z_i' beta`.
    pub fn residuals(&self, beta: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.n];
        for i in 0..self.n {
            r[i] = self.r0(i) + linalg::dot(self.z_row(i), beta);
        }
        r
    }

    /// `L(beta) = sum_i l(r_i)`.
    pub fn loss_value(&self, beta: &[f64]) -> f64 {
        self.residuals(beta).iter().map(|&r| self.loss.value(r)).sum()
    }

    /// `L(beta) + lambda ||beta||_1`.
    pub fn objective(&self, beta: &[f64], lambda: f64) -> f64 {
        self.loss_value(beta) + lambda * linalg::l1_norm(beta)
    }

    /// `L(beta) + lambda sum_j w_j |beta_j|` for the adaptive penalty.
    pub fn weighted_objective(&self, beta: &[f64], lambda: f64, weights: &[f64]) -> f64 {
        let pen: f64 = beta.iter().zip(weights).map(|(b, w)| w * b.abs()).sum();
        self.loss_value(beta) + lambda * pen
    }

    /// Full gradient `sum_i l'(r_i) z_i` from precomputed residuals.
    pub(crate) fn gradient_from_residuals(&self, resid: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.p];
        for i in 0..self.n {
            let w = self.loss.deriv(resid[i]);
            if w == 0.0 {
                continue;
            }
            let zi = self.z_row(i);
            for j in 0..self.p {
                g[j] += w * zi[j];
            }
        }
        g
    }

    /// Gradient of the data term at `beta`.
    pub fn gradient(&self, beta: &[f64]) -> Vec<f64> {
        self.gradient_from_residuals(&self.residuals(beta))
    }

    /// `max(1, ||grad L(0)||_inf)` — the scale on which KKT tolerances live.
    pub fn gradient_scale(&self) -> f64 {
        let g = self.gradient(&vec![0.0; self.p]);
        linalg::inf_norm(&g).max(1.0)
    }

    /// Restriction to a subset of rows (same loss, groups, and weights);
    /// used by cross-validation and stability subsampling.
    pub fn subset_rows(&self, rows: &[usize]) -> Result<Self, ModelError> {
        let mut x = Vec::with_capacity(rows.len() * self.p);
        let mut y = Vec::with_capacity(rows.len());
        for &i in rows {
            if i >= self.n {
                return Err(ModelError::BadArgument(format!(
                    "row index {i} out of range for n = {}",
                    self.n
                )));
            }
            x.extend_from_slice(self.x_row(i));
            y.push(self.y[i]);
        }
        Self::new(x, y, self.loss.clone(), self.groups.clone())
    }

    /// Per-observation squared-error / misclassification for model scoring:
    /// `(y - x'beta)^2` for regression, `1` iff `y * x'beta <= 0` for margins.
    pub fn prediction_error(&self, i: usize, beta: &[f64]) -> f64 {
        let fit = self.predict(i, beta);
        match self.loss.kind() {
            ResidualKind::Residual => {
                let e = self.y[i] - fit;
                e * e
            }
            ResidualKind::Margin => {
                if self.y[i] * fit <= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Replace each design column `x_j` by `x_j / w_j` and each constraint weight
/// `d_j` by `d_j / w_j`. The standard path on the transformed problem, mapped
/// back via `beta_j = gamma_j / w_j`, solves the weighted-penalty problem
/// `L(beta) + lambda sum w_j |beta_j|` under the original constraints; the
/// group multipliers transfer unchanged.
pub fn reweight_problem(problem: &ProblemSpec, weights: &[f64]) -> Result<ProblemSpec, ModelError> {
    if weights.len() != problem.p() {
        return Err(ModelError::DimensionMismatch(String::from(
            "weights length != p",
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(ModelError::BadArgument(String::from(
            "adaptive weights must be positive and finite",
        )));
    }
    let (n, p) = (problem.n(), problem.p());
    let mut x = problem.x().to_vec();
    for i in 0..n {
        for j in 0..p {
            x[i * p + j] /= weights[j];
        }
    }
    let d: Vec<f64> = problem
        .groups()
        .d()
        .iter()
        .zip(weights)
        .map(|(d, w)| d / w)
        .collect();
    let groups = GroupStructure::new(&problem.groups().sizes(), d)?;
    ProblemSpec::new(x, problem.y().to_vec(), problem.loss().clone(), groups)
}
