//! Piecewise-quadratic loss families.
//!
//! Every supported loss is `l(r) = a(r) r^2 + b(r) r + c(r)` with piecewise
//! constant `a, b, c` over segments of the real line separated by knots, where
//! `r` is either a regression residual `y - x'beta` or a classification margin
//! `y * x'beta`. Convexity (`a >= 0` plus nondecreasing derivative across
//! knots) and continuity are validated at construction, because everything
//! downstream — the piecewise-linear path, the event algebra, the oracle's
//! step sizes — leans on them.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::ModelError;

/// How the scalar `r` fed to the loss is formed from `(y, x'beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualKind {
    /// `r = y - x'beta` (regression).
    Residual,
    /// `r = y * x'beta` with `y` in `{-1, +1}` (classification margin).
    Margin,
}

/// One quadratic piece `a r^2 + b r + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// A validated piecewise-quadratic loss.
///
/// Segment `s` covers `(knots[s-1], knots[s]]`: a point exactly on a knot
/// belongs to the left segment. Continuity makes the value and derivative
/// unambiguous there; the convention only matters for which curvature the
/// path solver uses between events, and it handles knot crossings explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    knots: Vec<f64>,
    segments: Vec<Segment>,
    kind: ResidualKind,
    name: String,
}

/// Relative tolerance for the continuity checks at knots.
const CONTINUITY_TOL: f64 = 1e-9;

impl LossSpec {
    /// Build and validate a custom loss. `segments.len()` must be
    /// `knots.len() + 1`; knots strictly increasing and finite; each `a >= 0`;
    /// value and derivative continuous at every knot (derivative continuity
    /// plus `a >= 0` is exactly convexity here).
    pub fn new(
        knots: Vec<f64>,
        segments: Vec<Segment>,
        kind: ResidualKind,
        name: &str,
    ) -> Result<Self, ModelError> {
        if segments.len() != knots.len() + 1 {
            return Err(ModelError::InvalidLoss(format!(
                "{} segments for {} knots; need knots + 1",
                segments.len(),
                knots.len()
            )));
        }
        if knots.iter().any(|t| !t.is_finite()) {
            return Err(ModelError::InvalidLoss(String::from("non-finite knot")));
        }
        for w in knots.windows(2) {
            if w[0] >= w[1] {
                return Err(ModelError::InvalidLoss(String::from(
                    "knots must be strictly increasing",
                )));
            }
        }
        for (s, seg) in segments.iter().enumerate() {
            if !(seg.a.is_finite() && seg.b.is_finite() && seg.c.is_finite()) {
                return Err(ModelError::InvalidLoss(format!(
                    "non-finite coefficient in segment {s}"
                )));
            }
            if seg.a < 0.0 {
                return Err(ModelError::InvalidLoss(format!(
                    "segment {s} has negative curvature a = {}",
                    seg.a
                )));
            }
        }
        for (s, &t) in knots.iter().enumerate() {
            let left = &segments[s];
            let right = &segments[s + 1];
            let scale = 1.0 + t.abs() + t * t;
            let lv = left.a * t * t + left.b * t + left.c;
            let rv = right.a * t * t + right.b * t + right.c;
            if (lv - rv).abs() > CONTINUITY_TOL * scale {
                return Err(ModelError::InvalidLoss(format!(
                    "value jump {} at knot {t}",
                    lv - rv
                )));
            }
            let ld = 2.0 * left.a * t + left.b;
            let rd = 2.0 * right.a * t + right.b;
            if (ld - rd).abs() > CONTINUITY_TOL * scale {
                return Err(ModelError::InvalidLoss(format!(
                    "derivative jump {} at knot {t} (kink in the loss breaks convex gluing)",
                    ld - rd
                )));
            }
        }
        Ok(Self {
            knots,
            segments,
            kind,
            name: String::from(name),
        })
    }

    /// Look a builtin up by name: `quadratic`, `asymmetric-l2`,
    /// `huber-regression`, `squared-hinge`, `huber-hinge`. `h` is the knot
    /// parameter of the parametric families; `gamma` shifts the squared-hinge
    /// margin and is rejected elsewhere.
    pub fn builtin(name: &str, h: Option<f64>, gamma: Option<f64>) -> Result<Self, ModelError> {
        if gamma.is_some() && name != "squared-hinge" {
            return Err(ModelError::LossParameter(format!(
                "gamma only applies to squared-hinge, not {name}"
            )));
        }
        let need_h = |h: Option<f64>| {
            h.ok_or_else(|| ModelError::LossParameter(format!("{name} requires parameter h")))
        };
        match name {
            "quadratic" => Ok(Self::quadratic()),
            "asymmetric-l2" => Self::asymmetric_l2(need_h(h)?),
            "huber-regression" => Self::huber_regression(need_h(h)?),
            "squared-hinge" => Self::squared_hinge(gamma.unwrap_or(0.0)),
            "huber-hinge" => Self::huber_hinge(need_h(h)?),
            other => Err(ModelError::UnknownLoss(String::from(other))),
        }
    }

    /// `l(r) = r^2 / 2`, no knots.
    pub fn quadratic() -> Self {
        Self {
            knots: vec![],
            segments: vec![Segment { a: 0.5, b: 0.0, c: 0.0 }],
            kind: ResidualKind::Residual,
            name: String::from("quadratic"),
        }
    }

    /// Pinball-flavoured squared loss: `(1-h) r^2 / 2` for `r <= 0`,
    /// `h r^2 / 2` for `r > 0`, with `h` in (0, 1).
    pub fn asymmetric_l2(h: f64) -> Result<Self, ModelError> {
        if !(h > 0.0 && h < 1.0) {
            return Err(ModelError::LossParameter(format!(
                "asymmetric-l2 requires 0 < h < 1, got {h}"
            )));
        }
        Self::new(
            vec![0.0],
            vec![
                Segment { a: (1.0 - h) / 2.0, b: 0.0, c: 0.0 },
                Segment { a: h / 2.0, b: 0.0, c: 0.0 },
            ],
            ResidualKind::Residual,
            "asymmetric-l2",
        )
    }

    /// Huber: quadratic `r^2/2` inside `[-h, h]`, linear with slope `±h`
    /// outside (`h |r| - h^2/2`), `h > 0`.
    pub fn huber_regression(h: f64) -> Result<Self, ModelError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(ModelError::LossParameter(format!(
                "huber-regression requires h > 0, got {h}"
            )));
        }
        Self::new(
            vec![-h, h],
            vec![
                Segment { a: 0.0, b: -h, c: -h * h / 2.0 },
                Segment { a: 0.5, b: 0.0, c: 0.0 },
                Segment { a: 0.0, b: h, c: -h * h / 2.0 },
            ],
            ResidualKind::Residual,
            "huber-regression",
        )
    }

    /// Squared hinge on the margin: `((1 + gamma) - r)^2 / 2` below the
    /// (shifted) margin `1 + gamma`, zero above it. `gamma = 0` is the
    /// standard squared hinge.
    pub fn squared_hinge(gamma: f64) -> Result<Self, ModelError> {
        if !gamma.is_finite() || 1.0 + gamma <= 0.0 {
            return Err(ModelError::LossParameter(format!(
                "squared-hinge margin shift must keep 1 + gamma > 0, got gamma = {gamma}"
            )));
        }
        let m = 1.0 + gamma;
        Self::new(
            vec![m],
            vec![
                Segment { a: 0.5, b: -m, c: m * m / 2.0 },
                Segment { a: 0.0, b: 0.0, c: 0.0 },
            ],
            ResidualKind::Margin,
            "squared-hinge",
        )
    }

    /// Huberized hinge on the margin: linear with slope `h - 1` below `h`,
    /// quadratic `(1 - r)^2 / 2` on `(h, 1]`, zero above 1. Requires `h < 1`
    /// strictly — at `h = 1` the quadratic segment vanishes and the loss
    /// degenerates.
    pub fn huber_hinge(h: f64) -> Result<Self, ModelError> {
        if !(h < 1.0 && h.is_finite()) {
            return Err(ModelError::LossParameter(format!(
                "huber-hinge requires h < 1, got {h}"
            )));
        }
        Self::new(
            vec![h, 1.0],
            vec![
                Segment { a: 0.0, b: h - 1.0, c: (1.0 - h * h) / 2.0 },
                Segment { a: 0.5, b: -1.0, c: 0.5 },
                Segment { a: 0.0, b: 0.0, c: 0.0 },
            ],
            ResidualKind::Margin,
            "huber-hinge",
        )
    }

    pub fn kind(&self) -> ResidualKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn segment(&self, s: usize) -> &Segment {
        &self.segments[s]
    }

    /// Index of the segment containing `r`: the number of knots strictly
    /// below `r`, so a point exactly on a knot lands in the left segment.
    pub fn segment_index(&self, r: f64) -> usize {
        self.knots.iter().take_while(|&&t| t < r).count()
    }

    /// Loss value at `r`.
    pub fn value(&self, r: f64) -> f64 {
        let s = &self.segments[self.segment_index(r)];
        s.a * r * r + s.b * r + s.c
    }

    /// Derivative `l'(r) = 2 a r + b`.
    pub fn deriv(&self, r: f64) -> f64 {
        let s = &self.segments[self.segment_index(r)];
        2.0 * s.a * r + s.b
    }

    /// Largest curvature coefficient across segments; bounds the Lipschitz
    /// constant of the loss derivative (`l''` is at most `2 a_max`).
    pub fn max_curvature(&self) -> f64 {
        self.segments.iter().fold(0.0, |m, s| m.max(s.a))
    }

    /// True for the plain quadratic loss (the only one BIC's Gaussian
    /// log-likelihood form is valid for).
    pub fn is_plain_quadratic(&self) -> bool {
        self.kind == ResidualKind::Residual
            && self.knots.is_empty()
            && self.segments[0] == Segment { a: 0.5, b: 0.0, c: 0.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_half_square() {
        let l = LossSpec::quadratic();
        assert_eq!(l.value(2.0), 2.0);
        assert_eq!(l.deriv(2.0), 2.0);
        assert_eq!(l.knots().len(), 0);
        assert!(l.is_plain_quadratic());
    }

    #[test]
    fn huber_matches_printed_formula() {
        // h = 1 at r = 2: linear branch h|r| - h^2/2 = 2 - 0.5 = 1.5.
        let l = LossSpec::huber_regression(1.0).unwrap();
        assert!((l.value(2.0) - 1.5).abs() < 1e-15);
        assert!((l.value(-2.0) - 1.5).abs() < 1e-15);
        // h = 0.5 at r = 2: 0.5*2 - 0.125 = 0.875.
        let l = LossSpec::huber_regression(0.5).unwrap();
        assert!((l.value(2.0) - 0.875).abs() < 1e-15);
        // Inside the knot it is the plain half-square.
        assert!((l.value(0.3) - 0.045).abs() < 1e-15);
    }

    #[test]
    fn squared_hinge_zero_beyond_margin() {
        let l = LossSpec::squared_hinge(0.0).unwrap();
        assert_eq!(l.kind(), ResidualKind::Margin);
        assert_eq!(l.value(2.0), 0.0);
        assert!((l.value(0.0) - 0.5).abs() < 1e-15);
        assert!((l.value(0.5) - 0.125).abs() < 1e-15);
        // Shifted margin moves the knot.
        let l = LossSpec::squared_hinge(0.5).unwrap();
        assert_eq!(l.knots(), &[1.5]);
        assert!((l.value(1.0) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn huber_hinge_is_continuous_and_rejects_degenerate_h() {
        let l = LossSpec::huber_hinge(0.5).unwrap();
        // At the lower knot both branches give (1-h)^2/2 = 0.125.
        assert!((l.value(0.5) - 0.125).abs() < 1e-15);
        // Below the knot: slope h-1 = -0.5 line.
        assert!((l.value(0.0) - (1.0 - 0.25) / 2.0).abs() < 1e-15);
        assert_eq!(l.value(1.5), 0.0);
        assert!(LossSpec::huber_hinge(1.0).is_err());
        assert!(LossSpec::huber_hinge(1.5).is_err());
    }

    #[test]
    fn asymmetric_l2_splits_curvature() {
        let l = LossSpec::asymmetric_l2(0.3).unwrap();
        // r < 0 branch: (1-h) r^2 / 2.
        assert!((l.value(-2.0) - 0.7 * 4.0 / 2.0).abs() < 1e-15);
        // r > 0 branch: h r^2 / 2.
        assert!((l.value(2.0) - 0.3 * 4.0 / 2.0).abs() < 1e-15);
        assert!(LossSpec::asymmetric_l2(0.0).is_err());
        assert!(LossSpec::asymmetric_l2(1.0).is_err());
    }

    #[test]
    fn builtin_lookup_and_parameter_policing() {
        assert!(LossSpec::builtin("quadratic", None, None).is_ok());
        assert!(LossSpec::builtin("huber-regression", Some(0.5), None).is_ok());
        assert!(LossSpec::builtin("huber-regression", None, None).is_err());
        assert!(LossSpec::builtin("quadratic", None, Some(0.1)).is_err());
        assert!(matches!(
            LossSpec::builtin("cauchy", None, None),
            Err(ModelError::UnknownLoss(_))
        ));
    }

    #[test]
    fn segment_index_uses_left_closed_knots() {
        let l = LossSpec::huber_regression(1.0).unwrap();
        assert_eq!(l.segment_index(-1.5), 0);
        assert_eq!(l.segment_index(-1.0), 0); // exactly on a knot -> left
        assert_eq!(l.segment_index(0.0), 1);
        assert_eq!(l.segment_index(1.0), 1);
        assert_eq!(l.segment_index(1.0 + 1e-12), 2);
    }

    #[test]
    fn custom_loss_validation_catches_breaks() {
        // Value jump at the knot.
        let bad = LossSpec::new(
            vec![0.0],
            vec![Segment { a: 0.5, b: 0.0, c: 0.0 }, Segment { a: 0.5, b: 0.0, c: 1.0 }],
            ResidualKind::Residual,
            "broken",
        );
        assert!(bad.is_err());
        // Derivative jump (a kink) at the knot.
        let bad = LossSpec::new(
            vec![0.0],
            vec![Segment { a: 0.0, b: -1.0, c: 0.0 }, Segment { a: 0.0, b: 1.0, c: 0.0 }],
            ResidualKind::Residual,
            "abs",
        );
        assert!(bad.is_err());
        // Negative curvature.
        let bad = LossSpec::new(
            vec![],
            vec![Segment { a: -0.5, b: 0.0, c: 0.0 }],
            ResidualKind::Residual,
            "concave",
        );
        assert!(bad.is_err());
    }

    #[test]
    fn derivative_matches_finite_differences_away_from_knots() {
        let losses = [
            LossSpec::quadratic(),
            LossSpec::asymmetric_l2(0.25).unwrap(),
            LossSpec::huber_regression(0.7).unwrap(),
            LossSpec::squared_hinge(0.0).unwrap(),
            LossSpec::huber_hinge(0.3).unwrap(),
        ];
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 6.0 - 3.0
        };
        for l in &losses {
            for _ in 0..200 {
                let r = next();
                if l.knots().iter().any(|t| (r - t).abs() < 1e-3) {
                    continue;
                }
                let eps = 1e-6;
                let fd = (l.value(r + eps) - l.value(r - eps)) / (2.0 * eps);
                assert!(
                    (fd - l.deriv(r)).abs() < 1e-6 * (1.0 + fd.abs()),
                    "{}: derivative mismatch at r = {r}",
                    l.name()
                );
            }
        }
    }
}
