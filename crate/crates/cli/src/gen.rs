//! Synthetic compositional regression data with a known sparse zero-sum
//! coefficient vector, for benchmarks and selection experiments.
//!
//! Latent rows are blockwise Gaussian: within each group the mean is
//! `ln(p_k / 2)` for the first five groups (those components dominate the
//! composition) and 0 afterwards, with AR(1) covariance `0.5^|j-l|`. The
//! composition is the softmax of the latent row, the design its logarithm,
//! and the response `X beta* + N(0, 0.5^2)` noise with
//! `beta* = (1, -0.8, 0.6, 0, 0, -1.5, -0.5, 1.2, 0, ...)` planted in the
//! first group (it sums to zero, so the constraint holds exactly).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::CliError;

pub struct Synthetic {
    pub names: Vec<String>,
    pub sizes: Vec<usize>,
    pub y: Vec<f64>,
    /// Simplex rows (softmax of the latent draws), row-major n x p.
    pub comps: Vec<f64>,
    /// Log-composition design, row-major n x p.
    pub design: Vec<f64>,
    /// The pre-softmax Gaussian draws; kept so tests can check moments.
    pub latent: Vec<f64>,
    pub beta_star: Vec<f64>,
}

/// The coefficients planted in the first group.
pub const PLANTED: [f64; 8] = [1.0, -0.8, 0.6, 0.0, 0.0, -1.5, -0.5, 1.2];

pub fn generate(n: usize, sizes: &[usize], seed: u64) -> Result<Synthetic, CliError> {
    if n == 0 {
        return Err(CliError::Input("need at least one sample".into()));
    }
    if sizes.is_empty() {
        return Err(CliError::Input("need at least one group".into()));
    }
    if sizes[0] < PLANTED.len() {
        return Err(CliError::Input(format!(
            "first group must have at least {} components for the planted signal, got {}",
            PLANTED.len(),
            sizes[0]
        )));
    }
    if let Some(small) = sizes.iter().find(|s| **s < 2) {
        return Err(CliError::Input(format!(
            "every group needs at least two components, got {small}"
        )));
    }
    let p: usize = sizes.iter().sum();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    // Latent AR(1) blocks: z_1 = eta + e_1, z_j = eta + 0.5 (z_{j-1} - eta)
    // + sqrt(3/4) e_j gives unit marginal variance and corr 0.5^|j-l|.
    let innovation = (0.75f64).sqrt();
    let mut latent = vec![0.0; n * p];
    for i in 0..n {
        let mut at = 0;
        for (k, &size) in sizes.iter().enumerate() {
            let eta = if k < 5 { (size as f64 / 2.0).ln() } else { 0.0 };
            let mut prev = 0.0;
            for j in 0..size {
                let e: f64 = rng.sample(StandardNormal);
                let z = if j == 0 { eta + e } else { eta + 0.5 * (prev - eta) + innovation * e };
                latent[i * p + at + j] = z;
                prev = z;
            }
            at += size;
        }
    }

    // Composition and log-composition via a stabilized softmax.
    let mut comps = vec![0.0; n * p];
    let mut design = vec![0.0; n * p];
    for i in 0..n {
        let row = &latent[i * p..(i + 1) * p];
        let top = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + row.iter().map(|z| (z - top).exp()).sum::<f64>().ln();
        for j in 0..p {
            design[i * p + j] = row[j] - lse;
            comps[i * p + j] = design[i * p + j].exp();
        }
    }

    let mut beta_star = vec![0.0; p];
    beta_star[..PLANTED.len()].copy_from_slice(&PLANTED);

    let mut y = vec![0.0; n];
    for i in 0..n {
        let fit: f64 = (0..p).map(|j| design[i * p + j] * beta_star[j]).sum();
        let e: f64 = rng.sample(StandardNormal);
        y[i] = fit + 0.5 * e;
    }

    let names = (1..=p).map(|j| format!("c{j}")).collect();
    Ok(Synthetic { names, sizes: sizes.to_vec(), y, comps, design, latent, beta_star })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_coefficients_sum_to_zero() {
        let s: f64 = PLANTED.iter().sum();
        assert!(s.abs() < 1e-15, "sum {s}");
    }

    #[test]
    fn latent_moments_match_the_construction() {
        // 10000 draws: per-coordinate mean within 3 / sqrt(10000) of eta,
        // and lag-1 correlation inside a group near 0.5.
        let n = 10_000;
        let sizes = [8, 4];
        let syn = generate(n, &sizes, 3).unwrap();
        let p = 12;
        for j in 0..p {
            let eta = if j < 8 { 4.0f64.ln() } else { 2.0f64.ln() };
            let mean: f64 = (0..n).map(|i| syn.latent[i * p + j]).sum::<f64>() / n as f64;
            assert!((mean - eta).abs() < 0.03, "coordinate {j}: mean {mean} vs eta {eta}");
        }
        let (mut c01, mut v0, mut v1) = (0.0, 0.0, 0.0);
        let eta = 4.0f64.ln();
        for i in 0..n {
            let a = syn.latent[i * p] - eta;
            let b = syn.latent[i * p + 1] - eta;
            c01 += a * b;
            v0 += a * a;
            v1 += b * b;
        }
        let corr = c01 / (v0.sqrt() * v1.sqrt());
        assert!((corr - 0.5).abs() < 0.05, "lag-1 correlation {corr}");
        assert!((v0 / n as f64 - 1.0).abs() < 0.1, "marginal variance {}", v0 / n as f64);
    }

    #[test]
    fn compositions_are_strictly_positive_simplex_rows() {
        let syn = generate(50, &[8, 5, 5], 11).unwrap();
        let p = 18;
        for i in 0..50 {
            let row = &syn.comps[i * p..(i + 1) * p];
            assert!(row.iter().all(|u| *u > 0.0));
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "row {i} sums to {sum}");
        }
    }

    #[test]
    fn same_seed_reproduces_everything() {
        let a = generate(20, &[10], 7).unwrap();
        let b = generate(20, &[10], 7).unwrap();
        assert_eq!(a.y, b.y);
        assert_eq!(a.comps, b.comps);
        assert_eq!(a.latent, b.latent);
    }

    #[test]
    fn rejects_undersized_first_group() {
        assert!(generate(10, &[4, 10], 0).is_err());
        assert!(generate(10, &[8, 1], 0).is_err());
        assert!(generate(0, &[8], 0).is_err());
    }
}
