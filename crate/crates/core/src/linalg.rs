//! Small dense linear-algebra helpers over flat row-major `f64` slices.
//!
//! The systems solved here are tiny — bounded by the active-set size plus the
//! number of active groups — so a textbook partial-pivot LU is the right tool.
//! No BLAS, no allocation tricks.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, &x| m.max(x.abs()))
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    math::sqrt(dot(v, v))
}

/// Solve the `n`-dimensional dense system `A x = b` in place by LU with
/// partial pivoting. `a` is row-major and is destroyed; on success `b` holds
/// the solution. Returns `false` when a pivot falls below `1e-12` times the
/// largest entry of the original matrix, i.e. the system is singular to
/// working precision — the caller decides what that means.
pub fn solve_in_place(a: &mut [f64], b: &mut [f64], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    if n == 0 {
        return true;
    }
    let scale = inf_norm(a);
    if scale == 0.0 {
        return false;
    }
    let tol = 1e-12 * scale;
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        // Pick the largest remaining pivot in this column.
        let mut best = col;
        let mut best_abs = a[perm[col] * n + col].abs();
        for row in (col + 1)..n {
            let v = a[perm[row] * n + col].abs();
            if v > best_abs {
                best_abs = v;
                best = row;
            }
        }
        if best_abs <= tol {
            return false;
        }
        perm.swap(col, best);
        let prow = perm[col];
        let pivot = a[prow * n + col];
        for row in (col + 1)..n {
            let r = perm[row];
            let factor = a[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            a[r * n + col] = factor; // store L below the diagonal
            for k in (col + 1)..n {
                a[r * n + k] -= factor * a[prow * n + k];
            }
        }
    }
    // Forward substitution on the permuted right-hand side.
    let mut y = vec![0.0; n];
    for row in 0..n {
        let r = perm[row];
        let mut s = b[r];
        for col in 0..row {
            s -= a[r * n + col] * y[col];
        }
        y[row] = s;
    }
    // Back substitution.
    for row in (0..n).rev() {
        let r = perm[row];
        let mut s = y[row];
        for col in (row + 1)..n {
            s -= a[r * n + col] * b[col];
        }
        b[row] = s / a[r * n + row];
    }
    true
}

/// Largest squared singular value of the row-major `n x p` matrix `z`,
/// estimated by power iteration on `z' z`. Deterministic start vector; `iters`
/// rounds are plenty for the step-size bounds this feeds (an overestimate of
/// the true norm is harmless there, an underestimate of a few percent is
/// absorbed by the caller's safety factor).
pub fn op_norm_sq(z: &[f64], n: usize, p: usize, iters: usize) -> f64 {
    debug_assert_eq!(z.len(), n * p);
    if n == 0 || p == 0 {
        return 0.0;
    }
    // Start away from coordinate axes so a single unlucky orthogonality
    // cannot zero the iterate.
    let mut v: Vec<f64> = (0..p).map(|j| 1.0 + (j % 7) as f64 * 0.25).collect();
    let nv = l2_norm(&v);
    for x in v.iter_mut() {
        *x /= nv;
    }
    let mut zv = vec![0.0; n];
    let mut w = vec![0.0; p];
    let mut estimate = 0.0;
    for _ in 0..iters {
        for i in 0..n {
            zv[i] = dot(&z[i * p..(i + 1) * p], &v);
        }
        for x in w.iter_mut() {
            *x = 0.0;
        }
        for i in 0..n {
            let zi = &z[i * p..(i + 1) * p];
            let s = zv[i];
            for j in 0..p {
                w[j] += zi[j] * s;
            }
        }
        // Rayleigh quotient v'(z'z)v = ||z v||^2 at the unit iterate.
        estimate = dot(&v, &w);
        let norm = l2_norm(&w);
        if norm == 0.0 {
            return 0.0;
        }
        for j in 0..p {
            v[j] = w[j] / norm;
        }
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_hand_checked_system() {
        // [2 1; 1 3] x = [5; 10] has x = (1, 3).
        let mut a = vec![2.0, 1.0, 1.0, 3.0];
        let mut b = vec![5.0, 10.0];
        assert!(solve_in_place(&mut a, &mut b, 2));
        assert!((b[0] - 1.0).abs() < 1e-12);
        assert!((b[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        // Leading zero forces a row swap.
        let mut a = vec![0.0, 1.0, 1.0, 0.0];
        let mut b = vec![2.0, 3.0];
        assert!(solve_in_place(&mut a, &mut b, 2));
        assert!((b[0] - 3.0).abs() < 1e-12);
        assert!((b[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn detects_singularity() {
        let mut a = vec![1.0, 2.0, 2.0, 4.0];
        let mut b = vec![1.0, 2.0];
        assert!(!solve_in_place(&mut a, &mut b, 2));
    }

    #[test]
    fn random_systems_have_small_residual() {
        // Residuals against the original system are the ground truth here; no
        // external solver needed.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for trial in 0..50 {
            let n = 1 + trial % 8;
            let a: Vec<f64> = (0..n * n).map(|_| next()).collect();
            let b: Vec<f64> = (0..n).map(|_| next()).collect();
            let mut a_work = a.clone();
            let mut x = b.clone();
            if !solve_in_place(&mut a_work, &mut x, n) {
                continue; // singular draws are legitimate, just rare
            }
            for i in 0..n {
                let r = dot(&a[i * n..(i + 1) * n], &x) - b[i];
                assert!(r.abs() < 1e-9, "residual {r} at trial {trial}, row {i}");
            }
        }
    }

    #[test]
    fn op_norm_matches_known_matrix() {
        // diag(3, 1) has operator norm 3.
        let z = vec![3.0, 0.0, 0.0, 1.0];
        let est = op_norm_sq(&z, 2, 2, 50);
        assert!((est - 9.0).abs() < 1e-9, "got {est}");
    }
}
