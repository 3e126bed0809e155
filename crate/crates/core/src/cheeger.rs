//! Exact edge conductance and Cheeger bounds for small graphs.
//!
//! `phi(G) = min { |delta(S)| / vol(S) : vol(S) <= |E| }` by brute force
//! over vertex subsets, feasible up to ~20 vertices. The bounds
//! `d_min phi^2 / 2 <= |lambda_2(L)| <= 2 d_max phi` bracket the largest
//! nonzero eigenvalue of `L = A - D`; the bracket is verified before
//! returning.

use nalgebra::DMatrix;

use crate::spectral::empirical_spectrum;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct CheegerBounds {
    pub phi: f64,
    /// `d_min * phi^2 / 2`.
    pub lower: f64,
    /// `2 * d_max * phi`.
    pub upper: f64,
    /// `|lambda_2(L)|` from a dense eigensolve.
    pub lambda2_abs: f64,
}

/// Exact conductance and Cheeger bracket. Errors on graphs larger than
/// `exact_max_n`, on disconnected input, and on a violated bracket.
pub fn cheeger_bounds(adjacency: &DMatrix<f64>, exact_max_n: usize) -> Result<CheegerBounds> {
    let n = adjacency.nrows();
    if n > exact_max_n.min(25) {
        return Err(Error::DimensionCap { n, cap: exact_max_n.min(25) });
    }
    if n < 2 {
        return Err(Error::InvalidParameter("conductance needs at least 2 vertices".into()));
    }
    if !is_connected(adjacency) {
        return Err(Error::Disconnected { zeroed: 2 });
    }

    let degrees: Vec<f64> = (0..n).map(|i| (0..n).map(|j| adjacency[(i, j)]).sum()).collect();
    let total: f64 = degrees.iter().sum();
    let vol_limit = total / 2.0; // |E| in weighted form

    // Gray-code walk over all proper subsets, maintaining cut and volume
    // incrementally: one vertex flips per step. With S the pre-flip set and
    // d = sum_{u not in S} w(v, u) - sum_{u in S, u != v} w(v, u), inserting
    // v adds d to the cut and removing v subtracts it.
    let mut in_set = vec![false; n];
    let mut cut = 0.0f64;
    let mut vol = 0.0f64;
    let mut phi = f64::INFINITY;
    let mut prev_gray = 0u64;
    for m in 1u64..(1 << n) {
        let gray = m ^ (m >> 1);
        let flipped = (gray ^ prev_gray).trailing_zeros() as usize;
        prev_gray = gray;
        let entering = !in_set[flipped];
        let mut delta = 0.0;
        for (u, &inside) in in_set.iter().enumerate() {
            if u != flipped {
                let w = adjacency[(flipped, u)];
                delta += if inside { -w } else { w };
            }
        }
        if entering {
            cut += delta;
            vol += degrees[flipped];
        } else {
            cut -= delta;
            vol -= degrees[flipped];
        }
        in_set[flipped] = entering;
        if gray != (1u64 << n) - 1 && vol > 0.0 && vol <= vol_limit {
            phi = phi.min(cut / vol);
        }
    }

    let d_min = degrees.iter().copied().fold(f64::INFINITY, f64::min);
    let d_max = degrees.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lower = d_min * phi * phi / 2.0;
    let upper = 2.0 * d_max * phi;

    let mut l = adjacency.clone();
    for i in 0..n {
        l[(i, i)] = adjacency[(i, i)] - degrees[i];
    }
    let lambda2_abs = empirical_spectrum(&l)?.values[1].abs();

    let slack = 1e-9 * (1.0 + lambda2_abs);
    if lambda2_abs + slack < lower || lambda2_abs - slack > upper {
        return Err(Error::CheegerBracket { lower, lambda2: lambda2_abs, upper });
    }
    Ok(CheegerBounds { phi, lower, upper, lambda2_abs })
}

fn is_connected(adjacency: &DMatrix<f64>) -> bool {
    let n = adjacency.nrows();
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for u in 0..n {
            if !seen[u] && adjacency[(v, u)] > 0.0 {
                seen[u] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    count == n
}
