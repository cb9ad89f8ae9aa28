//! Access patterns: ρ-subsets of N occasions, ranked in colexicographic order.

use crate::error::{config_err, Result};

/// C(n, k), saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// The `index`-th ρ-subset of {0, …, n−1} in colex order, ascending.
pub fn pattern_from_index(index: u64, n: usize, rho: usize) -> Result<Vec<usize>> {
    if rho == 0 || rho > n {
        return Err(config_err(format!("repetition {rho} must lie in 1..={n}")));
    }
    let total = binomial(n, rho);
    if index >= total {
        return Err(config_err(format!("pattern index {index} out of range 0..{total}")));
    }
    let mut rest = index;
    let mut out = vec![0; rho];
    let mut upper = n;
    for slot in (0..rho).rev() {
        let k = slot + 1;
        // largest c < upper with C(c, k) ≤ rest
        let mut c = upper - 1;
        while binomial(c, k) > rest {
            c -= 1;
        }
        out[slot] = c;
        rest -= binomial(c, k);
        upper = c;
    }
    Ok(out)
}

/// Inverse of [`pattern_from_index`] for an ascending subset.
pub fn pattern_rank(pattern: &[usize]) -> u64 {
    pattern.iter().enumerate().map(|(i, &c)| binomial(c, i + 1)).sum()
}
