//! Small numerical helpers shared across modules.

/// True for finite, strictly positive values (NaN fails).
pub fn is_positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (denominator n - 1).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Quantile with linear interpolation between order statistics.
///
/// `p` in [0, 1]; the input slice must be sorted ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n as f64 - 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let w = h - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// Effective sample size of a chain, discounting positive autocorrelation.
///
/// Sums lag autocorrelations until they drop below 0.05 (capped at n/2),
/// then returns n / (1 + 2 * sum).
pub fn effective_sample_size(chain: &[f64]) -> f64 {
    let n = chain.len();
    if n < 2 {
        return n as f64;
    }
    let m = mean(chain);
    let var = chain.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    if var < 1e-300 {
        return n as f64;
    }
    let mut sum_rho = 0.0;
    for k in 1..=(n / 2) {
        let cov = (0..n - k)
            .map(|i| (chain[i] - m) * (chain[i + k] - m))
            .sum::<f64>()
            / (n - k) as f64;
        let rho = cov / var;
        if rho < 0.05 {
            break;
        }
        sum_rho += rho;
    }
    n as f64 / (1.0 + 2.0 * sum_rho)
}

/// Deterministic sub-seed derivation for parallel chains and replicates.
///
/// Splitmix64 over the base seed and a stream index; identical inputs give
/// identical sub-seeds regardless of scheduling.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base.wrapping_add(splitmix64(stream.wrapping_add(0x9e37_79b9_7f4a_7c15))))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_endpoints_and_median() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
        assert_eq!(quantile_sorted(&xs, 0.5), 2.5);
    }

    #[test]
    fn sample_variance_matches_hand_value() {
        let xs = [1.0, 2.0, 3.0];
        assert!((sample_variance(&xs) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ess_of_iid_like_chain_is_near_n() {
        // a chain that alternates has negative lag-1 autocorrelation
        let chain: Vec<f64> = (0..1000)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let ess = effective_sample_size(&chain);
        assert!(ess >= 999.0);
    }

    #[test]
    fn derive_seed_is_stable_and_spread() {
        assert_eq!(derive_seed(1, 2), derive_seed(1, 2));
        assert_ne!(derive_seed(1, 2), derive_seed(1, 3));
        assert_ne!(derive_seed(1, 2), derive_seed(2, 2));
    }
}
