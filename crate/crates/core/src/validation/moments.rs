//! Closed-form Binomial and Poisson moments and tail bounds.

/// `(x)_k = x (x - 1) ... (x - k + 1)`.
pub fn falling_factorial(x: f64, k: u32) -> f64 {
    (0..k).map(|i| x - i as f64).product()
}

/// `E[(X)_k] = (N)_k p^k` for `X ~ Binomial(N, p)`.
pub fn factorial_moment_binomial(n: u64, p: f64, k: u32) -> f64 {
    if k as u64 > n {
        return 0.0;
    }
    falling_factorial(n as f64, k) * p.powi(k as i32)
}

/// `E[(Y)_k] = c^k` for `Y ~ Poisson(c)`.
pub fn factorial_moment_poisson(c: f64, k: u32) -> f64 {
    c.powi(k as i32)
}

/// Stirling number of the second kind `{k, j}`.
pub fn stirling2(k: u32, j: u32) -> u128 {
    let (k, j) = (k as usize, j as usize);
    if j > k {
        return 0;
    }
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for n in 1..=k {
        for i in (1..=n).rev() {
            row[i] = i as u128 * row[i] + row[i - 1];
        }
        row[0] = 0;
    }
    row[j]
}

/// `E[X^k] = sum_j {k, j} E[(X)_j]` for `X ~ Binomial(N, p)`.
pub fn raw_moment_binomial(n: u64, p: f64, k: u32) -> f64 {
    (0..=k).map(|j| stirling2(k, j) as f64 * factorial_moment_binomial(n, p, j)).sum()
}

/// `E[Y^k] = sum_j {k, j} c^j` for `Y ~ Poisson(c)`.
pub fn raw_moment_poisson(c: f64, k: u32) -> f64 {
    (0..=k).map(|j| stirling2(k, j) as f64 * c.powi(j as i32)).sum()
}

/// Bound `N p^2 + (N p)^k / k!` on `P(X >= k)`, `X ~ Binomial(N, p)`.
pub fn binom_tail_bound(n: u64, p: f64, k: u32) -> f64 {
    let np = n as f64 * p;
    let factorial: f64 = (1..=k).map(|i| i as f64).product();
    np * p + np.powi(k as i32) / factorial
}

/// Exact total variation distance between `Binomial(N, p)` and `Poisson(Np)`.
pub fn tv_binomial_poisson(n: u64, p: f64) -> f64 {
    if p <= 0.0 || n == 0 {
        return 0.0;
    }
    let c = n as f64 * p;
    if p >= 1.0 {
        // Binomial is a point mass at N
        let mut pois = (-c).exp();
        let mut at_n = pois;
        for x in 1..=n {
            pois *= c / x as f64;
            at_n = pois;
        }
        return 1.0 - at_n;
    }
    let ratio = p / (1.0 - p);
    let mut b = (n as f64 * (-p).ln_1p()).exp();
    let mut q = (-c).exp();
    let (mut sum_b, mut sum_q, mut diff) = (0.0, 0.0, 0.0);
    let limit = (c + 40.0 * c.sqrt() + 60.0) as u64;
    for x in 0..=n.min(limit) {
        diff += (b - q).abs();
        sum_b += b;
        sum_q += q;
        b *= (n - x) as f64 / (x + 1) as f64 * ratio;
        q *= c / (x + 1) as f64;
    }
    0.5 * (diff + (1.0 - sum_b).max(0.0) + (1.0 - sum_q).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand_distr::{Binomial, Distribution};

    #[test]
    fn appendix_examples() {
        assert!((factorial_moment_binomial(4, 0.5, 3) - 3.0).abs() < 1e-15);
        assert_eq!(factorial_moment_poisson(1.0, 3), 1.0);
        assert_eq!((stirling2(3, 1), stirling2(3, 2), stirling2(3, 3)), (1, 3, 1));
        assert!((raw_moment_poisson(1.0, 3) - 5.0).abs() < 1e-12);
        // (1/6) E[(X+1) X (X-1)] = (E X^3 - E X) / 6 = 2/3 at X ~ Poisson(1)
        let c = (raw_moment_poisson(1.0, 3) - raw_moment_poisson(1.0, 1)) / 6.0;
        assert!((c - crate::regimes::c_theta(1.0)).abs() < 1e-12);
        assert!((binom_tail_bound(100, 0.01, 2) - 0.51).abs() < 1e-12);
        assert!((binom_tail_bound(50, 0.1, 1) - (50.0 * 0.01 + 5.0)).abs() < 1e-12);
    }

    #[test]
    fn moments_match_direct_summation() {
        // Binomial(12, 0.3): sum the pmf exactly
        let (n, p) = (12u64, 0.3f64);
        let mut pmf = vec![0.0; n as usize + 1];
        for (x, slot) in pmf.iter_mut().enumerate() {
            let choose: f64 = (0..x).map(|i| (n - i as u64) as f64 / (i + 1) as f64).product();
            *slot = choose * p.powi(x as i32) * (1.0 - p).powi((n - x as u64) as i32);
        }
        for k in 1..=5u32 {
            let direct: f64 = pmf.iter().enumerate().map(|(x, w)| w * falling_factorial(x as f64, k)).sum();
            assert!((direct - factorial_moment_binomial(n, p, k)).abs() < 1e-10);
            let raw: f64 = pmf.iter().enumerate().map(|(x, w)| w * (x as f64).powi(k as i32)).sum();
            assert!((raw - raw_moment_binomial(n, p, k)).abs() < 1e-9 * raw.max(1.0));
        }
        // Poisson(2.5); the tail past 80 is far below f64 resolution
        let c = 2.5f64;
        let mut w = (-c).exp();
        let mut sums = [0.0f64; 5];
        for x in 0..80u32 {
            for k in 1..=5u32 {
                sums[k as usize - 1] += w * falling_factorial(x as f64, k);
            }
            w *= c / (x + 1) as f64;
        }
        for k in 1..=5u32 {
            let exact = factorial_moment_poisson(c, k);
            assert!((sums[k as usize - 1] - exact).abs() < 1e-12 * exact);
        }
    }

    #[test]
    fn tv_is_below_np2() {
        for &(n, p) in &[(10u64, 0.1), (1000, 0.001), (100, 0.05), (5, 0.5)] {
            let tv = tv_binomial_poisson(n, p);
            assert!(tv >= 0.0 && tv <= n as f64 * p * p, "n={n} p={p} tv={tv}");
        }
        assert_eq!(tv_binomial_poisson(10, 0.0), 0.0);
    }

    #[test]
    fn tail_bound_dominates_frequency() {
        let mut rng = rng_from_seed(4);
        let (n, p, k) = (200u64, 0.01, 3u32);
        let d = Binomial::new(n, p).unwrap();
        let hits = (0..100_000).filter(|_| d.sample(&mut rng) >= k as u64).count();
        assert!((hits as f64) / 1e5 <= binom_tail_bound(n, p, k));
    }
}
