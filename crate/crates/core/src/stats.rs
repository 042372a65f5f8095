//! Small statistics toolbox: compensated accumulation, special functions,
//! chi-square and Kolmogorov-Smirnov goodness-of-fit helpers.

/// Kahan compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Streaming mean/variance (Welford), mergeable in any order.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanVar {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanVar {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &MeanVar) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n1 = self.n as f64;
        let n2 = other.n as f64;
        let d = other.mean - self.mean;
        let n = n1 + n2;
        self.mean += d * n2 / n;
        self.m2 += other.m2 + d * d * n1 * n2 / n;
        self.n += other.n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        self.m2 / (self.n - 1) as f64
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// ln Gamma(x) for x > 0 (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(x > 0.0);
    let z = x - 1.0;
    let mut sum = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + sum.ln()
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // series representation
        let mut ap = a;
        let mut sum = 1.0 / a;
        let mut del = sum;
        for _ in 0..500 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-15 {
                break;
            }
        }
        sum * (-x + a * x.ln() - ln_gamma(a)).exp()
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) by continued fraction.
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / 1e-300;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < 1e-300 {
            d = 1e-300;
        }
        c = b + an / c;
        if c.abs() < 1e-300 {
            c = 1e-300;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Survival function of the chi-square distribution with `dof` degrees.
pub fn chi2_sf(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    1.0 - gamma_p(dof as f64 / 2.0, stat / 2.0)
}

/// log of the Poisson pmf at k with mean mu > 0.
fn poisson_ln_pmf(k: usize, mu: f64) -> f64 {
    -mu + k as f64 * mu.ln() - ln_gamma(k as f64 + 1.0)
}

/// Chi-square goodness of fit of observed counts against a mixed Poisson:
/// observation i is claimed Poisson(mu_i). Returns (statistic, dof, p).
///
/// The expected histogram is sum_i pmf(k; mu_i); high-count bins are pooled
/// until every expected cell is at least `min_expected`.
pub fn poisson_mixture_gof(counts: &[usize], mus: &[f64], min_expected: f64) -> (f64, usize, f64) {
    assert_eq!(counts.len(), mus.len());
    let kmax = counts.iter().copied().max().unwrap_or(0);
    // expected bin masses for k = 0..=kmax, plus the upper tail
    let mut expected = vec![0.0; kmax + 2];
    for &mu in mus {
        if mu <= 0.0 {
            expected[0] += 1.0;
            continue;
        }
        let mut tail = 1.0;
        for (k, e) in expected.iter_mut().take(kmax + 1).enumerate() {
            let p = poisson_ln_pmf(k, mu).exp();
            *e += p;
            tail -= p;
        }
        expected[kmax + 1] += tail.max(0.0);
    }
    let mut observed = vec![0usize; kmax + 2];
    for &k in counts {
        observed[k] += 1;
    }
    // pool from the top so every cell has enough expected mass
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut acc_e = 0.0;
    let mut acc_o = 0.0;
    for k in 0..=kmax + 1 {
        acc_e += expected[k];
        acc_o += observed[k] as f64;
        if acc_e >= min_expected {
            bins.push((acc_o, acc_e));
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        if let Some(last) = bins.last_mut() {
            last.0 += acc_o;
            last.1 += acc_e;
        } else {
            bins.push((acc_o, acc_e));
        }
    }
    if bins.len() < 2 {
        // everything in one cell: no resolution, vacuous pass
        return (0.0, 0, 1.0);
    }
    let stat: f64 = bins.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = bins.len() - 1;
    (stat, dof, chi2_sf(stat, dof))
}

/// Kolmogorov distribution tail Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2).
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let t = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        sum += sign * t;
        sign = -sign;
        if t < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test; returns (D, p) with the Stephens
/// finite-sample correction.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    assert!(n > 0 && m > 0);
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / ((n + m) as f64);
    let sqrt_ne = ne.sqrt();
    let p = kolmogorov_q((sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d);
    (d, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-12);
        assert!((ln_gamma(2.0)).abs() < 1e-12);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-11);
        assert!((ln_gamma(0.5) - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-11);
    }

    #[test]
    fn chi2_sf_matches_exponential() {
        // chi-square with 2 dof is Exp(1/2): sf(x) = exp(-x/2)
        for &x in &[0.1, 1.0, 3.0, 10.0] {
            assert!((chi2_sf(x, 2) - (-x / 2.0f64).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn mean_var_merge_is_order_free() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let mut whole = MeanVar::new();
        xs.iter().for_each(|&x| whole.push(x));
        let mut left = MeanVar::new();
        let mut right = MeanVar::new();
        xs[..37].iter().for_each(|&x| left.push(x));
        xs[37..].iter().for_each(|&x| right.push(x));
        left.merge(&right);
        assert!((whole.mean() - left.mean()).abs() < 1e-12);
        assert!((whole.variance() - left.variance()).abs() < 1e-12);
    }

    #[test]
    fn gof_accepts_true_poisson() {
        use rand::Rng;
        let mut rng = crate::rng::stream(11, "gof-self-test", 0);
        let mus: Vec<f64> = (0..4000).map(|_| rng.random_range(0.1..4.0)).collect();
        let counts: Vec<usize> = mus
            .iter()
            .map(|&mu| {
                // inverse-CDF Poisson draw, fine for small mu
                let u: f64 = rng.random();
                let mut cdf = (-mu).exp();
                let mut p = cdf;
                let mut k = 0usize;
                while cdf < u && k < 200 {
                    k += 1;
                    p *= mu / k as f64;
                    cdf += p;
                }
                k
            })
            .collect();
        let (_, _, p) = poisson_mixture_gof(&counts, &mus, 5.0);
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn gof_rejects_inflated_counts() {
        let mus: Vec<f64> = vec![0.5; 4000];
        // claim Poisson(0.5) but feed counts that are Poisson(2.0)-like
        let counts: Vec<usize> = (0..4000).map(|i| (i % 5).min(3)).collect();
        let (_, _, p) = poisson_mixture_gof(&counts, &mus, 5.0);
        assert!(p < 1e-6);
    }

    #[test]
    fn ks_accepts_same_distribution() {
        use rand::Rng;
        let mut rng = crate::rng::stream(5, "ks-self-test", 0);
        let xs: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let ys: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let (_, p) = ks_two_sample(&xs, &ys);
        assert!(p > 0.01);
    }

    #[test]
    fn ks_rejects_shifted() {
        use rand::Rng;
        let mut rng = crate::rng::stream(6, "ks-self-test", 1);
        let xs: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let ys: Vec<f64> = (0..5000).map(|_| rng.random::<f64>() + 0.2).collect();
        let (_, p) = ks_two_sample(&xs, &ys);
        assert!(p < 1e-6);
    }
}
