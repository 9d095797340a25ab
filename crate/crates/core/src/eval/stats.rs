//! Welch's unequal-variance t-test.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub mean_a: f64,
    pub mean_b: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Tests whether `a` and `b` have different means without assuming equal
/// variances. Both samples need at least two finite values.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidSample(format!(
            "t-test needs >= 2 values per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::InvalidSample("t-test input contains non-finite values".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mean_a, var_a) = mean_var(a);
    let (mean_b, var_b) = mean_var(b);
    let (sa, sb) = (var_a / na, var_b / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        // both groups constant: the test degenerates
        let (t, p) = if mean_a == mean_b { (0.0, 1.0) } else { (f64::INFINITY.copysign(mean_a - mean_b), 0.0) };
        return Ok(WelchResult { t, df: na + nb - 2.0, p, mean_a, mean_b });
    }
    let t = (mean_a - mean_b) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidSample(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(WelchResult { t, df, p, mean_a, mean_b })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Student t density integrated with composite Simpson from 0 to |t|.
    fn two_sided_p_by_quadrature(t: f64, df: f64) -> f64 {
        let ln_c = statrs::function::gamma::ln_gamma((df + 1.0) / 2.0)
            - statrs::function::gamma::ln_gamma(df / 2.0)
            - 0.5 * (df * std::f64::consts::PI).ln();
        let pdf = |x: f64| (ln_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp();
        let n = 20_000;
        let h = t.abs() / n as f64;
        let mut s = pdf(0.0) + pdf(t.abs());
        for i in 1..n {
            s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        1.0 - 2.0 * s * h / 3.0
    }

    /// Two-sided permutation p-value of the mean difference, either exactly
    /// over every split (Gosper's hack) or from `draws` random splits.
    fn permutation_p(a: &[f64], b: &[f64], draws: Option<usize>) -> f64 {
        let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        let (n, k) = (pooled.len(), a.len());
        let total: f64 = pooled.iter().sum();
        let observed = (a.iter().sum::<f64>() / k as f64 - b.iter().sum::<f64>() / (n - k) as f64).abs();
        let diff = |sum_a: f64| (sum_a / k as f64 - (total - sum_a) / (n - k) as f64).abs();
        let (mut hits, mut count) = (0u64, 0u64);
        match draws {
            None => {
                let mut mask: u64 = (1 << k) - 1;
                while mask < 1 << n {
                    let sum_a: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| pooled[i]).sum();
                    hits += (diff(sum_a) >= observed - 1e-12) as u64;
                    count += 1;
                    let c = mask & mask.wrapping_neg();
                    let r = mask + c;
                    mask = (((r ^ mask) >> 2) / c) | r;
                }
            }
            Some(d) => {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
                let mut v = pooled.clone();
                for _ in 0..d {
                    v.shuffle(&mut rng);
                    hits += (diff(v[..k].iter().sum()) >= observed - 1e-12) as u64;
                    count += 1;
                }
            }
        }
        hits as f64 / count as f64
    }

    #[test]
    fn separated_samples_agree_with_exact_permutation() {
        let a: Vec<f64> = (0..12).map(|i| 10.0 + 0.1 * i as f64).collect();
        let b: Vec<f64> = (0..12).map(|i| 0.13 * i as f64).collect();
        let exact = permutation_p(&a, &b, None);
        // only the observed split and its mirror are as extreme
        assert!((exact - 2.0 / 2_704_156.0).abs() < 1e-15);
        assert!(exact < 1e-6);
        assert!(welch_t_test(&a, &b).unwrap().p < 1e-6);
    }

    #[test]
    fn moderate_difference_agrees_with_sampled_permutation() {
        let a = [0.41, 0.52, 0.38, 0.61, 0.47, 0.55, 0.44, 0.58, 0.36, 0.50];
        let b = [0.35, 0.42, 0.31, 0.47, 0.39, 0.33, 0.45, 0.29, 0.40, 0.37];
        let welch = welch_t_test(&a, &b).unwrap().p;
        let perm = permutation_p(&a, &b, Some(200_000));
        assert!(welch < 0.05 && (welch - perm).abs() < 0.01, "welch {welch} perm {perm}");
    }

    #[test]
    fn hand_example() {
        let r = welch_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
        assert!((r.t + 2.0).abs() < 1e-12);
        assert!((r.df - 8.0).abs() < 1e-12);
        assert!((r.p - 0.0805).abs() < 1e-4, "{}", r.p);
    }

    #[test]
    fn table_critical_values() {
        for (t, df) in [(12.706, 1.0), (2.306, 8.0), (2.042, 30.0), (1.96, 1e6)] {
            let dist = StudentsT::new(0.0, 1.0, df).unwrap();
            assert!((2.0 * dist.sf(t) - 0.05).abs() < 5e-4, "t={t} df={df}");
        }
    }

    #[test]
    fn cdf_agrees_with_quadrature() {
        for (t, df) in [(0.5, 3.0), (2.0, 8.0), (3.7, 12.5), (1.1, 97.3)] {
            let dist = StudentsT::new(0.0, 1.0, df).unwrap();
            let lib = 2.0 * dist.sf(t);
            assert!((lib - two_sided_p_by_quadrature(t, df)).abs() < 1e-8, "t={t} df={df}");
        }
    }

    #[test]
    fn swapping_groups_negates_t() {
        let a = [0.3, 0.9, 0.4, 0.7, 0.2, 0.66];
        let b = [0.1, 0.25, 0.05, 0.3];
        let ab = welch_t_test(&a, &b).unwrap();
        let ba = welch_t_test(&b, &a).unwrap();
        assert_eq!(ab.t, -ba.t);
        assert_eq!(ab.p, ba.p);
        assert_eq!(ab.df, ba.df);
    }

    #[test]
    fn degenerate_groups() {
        let same = welch_t_test(&[1.0, 1.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((same.t, same.p), (0.0, 1.0));
        let apart = welch_t_test(&[2.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!((apart.t, apart.p), (f64::INFINITY, 0.0));
        assert!(welch_t_test(&[1.0], &[1.0, 2.0]).is_err());
        assert!(welch_t_test(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
    }
}
