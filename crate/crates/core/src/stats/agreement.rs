//! Krippendorff's alpha for nominal and ordinal data, with a bootstrap
//! confidence interval over images.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::StatsError;

pub const DEFAULT_BOOTSTRAP_ITERATIONS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    Nominal,
    Ordinal,
}

impl DistanceMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceMetric::Nominal => "nominal",
            DistanceMetric::Ordinal => "ordinal",
        }
    }
}

impl fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistanceMetric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nominal" => Ok(DistanceMetric::Nominal),
            "ordinal" => Ok(DistanceMetric::Ordinal),
            other => Err(format!("unknown metric '{other}' (expected nominal or ordinal)")),
        }
    }
}

/// Coincidence matrix built from units that carry at least two values.
struct Coincidence {
    o: Vec<Vec<f64>>,
    n_c: Vec<f64>,
    n: f64,
}

impl Coincidence {
    fn build<'a, I: IntoIterator<Item = &'a [u8]>>(units: I, categories: usize) -> Self {
        let mut o = vec![vec![0.0; categories]; categories];
        let mut counts = vec![0usize; categories];
        for unit in units {
            let m = unit.len();
            if m < 2 {
                continue;
            }
            counts.iter_mut().for_each(|c| *c = 0);
            for &v in unit {
                counts[v as usize] += 1;
            }
            let w = 1.0 / (m - 1) as f64;
            for c in 0..categories {
                if counts[c] == 0 {
                    continue;
                }
                for k in 0..categories {
                    let pairs = if c == k {
                        counts[c] * (counts[c] - 1)
                    } else {
                        counts[c] * counts[k]
                    };
                    o[c][k] += pairs as f64 * w;
                }
            }
        }
        let n_c: Vec<f64> = o.iter().map(|row| row.iter().sum()).collect();
        let n = n_c.iter().sum();
        Coincidence { o, n_c, n }
    }

    fn delta2(&self, metric: DistanceMetric) -> Vec<Vec<f64>> {
        let q = self.n_c.len();
        (0..q)
            .map(|c| {
                (0..q)
                    .map(|k| match metric {
                        DistanceMetric::Nominal => (c != k) as u8 as f64,
                        DistanceMetric::Ordinal => {
                            let (lo, hi) = (c.min(k), c.max(k));
                            let s: f64 = self.n_c[lo..=hi].iter().sum();
                            let v = s - (self.n_c[c] + self.n_c[k]) / 2.0;
                            v * v
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn alpha(&self, metric: DistanceMetric) -> f64 {
        let d = self.delta2(metric);
        let mut observed = 0.0;
        let mut expected = 0.0;
        for ((o_row, d_row), &n_c) in self.o.iter().zip(&d).zip(&self.n_c) {
            for ((o, dist), &n_k) in o_row.iter().zip(d_row).zip(&self.n_c) {
                observed += o * dist;
                expected += n_c * n_k * dist;
            }
        }
        if observed == 0.0 {
            // Perfect agreement, including the case with a single category in use.
            return 1.0;
        }
        1.0 - (self.n - 1.0) * observed / expected
    }
}

fn pairable(units: &[Vec<u8>]) -> Vec<&[u8]> {
    units.iter().filter(|u| u.len() >= 2).map(Vec::as_slice).collect()
}

fn category_count(units: &[&[u8]]) -> usize {
    units.iter().flat_map(|u| u.iter()).copied().max().map_or(1, |m| m as usize + 1)
}

/// Alpha over `units`, each holding the values given to one image. Units
/// with fewer than two values are ignored.
pub fn krippendorff_alpha(units: &[Vec<u8>], metric: DistanceMetric) -> Result<f64, StatsError> {
    let usable = pairable(units);
    if usable.len() < 2 {
        return Err(StatsError::InsufficientData(format!(
            "need at least 2 images with 2 or more ratings, found {}",
            usable.len()
        )));
    }
    let q = category_count(&usable);
    Ok(Coincidence::build(usable.iter().copied(), q).alpha(metric))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementResult {
    pub alpha: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub metric: DistanceMetric,
    pub n_bootstrap: usize,
    pub seed: u64,
    /// Images that contributed pairable ratings.
    pub n_units: usize,
}

/// Percentile with linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Point estimate plus a 95% percentile interval from resampling images
/// with replacement. Each iteration uses its own stream of a ChaCha20
/// generator seeded with `seed`, so results do not depend on thread count.
pub fn bootstrap_alpha_ci(
    units: &[Vec<u8>],
    metric: DistanceMetric,
    n_iter: usize,
    seed: u64,
) -> Result<AgreementResult, StatsError> {
    if n_iter == 0 {
        return Err(StatsError::InsufficientData("bootstrap needs at least one iteration".into()));
    }
    let alpha = krippendorff_alpha(units, metric)?;
    let usable = pairable(units);
    let q = category_count(&usable);
    let n = usable.len();
    let mut draws: Vec<f64> = (0..n_iter)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let sample = (0..n).map(|_| usable[rng.random_range(0..n)]);
            Coincidence::build(sample, q).alpha(metric)
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    Ok(AgreementResult {
        alpha,
        ci_low: percentile(&draws, 0.025),
        ci_high: percentile(&draws, 0.975),
        metric,
        n_bootstrap: n_iter,
        seed,
        n_units: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: u8 = u8::MAX;

    fn units(rows: &[&[u8]]) -> Vec<Vec<u8>> {
        rows.iter().map(|r| r.iter().copied().filter(|&v| v != N).collect()).collect()
    }

    // Exact rational values from an independent implementation.
    #[test]
    fn frozen_small_cases() {
        let a = units(&[&[0, 0], &[0, 1], &[1, 1], &[1, 0]]);
        assert!((krippendorff_alpha(&a, DistanceMetric::Nominal).unwrap() - 1.0 / 8.0).abs() < 1e-12);
        assert!((krippendorff_alpha(&a, DistanceMetric::Ordinal).unwrap() - 1.0 / 8.0).abs() < 1e-12);

        let b = units(&[&[1, 1, 1], &[1, 2, N], &[2, 2, 2], &[1, N, N]]);
        assert!((krippendorff_alpha(&b, DistanceMetric::Nominal).unwrap() - 9.0 / 16.0).abs() < 1e-12);
        assert!((krippendorff_alpha(&b, DistanceMetric::Ordinal).unwrap() - 9.0 / 16.0).abs() < 1e-12);

        let c = units(&[&[0, 0], &[1, 1], &[2, 2], &[0, 1], &[1, 2]]);
        assert!((krippendorff_alpha(&c, DistanceMetric::Nominal).unwrap() - 5.0 / 11.0).abs() < 1e-12);
        assert!((krippendorff_alpha(&c, DistanceMetric::Ordinal).unwrap() - 7.0 / 10.0).abs() < 1e-12);

        let e = units(&[&[0, 1, 2], &[0, 0, N], &[2, 2, 1], &[1, N, 1], &[0, 2, 2], &[1, 1, 1]]);
        assert!((krippendorff_alpha(&e, DistanceMetric::Nominal).unwrap() - 61.0 / 166.0).abs() < 1e-12);
        assert!((krippendorff_alpha(&e, DistanceMetric::Ordinal).unwrap() - 493.0 / 3168.0).abs() < 1e-12);
    }

    #[test]
    fn reference_reliability_data() {
        // Four observers, twelve units, values 1..=5 with gaps.
        let d = units(&[
            &[1, 1, N, 1],
            &[2, 2, 3, 2],
            &[3, 3, 3, 3],
            &[3, 3, 3, 3],
            &[2, 2, 2, 2],
            &[1, 2, 3, 4],
            &[4, 4, 4, 4],
            &[1, 1, 2, 1],
            &[2, 2, 2, 2],
            &[N, 5, 5, 5],
            &[N, N, 1, 1],
            &[N, 3, N, N],
        ]);
        let nominal = krippendorff_alpha(&d, DistanceMetric::Nominal).unwrap();
        let ordinal = krippendorff_alpha(&d, DistanceMetric::Ordinal).unwrap();
        assert!((nominal - 113.0 / 152.0).abs() < 1e-12, "{nominal}");
        assert!((ordinal - 108577.0 / 133160.0).abs() < 1e-12, "{ordinal}");
    }

    #[test]
    fn perfect_agreement_is_one() {
        let u = units(&[&[0, 0, 0], &[1, 1, 1], &[2, 2, 2]]);
        assert_eq!(krippendorff_alpha(&u, DistanceMetric::Ordinal).unwrap(), 1.0);
        let constant = units(&[&[3, 3], &[3, 3]]);
        assert_eq!(krippendorff_alpha(&constant, DistanceMetric::Nominal).unwrap(), 1.0);
    }

    #[test]
    fn insufficient_data() {
        let u = units(&[&[1, 2], &[1, N], &[N, 2]]);
        assert!(matches!(krippendorff_alpha(&u, DistanceMetric::Nominal), Err(StatsError::InsufficientData(_))));
    }

    #[test]
    fn systematic_disagreement_is_negative() {
        let u = units(&[&[0, 1], &[1, 0], &[0, 1], &[1, 0]]);
        assert!(krippendorff_alpha(&u, DistanceMetric::Nominal).unwrap() < 0.0);
    }

    #[test]
    fn order_of_values_and_units_irrelevant() {
        let a = units(&[&[0, 1, 2], &[2, 2, 1], &[0, 0, 1]]);
        let b = units(&[&[1, 0, 0], &[2, 1, 0], &[1, 2, 2]]);
        for m in [DistanceMetric::Nominal, DistanceMetric::Ordinal] {
            let x = krippendorff_alpha(&a, m).unwrap();
            let y = krippendorff_alpha(&b, m).unwrap();
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn bootstrap_is_deterministic_and_brackets_estimate() {
        let u = units(&[&[0, 1, 2], &[0, 0, N], &[2, 2, 1], &[1, N, 1], &[0, 2, 2], &[1, 1, 1], &[2, 2, 2], &[0, 0, 1]]);
        let a = bootstrap_alpha_ci(&u, DistanceMetric::Ordinal, 500, 9).unwrap();
        let b = bootstrap_alpha_ci(&u, DistanceMetric::Ordinal, 500, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.ci_low <= a.ci_high);
        assert!(a.ci_low <= a.alpha + 0.05 && a.alpha - 0.05 <= a.ci_high);
        assert_eq!(a.n_units, 8);
        let c = bootstrap_alpha_ci(&u, DistanceMetric::Ordinal, 500, 10).unwrap();
        assert_ne!(a.ci_low, c.ci_low);
    }

    #[test]
    fn percentile_interpolates() {
        let s = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&s, 0.5), 2.0);
        assert_eq!(percentile(&s, 0.125), 0.5);
        assert_eq!(percentile(&s, 1.0), 4.0);
    }
}
