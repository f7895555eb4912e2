//! Synthetic dataset generation: Dirichlet draws, multinomial count draws,
//! and whole-dataset synthesis for tests and benchmarks.
//!
//! Reproducibility contract: each row gets its own ChaCha8 stream keyed by
//! a SplitMix64 hash of `(seed, row_index)`, so output is identical across
//! runs and worker counts. Gamma variates come from rand_distr's
//! Marsaglia-Tsang sampler; multinomial counts from sequential binomial
//! splitting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma};

use crate::compressed::CountMatrix;
use crate::dirichlet::DirichletParams;
use crate::parallel::{self, SHARD_ROWS};

/// Row-total policy for synthesized datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowTotals {
    /// Every row draws exactly this many samples.
    Fixed(u64),
    /// Totals drawn uniformly from `lo..=hi` per row.
    Uniform { lo: u64, hi: u64 },
}

impl RowTotals {
    fn draw(&self, rng: &mut ChaCha8Rng) -> u64 {
        match *self {
            RowTotals::Fixed(n) => n,
            RowTotals::Uniform { lo, hi } => {
                assert!(lo <= hi, "empty row-total range {lo}..={hi}");
                rng.random_range(lo..=hi)
            }
        }
    }
}

/// Recipe for a synthetic Dirichlet-multinomial dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub alpha: DirichletParams,
    pub rows: u64,
    pub row_totals: RowTotals,
    pub seed: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// The deterministic per-row generator: ChaCha8 keyed by
/// `splitmix64(seed ^ splitmix64(row))`.
pub fn row_rng(seed: u64, row: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(row)))
}

/// One point on the open simplex distributed Dirichlet(alpha), via
/// normalized independent Gamma(alpha_k, 1) variates. Draws that underflow
/// to zero are clamped to the smallest positive normal, keeping every
/// component strictly positive.
pub fn sample_dirichlet(alpha: &DirichletParams, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut draws: Vec<f64> = alpha
        .as_slice()
        .iter()
        .map(|&a| {
            let g = Gamma::new(a, 1.0).expect("alpha validated positive").sample(rng);
            g.max(f64::MIN_POSITIVE)
        })
        .collect();
    let total: f64 = draws.iter().sum();
    for d in &mut draws {
        *d /= total;
    }
    draws
}

/// A multinomial draw of `n` samples from `p`, by splitting `n` across
/// categories with conditional binomials. Counts always sum to `n`.
pub fn sample_counts(p: &[f64], n: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let k = p.len();
    let mut counts = vec![0u64; k];
    let mut remaining = n;
    let mut rest = 1.0f64;
    for j in 0..k.saturating_sub(1) {
        if remaining == 0 {
            break;
        }
        let conditional = if rest > 0.0 { (p[j] / rest).clamp(0.0, 1.0) } else { 1.0 };
        let c = Binomial::new(remaining, conditional)
            .expect("conditional probability clamped to [0, 1]")
            .sample(rng);
        counts[j] = c;
        remaining -= c;
        rest -= p[j];
    }
    if k > 0 {
        counts[k - 1] = remaining;
    }
    counts
}

/// Generates the full dataset: each row is an independent
/// Dirichlet-multinomial draw. Deterministic given `spec.seed`; rows are
/// generated in parallel shards when the `parallel` feature is on, with
/// identical output either way.
pub fn synthesize(spec: &SynthSpec) -> CountMatrix {
    let k = spec.alpha.len();
    let n = spec.rows as usize;
    let shard_count = n.div_ceil(SHARD_ROWS);
    let shards: Vec<Vec<u64>> = parallel::map_indexed(shard_count, |s| {
        let lo = s * SHARD_ROWS;
        let hi = ((s + 1) * SHARD_ROWS).min(n);
        let mut flat = Vec::with_capacity((hi - lo) * k);
        for row in lo..hi {
            let mut rng = row_rng(spec.seed, row as u64);
            let total = spec.row_totals.draw(&mut rng);
            if total == 0 {
                flat.extend(std::iter::repeat_n(0, k));
                continue;
            }
            let p = sample_dirichlet(&spec.alpha, &mut rng);
            flat.extend(sample_counts(&p, total, &mut rng));
        }
        flat
    });
    let mut data = Vec::with_capacity(n * k);
    for shard in shards {
        data.extend(shard);
    }
    CountMatrix::from_flat(k, data).expect("alpha has at least two categories")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha312() -> DirichletParams {
        DirichletParams::new(vec![3.0, 1.0, 2.0]).unwrap()
    }

    #[test]
    fn dirichlet_draws_live_on_the_simplex() {
        let alpha = alpha312();
        for row in 0..200 {
            let p = sample_dirichlet(&alpha, &mut row_rng(1, row));
            assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(p.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn dirichlet_draws_are_deterministic() {
        let alpha = alpha312();
        let a = sample_dirichlet(&alpha, &mut row_rng(7, 3));
        let b = sample_dirichlet(&alpha, &mut row_rng(7, 3));
        assert_eq!(a, b);
        let c = sample_dirichlet(&alpha, &mut row_rng(8, 3));
        assert_ne!(a, c);
    }

    #[test]
    fn dirichlet_empirical_mean() {
        let alpha = alpha312();
        let n = 100_000u64;
        let mut mean = [0.0f64; 3];
        for row in 0..n {
            let p = sample_dirichlet(&alpha, &mut row_rng(42, row));
            for (m, x) in mean.iter_mut().zip(&p) {
                *m += x;
            }
        }
        let expected = [0.5, 1.0 / 6.0, 1.0 / 3.0];
        for (m, e) in mean.iter().zip(&expected) {
            let got = m / n as f64;
            assert!((got - e).abs() <= 0.01 * e, "mean {got} vs {e}");
        }
    }

    #[test]
    fn counts_sum_exactly() {
        let p = [0.2, 0.5, 0.3];
        let mut rng = row_rng(3, 0);
        assert_eq!(sample_counts(&p, 0, &mut rng), vec![0, 0, 0]);
        for n in [1u64, 7, 100, 12345] {
            let counts = sample_counts(&p, n, &mut rng);
            assert_eq!(counts.iter().sum::<u64>(), n);
        }
    }

    #[test]
    fn counts_match_probabilities_within_3_sigma() {
        let p = [0.15, 0.55, 0.30];
        let n = 200_000u64;
        let counts = sample_counts(&p, n, &mut row_rng(9, 0));
        for (j, &pj) in p.iter().enumerate() {
            let freq = counts[j] as f64 / n as f64;
            let sigma = (pj * (1.0 - pj) / n as f64).sqrt();
            assert!(
                (freq - pj).abs() <= 3.0 * sigma,
                "category {j}: freq {freq} vs p {pj} (sigma {sigma})"
            );
        }
    }

    #[test]
    fn synthesize_zero_totals() {
        let spec = SynthSpec {
            alpha: alpha312(),
            rows: 3,
            row_totals: RowTotals::Fixed(0),
            seed: 0,
        };
        let data = synthesize(&spec);
        assert_eq!(data.n_rows(), 3);
        assert!(data.rows().all(|r| r.iter().all(|&c| c == 0)));
    }

    #[test]
    fn synthesize_fixed_totals_and_determinism() {
        let spec = SynthSpec {
            alpha: alpha312(),
            rows: 100,
            row_totals: RowTotals::Fixed(10),
            seed: 77,
        };
        let data = synthesize(&spec);
        assert_eq!(data.n_rows(), 100);
        assert!(data.rows().all(|r| r.iter().sum::<u64>() == 10));
        assert_eq!(synthesize(&spec), data);
        // Crossing a shard boundary changes nothing about earlier rows.
        let longer = synthesize(&SynthSpec { rows: 5000, ..spec.clone() });
        for n in 0..100 {
            assert_eq!(longer.row(n), data.row(n));
        }
    }

    #[test]
    fn uniform_row_totals_stay_in_range() {
        let spec = SynthSpec {
            alpha: alpha312(),
            rows: 500,
            row_totals: RowTotals::Uniform { lo: 2, hi: 6 },
            seed: 5,
        };
        let data = synthesize(&spec);
        assert!(data.rows().all(|r| {
            let t = r.iter().sum::<u64>();
            (2..=6).contains(&t)
        }));
    }
}
