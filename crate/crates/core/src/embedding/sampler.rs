use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::{Error, Result};

/// Draws word ids with probability proportional to `count^power`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    alias: WeightedAliasIndex<f64>,
    probabilities: Vec<f64>,
}

impl NegativeSampler {
    pub const DEFAULT_POWER: f64 = 0.75;

    pub fn new(counts: &[u64], power: f64) -> Result<Self> {
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(power)).collect();
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || total <= 0.0 || !total.is_finite() {
            return Err(Error::Data("negative sampler needs at least one positive count".into()));
        }
        let probabilities = weights.iter().map(|w| w / total).collect();
        let alias = WeightedAliasIndex::new(weights).map_err(|e| Error::Data(e.to_string()))?;
        Ok(NegativeSampler { alias, probabilities })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.alias.sample(rng)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn empirical_frequencies_match_smoothed_unigram() {
        let counts = [500u64, 300, 120, 80, 40, 25, 15, 10, 5, 1];
        let sampler = NegativeSampler::new(&counts, 0.75).unwrap();
        let z: f64 = counts.iter().map(|&c| (c as f64).powf(0.75)).sum();

        let mut rng = rng_from_seed(11);
        let draws = 1_000_000;
        let mut hist = [0u64; 10];
        for _ in 0..draws {
            hist[sampler.sample(&mut rng)] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let expected = (c as f64).powf(0.75) / z;
            let observed = hist[i] as f64 / draws as f64;
            assert!((observed - expected).abs() < 0.01, "word {i}: {observed} vs {expected}");
        }
    }

    #[test]
    fn rejects_all_zero_counts() {
        assert!(NegativeSampler::new(&[0, 0], 0.75).is_err());
        assert!(NegativeSampler::new(&[], 0.75).is_err());
    }
}
