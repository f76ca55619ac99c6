//! Vose alias method: O(len) construction, O(1) sampling.

use rand::Rng;

use crate::error::WalkError;

#[derive(Debug, Clone, PartialEq)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    /// Build a sampler over unnormalized non-negative weights.
    pub fn new(weights: &[f64]) -> Result<AliasTable, WalkError> {
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || !(total > 0.0) {
            return Err(WalkError::AllZeroWeights);
        }
        let len = weights.len();
        let mut prob: Vec<f64> = weights
            .iter()
            .map(|w| w / total * len as f64)
            .collect();
        let mut alias: Vec<usize> = (0..len).collect();
        let mut small: Vec<usize> = Vec::new();
        let mut large: Vec<usize> = Vec::new();
        for (i, p) in prob.iter().enumerate() {
            if *p < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l;
            prob[l] -= 1.0 - prob[s];
            if prob[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // residual slots keep probability 1 up to rounding
        for &i in small.iter().chain(large.iter()) {
            prob[i] = 1.0;
        }
        Ok(AliasTable { prob, alias })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.prob.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    /// Draw an index with probability proportional to its input weight.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let slot = rng.gen_range(0..self.prob.len());
        if rng.gen::<f64>() < self.prob[slot] {
            slot
        } else {
            self.alias[slot]
        }
    }

    /// Analytic per-index probability implied by the table (sum of the slot
    /// branch masses), for verification against the normalized weights.
    pub fn analytic_probabilities(&self) -> Vec<f64> {
        let len = self.prob.len();
        let mut out = vec![0.0; len];
        for (slot, (&p, &a)) in self.prob.iter().zip(self.alias.iter()).enumerate() {
            out[slot] += p / len as f64;
            out[a] += (1.0 - p) / len as f64;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn singleton_always_zero() {
        let t = AliasTable::new(&[5.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(t.sample(&mut rng), 0);
        }
    }

    #[test]
    fn all_zero_rejected() {
        assert!(matches!(AliasTable::new(&[]), Err(WalkError::AllZeroWeights)));
        assert!(matches!(
            AliasTable::new(&[0.0, 0.0]),
            Err(WalkError::AllZeroWeights)
        ));
    }

    #[test]
    fn zero_weight_entry_never_sampled() {
        let t = AliasTable::new(&[1.0, 0.0, 3.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            assert_ne!(t.sample(&mut rng), 1);
        }
    }

    #[test]
    fn biased_pair_frequency() {
        let t = AliasTable::new(&[1.0, 3.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 1_000_000;
        let ones = (0..n).filter(|_| t.sample(&mut rng) == 1).count();
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.75).abs() < 0.01, "freq = {freq}");
    }

    #[test]
    fn uniform_chi_square() {
        let t = AliasTable::new(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000usize;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[t.sample(&mut rng)] += 1;
        }
        let expected = n as f64 / 4.0;
        let stat: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let p = 1.0 - ChiSquared::new(3.0).unwrap().cdf(stat);
        assert!(p > 0.001, "chi2 = {stat}, p = {p}");
    }

    proptest! {
        #[test]
        fn analytic_probabilities_exact(weights in proptest::collection::vec(0.0f64..100.0, 1..40)) {
            let total: f64 = weights.iter().sum();
            prop_assume!(total > 1e-9);
            let t = AliasTable::new(&weights).unwrap();
            let probs = t.analytic_probabilities();
            for (p, w) in probs.iter().zip(weights.iter()) {
                prop_assert!((p - w / total).abs() < 1e-12);
            }
        }
    }
}
