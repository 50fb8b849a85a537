//! Per-track multi-template store of past embeddings.

use std::collections::VecDeque;

use super::embedding::{cosine_similarity, EmbeddingVector};

pub const DEFAULT_BANK_CAPACITY: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub embedding: EmbeddingVector,
    pub score: f64,
    seq: u64,
}

/// High- and low-score templates sharing one capacity.
///
/// When full, the oldest entry across both sub-banks is evicted; within a
/// sub-bank that is always its front.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBank {
    high: VecDeque<Template>,
    low: VecDeque<Template>,
    capacity: usize,
    next_seq: u64,
}

impl Default for FeatureBank {
    fn default() -> Self {
        Self::with_capacity(DEFAULT_BANK_CAPACITY)
    }
}

impl FeatureBank {
    /// # Panics
    /// If `capacity` is zero.
    pub fn with_capacity(capacity: usize) -> Self {
        assert!(capacity > 0, "feature bank capacity must be positive");
        Self {
            high: VecDeque::new(),
            low: VecDeque::new(),
            capacity,
            next_seq: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.high.len() + self.low.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn high_templates(&self) -> impl Iterator<Item = &Template> {
        self.high.iter()
    }

    pub fn low_templates(&self) -> impl Iterator<Item = &Template> {
        self.low.iter()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Template> {
        self.high.iter().chain(self.low.iter())
    }

    /// Stores `embedding` as a high-score template when `score >= threshold`,
    /// otherwise as a low-score one.
    pub fn insert(&mut self, embedding: EmbeddingVector, score: f64, threshold: f64) {
        debug_assert!((0.0..=1.0).contains(&score));
        if self.len() == self.capacity {
            self.evict_oldest();
        }
        let entry = Template {
            embedding,
            score,
            seq: self.next_seq,
        };
        self.next_seq += 1;
        if score >= threshold {
            self.high.push_back(entry);
        } else {
            self.low.push_back(entry);
        }
    }

    fn evict_oldest(&mut self) {
        let from_high = match (self.high.front(), self.low.front()) {
            (Some(h), Some(l)) => h.seq < l.seq,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if from_high {
            self.high.pop_front();
        } else {
            self.low.pop_front();
        }
    }
}

pub fn bank_insert(
    mut bank: FeatureBank,
    embedding: EmbeddingVector,
    det_score: f64,
    high_low_threshold: f64,
) -> FeatureBank {
    bank.insert(embedding, det_score, high_low_threshold);
    bank
}

/// Best cosine similarity between `query` and any stored template; `0` for an
/// empty bank.
pub fn multi_template_similarity(bank: &FeatureBank, query: &EmbeddingVector) -> f64 {
    bank.iter()
        .map(|t| cosine_similarity(&t.embedding, query))
        .reduce(f64::max)
        .unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(rng: &mut ChaCha8Rng, d: usize) -> EmbeddingVector {
        EmbeddingVector::normalized((0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn basis(i: usize, d: usize) -> EmbeddingVector {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        EmbeddingVector::normalized(v).unwrap()
    }

    #[test]
    fn capacity_evicts_first_insert() {
        let mut bank = FeatureBank::default();
        for i in 0..51 {
            bank.insert(basis(i % 64, 64), 0.9, 0.5);
        }
        assert_eq!(bank.len(), 50);
        assert_eq!(bank.high_templates().count(), 50);
        assert!(bank.iter().all(|t| t.embedding != basis(0, 64)));
        assert_eq!(bank.high_templates().next().unwrap().embedding, basis(1, 64));
    }

    #[test]
    fn low_scores_route_to_low_bank() {
        let mut bank = FeatureBank::default();
        bank.insert(basis(0, 4), 0.3, 0.6);
        assert_eq!(bank.low_templates().count(), 1);
        assert_eq!(bank.high_templates().count(), 0);
        bank.insert(basis(1, 4), 0.6, 0.6);
        assert_eq!(bank.high_templates().count(), 1);
    }

    #[test]
    fn interleaved_inserts_match_replay() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cap = 7;
        let mut bank = FeatureBank::with_capacity(cap);
        // Replay: a single list of (insert order, is_high); drop the lowest order when full.
        let mut replay: Vec<(usize, bool)> = Vec::new();
        for n in 0..40 {
            let score: f64 = rng.random();
            bank.insert(basis(n % 40, 40), score, 0.5);
            if replay.len() == cap {
                replay.remove(0);
            }
            replay.push((n, score >= 0.5));
        }
        let expect_high: Vec<_> = replay.iter().filter(|r| r.1).map(|r| basis(r.0, 40)).collect();
        let expect_low: Vec<_> = replay.iter().filter(|r| !r.1).map(|r| basis(r.0, 40)).collect();
        let high: Vec<_> = bank.high_templates().map(|t| t.embedding.clone()).collect();
        let low: Vec<_> = bank.low_templates().map(|t| t.embedding.clone()).collect();
        assert_eq!(high, expect_high);
        assert_eq!(low, expect_low);
    }

    #[test]
    fn similarity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = unit(&mut rng, 16);
        assert_eq!(multi_template_similarity(&FeatureBank::default(), &q), 0.0);

        let templates: Vec<_> = (0..5).map(|_| unit(&mut rng, 16)).collect();
        let mut bank = FeatureBank::default();
        for t in &templates {
            bank.insert(t.clone(), 0.8, 0.5);
        }
        let brute = templates
            .iter()
            .map(|t| t.as_slice().iter().zip(q.as_slice()).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((multi_template_similarity(&bank, &q) - brute).abs() < 1e-12);

        bank.insert(q.clone(), 0.2, 0.5);
        assert!((multi_template_similarity(&bank, &q) - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn inserting_never_lowers_similarity_until_eviction(
            seed in any::<u64>(), n in 1usize..30,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = unit(&mut rng, 8);
            let mut bank = FeatureBank::with_capacity(50);
            let mut last = f64::NEG_INFINITY;
            for _ in 0..n {
                let score: f64 = rng.random();
                bank.insert(unit(&mut rng, 8), score, 0.5);
                let now = multi_template_similarity(&bank, &q);
                prop_assert!(now >= last);
                last = now;
                prop_assert!(bank.len() <= bank.capacity());
            }
        }
    }
}
