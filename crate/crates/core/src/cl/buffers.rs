use std::collections::VecDeque;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EffectiveSample;
use crate::class::Class;
use crate::error::{KwsError, Result};
use crate::features::{FeaturePair, Provenance};

pub const DEFAULT_EFFECTIVE_CAPACITY: usize = 256;

/// Class-balanced labelled features from clean training data, stored after
/// the waveform stage and before map-level denoising. Entries are never
/// modified once the buffer is built.
#[derive(Debug, Clone, PartialEq)]
pub struct RehearsalBuffer {
    entries: Vec<FeaturePair>,
    per_class: usize,
}

impl RehearsalBuffer {
    /// Draws up to `per_class` labelled pairs of each class (seeded), using
    /// the same count for both classes.
    pub fn from_pairs(pairs: &[FeaturePair], per_class: usize, seed: u64) -> Result<Self> {
        let mut by_class: [Vec<&FeaturePair>; 2] = Default::default();
        for p in pairs {
            if let Some(c) = p.label {
                by_class[c.index()].push(p);
            }
        }
        let available = by_class.iter().map(Vec::len).min().unwrap_or(0);
        if available == 0 {
            return Err(KwsError::EmptyRehearsal);
        }
        let take = per_class.min(available);
        if take < per_class {
            warn!("rehearsal buffer holds {take} per class, {per_class} requested");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::with_capacity(2 * take);
        for class in Class::ALL {
            let mut members = by_class[class.index()].clone();
            members.shuffle(&mut rng);
            entries.extend(members.into_iter().take(take).map(|p| FeaturePair {
                provenance: Provenance::Rehearsal,
                ..p.clone()
            }));
        }
        Ok(RehearsalBuffer {
            entries,
            per_class: take,
        })
    }

    /// Rebuilds a buffer from stored entries; every entry must be labelled.
    pub fn from_entries(entries: Vec<FeaturePair>) -> Result<Self> {
        let mut counts = [0usize; 2];
        for e in &entries {
            let c = e
                .label
                .ok_or_else(|| KwsError::Checkpoint("rehearsal entry without a label".into()))?;
            counts[c.index()] += 1;
        }
        if counts[0] != counts[1] {
            return Err(KwsError::Checkpoint(format!("unbalanced rehearsal buffer {counts:?}")));
        }
        Ok(RehearsalBuffer {
            entries,
            per_class: counts[0],
        })
    }

    pub fn entries(&self) -> &[FeaturePair] {
        &self.entries
    }

    pub fn per_class(&self) -> usize {
        self.per_class
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Accepted runtime samples awaiting the next update; oldest are evicted
/// once `capacity` is reached.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveBuffer {
    samples: VecDeque<EffectiveSample>,
    capacity: usize,
    evicted: u64,
}

impl EffectiveBuffer {
    pub fn new(capacity: usize) -> Self {
        EffectiveBuffer {
            samples: VecDeque::with_capacity(capacity),
            capacity: capacity.max(1),
            evicted: 0,
        }
    }

    pub(crate) fn restore(capacity: usize, evicted: u64, samples: Vec<EffectiveSample>) -> Self {
        let mut buf = EffectiveBuffer::new(capacity);
        samples.into_iter().for_each(|s| buf.push(s));
        buf.evicted = evicted;
        buf
    }

    pub fn push(&mut self, sample: EffectiveSample) {
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
            self.evicted += 1;
        }
        self.samples.push_back(sample);
    }

    pub fn iter(&self) -> impl Iterator<Item = &EffectiveSample> {
        self.samples.iter()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn evicted(&self) -> u64 {
        self.evicted
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureKind, FeatureMap};

    fn pair(label: Option<Class>, tag: f32) -> FeaturePair {
        let mut mfcc = FeatureMap::zeros(FeatureKind::Mfcc);
        mfcc.values[0] = tag;
        FeaturePair {
            mfcc,
            logmel: FeatureMap::zeros(FeatureKind::LogMel),
            label,
            provenance: Provenance::Runtime,
        }
    }

    fn sample(tag: f32) -> EffectiveSample {
        EffectiveSample {
            pair: pair(Some(Class::Yes), tag),
            pseudo_label: Class::Yes,
            confidence_q: 250,
            distance: 0.0,
        }
    }

    #[test]
    fn rehearsal_is_balanced() {
        let mut pairs: Vec<_> = (0..10).map(|i| pair(Some(Class::Yes), i as f32)).collect();
        pairs.extend((0..3).map(|i| pair(Some(Class::No), i as f32)));
        pairs.push(pair(None, 99.0));
        let buf = RehearsalBuffer::from_pairs(&pairs, 64, 1).unwrap();
        assert_eq!(buf.per_class(), 3);
        assert_eq!(buf.len(), 6);
        assert!(buf.entries().iter().all(|e| e.provenance == Provenance::Rehearsal));
        let buf = RehearsalBuffer::from_pairs(&pairs, 2, 1).unwrap();
        assert_eq!(buf.len(), 4);
    }

    #[test]
    fn rehearsal_needs_both_classes() {
        let pairs: Vec<_> = (0..4).map(|i| pair(Some(Class::Yes), i as f32)).collect();
        assert!(matches!(
            RehearsalBuffer::from_pairs(&pairs, 2, 0),
            Err(KwsError::EmptyRehearsal)
        ));
    }

    #[test]
    fn effective_buffer_evicts_oldest() {
        let mut buf = EffectiveBuffer::new(3);
        for i in 0..5 {
            buf.push(sample(i as f32));
        }
        let tags: Vec<f32> = buf.iter().map(|s| s.pair.mfcc.values[0]).collect();
        assert_eq!(tags, vec![2.0, 3.0, 4.0]);
        assert_eq!(buf.evicted(), 2);
        buf.clear();
        assert!(buf.is_empty());
    }
}
