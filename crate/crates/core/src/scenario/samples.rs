use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::{SampleBatch, Standardizer};
use crate::tensor::Tensor;

use super::{Dataset, IndexRange};

/// Anchors `k` whose window `k-L+1..=k` and target `k+S` lie in `range`.
pub fn anchors(range: IndexRange, seq_len: usize, lookahead: usize) -> Vec<usize> {
    let first = range.start + seq_len - 1;
    let last = range.end.saturating_sub(lookahead);
    if seq_len == 0 || lookahead == 0 || first > last {
        return Vec::new();
    }
    (first..=last).collect()
}

/// Assembles the batch for the given anchors.
pub fn make_batch(
    data: &Dataset,
    anchors: &[usize],
    seq_len: usize,
    lookahead: usize,
    standardizer: &Standardizer,
) -> Result<SampleBatch> {
    if anchors.is_empty() {
        return Err(Error::EmptySplit("no anchors for batch".into()));
    }
    let (h, w) = (data.frame_height, data.frame_width);
    let b = anchors.len();
    let mut frames = Vec::with_capacity(b * seq_len * h * w);
    let mut powers = Vec::with_capacity(b * seq_len);
    let mut targets = Vec::with_capacity(b);
    for &k in anchors {
        if k < seq_len || k + lookahead > data.len() {
            return Err(Error::Config(format!("anchor {k} leaves the dataset")));
        }
        for j in k + 1 - seq_len..=k {
            frames.extend(data.frame(j).iter().map(|&p| p as f64));
            powers.push(standardizer.forward(data.power(j)));
        }
        targets.push(standardizer.forward(data.power(k + lookahead)));
    }
    Ok(SampleBatch {
        frames: Tensor::new(&[b, seq_len, 1, h, w], frames)?,
        powers: Tensor::new(&[b, seq_len], powers)?,
        targets: Tensor::new(&[b], targets)?,
        anchors: anchors.to_vec(),
    })
}

/// Deterministic per-epoch shuffling of anchors into mini-batches.
#[derive(Debug, Clone)]
pub struct Batcher {
    anchors: Vec<usize>,
    batch_size: usize,
    seed: u64,
}

impl Batcher {
    pub fn new(range: IndexRange, seq_len: usize, lookahead: usize, batch_size: usize, seed: u64) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        let anchors = anchors(range, seq_len, lookahead);
        if anchors.is_empty() {
            return Err(Error::EmptySplit(format!(
                "range {}..={} holds no sample with L = {seq_len}, S = {lookahead}",
                range.start, range.end
            )));
        }
        Ok(Batcher { anchors, batch_size, seed })
    }

    pub fn sample_count(&self) -> usize {
        self.anchors.len()
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.anchors.len().div_ceil(self.batch_size)
    }

    /// Anchor lists for `epoch`; the last batch may be short.
    pub fn epoch(&self, epoch: u64) -> Vec<Vec<usize>> {
        let mut order = self.anchors.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(epoch);
        order.shuffle(&mut rng);
        order.chunks(self.batch_size).map(|c| c.to_vec()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn anchor_enumeration() {
        assert_eq!(anchors(IndexRange { start: 1, end: 10 }, 4, 4), vec![4, 5, 6]);
        assert_eq!(anchors(IndexRange { start: 1, end: 2 }, 1, 1), vec![1]);
        assert!(anchors(IndexRange { start: 1, end: 7 }, 4, 4).is_empty());
    }

    #[test]
    fn epochs_repeat_and_differ() {
        let b = Batcher::new(IndexRange { start: 1, end: 200 }, 4, 4, 16, 9).unwrap();
        assert_eq!(b.epoch(0), b.epoch(0));
        assert_ne!(b.epoch(0), b.epoch(1));
        let e = b.epoch(3);
        assert_eq!(e.len(), b.batches_per_epoch());
        assert_eq!(e.last().unwrap().len(), 193 % 16);
        let mut all: Vec<usize> = e.concat();
        all.sort();
        assert_eq!(all, anchors(IndexRange { start: 1, end: 200 }, 4, 4));
    }

    #[test]
    fn empty_range_is_signalled() {
        assert!(matches!(
            Batcher::new(IndexRange { start: 5, end: 8 }, 4, 4, 8, 0),
            Err(Error::EmptySplit(_))
        ));
    }
}
