use alloc::format;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the index set is partitioned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    /// Test starts together with validation and runs to the end.
    #[default]
    Paper,
    /// Train, validation and test are pairwise disjoint.
    Disjoint,
}

impl SplitMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" => Ok(SplitMode::Paper),
            "disjoint" => Ok(SplitMode::Disjoint),
            other => Err(Error::Config(format!("unknown split mode {other:?}"))),
        }
    }
}

/// Inclusive 1-based index range `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRange {
    pub start: usize,
    pub end: usize,
}

impl IndexRange {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: usize) -> bool {
        (self.start..=self.end).contains(&k)
    }

    pub fn intersects(&self, other: &IndexRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn iter(&self) -> core::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub train: IndexRange,
    pub valid: IndexRange,
    pub test: IndexRange,
}

const REF_TOTAL: usize = 15325;
const REF_TRAIN_END: usize = 9928;
const REF_VALID_END: usize = 13228;

/// `round(n · num / REF_TOTAL)` with halves rounded up, in integers.
fn scaled(n: usize, num: usize) -> usize {
    (2 * n * num + REF_TOTAL) / (2 * REF_TOTAL)
}

/// Partitions `1..=n` in the reference proportions 9928 : 3300 : 2097.
pub fn split_dataset(n: usize, mode: SplitMode) -> Result<SplitSpec> {
    let a = scaled(n, REF_TRAIN_END);
    let b = scaled(n, REF_VALID_END);
    let test_start = match mode {
        SplitMode::Paper => a + 1,
        SplitMode::Disjoint => b + 1,
    };
    if a < 1 || b <= a || test_start > n {
        return Err(Error::EmptySplit(format!("{n} indices cannot be split in {mode:?} mode")));
    }
    Ok(SplitSpec {
        mode,
        train: IndexRange { start: 1, end: a },
        valid: IndexRange { start: a + 1, end: b },
        test: IndexRange { start: test_start, end: n },
    })
}
