//! Integer-vector majorization and Robin Hood transfers.
//!
//! Majorization here uses the reversed (tail-sum) convention: `a` majorizes
//! `b` when every tail sum of `a↓` is at most the matching tail sum of `b↓`
//! and the totals agree. Under this convention `majorizes(d, p)` reads
//! "demand `d` fits supply `p` exactly".

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Non-negative integer energy units per slot over a horizon of length `T ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct EnergyVector(Vec<u64>);

impl EnergyVector {
    /// Builds a vector, rejecting an empty horizon and totals that would not
    /// fit a signed 64-bit accumulator.
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyHorizon);
        }
        let mut total: u64 = 0;
        for &v in &values {
            total = total.checked_add(v).ok_or(Error::Overflow)?;
        }
        if total > i64::MAX as u64 {
            return Err(Error::Overflow);
        }
        Ok(EnergyVector(values))
    }

    pub fn zeros(horizon: usize) -> Result<Self> {
        Self::new(vec![0; horizon])
    }

    pub fn horizon(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn get(&self, t: usize) -> u64 {
        self.0[t]
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.0.windows(2).all(|w| w[0] >= w[1])
    }

    /// Entrywise sum of two vectors of equal length.
    pub fn checked_add(&self, other: &EnergyVector) -> Result<EnergyVector> {
        ensure_same_len(self, other)?;
        let values = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_add(*b).ok_or(Error::Overflow))
            .collect::<Result<Vec<_>>>()?;
        EnergyVector::new(values)
    }
}

impl TryFrom<Vec<u64>> for EnergyVector {
    type Error = Error;

    fn try_from(values: Vec<u64>) -> Result<Self> {
        EnergyVector::new(values)
    }
}

impl From<EnergyVector> for Vec<u64> {
    fn from(v: EnergyVector) -> Self {
        v.0
    }
}

impl AsRef<[u64]> for EnergyVector {
    fn as_ref(&self) -> &[u64] {
        &self.0
    }
}

/// A one-unit move from a larger entry to a smaller one.
///
/// Indices are 0-based positions in the non-increasing rearrangement at the
/// time the transfer is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RhTransfer {
    pub from_index: usize,
    pub to_index: usize,
}

impl RhTransfer {
    pub fn new(from_index: usize, to_index: usize) -> Self {
        RhTransfer {
            from_index,
            to_index,
        }
    }
}

pub(crate) fn ensure_same_len(a: &[u64], b: &[u64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

impl std::ops::Deref for EnergyVector {
    type Target = [u64];

    fn deref(&self) -> &[u64] {
        &self.0
    }
}

/// Non-increasing rearrangement. Equal entries keep their original order.
pub fn sort_nonincreasing(v: &EnergyVector) -> EnergyVector {
    EnergyVector(sorted_desc(&v.0))
}

pub(crate) fn sorted_desc(v: &[u64]) -> Vec<u64> {
    let mut out = v.to_vec();
    // stable sort
    out.sort_by(|a, b| b.cmp(a));
    out
}

/// Tail-sum comparison of the sorted vectors: `Some(total_equal)` when every
/// tail of `a↓` is at most the matching tail of `b↓`, `None` otherwise.
fn tail_dominated(a: &[u64], b: &[u64]) -> Result<Option<bool>> {
    ensure_same_len(a, b)?;
    let a = sorted_desc(a);
    let b = sorted_desc(b);
    let (mut tail_a, mut tail_b) = (0u64, 0u64);
    for t in (0..a.len()).rev() {
        tail_a += a[t];
        tail_b += b[t];
        if tail_a > tail_b {
            return Ok(None);
        }
    }
    Ok(Some(tail_a == tail_b))
}

/// `a` majorizes `b` (tail-sum convention): all tails of `a↓` at most those of
/// `b↓`, with equal totals.
pub fn majorizes(a: &[u64], b: &[u64]) -> Result<bool> {
    Ok(tail_dominated(a, b)? == Some(true))
}

/// Tail-sum condition alone; the totals may differ.
pub fn weakly_majorizes(a: &[u64], b: &[u64]) -> Result<bool> {
    Ok(tail_dominated(a, b)?.is_some())
}

/// Moves one unit from `from_index` to `to_index` of a sorted vector and
/// re-sorts the result.
pub fn apply_rh_transfer(a: &EnergyVector, transfer: RhTransfer) -> Result<EnergyVector> {
    if !a.is_nonincreasing() {
        return Err(Error::NotSorted);
    }
    let RhTransfer {
        from_index,
        to_index,
    } = transfer;
    for idx in [from_index, to_index] {
        if idx >= a.horizon() {
            return Err(Error::TransferOutOfRange(idx));
        }
    }
    let (from_value, to_value) = (a.0[from_index], a.0[to_index]);
    if from_value <= to_value {
        return Err(Error::InvalidTransfer {
            from: from_index,
            to: to_index,
            from_value,
            to_value,
        });
    }
    let mut out = a.0.clone();
    out[from_index] -= 1;
    out[to_index] += 1;
    Ok(EnergyVector(sorted_desc(&out)))
}

/// Builds a sequence of one-unit transfers carrying `a↓` to `b↓`.
///
/// Each step picks the first index `t` where the current vector differs from
/// the target, then the first `s > t` whose value is more than one unit below
/// the value at `t`, and moves a unit from `t` to `s`.
pub fn rh_transfer_sequence(a: &EnergyVector, b: &EnergyVector) -> Result<Vec<RhTransfer>> {
    if !majorizes(a, b)? {
        return Err(Error::NotMajorizing);
    }
    let target = sorted_desc(b);
    let mut current = sort_nonincreasing(a);
    let mut transfers = Vec::new();
    while current.0 != target {
        let t = current
            .0
            .iter()
            .zip(&target)
            .position(|(x, y)| x != y)
            .expect("vectors differ");
        let s = (t + 1..current.horizon())
            .find(|&s| current.0[t] - current.0[s].min(current.0[t]) > 1)
            .ok_or_else(|| {
                Error::InvariantViolation(format!(
                    "no transfer destination after index {t} in {:?}",
                    current.0
                ))
            })?;
        let step = RhTransfer::new(t, s);
        current = apply_rh_transfer(&current, step)?;
        transfers.push(step);
    }
    Ok(transfers)
}

/// Replays `transfers` on `a↓`, returning every intermediate vector including
/// the start and the end.
pub fn replay_transfers(a: &EnergyVector, transfers: &[RhTransfer]) -> Result<Vec<EnergyVector>> {
    let mut states = vec![sort_nonincreasing(a)];
    for &step in transfers {
        let next = apply_rh_transfer(states.last().expect("non-empty"), step)?;
        states.push(next);
    }
    Ok(states)
}
