//! Adequacy tests, the energy gap, and the causal least-laxity-first
//! allocator for unit-rate services.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::majorization::{ensure_same_len, majorizes, sorted_desc, weakly_majorizes};

/// Binary unit-rate allocations: `nu[j][t]` is 1 when row `j` is served in
/// slot `t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationMatrix {
    pub nu: Vec<Vec<u8>>,
    pub durations: Vec<u64>,
    pub horizon: usize,
}

impl AllocationMatrix {
    pub fn empty(durations: &[u64], horizon: usize) -> Self {
        AllocationMatrix {
            nu: vec![vec![0; horizon]; durations.len()],
            durations: durations.to_vec(),
            horizon,
        }
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.nu
            .iter()
            .map(|row| row.iter().map(|&b| b as u64).sum())
            .collect()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        let mut cols = vec![0u64; self.horizon];
        for row in &self.nu {
            for (c, &b) in cols.iter_mut().zip(row) {
                *c += b as u64;
            }
        }
        cols
    }

    /// Every row is binary and sums to its duration.
    pub fn is_complete(&self) -> bool {
        self.nu.iter().all(|row| row.iter().all(|&b| b <= 1)) && self.row_sums() == self.durations
    }

    /// Complete and within the per-slot supply `p`.
    pub fn is_feasible_for(&self, p: &[u64]) -> bool {
        p.len() == self.horizon
            && self.is_complete()
            && self.column_sums().iter().zip(p).all(|(c, cap)| c <= cap)
    }
}

/// Progress of the least-laxity-first allocator: how many slots each row has
/// been served, and the next slot to allocate (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaxityState {
    pub served: Vec<u64>,
    pub t: usize,
}

impl LaxityState {
    pub fn new(rows: usize) -> Self {
        LaxityState {
            served: vec![0; rows],
            t: 0,
        }
    }

    pub fn remaining(&self, durations: &[u64], row: usize) -> u64 {
        durations[row].saturating_sub(self.served[row])
    }

    /// Slots left from the current slot onward minus the service still owed.
    pub fn laxity(&self, durations: &[u64], horizon: usize, row: usize) -> i64 {
        (horizon as i64 - self.t as i64) - self.remaining(durations, row) as i64
    }
}

pub fn is_exactly_adequate(d: &[u64], p: &[u64]) -> Result<bool> {
    majorizes(d, p)
}

pub fn is_adequate(d: &[u64], p: &[u64]) -> Result<bool> {
    weakly_majorizes(d, p)
}

/// Worst tail deficit `max_t Σ_{s≥t} (d_s − p↓_s)` together with the 1-based
/// slot where it starts (smallest on ties).
pub fn worst_tail_deficit(d: &[u64], p: &[u64]) -> Result<(i64, usize)> {
    ensure_same_len(d, p)?;
    let p = sorted_desc(p);
    let mut tail = 0i64;
    let mut best = (i64::MIN, 0usize);
    for t in (0..d.len()).rev() {
        tail += d[t] as i64 - p[t] as i64;
        if tail >= best.0 {
            best = (tail, t + 1);
        }
    }
    Ok(best)
}

/// Least additional energy that could make `p` adequate for `d`.
pub fn energy_gap(d: &[u64], p: &[u64]) -> Result<u64> {
    let (deficit, _) = worst_tail_deficit(d, p)?;
    Ok(deficit.max(0) as u64)
}

/// Allocates slot `state.t`: among rows still owed service, the `p_t` with
/// smallest laxity are served, lower row index first on ties.
pub fn llf_allocate_step(
    state: &LaxityState,
    durations: &[u64],
    horizon: usize,
    p_t: u64,
) -> (LaxityState, Vec<u8>) {
    let mut pending: Vec<usize> = (0..durations.len())
        .filter(|&j| state.remaining(durations, j) > 0)
        .collect();
    pending.sort_by_key(|&j| (state.laxity(durations, horizon, j), j));

    let mut column = vec![0u8; durations.len()];
    let mut next = state.clone();
    for &j in pending.iter().take(p_t.min(usize::MAX as u64) as usize) {
        column[j] = 1;
        next.served[j] += 1;
    }
    next.t += 1;
    (next, column)
}

/// Runs the allocator over the whole horizon. Slot `t` reads only `p[..=t]`.
pub fn llf_allocate(durations: &[u64], p: &[u64]) -> Result<AllocationMatrix> {
    let horizon = p.len();
    let mut matrix = AllocationMatrix::empty(durations, horizon);
    let mut state = LaxityState::new(durations.len());
    for (t, &p_t) in p.iter().enumerate() {
        let (next, column) = llf_allocate_step(&state, durations, horizon, p_t);
        for (row, bit) in matrix.nu.iter_mut().zip(column) {
            row[t] = bit;
        }
        state = next;
    }
    let unmet_rows: Vec<usize> = (0..durations.len())
        .filter(|&j| state.served[j] != durations[j])
        .collect();
    if !unmet_rows.is_empty() {
        let d = crate::portfolio::demand_from_durations(durations, horizon);
        let (_, tail_index) = worst_tail_deficit(&d, p)?;
        return Err(Error::Inadequate {
            tail_index,
            unmet_rows,
        });
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_adequacy_examples() {
        assert!(is_exactly_adequate(&[3, 2, 1], &[2, 2, 2]).unwrap());
        assert!(!is_exactly_adequate(&[2, 2], &[3, 1]).unwrap());
        assert!(is_exactly_adequate(&[0, 0], &[0, 0]).unwrap());
    }

    #[test]
    fn adequacy_examples() {
        assert!(is_adequate(&[2, 1, 0], &[1, 1, 2]).unwrap());
        assert!(!is_adequate(&[2, 2, 1], &[1, 1, 1]).unwrap());
        assert!(is_adequate(&[1, 0], &[5, 5]).unwrap());
        assert!(is_adequate(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn energy_gap_examples() {
        assert_eq!(energy_gap(&[2, 2, 1], &[1, 1, 1]).unwrap(), 2);
        assert_eq!(energy_gap(&[2, 1, 0], &[1, 1, 2]).unwrap(), 0);
        assert_eq!(energy_gap(&[1, 1], &[0, 0]).unwrap(), 2);
        assert_eq!(worst_tail_deficit(&[2, 2, 1], &[1, 1, 1]).unwrap(), (2, 1));
    }

    #[test]
    fn llf_step_examples() {
        let durations = [2, 1];
        let s0 = LaxityState::new(2);
        assert_eq!(s0.laxity(&durations, 2, 0), 0);
        assert_eq!(s0.laxity(&durations, 2, 1), 1);

        let (s1, col) = llf_allocate_step(&s0, &durations, 2, 2);
        assert_eq!(col, vec![1, 1]);
        assert_eq!(s1.served, vec![1, 1]);
        assert_eq!(s1.t, 1);

        let (_, col) = llf_allocate_step(&s0, &durations, 2, 1);
        assert_eq!(col, vec![1, 0]);

        let done = LaxityState {
            served: vec![2, 1],
            t: 1,
        };
        let (_, col) = llf_allocate_step(&done, &durations, 2, 5);
        assert_eq!(col, vec![0, 0]);
    }

    #[test]
    fn llf_allocate_examples() {
        let m = llf_allocate(&[2, 1], &[2, 1]).unwrap();
        assert_eq!(m.nu, vec![vec![1, 1], vec![1, 0]]);
        assert!(m.is_feasible_for(&[2, 1]));

        let m = llf_allocate(&[1], &[0, 1]).unwrap();
        assert_eq!(m.nu, vec![vec![0, 1]]);

        let m = llf_allocate(&[], &[3, 1]).unwrap();
        assert!(m.nu.is_empty());
    }

    #[test]
    fn llf_reports_inadequate_supply() {
        let err = llf_allocate(&[2, 2], &[1, 1, 1]).unwrap_err();
        assert_eq!(
            err,
            Error::Inadequate {
                tail_index: 1,
                unmet_rows: vec![1]
            }
        );
    }
}
