//! Brute-force reference implementations for small instances.
//!
//! Nothing here uses majorization or sorting identities: adequacy is decided
//! by searching binary allocation matrices directly, energy gaps by
//! enumerating subsets, and the integer market optimum by scanning the whole
//! decision grid.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{Caps, MarketModel};
use crate::scenarios::ScenarioSet;

pub const DEFAULT_BUDGET: u64 = 10_000_000;
pub const MARKET_GRID_LIMIT: u64 = 1_000_000;
const SUBSET_HORIZON_LIMIT: usize = 20;

/// Limits on exhaustive enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmallInstanceBounds {
    pub t_max: usize,
    pub n_max: usize,
    pub duration_max: u64,
    pub supply_max: u64,
    pub budget: u64,
}

impl Default for SmallInstanceBounds {
    fn default() -> Self {
        SmallInstanceBounds {
            t_max: 4,
            n_max: 3,
            duration_max: 4,
            supply_max: 4,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl SmallInstanceBounds {
    pub fn new(t_max: usize, n_max: usize, duration_max: u64, supply_max: u64) -> Result<Self> {
        let bounds = SmallInstanceBounds {
            t_max,
            n_max,
            duration_max,
            supply_max,
            budget: DEFAULT_BUDGET,
        };
        bounds.check_budget()?;
        Ok(bounds)
    }

    /// `(supply_max + 1)^T_max × (duration_max + 1)^N_max`, saturating.
    pub fn enumeration_size(&self) -> u64 {
        let supplies = (self.supply_max.saturating_add(1)).saturating_pow(self.t_max as u32);
        let rows = (self.duration_max.saturating_add(1)).saturating_pow(self.n_max as u32);
        supplies.saturating_mul(rows)
    }

    pub fn check_budget(&self) -> Result<()> {
        if self.t_max == 0 {
            return Err(Error::BoundsExceeded("t_max must be at least 1".into()));
        }
        let size = self.enumeration_size();
        if size > self.budget {
            return Err(Error::BoundsExceeded(format!(
                "enumeration size {size} exceeds budget {}",
                self.budget
            )));
        }
        Ok(())
    }

    fn check_instance(&self, durations: &[u64], p: &[u64]) -> Result<()> {
        if p.is_empty() || p.len() > self.t_max {
            return Err(Error::BoundsExceeded(format!("horizon {}", p.len())));
        }
        if durations.len() > self.n_max {
            return Err(Error::BoundsExceeded(format!("{} rows", durations.len())));
        }
        if durations.iter().any(|&e| e > self.duration_max) {
            return Err(Error::BoundsExceeded("duration above bound".into()));
        }
        if p.iter().any(|&v| v > self.supply_max) {
            return Err(Error::BoundsExceeded("supply above bound".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fit {
    AtMost,
    Exact,
}

struct Search<'a> {
    durations: &'a [u64],
    fit: Fit,
    dead: HashSet<(usize, Vec<u64>)>,
}

impl Search<'_> {
    fn row(&mut self, j: usize, caps: &mut Vec<u64>) -> bool {
        if j == self.durations.len() {
            return match self.fit {
                Fit::AtMost => true,
                Fit::Exact => caps.iter().all(|&c| c == 0),
            };
        }
        if self.dead.contains(&(j, caps.clone())) {
            return false;
        }
        let need = self.durations[j] as usize;
        let open: Vec<usize> = (0..caps.len()).filter(|&t| caps[t] > 0).collect();
        // laxity cut: the row cannot fit in the slots left open
        let found = open.len() >= need && self.choose(j, &open, 0, need, caps);
        if !found {
            self.dead.insert((j, caps.clone()));
        }
        found
    }

    /// Picks `left` more slots from `open[from..]` for row `j`.
    fn choose(
        &mut self,
        j: usize,
        open: &[usize],
        from: usize,
        left: usize,
        caps: &mut Vec<u64>,
    ) -> bool {
        if left == 0 {
            return self.row(j + 1, caps);
        }
        for i in from..open.len() {
            if open.len() - i < left {
                break;
            }
            let t = open[i];
            caps[t] -= 1;
            let ok = self.choose(j, open, i + 1, left - 1, caps);
            caps[t] += 1;
            if ok {
                return true;
            }
        }
        false
    }
}

fn search(durations: &[u64], p: &[u64], fit: Fit) -> bool {
    if durations.iter().any(|&e| e as usize > p.len()) {
        return false;
    }
    let mut rows = durations.to_vec();
    rows.sort_unstable_by(|a, b| b.cmp(a));
    let mut s = Search {
        durations: &rows,
        fit,
        dead: HashSet::new(),
    };
    s.row(0, &mut p.to_vec())
}

/// Whether some binary allocation serves every row its duration with at most
/// `p_t` rows served in slot `t`.
pub fn bf_adequate(durations: &[u64], p: &[u64], bounds: &SmallInstanceBounds) -> Result<bool> {
    bounds.check_instance(durations, p)?;
    Ok(search(durations, p, Fit::AtMost))
}

/// As [`bf_adequate`], but every slot's supply must be used exactly.
pub fn bf_exactly_adequate(
    durations: &[u64],
    p: &[u64],
    bounds: &SmallInstanceBounds,
) -> Result<bool> {
    bounds.check_instance(durations, p)?;
    Ok(search(durations, p, Fit::Exact))
}

/// Unit-rate durations inducing a demand-duration vector.
pub fn durations_from_demand(d: &[u64]) -> Vec<u64> {
    let mut out = Vec::new();
    for t in 0..d.len() {
        let next = d.get(t + 1).copied().unwrap_or(0);
        for _ in 0..d[t].saturating_sub(next) {
            out.push(t as u64 + 1);
        }
    }
    out
}

/// Visits every binary matrix whose row `j` has exactly `durations[j]` ones,
/// passing the column sums.
fn for_each_allocation(durations: &[u64], horizon: usize, visit: &mut dyn FnMut(&[u64])) {
    fn rows(j: usize, durations: &[u64], cols: &mut Vec<u64>, visit: &mut dyn FnMut(&[u64])) {
        if j == durations.len() {
            visit(cols);
            return;
        }
        pick(j, 0, durations[j] as usize, durations, cols, visit);
    }
    fn pick(
        j: usize,
        from: usize,
        left: usize,
        durations: &[u64],
        cols: &mut Vec<u64>,
        visit: &mut dyn FnMut(&[u64]),
    ) {
        if left == 0 {
            rows(j + 1, durations, cols, visit);
            return;
        }
        for t in from..cols.len() {
            if cols.len() - t < left {
                break;
            }
            cols[t] += 1;
            pick(j, t + 1, left - 1, durations, cols, visit);
            cols[t] -= 1;
        }
    }
    if durations.iter().any(|&e| e as usize > horizon) {
        return;
    }
    rows(0, durations, &mut vec![0; horizon], visit);
}

/// Least total real-time purchase making `y + r + a` adequate.
///
/// A purchase vector works exactly when some allocation fits under
/// `y + r + a`; the cheapest purchase for a fixed allocation tops up each
/// slot's shortfall. Minimising over all allocations gives the answer.
pub fn bf_min_purchase(
    d: &[u64],
    y: &[u64],
    r: &[u64],
    bounds: &SmallInstanceBounds,
) -> Result<u64> {
    if y.len() != d.len() || r.len() != d.len() {
        return Err(Error::LengthMismatch {
            expected: d.len(),
            actual: y.len().max(r.len()),
        });
    }
    if d.is_empty() || d.len() > bounds.t_max {
        return Err(Error::BoundsExceeded(format!("horizon {}", d.len())));
    }
    let durations = durations_from_demand(d);
    if durations.len() > bounds.n_max {
        return Err(Error::BoundsExceeded(format!("{} rows", durations.len())));
    }
    let p: Vec<u64> = y.iter().zip(r).map(|(a, b)| a + b).collect();
    let mut best = u64::MAX;
    for_each_allocation(&durations, d.len(), &mut |cols| {
        let shortfall: u64 = cols.iter().zip(&p).map(|(c, s)| c.saturating_sub(*s)).sum();
        best = best.min(shortfall);
    });
    Ok(best)
}

/// `[max_S (Σ of the last |S| entries of d − Σ_{s∈S} x_s)]⁺` by enumerating
/// every subset of slots.
pub fn bf_subset_gap(d: &[u64], x: &[u64]) -> Result<u64> {
    if d.len() != x.len() {
        return Err(Error::LengthMismatch {
            expected: d.len(),
            actual: x.len(),
        });
    }
    let horizon = d.len();
    if horizon > SUBSET_HORIZON_LIMIT {
        return Err(Error::BoundsExceeded(format!(
            "subset enumeration over {horizon} slots"
        )));
    }
    let mut best = 0i64;
    for mask in 1u32..(1u32 << horizon) {
        let size = mask.count_ones() as usize;
        let demand: i64 = d[horizon - size..].iter().map(|&v| v as i64).sum();
        let supply: i64 = (0..horizon)
            .filter(|t| mask & (1 << t) != 0)
            .map(|t| x[t] as i64)
            .sum();
        best = best.max(demand - supply);
    }
    Ok(best as u64)
}

/// Real-valued subset gap, for checking the relaxed objective.
pub fn bf_subset_gap_real(d: &[f64], x: &[f64]) -> f64 {
    let horizon = d.len();
    assert!(
        horizon <= SUBSET_HORIZON_LIMIT,
        "subset enumeration too large"
    );
    let mut best = 0.0f64;
    for mask in 1u32..(1u32 << horizon) {
        let size = mask.count_ones() as usize;
        let demand: f64 = d[horizon - size..].iter().sum();
        let supply: f64 = (0..horizon)
            .filter(|t| mask & (1 << t) != 0)
            .map(|t| x[t])
            .sum();
        best = best.max(demand - supply);
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegerOptimum {
    pub d: Vec<u64>,
    pub y: Vec<u64>,
    pub objective: f64,
}

/// Expected profit of an integer decision computed from first principles.
pub fn bf_integer_profit(
    mm: &MarketModel,
    scenarios: &ScenarioSet,
    d: &[u64],
    y: &[u64],
) -> Result<f64> {
    let horizon = mm.horizon;
    let revenue: f64 = (0..horizon)
        .map(|t| mm.pi_unit[t] * (d[t] - d.get(t + 1).copied().unwrap_or(0)) as f64)
        .sum();
    let day_ahead = mm.c_da * y.iter().sum::<u64>() as f64;
    let mut expected = 0.0;
    for (r, w) in scenarios.iter() {
        let p: Vec<u64> = y.iter().zip(r.iter()).map(|(a, b)| a + b).collect();
        expected += w * bf_subset_gap(d, &p)? as f64;
    }
    Ok(revenue - day_ahead - mm.c_rt * expected)
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Number of `(d, y)` grid points: non-increasing `d ≤ d_max` times
/// `y ∈ [0, y_max]^T`.
pub fn market_grid_size(horizon: usize, caps: Caps) -> u64 {
    let monotone = binomial(caps.d_max + horizon as u64, horizon as u64);
    let boxes = (caps.y_max.saturating_add(1)).saturating_pow(horizon as u32);
    monotone.saturating_mul(boxes)
}

fn next_in_box(v: &mut [u64], max: u64) -> bool {
    for i in (0..v.len()).rev() {
        if v[i] < max {
            v[i] += 1;
            for x in &mut v[i + 1..] {
                *x = 0;
            }
            return true;
        }
    }
    false
}

/// Exhaustive integer optimum over the capped grid. Iteration is in
/// lexicographic `(d, y)` order and only strict improvements replace the
/// incumbent, so ties go to the lexicographically smallest point.
pub fn bf_optimal_integer_market(
    mm: &MarketModel,
    scenarios: &ScenarioSet,
    caps: Caps,
) -> Result<IntegerOptimum> {
    mm.validate()?;
    let horizon = mm.horizon;
    if scenarios.horizon() != horizon {
        return Err(Error::LengthMismatch {
            expected: horizon,
            actual: scenarios.horizon(),
        });
    }
    let size = market_grid_size(horizon, caps);
    if size > MARKET_GRID_LIMIT {
        return Err(Error::BoundsExceeded(format!(
            "market grid of {size} points exceeds {MARKET_GRID_LIMIT}"
        )));
    }

    let mut best: Option<IntegerOptimum> = None;
    let mut d = vec![0u64; horizon];
    loop {
        if d.windows(2).all(|w| w[0] >= w[1]) {
            let mut y = vec![0u64; horizon];
            loop {
                let value = bf_integer_profit(mm, scenarios, &d, &y)?;
                if best.as_ref().is_none_or(|b| value > b.objective) {
                    best = Some(IntegerOptimum {
                        d: d.clone(),
                        y: y.clone(),
                        objective: value,
                    });
                }
                if !next_in_box(&mut y, caps.y_max) {
                    break;
                }
            }
        }
        if !next_in_box(&mut d, caps.d_max) {
            break;
        }
    }
    Ok(best.expect("grid is non-empty"))
}
