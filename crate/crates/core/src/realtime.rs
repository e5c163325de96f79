//! The optimal real-time purchase policy, full-horizon delivery simulation,
//! and expected real-time cost over a scenario set.

use serde::{Deserialize, Serialize};

use crate::adequacy::{energy_gap, llf_allocate_step, AllocationMatrix, LaxityState};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::majorization::{ensure_same_len, weakly_majorizes, EnergyVector};
use crate::portfolio::{decompose_portfolio, demand_duration, DemandDuration, Portfolio};
use crate::scenarios::ScenarioSet;

/// Per-slot energy: day-ahead `y`, renewable `r`, real-time purchases `a`,
/// and totals `q = y + r + a`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupplyProfile {
    pub y: EnergyVector,
    pub r: EnergyVector,
    pub a: EnergyVector,
    pub q: EnergyVector,
}

impl SupplyProfile {
    pub fn total_purchase(&self) -> u64 {
        self.a.total()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyTrace {
    pub profile: SupplyProfile,
    pub allocations: AllocationMatrix,
    /// Per-consumer allocations `u[i][t]`.
    pub merged: Vec<Vec<u64>>,
    pub total_purchase: u64,
}

impl PolicyTrace {
    /// Re-checks the delivery guarantees against `portfolio`: totals add up,
    /// the supply covers demand, purchases equal the energy gap, and every
    /// consumer receives exactly its contract within its rate.
    pub fn check(&self, portfolio: &Portfolio) -> Result<()> {
        let fail = |msg: String| Err(Error::InvariantViolation(msg));
        let p = &self.profile;
        let d = demand_duration(&decompose_portfolio(portfolio));
        for t in 0..p.q.horizon() {
            if p.q[t] != p.y[t] + p.r[t] + p.a[t] {
                return fail(format!("q != y + r + a at slot {}", t + 1));
            }
        }
        if self.total_purchase != p.a.total() {
            return fail("total purchase does not match purchases".into());
        }
        if !weakly_majorizes(&d, &p.q)? {
            return fail("total supply is not adequate for demand".into());
        }
        let base = p.y.checked_add(&p.r)?;
        let gap = energy_gap(&d, &base)?;
        if gap != self.total_purchase {
            return fail(format!(
                "purchased {} but the energy gap is {gap}",
                self.total_purchase
            ));
        }
        if !self.allocations.is_feasible_for(&p.q) {
            return fail("unit-rate allocation is infeasible".into());
        }
        if self.merged.len() != portfolio.len() {
            return fail("consumer count mismatch".into());
        }
        for (i, (u, s)) in self.merged.iter().zip(&portfolio.services).enumerate() {
            if u.iter().sum::<u64>() != s.energy || u.iter().any(|&x| x > s.rate) {
                return fail(format!("consumer {i} allocation violates its contract"));
            }
        }
        Ok(())
    }
}

/// Smallest purchase in slot `t = fixed_q.len() + 1` keeping
/// `(q_1, …, q_t)` weakly adequate for the demand tail `(d_{T−t+1}, …, d_T)`.
///
/// Only the constraints over the `k` smallest earlier totals bind, so the
/// purchase is `max_k [Σ_{s>T−k−1} d_s − (k smallest of fixed_q) − y_t − r_t]⁺`.
pub fn gstar_step(d: &[u64], fixed_q: &[u64], y_t: u64, r_t: u64) -> u64 {
    let horizon = d.len();
    let t = fixed_q.len() + 1;
    assert!(t <= horizon, "slot {t} beyond horizon {horizon}");
    let mut ascending = fixed_q.to_vec();
    ascending.sort_unstable();

    let available = (y_t + r_t) as i64;
    let mut demand_tail = 0i64;
    let mut smallest = 0i64;
    let mut need = 0i64;
    for k in 0..t {
        demand_tail += d[horizon - 1 - k] as i64;
        if k > 0 {
            smallest += ascending[k - 1] as i64;
        }
        need = need.max(demand_tail - smallest - available);
    }
    need as u64
}

/// Runs the purchase policy over the whole horizon.
pub fn run_gstar(d: &[u64], y: &EnergyVector, r: &EnergyVector) -> Result<SupplyProfile> {
    ensure_same_len(d, y)?;
    ensure_same_len(d, r)?;
    let mut a = Vec::with_capacity(d.len());
    let mut q = Vec::with_capacity(d.len());
    for t in 0..d.len() {
        let a_t = gstar_step(d, &q, y[t], r[t]);
        a.push(a_t);
        q.push(y[t] + r[t] + a_t);
    }
    Ok(SupplyProfile {
        y: y.clone(),
        r: r.clone(),
        a: EnergyVector::new(a)?,
        q: EnergyVector::new(q)?,
    })
}

/// Buys with the optimal policy and allocates causally, slot by slot, then
/// folds unit-rate rows back into per-consumer allocations.
pub fn simulate_delivery(c: &Portfolio, y: &EnergyVector, r: &EnergyVector) -> Result<PolicyTrace> {
    c.validate()?;
    let horizon = c.horizon;
    ensure_same_len(y, r)?;
    if y.horizon() != horizon {
        return Err(Error::LengthMismatch {
            expected: horizon,
            actual: y.horizon(),
        });
    }
    let units = decompose_portfolio(c);
    let d = demand_duration(&units);

    let mut allocations = AllocationMatrix::empty(&units.durations, horizon);
    let mut state = LaxityState::new(units.len());
    let mut a = Vec::with_capacity(horizon);
    let mut q = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let a_t = gstar_step(&d, &q, y[t], r[t]);
        let q_t = y[t] + r[t] + a_t;
        a.push(a_t);
        q.push(q_t);
        let (next, column) = llf_allocate_step(&state, &units.durations, horizon, q_t);
        for (row, bit) in allocations.nu.iter_mut().zip(column) {
            row[t] = bit;
        }
        state = next;
    }
    if !allocations.is_complete() {
        return Err(Error::InvariantViolation(
            "allocator left unit-rate services unmet under the optimal policy".into(),
        ));
    }

    let mut merged = vec![vec![0u64; horizon]; c.len()];
    for (row, origin) in allocations.nu.iter().zip(&units.origin) {
        for (acc, &bit) in merged[origin.service].iter_mut().zip(row) {
            *acc += bit as u64;
        }
    }
    let a = EnergyVector::new(a)?;
    let total_purchase = a.total();
    Ok(PolicyTrace {
        profile: SupplyProfile {
            y: y.clone(),
            r: r.clone(),
            a,
            q: EnergyVector::new(q)?,
        },
        allocations,
        merged,
        total_purchase,
    })
}

/// `[max_S (Σ of the last |S| demand entries − Σ_{s∈S} x_s)]⁺`, evaluated by
/// pairing each subset size with the smallest entries of `x`.
pub fn diag_f(d: &[u64], x: &[u64]) -> Result<u64> {
    ensure_same_len(d, x)?;
    let mut ascending = x.to_vec();
    ascending.sort_unstable();
    let horizon = d.len();
    let mut best = 0i64;
    let (mut demand, mut supply) = (0i64, 0i64);
    for size in 1..=horizon {
        demand += d[horizon - size] as i64;
        supply += ascending[size - 1] as i64;
        best = best.max(demand - supply);
    }
    Ok(best as u64)
}

/// Energy gap of `y + r` for every scenario, in scenario order.
pub fn scenario_gaps(
    d: &DemandDuration,
    y: &EnergyVector,
    scenarios: &ScenarioSet,
    exec: Execution,
) -> Result<Vec<u64>> {
    ensure_same_len(d, y)?;
    if scenarios.horizon() != d.horizon() {
        return Err(Error::LengthMismatch {
            expected: d.horizon(),
            actual: scenarios.horizon(),
        });
    }
    exec.map(scenarios.scenarios(), |r| {
        let p = y.checked_add(r)?;
        energy_gap(d, &p)
    })
    .into_iter()
    .collect()
}

/// Expected real-time cost `c_rt · E[gap]` under the optimal policy.
pub fn estimate_v(
    c: &Portfolio,
    y: &EnergyVector,
    scenarios: &ScenarioSet,
    c_rt: f64,
) -> Result<f64> {
    estimate_v_with(c, y, scenarios, c_rt, Execution::default())
}

pub fn estimate_v_with(
    c: &Portfolio,
    y: &EnergyVector,
    scenarios: &ScenarioSet,
    c_rt: f64,
    exec: Execution,
) -> Result<f64> {
    c.validate()?;
    let d = demand_duration(&decompose_portfolio(c));
    let gaps = scenario_gaps(&d, y, scenarios, exec)?;
    let expected: f64 = gaps
        .iter()
        .zip(scenarios.weights())
        .fold(0.0, |acc, (&g, &w)| acc + w * g as f64);
    Ok(c_rt * expected)
}
