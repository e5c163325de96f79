//! Services, portfolios, and their unit-rate decompositions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::majorization::EnergyVector;

/// A rate-constrained energy service: `energy` units in total, at most
/// `rate` units in any slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Service {
    #[serde(rename = "E")]
    pub energy: u64,
    #[serde(rename = "m")]
    pub rate: u64,
}

impl Service {
    pub fn new(energy: u64, rate: u64) -> Self {
        Service { energy, rate }
    }

    /// `rate ≥ 1` and `energy ≤ rate · horizon`.
    pub fn is_feasible(&self, horizon: usize) -> bool {
        self.rate >= 1 && (self.rate as u128) * (horizon as u128) >= self.energy as u128
    }
}

/// Services sold to consumers; consumer `i` holds `services[i]`. Duplicate
/// services are distinct consumers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Portfolio {
    pub horizon: usize,
    pub services: Vec<Service>,
}

impl Portfolio {
    pub fn new(horizon: usize, services: Vec<Service>) -> Result<Self> {
        let portfolio = Portfolio { horizon, services };
        portfolio.validate()?;
        Ok(portfolio)
    }

    /// Checks the horizon and that every service is feasible; the error names
    /// the first offending service.
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::EmptyHorizon);
        }
        for (index, s) in self.services.iter().enumerate() {
            if !s.is_feasible(self.horizon) {
                return Err(Error::InfeasibleService {
                    index,
                    energy: s.energy,
                    rate: s.rate,
                    horizon: self.horizon,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.services.len()
    }

    pub fn is_empty(&self) -> bool {
        self.services.is_empty()
    }
}

/// Upper limits on the `(E, m)` pairs a configuration admits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceCaps {
    pub energy_max: u64,
    pub rate_max: u64,
}

impl ServiceCaps {
    pub fn admits(&self, s: &Service) -> bool {
        s.energy <= self.energy_max && s.rate <= self.rate_max
    }
}

/// Where a unit-rate service came from: parent service index and its position
/// within the parent's decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitOrigin {
    pub service: usize,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitRatePortfolio {
    pub horizon: usize,
    pub durations: Vec<u64>,
    pub origin: Vec<UnitOrigin>,
}

impl UnitRatePortfolio {
    pub fn len(&self) -> usize {
        self.durations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.durations.is_empty()
    }

    /// Rows belonging to parent `service`, in decomposition order.
    pub fn rows_of(&self, service: usize) -> impl Iterator<Item = usize> + '_ {
        self.origin
            .iter()
            .enumerate()
            .filter(move |(_, o)| o.service == service)
            .map(|(row, _)| row)
    }
}

/// Demand-duration vector: `d[t-1]` counts unit-rate services with duration
/// at least `t`. Always non-increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct DemandDuration(EnergyVector);

impl DemandDuration {
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if let Some(t) = values.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::NotNonIncreasing(t + 1));
        }
        Ok(DemandDuration(EnergyVector::new(values)?))
    }

    pub fn horizon(&self) -> usize {
        self.0.horizon()
    }

    pub fn as_slice(&self) -> &[u64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &EnergyVector {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.total()
    }

    /// `d_t − d_{t+1}` for `t = 1..T`, with `d_{T+1} = 0`: the number of
    /// unit-rate services of each exact duration.
    pub fn duration_counts(&self) -> Vec<u64> {
        let d = self.as_slice();
        (0..d.len())
            .map(|t| d[t] - d.get(t + 1).copied().unwrap_or(0))
            .collect()
    }
}

impl TryFrom<Vec<u64>> for DemandDuration {
    type Error = Error;

    fn try_from(values: Vec<u64>) -> Result<Self> {
        DemandDuration::new(values)
    }
}

impl From<DemandDuration> for Vec<u64> {
    fn from(d: DemandDuration) -> Self {
        d.0.into_inner()
    }
}

impl std::ops::Deref for DemandDuration {
    type Target = [u64];

    fn deref(&self) -> &[u64] {
        self.as_slice()
    }
}

/// Splits `(E, m)` with `E = k·m + ℓ` into `ℓ` durations of `k + 1` followed
/// by `m − ℓ` durations of `k`.
pub fn decompose_service(s: &Service) -> Vec<u64> {
    if s.rate == 0 {
        return Vec::new();
    }
    let k = s.energy / s.rate;
    let l = s.energy % s.rate;
    (0..s.rate).map(|j| if j < l { k + 1 } else { k }).collect()
}

pub fn decompose_portfolio(c: &Portfolio) -> UnitRatePortfolio {
    let mut durations = Vec::new();
    let mut origin = Vec::new();
    for (service, s) in c.services.iter().enumerate() {
        for (slot, e) in decompose_service(s).into_iter().enumerate() {
            durations.push(e);
            origin.push(UnitOrigin { service, slot });
        }
    }
    UnitRatePortfolio {
        horizon: c.horizon,
        durations,
        origin,
    }
}

/// Counts, for each slot `t`, the unit-rate services needing at least `t`
/// slots. Durations longer than the horizon are counted in every slot.
pub fn demand_duration(u: &UnitRatePortfolio) -> DemandDuration {
    demand_from_durations(&u.durations, u.horizon)
}

pub fn demand_from_durations(durations: &[u64], horizon: usize) -> DemandDuration {
    let mut counts = vec![0u64; horizon + 1];
    for &e in durations {
        counts[(e as usize).min(horizon)] += 1;
    }
    let mut d = vec![0u64; horizon];
    let mut running = 0u64;
    for t in (1..=horizon).rev() {
        running += counts[t];
        d[t - 1] = running;
    }
    DemandDuration::new(d).expect("suffix counts are non-increasing")
}

/// Peels a service allocation into `m` binary rows, one per unit-rate
/// component. Layer `j` marks the slots with the largest residual, taking the
/// earliest slot among equals.
pub fn split_allocation(s: &Service, u: &[u64]) -> Result<Vec<Vec<u8>>> {
    let infeasible = |reason: String| Error::InfeasibleAllocation {
        energy: s.energy,
        rate: s.rate,
        reason,
    };
    if s.rate == 0 {
        return Err(infeasible("rate must be at least 1".into()));
    }
    if let Some(t) = u.iter().position(|&x| x > s.rate) {
        return Err(infeasible(format!("slot {} exceeds the rate limit", t + 1)));
    }
    let total: u64 = u.iter().sum();
    if total != s.energy {
        return Err(infeasible(format!("allocation sums to {total}")));
    }

    let mut residual = u.to_vec();
    let mut rows = Vec::with_capacity(s.rate as usize);
    for need in decompose_service(s) {
        let mut order: Vec<usize> = (0..residual.len()).collect();
        order.sort_by(|&a, &b| residual[b].cmp(&residual[a]));
        let mut row = vec![0u8; residual.len()];
        for &t in order.iter().take(need as usize) {
            if residual[t] == 0 {
                return Err(infeasible(format!(
                    "not enough non-empty slots for a layer of {need}"
                )));
            }
            residual[t] -= 1;
            row[t] = 1;
        }
        rows.push(row);
    }
    debug_assert!(residual.iter().all(|&x| x == 0));
    Ok(rows)
}

/// Slot-wise sum of unit-rate rows.
pub fn merge_allocation(rows: &[Vec<u8>], horizon: usize) -> Vec<u64> {
    let mut u = vec![0u64; horizon];
    for row in rows {
        for (acc, &bit) in u.iter_mut().zip(row) {
            *acc += bit as u64;
        }
    }
    u
}
