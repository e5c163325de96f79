//! Prices, the expected-profit objective over a scenario set, its
//! supergradient, integer rounding, and the rounding-gap certificate.
//!
//! The supplier sells unit-rate services only; a portfolio is summarised by its
//! demand-duration vector `d`. For real-valued `(d, y)` the objective is
//!
//! ```text
//! J(d, y) = Σ_t π(t,1)(d_t − d_{t+1}) − c_da Σ_t y_t − c_rt E[gap(d, y + R)]
//! ```
//!
//! where `gap` is the positive part of the worst tail deficit of `d` against
//! the sorted supply. `J` is concave: the gap is a maximum of affine pieces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::portfolio::{
    decompose_service, DemandDuration, Portfolio, Service, UnitOrigin, UnitRatePortfolio,
};
use crate::scenarios::ScenarioSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketModel {
    pub horizon: usize,
    /// `pi_unit[t-1]` is the price of a unit-rate service of duration `t`.
    pub pi_unit: Vec<f64>,
    pub c_da: f64,
    pub c_rt: f64,
}

impl MarketModel {
    pub fn new(horizon: usize, pi_unit: Vec<f64>, c_da: f64, c_rt: f64) -> Result<Self> {
        let mm = MarketModel {
            horizon,
            pi_unit,
            c_da,
            c_rt,
        };
        mm.validate()?;
        Ok(mm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::EmptyHorizon);
        }
        if self.pi_unit.len() != self.horizon {
            return Err(Error::InvalidMarket(format!(
                "pi_unit has {} entries for horizon {}",
                self.pi_unit.len(),
                self.horizon
            )));
        }
        let prices = self.pi_unit.iter().chain([&self.c_da, &self.c_rt]);
        if prices.into_iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidMarket(
                "prices must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    /// `π(t,1)` for `t = 0..=T`, with `π(0,1) = 0`.
    pub fn unit_price(&self, duration: u64) -> f64 {
        match duration {
            0 => 0.0,
            t => self.pi_unit[t as usize - 1],
        }
    }

    /// Coefficient of `d_t` in the telescoped revenue: `π(t,1) − π(t−1,1)`.
    pub fn revenue_coefficients(&self) -> Vec<f64> {
        (0..self.horizon)
            .map(|t| self.pi_unit[t] - if t == 0 { 0.0 } else { self.pi_unit[t - 1] })
            .collect()
    }
}

/// Caps bounding the decision space; required by the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub d_max: u64,
    pub y_max: u64,
}

/// On-disk market document. Caps are optional here and checked where needed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketFile {
    pub horizon: usize,
    pub pi_unit: Vec<f64>,
    pub c_da: f64,
    pub c_rt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_max: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_max: Option<u64>,
}

impl MarketFile {
    pub fn model(&self) -> Result<MarketModel> {
        MarketModel::new(self.horizon, self.pi_unit.clone(), self.c_da, self.c_rt)
    }

    pub fn caps(&self) -> Result<Caps> {
        match (self.d_max, self.y_max) {
            (Some(d_max), Some(y_max)) => Ok(Caps { d_max, y_max }),
            _ => Err(Error::MissingCaps),
        }
    }
}

/// A real-valued `(d, y)` pair: `d` non-increasing and non-negative, `y`
/// non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionPoint {
    pub d: Vec<f64>,
    pub y: Vec<f64>,
}

impl DecisionPoint {
    pub fn new(d: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let point = DecisionPoint { d, y };
        point.validate(point.d.len())?;
        Ok(point)
    }

    pub fn zeros(horizon: usize) -> Self {
        DecisionPoint {
            d: vec![0.0; horizon],
            y: vec![0.0; horizon],
        }
    }

    pub fn from_integers(d: &[u64], y: &[u64]) -> Self {
        DecisionPoint {
            d: d.iter().map(|&v| v as f64).collect(),
            y: y.iter().map(|&v| v as f64).collect(),
        }
    }

    pub fn validate(&self, horizon: usize) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidDecision(msg.to_string()));
        if self.d.len() != horizon || self.y.len() != horizon {
            return bad("decision length does not match the horizon");
        }
        if self.d.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return bad("decision entries must be finite");
        }
        if self.d.iter().chain(&self.y).any(|&v| v < 0.0) {
            return bad("decision entries must be non-negative");
        }
        if self.d.windows(2).any(|w| w[0] < w[1]) {
            return bad("d must be non-increasing");
        }
        Ok(())
    }
}

/// Rounded integer decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerDecision {
    pub d: Vec<u64>,
    pub y: Vec<u64>,
}

/// Price of `(E, m)` as the sum of its unit-rate components' prices.
pub fn price_service(mm: &MarketModel, s: &Service) -> f64 {
    decompose_service(s)
        .into_iter()
        .filter(|&e| e > 0)
        .map(|e| mm.unit_price(e))
        .sum()
}

/// `Σ_t π(t,1)(d_t − d_{t+1})` with `d_{T+1} = 0`.
pub fn revenue_from_d(mm: &MarketModel, d: &[f64]) -> Result<f64> {
    if d.len() != mm.horizon {
        return Err(Error::LengthMismatch {
            expected: mm.horizon,
            actual: d.len(),
        });
    }
    if let Some(t) = d.windows(2).position(|w| w[0] < w[1]) {
        return Err(Error::NotNonIncreasing(t + 1));
    }
    Ok((0..d.len())
        .map(|t| mm.pi_unit[t] * (d[t] - d.get(t + 1).copied().unwrap_or(0.0)))
        .sum())
}

pub fn revenue_from_demand(mm: &MarketModel, d: &DemandDuration) -> Result<f64> {
    let real: Vec<f64> = d.iter().map(|&v| v as f64).collect();
    revenue_from_d(mm, &real)
}

/// The maximising affine piece of the gap for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivePiece {
    /// Worst tail deficit (may be negative; the gap is its positive part).
    pub value: f64,
    /// 0-based start of the demand tail.
    pub tail_start: usize,
    /// Slots holding the `T − tail_start` smallest supplies.
    pub slots: Vec<usize>,
}

/// Worst tail deficit of `d` against `p = y + r`, with the smallest tail
/// start and the smallest-index slot set on ties.
pub fn active_piece(d: &[f64], p: &[f64]) -> ActivePiece {
    let horizon = d.len();
    let mut order: Vec<usize> = (0..horizon).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));

    let (mut demand, mut supply) = (0.0, 0.0);
    let mut best = (f64::NEG_INFINITY, horizon);
    for t in (0..horizon).rev() {
        demand += d[t];
        supply += p[order[horizon - 1 - t]];
        let value = demand - supply;
        if value >= best.0 {
            best = (value, t);
        }
    }
    let (value, tail_start) = best;
    ActivePiece {
        value,
        tail_start,
        slots: order[..horizon - tail_start].to_vec(),
    }
}

/// Real-valued extension of the energy gap.
pub fn relaxed_gap(d: &[f64], p: &[f64]) -> f64 {
    if d.is_empty() {
        return 0.0;
    }
    active_piece(d, p).value.max(0.0)
}

fn supply(y: &[f64], r: &[u64]) -> Vec<f64> {
    y.iter().zip(r).map(|(a, &b)| a + b as f64).collect()
}

fn check_inputs(mm: &MarketModel, point: &DecisionPoint, scenarios: &ScenarioSet) -> Result<()> {
    mm.validate()?;
    point.validate(mm.horizon)?;
    if scenarios.horizon() != mm.horizon {
        return Err(Error::LengthMismatch {
            expected: mm.horizon,
            actual: scenarios.horizon(),
        });
    }
    Ok(())
}

/// Expected profit `J(d, y)` over the scenario set.
pub fn profit(mm: &MarketModel, point: &DecisionPoint, scenarios: &ScenarioSet) -> Result<f64> {
    profit_with(mm, point, scenarios, Execution::default())
}

pub fn profit_with(
    mm: &MarketModel,
    point: &DecisionPoint,
    scenarios: &ScenarioSet,
    exec: Execution,
) -> Result<f64> {
    check_inputs(mm, point, scenarios)?;
    let revenue = revenue_from_d(mm, &point.d)?;
    let day_ahead: f64 = point.y.iter().sum();
    let gaps = exec.map(scenarios.scenarios(), |r| {
        relaxed_gap(&point.d, &supply(&point.y, r))
    });
    // fixed scenario order keeps the sum reproducible
    let expected_gap: f64 = gaps
        .iter()
        .zip(scenarios.weights())
        .map(|(g, w)| w * g)
        .sum();
    Ok(revenue - mm.c_da * day_ahead - mm.c_rt * expected_gap)
}

/// A supergradient of the concave objective, split into `d` and `y` parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Supergradient {
    pub d: Vec<f64>,
    pub y: Vec<f64>,
}

impl Supergradient {
    pub fn norm(&self) -> f64 {
        self.d
            .iter()
            .chain(&self.y)
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    /// `⟨g, to − from⟩`.
    pub fn dot_diff(&self, from: &DecisionPoint, to: &DecisionPoint) -> f64 {
        let dd: f64 = self
            .d
            .iter()
            .zip(to.d.iter().zip(&from.d))
            .map(|(g, (b, a))| g * (b - a))
            .sum();
        let dy: f64 = self
            .y
            .iter()
            .zip(to.y.iter().zip(&from.y))
            .map(|(g, (b, a))| g * (b - a))
            .sum();
        dd + dy
    }
}

pub fn subgradient(
    mm: &MarketModel,
    point: &DecisionPoint,
    scenarios: &ScenarioSet,
) -> Result<Supergradient> {
    subgradient_with(mm, point, scenarios, Execution::default())
}

/// Revenue contributes `π(t,1) − π(t−1,1)` to `d_t` and day-ahead cost `−c_da`
/// to every `y_t`. Each scenario with a positive gap contributes through its
/// active piece `Σ_{s≥t*} d_s − Σ_{k∈S*} (y_k + r_k)`: `−c_rt·w` on `d_s` for
/// `s ≥ t*` and `+c_rt·w` on `y_k` for `k ∈ S*`.
pub fn subgradient_with(
    mm: &MarketModel,
    point: &DecisionPoint,
    scenarios: &ScenarioSet,
    exec: Execution,
) -> Result<Supergradient> {
    check_inputs(mm, point, scenarios)?;
    let mut g = Supergradient {
        d: mm.revenue_coefficients(),
        y: vec![-mm.c_da; mm.horizon],
    };
    let pieces = exec.map(scenarios.scenarios(), |r| {
        active_piece(&point.d, &supply(&point.y, r))
    });
    for (piece, &w) in pieces.iter().zip(scenarios.weights()) {
        if piece.value <= 0.0 {
            continue;
        }
        let scale = mm.c_rt * w;
        for gd in &mut g.d[piece.tail_start..] {
            *gd -= scale;
        }
        for &k in &piece.slots {
            g.y[k] += scale;
        }
    }
    Ok(g)
}

/// Floors the successive differences of `d` and ceils `y`.
pub fn round_solution(point: &DecisionPoint) -> Result<IntegerDecision> {
    point.validate(point.d.len())?;
    let horizon = point.d.len();
    let mut d = vec![0u64; horizon];
    let mut running = 0u64;
    for t in (0..horizon).rev() {
        let next = if t + 1 < horizon { point.d[t + 1] } else { 0.0 };
        running += (point.d[t] - next).floor().max(0.0) as u64;
        d[t] = running;
    }
    let y = point.y.iter().map(|&v| v.ceil().max(0.0) as u64).collect();
    Ok(IntegerDecision { d, y })
}

/// Bound on the profit lost by rounding: `c_da·T + Σ_t π(t,1)`.
pub fn gap_certificate(mm: &MarketModel) -> f64 {
    mm.c_da * mm.horizon as f64 + mm.pi_unit.iter().sum::<f64>()
}

/// Unit-rate services inducing `d`: `d_t − d_{t+1}` services of duration `t`.
pub fn realize_portfolio(d: &DemandDuration) -> UnitRatePortfolio {
    let mut durations = Vec::new();
    for (t, count) in d.duration_counts().into_iter().enumerate() {
        durations.extend(std::iter::repeat_n(t as u64 + 1, count as usize));
    }
    let origin = (0..durations.len())
        .map(|service| UnitOrigin { service, slot: 0 })
        .collect();
    UnitRatePortfolio {
        horizon: d.horizon(),
        durations,
        origin,
    }
}

/// The realized unit-rate services as a sellable portfolio of `(t, 1)`
/// contracts.
pub fn realized_services(d: &DemandDuration) -> Portfolio {
    let units = realize_portfolio(d);
    Portfolio {
        horizon: units.horizon,
        services: units
            .durations
            .iter()
            .map(|&e| Service::new(e, 1))
            .collect(),
    }
}
