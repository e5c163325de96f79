//! Exhaustive cross-checks of the fast algorithms against the brute-force
//! oracles. Each suite records the number of cases, the number of failures and
//! the first failing case in enumeration order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adequacy::{energy_gap, is_adequate, is_exactly_adequate, llf_allocate};
use crate::error::Result;
use crate::exec::Execution;
use crate::majorization::EnergyVector;
use crate::market::{Caps, DecisionPoint, MarketModel};
use crate::optimize::{solve, SolverConfig};
use crate::oracle::{
    bf_adequate, bf_exactly_adequate, bf_integer_profit, bf_min_purchase,
    bf_optimal_integer_market, SmallInstanceBounds,
};
use crate::portfolio::demand_from_durations;
use crate::realtime::run_gstar;
use crate::scenarios::ScenarioSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub cases: u64,
    pub failures: u64,
    pub counterexample: Option<String>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn collect(name: &str, results: Vec<Result<Option<String>>>) -> Result<Self> {
        let mut outcome = SuiteOutcome {
            name: name.to_string(),
            cases: results.len() as u64,
            failures: 0,
            counterexample: None,
        };
        for r in results {
            if let Some(msg) = r? {
                outcome.failures += 1;
                outcome.counterexample.get_or_insert(msg);
            }
        }
        Ok(outcome)
    }
}

/// Fast adequacy predicates under test, taking `(d, p)`. Swappable so the
/// suite can be pointed at a deliberately broken implementation.
#[derive(Clone, Copy)]
pub struct AdequacyPredicates {
    pub adequate: fn(&[u64], &[u64]) -> Result<bool>,
    pub exact: fn(&[u64], &[u64]) -> Result<bool>,
}

impl Default for AdequacyPredicates {
    fn default() -> Self {
        AdequacyPredicates {
            adequate: is_adequate,
            exact: is_exactly_adequate,
        }
    }
}

/// One small instance: unit-rate durations and a supply vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmallInstance {
    pub durations: Vec<u64>,
    pub p: Vec<u64>,
}

impl SmallInstance {
    pub fn demand(&self) -> Vec<u64> {
        demand_from_durations(&self.durations, self.p.len())
            .as_slice()
            .to_vec()
    }
}

fn multisets(len: usize, max: u64, min: u64, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
    if prefix.len() == len {
        out.push(prefix.clone());
        return;
    }
    for v in min..=max {
        prefix.push(v);
        multisets(len, max, v, prefix, out);
        prefix.pop();
    }
}

/// Every horizon `T ≤ t_max`, every multiset of at most `n_max` durations in
/// `1..=min(duration_max, T)`, and every supply in `[0, supply_max]^T`.
pub fn enumerate_instances(bounds: &SmallInstanceBounds) -> Result<Vec<SmallInstance>> {
    bounds.check_budget()?;
    let mut out = Vec::new();
    for horizon in 1..=bounds.t_max {
        let top = bounds.duration_max.min(horizon as u64);
        let mut row_sets = Vec::new();
        for n in 0..=bounds.n_max {
            if top == 0 && n > 0 {
                break;
            }
            multisets(n, top, 1, &mut Vec::new(), &mut row_sets);
        }
        let mut p = vec![0u64; horizon];
        loop {
            for durations in &row_sets {
                out.push(SmallInstance {
                    durations: durations.clone(),
                    p: p.clone(),
                });
            }
            let Some(i) = (0..horizon).rev().find(|&i| p[i] < bounds.supply_max) else {
                break;
            };
            p[i] += 1;
            p[i + 1..].iter_mut().for_each(|v| *v = 0);
        }
    }
    Ok(out)
}

fn check_adequacy_case(
    inst: &SmallInstance,
    bounds: &SmallInstanceBounds,
    preds: AdequacyPredicates,
) -> Result<Option<String>> {
    let d = inst.demand();
    let label = || format!("durations={:?} p={:?} d={:?}", inst.durations, inst.p, d);
    let truth = bf_adequate(&inst.durations, &inst.p, bounds)?;
    let fast = (preds.adequate)(&d, &inst.p)?;
    if truth != fast {
        return Ok(Some(format!(
            "adequacy: oracle {truth}, predicate {fast}; {}",
            label()
        )));
    }
    let exact_truth = bf_exactly_adequate(&inst.durations, &inst.p, bounds)?;
    let exact_fast = (preds.exact)(&d, &inst.p)?;
    if exact_truth != exact_fast {
        return Ok(Some(format!(
            "exact adequacy: oracle {exact_truth}, predicate {exact_fast}; {}",
            label()
        )));
    }
    if truth {
        match llf_allocate(&inst.durations, &inst.p) {
            Ok(m) if m.is_complete() && m.is_feasible_for(&inst.p) => {}
            Ok(_) => {
                return Ok(Some(format!(
                    "llf returned an infeasible matrix; {}",
                    label()
                )))
            }
            Err(e) => {
                return Ok(Some(format!(
                    "llf failed on an adequate instance: {e}; {}",
                    label()
                )))
            }
        }
    }
    Ok(None)
}

/// Oracle adequacy against the majorization predicates, plus completeness of
/// the least-laxity allocator on every adequate instance.
pub fn adequacy_suite(
    bounds: &SmallInstanceBounds,
    preds: AdequacyPredicates,
    exec: Execution,
) -> Result<SuiteOutcome> {
    let instances = enumerate_instances(bounds)?;
    let results = exec.map(&instances, |inst| check_adequacy_case(inst, bounds, preds));
    SuiteOutcome::collect("adequacy", results)
}

fn check_purchase_case(
    inst: &SmallInstance,
    bounds: &SmallInstanceBounds,
) -> Result<Option<String>> {
    let d = inst.demand();
    let y: Vec<u64> = inst.p.iter().map(|v| v / 2).collect();
    let r: Vec<u64> = inst.p.iter().zip(&y).map(|(p, y)| p - y).collect();
    let brute = bf_min_purchase(&d, &y, &r, bounds)?;
    let gap = energy_gap(&d, &inst.p)?;
    let profile = run_gstar(
        &d,
        &EnergyVector::new(y.clone())?,
        &EnergyVector::new(r.clone())?,
    )?;
    let policy = profile.total_purchase();
    if brute != gap || gap != policy || !is_adequate(&d, &profile.q)? {
        return Ok(Some(format!(
            "d={d:?} y={y:?} r={r:?}: oracle {brute}, gap {gap}, policy {policy}"
        )));
    }
    Ok(None)
}

/// Oracle minimum purchase against the energy gap and the online policy.
pub fn purchase_suite(bounds: &SmallInstanceBounds, exec: Execution) -> Result<SuiteOutcome> {
    let instances = enumerate_instances(bounds)?;
    let results = exec.map(&instances, |inst| check_purchase_case(inst, bounds));
    SuiteOutcome::collect("purchase", results)
}

/// A random market small enough for [`bf_optimal_integer_market`]: integer
/// prices, caps of 3, one to four scenarios with random weights.
#[derive(Debug, Clone)]
pub struct SmallMarket {
    pub model: MarketModel,
    pub scenarios: ScenarioSet,
    pub caps: Caps,
}

pub fn random_small_market(rng: &mut ChaCha8Rng, horizon: usize) -> Result<SmallMarket> {
    let pi_unit: Vec<f64> = (0..horizon).map(|_| rng.gen_range(0..=20) as f64).collect();
    let c_da = rng.gen_range(0..=8) as f64;
    let c_rt = rng.gen_range(0..=15) as f64;
    let model = MarketModel::new(horizon, pi_unit, c_da, c_rt)?;
    let count = rng.gen_range(1..=4);
    let rows: Vec<EnergyVector> = (0..count)
        .map(|_| EnergyVector::new((0..horizon).map(|_| rng.gen_range(0..=3)).collect()))
        .collect::<Result<_>>()?;
    let raw: Vec<f64> = (0..count).map(|_| rng.gen_range(1..=4) as f64).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    let scenarios = ScenarioSet::new(horizon, rows, Some(weights))?;
    Ok(SmallMarket {
        model,
        scenarios,
        caps: Caps { d_max: 3, y_max: 3 },
    })
}

fn check_rounding_case(market: &SmallMarket, config: &SolverConfig) -> Result<Option<String>> {
    let best = bf_optimal_integer_market(&market.model, &market.scenarios, market.caps)?;
    let report = match solve(&market.model, &market.scenarios, market.caps, config) {
        Ok(report) => report,
        Err(e) => return Ok(Some(format!("{:?}: solver error {e}", market.model))),
    };
    let rounded = bf_integer_profit(
        &market.model,
        &market.scenarios,
        &report.rounded.d,
        &report.rounded.y,
    )?;
    let loss_ok = best.objective - rounded <= report.gap_bound + 1e-9;
    let relax_ok = report.objective_relaxed >= best.objective - 1e-6;
    if loss_ok && relax_ok {
        return Ok(None);
    }
    let relaxed = DecisionPoint::new(report.relaxed.d.clone(), report.relaxed.y.clone())?;
    Ok(Some(format!(
        "{:?} weights={:?}: J*={} at {:?}/{:?}, rounded {} at {:?}/{:?}, relaxed {} at {:?}/{:?}, bound {}",
        market.model,
        market.scenarios.weights(),
        best.objective,
        best.d,
        best.y,
        rounded,
        report.rounded.d,
        report.rounded.y,
        report.objective_relaxed,
        relaxed.d,
        relaxed.y,
        report.gap_bound
    )))
}

/// Random markets solved by the relaxation and rounded, compared against the
/// exhaustive integer optimum.
pub fn rounding_suite(
    count: usize,
    horizon: usize,
    seed: u64,
    exec: Execution,
) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let markets = (0..count)
        .map(|_| random_small_market(&mut rng, horizon))
        .collect::<Result<Vec<_>>>()?;
    let config = SolverConfig {
        execution: Execution::Sequential,
        ..SolverConfig::default()
    };
    let results = exec.map(&markets, |m| check_rounding_case(m, &config));
    SuiteOutcome::collect("rounding", results)
}

/// All three suites. The rounding suite uses markets of horizon
/// `min(2, t_max)`.
pub fn run_all(
    bounds: &SmallInstanceBounds,
    seed: u64,
    exec: Execution,
) -> Result<Vec<SuiteOutcome>> {
    Ok(vec![
        adequacy_suite(bounds, AdequacyPredicates::default(), exec)?,
        purchase_suite(bounds, exec)?,
        rounding_suite(50, bounds.t_max.min(2), seed, exec)?,
    ])
}
