//! Supply adequacy and portfolio optimisation for flexible energy services.
//!
//! A service asks for `E` units of energy at rate at most `m` per slot within a
//! horizon of `T` slots. This crate decides whether a supply profile can serve a
//! portfolio of such services (a majorization test on the demand-duration
//! vector), schedules delivery causally with a least-laxity-first rule, buys the
//! minimum real-time energy when renewable supply falls short, and chooses the
//! profit-maximising portfolio and day-ahead purchase over a set of renewable
//! scenarios.
//!
//! ```
//! use flexserve::{decompose_portfolio, demand_duration, is_adequate, Portfolio, Service};
//!
//! let c = Portfolio::new(3, vec![Service::new(4, 2), Service::new(1, 1)]).unwrap();
//! let d = demand_duration(&decompose_portfolio(&c));
//! assert_eq!(d.as_slice(), &[3, 2, 0]);
//! assert!(is_adequate(&d, &[2, 2, 1]).unwrap());
//! assert!(!is_adequate(&d, &[4, 0, 1]).unwrap());
//! ```

pub mod adequacy;
pub mod error;
pub mod exec;
pub mod isotonic;
pub mod majorization;
pub mod market;
pub mod optimize;
pub mod oracle;
pub mod portfolio;
pub mod realtime;
pub mod scenarios;
pub mod verify;

pub use adequacy::{
    energy_gap, is_adequate, is_exactly_adequate, llf_allocate, llf_allocate_step,
    worst_tail_deficit, AllocationMatrix, LaxityState,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use majorization::{
    apply_rh_transfer, majorizes, replay_transfers, rh_transfer_sequence, sort_nonincreasing,
    weakly_majorizes, EnergyVector, RhTransfer,
};
pub use market::{
    active_piece, gap_certificate, price_service, profit, profit_with, realize_portfolio,
    realized_services, relaxed_gap, revenue_from_d, revenue_from_demand, round_solution,
    subgradient, subgradient_with, Caps, DecisionPoint, IntegerDecision, MarketFile, MarketModel,
    Supergradient,
};
pub use optimize::{solve, solve_relaxation, SolveReport, SolverConfig};
pub use portfolio::{
    decompose_portfolio, decompose_service, demand_duration, demand_from_durations,
    merge_allocation, split_allocation, DemandDuration, Portfolio, Service, ServiceCaps,
    UnitRatePortfolio,
};
pub use realtime::{
    diag_f, estimate_v, estimate_v_with, gstar_step, run_gstar, simulate_delivery, PolicyTrace,
    SupplyProfile,
};
pub use scenarios::{ScenarioGenerator, ScenarioSet};
