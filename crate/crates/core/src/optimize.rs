//! Maximising expected profit over `(d, y)`.
//!
//! The relaxation is solved by projected supergradient ascent with
//! diminishing steps `s0/√k`; `d` is projected onto the capped non-increasing
//! cone and `y` clipped to `[0, y_max]`. Because the objective is
//! piecewise-linear, the ascent can optionally be finished with a
//! cutting-plane linear program that generates the active gap pieces on
//! demand, which lands exactly on an optimal vertex.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::isotonic::project_nonincreasing_boxed;
use crate::market::{
    active_piece, gap_certificate, profit_with, round_solution, subgradient_with, Caps,
    DecisionPoint, IntegerDecision, MarketModel,
};
use crate::scenarios::ScenarioSet;

const CUT_TOLERANCE: f64 = 1e-9;
const SNAP_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub iterations: usize,
    pub step0: f64,
    /// Minimum improvement of the best objective that resets the stagnation
    /// counter.
    pub tolerance: f64,
    /// Iterations without such an improvement before stopping.
    pub patience: usize,
    /// Finish with the cutting-plane linear program.
    pub polish: bool,
    pub max_cut_rounds: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            iterations: 5000,
            step0: 1.0,
            tolerance: 1e-6,
            patience: 500,
            polish: true,
            max_cut_rounds: 10_000,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relaxation {
    pub point: DecisionPoint,
    pub objective: f64,
    pub iterations: usize,
    pub final_step_size: f64,
    /// False when the iteration budget ran out while the objective was still
    /// improving and no exact refinement was available.
    pub converged: bool,
    pub polished: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub relaxed: DecisionPoint,
    pub rounded: IntegerDecision,
    pub objective_relaxed: f64,
    pub objective_rounded: f64,
    pub gap_bound: f64,
    pub iterations: usize,
    pub final_step_size: f64,
    pub converged: bool,
    pub polished: bool,
}

impl SolveReport {
    pub fn rounding_loss_within_bound(&self) -> bool {
        self.objective_rounded >= self.objective_relaxed - self.gap_bound - 1e-9
    }
}

fn project(point: &DecisionPoint, caps: Caps) -> DecisionPoint {
    DecisionPoint {
        d: project_nonincreasing_boxed(&point.d, 0.0, caps.d_max as f64),
        y: point
            .y
            .iter()
            .map(|v| v.clamp(0.0, caps.y_max as f64))
            .collect(),
    }
}

fn check_problem(mm: &MarketModel, scenarios: &ScenarioSet, config: &SolverConfig) -> Result<()> {
    mm.validate()?;
    if scenarios.horizon() != mm.horizon {
        return Err(Error::LengthMismatch {
            expected: mm.horizon,
            actual: scenarios.horizon(),
        });
    }
    if !(config.step0.is_finite() && config.step0 > 0.0) {
        return Err(Error::InvalidMarket("step size must be positive".into()));
    }
    if !(config.tolerance.is_finite() && config.tolerance >= 0.0) {
        return Err(Error::InvalidMarket(
            "tolerance must be non-negative".into(),
        ));
    }
    Ok(())
}

/// Projected supergradient ascent alone, returning the best iterate.
pub fn subgradient_ascent(
    mm: &MarketModel,
    scenarios: &ScenarioSet,
    caps: Caps,
    config: &SolverConfig,
) -> Result<Relaxation> {
    check_problem(mm, scenarios, config)?;
    let exec = config.execution;
    let mut x = DecisionPoint::zeros(mm.horizon);
    let mut best_point = x.clone();
    let mut best = profit_with(mm, &x, scenarios, exec)?;
    let mut last_improvement = 0usize;
    let mut step = config.step0;
    let mut iterations = 0usize;
    let mut converged = false;

    for k in 1..=config.iterations {
        iterations = k;
        let g = subgradient_with(mm, &x, scenarios, exec)?;
        let norm = g.norm();
        if norm == 0.0 {
            // zero supergradient of a concave function: global maximiser
            converged = true;
            break;
        }
        step = config.step0 / (k as f64).sqrt();
        let scale = step / norm;
        let moved = DecisionPoint {
            d: x.d.iter().zip(&g.d).map(|(v, gv)| v + scale * gv).collect(),
            y: x.y.iter().zip(&g.y).map(|(v, gv)| v + scale * gv).collect(),
        };
        x = project(&moved, caps);
        let value = profit_with(mm, &x, scenarios, exec)?;
        if value > best + config.tolerance {
            last_improvement = k;
        }
        if value > best {
            best = value;
            best_point = x.clone();
        }
        if k - last_improvement >= config.patience {
            converged = true;
            break;
        }
    }

    Ok(Relaxation {
        point: best_point,
        objective: best,
        iterations,
        final_step_size: step,
        converged,
        polished: false,
    })
}

/// Exact relaxation optimum by cutting planes on the epigraph of the expected
/// gap. Separation for each scenario is the sorted active-piece computation.
pub fn cutting_plane(
    mm: &MarketModel,
    scenarios: &ScenarioSet,
    caps: Caps,
    warm: Option<&DecisionPoint>,
    max_rounds: usize,
) -> Result<DecisionPoint> {
    let horizon = mm.horizon;
    let lp_err = |e: minilp::Error| Error::LinearProgram(e.to_string());

    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let coeffs = mm.revenue_coefficients();
    let d_vars: Vec<Variable> = coeffs
        .iter()
        .map(|&c| problem.add_var(c, (0.0, caps.d_max as f64)))
        .collect();
    let y_vars: Vec<Variable> = (0..horizon)
        .map(|_| problem.add_var(-mm.c_da, (0.0, caps.y_max as f64)))
        .collect();
    // epigraph variable per scenario with positive weight
    let z_vars: Vec<Option<Variable>> = scenarios
        .weights()
        .iter()
        .map(|&w| (w > 0.0).then(|| problem.add_var(-mm.c_rt * w, (0.0, f64::INFINITY))))
        .collect();
    for t in 0..horizon.saturating_sub(1) {
        problem.add_constraint(
            [(d_vars[t], 1.0), (d_vars[t + 1], -1.0)],
            ComparisonOp::Ge,
            0.0,
        );
    }

    let cut_for = |point: &DecisionPoint, k: usize, z: Variable, z_value: f64| {
        let r = &scenarios.scenarios()[k];
        let p: Vec<f64> = point
            .y
            .iter()
            .zip(r.iter())
            .map(|(a, &b)| a + b as f64)
            .collect();
        let piece = active_piece(&point.d, &p);
        if piece.value <= z_value + CUT_TOLERANCE {
            return None;
        }
        // z_k ≥ Σ_{s≥t*} d_s − Σ_{j∈S*} (y_j + r_j)
        let mut expr = LinearExpr::empty();
        expr.add(z, 1.0);
        for &dv in &d_vars[piece.tail_start..] {
            expr.add(dv, -1.0);
        }
        let mut rhs = 0.0;
        for &j in &piece.slots {
            expr.add(y_vars[j], 1.0);
            rhs -= r[j] as f64;
        }
        Some((expr, rhs))
    };

    if let Some(start) = warm {
        for (k, z) in z_vars.iter().enumerate() {
            if let Some(z) = *z {
                if let Some((expr, rhs)) = cut_for(start, k, z, 0.0) {
                    problem.add_constraint(expr, ComparisonOp::Ge, rhs);
                }
            }
        }
    }

    let mut solution = problem.solve().map_err(lp_err)?;
    for _ in 0..max_rounds {
        let point = DecisionPoint {
            d: d_vars.iter().map(|v| solution[*v]).collect(),
            y: y_vars.iter().map(|v| solution[*v]).collect(),
        };
        let point = project(&point, caps);
        let cuts: Vec<_> = z_vars
            .iter()
            .enumerate()
            .filter_map(|(k, z)| z.map(|z| (k, z)))
            .filter_map(|(k, z)| cut_for(&point, k, z, solution[z]))
            .collect();
        if cuts.is_empty() {
            return Ok(point);
        }
        for (expr, rhs) in cuts {
            solution = solution
                .add_constraint(expr, ComparisonOp::Ge, rhs)
                .map_err(lp_err)?;
        }
    }
    Err(Error::LinearProgram(format!(
        "no convergence after {max_rounds} cut rounds"
    )))
}

/// Rounds entries within a hair of an integer onto it.
fn snap(point: &DecisionPoint, caps: Caps) -> DecisionPoint {
    let snap1 = |v: f64| {
        let r = v.round();
        if (v - r).abs() <= SNAP_TOLERANCE {
            r
        } else {
            v
        }
    };
    project(
        &DecisionPoint {
            d: point.d.iter().copied().map(snap1).collect(),
            y: point.y.iter().copied().map(snap1).collect(),
        },
        caps,
    )
}

/// Solves the continuous relaxation: supergradient ascent, then (when
/// enabled) the cutting-plane refinement. The better of the two is returned.
pub fn solve_relaxation(
    mm: &MarketModel,
    scenarios: &ScenarioSet,
    caps: Caps,
    config: &SolverConfig,
) -> Result<Relaxation> {
    let mut relaxation = subgradient_ascent(mm, scenarios, caps, config)?;
    if !config.polish {
        return Ok(relaxation);
    }
    let exec = config.execution;
    let refined = cutting_plane(
        mm,
        scenarios,
        caps,
        Some(&relaxation.point),
        config.max_cut_rounds,
    )?;
    let mut refined_value = profit_with(mm, &refined, scenarios, exec)?;
    let mut refined_point = refined;
    let snapped = snap(&refined_point, caps);
    let snapped_value = profit_with(mm, &snapped, scenarios, exec)?;
    if snapped_value >= refined_value - 1e-9 {
        refined_point = snapped;
        refined_value = snapped_value;
    }
    if refined_value >= relaxation.objective - 1e-9 {
        relaxation.point = refined_point;
        relaxation.objective = refined_value;
        relaxation.polished = true;
        relaxation.converged = true;
    }
    Ok(relaxation)
}

/// Relaxation, rounding, and the rounding certificate in one report.
pub fn solve(
    mm: &MarketModel,
    scenarios: &ScenarioSet,
    caps: Caps,
    config: &SolverConfig,
) -> Result<SolveReport> {
    let relaxation = solve_relaxation(mm, scenarios, caps, config)?;
    let rounded = round_solution(&relaxation.point)?;
    let rounded_point = DecisionPoint::from_integers(&rounded.d, &rounded.y);
    let objective_rounded = profit_with(mm, &rounded_point, scenarios, config.execution)?;
    let report = SolveReport {
        relaxed: relaxation.point,
        rounded,
        objective_relaxed: relaxation.objective,
        objective_rounded,
        gap_bound: gap_certificate(mm),
        iterations: relaxation.iterations,
        final_step_size: relaxation.final_step_size,
        converged: relaxation.converged,
        polished: relaxation.polished,
    };
    if !report.rounding_loss_within_bound() {
        return Err(Error::InvariantViolation(format!(
            "rounded objective {} is below relaxed {} minus bound {}",
            report.objective_rounded, report.objective_relaxed, report.gap_bound
        )));
    }
    Ok(report)
}
