//! Renewable scenario sets: validation, CSV ingestion and emission, and a
//! seeded generator.
//!
//! CSV layout: one scenario per row, `T` integer columns. A row may start with
//! a `weight:<w>` cell giving its probability; either every row carries a
//! weight or none does, in which case the scenarios are equiprobable. Blank
//! lines and lines starting with `#` are ignored.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::majorization::EnergyVector;

const WEIGHT_TOLERANCE: f64 = 1e-9;
const WEIGHT_PREFIX: &str = "weight:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    horizon: usize,
    scenarios: Vec<EnergyVector>,
    weights: Vec<f64>,
}

impl ScenarioSet {
    /// Uniform weights are used when `weights` is `None`. An empty set is
    /// allowed; expectations over it are zero.
    pub fn new(
        horizon: usize,
        scenarios: Vec<EnergyVector>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::EmptyHorizon);
        }
        if let Some((i, s)) = scenarios
            .iter()
            .enumerate()
            .find(|(_, s)| s.horizon() != horizon)
        {
            return Err(Error::InvalidScenarios(format!(
                "scenario {i} has {} slots, expected {horizon}",
                s.horizon()
            )));
        }
        let weights = match weights {
            None => {
                let n = scenarios.len();
                vec![1.0 / n as f64; n]
            }
            Some(w) => {
                if w.len() != scenarios.len() {
                    return Err(Error::InvalidScenarios(format!(
                        "{} weights for {} scenarios",
                        w.len(),
                        scenarios.len()
                    )));
                }
                if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::InvalidScenarios(
                        "weights must be finite and non-negative".into(),
                    ));
                }
                let total: f64 = w.iter().sum();
                if !scenarios.is_empty() && (total - 1.0).abs() > WEIGHT_TOLERANCE {
                    return Err(Error::InvalidScenarios(format!(
                        "weights sum to {total}, expected 1"
                    )));
                }
                w
            }
        };
        Ok(ScenarioSet {
            horizon,
            scenarios,
            weights,
        })
    }

    pub fn uniform(horizon: usize, scenarios: Vec<EnergyVector>) -> Result<Self> {
        Self::new(horizon, scenarios, None)
    }

    pub fn from_rows(horizon: usize, rows: Vec<Vec<u64>>) -> Result<Self> {
        let scenarios = rows
            .into_iter()
            .map(EnergyVector::new)
            .collect::<Result<Vec<_>>>()?;
        Self::uniform(horizon, scenarios)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn scenarios(&self) -> &[EnergyVector] {
        &self.scenarios
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EnergyVector, f64)> {
        self.scenarios.iter().zip(self.weights.iter().copied())
    }

    /// Parses the CSV layout described in the module docs. The horizon is
    /// taken from the first row, so the file must not be empty.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let (rows, weights) = parse_rows(text)?;
        let horizon = match rows.first() {
            Some(r) => r.horizon(),
            None => return Err(Error::Parse("scenario file has no rows".into())),
        };
        Self::new(horizon, rows, weights)
    }

    /// Parses a scenario file for a known horizon; a file without rows is an
    /// empty set.
    pub fn from_csv_for_horizon(text: &str, horizon: usize) -> Result<Self> {
        let (rows, weights) = parse_rows(text)?;
        Self::new(horizon, rows, weights)
    }

    /// Emits the CSV layout; weights are written only when they are not
    /// uniform.
    pub fn to_csv_string(&self) -> String {
        let uniform = self.weights.windows(2).all(|w| w[0] == w[1]);
        let mut out = String::new();
        for (s, w) in self.iter() {
            let mut cells: Vec<String> = Vec::with_capacity(s.horizon() + 1);
            if !uniform {
                cells.push(format!("{WEIGHT_PREFIX}{w}"));
            }
            cells.extend(s.iter().map(|v| v.to_string()));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn parse_rows(text: &str) -> Result<(Vec<EnergyVector>, Option<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut rows = Vec::new();
    let mut weights = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        if record.iter().all(|cell| cell.is_empty()) {
            continue;
        }
        let mut cells = record.iter().peekable();
        let weight = match cells.peek() {
            Some(first) if first.starts_with(WEIGHT_PREFIX) => {
                let w = first[WEIGHT_PREFIX.len()..]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: bad weight: {e}", line + 1)))?;
                cells.next();
                Some(w)
            }
            _ => None,
        };
        let values = cells
            .map(|cell| {
                cell.parse::<u64>()
                    .map_err(|e| Error::Parse(format!("row {}: bad value {cell:?}: {e}", line + 1)))
            })
            .collect::<Result<Vec<u64>>>()?;
        rows.push(EnergyVector::new(values)?);
        weights.push(weight);
    }

    let weights = match weights.iter().filter(|w| w.is_some()).count() {
        0 => None,
        n if n == weights.len() => Some(weights.into_iter().flatten().collect()),
        _ => {
            return Err(Error::Parse(
                "either every scenario row or none must carry a weight".into(),
            ))
        }
    };
    Ok((rows, weights))
}

/// Per-slot renewable draws: a normal with the given mean and spread, rounded
/// to the nearest unit and truncated to `[0, cap]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGenerator {
    pub mean: f64,
    pub spread: f64,
    pub cap: u64,
}

impl Default for ScenarioGenerator {
    fn default() -> Self {
        ScenarioGenerator {
            mean: 2.0,
            spread: 1.0,
            cap: 6,
        }
    }
}

impl ScenarioGenerator {
    /// Draws `count` equiprobable scenarios. The seed fully determines the
    /// output.
    pub fn generate(&self, horizon: usize, count: usize, seed: u64) -> Result<ScenarioSet> {
        if !(self.mean.is_finite() && self.spread.is_finite() && self.spread >= 0.0) {
            return Err(Error::InvalidScenarios(
                "generator mean and spread must be finite, spread non-negative".into(),
            ));
        }
        let normal = Normal::new(self.mean, self.spread)
            .map_err(|e| Error::InvalidScenarios(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scenarios = (0..count)
            .map(|_| {
                let values = (0..horizon)
                    .map(|_| {
                        let x = normal.sample(&mut rng).round();
                        x.clamp(0.0, self.cap as f64) as u64
                    })
                    .collect();
                EnergyVector::new(values)
            })
            .collect::<Result<Vec<_>>>()?;
        ScenarioSet::uniform(horizon, scenarios)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_weights_are_filled_in() {
        let set = ScenarioSet::from_rows(2, vec![vec![0, 1], vec![2, 2]]).unwrap();
        assert_eq!(set.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn rejects_bad_sets() {
        assert!(ScenarioSet::from_rows(3, vec![vec![0, 1]]).is_err());
        let s = vec![EnergyVector::new(vec![1]).unwrap(); 2];
        assert!(ScenarioSet::new(1, s.clone(), Some(vec![0.5])).is_err());
        assert!(ScenarioSet::new(1, s.clone(), Some(vec![0.5, 0.6])).is_err());
        assert!(ScenarioSet::new(1, s.clone(), Some(vec![-0.5, 1.5])).is_err());
        assert!(ScenarioSet::new(1, s, Some(vec![0.25, 0.75])).is_ok());
        assert!(ScenarioSet::uniform(1, vec![]).unwrap().is_empty());
    }

    #[test]
    fn csv_parsing() {
        let set = ScenarioSet::from_csv_str("# header comment\n0,1,2\n\n3, 4, 5\n").unwrap();
        assert_eq!(set.horizon(), 3);
        assert_eq!(set.scenarios()[1].as_slice(), &[3, 4, 5]);
        assert_eq!(set.weights(), &[0.5, 0.5]);

        let set = ScenarioSet::from_csv_str("weight:0.25,1,1\nweight:0.75,0,2\n").unwrap();
        assert_eq!(set.weights(), &[0.25, 0.75]);
        assert_eq!(
            ScenarioSet::from_csv_str(&set.to_csv_string()).unwrap(),
            set
        );

        assert!(ScenarioSet::from_csv_str("weight:0.5,1\n1\n").is_err());
        assert!(ScenarioSet::from_csv_str("1,2\n1\n").is_err());
        assert!(ScenarioSet::from_csv_str("1,x\n").is_err());
        assert!(ScenarioSet::from_csv_str("").is_err());
        assert!(ScenarioSet::from_csv_for_horizon("# nothing\n", 3)
            .unwrap()
            .is_empty());
        assert!(ScenarioSet::from_csv_for_horizon("1,2\n", 3).is_err());
    }

    #[test]
    fn generator_is_seeded() {
        let g = ScenarioGenerator::default();
        let a = g.generate(4, 10, 7).unwrap();
        let b = g.generate(4, 10, 7).unwrap();
        let c = g.generate(4, 10, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.scenarios().iter().all(|s| s.iter().all(|&v| v <= g.cap)));
    }
}
