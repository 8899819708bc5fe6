use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use super::ExperimentError;
use crate::distributions::DistributionSpec::{self, *};
use crate::model::{Discipline, Limits, ModelParams};

/// Shape parameters of the Weibull sweep.
pub const WEIBULL_SHAPES: [f64; 24] = [
    0.18, 0.19, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.6, 0.7, 0.8, 0.9, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0,
    10.0, 20.0,
];

/// Reference `(p, u4)` for each entry of [`WEIBULL_SHAPES`].
pub const WEIBULL_REFERENCE: [(f64, f64); 24] = [
    (0.4181, 0.1097),
    (0.4174, 0.1095),
    (0.4162, 0.1091),
    (0.4089, 0.1071),
    (0.3982, 0.1041),
    (0.3849, 0.1005),
    (0.3713, 0.0969),
    (0.3571, 0.0929),
    (0.3435, 0.0892),
    (0.3297, 0.0855),
    (0.3179, 0.0825),
    (0.2953, 0.0763),
    (0.2762, 0.0712),
    (0.2602, 0.0670),
    (0.2461, 0.0632),
    (0.2198, 0.0563),
    (0.2009, 0.0514),
    (0.1765, 0.0450),
    (0.1623, 0.0413),
    (0.1527, 0.0388),
    (0.1417, 0.0360),
    (0.1361, 0.0346),
    (0.1272, 0.0322),
    (0.1245, 0.0315),
];

/// Reference `(u4, p)` for the five queue-2 interarrival laws.
const EXAMPLE_REFERENCE: [(f64, f64); 5] =
    [(0.0466, 0.1825), (0.0518, 0.2027), (0.0619, 0.2410), (0.0446, 0.1751), (0.0641, 0.2494)];

pub const EXAMPLE_P_TOLERANCE: f64 = 0.004;
pub const EXAMPLE_U4_TOLERANCE: f64 = 0.002;
pub const WEIBULL_P_TOLERANCE: f64 = 0.005;
pub const WEIBULL_U4_TOLERANCE: f64 = 0.002;
pub const DETERMINISTIC_P_TOLERANCE: f64 = 0.004;
pub const DETERMINISTIC_P: f64 = 0.1237;

/// Queue-2 interarrival law of example `n` (1-based), all with mean 4.
pub fn example_interarrival(n: usize) -> DistributionSpec {
    match n {
        1 => Uniform { mean: 4.0 },
        2 => Pareto { xmin: 2.0, shape: 2.0 },
        3 => Exponential { mean: 4.0 },
        // Same first two moments as the exponential.
        4 => Pareto { xmin: 8.0 - 4.0 * SQRT_2, shape: 1.0 + SQRT_2 },
        // Same first three moments as the exponential.
        5 => TwoPoint { x1: 4.0 * (2.0 - SQRT_2), p1: (2.0 + SQRT_2) / 4.0, x2: 4.0 * (2.0 + SQRT_2) },
        _ => panic!("examples are numbered 1 to 5, got {n}"),
    }
}

/// Queue 1 saturated with instantaneous service, queue 3 fed at rate 1/4,
/// instantaneous 2→3 walk; only queue 2's input law and the limits vary.
pub fn saturated_probe(queue2_interarrival: DistributionSpec, l2: u32, l3: u32) -> ModelParams {
    ModelParams {
        interarrival: [None, Some(queue2_interarrival), Some(Uniform { mean: 4.0 })],
        service: [Deterministic { value: 0.0 }, Uniform { mean: 1.0 }, Uniform { mean: 1.5 }],
        switchover: [Uniform { mean: 0.5 }, Deterministic { value: 0.0 }, Uniform { mean: 1.0 }, Uniform { mean: 1.0 / 3.0 }],
        discipline: Discipline::Limited,
        limits: Limits([1, l2, l3]),
        saturated: [true, false, false],
    }
}

pub fn example_params(n: usize) -> ModelParams {
    saturated_probe(example_interarrival(n), 4, 2)
}

pub fn weibull_params(shape: f64) -> ModelParams {
    saturated_probe(Weibull { shape, mean: 4.0 }, 6, 4)
}

pub fn deterministic_limit_params() -> ModelParams {
    saturated_probe(Deterministic { value: 4.0 }, 6, 4)
}

/// Unit queue-2 limit with queue 2 fed at rate 0.1, for which the fluid
/// rates in the saturated region are exact.
pub fn exact_fluid_probe() -> ModelParams {
    saturated_probe(Uniform { mean: 10.0 }, 1, 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    P,
    U4,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::P => "p",
            Quantity::U4 => "u4",
        })
    }
}

/// A published value an estimate is compared against.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceValue {
    pub scenario: String,
    pub quantity: Quantity,
    pub value: f64,
    /// Where the value comes from, e.g. `Table 1, a = 0.5`.
    pub source: String,
    pub tolerance: f64,
}

impl ReferenceValue {
    pub fn accepts(&self, estimate: f64) -> bool {
        (estimate - self.value).abs() <= self.tolerance
    }
}

/// One simulated parameter set and its references.
#[derive(Debug, Clone, PartialEq)]
pub struct ReproCase {
    pub id: String,
    pub params: ModelParams,
    pub references: Vec<ReferenceValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Example(usize),
    Table1,
    Fig1Limit,
}

impl Scenario {
    pub const NAMES: [&'static str; 7] = ["example1", "example2", "example3", "example4", "example5", "table1", "fig1_limit"];

    pub fn cases(&self) -> Vec<ReproCase> {
        let reference = |scenario: &str, quantity, value, source: String, tolerance| ReferenceValue {
            scenario: scenario.to_string(),
            quantity,
            value,
            source,
            tolerance,
        };
        match *self {
            Scenario::Example(n) => {
                let id = format!("example{n}");
                let (u4, p) = EXAMPLE_REFERENCE[n - 1];
                let source = format!("Example {n}");
                vec![ReproCase {
                    params: example_params(n),
                    references: vec![
                        reference(&id, Quantity::P, p, source.clone(), EXAMPLE_P_TOLERANCE),
                        reference(&id, Quantity::U4, u4, source, EXAMPLE_U4_TOLERANCE),
                    ],
                    id,
                }]
            }
            Scenario::Table1 => WEIBULL_SHAPES
                .iter()
                .zip(WEIBULL_REFERENCE)
                .map(|(&a, (p, u4))| {
                    let id = format!("table1/a={a}");
                    let source = format!("Table 1, a = {a}");
                    ReproCase {
                        params: weibull_params(a),
                        references: vec![
                            reference(&id, Quantity::P, p, source.clone(), WEIBULL_P_TOLERANCE),
                            reference(&id, Quantity::U4, u4, source, WEIBULL_U4_TOLERANCE),
                        ],
                        id,
                    }
                })
                .collect(),
            Scenario::Fig1Limit => vec![ReproCase {
                id: "fig1_limit".into(),
                params: deterministic_limit_params(),
                references: vec![reference(
                    "fig1_limit",
                    Quantity::P,
                    DETERMINISTIC_P,
                    "Figure 1 limiting value".into(),
                    DETERMINISTIC_P_TOLERANCE,
                )],
            }],
        }
    }
}

impl FromStr for Scenario {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table1" => Ok(Scenario::Table1),
            "fig1_limit" => Ok(Scenario::Fig1Limit),
            _ => s
                .strip_prefix("example")
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|n| (1..=5).contains(n))
                .map(Scenario::Example)
                .ok_or_else(|| ExperimentError::UnknownScenario(s.to_string())),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Example(n) => write!(f, "example{n}"),
            Scenario::Table1 => f.write_str("table1"),
            Scenario::Fig1Limit => f.write_str("fig1_limit"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_quantities;

    #[test]
    fn names_round_trip() {
        for name in Scenario::NAMES {
            assert_eq!(name.parse::<Scenario>().unwrap().to_string(), name);
        }
        assert!("example6".parse::<Scenario>().is_err());
        assert!("fig2".parse::<Scenario>().is_err());
    }

    #[test]
    fn every_queue2_law_has_mean_four() {
        for n in 1..=5 {
            assert!((example_interarrival(n).mean().unwrap() - 4.0).abs() < 1e-12);
        }
        for a in WEIBULL_SHAPES {
            let d = derive_quantities(&weibull_params(a)).unwrap();
            assert!((d.lambda[1] - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn probe_derived_quantities() {
        let d = derive_quantities(&example_params(1)).unwrap();
        assert_eq!(d.lambda, [0.0, 0.25, 0.25]);
        assert!((d.rho0 - 0.625).abs() < 1e-15);
        assert!((d.zeta - 1.5).abs() < 1e-15);
        assert!((d.zeta_star - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn example4_reference_values() {
        let cases = Scenario::Example(4).cases();
        let refs = &cases[0].references;
        assert_eq!((refs[0].quantity, refs[0].value), (Quantity::P, 0.1751));
        assert_eq!((refs[1].quantity, refs[1].value), (Quantity::U4, 0.0446));
    }

    #[test]
    fn table_has_all_rows() {
        let cases = Scenario::Table1.cases();
        assert_eq!(cases.len(), 24);
        assert_eq!(cases[0].references[0].value, 0.4181);
        assert_eq!(cases[0].references[1].value, 0.1097);
        assert!(cases.iter().all(|c| c.params.limits == Limits([1, 6, 4])));
    }
}
