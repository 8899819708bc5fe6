//! Fluid model of the polling system.
//!
//! Rates are solved in terms of service-completion rates `d_k` and
//! walk-completion rates `e_j` rather than busy-time derivatives, so that
//! zero service or walking times need no special handling:
//! `T'_k = E sigma_k * d_k`, `U'_j = E xi_j * e_j`, `Q'_k = lambda_k - d_k`.
//!
//! With limited service, the rates are pinned exactly unless queue 2 is empty
//! and `l_2 > 1`; there only an envelope is known and [`region_rates`] returns
//! intervals.

mod bounds;
mod drift;
mod gated;
mod integrate;
mod rates;

use std::fmt;

use thiserror::Error;

pub use bounds::{busy_time_envelope, BusyTimeEnvelope};
pub use drift::{lyapunov_drift, DriftCertificate};
pub use gated::gated_exhaustive_rates;
pub use integrate::{integrate, Segment, Termination, Trajectory};
pub use rates::{constraint_residuals, inequality_slacks, region_rates};

/// Tolerance used for feasibility and sign decisions on rates.
pub const RATE_TOLERANCE: f64 = 1e-12;
/// Pivot magnitude below which the region's linear system is singular.
pub const SINGULARITY_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FluidError {
    #[error("no consistent fluid rates in region {region}: {reason}")]
    InfeasibleRegion { region: Region, reason: String },
    #[error("{0}")]
    NotApplicable(String),
    #[error("operation requires the {expected} discipline")]
    WrongDiscipline { expected: &'static str },
    #[error("fluid levels must be finite and nonnegative, got {0:?}")]
    InvalidState([f64; 3]),
    #[error("no consistent region at t = {t} from levels {q:?}")]
    NoConsistentRegion { t: f64, q: [f64; 3] },
}

/// Fluid queue levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidState {
    pub q: [f64; 3],
}

impl FluidState {
    pub fn new(q: [f64; 3]) -> Result<Self, FluidError> {
        if q.iter().all(|x| x.is_finite() && *x >= 0.0) {
            Ok(Self { q })
        } else {
            Err(FluidError::InvalidState(q))
        }
    }

    pub fn region(&self) -> Region {
        Region { positive: self.q.map(|x| x > 0.0) }
    }

    pub fn q2_positive(&self) -> bool {
        self.q[1] > 0.0
    }

    pub fn is_empty(&self) -> bool {
        self.q.iter().all(|&x| x == 0.0)
    }
}

/// The active set `J = {k : Q_k > 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Region {
    pub positive: [bool; 3],
}

impl Region {
    pub fn contains(&self, k: usize) -> bool {
        self.positive[k]
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (0..3).filter(|&k| self.positive[k])
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.members().map(|k| (k + 1).to_string()).collect();
        write!(f, "J={{{}}}", ids.join(","))
    }
}

/// A rate that is either pinned down or only known to lie in `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Exact(f64),
    Interval { lo: f64, hi: f64 },
}

impl Rate {
    pub(crate) fn span(a: f64, b: f64) -> Self {
        Rate::Interval { lo: a.min(b), hi: a.max(b) }
    }

    pub fn lo(&self) -> f64 {
        match *self {
            Rate::Exact(x) => x,
            Rate::Interval { lo, .. } => lo,
        }
    }

    pub fn hi(&self) -> f64 {
        match *self {
            Rate::Exact(x) => x,
            Rate::Interval { hi, .. } => hi,
        }
    }

    pub fn exact(&self) -> Option<f64> {
        match *self {
            Rate::Exact(x) => Some(x),
            Rate::Interval { .. } => None,
        }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo() - tol && x <= self.hi() + tol
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Exact(x) => write!(f, "{x}"),
            Rate::Interval { lo, hi } => write!(f, "[{lo}, {hi}]"),
        }
    }
}

/// Service-completion rates `d` and walk-completion rates `e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Completions {
    pub service: [Rate; 3],
    pub walk: [Rate; 4],
}

/// Busy-time, walking-time and queue-level derivatives in one region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSolution {
    pub region: Region,
    /// `T'_k`
    pub busy: [Rate; 3],
    /// `U'_j`, legs 1→2, 2→3, 3→1, 1→3
    pub walking: [Rate; 4],
    /// `Q'_k`
    pub level: [Rate; 3],
    pub total_busy: Rate,
    pub total_walking: Rate,
    /// Present for limited service, where the rates come from completion counts.
    pub completions: Option<Completions>,
    /// True when every rate is exact.
    pub tight: bool,
}

impl RateSolution {
    /// `W' = sum_k Q'_k / mu_k` with `W = sum_k Q_k / mu_k`.
    pub fn lyapunov_derivative(&self, rho0: f64) -> Rate {
        match self.total_busy {
            Rate::Exact(t) => Rate::Exact(rho0 - t),
            Rate::Interval { lo, hi } => Rate::span(rho0 - hi, rho0 - lo),
        }
    }
}
