use thiserror::Error;

/// Constraint that emptied a feasible set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    TxPowerBounds,
    InterferenceBounds,
    SinrBounds,
    EnergyBudget,
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Constraint::TxPowerBounds => "transmission power bounds",
            Constraint::InterferenceBounds => "target interference bounds",
            Constraint::SinrBounds => "SINR bounds",
            Constraint::EnergyBudget => "energy-per-bit budget",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a mathematical precondition (negative distance,
    /// zero denominator, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A query landed outside the attainable range of a monotone map.
    #[error("range error: {0}")]
    Range(String),

    /// The lattice interference sum does not converge.
    #[error("lattice sum diverges: path-loss exponent {alpha} must exceed 2")]
    Divergence { alpha: f64 },

    /// No point of the searched set satisfies every constraint.
    #[error("infeasible: empty feasible set ({violated})")]
    Infeasible { violated: Constraint },

    /// Malformed configuration or scenario.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
