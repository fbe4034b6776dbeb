//! Per-iteration weakness factors for relaxed atom selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeaknessSequence {
    Constant(f64),
    Explicit(Vec<f64>),
}

impl WeaknessSequence {
    pub fn constant(t: f64) -> Result<Self> {
        validate(1, t)?;
        Ok(WeaknessSequence::Constant(t))
    }

    pub fn explicit(ts: Vec<f64>) -> Result<Self> {
        if ts.is_empty() {
            return Err(Error::InvalidSolverConfig(
                "explicit weakness sequence is empty".into(),
            ));
        }
        for (i, &t) in ts.iter().enumerate() {
            validate(i + 1, t)?;
        }
        Ok(WeaknessSequence::Explicit(ts))
    }

    /// Weakness factor for iteration `m` (1-based). An explicit sequence
    /// extends past its end with its last value.
    pub fn at(&self, m: usize) -> f64 {
        debug_assert!(m >= 1);
        match self {
            WeaknessSequence::Constant(t) => *t,
            WeaknessSequence::Explicit(ts) => ts[(m - 1).min(ts.len() - 1)],
        }
    }

    /// The smallest factor the sequence can produce; the constant the
    /// convergence bound is quoted with.
    pub fn min_value(&self) -> f64 {
        match self {
            WeaknessSequence::Constant(t) => *t,
            WeaknessSequence::Explicit(ts) => ts.iter().copied().fold(1.0, f64::min),
        }
    }
}

fn validate(step: usize, t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidWeakness { step, value: t });
    }
    Ok(())
}
