//! Numerical workbench for parameterized Littlewood-Paley square functions
//! with variable kernels: the area integral μ_S and the g*_λ-type function
//! μ*, the kernel moduli they depend on, Hardy-space atoms, and a harness
//! that checks pointwise decay, domination and (weak) Lᵖ bounds against
//! brute-force oracles.

pub mod atoms;
pub mod error;
pub mod geom;
pub mod kernel;
pub mod operators;
pub mod quad;
pub mod verify;

pub use error::{Error, Result};

use serde::Serialize;

/// A value with an absolute uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub uncertainty: f64,
}

impl Estimate {
    pub fn new(value: f64, uncertainty: f64) -> Self {
        Self { value, uncertainty }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, uncertainty: 0.0 }
    }

    pub fn lo(&self) -> f64 {
        self.value - self.uncertainty
    }

    pub fn hi(&self) -> f64 {
        self.value + self.uncertainty
    }

    /// √ of a nonnegative estimate, propagating the interval.
    pub fn sqrt(&self) -> Estimate {
        let v = self.value.max(0.0).sqrt();
        let hi = (self.value + self.uncertainty).max(0.0).sqrt();
        Estimate { value: v, uncertainty: hi - v }
    }

    pub fn scale(&self, c: f64) -> Estimate {
        Estimate { value: self.value * c, uncertainty: self.uncertainty * c.abs() }
    }
}

/// Three-valued outcome of every check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// The worse of two verdicts.
    pub fn and(self, other: Verdict) -> Verdict {
        self.max(other)
    }
}
