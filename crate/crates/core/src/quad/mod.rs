//! Quadrature engines: one-dimensional and sphere rules, the inner field
//! F(y, t), the cone and weighted half-space outer integrals, and dense
//! oracles.

pub mod field;
pub mod oracle;
pub mod outer;
pub mod rules;
pub mod sweep;
pub mod sphere;
pub mod weight;

pub use field::{inner_integral, FnField, InnerField, Profile, SourceField};
pub use sweep::Sweep;
pub use outer::{cone_integral, halfspace_tail_bound, halfspace_weighted_integral, tail_bound, OuterOutcome};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// How many-point evaluations are carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// sweep for planar grids of at least [`SWEEP_MIN_POINTS`] points, else adaptive
    Auto,
    /// nested adaptive integration at every point
    Adaptive,
    /// one precomputed y-rule shared by all points (planar only)
    Sweep,
}

/// Grid size from which [`Engine::Auto`] switches to the sweep.
pub const SWEEP_MIN_POINTS: usize = 32;

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Auto => "auto",
            Engine::Adaptive => "adaptive",
            Engine::Sweep => "sweep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "auto" => Some(Engine::Auto),
            "adaptive" => Some(Engine::Adaptive),
            "sweep" => Some(Engine::Sweep),
            _ => None,
        }
    }
}

/// Resolution and truncation settings shared by all outer integrals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadPlan {
    /// Gauss nodes on arcs (and caps) for the inner field
    pub sphere_order: usize,
    /// Gauss nodes per radial panel of the inner field
    pub radial_nodes: usize,
    /// lower t cut-off; default 1e-3 × smallest source radius
    pub t_min: Option<f64>,
    /// upper t cut-off; default 4·(dist + diam)
    pub t_max: Option<f64>,
    /// half-space truncation radius; default follows t_max
    pub r_y: Option<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// budget of adaptive pieces per one-dimensional integral
    pub max_pieces: usize,
    /// enlarge t_max / R_y automatically when the tail bound is too large
    pub auto_extend: bool,
    /// run the t_min-halving check
    pub check_t_min: bool,
    pub engine: Engine,
}

impl Default for QuadPlan {
    fn default() -> Self {
        Self {
            sphere_order: 16,
            radial_nodes: 10,
            t_min: None,
            t_max: None,
            r_y: None,
            rel_tol: 1e-2,
            abs_tol: 1e-300,
            max_pieces: 400,
            auto_extend: true,
            check_t_min: true,
            engine: Engine::Auto,
        }
    }
}

impl QuadPlan {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams { constraint: m.to_string() });
        if !(self.rel_tol > 0.0 && self.rel_tol <= 0.1) {
            return bad("rel_tol must lie in (0, 0.1]");
        }
        if let Some(t) = self.t_min {
            if !(t > 0.0) {
                return bad("t_min must be > 0");
            }
        }
        if let (Some(a), Some(b)) = (self.t_min, self.t_max) {
            if !(b > a) {
                return bad("t_max must exceed t_min");
            }
        }
        if let Some(r) = self.r_y {
            if !(r > 0.0) {
                return bad("r_y must be > 0");
            }
        }
        if self.sphere_order < 4 || self.radial_nodes < 2 {
            return bad("sphere_order >= 4 and radial_nodes >= 2 required");
        }
        if !(self.abs_tol >= 0.0) {
            return bad("abs_tol must be >= 0");
        }
        Ok(())
    }

    /// Doubled sphere order and radial panel nodes.
    pub fn refined(&self) -> Self {
        Self {
            sphere_order: 2 * self.sphere_order,
            radial_nodes: 2 * self.radial_nodes,
            ..self.clone()
        }
    }

    /// Tolerance handed to the nested one-dimensional integrals.
    pub(crate) fn inner_rel(&self) -> f64 {
        self.rel_tol / 10.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_validation() {
        assert!(QuadPlan::default().validate().is_ok());
        let p = QuadPlan { rel_tol: 0.2, ..Default::default() };
        assert!(p.validate().is_err());
        let p = QuadPlan { t_min: Some(1.0), t_max: Some(0.5), ..Default::default() };
        assert!(p.validate().is_err());
        let p = QuadPlan { t_min: Some(0.0), ..Default::default() };
        assert!(p.validate().is_err());
        let r = QuadPlan::default().refined();
        assert_eq!((r.sphere_order, r.radial_nodes), (32, 20));
    }
}
