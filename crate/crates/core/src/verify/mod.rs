//! Inequality checks: the annulus kernel-difference bound, pointwise atom
//! decay, Lᵖ and weak-Lᵖ size of the operators, and pointwise domination.
//! Every check ends in a three-valued [`Verdict`](crate::Verdict).

pub mod decay;
pub mod distribution;
pub mod domination;
pub mod lemma25;
pub mod lp;
pub mod weak;

pub use decay::{decay_fit, decay_fit_source, fit_power_law, DecayFit, DecayOptions, SLOPE_TOL, STABILITY_FACTOR};
pub use distribution::{distribution_function, distribution_function_weighted, DistributionEstimate};
pub use domination::{domination_check, DominationReport};
pub use lemma25::{lemma25_check, Lemma25Case, Lemma25Outcome};
pub use lp::{lp_from_sample, lp_norm_estimate, sample_window, LpEstimate, PolarWindow, WindowSample};
pub use weak::{weak_type_check, WeakTypeOptions, WeakTypeReport, WeakTypeTable};
