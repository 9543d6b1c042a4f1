//! μ_S ≤ 2^{λn/2} μ* pointwise, on a grid and for several λ.

use crate::atoms::Source;
use crate::kernel::KernelSpec;
use crate::operators::{bounding_rect, Evaluator, OperatorParams, OperatorTag};
use crate::quad::SWEEP_MIN_POINTS;
use crate::quad::{Engine, QuadPlan};
use crate::{Error, Estimate, Result, Verdict};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationRow {
    pub lambda: f64,
    /// 2^{λn/2}
    pub factor: f64,
    pub mu_star: Vec<Estimate>,
    /// 2^{λn/2} μ* / μ_S (∞ where μ_S = 0)
    pub margin: Vec<f64>,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationReport {
    pub points: Vec<Vec<f64>>,
    pub mu_s: Vec<Estimate>,
    pub rows: Vec<DominationRow>,
    /// points where an evaluation failed
    pub failed: usize,
    pub verdict: Verdict,
}

impl DominationReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().map(|r| r.violations).sum()
    }
}

/// Count grid points with μ_S > 2^{λn/2} μ* + (combined uncertainty), for
/// each λ in `lambdas` (params.lambda when empty).
pub fn domination_check(
    kernel: &KernelSpec,
    f: &Source,
    params: &OperatorParams,
    grid: &[Vec<f64>],
    lambdas: &[f64],
    plan: &QuadPlan,
) -> Result<DominationReport> {
    let lambdas: Vec<f64> = if lambdas.is_empty() { vec![params.lambda] } else { lambdas.to_vec() };
    if let Some(l) = lambdas.iter().find(|&&l| !(l > 1.0)) {
        return Err(Error::InvalidParams { constraint: format!("λ ≤ 1 (λ = {l})") });
    }
    let window = if grid.len() >= SWEEP_MIN_POINTS || plan.engine == Engine::Sweep {
        bounding_rect(grid)
    } else {
        None
    };
    let ev = Evaluator::new(kernel, f, params, plan, window.as_ref())?;
    let n = params.n as f64;
    let mut failed = vec![false; grid.len()];
    let area: Vec<Option<Estimate>> = grid.par_iter().map(|x| ev.eval(OperatorTag::Area, x).ok().map(|v| v.estimate)).collect();
    let mut rows = Vec::new();
    for &lambda in &lambdas {
        let star: Vec<Option<Estimate>> = grid
            .par_iter()
            .map(|x| ev.eval_lambda(OperatorTag::Star, x, lambda).ok().map(|v| v.estimate))
            .collect();
        let factor = 2f64.powf(lambda * n / 2.0);
        let mut margin = Vec::with_capacity(grid.len());
        let mut violations = 0;
        let mut mu_star = Vec::with_capacity(grid.len());
        for (i, (a, s)) in area.iter().zip(&star).enumerate() {
            match (a, s) {
                (Some(a), Some(s)) => {
                    let bound = factor * s.value + a.uncertainty + factor * s.uncertainty;
                    if a.value > bound {
                        violations += 1;
                    }
                    margin.push(if a.value > 0.0 { factor * s.value / a.value } else { f64::INFINITY });
                    mu_star.push(*s);
                }
                _ => {
                    failed[i] = true;
                    margin.push(f64::NAN);
                    mu_star.push(Estimate::new(f64::NAN, f64::NAN));
                }
            }
        }
        rows.push(DominationRow { lambda, factor, mu_star, margin, violations });
    }
    let failed = failed.iter().filter(|&&b| b).count();
    let mu_s = area.iter().map(|a| a.unwrap_or(Estimate::new(f64::NAN, f64::NAN))).collect();
    let total: usize = rows.iter().map(|r| r.violations).sum();
    let verdict = if total > 0 {
        Verdict::Fail
    } else if failed > 0 {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(DominationReport { points: grid.to_vec(), mu_s, rows, failed, verdict })
}
