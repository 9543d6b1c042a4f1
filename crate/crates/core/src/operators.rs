//! The two square functions as point and grid evaluators.
//!
//! μ_S(f)(x)² = ∫∫_{|y−x|<t} |F(y,t)|² dy dt / t^{n+2ρ+1}
//! μ*(f)(x)²  = ∫∫ |F(y,t)|² (t/(t+|x−y|))^{λn} dy dt / t^{n+2ρ+1}

use crate::atoms::Source;
use crate::geom::{self, Rect, Vec3};
use crate::kernel::KernelSpec;
use crate::quad::{cone_integral, halfspace_weighted_integral, Engine, OuterOutcome, QuadPlan, SourceField, Sweep, SWEEP_MIN_POINTS};
use crate::{Error, Estimate, Result};
use rayon::prelude::*;
use serde::Serialize;

/// Which operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorTag {
    /// area integral μ_S
    Area,
    /// weighted g*_λ-type function μ*
    Star,
}

impl OperatorTag {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorTag::Area => "mu_s",
            OperatorTag::Star => "mu_star",
        }
    }
}

/// (n, ρ, λ, α, β, p) with their admissibility record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorParams {
    pub n: usize,
    pub rho: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    /// p sits at the endpoint n/(n+β) (weak-type endpoint runs)
    pub endpoint: bool,
    /// constraints found violated (non-empty only for unchecked params)
    pub violations: Vec<String>,
}

impl OperatorParams {
    /// Strict construction for the Hardy-space suites.
    pub fn new(n: usize, rho: f64, lambda: f64, alpha: f64, beta: f64, p: f64) -> Result<Self> {
        let me = Self::unchecked(n, rho, lambda, alpha, beta, p);
        me.into_result()
    }

    /// p = n/(n+β) exactly; all other constraints strict.
    pub fn endpoint(n: usize, rho: f64, lambda: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = n as f64 / (n as f64 + beta);
        let mut me = Self::unchecked(n, rho, lambda, alpha, beta, p);
        me.endpoint = true;
        me.violations = me.find_violations();
        me.into_result()
    }

    /// Record violations instead of failing (the `--unsafe` path).
    pub fn unchecked(n: usize, rho: f64, lambda: f64, alpha: f64, beta: f64, p: f64) -> Self {
        let mut me = Self { n, rho, lambda, alpha, beta, p, endpoint: false, violations: Vec::new() };
        me.violations = me.find_violations();
        me
    }

    /// Parameters that only need the operators to make sense:
    /// 0 < ρ < n and λ > 1.
    pub fn operator_only(n: usize, rho: f64, lambda: f64) -> Result<Self> {
        let me = Self { n, rho, lambda, alpha: 1.0, beta: 0.0, p: 1.0, endpoint: false, violations: Vec::new() };
        if !(2..=3).contains(&n) {
            return Err(invalid("n must be 2 or 3"));
        }
        if !(rho > 0.0 && rho < n as f64) {
            return Err(invalid("ρ ∉ (0, n)"));
        }
        if !(lambda > 1.0) {
            return Err(invalid("λ ≤ 1"));
        }
        Ok(me)
    }

    fn into_result(self) -> Result<Self> {
        if self.violations.is_empty() {
            Ok(self)
        } else {
            Err(invalid(&self.violations.join("; ")))
        }
    }

    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }

    /// min{1/2, α, ρ − n/2}
    pub fn beta_cap(&self) -> f64 {
        0.5f64.min(self.alpha).min(self.rho - self.n as f64 / 2.0)
    }

    /// min{1/2, α, ρ − n/2, (λ−2)n/3}
    pub fn beta_cap_star(&self) -> f64 {
        self.beta_cap().min((self.lambda - 2.0) * self.n as f64 / 3.0)
    }

    /// Lower end n/(n+β) of the p-range.
    pub fn p_floor(&self) -> f64 {
        self.n as f64 / (self.n as f64 + self.beta)
    }

    /// The extra μ* restriction β < (λ−2)n/3.
    pub fn check_star(&self) -> Result<()> {
        let cap = (self.lambda - 2.0) * self.n as f64 / 3.0;
        if self.beta >= cap {
            return Err(invalid(&format!("β ≥ (λ − 2)n/3 (β = {}, (λ − 2)n/3 = {cap})", self.beta)));
        }
        Ok(())
    }

    fn find_violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let nf = self.n as f64;
        if !(2..=3).contains(&self.n) {
            v.push(format!("n = {} unsupported (2 or 3)", self.n));
            return v;
        }
        if !(self.rho > nf / 2.0 && self.rho < nf) {
            v.push(format!("ρ ∉ (n/2, n) (ρ = {}, n = {})", self.rho, self.n));
        }
        if !(self.lambda > 2.0) {
            v.push(format!("λ ≤ 2 (λ = {})", self.lambda));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            v.push(format!("α ∉ (0, 1] (α = {})", self.alpha));
        }
        if !(self.beta > 0.0) {
            v.push(format!("β ≤ 0 (β = {})", self.beta));
        }
        let half_gap = self.rho - nf / 2.0;
        if self.beta >= half_gap {
            v.push(format!("β ≥ ρ − n/2 (β = {}, ρ − n/2 = {half_gap})", self.beta));
        }
        if self.beta >= 0.5 {
            v.push(format!("β ≥ 1/2 (β = {})", self.beta));
        }
        if self.beta >= self.alpha {
            v.push(format!("β ≥ α (β = {}, α = {})", self.beta, self.alpha));
        }
        let floor = self.p_floor();
        let p_ok = if self.endpoint {
            (self.p - floor).abs() <= 1e-12
        } else {
            self.p > floor && self.p <= 1.0
        };
        if !p_ok {
            v.push(format!("p ∉ (n/(n+β), 1] (p = {}, n/(n+β) = {floor})", self.p));
        }
        v
    }
}

fn invalid(msg: &str) -> Error {
    Error::InvalidParams { constraint: msg.to_string() }
}

/// Operator value with the outer-integral record behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorValue {
    pub estimate: Estimate,
    pub outer: Option<OuterOutcome>,
}

fn point(n: usize, x: &[f64]) -> Result<Vec3> {
    if x.len() != n {
        return Err(Error::Domain(format!("point has {} coordinates, expected {n}", x.len())));
    }
    Ok(geom::to_vec3(x))
}

fn eval_field(tag: OperatorTag, field: &SourceField, x: &[f64], lambda: f64, plan: &QuadPlan) -> Result<OperatorValue> {
    use crate::quad::InnerField;
    if field.source().is_zero() {
        point(field.dim(), x)?;
        return Ok(OperatorValue { estimate: Estimate::exact(0.0), outer: None });
    }
    let outer = match tag {
        OperatorTag::Area => cone_integral(field, x, plan)?,
        OperatorTag::Star => halfspace_weighted_integral(field, x, lambda, plan)?,
    };
    Ok(OperatorValue { estimate: outer.estimate.sqrt(), outer: Some(outer) })
}

fn field_for(kernel: &KernelSpec, f: &Source, params: &OperatorParams, plan: &QuadPlan) -> Result<SourceField> {
    if kernel.dim() != params.n {
        return Err(Error::Domain(format!("kernel in R^{}, params n = {}", kernel.dim(), params.n)));
    }
    SourceField::new(kernel, f, params.rho, plan)
}

/// μ_S(f)(x) with its uncertainty.
pub fn mu_s(kernel: &KernelSpec, f: &Source, x: &[f64], params: &OperatorParams, plan: &QuadPlan) -> Result<OperatorValue> {
    let field = field_for(kernel, f, params, plan)?;
    eval_field(OperatorTag::Area, &field, x, params.lambda, plan)
}

/// μ*(f)(x) with its uncertainty.
pub fn mu_star(kernel: &KernelSpec, f: &Source, x: &[f64], params: &OperatorParams, plan: &QuadPlan) -> Result<OperatorValue> {
    let field = field_for(kernel, f, params, plan)?;
    eval_field(OperatorTag::Star, &field, x, params.lambda, plan)
}

/// Either operator by tag.
pub fn evaluate(tag: OperatorTag, kernel: &KernelSpec, f: &Source, x: &[f64], params: &OperatorParams, plan: &QuadPlan) -> Result<OperatorValue> {
    let field = field_for(kernel, f, params, plan)?;
    eval_field(tag, &field, x, params.lambda, plan)
}

/// Per-point values in grid order; failures stay per point.
#[derive(Debug, Clone)]
pub struct GridValues {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<Result<OperatorValue>>,
}

impl GridValues {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn estimates(&self) -> Vec<Option<Estimate>> {
        self.values.iter().map(|v| v.as_ref().ok().map(|o| o.estimate)).collect()
    }
}

/// Operator evaluation bound to one source. With a window it may switch to
/// the sweep engine, which pays a one-off setup for cheap per-point values.
pub struct Evaluator {
    field: SourceField,
    sweep: Option<Sweep>,
    plan: QuadPlan,
    lambda: f64,
}

impl Evaluator {
    /// `window`: where the points will lie; `None` forces adaptive under
    /// [`Engine::Auto`].
    pub fn new(kernel: &KernelSpec, f: &Source, params: &OperatorParams, plan: &QuadPlan, window: Option<&Rect>) -> Result<Self> {
        let field = field_for(kernel, f, params, plan)?;
        let want = match plan.engine {
            Engine::Adaptive => false,
            Engine::Sweep => true,
            Engine::Auto => window.is_some() && params.n == 2,
        };
        let sweep = if want && !field.source().is_zero() {
            let w = window.copied().or_else(|| {
                f.support_hull().map(|h| Rect::square([h.center[0], h.center[1]], h.radius))
            });
            match w {
                Some(w) => Some(Sweep::new(&field, &w, plan)?),
                None => None,
            }
        } else {
            None
        };
        Ok(Self { field, sweep, plan: plan.clone(), lambda: params.lambda })
    }

    pub fn uses_sweep(&self) -> bool {
        self.sweep.is_some()
    }

    pub fn eval(&self, tag: OperatorTag, x: &[f64]) -> Result<OperatorValue> {
        self.eval_lambda(tag, x, self.lambda)
    }

    /// As [`Evaluator::eval`] with another λ for the weighted operator.
    pub fn eval_lambda(&self, tag: OperatorTag, x: &[f64], lambda: f64) -> Result<OperatorValue> {
        match &self.sweep {
            Some(s) => Ok(OperatorValue { estimate: s.mu(tag, x, lambda)?, outer: None }),
            None => eval_field(tag, &self.field, x, lambda, &self.plan),
        }
    }
}

/// Bounding rectangle of planar points.
pub fn bounding_rect(grid: &[Vec<f64>]) -> Option<Rect> {
    let mut it = grid.iter().filter(|x| x.len() == 2);
    let first = it.next()?;
    let mut r = Rect::new([first[0], first[1]], [first[0], first[1]]);
    for x in it {
        r = r.union(&Rect::new([x[0], x[1]], [x[0], x[1]]));
    }
    Some(r)
}

/// Evaluate on every grid point (in parallel, output in input order).
pub fn evaluate_on_grid(
    tag: OperatorTag,
    kernel: &KernelSpec,
    f: &Source,
    grid: &[Vec<f64>],
    params: &OperatorParams,
    plan: &QuadPlan,
) -> Result<GridValues> {
    let window = if grid.len() >= SWEEP_MIN_POINTS || plan.engine == Engine::Sweep {
        bounding_rect(grid)
    } else {
        None
    };
    let ev = Evaluator::new(kernel, f, params, plan, window.as_ref())?;
    let values = grid.par_iter().map(|x| ev.eval(tag, x)).collect();
    Ok(GridValues { points: grid.to_vec(), values })
}

/// 2^{λn/2}: the pointwise factor in μ_S ≤ 2^{λn/2} μ*.
pub fn pointwise_factor(params: &OperatorParams) -> f64 {
    2f64.powf(params.lambda * params.n as f64 / 2.0)
}

/// 2^{λn}: the factor of the norm form ‖μ_S‖ ≤ 2^{λn}‖μ*‖.
pub fn norm_factor(params: &OperatorParams) -> f64 {
    2f64.powf(params.lambda * params.n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_messages() {
        let e = OperatorParams::new(2, 1.5, 3.0, 1.0, 0.6, 1.0).unwrap_err();
        assert!(e.to_string().contains("β ≥ ρ − n/2"), "{e}");
        assert!(OperatorParams::new(2, 1.5, 3.0, 1.0, 0.45, 1.0).is_ok());
        assert!(OperatorParams::new(2, 0.9, 3.0, 1.0, 0.1, 1.0).unwrap_err().to_string().contains("ρ ∉ (n/2, n)"));
        assert!(OperatorParams::new(2, 1.5, 2.0, 1.0, 0.1, 1.0).unwrap_err().to_string().contains("λ ≤ 2"));
        assert!(OperatorParams::new(2, 1.5, 3.0, 1.0, 0.45, 0.8).unwrap_err().to_string().contains("p ∉"));
        let star = OperatorParams::new(2, 1.5, 2.5, 1.0, 0.45, 1.0).unwrap();
        assert!(star.check_star().unwrap_err().to_string().contains("(λ − 2)n/3"));
        let u = OperatorParams::unchecked(2, 1.5, 3.0, 1.0, 0.6, 1.0);
        assert!(!u.is_admissible());
        let ep = OperatorParams::endpoint(2, 1.5, 3.0, 1.0, 0.45).unwrap();
        assert!((ep.p - 2.0 / 2.45).abs() < 1e-15);
    }

    #[test]
    fn caps() {
        let p = OperatorParams::new(2, 1.5, 3.0, 1.0, 0.45, 1.0).unwrap();
        assert_eq!(p.beta_cap(), 0.5);
        assert!((p.beta_cap_star() - 0.5).abs() < 1e-15);
        assert_eq!(pointwise_factor(&p), 8.0);
        assert_eq!(norm_factor(&p), 64.0);
    }
}
