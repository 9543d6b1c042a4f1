//! ‖μ(a)‖_p^p for an atom: a polar quadrature over 64B plus the exterior
//! tail implied by the fitted decay envelope.

use super::decay::DecayFit;
use crate::atoms::{Atom, Source};
use crate::geom::{sphere_area, Rect};
use crate::kernel::KernelSpec;
use crate::operators::{Evaluator, OperatorParams, OperatorTag};
use crate::quad::rules::GaussLegendre;
use crate::quad::QuadPlan;
use crate::{Error, Estimate, Result, Verdict};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Polar rule on B(center, factor·r): Gauss-Legendre in the radius on
/// segments refined toward the atom, trapezoid in angle. Planar only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarWindow {
    pub center: [f64; 2],
    pub radius: f64,
    /// outer radius over atom radius
    pub factor: f64,
    /// Gauss nodes per radial segment
    pub per_segment: usize,
    pub n_theta: usize,
}

impl PolarWindow {
    pub fn around(center: &[f64], radius: f64) -> Self {
        Self { center: [center[0], center[1]], radius, factor: 64.0, per_segment: 6, n_theta: 32 }
    }

    pub fn refined(&self) -> Self {
        Self { per_segment: 2 * self.per_segment, n_theta: 2 * self.n_theta, ..self.clone() }
    }

    fn breaks(&self) -> Vec<f64> {
        let mut b = vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0];
        let mut s = 4.0;
        while s < self.factor {
            b.push(s);
            s *= 2.0;
        }
        b.push(self.factor);
        b.into_iter().map(|u| u * self.radius).collect()
    }

    /// (point, weight) pairs.
    pub fn nodes(&self) -> Vec<([f64; 2], f64)> {
        let gl = GaussLegendre::cached(self.per_segment);
        let dt = 2.0 * PI / self.n_theta as f64;
        let b = self.breaks();
        let mut out = Vec::new();
        for w in b.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let half = 0.5 * (hi - lo);
            for (x, wx) in gl.nodes.iter().zip(&gl.weights) {
                let r = lo + half * (x + 1.0);
                for j in 0..self.n_theta {
                    // half-step offset keeps nodes off the symmetry axes
                    let th = dt * (j as f64 + 0.5);
                    out.push(([self.center[0] + r * th.cos(), self.center[1] + r * th.sin()], wx * half * r * dt));
                }
            }
        }
        out
    }

    pub fn bounding_rect(&self) -> Rect {
        Rect::square(self.center, self.factor * self.radius)
    }
}

/// Operator values on a window rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSample {
    pub operator: OperatorTag,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub values: Vec<Estimate>,
}

pub fn sample_window(
    tag: OperatorTag,
    kernel: &KernelSpec,
    f: &Source,
    params: &OperatorParams,
    window: &PolarWindow,
    plan: &QuadPlan,
) -> Result<WindowSample> {
    if params.n != 2 {
        return Err(Error::Domain("window integrals are implemented for n = 2".into()));
    }
    let nodes = window.nodes();
    let ev = Evaluator::new(kernel, f, params, plan, Some(&window.bounding_rect()))?;
    let vals: Vec<Result<Estimate>> = nodes.par_iter().map(|(x, _)| ev.eval(tag, x).map(|v| v.estimate)).collect();
    let mut values = Vec::with_capacity(vals.len());
    for v in vals {
        values.push(v?);
    }
    Ok(WindowSample {
        operator: tag,
        points: nodes.iter().map(|n| n.0).collect(),
        weights: nodes.iter().map(|n| n.1).collect(),
        values,
    })
}

impl WindowSample {
    /// The sample of c·f: both operators are positively homogeneous.
    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| v.scale(c.abs())).collect(), ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpEstimate {
    pub p: f64,
    pub window_part: Estimate,
    pub tail_part: f64,
    /// ‖μ(a)‖_p^p
    pub total: Estimate,
    /// total^{1/p}
    pub quasinorm: f64,
    pub tail_fraction: f64,
    pub verdict: Verdict,
}

/// Combine a window sample with the exterior tail of `decay` at exponent p,
/// for a source of sup norm `sup_norm` (C_fit is normalized by ‖a‖∞, so one
/// fit serves every rescaling of the same shape).
pub fn lp_from_sample(sample: &WindowSample, window: &PolarWindow, decay: &DecayFit, p: f64, n: usize, sup_norm: f64) -> Result<LpEstimate> {
    let e = decay.exponent * p;
    if e <= n as f64 {
        return Err(Error::TailDivergent { exponent: e, n });
    }
    if decay.verdict != Verdict::Pass {
        return Err(Error::Domain(format!("decay fit verdict is {:?}; the exterior tail needs a passing fit", decay.verdict)));
    }
    let mut v = 0.0;
    let mut u = 0.0;
    for (w, est) in sample.weights.iter().zip(&sample.values) {
        let a = est.value.max(0.0);
        v += w * a.powf(p);
        u += w * ((a + est.uncertainty).powf(p) - a.powf(p));
    }
    // ∫_{|x−x₀|>ρ} (C‖a‖∞ r^{n+β} d^{−(n+β)})^p dx
    let rho = window.factor * window.radius;
    let c = decay.c_fit.max(decay.c_fit_extended) * sup_norm * decay.radius.powf(decay.exponent);
    let tail = sphere_area(n) * c.powf(p) * rho.powf(n as f64 - e) / (e - n as f64);
    let total = v + tail;
    Ok(LpEstimate {
        p,
        window_part: Estimate::new(v, u),
        tail_part: tail,
        total: Estimate::new(total, u),
        quasinorm: total.powf(1.0 / p),
        tail_fraction: if total > 0.0 { tail / total } else { 0.0 },
        verdict: Verdict::Pass,
    })
}

/// ‖μ(a)‖_p^p with p = params.p.
pub fn lp_norm_estimate(
    tag: OperatorTag,
    kernel: &KernelSpec,
    atom: &Atom,
    params: &OperatorParams,
    window: &PolarWindow,
    decay: &DecayFit,
    plan: &QuadPlan,
) -> Result<LpEstimate> {
    let e = decay.exponent * params.p;
    if e <= params.n as f64 {
        return Err(Error::TailDivergent { exponent: e, n: params.n });
    }
    if atom.source().is_zero() {
        let z = Estimate::exact(0.0);
        return Ok(LpEstimate { p: params.p, window_part: z, tail_part: 0.0, total: z, quasinorm: 0.0, tail_fraction: 0.0, verdict: Verdict::Pass });
    }
    let sample = sample_window(tag, kernel, &atom.source(), params, window, plan)?;
    lp_from_sample(&sample, window, decay, params.p, params.n, atom.sup_norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_window_integrates_polynomials() {
        let w = PolarWindow::around(&[1.0, -2.0], 0.5);
        let area: f64 = w.nodes().iter().map(|n| n.1).sum();
        let big = 32.0;
        assert!((area - PI * big * big).abs() < 1e-9 * area);
        let m2: f64 = w.nodes().iter().map(|(x, wt)| wt * ((x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2))).sum();
        assert!((m2 - PI * big.powi(4) / 2.0).abs() < 1e-9 * m2);
    }
}
