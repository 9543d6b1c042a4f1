//! Amortized evaluation of both operators at many points x.
//!
//! With D = |y − x|, μ_S(x)² = ∫ P_y(D) dy and μ*(x)² = ∫ Q_y(D) dy where
//!
//!   P_y(D) = ∫_{max(D, t_min)}^∞ F(y,t)² t^{−k} dt,
//!   Q_y(D) = ∫_{t_min}^∞ F(y,t)² (t/(t+D))^{λn} t^{−k} dt
//!
//! see x only through D. A fixed y-rule is laid down once (quadtree cells
//! refined toward the source blocks, polar sectors outside the box), the
//! radial data of every node are stored, and each x is then a weighted sum
//! over nodes. The t-range is not truncated: past t_const the profile is
//! constant and both weights integrate in closed form. A second rule with
//! halved cells supplies the uncertainty. Planar only.

use crate::atoms::Ball;
use crate::geom::Rect;
use crate::operators::OperatorTag;
use crate::quad::field::InnerField;
use crate::quad::rules::GaussLegendre;
use crate::quad::weight::WeightTail;
use crate::quad::QuadPlan;
use crate::{Error, Estimate, Result};
use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};

#[derive(Debug, Clone, Copy)]
struct Density {
    /// cell size ≤ kappa·r next to a block of radius r
    kappa: f64,
    /// cell size ≤ eta·(distance to the block) further out
    eta: f64,
    /// Gauss nodes per exterior sector
    n_theta: usize,
    /// radius ratio of the exterior segments
    ratio: f64,
}

const COARSE: Density = Density { kappa: 0.25, eta: 0.3, n_theta: 16, ratio: 2.0 };
const FINE: Density = Density { kappa: 0.125, eta: 0.15, n_theta: 32, ratio: SQRT_2 };

/// Outer radius of the exterior sectors, in box half-widths.
const FAR: f64 = 4096.0;

/// Step of the cone tables in ln D.
const TABLE_STEP: f64 = 0.15;

/// One y-rule with per-node radial data in flat arrays.
struct Rule {
    y: Vec<[f64; 2]>,
    w: Vec<f64>,
    /// F = 0 below, and the t-integrals start no lower than t_min
    delta: Vec<f64>,
    tc: Vec<f64>,
    finf2: Vec<f64>,
    /// F∞² ∫_{tc}^∞ t^{−k} dt
    const_tail: Vec<f64>,
    /// (t, weight·F²·t^{−k}) on [delta, tc]
    pts: Vec<(f64, f64)>,
    pts_off: Vec<usize>,
    /// (G, dG/dξ) at ξ = ln(D/δ) = j·h with G(D) = ∫_D^{tc} F² t^{−k} dt
    tab: Vec<(f64, f64)>,
    tab_off: Vec<usize>,
    tab_h: Vec<f64>,
}

struct NodeData {
    delta: f64,
    tc: f64,
    finf2: f64,
    pts: Vec<(f64, f64)>,
    tab: Vec<(f64, f64)>,
    h: f64,
}

#[inline]
fn pow_k(t: f64, k: f64) -> f64 {
    if k == k.trunc() && k.abs() < 64.0 {
        t.powi(k as i32)
    } else {
        t.powf(k)
    }
}

fn node_data(field: &dyn InnerField, y: [f64; 2], t_min: f64, k: f64) -> Option<NodeData> {
    let prof = field.profile(&[y[0], y[1], 0.0]);
    if prof.panels.is_empty() && prof.f_inf == 0.0 {
        return None;
    }
    let delta = prof.t_start().max(t_min);
    let tc = prof.t_const();
    let mut pts = Vec::new();
    let mut tab = Vec::new();
    let mut h = 0.0;
    if tc > delta {
        prof.visit_sq(delta, tc, |t, c| pts.push((t, c * pow_k(t, -k))));
        let span = (tc / delta).ln();
        let n = ((span / TABLE_STEP).ceil() as usize + 1).max(4);
        h = span / (n - 1) as f64;
        let ds: Vec<f64> = (0..n)
            .map(|j| if j + 1 == n { tc } else { delta * (j as f64 * h).exp() })
            .collect();
        tab = vec![(0.0, 0.0); n];
        let mut g = 0.0;
        for j in (0..n).rev() {
            if j + 1 < n {
                g += prof.integrate_sq(ds[j], ds[j + 1], |t| pow_k(t, -k));
            }
            let f = prof.value(ds[j]);
            tab[j] = (g, -f * f * pow_k(ds[j], 1.0 - k));
        }
    }
    Some(NodeData { delta, tc, finf2: prof.f_inf * prof.f_inf, pts, tab, h })
}

fn quadtree(balls: &[Ball], c: [f64; 2], h: f64, d: &Density, min_h: f64, gl: &GaussLegendre, out: &mut Vec<([f64; 2], f64)>) {
    let fine_enough = h <= min_h
        || balls.iter().all(|b| {
            let e = (c[0] - b.center[0]).hypot(c[1] - b.center[1]);
            let dist = (e - b.radius - h * SQRT_2).max(0.0);
            2.0 * h <= (d.kappa * b.radius).max(d.eta * dist)
        });
    if fine_enough {
        for (xi, wi) in gl.nodes.iter().zip(&gl.weights) {
            for (xj, wj) in gl.nodes.iter().zip(&gl.weights) {
                out.push(([c[0] + h * xi, c[1] + h * xj], h * h * wi * wj));
            }
        }
        return;
    }
    let q = 0.5 * h;
    for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
        quadtree(balls, [c[0] + sx * q, c[1] + sy * q], q, d, min_h, gl, out);
    }
}

fn exterior(c: [f64; 2], h: f64, d: &Density, out: &mut Vec<([f64; 2], f64)>) {
    let gt = GaussLegendre::new(d.n_theta);
    let gr = GaussLegendre::new(4);
    for j in 0..4 {
        let th0 = 0.25 * PI + 0.5 * PI * j as f64;
        let half = 0.25 * PI;
        for (s, ws) in gt.nodes.iter().zip(&gt.weights) {
            let th = th0 + half * (s + 1.0);
            let (sn, cs) = th.sin_cos();
            let rho0 = h / cs.abs().max(sn.abs());
            let mut a = rho0;
            while a < FAR * h {
                let b = a * d.ratio;
                let hr = 0.5 * (b - a);
                for (u, wu) in gr.nodes.iter().zip(&gr.weights) {
                    let rho = a + hr * (u + 1.0);
                    out.push(([c[0] + rho * cs, c[1] + rho * sn], rho * hr * wu * half * ws));
                }
                a = b;
            }
        }
    }
}

impl Rule {
    fn build(field: &dyn InnerField, balls: &[Ball], bx: (&[f64; 2], f64), d: &Density, t_min: f64, k: f64) -> Rule {
        let min_r = balls.iter().map(|b| b.radius).fold(f64::INFINITY, f64::min);
        let gl = GaussLegendre::new(3);
        let mut pos = Vec::new();
        quadtree(balls, *bx.0, bx.1, d, 0.5 * d.kappa * min_r, &gl, &mut pos);
        exterior(*bx.0, bx.1, d, &mut pos);
        let data: Vec<Option<NodeData>> = pos.par_iter().map(|(y, _)| node_data(field, *y, t_min, k)).collect();
        let mut r = Rule {
            y: Vec::new(),
            w: Vec::new(),
            delta: Vec::new(),
            tc: Vec::new(),
            finf2: Vec::new(),
            const_tail: Vec::new(),
            pts: Vec::new(),
            pts_off: vec![0],
            tab: Vec::new(),
            tab_off: vec![0],
            tab_h: Vec::new(),
        };
        for ((y, w), nd) in pos.into_iter().zip(data) {
            let Some(nd) = nd else { continue };
            r.y.push(y);
            r.w.push(w);
            r.delta.push(nd.delta);
            r.tc.push(nd.tc);
            r.finf2.push(nd.finf2);
            let c0 = nd.tc.max(nd.delta);
            r.const_tail.push(nd.finf2 * pow_k(c0, 1.0 - k) / (k - 1.0));
            r.pts.extend_from_slice(&nd.pts);
            r.pts_off.push(r.pts.len());
            r.tab.extend_from_slice(&nd.tab);
            r.tab_off.push(r.tab.len());
            r.tab_h.push(nd.h);
        }
        r
    }

    fn len(&self) -> usize {
        self.y.len()
    }

    /// ∫_{max(D,t_min)}^∞ F² t^{−k} dt at node i.
    #[inline]
    fn cone(&self, i: usize, dd: f64, k: f64) -> f64 {
        let delta = self.delta[i];
        let tc = self.tc[i];
        let lo = dd.max(delta);
        if lo >= tc {
            return self.finf2[i] * pow_k(lo, 1.0 - k) / (k - 1.0);
        }
        let tab = &self.tab[self.tab_off[i]..self.tab_off[i + 1]];
        let h = self.tab_h[i];
        let xi = (lo / delta).ln() / h;
        let j = (xi.floor() as usize).min(tab.len() - 2);
        let u = xi - j as f64;
        let (g0, m0) = tab[j];
        let (g1, m1) = tab[j + 1];
        let (u2, u3) = (u * u, u * u * u);
        let g = (2.0 * u3 - 3.0 * u2 + 1.0) * g0
            + (u3 - 2.0 * u2 + u) * h * m0
            + (-2.0 * u3 + 3.0 * u2) * g1
            + (u3 - u2) * h * m1;
        g + self.const_tail[i]
    }

    /// ∫_{t_min}^∞ F² (t/(t+D))^L t^{−k} dt at node i.
    #[inline]
    fn star(&self, i: usize, dd: f64, l: f64, wt: &WeightTail) -> f64 {
        let mut v = 0.0;
        for &(t, c) in &self.pts[self.pts_off[i]..self.pts_off[i + 1]] {
            v += c * pow_k(t / (t + dd), l);
        }
        let f2 = self.finf2[i];
        if f2 > 0.0 {
            v += f2 * wt.segment(self.tc[i].max(self.delta[i]), f64::INFINITY, dd);
        }
        v
    }

    fn sum<F: Fn(usize, f64) -> f64>(&self, x: &[f64], f: F) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.len() {
            let y = self.y[i];
            let dd = (y[0] - x[0]).hypot(y[1] - x[1]);
            acc += self.w[i] * f(i, dd);
        }
        acc
    }
}

/// Precomputed y-rules for one field, valid for x in (and near) a window.
pub struct Sweep {
    coarse: Rule,
    fine: Rule,
    k: f64,
    dim: usize,
    tail: f64,
    zero: bool,
}

impl Sweep {
    /// Lay down the rules for evaluation points in `window`.
    pub fn new(field: &dyn InnerField, window: &Rect, plan: &QuadPlan) -> Result<Self> {
        plan.validate()?;
        if field.dim() != 2 {
            return Err(Error::Domain("the sweep evaluator is planar only".into()));
        }
        let k = 2.0 + 2.0 * field.rho() + 1.0;
        let balls = field.support();
        let empty = || Rule::build(field, &[], (&[0.0, 0.0], 1.0), &COARSE, 1.0, k);
        if balls.is_empty() || field.far_bound() == 0.0 {
            return Ok(Self { coarse: empty(), fine: empty(), k, dim: 2, tail: 0.0, zero: true });
        }
        let min_r = balls.iter().map(|b| b.radius).fold(f64::INFINITY, f64::min);
        let t_min = plan.t_min.unwrap_or(1e-3 * min_r);
        let mut bb = *window;
        for b in &balls {
            bb = bb.union(&Rect::square([b.center[0], b.center[1]], b.radius));
        }
        let c = bb.center();
        // twice the extent of window and support together
        let h = bb.width().max(bb.height());
        let coarse = Rule::build(field, &balls, (&c, h), &COARSE, t_min, k);
        let fine = Rule::build(field, &balls, (&c, h), &FINE, t_min, k);
        // |y − c| = R beyond the sectors: F = 0 for t < R/2, |F| ≤ far_bound
        let big_r = FAR * h;
        let s = field.far_bound();
        let tail = 2.0 * PI * s * s * 2f64.powf(k - 1.0) * big_r.powf(3.0 - k) / ((k - 1.0) * (k - 3.0));
        Ok(Self { coarse, fine, k, dim: 2, tail, zero: false })
    }

    /// Nodes carrying a nonzero field in the coarse and fine rules.
    pub fn node_counts(&self) -> (usize, usize) {
        (self.coarse.len(), self.fine.len())
    }

    /// Squared operator value at x; `lambda` is ignored for the area integral.
    pub fn mu_sq(&self, tag: OperatorTag, x: &[f64], lambda: f64) -> Result<Estimate> {
        if x.len() != self.dim {
            return Err(Error::Domain(format!("point has {} coordinates, sweep is planar", x.len())));
        }
        if self.zero {
            return Ok(Estimate::exact(0.0));
        }
        let k = self.k;
        let (vc, vf) = match tag {
            OperatorTag::Area => (
                self.coarse.sum(x, |i, d| self.coarse.cone(i, d, k)),
                self.fine.sum(x, |i, d| self.fine.cone(i, d, k)),
            ),
            OperatorTag::Star => {
                if !(lambda > 1.0) {
                    return Err(Error::InvalidParams { constraint: format!("lambda = {lambda} must be > 1") });
                }
                let l = lambda * 2.0;
                let wt = WeightTail::get(l, k);
                (
                    self.coarse.sum(x, |i, d| self.coarse.star(i, d, l, &wt)),
                    self.fine.sum(x, |i, d| self.fine.star(i, d, l, &wt)),
                )
            }
        };
        Ok(Estimate::new(vf, (vf - vc).abs() + self.tail))
    }

    /// Operator value at x with its uncertainty.
    pub fn mu(&self, tag: OperatorTag, x: &[f64], lambda: f64) -> Result<Estimate> {
        Ok(self.mu_sq(tag, x, lambda)?.sqrt())
    }
}
