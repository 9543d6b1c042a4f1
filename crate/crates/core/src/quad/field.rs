//! The inner field F(y,t) = ∫_{|y−z|<t} Ω(y, y−z) |y−z|^{ρ−n} f(z) dz.
//!
//! For a fixed y the whole curve t ↦ F(y,t) is built at once. In polar
//! coordinates w = y − z = uθ the integrand is u^{ρ−1}·g(u) with
//! g(u) = ∫_{S} Ω(y,θ) f(y − uθ) dσ(θ), so F(y,t) = ∫_0^t u^{ρ−1} g(u) du.
//! The u-axis is cut into panels at the points where the sphere |y−z| = u
//! starts or stops meeting a block; on each panel F is known at Gauss nodes
//! (spectral integration) and interpolated in between.

use crate::atoms::{Ball, Source};
use crate::geom::{self, Vec3};
use crate::kernel::KernelSpec;
use crate::quad::rules::{barycentric_eval, GaussLegendre, PanelRule};
use crate::quad::QuadPlan;
use crate::{Error, Result};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

/// One radial panel with F at its ends and Gauss nodes.
#[derive(Debug, Clone)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    /// t = a + (b−a)·v² instead of a + (b−a)·v, v = (s+1)/2 (used on [0, ·])
    pub quadratic: bool,
    /// F at s = −1, the Gauss nodes, and s = +1
    pub values: Vec<f64>,
}

impl Panel {
    #[inline]
    fn t_at(&self, s: f64) -> f64 {
        let v = 0.5 * (s + 1.0);
        if self.quadratic {
            self.a + (self.b - self.a) * v * v
        } else {
            self.a + (self.b - self.a) * v
        }
    }

    #[inline]
    fn s_at(&self, t: f64) -> f64 {
        let v = ((t - self.a) / (self.b - self.a)).clamp(0.0, 1.0);
        let v = if self.quadratic { v.sqrt() } else { v };
        2.0 * v - 1.0
    }

    /// dt/ds at s
    #[inline]
    fn jac(&self, s: f64) -> f64 {
        if self.quadratic {
            (self.b - self.a) * 0.5 * (s + 1.0)
        } else {
            0.5 * (self.b - self.a)
        }
    }
}

/// t ↦ F(y,t) for one y. Zero before the first panel, constant `f_inf`
/// after the last one.
#[derive(Debug, Clone)]
pub struct Profile {
    pub panels: Vec<Panel>,
    pub f_inf: f64,
    rule: Arc<PanelRule>,
}

impl Profile {
    pub fn zero(radial_nodes: usize) -> Self {
        Self { panels: Vec::new(), f_inf: 0.0, rule: PanelRule::cached(radial_nodes) }
    }

    /// Below this F vanishes.
    pub fn t_start(&self) -> f64 {
        self.panels.first().map_or(f64::INFINITY, |p| p.a)
    }

    /// From here on F is constant.
    pub fn t_const(&self) -> f64 {
        self.panels.last().map_or(0.0, |p| p.b)
    }

    pub fn value(&self, t: f64) -> f64 {
        if self.panels.is_empty() || t <= self.t_start() {
            return 0.0;
        }
        if t >= self.t_const() {
            return self.f_inf;
        }
        let i = self.panels.partition_point(|p| p.b < t);
        let p = &self.panels[i.min(self.panels.len() - 1)];
        self.interp(p, p.s_at(t))
    }

    #[inline]
    fn interp(&self, p: &Panel, s: f64) -> f64 {
        barycentric_eval(&self.rule.ext_nodes, &self.rule.ext_weights, &p.values, s)
    }

    /// Largest |F| seen on nodes.
    pub fn sup_abs(&self) -> f64 {
        self.panels
            .iter()
            .flat_map(|p| p.values.iter())
            .fold(self.f_inf.abs(), |m, v| m.max(v.abs()))
    }

    /// ∫ F(t)² w(t) dt over [lo, min(hi, t_const)]; the constant part beyond
    /// `t_const` is left to the caller, who usually has it in closed form.
    pub fn integrate_sq<W: Fn(f64) -> f64>(&self, lo: f64, hi: f64, w: W) -> f64 {
        let mut total = 0.0;
        self.visit_sq(lo, hi, |t, c| total += c * w(t));
        total
    }

    /// Quadrature points (t, weight·F(t)²) of ∫_{lo}^{min(hi, t_const)} F² dt,
    /// laid out so that a steep weight near small t is still integrated well.
    pub fn visit_sq<V: FnMut(f64, f64)>(&self, lo: f64, hi: f64, mut visit: V) {
        let gl = &self.rule.gl;
        let m = gl.len();
        let start = self.panels.partition_point(|p| p.b <= lo);
        for p in &self.panels[start..] {
            if p.a >= hi {
                break;
            }
            let c0 = p.a.max(lo);
            let c1 = p.b.min(hi);
            if c1 <= c0 {
                continue;
            }
            if c0 == p.a && c1 == p.b && (p.a == 0.0 || c1 <= 4.0 * c0) {
                for q in 0..m {
                    let s = gl.nodes[q];
                    let f = p.values[q + 1];
                    visit(p.t_at(s), gl.weights[q] * p.jac(s) * f * f);
                }
            } else if p.quadratic && c0 == p.a {
                // piece starting at 0: keep the quadratic map
                for q in 0..m {
                    let v = 0.5 * (gl.nodes[q] + 1.0);
                    let t = c0 + (c1 - c0) * v * v;
                    let f = self.interp(p, p.s_at(t));
                    visit(t, gl.weights[q] * (c1 - c0) * v * f * f);
                }
            } else {
                // fresh Gauss rules on geometric sub-pieces (ratio ≤ 4),
                // F interpolated; the weight may be steep near small t
                let pieces = if c0 > 0.0 { ((c1 / c0).ln() / 4f64.ln()).ceil().max(1.0) as usize } else { 1 };
                let ratio = if pieces > 1 { (c1 / c0).powf(1.0 / pieces as f64) } else { 1.0 };
                let mut a = c0;
                for j in 0..pieces {
                    let b = if j + 1 == pieces { c1 } else { a * ratio };
                    let h = 0.5 * (b - a);
                    for q in 0..m {
                        let t = a + h * (gl.nodes[q] + 1.0);
                        let f = self.interp(p, p.s_at(t));
                        visit(t, gl.weights[q] * h * f * f);
                    }
                    a = b;
                }
            }
        }
    }
}

/// Anything that can produce radial profiles of an inner field.
pub trait InnerField: Send + Sync {
    fn dim(&self) -> usize;
    fn rho(&self) -> f64;
    fn profile(&self, y: &Vec3) -> Profile;
    /// Balls covering the support of the source (empty: unknown / everywhere).
    fn support(&self) -> Vec<Ball>;
    /// Upper bound for sup_y |F(y, ∞)|.
    fn far_bound(&self) -> f64;
    /// F(y,t) = 0 for t ≤ this.
    fn dist_to_support(&self, y: &Vec3) -> f64 {
        self.support()
            .iter()
            .map(|b| geom::norm(&geom::sub(y, &b.center)) - b.radius)
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }
}

fn check_rho(dim: usize, rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < dim as f64) {
        return Err(Error::Domain(format!("rho = {rho} outside (0, {dim})")));
    }
    Ok(())
}

/// Field of a [`Source`] under a kernel.
pub struct SourceField {
    kernel: KernelSpec,
    source: Source,
    rho: f64,
    radial_nodes: usize,
    arc: Arc<GaussLegendre>,
    arc_nodes: usize,
    balls: Vec<Ball>,
    dist_balls: Vec<Ball>,
    far_bound: f64,
    /// panels from t = 0 are graded geometrically down to this radius
    grade_floor: f64,
    cache: Option<Mutex<HashMap<[u64; 3], Arc<Profile>>>>,
}

/// Cap on the number of cached profiles; the cache is cleared when full.
const CACHE_CAP: usize = 1 << 16;

impl SourceField {
    pub fn new(kernel: &KernelSpec, source: &Source, rho: f64, plan: &QuadPlan) -> Result<Self> {
        let dim = kernel.dim();
        if source.dim != dim {
            return Err(Error::Domain(format!(
                "kernel lives in R^{dim}, source in R^{}",
                source.dim
            )));
        }
        check_rho(dim, rho)?;
        let mut blocks = source.clone();
        blocks.blocks.retain(|b| b.amplitude != 0.0);
        let balls: Vec<Ball> = blocks
            .blocks
            .iter()
            .map(|b| Ball { center: b.center, radius: b.radius })
            .collect();
        // rigorous: |F(y,∞)| ≤ ‖Ω‖∞ Σ ‖a_i‖∞ |S| r_i^ρ / ρ
        let omega_sup = kernel.coeff_sup()
            * match kernel.angular() {
                Some(a) => {
                    let r = crate::quad::sphere::SphereRule::new(dim, 512);
                    1.05 * r.dirs.iter().map(|d| a.eval(d).abs()).fold(0.0, f64::max)
                }
                None => 1.0,
            };
        let far_bound = omega_sup
            * blocks
                .blocks
                .iter()
                .map(|b| {
                    let a_sup = b.amplitude.abs()
                        * b.poly.terms.iter().map(|(_, c)| c.abs()).sum::<f64>();
                    a_sup * geom::sphere_area(dim) * b.radius.powf(rho) / rho
                })
                .sum::<f64>();
        let arc_nodes = plan.sphere_order.max(4);
        let min_r = balls.iter().map(|b| b.radius).fold(f64::INFINITY, f64::min);
        let grade_floor = 0.5 * plan.t_min.unwrap_or(if min_r.is_finite() { 1e-3 * min_r } else { 1e-3 });
        Ok(Self {
            grade_floor,
            kernel: kernel.clone(),
            dist_balls: balls.clone(),
            balls,
            source: blocks,
            rho,
            radial_nodes: plan.radial_nodes.max(2),
            arc: GaussLegendre::cached(arc_nodes),
            arc_nodes,
            far_bound,
            cache: None,
        })
    }

    /// Memoize profiles keyed by the exact bits of y (values are
    /// deterministic, so sharing between threads is harmless).
    pub fn with_cache(mut self) -> Self {
        self.cache = Some(Mutex::new(HashMap::new()));
        self
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    fn build(&self, y: &Vec3) -> Profile {
        let rule = PanelRule::cached(self.radial_nodes);
        let m = rule.order();
        let dim = self.kernel.dim();
        if self.source.blocks.is_empty() {
            return Profile::zero(self.radial_nodes);
        }
        // per-block geometry and radial breakpoints
        struct Geo {
            e: f64,
            axis: Vec3,
            lo: f64,
            hi: f64,
        }
        let mut geo = Vec::with_capacity(self.source.blocks.len());
        let mut breaks: Vec<f64> = Vec::new();
        for b in &self.source.blocks {
            let d = geom::sub(y, &b.center);
            let e = geom::norm(&d);
            let r = b.radius;
            let axis = if e > 0.0 { geom::scale(&d, 1.0 / e) } else { [1.0, 0.0, 0.0] };
            let levels = if b.bump_power >= 2 { 2 } else { 4 };
            let (lo, hi) = if e < r { (0.0, r + e) } else { (e - r, e + r) };
            breaks.push(lo);
            breaks.push(hi);
            // start of the partial-overlap range, graded toward its lower end
            let p0 = (r - e).abs();
            let len = hi - p0;
            if e < r && p0 > 0.0 {
                breaks.push(p0);
                // near t = 0 F is tiny yet weighted by t^{-k}: keep its
                // relative accuracy with panels [q/4, q]
                let mut q = 0.25 * p0;
                while q > self.grade_floor {
                    breaks.push(q);
                    q *= 0.25;
                }
            }
            for j in 1..=levels {
                let w = len * 0.25f64.powi(j);
                breaks.push(p0 + w);
                if b.bump_power < 2 {
                    breaks.push(hi - w);
                }
            }
            geo.push(Geo { e, axis, lo, hi });
        }
        breaks.sort_by(f64::total_cmp);
        let scale = *breaks.last().unwrap();
        breaks.dedup_by(|b, a| *b - *a <= 1e-13 * scale);

        let coef = self.kernel.coefficient_at(y);
        let mut panels = Vec::with_capacity(breaks.len());
        let mut f0 = 0.0;
        let mut h = vec![0.0; m];
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let mut p = Panel { a, b, quadratic: a == 0.0, values: Vec::with_capacity(m + 2) };
            let active: Vec<usize> = (0..geo.len())
                .filter(|&i| geo[i].lo < mid && mid < geo[i].hi)
                .collect();
            p.values.push(f0);
            if active.is_empty() {
                p.values.extend(std::iter::repeat(f0).take(m + 1));
                panels.push(p);
                continue;
            }
            for q in 0..m {
                let s = rule.gl.nodes[q];
                let u = p.t_at(s);
                let mut g = 0.0;
                for &i in &active {
                    g += self.sphere_sum(i, y, geo[i].e, &geo[i].axis, u, coef, dim);
                }
                h[q] = u.powf(self.rho - 1.0) * g * p.jac(s);
            }
            for j in 0..m {
                let row = &rule.integ[j * m..(j + 1) * m];
                p.values.push(f0 + row.iter().zip(&h).map(|(c, v)| c * v).sum::<f64>());
            }
            f0 += rule.gl.weights.iter().zip(&h).map(|(c, v)| c * v).sum::<f64>();
            p.values.push(f0);
            panels.push(p);
        }
        Profile { panels, f_inf: f0, rule }
    }

    /// ∫_{S} Ω(y,θ) a_i(y − uθ) dσ(θ) restricted to where the sphere meets block i.
    fn sphere_sum(
        &self,
        i: usize,
        y: &Vec3,
        e: f64,
        axis: &Vec3,
        u: f64,
        coef: Option<f64>,
        dim: usize,
    ) -> f64 {
        let blk = &self.source.blocks[i];
        let r = blk.radius;
        // θ·axis > κ is the part of the sphere inside the block
        let kappa = if e > 0.0 { (e * e + u * u - r * r) / (2.0 * u * e) } else { f64::NEG_INFINITY };
        if kappa >= 1.0 {
            return 0.0;
        }
        let omega = |dir: &Vec3| match coef {
            Some(c) => c * self.kernel.angular_at(dir).unwrap_or(0.0),
            None => self.kernel.omega_unit(y, dir),
        };
        let point = |dir: &Vec3| {
            [y[0] - u * dir[0], y[1] - u * dir[1], y[2] - u * dir[2]]
        };
        let gl = &self.arc;
        if dim == 2 {
            let phi_v = axis[1].atan2(axis[0]);
            if kappa <= -1.0 {
                let n = 2 * self.arc_nodes;
                let w = 2.0 * PI / n as f64;
                let mut s = 0.0;
                for j in 0..n {
                    let th = phi_v + w * j as f64;
                    let dir = [th.cos(), th.sin(), 0.0];
                    s += omega(&dir) * blk.value(&point(&dir));
                }
                return s * w;
            }
            let half = kappa.acos();
            let mut s = 0.0;
            for (x, wq) in gl.nodes.iter().zip(&gl.weights) {
                let th = phi_v + half * x;
                let dir = [th.cos(), th.sin(), 0.0];
                s += wq * omega(&dir) * blk.value(&point(&dir));
            }
            s * half
        } else {
            let (e1, e2) = geom::frame(axis);
            let c_lo = kappa.max(-1.0);
            let n_az = self.arc_nodes;
            let w_az = 2.0 * PI / n_az as f64;
            let hc = 0.5 * (1.0 - c_lo);
            let mut s = 0.0;
            for (x, wq) in gl.nodes.iter().zip(&gl.weights) {
                let c = c_lo + hc * (x + 1.0);
                let sn = (1.0 - c * c).max(0.0).sqrt();
                for j in 0..n_az {
                    let ph = w_az * (j as f64 + 0.5);
                    let (sp, cp) = ph.sin_cos();
                    let dir = [
                        c * axis[0] + sn * (cp * e1[0] + sp * e2[0]),
                        c * axis[1] + sn * (cp * e1[1] + sp * e2[1]),
                        c * axis[2] + sn * (cp * e1[2] + sp * e2[2]),
                    ];
                    s += wq * omega(&dir) * blk.value(&point(&dir));
                }
            }
            s * hc * w_az
        }
    }
}

impl InnerField for SourceField {
    fn dim(&self) -> usize {
        self.kernel.dim()
    }

    fn rho(&self) -> f64 {
        self.rho
    }

    fn profile(&self, y: &Vec3) -> Profile {
        match &self.cache {
            None => self.build(y),
            Some(cache) => {
                let key = [y[0].to_bits(), y[1].to_bits(), y[2].to_bits()];
                if let Some(p) = cache.lock().expect("profile cache poisoned").get(&key) {
                    return (**p).clone();
                }
                let p = Arc::new(self.build(y));
                let mut guard = cache.lock().expect("profile cache poisoned");
                if guard.len() >= CACHE_CAP {
                    guard.clear();
                }
                guard.insert(key, p.clone());
                (*p).clone()
            }
        }
    }

    fn support(&self) -> Vec<Ball> {
        self.balls.clone()
    }

    fn far_bound(&self) -> f64 {
        self.far_bound
    }

    fn dist_to_support(&self, y: &Vec3) -> f64 {
        let mut d = f64::INFINITY;
        for b in &self.dist_balls {
            let v = geom::sub(y, &b.center);
            d = d.min(geom::norm(&v) - b.radius);
        }
        d.max(0.0)
    }
}

pub type FieldFn = Arc<dyn Fn(&Vec3, f64) -> f64 + Send + Sync>;
pub type BreaksFn = Arc<dyn Fn(&Vec3) -> Vec<f64> + Send + Sync>;

/// A field given directly as a function F(y,t), for synthetic checks.
/// `breaks(y)` lists the t-values where F(y,·) may be nonsmooth; F is taken
/// constant after the last one.
#[derive(Clone)]
pub struct FnField {
    pub dim: usize,
    pub rho: f64,
    pub f: FieldFn,
    pub breaks: BreaksFn,
    pub support: Vec<Ball>,
    pub far_bound: f64,
    pub radial_nodes: usize,
}

impl FnField {
    /// F(y,t) = g(t) for every y, smooth between the given breaks.
    pub fn radial(dim: usize, rho: f64, g: impl Fn(f64) -> f64 + Send + Sync + 'static, breaks: Vec<f64>, far_bound: f64) -> Self {
        Self {
            dim,
            rho,
            f: Arc::new(move |_, t| g(t)),
            breaks: Arc::new(move |_| breaks.clone()),
            support: Vec::new(),
            far_bound,
            radial_nodes: 16,
        }
    }
}

impl InnerField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rho(&self) -> f64 {
        self.rho
    }

    fn profile(&self, y: &Vec3) -> Profile {
        let rule = PanelRule::cached(self.radial_nodes);
        let mut br = (self.breaks)(y);
        br.retain(|t| *t >= 0.0 && t.is_finite());
        br.sort_by(f64::total_cmp);
        br.dedup();
        let mut panels = Vec::new();
        for w in br.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut p = Panel { a, b, quadratic: a == 0.0, values: Vec::new() };
            let eps = 1e-12 * (b - a);
            p.values.push((self.f)(y, a + eps));
            for s in &rule.gl.nodes {
                p.values.push((self.f)(y, p.t_at(*s)));
            }
            p.values.push((self.f)(y, b - eps));
            panels.push(p);
        }
        let f_inf = match br.last() {
            Some(&t) => (self.f)(y, t * (1.0 + 1e-9) + 1e-300),
            None => 0.0,
        };
        Profile { panels, f_inf, rule }
    }

    fn support(&self) -> Vec<Ball> {
        self.support.clone()
    }

    fn far_bound(&self) -> f64 {
        self.far_bound
    }

    fn dist_to_support(&self, y: &Vec3) -> f64 {
        if self.support.is_empty() {
            return 0.0;
        }
        self.support
            .iter()
            .map(|b| geom::norm(&geom::sub(y, &b.center)) - b.radius)
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }
}

/// F(y,t) for a single (y,t).
pub fn inner_integral(
    kernel: &KernelSpec,
    f: &Source,
    y: &[f64],
    t: f64,
    rho: f64,
    plan: &QuadPlan,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t = {t} must be positive")));
    }
    if y.len() != kernel.dim() {
        return Err(Error::Domain(format!("y has {} coordinates, expected {}", y.len(), kernel.dim())));
    }
    let field = SourceField::new(kernel, f, rho, plan)?;
    Ok(field.profile(&geom::to_vec3(y)).value(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{build_atom, Ball, Shape};
    use crate::kernel::builtin;
    use approx::assert_relative_eq;

    /// Midpoint sums in polar coordinates about y (u = v² near 0), an
    /// independent brute-force for F(y,t) in 2-D.
    pub(crate) fn polar_midpoint(kernel: &KernelSpec, f: &Source, y: &Vec3, t: f64, rho: f64, nv: usize, nth: usize) -> f64 {
        let vmax = t.sqrt();
        let dv = vmax / nv as f64;
        let dth = 2.0 * PI / nth as f64;
        let mut s = 0.0;
        for i in 0..nv {
            let v = (i as f64 + 0.5) * dv;
            let u = v * v;
            let radial = u.powf(rho - 1.0) * 2.0 * v * dv;
            let mut ang = 0.0;
            for j in 0..nth {
                let th = (j as f64 + 0.5) * dth;
                let dir = [th.cos(), th.sin(), 0.0];
                let z = [y[0] - u * dir[0], y[1] - u * dir[1], 0.0];
                let fz = f.value(&z);
                if fz != 0.0 {
                    ang += kernel.omega_unit(y, &dir) * fz;
                }
            }
            s += radial * ang * dth;
        }
        s
    }

    fn standard_atom() -> Source {
        build_atom(2, 1.0, Ball::new(&[0.0, 0.0], 1.0), &Shape::radial_bump(), 1)
            .unwrap()
            .source()
    }

    #[test]
    fn empty_intersection_gives_zero() {
        let k = builtin("circle-harmonic-1").unwrap();
        let f = standard_atom();
        let plan = QuadPlan::default();
        assert_eq!(inner_integral(&k, &f, &[5.0, 0.0], 3.0, 1.5, &plan).unwrap(), 0.0);
        assert!(inner_integral(&k, &f, &[5.0, 0.0], 0.0, 1.5, &plan).is_err());
    }

    #[test]
    fn constant_kernel_on_disc_closed_form() {
        // Ω ≡ 1, f ≡ 1 on a disc containing B(y,t): F = 2π t^ρ/ρ
        // (graded panels interpolate t^ρ to ~1e-8)
        let k = builtin("test-constant").unwrap();
        let f = Source::indicator(2, &[0.0, 0.0], 10.0, 1.0);
        let plan = QuadPlan::default();
        for t in [0.1, 0.7, 2.0] {
            let v = inner_integral(&k, &f, &[0.3, -0.2], t, 1.5, &plan).unwrap();
            assert_relative_eq!(v, 4.0 * PI / 3.0 * t.powf(1.5), max_relative = 1e-7);
        }
    }

    #[test]
    fn atom_field_matches_polar_midpoint_oracle() {
        let k = builtin("circle-harmonic-1").unwrap();
        let f = standard_atom();
        let plan = QuadPlan::default();
        let y = [0.3, 0.0, 0.0];
        let v = inner_integral(&k, &f, &[0.3, 0.0], 0.7, 1.5, &plan).unwrap();
        let o = polar_midpoint(&k, &f, &y, 0.7, 1.5, 1600, 1600);
        assert!((v - o).abs() <= 1e-3 * o.abs(), "{v} vs {o}");
        // the full curve, off-axis and outside the support
        let field = SourceField::new(&k, &f, 1.5, &plan).unwrap();
        for y in [[0.3, 0.4, 0.0], [1.6, -0.5, 0.0], [0.0, 0.0, 0.0]] {
            let prof = field.profile(&y);
            for t in [0.2, 0.9, 1.7, 3.0] {
                let o = polar_midpoint(&k, &f, &y, t, 1.5, 800, 800);
                let v = prof.value(t);
                assert!((v - o).abs() <= 2e-3 * prof.sup_abs().max(1e-12), "y {y:?} t {t}: {v} vs {o}");
            }
        }
    }

    #[test]
    fn profile_structure() {
        let k = builtin("circle-harmonic-1").unwrap();
        let f = standard_atom();
        let field = SourceField::new(&k, &f, 1.5, &QuadPlan::default()).unwrap();
        let y = [3.0, 1.0, 0.0];
        let p = field.profile(&y);
        let e = 10f64.sqrt();
        assert_relative_eq!(p.t_start(), e - 1.0, max_relative = 1e-14);
        assert_relative_eq!(p.t_const(), e + 1.0, max_relative = 1e-14);
        assert_eq!(p.value(e - 1.0), 0.0);
        assert_eq!(p.value(100.0), p.f_inf);
        // continuity across panel joints
        for w in p.panels.windows(2) {
            assert_eq!(w[0].values.last(), w[1].values.first());
        }
        assert!(p.f_inf.abs() <= field.far_bound());
    }

    #[test]
    fn three_dimensional_constant_kernel() {
        // Ω ≡ 1 in 3-D, f ≡ 1 on a big ball: F = 4π t^ρ/ρ
        let k = KernelSpec::separable(
            "const3",
            3,
            crate::kernel::Coefficient::Constant(1.0),
            crate::kernel::Angular::Constant(1.0),
        )
        .exempt();
        let f = Source::indicator(3, &[0.0, 0.0, 0.0], 5.0, 1.0);
        let v = inner_integral(&k, &f, &[0.5, 0.0, 0.2], 1.2, 2.0, &QuadPlan::default()).unwrap();
        assert_relative_eq!(v, 4.0 * PI * 1.44 / 2.0, max_relative = 1e-10);
    }

    #[test]
    fn cached_profiles_are_identical() {
        let k = builtin("circle-harmonic-1").unwrap();
        let f = standard_atom();
        let plan = QuadPlan::default();
        let a = SourceField::new(&k, &f, 1.5, &plan).unwrap();
        let b = SourceField::new(&k, &f, 1.5, &plan).unwrap().with_cache();
        let y = [0.2, 0.9, 0.0];
        for _ in 0..2 {
            assert_eq!(a.profile(&y).value(1.3).to_bits(), b.profile(&y).value(1.3).to_bits());
        }
    }

    #[test]
    fn fn_field_profile() {
        let f = FnField::radial(2, 1.5, |t: f64| if t < 1.0 { t.powf(1.5) } else { 0.0 }, vec![0.0, 1.0], 0.0);
        let p = f.profile(&[0.0; 3]);
        assert_relative_eq!(p.value(0.5), 0.5f64.powf(1.5), max_relative = 1e-12);
        assert_eq!(p.value(2.0), 0.0);
        assert_eq!(p.f_inf, 0.0);
    }

    proptest::proptest! {
        #[test]
        fn field_is_homogeneous_in_f(c in -4.0f64..4.0, yx in -2.0f64..2.0, yy in -2.0f64..2.0, t in 0.05f64..4.0) {
            let k = builtin("circle-harmonic-2").unwrap();
            let f = standard_atom();
            let plan = QuadPlan::default();
            let a = inner_integral(&k, &f, &[yx, yy], t, 1.5, &plan).unwrap();
            let b = inner_integral(&k, &f.scaled(c), &[yx, yy], t, 1.5, &plan).unwrap();
            proptest::prop_assert!((b - c * a).abs() <= 1e-12 * (1.0 + a.abs() * c.abs()));
        }
    }
}
