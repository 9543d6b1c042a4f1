use super::{Form, KernelSpec};
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::quad::rules::GaussLegendre;
use crate::quad::sphere::SphereRule;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// How a modulus table was estimated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusMeta {
    /// nodes along a great circle for the outer z′ rule
    pub outer_order: usize,
    /// cap search spacing = outer spacing / cap_refinement
    pub cap_refinement: usize,
    /// x and r samples for non-separable kernels
    pub x_samples: Vec<Vec3>,
    pub r_samples: Vec<f64>,
    /// cap suprema come from a discrete search, so values are lower bounds
    pub one_sided: bool,
}

impl ModulusMeta {
    pub fn new(dim: usize) -> Self {
        let (outer_order, cap_refinement) = if dim == 2 { (256, 10) } else { (24, 3) };
        Self {
            outer_order,
            cap_refinement,
            x_samples: vec![[0.0; 3]],
            r_samples: vec![0.0],
            one_sided: true,
        }
    }

    pub fn with_refinement(mut self, cap_refinement: usize) -> Self {
        self.cap_refinement = cap_refinement.max(1);
        self
    }
}

/// ω₂ sampled on an increasing δ grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusTable {
    pub delta_grid: Vec<f64>,
    pub omega2_values: Vec<f64>,
    pub meta: Option<ModulusMeta>,
}

/// Geometric grid from 2^{-20} to `top` with `points` entries.
pub fn default_delta_grid(points: usize, top: f64) -> Vec<f64> {
    let lo = (2.0f64).powi(-20).ln();
    let hi = top.ln();
    (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

impl ModulusTable {
    /// A table from given values (made monotone by running max).
    pub fn from_values(delta_grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_grid(&delta_grid)?;
        if values.len() != delta_grid.len() || values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Domain("modulus values must be nonnegative, one per δ".into()));
        }
        Ok(Self { delta_grid, omega2_values: running_max(values), meta: None })
    }

    pub fn len(&self) -> usize {
        self.delta_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta_grid.is_empty()
    }

    /// Power-law fit of ω₂ on the 8 smallest grid points: (exponent, prefactor).
    /// A table vanishing there reports an infinite exponent.
    pub fn small_delta_power(&self) -> Result<(f64, f64)> {
        if self.len() < 3 {
            return Err(Error::Fit("modulus table shorter than 3 points".into()));
        }
        let k = self.len().min(8);
        let pts: Vec<(f64, f64)> = self.delta_grid[..k]
            .iter()
            .zip(&self.omega2_values[..k])
            .filter(|(_, &w)| w > 0.0)
            .map(|(&d, &w)| (d.ln(), w.ln()))
            .collect();
        if pts.len() < 2 {
            return Ok((f64::INFINITY, 0.0));
        }
        let (slope, intercept) = least_squares(&pts);
        Ok((slope, intercept.exp()))
    }

    /// Log-log interpolation; power-law extrapolation below the grid and
    /// constant continuation above it.
    pub fn value_at(&self, delta: f64) -> f64 {
        let g = &self.delta_grid;
        let v = &self.omega2_values;
        if delta <= g[0] {
            return match self.small_delta_power() {
                Ok((p, _)) if p.is_finite() => v[0] * (delta / g[0]).powf(p),
                _ => v[0],
            };
        }
        if delta >= g[g.len() - 1] {
            return v[v.len() - 1];
        }
        let i = g.partition_point(|&x| x <= delta);
        interp(g[i - 1], v[i - 1], g[i], v[i], delta)
    }
}

fn interp(d0: f64, w0: f64, d1: f64, w1: f64, d: f64) -> f64 {
    if w0 > 0.0 && w1 > 0.0 {
        let s = (d / d0).ln() / (d1 / d0).ln();
        (w0.ln() + s * (w1 / w0).ln()).exp()
    } else {
        w0 + (w1 - w0) * (d - d0) / (d1 - d0)
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Domain("empty δ grid".into()));
    }
    if grid.iter().any(|&d| !(d > 0.0 && d <= 2.0)) {
        return Err(Error::Domain("δ grid must lie in (0, 2]".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("δ grid must be strictly increasing".into()));
    }
    Ok(())
}

fn running_max(mut v: Vec<f64>) -> Vec<f64> {
    let mut m: f64 = 0.0;
    for x in v.iter_mut() {
        m = m.max(*x);
        *x = m;
    }
    v
}

pub(crate) fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Candidate points y′ in the cap {|y′ − z′| ≤ δ}, spaced by at most `h`
/// in angle, including the cap rim.
fn cap_candidates(dim: usize, z: &Vec3, delta: f64, h: f64, out: &mut Vec<Vec3>) {
    out.clear();
    let eta = 2.0 * (0.5 * delta.min(2.0)).asin();
    if dim == 2 {
        let phi = z[1].atan2(z[0]);
        let k = (eta / h).ceil().max(1.0) as i64;
        for i in -k..=k {
            let a = phi + eta * i as f64 / k as f64;
            out.push([a.cos(), a.sin(), 0.0]);
        }
    } else {
        let (e1, e2) = geom::frame(z);
        out.push(*z);
        let rings = (eta / h).ceil().max(1.0) as usize;
        for i in 1..=rings {
            let g = eta * i as f64 / rings as f64;
            let (sg, cg) = g.sin_cos();
            let naz = ((2.0 * PI * sg / h).ceil() as usize).max(6);
            for j in 0..naz {
                let a = 2.0 * PI * j as f64 / naz as f64;
                let (sa, ca) = a.sin_cos();
                out.push([
                    cg * z[0] + sg * (ca * e1[0] + sa * e2[0]),
                    cg * z[1] + sg * (ca * e1[1] + sa * e2[1]),
                    cg * z[2] + sg * (ca * e1[2] + sa * e2[2]),
                ]);
            }
        }
    }
}

/// ω₂(δ) on `delta_grid`.
pub fn omega2(kernel: &KernelSpec, delta_grid: &[f64], meta: &ModulusMeta) -> Result<ModulusTable> {
    check_grid(delta_grid)?;
    let dim = kernel.dim();
    let rule = SphereRule::new(dim, meta.outer_order);
    let h = 2.0 * PI / (meta.outer_order as f64 * meta.cap_refinement as f64);
    let values: Vec<f64> = delta_grid
        .par_iter()
        .map(|&delta| {
            let mut cand = Vec::new();
            match &kernel.form {
                Form::Separable { angular, .. } => {
                    let mut s = 0.0;
                    for (z, w) in rule.dirs.iter().zip(&rule.weights) {
                        cap_candidates(dim, z, delta, h, &mut cand);
                        let yz = angular.eval(z);
                        let sup = cand.iter().map(|y| (angular.eval(y) - yz).abs()).fold(0.0, f64::max);
                        s += w * sup * sup;
                    }
                    kernel.coeff_sup() * s.sqrt()
                }
                Form::General { .. } => {
                    let mut best: f64 = 0.0;
                    for x in &meta.x_samples {
                        for &r in &meta.r_samples {
                            let mut s = 0.0;
                            for (z, w) in rule.dirs.iter().zip(&rule.weights) {
                                let p = geom::add(x, &geom::scale(z, r));
                                cap_candidates(dim, z, delta, h, &mut cand);
                                let oz = kernel.omega_unit(&p, z);
                                let sup = cand
                                    .iter()
                                    .map(|y| (kernel.omega_unit(&p, y) - oz).abs())
                                    .fold(0.0, f64::max);
                                s += w * sup * sup;
                            }
                            best = best.max(s.sqrt());
                        }
                    }
                    best
                }
            }
        })
        .collect();
    Ok(ModulusTable {
        delta_grid: delta_grid.to_vec(),
        omega2_values: running_max(values),
        meta: Some(meta.clone()),
    })
}

/// A Dini-type integral, possibly divergent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiniOutcome {
    /// +∞ when divergent
    pub value: f64,
    pub divergent: bool,
    /// fitted exponent of ω₂ near 0
    pub fitted_power: f64,
}

/// ∫ over the table range (clipped to (0,1]) of ω₂(e^s)·g(s) ds, with
/// s = ln δ, log-log interpolation between grid points.
fn segment_integral<G: Fn(f64) -> f64>(table: &ModulusTable, g: G) -> f64 {
    let gl = GaussLegendre::cached(8);
    let d = &table.delta_grid;
    let w = &table.omega2_values;
    let mut total = 0.0;
    for i in 0..d.len() - 1 {
        let (a, b) = (d[i], d[i + 1].min(1.0));
        if a >= b {
            break;
        }
        total += gl.integrate(a.ln(), b.ln(), |s| interp(d[i], w[i], d[i + 1], w[i + 1], s.exp()) * g(s));
    }
    let last = d[d.len() - 1];
    if last < 1.0 {
        let wl = w[w.len() - 1];
        total += gl.integrate(last.ln(), 0.0, |s| wl * g(s));
    }
    total
}

/// ∫₀¹ ω₂(δ)/δ^{1+α} dδ.
pub fn dini_integral(table: &ModulusTable, alpha: f64) -> Result<DiniOutcome> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} outside (0, 1]")));
    }
    let (power, _) = table.small_delta_power()?;
    let d0 = table.delta_grid[0];
    let w0 = table.omega2_values[0];
    if w0 > 0.0 && power <= alpha {
        return Ok(DiniOutcome { value: f64::INFINITY, divergent: true, fitted_power: power });
    }
    let body = segment_integral(table, |s| (-alpha * s).exp());
    let tail = if w0 > 0.0 && power.is_finite() { w0 * d0.powf(-alpha) / (power - alpha) } else { 0.0 };
    Ok(DiniOutcome { value: body + tail, divergent: false, fitted_power: power })
}

/// ∫₀¹ ω₂(δ)/δ·(1 + |log δ|)^σ dδ.
pub fn log_dini_integral(table: &ModulusTable, sigma: f64) -> Result<DiniOutcome> {
    if !(sigma > 1.0) {
        return Err(Error::Domain(format!("sigma = {sigma} must exceed 1")));
    }
    let (power, _) = table.small_delta_power()?;
    let d0 = table.delta_grid[0];
    let w0 = table.omega2_values[0];
    if w0 > 0.0 && power <= 0.0 {
        return Ok(DiniOutcome { value: f64::INFINITY, divergent: true, fitted_power: power });
    }
    let body = segment_integral(table, |s| (1.0 + s.abs()).powf(sigma));
    let tail = if w0 > 0.0 && power.is_finite() {
        // ω₀/γ ∫₀^∞ e^{-v} (1 − s₀ + v/γ)^σ dv
        let s0 = d0.ln();
        let gl = GaussLegendre::cached(12);
        let mut t = 0.0;
        for p in 0..40 {
            let (a, b) = (2.0 * p as f64, 2.0 * (p + 1) as f64);
            t += gl.integrate(a, b, |v| (-v).exp() * (1.0 - s0 + v / power).powf(sigma));
        }
        w0 / power * t
    } else {
        0.0
    };
    Ok(DiniOutcome { value: body + tail, divergent: false, fitted_power: power })
}

#[cfg(test)]
mod tests {
    use super::super::builtin;
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn identity_table() -> ModulusTable {
        let g = default_delta_grid(64, 1.0);
        ModulusTable::from_values(g.clone(), g).unwrap()
    }

    #[test]
    fn closed_form_dini_values() {
        let t = identity_table();
        let d = dini_integral(&t, 0.5).unwrap();
        assert!(!d.divergent);
        assert!((d.value - 2.0).abs() < 1e-9, "{}", d.value);
        assert!(dini_integral(&t, 1.0).unwrap().divergent);
        let l = log_dini_integral(&t, 2.0).unwrap();
        assert!((l.value - 5.0).abs() < 1e-9, "{}", l.value);
        let zero = ModulusTable::from_values(t.delta_grid.clone(), vec![0.0; 64]).unwrap();
        assert_eq!(log_dini_integral(&zero, 2.0).unwrap().value, 0.0);
        assert_eq!(dini_integral(&zero, 0.5).unwrap().value, 0.0);
        let short = ModulusTable::from_values(vec![0.5, 1.0], vec![0.5, 1.0]).unwrap();
        assert!(dini_integral(&short, 0.5).is_err());
    }

    #[test]
    fn constant_angular_part_has_zero_modulus() {
        let k = builtin("test-constant").unwrap();
        let t = omega2(&k, &default_delta_grid(16, 1.0), &ModulusMeta::new(2)).unwrap();
        assert!(t.omega2_values.iter().all(|&v| v == 0.0));
        assert!(matches!(omega2(&k, &[], &ModulusMeta::new(2)), Err(Error::Domain(_))));
    }

    /// Independent oracle for Y = z′₁: fine uniform outer grid, 10× finer cap
    /// search, plain loops without shared helpers.
    fn brute_force_cos_modulus(delta: f64, outer: usize, refine: usize) -> f64 {
        let eta = 2.0 * (0.5 * delta).asin();
        let h = 2.0 * PI / (outer * refine) as f64;
        let k = (eta / h).ceil() as usize;
        let mut s = 0.0;
        for j in 0..outer {
            let phi = 2.0 * PI * j as f64 / outer as f64;
            let mut sup: f64 = 0.0;
            for i in 0..=2 * k {
                let a = phi - eta + eta * i as f64 / k as f64;
                sup = sup.max((a.cos() - phi.cos()).abs());
            }
            s += sup * sup * 2.0 * PI / outer as f64;
        }
        s.sqrt()
    }

    #[test]
    fn modulus_matches_brute_force_at_delta_tenth() {
        let k = builtin("circle-harmonic-1").unwrap();
        let t = omega2(&k, &[0.1], &ModulusMeta::new(2)).unwrap();
        let v = t.omega2_values[0];
        assert!(v > 0.0 && v <= (2.0 * PI).sqrt() * 0.1);
        let o = brute_force_cos_modulus(0.1, 256, 100);
        assert!((v - o).abs() <= 0.05 * o, "{v} vs {o}");
    }

    #[test]
    fn separable_factorization_and_sandwich() {
        let k = builtin("circle-harmonic-1-sinusoidal").unwrap();
        let base = builtin("circle-harmonic-1").unwrap();
        let g = default_delta_grid(12, 1.0);
        let meta = ModulusMeta::new(2);
        let a = omega2(&k, &g, &meta).unwrap();
        let b = omega2(&base, &g, &meta).unwrap();
        for (x, y) in a.omega2_values.iter().zip(&b.omega2_values) {
            assert_relative_eq!(*x, 1.5 * y, max_relative = 1e-12);
        }
        // ω₂(δ) ≤ C·|S¹|^{1/2}·coeff_sup·δ^α
        let (alpha, c) = k.lipschitz.unwrap();
        for (d, w) in a.delta_grid.iter().zip(&a.omega2_values) {
            assert!(*w <= c * (2.0 * PI).sqrt() * k.coeff_sup() * d.powf(alpha) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn dini_of_real_modulus_against_refined_trapezoid() {
        let k = builtin("circle-harmonic-1").unwrap();
        let meta = ModulusMeta::new(2);
        let t = omega2(&k, &default_delta_grid(64, 1.0), &meta).unwrap();
        let fine = omega2(&k, &default_delta_grid(256, 1.0), &meta).unwrap();
        // trapezoid in ln δ on the 4× grid, same power-law tail below the grid
        let trap = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
            let g = &fine.delta_grid;
            let w = &fine.omega2_values;
            (0..g.len() - 1)
                .map(|i| 0.5 * (f(g[i], w[i]) + f(g[i + 1], w[i + 1])) * (g[i + 1] / g[i]).ln())
                .sum()
        };
        let (p, _) = fine.small_delta_power().unwrap();
        let d0 = fine.delta_grid[0];
        let w0 = fine.omega2_values[0];
        let oracle = trap(&|d, w| w * d.powf(-0.5)) + w0 * d0.powf(-0.5) / (p - 0.5);
        let v = dini_integral(&t, 0.5).unwrap();
        assert!((v.value - oracle).abs() <= 0.02 * oracle, "{} vs {oracle}", v.value);

        let sigma = 1.5;
        let s0 = d0.ln();
        let tail: f64 = (0..20000)
            .map(|i| {
                let v = (i as f64 + 0.5) * 0.005;
                (-v).exp() * (1.0 - s0 + v / p).powf(sigma) * 0.005
            })
            .sum::<f64>()
            * w0
            / p;
        let oracle = trap(&|d, w| w * (1.0 + d.ln().abs()).powf(sigma)) + tail;
        let v = log_dini_integral(&t, sigma).unwrap();
        assert!((v.value - oracle).abs() <= 0.02 * oracle, "{} vs {oracle}", v.value);
    }

    proptest! {
        #[test]
        fn modulus_is_monotone(k in 1u32..4, phase in 0.0f64..6.0, pts in 4usize..20) {
            let ker = KernelSpec::separable("h", 2, super::super::Coefficient::Constant(1.0), super::super::Angular::Harmonic { k, phase });
            let mut meta = ModulusMeta::new(2);
            meta.outer_order = 64;
            let t = omega2(&ker, &default_delta_grid(pts, 1.0), &meta).unwrap();
            for w in t.omega2_values.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
        }

        #[test]
        fn power_fit_recovers_exponent(p in 0.1f64..2.0, c in 0.1f64..10.0) {
            let g = default_delta_grid(32, 1.0);
            let v: Vec<f64> = g.iter().map(|d| c * d.powf(p)).collect();
            let t = ModulusTable::from_values(g, v).unwrap();
            let (q, a) = t.small_delta_power().unwrap();
            prop_assert!((q - p).abs() < 1e-9);
            prop_assert!((a - c).abs() < 1e-8 * c);
        }
    }
}
