//! The annulus bound for differences of K(x, w) = Ω(x, w)/|w|^{n−ρ}:
//!
//! ‖K(·+h, · − z) − K(·+h, ·)‖_{L²(R ≤ |y| < 2R)}
//!     ≤ C R^{ρ−n/2} (|z|/R + ∫_{2|z|/R}^{4|z|/R} ω₂(δ)/δ dδ).
//!
//! The left side is measured in L² (the power R^{ρ−n/2} is the L² scaling;
//! the L¹ integral is reported as well, divided by |annulus|^{1/2}). The
//! |z|/R term carries the kernel size ‖Ω‖_{L∞×L²(S^{n−1})}, so both sides
//! are homogeneous of degree one in Ω.

use crate::geom::{self, Vec3};
use crate::kernel::{check_uniform_l2, default_r_samples, default_x_samples, KernelSpec, ModulusTable};
use crate::quad::rules::adaptive_with;
use crate::quad::QuadPlan;
use crate::quad::sphere::SphereRule;
use crate::{Error, Result, Verdict};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma25Case {
    /// inner radius R of the annulus
    pub r: f64,
    pub h: Vec<f64>,
    pub z: Vec<f64>,
    /// |z| < ratio_beta·R with ratio_beta ∈ (0, 1/2)
    pub ratio_beta: f64,
}

impl Lemma25Case {
    pub fn new(r: f64, h: &[f64], z: &[f64], ratio_beta: f64) -> Result<Self> {
        if h.len() != z.len() {
            return Err(Error::Domain("h and z must have the same dimension".into()));
        }
        if !(ratio_beta > 0.0 && ratio_beta < 0.5) {
            return Err(Error::Domain(format!("ratio_beta = {ratio_beta} outside (0, 1/2)")));
        }
        if !(r > 0.0) {
            return Err(Error::Domain("R must be positive".into()));
        }
        let zn = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(zn < ratio_beta * r) {
            return Err(Error::Domain(format!("|z| = {zn} not below ratio_beta·R = {}", ratio_beta * r)));
        }
        Ok(Self { r, h: h.to_vec(), z: z.to_vec(), ratio_beta })
    }

    /// (R, z) → (sR, sz), same h.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let z: Vec<f64> = self.z.iter().map(|v| v * s).collect();
        Self::new(self.r * s, &self.h, &z, self.ratio_beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma25Outcome {
    pub lhs: f64,
    /// quadrature error estimate of lhs
    pub lhs_error: f64,
    /// L¹ annulus integral / |annulus|^{1/2}
    pub lhs_l1_scaled: f64,
    pub rhs: f64,
    /// ‖Ω‖_{L∞×L²(S^{n−1})} multiplying |z|/R
    pub kernel_norm: f64,
    /// the ω₂ integral inside rhs
    pub omega_term: f64,
    /// lhs/rhs (0 when both vanish, +∞ for the anomaly)
    pub ratio: f64,
    /// rhs = 0 while lhs is not
    pub anomaly: bool,
    pub verdict: Verdict,
}

const REL: f64 = 1e-9;

fn k_diff(kernel: &KernelSpec, rho: f64, n: usize, y: &Vec3, h: &Vec3, z: &Vec3) -> f64 {
    let x = geom::add(y, h);
    let w1 = geom::sub(y, z);
    let k = |w: &Vec3| {
        let r = geom::norm(w);
        kernel.omega_unit(&x, &geom::scale(w, 1.0 / r)) * r.powf(rho - n as f64)
    };
    k(&w1) - k(y)
}

/// ∫_{R≤|y|<2R} g(|K(y+h, y−z) − K(y+h, y)|) dy with its error estimate.
fn annulus<G: Fn(f64) -> f64>(kernel: &KernelSpec, rho: f64, case: &Lemma25Case, sphere_order: usize, g: G) -> (f64, f64) {
    let n = kernel.dim();
    let h = geom::to_vec3(&case.h);
    let z = geom::to_vec3(&case.z);
    let (a, b) = (case.r, 2.0 * case.r);
    let mut err = 0.0;
    let radial = |r: f64, err: &mut f64| -> f64 {
        let ang = match n {
            2 => {
                let breaks: Vec<f64> = (0..=8).map(|j| j as f64 * PI / 4.0).collect();
                let q = adaptive_with(
                    |th: f64| g(k_diff(kernel, rho, n, &[r * th.cos(), r * th.sin(), 0.0], &h, &z)),
                    &breaks,
                    0.0,
                    REL,
                    2000,
                    false,
                );
                *err += q.error * r * (b - a);
                q.value
            }
            _ => {
                let rule = SphereRule::new(n, sphere_order.max(64));
                rule.integrate(|d| g(k_diff(kernel, rho, n, &geom::scale(d, r), &h, &z)))
            }
        };
        ang * r.powi(n as i32 - 1)
    };
    let q = adaptive_with(|r| radial(r, &mut err), &[a, 0.5 * (a + b), b], 0.0, REL, 200, false);
    (q.value, q.error + err)
}

/// lhs, rhs and their ratio for one case. `table` is ω₂ of `kernel` on a
/// grid reaching 4|z|/R (up to 2).
pub fn lemma25_check(kernel: &KernelSpec, case: &Lemma25Case, rho: f64, table: &ModulusTable, plan: &QuadPlan) -> Result<Lemma25Outcome> {
    let sphere_order = plan.sphere_order;
    let n = kernel.dim();
    if case.z.len() != n {
        return Err(Error::Domain(format!("case lives in R^{}, kernel in R^{n}", case.z.len())));
    }
    if !(rho > 0.0 && rho < n as f64) {
        return Err(Error::Domain(format!("ρ = {rho} outside (0, n)")));
    }
    let zn = case.z.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (sq, sq_err) = annulus(kernel, rho, case, sphere_order, |d| d * d);
    let lhs = sq.max(0.0).sqrt();
    let lhs_error = if lhs > 0.0 { 0.5 * sq_err / lhs } else { sq_err.sqrt() };
    let (l1, _) = annulus(kernel, rho, case, sphere_order, f64::abs);
    let area = crate::geom::ball_volume(n, 2.0 * case.r) - crate::geom::ball_volume(n, case.r);
    let omega_term = if zn > 0.0 { omega_log_integral(table, 2.0 * zn / case.r, 4.0 * zn / case.r) } else { 0.0 };
    let norm = kernel_norm(kernel, sphere_order);
    let rhs = case.r.powf(rho - n as f64 / 2.0) * (norm * zn / case.r + omega_term);
    let tol = 1e-14 * kernel.coeff_sup().max(1.0);
    let (ratio, anomaly) = if rhs > 0.0 {
        (lhs / rhs, false)
    } else if lhs > tol {
        (f64::INFINITY, true)
    } else {
        (0.0, false)
    };
    let verdict = if anomaly { Verdict::Fail } else { Verdict::Pass };
    Ok(Lemma25Outcome { lhs, lhs_error, lhs_l1_scaled: l1 / area.sqrt(), rhs, kernel_norm: norm, omega_term, ratio, anomaly, verdict })
}

/// coeff_sup·‖Y‖_{L²} when separable, the sampled uniform-L² size otherwise.
fn kernel_norm(kernel: &KernelSpec, sphere_order: usize) -> f64 {
    let order = sphere_order.max(64);
    let rep = check_uniform_l2(kernel, &default_x_samples(kernel.dim()), &default_r_samples(), order);
    rep.analytic_bound.unwrap_or(rep.sampled_max)
}

/// ∫_a^b ω₂(δ)/δ dδ = ∫ ω₂(e^s) ds, split at the table's grid points.
fn omega_log_integral(table: &ModulusTable, a: f64, b: f64) -> f64 {
    let mut breaks = vec![a.ln()];
    breaks.extend(table.delta_grid.iter().filter(|&&d| d > a && d < b).map(|d| d.ln()));
    breaks.push(b.ln());
    adaptive_with(|s| table.value_at(s.exp()), &breaks, 0.0, REL, 400, false).value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{builtin, default_delta_grid, omega2, ModulusMeta};

    fn table(k: &KernelSpec) -> ModulusTable {
        omega2(k, &default_delta_grid(40, 2.0), &ModulusMeta::new(k.dim())).unwrap()
    }

    /// Midpoint polar grid of the squared difference.
    fn dense_lhs(k: &KernelSpec, rho: f64, case: &Lemma25Case, nr: usize, nt: usize) -> f64 {
        let h = geom::to_vec3(&case.h);
        let z = geom::to_vec3(&case.z);
        let (a, b) = (case.r, 2.0 * case.r);
        let (dr, dt) = ((b - a) / nr as f64, 2.0 * PI / nt as f64);
        let mut s = 0.0;
        for i in 0..nr {
            let r = a + dr * (i as f64 + 0.5);
            for j in 0..nt {
                let th = dt * (j as f64 + 0.5);
                let d = k_diff(k, rho, 2, &[r * th.cos(), r * th.sin(), 0.0], &h, &z);
                s += d * d * r * dr * dt;
            }
        }
        s.sqrt()
    }

    #[test]
    fn zero_shift_gives_zero() {
        let k = builtin("circle-harmonic-1").unwrap();
        let case = Lemma25Case::new(4.0, &[0.0, 0.0], &[0.0, 0.0], 0.25).unwrap();
        let o = lemma25_check(&k, &case, 1.5, &table(&k), &QuadPlan::default()).unwrap();
        assert_eq!(o.lhs, 0.0);
        assert_eq!(o.ratio, 0.0);
        assert!(!o.anomaly);
    }

    #[test]
    fn case_rejects_large_shift() {
        assert!(Lemma25Case::new(4.0, &[0.0, 0.0], &[2.0, 0.0], 0.4).is_err());
        assert!(Lemma25Case::new(4.0, &[0.0, 0.0], &[0.5, 0.0], 0.5).is_err());
    }

    #[test]
    fn lhs_matches_dense_annulus_grid() {
        let k = builtin("circle-harmonic-1").unwrap();
        let case = Lemma25Case::new(4.0, &[0.0, 0.0], &[0.5, 0.0], 0.25).unwrap();
        let o = lemma25_check(&k, &case, 1.5, &table(&k), &QuadPlan::default()).unwrap();
        let d = dense_lhs(&k, 1.5, &case, 400, 800);
        assert!((o.lhs - d).abs() <= 0.05 * d, "{} vs {d}", o.lhs);
        assert!(o.ratio > 0.0 && o.ratio.is_finite());
    }

    #[test]
    fn ratio_is_scale_stable_and_kernel_scale_free() {
        let k = builtin("circle-harmonic-1").unwrap();
        let t = table(&k);
        let case = Lemma25Case::new(4.0, &[0.3, -0.2], &[0.5, 0.2], 0.25).unwrap();
        let a = lemma25_check(&k, &case, 1.5, &t, &QuadPlan::default()).unwrap();
        let b = lemma25_check(&k, &case.scaled(2.0).unwrap(), 1.5, &t, &QuadPlan::default()).unwrap();
        assert!((a.ratio / b.ratio - 1.0).abs() < 0.25);
        let k2 = k.scaled(2.0);
        let c = lemma25_check(&k2, &case, 1.5, &table(&k2), &QuadPlan::default()).unwrap();
        assert!((c.ratio - a.ratio).abs() <= 1e-12 * a.ratio, "{a:?} {c:?}");
    }
}
