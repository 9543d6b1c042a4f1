//! Brute-force references for the operators (planar only, test scale).
//!
//! The dense oracle shares no code with the adaptive path: F(y,·) comes
//! from midpoint sums in polar coordinates about y, the t-integral uses the
//! resulting piecewise-linear F, and y runs over a fixed tensor grid in
//! polar coordinates about x. The Monte-Carlo oracle samples (y,t) by
//! importance sampling and reuses only the radial profiles of the field.

use crate::atoms::{Ball, Source};
use crate::geom::{self, Vec3};
use crate::kernel::KernelSpec;
use crate::operators::OperatorTag;
use crate::quad::field::InnerField;
use crate::quad::rules::GaussLegendre;
use crate::{Error, Estimate, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Grid sizes of the dense oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseResolution {
    /// y-radius nodes (about x)
    pub n_d: usize,
    /// y-angle nodes (about x)
    pub n_psi: usize,
    /// inner radius nodes (about y)
    pub n_u: usize,
    /// inner angle nodes (about y)
    pub n_theta: usize,
    /// y-radius cut-off in units of |x − c| + r
    pub reach: f64,
}

impl Default for DenseResolution {
    fn default() -> Self {
        Self { n_d: 160, n_psi: 96, n_u: 64, n_theta: 48, reach: 24.0 }
    }
}

impl DenseResolution {
    /// Every grid step halved.
    pub fn refined(&self) -> Self {
        Self {
            n_d: 2 * self.n_d,
            n_psi: 2 * self.n_psi,
            n_u: 2 * self.n_u,
            n_theta: 2 * self.n_theta,
            reach: self.reach,
        }
    }
}

/// Weight data of one operator.
#[derive(Debug, Clone, Copy)]
struct Weight {
    tag: OperatorTag,
    l: f64,
    k: f64,
    t_min: f64,
}

impl Weight {
    #[inline]
    fn w(&self, t: f64, d: f64) -> f64 {
        let base = t.powf(-self.k);
        match self.tag {
            OperatorTag::Area => base,
            OperatorTag::Star => base * (t / (t + d)).powf(self.l),
        }
    }

    fn lower(&self, d: f64) -> f64 {
        match self.tag {
            OperatorTag::Area => d.max(self.t_min),
            OperatorTag::Star => self.t_min,
        }
    }

    /// ∫_c^∞ w(t, d) dt via t = c/s.
    fn const_tail(&self, c: f64, d: f64, gl: &GaussLegendre) -> f64 {
        match self.tag {
            OperatorTag::Area => c.powf(1.0 - self.k) / (self.k - 1.0),
            OperatorTag::Star => gl.integrate(0.0, 1.0, |s| {
                c.powf(1.0 - self.k) * s.powf(self.k - 2.0) * (c / (c + d * s)).powf(self.l)
            }),
        }
    }
}

/// Cumulative F(y,·) from polar midpoint sums: F at cell edges `u`.
fn brute_profile(kernel: &KernelSpec, f: &Source, y: &Vec3, rho: f64, res: &DenseResolution) -> (Vec<f64>, Vec<f64>) {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for b in &f.blocks {
        let e = geom::norm(&geom::sub(y, &b.center));
        lo = lo.min((e - b.radius).max(0.0));
        hi = hi.max(e + b.radius);
    }
    if !(hi > lo) {
        return (vec![], vec![]);
    }
    let n = res.n_u;
    // u = lo + (hi−lo)·v² near 0 removes the u^{ρ−1} cusp
    let quad = lo == 0.0;
    let edge = |i: usize| {
        let v = i as f64 / n as f64;
        if quad {
            hi * v * v
        } else {
            lo + (hi - lo) * v
        }
    };
    let mut us = Vec::with_capacity(n + 1);
    let mut fs = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    us.push(edge(0));
    fs.push(0.0);
    for i in 0..n {
        let (a, b) = (edge(i), edge(i + 1));
        let u = if quad {
            let v = (i as f64 + 0.5) / n as f64;
            hi * v * v
        } else {
            0.5 * (a + b)
        };
        let width = b - a;
        let mut g = 0.0;
        for blk in &f.blocks {
            let d = geom::sub(y, &blk.center);
            let e = geom::norm(&d);
            let r = blk.radius;
            let kappa = if e > 0.0 { (e * e + u * u - r * r) / (2.0 * u * e) } else { -2.0 };
            if kappa >= 1.0 {
                continue;
            }
            let phi_v = d[1].atan2(d[0]);
            let half = if kappa <= -1.0 { PI } else { kappa.acos() };
            let m = res.n_theta;
            let dth = 2.0 * half / m as f64;
            let mut s = 0.0;
            for j in 0..m {
                let th = phi_v - half + (j as f64 + 0.5) * dth;
                let dir = [th.cos(), th.sin(), 0.0];
                let z = [y[0] - u * dir[0], y[1] - u * dir[1], 0.0];
                s += kernel.omega_unit(y, &dir) * blk.value(&z);
            }
            g += s * dth;
        }
        acc += u.powf(rho - 1.0) * g * width;
        us.push(b);
        fs.push(acc);
    }
    (us, fs)
}

/// Squared operator value at x by brute force. Requires a planar kernel.
pub fn dense_oracle_sq(
    kernel: &KernelSpec,
    f: &Source,
    x: &[f64],
    tag: OperatorTag,
    rho: f64,
    lambda: f64,
    t_min: f64,
    res: &DenseResolution,
) -> Result<f64> {
    if kernel.dim() != 2 || x.len() != 2 {
        return Err(Error::Domain("the dense oracle is planar only".into()));
    }
    if f.is_zero() {
        return Ok(0.0);
    }
    let hull: Ball = f.support_hull().expect("nonzero source has blocks");
    let xv = geom::to_vec3(x);
    let to_c = geom::sub(&hull.center, &xv);
    let e = geom::norm(&to_c);
    let r = hull.radius;
    let phi_c = to_c[1].atan2(to_c[0]);
    let weight = Weight { tag, l: lambda * 2.0, k: 2.0 + 2.0 * rho + 1.0, t_min };
    let d_max = res.reach * (e + r);
    // D segments split where the circle about x meets the support edge
    let mut segs = vec![t_min * 1e-2, d_max];
    let g = e - r;
    for v in [
        t_min,
        r,
        0.25 * g,
        0.5 * g,
        0.75 * g,
        g - r,
        g,
        e - 0.5 * r,
        e,
        e + 0.5 * r,
        e + r,
        e + 2.0 * r,
        2.0 * (e + r),
        4.0 * (e + r),
    ] {
        if v > segs[0] && v < d_max {
            segs.push(v);
        }
    }
    segs.sort_by(f64::total_cmp);
    segs.dedup_by(|b, a| *b - *a < 1e-9 * *a);
    // Gauss cells in ln D; the D² factor is too steep for midpoints
    let gl4 = GaussLegendre::new(4);
    let per_seg = (res.n_d / (4 * (segs.len() - 1))).max(2);
    let mut d_nodes: Vec<(f64, f64)> = Vec::new();
    for w in segs.windows(2) {
        let (a, b) = (w[0].ln(), w[1].ln());
        let h = (b - a) / per_seg as f64;
        for i in 0..per_seg {
            let c0 = a + i as f64 * h;
            for (s, ws) in gl4.nodes.iter().zip(&gl4.weights) {
                let d = (c0 + 0.5 * h * (s + 1.0)).exp();
                d_nodes.push((d, d * d * 0.5 * h * ws));
            }
        }
    }
    let gl3 = GaussLegendre::new(3);
    let gl16 = GaussLegendre::new(16);
    let rows: Vec<f64> = d_nodes
        .par_iter()
        .map(|&(d, wd)| {
            // angular map concentrating nodes toward the source direction on
            // the scale at which the circle sees the support
            let tau = (2.0 * r.max((d - e).abs()) / d.max(r)).min(1.0);
            let mut row = 0.0;
            for j in 0..res.n_psi {
                let s = -PI + (j as f64 + 0.5) * 2.0 * PI / res.n_psi as f64;
                let tn = (0.5 * s).tan();
                let psi = phi_c + 2.0 * (tau * tn).atan();
                let dpsi = tau * (1.0 + tn * tn) / (1.0 + tau * tau * tn * tn) * 2.0 * PI / res.n_psi as f64;
                let y = [xv[0] + d * psi.cos(), xv[1] + d * psi.sin(), 0.0];
                let (us, fs) = brute_profile(kernel, f, &y, rho, res);
                if us.is_empty() {
                    continue;
                }
                let lo = weight.lower(d);
                let mut v = 0.0;
                for c in 0..us.len() - 1 {
                    let (a, b) = (us[c].max(lo), us[c + 1]);
                    if b <= a {
                        continue;
                    }
                    let slope = (fs[c + 1] - fs[c]) / (us[c + 1] - us[c]);
                    v += gl3.integrate(a, b, |t| {
                        let ft = fs[c] + slope * (t - us[c]);
                        ft * ft * weight.w(t, d)
                    });
                }
                let last = *us.last().unwrap();
                let f_inf = *fs.last().unwrap();
                v += f_inf * f_inf * weight.const_tail(last.max(lo), d, &gl16);
                row += v * dpsi;
            }
            row * wd
        })
        .collect();
    Ok(rows.iter().sum())
}

/// μ(f)(x) by brute force (square root of [`dense_oracle_sq`]).
pub fn dense_oracle(
    kernel: &KernelSpec,
    f: &Source,
    x: &[f64],
    tag: OperatorTag,
    rho: f64,
    lambda: f64,
    t_min: f64,
    res: &DenseResolution,
) -> Result<f64> {
    dense_oracle_sq(kernel, f, x, tag, rho, lambda, t_min, res).map(|v| v.max(0.0).sqrt())
}

/// 2-D Cauchy-type density s/(2π)·(|y−m|² + s²)^{−3/2}.
struct Cauchy2 {
    m: Vec3,
    s: f64,
}

impl Cauchy2 {
    fn pdf(&self, y: &Vec3) -> f64 {
        let d2 = (y[0] - self.m[0]).powi(2) + (y[1] - self.m[1]).powi(2);
        self.s / (2.0 * PI) * (d2 + self.s * self.s).powf(-1.5)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec3 {
        let u: f64 = rng.gen();
        let rad = self.s * ((1.0 - u).powi(-2) - 1.0).max(0.0).sqrt();
        let a = 2.0 * PI * rng.gen::<f64>();
        [self.m[0] + rad * a.cos(), self.m[1] + rad * a.sin(), 0.0]
    }
}

/// Importance-sampled (y,t) estimate of the squared operator value with
/// its standard error. `samples` counts (y,t) pairs; each y carries 8 t's.
pub fn monte_carlo_oracle_sq(
    field: &dyn InnerField,
    x: &[f64],
    tag: OperatorTag,
    lambda: f64,
    t_min: f64,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if field.dim() != 2 || x.len() != 2 {
        return Err(Error::Domain("the Monte-Carlo oracle is planar only".into()));
    }
    let balls = field.support();
    let Some(hull) = crate::atoms::Source::hull_of(&balls) else {
        return Ok(Estimate::exact(0.0));
    };
    let xv = geom::to_vec3(x);
    let e = geom::norm(&geom::sub(&hull.center, &xv));
    let r = hull.radius;
    let comps = [
        Cauchy2 { m: hull.center, s: r },
        Cauchy2 { m: hull.center, s: e.max(r) },
        Cauchy2 { m: xv, s: (0.5 * e).max(r) },
    ];
    let weight = Weight { tag, l: lambda * 2.0, k: 2.0 + 2.0 * field.rho() + 1.0, t_min };
    const PER_Y: usize = 8;
    const CHUNK: usize = 4096;
    let n_y = (samples / PER_Y).max(1);
    let chunks = n_y.div_ceil(CHUNK);
    // each chunk has its own stream: reproducible for any thread count
    let partial: Vec<(f64, f64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ci as u64);
            let count = CHUNK.min(n_y - ci * CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let y = comps[rng.gen_range(0..3)].sample(&mut rng);
                let qy = comps.iter().map(|c| c.pdf(&y)).sum::<f64>() / 3.0;
                let d = geom::norm(&geom::sub(&y, &xv));
                let t0 = weight.lower(d).max(field.dist_to_support(&y));
                let prof = field.profile(&y);
                let t1 = prof.t_const().max(t0);
                let t2 = 4.0 * t1.max(d).max(2.0 * t0);
                let a = 3.0;
                let has_u = t1 > t0;
                let w_u = if has_u { 1.0 / 3.0 } else { 0.0 };
                let w_l = if has_u { 1.0 / 3.0 } else { 0.5 };
                let w_p = 1.0 - w_u - w_l;
                let q_t = |t: f64| {
                    let mut q = 0.0;
                    if has_u && t <= t1 {
                        q += w_u / (t1 - t0);
                    }
                    if t <= t2 {
                        q += w_l / (t * (t2 / t0).ln());
                    }
                    if t >= t1 {
                        q += w_p * a * t1.powf(a) * t.powf(-a - 1.0);
                    }
                    q
                };
                let mut acc = 0.0;
                for _ in 0..PER_Y {
                    let c: f64 = rng.gen();
                    let u: f64 = rng.gen();
                    let t = if c < w_u {
                        t0 + (t1 - t0) * u
                    } else if c < w_u + w_l {
                        t0 * (t2 / t0).powf(u)
                    } else {
                        t1 * (1.0 - u).powf(-1.0 / a)
                    };
                    let fv = prof.value(t);
                    if fv != 0.0 && t >= weight.lower(d) {
                        acc += fv * fv * weight.w(t, d) / q_t(t);
                    }
                }
                let v = acc / PER_Y as f64 / qy;
                s1 += v;
                s2 += v * v;
            }
            (s1, s2, count)
        })
        .collect();
    let (s1, s2, cnt) = partial
        .iter()
        .fold((0.0, 0.0, 0usize), |(a, b, c), (x, y, z)| (a + x, b + y, c + z));
    let mean = s1 / cnt as f64;
    let var = (s2 / cnt as f64 - mean * mean).max(0.0);
    Ok(Estimate::new(mean, (var / cnt as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{build_atom, Shape};
    use crate::kernel::builtin;

    #[test]
    fn zero_source_gives_zero() {
        let k = builtin("circle-harmonic-1").unwrap();
        let f = Source::zero(2);
        let v = dense_oracle(&k, &f, &[8.0, 0.0], OperatorTag::Area, 1.5, 3.0, 1e-3, &DenseResolution::default()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn rejects_three_dimensions() {
        let k = builtin("sphere-monomial-1").unwrap();
        let f = build_atom(3, 1.0, Ball::new(&[0.0, 0.0, 0.0], 1.0), &Shape::radial_bump(), 1).unwrap().source();
        assert!(dense_oracle(&k, &f, &[8.0, 0.0, 0.0], OperatorTag::Area, 2.0, 3.0, 1e-3, &DenseResolution::default()).is_err());
    }
}
