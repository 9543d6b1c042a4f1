//! (p, ∞, s)-atoms and synthetic weak-Hardy decompositions.

mod profile;
mod weak;

pub use profile::{ball_rule, multi_indices, BumpProfile, Poly};
pub use weak::{
    build_weak_hardy, dilated_cover, dilation_factor, split_at_level, verify_weak_hardy, Block,
    DilatedCover, L4Claim, LevelPlan, LevelSplit, WeakHardyReport, WeakHardySequence,
};

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Moment tolerance relative to ‖a‖∞·|B|·(|x₀| + r)^{|γ|}.
pub const MOMENT_TOL: f64 = 1e-9;
/// Fraction kept below the sup-norm cap.
pub const HEADROOM: f64 = 0.05;

/// ⌊n(1/p − 1)⌋
pub fn min_moment_order(n: usize, p: f64) -> Result<u32> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("p = {p} outside (0, 1]")));
    }
    // a tiny nudge so that e.g. 2·(3/2 − 1) = 0.9999… still floors to 1
    Ok((n as f64 * (1.0 / p - 1.0) + 1e-9).floor() as u32)
}

/// A closed ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ball {
    pub center: Vec3,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: &[f64], radius: f64) -> Self {
        Self { center: geom::to_vec3(center), radius }
    }

    pub fn volume(&self, dim: usize) -> f64 {
        geom::ball_volume(dim, self.radius)
    }

    pub fn intersects(&self, other: &Ball) -> bool {
        geom::norm(&geom::sub(&self.center, &other.center)) < self.radius + other.radius
    }
}

/// Profile family before moment removal: (1 − |u|²)²·q(u) on the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Shape {
    pub q: Poly,
}

impl Shape {
    /// (1 − |u|²)²
    pub fn radial_bump() -> Self {
        Self { q: Poly::constant(1.0) }
    }

    /// (1 − |u|²)²·q(u)
    pub fn bump_times(q: Poly) -> Self {
        Self { q }
    }

    /// (1 − |u|²)³·q(u); lies in the correction span when deg q ≤ s
    pub fn weight_times(q: Poly, dim: usize) -> Self {
        Self { q: q.times_one_minus_r2(dim) }
    }
}

/// A function on ℝⁿ built from blocks (the input f of the operators).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Source {
    pub dim: usize,
    pub blocks: Vec<BumpProfile>,
}

impl Source {
    pub fn zero(dim: usize) -> Self {
        Self { dim, blocks: Vec::new() }
    }

    pub fn value(&self, z: &Vec3) -> f64 {
        self.blocks.iter().map(|b| b.value(z)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| b.amplitude == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut s = self.clone();
        for b in &mut s.blocks {
            b.amplitude *= c;
        }
        s
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        let v = geom::to_vec3(shift);
        let mut s = self.clone();
        for b in &mut s.blocks {
            b.center = geom::add(&b.center, &v);
        }
        s
    }

    /// f ≡ c on B(center, radius).
    pub fn indicator(dim: usize, center: &[f64], radius: f64, c: f64) -> Self {
        Self {
            dim,
            blocks: vec![BumpProfile {
                dim,
                center: geom::to_vec3(center),
                radius,
                amplitude: c,
                bump_power: 0,
                poly: Poly::constant(1.0),
            }],
        }
    }

    /// A ball containing the support (exact for one or two blocks).
    pub fn support_hull(&self) -> Option<Ball> {
        let balls: Vec<Ball> = self
            .blocks
            .iter()
            .map(|b| Ball { center: b.center, radius: b.radius })
            .collect();
        Self::hull_of(&balls)
    }

    /// A ball containing all `balls`, grown one ball at a time.
    pub fn hull_of(balls: &[Ball]) -> Option<Ball> {
        let first = balls.first()?;
        let mut c = first.center;
        let mut r = first.radius;
        for b in &balls[1..] {
            let d = geom::norm(&geom::sub(&b.center, &c));
            if d + b.radius <= r {
                continue;
            }
            if d + r <= b.radius {
                c = b.center;
                r = b.radius;
                continue;
            }
            let nr = 0.5 * (d + r + b.radius);
            let dir = geom::scale(&geom::sub(&b.center, &c), 1.0 / d);
            c = geom::add(&c, &geom::scale(&dir, nr - r));
            r = nr;
        }
        Some(Ball { center: c, radius: r })
    }

    pub fn sup_estimate(&self) -> f64 {
        self.blocks.iter().map(|b| b.sup_estimate()).fold(0.0, f64::max)
    }

    pub fn min_radius(&self) -> Option<f64> {
        self.blocks.iter().map(|b| b.radius).reduce(f64::min)
    }
}

/// A (p, ∞, s)-atom: declared ball, exponent data and its profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Atom {
    pub dim: usize,
    pub ball: Ball,
    pub p: f64,
    pub s: u32,
    pub profile: BumpProfile,
    /// ‖a‖∞ as measured at construction
    pub sup_norm: f64,
}

impl Atom {
    pub fn source(&self) -> Source {
        Source { dim: self.dim, blocks: vec![self.profile.clone()] }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.profile.value(&geom::to_vec3(x))
    }

    /// c·a with the same declared ball.
    pub fn scaled(&self, c: f64) -> Self {
        let mut a = self.clone();
        a.profile.amplitude *= c;
        a.sup_norm *= c.abs();
        a
    }

    /// Profile moved by `shift`, declared ball unchanged.
    pub fn with_profile_shifted(&self, shift: &[f64]) -> Self {
        let mut a = self.clone();
        a.profile.center = geom::add(&a.profile.center, &geom::to_vec3(shift));
        a
    }

    /// |B|^{-1/p}
    pub fn size_cap(&self) -> f64 {
        self.ball.volume(self.dim).powf(-1.0 / self.p)
    }

    /// Values on a uniform grid over the bounding square (n = 2), as CSV.
    pub fn write_csv_grid(&self, path: &Path, per_axis: usize) -> Result<()> {
        if self.dim != 2 {
            return Err(Error::Domain("CSV grid export is planar only".into()));
        }
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "x1,x2,value")?;
        let (c, r) = (self.ball.center, self.ball.radius);
        for i in 0..per_axis {
            for j in 0..per_axis {
                let x = c[0] - r + 2.0 * r * (i as f64 + 0.5) / per_axis as f64;
                let y = c[1] - r + 2.0 * r * (j as f64 + 0.5) / per_axis as f64;
                writeln!(f, "{x},{y},{}", self.value(&[x, y]))?;
            }
        }
        Ok(())
    }
}

/// Remove moments of order ≤ s from A·(1 − |u|²)²·q(u) by subtracting
/// (1 − |u|²)³·P(u), deg P ≤ s, solving the weighted Gram system. The
/// correction vanishes to second order at the sphere, so the profile keeps
/// its C¹ bump form. Returns the corrected Q with (1 − |u|²)²·Q.
pub(crate) fn remove_moments(dim: usize, q: &Poly, s: u32) -> Result<Poly> {
    let idx = multi_indices(dim, s);
    let m = idx.len();
    let deg = 6 + 2 * s + q.degree();
    let rule = ball_rule(dim, &[0.0; 3], 1.0, deg);
    let mono = |u: &Vec3, e: &[u32; 3]| -> f64 { (0..3).map(|i| u[i].powi(e[i] as i32)).product() };
    let mut g = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (u, w) in &rule {
        let one = (1.0 - geom::dot(u, u)).max(0.0);
        let weight = one.powi(3);
        let shape = one * one * q.eval(u);
        let vals: Vec<f64> = idx.iter().map(|e| mono(u, e)).collect();
        for i in 0..m {
            b[i] += w * shape * vals[i];
            for j in 0..m {
                g[(i, j)] += w * weight * vals[i] * vals[j];
            }
        }
    }
    let coeffs = g
        .full_piv_lu()
        .solve(&b)
        .ok_or_else(|| Error::Domain("singular moment Gram matrix".into()))?;
    let p = Poly { terms: idx.iter().zip(coeffs.iter()).map(|(e, c)| (*e, *c)).collect() };
    let corrected = q.sub(&p.times_one_minus_r2(dim));
    let scale = q.max_abs_coeff().max(1e-300);
    let pruned: Vec<_> = corrected
        .terms
        .into_iter()
        .filter(|(_, c)| c.abs() > 1e-14 * scale)
        .collect();
    if pruned.is_empty() {
        return Err(Error::DegenerateShape);
    }
    Ok(Poly { terms: pruned })
}

/// Build a (p, ∞, s)-atom on `ball` from `shape`.
pub fn build_atom(dim: usize, p: f64, ball: Ball, shape: &Shape, s: u32) -> Result<Atom> {
    let smin = min_moment_order(dim, p)?;
    if s < smin {
        return Err(Error::Domain(format!("s = {s} below the minimum moment order {smin}")));
    }
    if !(ball.radius > 0.0) {
        return Err(Error::Domain("ball radius must be positive".into()));
    }
    let q = remove_moments(dim, &shape.q, s)?;
    let mut profile = BumpProfile { dim, center: ball.center, radius: ball.radius, amplitude: 1.0, bump_power: 2, poly: q };
    let raw_sup = profile.sup_estimate();
    if raw_sup < 1e-12 {
        return Err(Error::DegenerateShape);
    }
    let target = (1.0 - HEADROOM) * ball.volume(dim).powf(-1.0 / p);
    profile.amplitude = target / raw_sup;
    Ok(Atom { dim, ball, p, s, profile, sup_norm: target })
}

/// One verified condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Condition {
    pub pass: bool,
    pub residual: f64,
}

/// The three atom conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomReport {
    /// max |a| sampled outside the declared ball
    pub support: Condition,
    /// measured sup minus |B|^{-1/p}
    pub size: Condition,
    /// worst normalized moment
    pub moments: Condition,
}

impl AtomReport {
    pub fn all_pass(&self) -> bool {
        self.support.pass && self.size.pass && self.moments.pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomTolerances {
    pub moment_tol: f64,
    /// allowed relative excess of the measured sup over the cap
    pub size_tol: f64,
}

impl Default for AtomTolerances {
    fn default() -> Self {
        Self { moment_tol: MOMENT_TOL, size_tol: 0.0 }
    }
}

/// Check support, size and moments of an atom.
pub fn verify_atom(a: &Atom, tols: &AtomTolerances) -> AtomReport {
    let dim = a.dim;
    let b = &a.ball;
    let prof = &a.profile;
    // support: geometric containment plus a sampled ring/grid outside B
    let d = geom::norm(&geom::sub(&prof.center, &b.center));
    let contained = d + prof.radius <= b.radius * (1.0 + 1e-12);
    let reach = (d + prof.radius).max(b.radius) * 1.05;
    let mut outside_max: f64 = 0.0;
    let steps = if dim == 2 { 160 } else { 40 };
    let h = 2.0 * reach / steps as f64;
    let grid_dims = if dim == 2 { [steps, steps, 1] } else { [steps, steps, steps] };
    for i in 0..grid_dims[0] {
        for j in 0..grid_dims[1] {
            for k in 0..grid_dims[2] {
                let mut x = [
                    b.center[0] - reach + h * (i as f64 + 0.5),
                    b.center[1] - reach + h * (j as f64 + 0.5),
                    0.0,
                ];
                if dim == 3 {
                    x[2] = b.center[2] - reach + h * (k as f64 + 0.5);
                }
                if geom::norm(&geom::sub(&x, &b.center)) > b.radius {
                    outside_max = outside_max.max(prof.value(&x).abs());
                }
            }
        }
    }
    let support = Condition { pass: contained && outside_max == 0.0, residual: outside_max };

    let sup = prof.sup_estimate();
    let cap = a.size_cap();
    let size = Condition { pass: sup <= cap * (1.0 + tols.size_tol), residual: sup - cap };

    let vol = b.volume(dim);
    let scale0 = sup.max(1e-300) * vol;
    let lever = geom::norm(&b.center) + b.radius;
    let mut worst: f64 = 0.0;
    for gamma in multi_indices(dim, a.s) {
        let order: u32 = gamma.iter().sum();
        let m = prof.moment(&gamma).abs() / (scale0 * lever.powi(order as i32));
        worst = worst.max(m);
    }
    let moments = Condition { pass: worst <= tols.moment_tol, residual: worst };
    AtomReport { support, size, moments }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn min_moment_order_examples() {
        assert_eq!(min_moment_order(2, 1.0).unwrap(), 0);
        assert_eq!(min_moment_order(2, 2.0 / 3.0).unwrap(), 1);
        assert_eq!(min_moment_order(3, 0.9).unwrap(), 0);
        assert_eq!(min_moment_order(2, 0.5).unwrap(), 2);
        assert!(min_moment_order(2, 0.0).is_err());
        assert!(min_moment_order(2, 1.5).is_err());
    }

    #[test]
    fn radial_bump_atom() {
        let a = build_atom(2, 1.0, Ball::new(&[0.0, 0.0], 1.0), &Shape::radial_bump(), 0).unwrap();
        assert!(a.profile.moment(&[0, 0, 0]).abs() < 1e-10);
        assert!(a.profile.sup_estimate() <= 1.0 / PI);
        assert!(verify_atom(&a, &AtomTolerances::default()).all_pass());
    }

    #[test]
    fn first_order_moments_vanish() {
        let a = build_atom(2, 2.0 / 3.0, Ball::new(&[0.0, 0.0], 1.0), &Shape::radial_bump(), 1).unwrap();
        for g in [[0, 0, 0], [1, 0, 0], [0, 1, 0]] {
            assert!(a.profile.moment(&g).abs() < 1e-10);
        }
        assert!(build_atom(2, 2.0 / 3.0, Ball::new(&[0.0, 0.0], 1.0), &Shape::radial_bump(), 0).is_err());
    }

    #[test]
    fn sup_matches_rescale_target_on_dense_grid() {
        let a = build_atom(2, 1.0, Ball::new(&[3.0, 3.0], 0.5), &Shape::radial_bump(), 0).unwrap();
        let target = 0.95 / (PI * 0.25);
        // oracle: dense Cartesian grid over the ball
        let m = 801;
        let mut best: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let x = 2.5 + i as f64 / (m - 1) as f64;
                let y = 2.5 + j as f64 / (m - 1) as f64;
                best = best.max(a.value(&[x, y]).abs());
            }
        }
        assert_relative_eq!(a.sup_norm, target, max_relative = 1e-12);
        assert!(best <= target * (1.0 + 1e-9));
        assert!(best >= target * (1.0 - 1e-3), "{best} vs {target}");
    }

    #[test]
    fn verify_detects_violations() {
        let a = build_atom(2, 1.0, Ball::new(&[0.0, 0.0], 1.0), &Shape::radial_bump(), 0).unwrap();
        let big = verify_atom(&a.scaled(2.0), &AtomTolerances::default());
        assert!(!big.size.pass && big.support.pass && big.moments.pass);
        let moved = verify_atom(&a.with_profile_shifted(&[5.0, 0.0]), &AtomTolerances::default());
        assert!(!moved.support.pass);
    }

    #[test]
    fn degenerate_shape_is_rejected() {
        let s = Shape::weight_times(Poly::constant(1.0), 2);
        assert_eq!(build_atom(2, 1.0, Ball::new(&[0.0, 0.0], 1.0), &s, 0), Err(Error::DegenerateShape));
        let lin = Poly { terms: vec![([1, 0, 0], 1.0), ([0, 0, 0], 0.3)] };
        let s = Shape::weight_times(lin, 2);
        assert_eq!(build_atom(2, 2.0 / 3.0, Ball::new(&[0.0, 0.0], 1.0), &s, 1), Err(Error::DegenerateShape));
    }

    #[test]
    fn three_dimensional_atom() {
        let a = build_atom(3, 0.9, Ball::new(&[0.5, 0.0, -1.0], 2.0), &Shape::radial_bump(), 0).unwrap();
        assert!(verify_atom(&a, &AtomTolerances::default()).all_pass());
    }

    #[test]
    fn support_hull_contains_blocks() {
        let a = build_atom(2, 1.0, Ball::new(&[0.0, 0.0], 1.0), &Shape::radial_bump(), 0).unwrap();
        let b = build_atom(2, 1.0, Ball::new(&[4.0, 1.0], 0.5), &Shape::radial_bump(), 0).unwrap();
        let s = Source { dim: 2, blocks: vec![a.profile, b.profile] };
        let h = s.support_hull().unwrap();
        for blk in &s.blocks {
            assert!(geom::norm(&geom::sub(&blk.center, &h.center)) + blk.radius <= h.radius + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn atoms_are_scale_covariant(cx in -3.0f64..3.0, cy in -3.0f64..3.0, p in prop::sample::select(vec![1.0f64, 0.8, 2.0/3.0])) {
            let s = min_moment_order(2, p).unwrap();
            let a1 = build_atom(2, p, Ball::new(&[cx, cy], 1.0), &Shape::radial_bump(), s).unwrap();
            let a2 = build_atom(2, p, Ball::new(&[2.0 * cx, 2.0 * cy], 2.0), &Shape::radial_bump(), s).unwrap();
            let ratio = (PI * 4.0 / PI).powf(-1.0 / p);
            for (ux, uy) in [(0.1, 0.2), (-0.5, 0.3), (0.0, -0.9)] {
                let v1 = a1.value(&[cx + ux, cy + uy]);
                let v2 = a2.value(&[2.0 * (cx + ux), 2.0 * (cy + uy)]);
                prop_assert!((v2 - ratio * v1).abs() <= 1e-9 * a1.sup_norm);
            }
        }

        #[test]
        fn homogeneous_moment_removal(c0 in -1.0f64..1.0, c1 in -1.0f64..1.0, c2 in -1.0f64..1.0) {
            let q = Poly { terms: vec![([0,0,0], 1.0), ([1,0,0], c0), ([0,1,0], c1), ([1,1,0], c2)] };
            let a = build_atom(2, 2.0/3.0, Ball::new(&[1.0, -2.0], 0.7), &Shape::bump_times(q), 1).unwrap();
            prop_assert!(verify_atom(&a, &AtomTolerances::default()).all_pass());
        }
    }
}
