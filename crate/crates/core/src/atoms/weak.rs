//! Synthetic weak-Hardy inputs f = Σ_k Σ_i b_i^k with per-level budgets, the
//! level split at k₀ = ⌊log₂ λ⌋ and the dilated cover of the upper levels.

use super::{min_moment_order, multi_indices, remove_moments, Ball, BumpProfile, Shape, Source};
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use serde::Serialize;

/// Balls requested for one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelPlan {
    pub k: i32,
    pub balls: Vec<Ball>,
}

/// One block b_i^k.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block {
    pub k: i32,
    pub ball: Ball,
    pub profile: BumpProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakHardySequence {
    pub dim: usize,
    pub p: f64,
    /// achieved budget max_k 2^{kp} Σ_i |B_i^k|
    pub c: f64,
    /// pointwise overlap bound within a level (disjoint packing)
    pub c_ov: f64,
    /// sup |b_i^k| = c_b·2^k
    pub c_b: f64,
    pub blocks: Vec<Block>,
}

impl WeakHardySequence {
    pub fn source(&self) -> Source {
        Source { dim: self.dim, blocks: self.blocks.iter().map(|b| b.profile.clone()).collect() }
    }

    pub fn levels(&self) -> Vec<i32> {
        let mut ks: Vec<i32> = self.blocks.iter().map(|b| b.k).collect();
        ks.sort_unstable();
        ks.dedup();
        ks
    }

    pub fn level_measure(&self, k: i32) -> f64 {
        self.blocks.iter().filter(|b| b.k == k).map(|b| b.ball.volume(self.dim)).sum()
    }

    /// f ↦ 2f: every block moves one level up.
    pub fn doubled(&self) -> Self {
        let mut s = self.clone();
        for b in &mut s.blocks {
            b.k += 1;
            b.profile.amplitude *= 2.0;
        }
        s.c *= 2f64.powf(self.p);
        s
    }
}

/// Build blocks with sup exactly 2^k and moments removed to ⌊n(1/p − 1)⌋.
/// `budget` (if given) is the c the plan must respect.
pub fn build_weak_hardy(
    dim: usize,
    plan: &[LevelPlan],
    shape: &Shape,
    p: f64,
    budget: Option<f64>,
) -> Result<WeakHardySequence> {
    let s = min_moment_order(dim, p)?;
    let q = remove_moments(dim, &shape.q, s)?;
    let unit = BumpProfile { dim, center: [0.0; 3], radius: 1.0, amplitude: 1.0, bump_power: 2, poly: q };
    let raw_sup = unit.sup_estimate();
    let mut blocks = Vec::new();
    let mut c: f64 = 0.0;
    for level in plan {
        for (i, a) in level.balls.iter().enumerate() {
            if !(a.radius > 0.0) {
                return Err(Error::Packing(format!("level {}: nonpositive radius", level.k)));
            }
            for b in &level.balls[i + 1..] {
                if a.intersects(b) {
                    return Err(Error::Packing(format!(
                        "level {}: balls at {:?} and {:?} overlap",
                        level.k, a.center, b.center
                    )));
                }
            }
        }
        let measure: f64 = level.balls.iter().map(|b| b.volume(dim)).sum();
        let need = measure * 2f64.powf(level.k as f64 * p);
        if let Some(cb) = budget {
            if need > cb * (1.0 + 1e-12) {
                return Err(Error::Packing(format!(
                    "level {}: Σ|B| = {measure:.6} exceeds c·2^(-kp) = {:.6}",
                    level.k,
                    cb * 2f64.powf(-level.k as f64 * p)
                )));
            }
        }
        c = c.max(need);
        for ball in &level.balls {
            let profile = BumpProfile {
                center: ball.center,
                radius: ball.radius,
                amplitude: 2f64.powi(level.k) / raw_sup,
                ..unit.clone()
            };
            blocks.push(Block { k: level.k, ball: *ball, profile });
        }
    }
    Ok(WeakHardySequence { dim, p, c, c_ov: 1.0, c_b: 1.0, blocks })
}

/// Machine check of the four sequence invariants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakHardyReport {
    pub budget_ok: bool,
    pub max_overlap: usize,
    pub sup_ratio_max: f64,
    pub worst_moment: f64,
    pub pass: bool,
}

pub fn verify_weak_hardy(seq: &WeakHardySequence, test_grid: &[Vec3]) -> WeakHardyReport {
    let dim = seq.dim;
    let budget_ok = seq
        .levels()
        .iter()
        .all(|&k| seq.level_measure(k) <= seq.c * 2f64.powf(-k as f64 * seq.p) * (1.0 + 1e-12));
    let mut max_overlap = 0;
    for k in seq.levels() {
        for x in test_grid {
            let cnt = seq
                .blocks
                .iter()
                .filter(|b| b.k == k && geom::norm(&geom::sub(x, &b.ball.center)) < b.ball.radius)
                .count();
            max_overlap = max_overlap.max(cnt);
        }
    }
    let mut sup_ratio_max: f64 = 0.0;
    let mut worst_moment: f64 = 0.0;
    let s = min_moment_order(dim, seq.p).unwrap_or(0);
    for b in &seq.blocks {
        let sup = b.profile.sup_estimate();
        sup_ratio_max = sup_ratio_max.max(sup / 2f64.powi(b.k));
        let lever = geom::norm(&b.ball.center) + b.ball.radius;
        for g in multi_indices(dim, s) {
            let ord: u32 = g.iter().sum();
            let m = b.profile.moment(&g).abs() / (sup * b.ball.volume(dim) * lever.powi(ord as i32));
            worst_moment = worst_moment.max(m);
        }
    }
    let pass = budget_ok
        && max_overlap as f64 <= seq.c_ov
        && sup_ratio_max <= seq.c_b * (1.0 + 1e-9)
        && worst_moment <= super::MOMENT_TOL;
    WeakHardyReport { budget_ok, max_overlap, sup_ratio_max, worst_moment, pass }
}

/// The recomputed L⁴ size of F₁ against λ^{1−p/4} c^{1/4}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L4Claim {
    pub l4_norm: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSplit {
    pub k0: i32,
    pub f1: Vec<Block>,
    pub f2: Vec<Block>,
    pub l4: L4Claim,
}

fn level_of(lambda: f64) -> i32 {
    let mut k = lambda.log2().floor() as i32;
    while 2f64.powi(k) > lambda {
        k -= 1;
    }
    while 2f64.powi(k + 1) <= lambda {
        k += 1;
    }
    k
}

/// F₁ = levels k ≤ k₀, F₂ = levels k > k₀ with 2^{k₀} ≤ λ < 2^{k₀+1}.
pub fn split_at_level(seq: &WeakHardySequence, lambda: f64) -> Result<LevelSplit> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
    }
    let k0 = level_of(lambda);
    let (f1, f2): (Vec<Block>, Vec<Block>) = seq.blocks.iter().cloned().partition(|b| b.k <= k0);
    let l4_norm = l4_norm(seq.dim, &f1);
    let bound = lambda.powf(1.0 - seq.p / 4.0) * seq.c.powf(0.25);
    let ratio = if bound > 0.0 { l4_norm / bound } else { 0.0 };
    Ok(LevelSplit { k0, f1, f2, l4: L4Claim { l4_norm, bound, ratio } })
}

/// ‖Σ blocks‖_{L⁴} by a midpoint grid over the union's bounding box.
fn l4_norm(dim: usize, blocks: &[Block]) -> f64 {
    if blocks.is_empty() {
        return 0.0;
    }
    let src = Source { dim, blocks: blocks.iter().map(|b| b.profile.clone()).collect() };
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for b in blocks {
        for i in 0..dim {
            lo[i] = lo[i].min(b.ball.center[i] - b.ball.radius);
            hi[i] = hi[i].max(b.ball.center[i] + b.ball.radius);
        }
    }
    let rmin = blocks.iter().map(|b| b.ball.radius).fold(f64::INFINITY, f64::min);
    let h = rmin / 16.0;
    let counts: Vec<usize> = (0..dim).map(|i| ((hi[i] - lo[i]) / h).ceil() as usize).collect();
    let total: usize = counts.iter().product();
    let cap = if dim == 2 { 4_000_000 } else { 8_000_000 };
    let h = if total > cap { h * (total as f64 / cap as f64).powf(1.0 / dim as f64) } else { h };
    let counts: Vec<usize> = (0..dim).map(|i| ((hi[i] - lo[i]) / h).ceil() as usize).collect();
    let mut s = 0.0;
    let nz = if dim == 3 { counts[2] } else { 1 };
    for i in 0..counts[0] {
        for j in 0..counts[1] {
            for k in 0..nz {
                let x = [
                    lo[0] + h * (i as f64 + 0.5),
                    lo[1] + h * (j as f64 + 0.5),
                    if dim == 3 { lo[2] + h * (k as f64 + 0.5) } else { 0.0 },
                ];
                s += src.value(&x).powi(4);
            }
        }
    }
    (s * h.powi(dim as i32)).powf(0.25)
}

/// 64·(3/2)^{(k−k₀)p/n}
pub fn dilation_factor(k: i32, k0: i32, p: f64, n: usize) -> f64 {
    64.0 * 1.5f64.powf((k - k0) as f64 * p / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilatedCover {
    pub k0: i32,
    /// (level, dilated ball) for every block with k > k₀
    pub balls: Vec<(i32, Ball)>,
    pub total_measure: f64,
    /// 64ⁿ Σ_{k>k₀} (3/2)^{(k−k₀)p} 2^{−kp} c
    pub bound: f64,
}

pub fn dilated_cover(seq: &WeakHardySequence, k0: i32) -> DilatedCover {
    let n = seq.dim;
    let mut balls = Vec::new();
    let mut total = 0.0;
    for b in seq.blocks.iter().filter(|b| b.k > k0) {
        let r = dilation_factor(b.k, k0, seq.p, n) * b.ball.radius;
        let db = Ball { center: b.ball.center, radius: r };
        total += db.volume(n);
        balls.push((b.k, db));
    }
    let bound: f64 = seq
        .levels()
        .iter()
        .filter(|&&k| k > k0)
        .map(|&k| 64f64.powi(n as i32) * 1.5f64.powf((k - k0) as f64 * seq.p) * 2f64.powf(-k as f64 * seq.p) * seq.c)
        .sum();
    DilatedCover { k0, balls, total_measure: total, bound }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn grid() -> Vec<Vec3> {
        let mut g = Vec::new();
        for i in 0..60 {
            for j in 0..60 {
                g.push([-6.0 + 0.2 * i as f64, -6.0 + 0.2 * j as f64, 0.0]);
            }
        }
        g
    }

    #[test]
    fn single_level_budget() {
        let plan = [LevelPlan { k: 0, balls: vec![Ball::new(&[0.0, 0.0], 1.0)] }];
        assert!(matches!(build_weak_hardy(2, &plan, &Shape::radial_bump(), 1.0, Some(3.0)), Err(Error::Packing(_))));
        let seq = build_weak_hardy(2, &plan, &Shape::radial_bump(), 1.0, Some(PI)).unwrap();
        assert_eq!(seq.blocks.len(), 1);
        assert_relative_eq!(seq.c, PI, epsilon = 1e-12);
        assert_relative_eq!(seq.blocks[0].profile.sup_estimate(), 1.0, epsilon = 1e-9);
        assert!(verify_weak_hardy(&seq, &grid()).pass);
    }

    #[test]
    fn three_levels_with_halving_measure() {
        // |B_i^k| halves per level: radius shrinks by √2
        let plan: Vec<LevelPlan> = (1..=3)
            .map(|k| {
                let r = 2f64.powf(-(k as f64) / 2.0);
                LevelPlan { k, balls: vec![Ball::new(&[3.0 * k as f64 - 6.0, 0.0], r)] }
            })
            .collect();
        let seq = build_weak_hardy(2, &plan, &Shape::radial_bump(), 1.0, None).unwrap();
        // oracle: direct summation
        let mut c: f64 = 0.0;
        for k in 1..=3 {
            let r = 2f64.powf(-(k as f64) / 2.0);
            c = c.max(PI * r * r * 2f64.powi(k));
        }
        assert_relative_eq!(seq.c, c, epsilon = 1e-12);
        for k in 1..=3 {
            assert!(seq.level_measure(k) <= seq.c * 2f64.powi(-k) * (1.0 + 1e-12));
        }
        assert!(verify_weak_hardy(&seq, &grid()).pass);
    }

    #[test]
    fn empty_plan() {
        let seq = build_weak_hardy(2, &[], &Shape::radial_bump(), 1.0, None).unwrap();
        assert!(seq.blocks.is_empty());
        assert_eq!(seq.c, 0.0);
    }

    #[test]
    fn overlapping_balls_rejected() {
        let plan = [LevelPlan { k: 0, balls: vec![Ball::new(&[0.0, 0.0], 1.0), Ball::new(&[1.5, 0.0], 1.0)] }];
        assert!(matches!(build_weak_hardy(2, &plan, &Shape::radial_bump(), 1.0, None), Err(Error::Packing(_))));
    }

    #[test]
    fn split_levels() {
        let plan: Vec<LevelPlan> = (-3..=4)
            .map(|k| LevelPlan { k, balls: vec![Ball::new(&[10.0 * k as f64, 0.0], 0.5)] })
            .collect();
        let seq = build_weak_hardy(2, &plan, &Shape::radial_bump(), 1.0, None).unwrap();
        assert_eq!(split_at_level(&seq, 5.0).unwrap().k0, 2);
        assert_eq!(split_at_level(&seq, 1.0).unwrap().k0, 0);
        assert_eq!(split_at_level(&seq, 0.3).unwrap().k0, -2);
        assert_eq!(split_at_level(&seq, 4.0).unwrap().k0, 2);
        assert!(split_at_level(&seq, 0.0).is_err());
        let sp = split_at_level(&seq, 5.0).unwrap();
        assert_eq!(sp.f1.len() + sp.f2.len(), seq.blocks.len());
        assert!(sp.f1.iter().all(|b| b.k <= 2) && sp.f2.iter().all(|b| b.k > 2));
        assert!(sp.l4.ratio.is_finite() && sp.l4.ratio > 0.0);
        // monotone in λ
        let mut prev = 0;
        for l in [0.1, 0.5, 1.0, 3.0, 7.9, 8.0, 100.0] {
            let n1 = split_at_level(&seq, l).unwrap().f1.len();
            assert!(n1 >= prev);
            prev = n1;
        }
    }

    #[test]
    fn dilation_examples() {
        assert_relative_eq!(dilation_factor(1, 0, 1.0, 2), 64.0 * 1.5f64.sqrt(), epsilon = 1e-12);
        assert!((dilation_factor(1, 0, 1.0, 2) - 78.38).abs() < 5e-3);
        assert_eq!(dilation_factor(3, 3, 0.7, 2), 64.0);
    }

    #[test]
    fn dilated_measure_by_hand() {
        let plan: Vec<LevelPlan> = (0..3)
            .map(|k| LevelPlan { k, balls: vec![Ball::new(&[0.0, 20.0 * k as f64], 0.5f64.powi(k))] })
            .collect();
        let seq = build_weak_hardy(2, &plan, &Shape::radial_bump(), 1.0, None).unwrap();
        let cov = dilated_cover(&seq, 0);
        let hand: f64 = (1..3)
            .map(|k| {
                let r = 64.0 * 1.5f64.powf(k as f64 / 2.0) * 0.5f64.powi(k);
                PI * r * r
            })
            .sum();
        assert_relative_eq!(cov.total_measure, hand, max_relative = 1e-12);
        assert!(cov.total_measure <= cov.bound * (1.0 + 1e-12));
        assert_eq!(cov.balls.len(), 2);
    }
}
