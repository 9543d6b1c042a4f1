//! Polynomial bump profiles a(z) = A·(1 − |u|²)^m·Q(u), u = (z − c)/r.

use crate::geom::{self, Vec3};
use crate::quad::rules::GaussLegendre;
use crate::quad::sphere::SphereRule;
use serde::Serialize;

/// Multivariate polynomial Σ c_γ u^γ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Poly {
    pub terms: Vec<([u32; 3], f64)>,
}

impl Poly {
    pub fn constant(c: f64) -> Self {
        Self { terms: vec![([0, 0, 0], c)] }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    #[inline]
    pub fn eval(&self, u: &Vec3) -> f64 {
        let mut s = 0.0;
        for (e, c) in &self.terms {
            let mut t = *c;
            for i in 0..3 {
                match e[i] {
                    0 => {}
                    1 => t *= u[i],
                    2 => t *= u[i] * u[i],
                    k => t *= u[i].powi(k as i32),
                }
            }
            s += t;
        }
        s
    }

    /// self·(1 − |u|²)
    pub fn times_one_minus_r2(&self, dim: usize) -> Poly {
        let mut out = self.terms.clone();
        for (e, c) in &self.terms {
            for i in 0..dim {
                let mut f = *e;
                f[i] += 2;
                out.push((f, -c));
            }
        }
        Poly { terms: out }.simplified()
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.terms.clone();
        out.extend(other.terms.iter().map(|(e, c)| (*e, -c)));
        Poly { terms: out }.simplified()
    }

    /// Merge equal monomials, keep a canonical order.
    pub fn simplified(&self) -> Poly {
        let mut t = self.terms.clone();
        t.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<([u32; 3], f64)> = Vec::with_capacity(t.len());
        for (e, c) in t {
            match out.last_mut() {
                Some((le, lc)) if *le == e => *lc += c,
                _ => out.push((e, c)),
            }
        }
        Poly { terms: out }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.abs()).fold(0.0, f64::max)
    }
}

/// Multi-indices of total degree ≤ s in `dim` variables (graded order).
pub fn multi_indices(dim: usize, s: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for total in 0..=s {
        for a in (0..=total).rev() {
            if dim == 1 {
                if a == total {
                    out.push([a, 0, 0]);
                }
                continue;
            }
            for b in (0..=total - a).rev() {
                let c = total - a - b;
                if dim == 2 && c != 0 {
                    continue;
                }
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// One compactly supported block of a source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpProfile {
    pub dim: usize,
    pub center: Vec3,
    pub radius: f64,
    pub amplitude: f64,
    /// exponent m of (1 − |u|²)^m; 0 gives an indicator times Q
    pub bump_power: u32,
    pub poly: Poly,
}

impl BumpProfile {
    #[inline]
    pub fn value(&self, z: &Vec3) -> f64 {
        let inv = 1.0 / self.radius;
        let u = [
            (z[0] - self.center[0]) * inv,
            (z[1] - self.center[1]) * inv,
            (z[2] - self.center[2]) * inv,
        ];
        let s2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        if s2 >= 1.0 {
            return 0.0;
        }
        self.amplitude * (1.0 - s2).powi(self.bump_power as i32) * self.poly.eval(&u)
    }

    /// Value as a function of local coordinates.
    #[inline]
    pub fn local_value(&self, u: &Vec3) -> f64 {
        let s2 = geom::dot(u, u);
        if s2 >= 1.0 {
            return 0.0;
        }
        self.amplitude * (1.0 - s2).powi(self.bump_power as i32) * self.poly.eval(u)
    }

    /// Integration nodes over the ball (absolute coordinates, weights
    /// including the Jacobian), exact for polynomials of degree ≤ `degree`
    /// restricted to the ball.
    pub fn ball_rule(&self, degree: u32) -> Vec<(Vec3, f64)> {
        ball_rule(self.dim, &self.center, self.radius, degree)
    }

    /// ∫ a(z) z^γ dz in absolute coordinates.
    pub fn moment(&self, gamma: &[u32; 3]) -> f64 {
        let deg = 2 * self.bump_power + self.poly.degree() + gamma.iter().sum::<u32>();
        self.ball_rule(deg)
            .iter()
            .map(|(z, w)| {
                let mut m = 1.0;
                for i in 0..3 {
                    m *= z[i].powi(gamma[i] as i32);
                }
                w * self.value_inside(z) * m
            })
            .sum()
    }

    /// Like `value` but without the support cut (used on interior nodes).
    fn value_inside(&self, z: &Vec3) -> f64 {
        let u = geom::scale(&geom::sub(z, &self.center), 1.0 / self.radius);
        let s2 = geom::dot(&u, &u);
        self.amplitude * (1.0 - s2).max(0.0).powi(self.bump_power as i32) * self.poly.eval(&u)
    }

    /// max |a| estimated by a dense polar grid followed by local pattern search.
    pub fn sup_estimate(&self) -> f64 {
        let unit = BumpProfile { amplitude: 1.0, ..self.clone() };
        let f = |u: &Vec3| unit.local_value(u).abs();
        let mut cands: Vec<(f64, Vec3)> = Vec::new();
        let nr = 48;
        let na = if self.dim == 2 { 96 } else { 32 };
        let push = |u: Vec3, c: &mut Vec<(f64, Vec3)>| c.push((f(&u), u));
        push([0.0; 3], &mut cands);
        for i in 1..=nr {
            let rho = i as f64 / nr as f64 * 0.999_999;
            if self.dim == 2 {
                for j in 0..na {
                    let a = 2.0 * std::f64::consts::PI * j as f64 / na as f64;
                    push([rho * a.cos(), rho * a.sin(), 0.0], &mut cands);
                }
            } else {
                let rule = SphereRule::new(3, na);
                for d in &rule.dirs {
                    push(geom::scale(d, rho), &mut cands);
                }
            }
        }
        cands.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut best = cands[0].0;
        for (v0, u0) in cands.iter().take(8) {
            let (mut v, mut u) = (*v0, *u0);
            let mut step = 1.0 / nr as f64;
            while step > 1e-10 {
                let mut moved = false;
                for axis in 0..self.dim {
                    for sgn in [-1.0, 1.0] {
                        let mut t = u;
                        t[axis] += sgn * step;
                        let ft = f(&t);
                        if ft > v {
                            v = ft;
                            u = t;
                            moved = true;
                        }
                    }
                }
                if !moved {
                    step *= 0.5;
                }
            }
            best = best.max(v);
        }
        best * self.amplitude.abs()
    }
}

/// Product rule on a ball: GL in the radius times a sphere rule.
pub fn ball_rule(dim: usize, center: &Vec3, radius: f64, degree: u32) -> Vec<(Vec3, f64)> {
    let nr = (degree as usize + dim + 2) / 2 + 1;
    let gl = GaussLegendre::new(nr);
    let sphere = SphereRule::new(dim, (degree as usize + 2).max(8) + (degree as usize + 2) % 2);
    let mut out = Vec::with_capacity(nr * sphere.len());
    for (x, w) in gl.nodes.iter().zip(&gl.weights) {
        let rho = 0.5 * (x + 1.0);
        let jac = 0.5 * w * rho.powi(dim as i32 - 1) * radius.powi(dim as i32);
        for (d, wd) in sphere.dirs.iter().zip(&sphere.weights) {
            out.push((geom::add(center, &geom::scale(d, rho * radius)), jac * wd));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(2, 0).len(), 1);
        assert_eq!(multi_indices(2, 1).len(), 3);
        assert_eq!(multi_indices(2, 2).len(), 6);
        assert_eq!(multi_indices(3, 2).len(), 10);
    }

    #[test]
    fn ball_rule_moments() {
        // ∫_{B(0,1)} |x|² = π/2 in 2D; ∫_{B(0,2)} 1 = 32π/3 in 3D
        let r = ball_rule(2, &[0.0; 3], 1.0, 4);
        assert_relative_eq!(r.iter().map(|(z, w)| w * geom::dot(z, z)).sum::<f64>(), PI / 2.0, epsilon = 1e-13);
        let r = ball_rule(3, &[1.0, 0.0, 0.0], 2.0, 2);
        assert_relative_eq!(r.iter().map(|(_, w)| w).sum::<f64>(), 32.0 * PI / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn bump_moment_closed_form() {
        // ∫_{B(0,1)} (1 − |u|²)² = π/3
        let b = BumpProfile { dim: 2, center: [0.0; 3], radius: 1.0, amplitude: 1.0, bump_power: 2, poly: Poly::constant(1.0) };
        assert_relative_eq!(b.moment(&[0, 0, 0]), PI / 3.0, epsilon = 1e-13);
        assert_relative_eq!(b.sup_estimate(), 1.0, epsilon = 1e-12);
    }
}
