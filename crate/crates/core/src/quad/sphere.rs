//! Quadrature on S^{n-1} with unnormalized surface measure.
//!
//! n = 2: composite trapezoid on the circle. n = 3: Gauss-Legendre in cos θ
//! times trapezoid in azimuth, exact for spherical polynomials of degree
//! below the order.

use super::rules::GaussLegendre;
use crate::geom::Vec3;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct SphereRule {
    pub dim: usize,
    pub dirs: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// `order` is the number of nodes along a great circle.
    pub fn new(dim: usize, order: usize) -> Self {
        let order = order.max(4);
        match dim {
            2 => {
                let w = 2.0 * PI / order as f64;
                let dirs = (0..order)
                    .map(|j| {
                        let a = w * j as f64;
                        [a.cos(), a.sin(), 0.0]
                    })
                    .collect();
                Self { dim, dirs, weights: vec![w; order] }
            }
            3 => {
                let m = (order / 2).max(2);
                let gl = GaussLegendre::new(m);
                let naz = order;
                let waz = 2.0 * PI / naz as f64;
                let mut dirs = Vec::with_capacity(m * naz);
                let mut weights = Vec::with_capacity(m * naz);
                for (c, wc) in gl.nodes.iter().zip(&gl.weights) {
                    let s = (1.0 - c * c).max(0.0).sqrt();
                    for k in 0..naz {
                        let a = waz * k as f64;
                        dirs.push([s * a.cos(), s * a.sin(), *c]);
                        weights.push(wc * waz);
                    }
                }
                Self { dim, dirs, weights }
            }
            _ => panic!("sphere rules exist for n = 2 and n = 3 only"),
        }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn integrate<F: FnMut(&Vec3) -> f64>(&self, mut f: F) -> f64 {
        self.dirs.iter().zip(&self.weights).map(|(d, w)| w * f(d)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn total_measure() {
        assert_relative_eq!(SphereRule::new(2, 64).integrate(|_| 1.0), 2.0 * PI, epsilon = 1e-13);
        assert_relative_eq!(SphereRule::new(3, 16).integrate(|_| 1.0), 4.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn second_moments() {
        // ∫ x² over S¹ = π, over S² = 4π/3
        assert_relative_eq!(SphereRule::new(2, 32).integrate(|d| d[0] * d[0]), PI, epsilon = 1e-13);
        assert_relative_eq!(
            SphereRule::new(3, 12).integrate(|d| d[0] * d[0]),
            4.0 * PI / 3.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            SphereRule::new(3, 12).integrate(|d| d[2].powi(4)),
            4.0 * PI / 5.0,
            epsilon = 1e-12
        );
    }
}
