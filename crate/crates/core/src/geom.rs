//! Small fixed-size vector helpers. Points live in `[f64; 3]`; for n = 2 the
//! third coordinate stays zero.

pub type Vec3 = [f64; 3];

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Embed a slice of length n ≤ 3.
pub fn to_vec3(x: &[f64]) -> Vec3 {
    let mut v = [0.0; 3];
    v[..x.len()].copy_from_slice(x);
    v
}

/// Two unit vectors completing `axis` (unit) to an orthonormal frame.
pub fn frame(axis: &Vec3) -> (Vec3, Vec3) {
    let helper = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = cross(axis, &helper);
    let e1 = scale(&e1, 1.0 / norm(&e1));
    let e2 = cross(axis, &e1);
    (e1, e2)
}

/// Surface measure of S^{n-1}.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            // 2 π^{n/2} / Γ(n/2) via the recursion |S^{n-1}| = 2π/(n-2) |S^{n-3}|
            2.0 * PI / (n as f64 - 2.0) * sphere_area(n - 2)
        }
    }
}

/// Lebesgue measure of a ball of radius r in ℝⁿ.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    sphere_area(n) / n as f64 * r.powi(n as i32)
}

/// Axis-aligned planar rectangle.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        Self { min, max }
    }

    /// Square of half-width `h` about `c`.
    pub fn square(c: [f64; 2], h: f64) -> Self {
        Self { min: [c[0] - h, c[1] - h], max: [c[0] + h, c[1] + h] }
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.min[0] + self.max[0]), 0.5 * (self.min[1] + self.max[1])]
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    /// Smallest rectangle containing both.
    pub fn union(&self, o: &Rect) -> Rect {
        Rect {
            min: [self.min[0].min(o.min[0]), self.min[1].min(o.min[1])],
            max: [self.max[0].max(o.max[0]), self.max[1].max(o.max[1])],
        }
    }
}
