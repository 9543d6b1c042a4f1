use lpkit_core::kernel::{builtin, dini_integral, omega2, ModulusMeta, ModulusTable};
use std::f64::consts::PI;

/// (∫ sup_{|a−φ|≤η} |cos a − cos φ|² dφ)^{1/2} with η the arc of chord δ,
/// by dense sampling of both variables.
fn cos_modulus(delta: f64) -> f64 {
    let eta = 2.0 * (0.5 * delta).asin();
    let (m, k) = (4096, 400);
    let mut s = 0.0;
    for j in 0..m {
        let phi = 2.0 * PI * (j as f64 + 0.5) / m as f64;
        let sup = (0..=k)
            .map(|i| phi - eta + 2.0 * eta * i as f64 / k as f64)
            .map(|a| (a.cos() - phi.cos()).abs())
            .fold(0.0, f64::max);
        s += sup * sup;
    }
    (s * 2.0 * PI / m as f64).sqrt()
}

#[test]
fn cosine_modulus_matches_dense_sampling() {
    let k = builtin("circle-harmonic-1").unwrap();
    let grid = [1e-3, 1e-2, 0.1, 0.5, 1.0, 1.9];
    let t = omega2(&k, &grid, &ModulusMeta::new(2)).unwrap();
    for (d, v) in grid.iter().zip(&t.omega2_values) {
        let o = cos_modulus(*d);
        assert!((v - o).abs() <= 2e-3 * o, "δ = {d}: {v} vs {o}");
    }
}

#[test]
fn modulus_of_a_smooth_kernel_is_linear_near_zero() {
    let k = builtin("circle-harmonic-2").unwrap();
    let grid = [1e-4, 2e-4, 4e-4];
    let t = omega2(&k, &grid, &ModulusMeta::new(2)).unwrap();
    let r = t.omega2_values[2] / t.omega2_values[0];
    assert!((r - 4.0).abs() < 0.05, "{r}");
}

#[test]
fn jump_kernel_modulus_is_square_root() {
    // sign(cos θ) jumps by 2 at two points: ω₂(δ)² = 4·min(4η, 2π)
    let k = builtin("test-jump").unwrap();
    let grid = [0.2, 0.8, 1.6];
    let t = omega2(&k, &grid, &ModulusMeta::new(2)).unwrap();
    for (d, v) in grid.iter().zip(&t.omega2_values) {
        let o = 2.0 * (4.0 * 2.0 * (0.5 * d).asin()).min(2.0 * PI).sqrt();
        assert!((v - o).abs() <= 0.05 * o, "δ = {d}: {v} vs {o}");
    }
}

#[test]
fn dini_integral_of_scaled_table_scales() {
    let g: Vec<f64> = (0..60).map(|i| 2f64.powf(-20.0 + 21.0 * i as f64 / 59.0)).collect();
    let v: Vec<f64> = g.iter().map(|d| d.sqrt()).collect();
    let a = dini_integral(&ModulusTable::from_values(g.clone(), v.clone()).unwrap(), 0.25).unwrap().value;
    let b = dini_integral(&ModulusTable::from_values(g, v.iter().map(|x| 3.0 * x).collect()).unwrap(), 0.25).unwrap().value;
    assert!((b - 3.0 * a).abs() <= 1e-12 * b);
}
