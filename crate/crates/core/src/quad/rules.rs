//! One-dimensional rules: Gauss-Legendre, Gauss-Kronrod (7/15), global
//! adaptive integration, and the interpolation/integration matrices used to
//! build cumulative radial profiles.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::{Arc, Mutex, OnceLock};

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "need at least one node");
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let mf = m as f64;
        for i in 0..(m + 1) / 2 {
            // Tricomi initial guess, then Newton on P_m.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(m, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared cached rule of order `m`.
    pub fn cached(m: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<Vec<Option<Arc<GaussLegendre>>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
        let mut guard = cache.lock().expect("rule cache poisoned");
        if guard.len() <= m {
            guard.resize(m + 1, None);
        }
        guard[m]
            .get_or_insert_with(|| Arc::new(GaussLegendre::new(m)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

// Kronrod abscissae (positive half, descending) and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd-indexed Kronrod abscissae (1,3,5,7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One G7-K15 application: (kronrod estimate, error estimate). The error
/// is |K − G| rescaled the QUADPACK way, which is far less pessimistic
/// for smooth integrands than the raw difference.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut fv = [0.0; 14];
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        rk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            rg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * rk;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[2 * j] - mean).abs() + (fv[2 * j + 1] - mean).abs());
    }
    let asc = asc * h.abs();
    let mut err = ((rk - rg) * h).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    (rk * h, err)
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// How an interval is parameterized before the Kronrod rule sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalMap {
    Linear,
    /// integrate in ln x (requires 0 < a < b)
    Log,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    map: IntervalMap,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn eval_piece<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, map: IntervalMap) -> Piece {
    let (value, error) = match map {
        IntervalMap::Linear => gk15(f, a, b),
        IntervalMap::Log => {
            let mut g = |s: f64| {
                let x = s.exp();
                f(x) * x
            };
            gk15(&mut g, a.ln(), b.ln())
        }
    };
    Piece { a, b, map, value, error }
}

/// Globally adaptive G7-K15 over consecutive `breaks`. Intervals whose end
/// ratio exceeds 4 (and that stay away from 0) are integrated in ln x.
pub fn adaptive<F: FnMut(f64) -> f64>(
    f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_pieces: usize,
) -> QuadResult {
    adaptive_with(f, breaks, abs_tol, rel_tol, max_pieces, true)
}

/// [`adaptive`] with the logarithmic map optional (off for angles).
pub fn adaptive_with<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_pieces: usize,
    allow_log: bool,
) -> QuadResult {
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let map = if allow_log && a > 0.0 && b / a > 4.0 {
            IntervalMap::Log
        } else {
            IntervalMap::Linear
        };
        heap.push(eval_piece(&mut f, a, b, map));
        evaluations += 15;
    }
    let total = |h: &BinaryHeap<Piece>| -> (f64, f64) {
        let mut items: Vec<&Piece> = h.iter().collect();
        // fixed summation order keeps the result independent of heap layout
        items.sort_by(|p, q| p.a.total_cmp(&q.a));
        items
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
    };
    let (mut value, mut error) = total(&heap);
    let mut converged = true;
    while error > abs_tol.max(rel_tol * value.abs()) {
        if heap.len() >= max_pieces {
            converged = false;
            break;
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = match worst.map {
            IntervalMap::Linear => 0.5 * (worst.a + worst.b),
            IntervalMap::Log => (worst.a * worst.b).sqrt(),
        };
        if !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            converged = false;
            break;
        }
        let left = eval_piece(&mut f, worst.a, mid, worst.map);
        let right = eval_piece(&mut f, mid, worst.b, worst.map);
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // refresh occasionally to flush cancellation in the running sums
        if heap.len() % 64 == 0 {
            let t = total(&heap);
            value = t.0;
            error = t.1;
        }
    }
    let (value, error) = total(&heap);
    QuadResult { value, error, evaluations, converged }
}

/// Barycentric weights for arbitrary distinct nodes.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    nodes
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let p: f64 = nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| xi - xj)
                .product();
            1.0 / p
        })
        .collect()
}

/// Evaluate the interpolant through (nodes, values) at x.
pub fn barycentric_eval(nodes: &[f64], bw: &[f64], values: &[f64], x: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&xi, &wi), &vi) in nodes.iter().zip(bw).zip(values) {
        let d = x - xi;
        if d == 0.0 {
            return vi;
        }
        let c = wi / d;
        num += c * vi;
        den += c;
    }
    num / den
}

/// Per-order tables for a panel: GL rule, spectral integration matrix
/// `S[j][l] = ∫_{-1}^{x_j} ℓ_l`, and barycentric data for the node set
/// extended by the endpoints ±1.
#[derive(Debug)]
pub struct PanelRule {
    pub gl: Arc<GaussLegendre>,
    pub integ: Vec<f64>,
    pub ext_nodes: Vec<f64>,
    pub ext_weights: Vec<f64>,
}

impl PanelRule {
    pub fn new(m: usize) -> Self {
        let gl = GaussLegendre::cached(m);
        let bw = barycentric_weights(&gl.nodes);
        let mut integ = vec![0.0; m * m];
        for j in 0..m {
            let xj = gl.nodes[j];
            let h = 0.5 * (xj + 1.0);
            for q in 0..m {
                let s = -1.0 + h * (gl.nodes[q] + 1.0);
                let wq = gl.weights[q] * h;
                // Lagrange basis values at s
                let mut exact = None;
                for l in 0..m {
                    if s == gl.nodes[l] {
                        exact = Some(l);
                    }
                }
                match exact {
                    Some(l) => integ[j * m + l] += wq,
                    None => {
                        let den: f64 = (0..m).map(|l| bw[l] / (s - gl.nodes[l])).sum();
                        for l in 0..m {
                            integ[j * m + l] += wq * bw[l] / (s - gl.nodes[l]) / den;
                        }
                    }
                }
            }
        }
        let mut ext_nodes = Vec::with_capacity(m + 2);
        ext_nodes.push(-1.0);
        ext_nodes.extend_from_slice(&gl.nodes);
        ext_nodes.push(1.0);
        let ext_weights = barycentric_weights(&ext_nodes);
        Self { gl, integ, ext_nodes, ext_weights }
    }

    pub fn cached(m: usize) -> Arc<PanelRule> {
        static CACHE: OnceLock<Mutex<Vec<Option<Arc<PanelRule>>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
        let mut guard = cache.lock().expect("rule cache poisoned");
        if guard.len() <= m {
            guard.resize(m + 1, None);
        }
        guard[m].get_or_insert_with(|| Arc::new(PanelRule::new(m))).clone()
    }

    pub fn order(&self) -> usize {
        self.gl.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_exact_to_degree_2m_minus_1() {
        for m in [1usize, 2, 5, 12, 24, 40] {
            let gl = GaussLegendre::new(m);
            let wsum: f64 = gl.weights.iter().sum();
            assert_relative_eq!(wsum, 2.0, epsilon = 1e-13);
            for d in 0..(2 * m) {
                let approx: f64 = gl.integrate(-1.0, 1.0, |x| x.powi(d as i32));
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "m={m} d={d}: {approx} vs {exact}");
            }
        }
    }

    #[test]
    fn kronrod_pair_degrees() {
        // K15 exact through degree 22, G7 through degree 13
        for d in 0..=22 {
            let mut f = |x: f64| x.powi(d);
            let (k, _) = gk15(&mut f, 0.0, 1.0);
            assert_relative_eq!(k, 1.0 / (d as f64 + 1.0), epsilon = 1e-14);
        }
        for d in 0..=13 {
            let mut f = |x: f64| x.powi(d);
            let (_, err) = gk15(&mut f, 0.0, 1.0);
            assert!(err < 1e-14, "degree {d} err {err}");
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity_and_log_ranges() {
        let r = adaptive(|x: f64| x.sqrt().recip(), &[0.0, 1.0], 0.0, 1e-10, 500);
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-8);
        let r = adaptive(|x: f64| x.powi(-3), &[1.0, 1e6], 0.0, 1e-12, 500);
        assert_relative_eq!(r.value, 0.5 * (1.0 - 1e-12), max_relative = 1e-11);
        assert!(r.converged);
    }

    #[test]
    fn spectral_integration_matrix_is_exact_on_polynomials() {
        let pr = PanelRule::new(10);
        let m = pr.order();
        // h(x) = 3x^2 - x + 2 -> H(x) = x^3 - x^2/2 + 2x, H(-1) = -3.5
        let h: Vec<f64> = pr.gl.nodes.iter().map(|x| 3.0 * x * x - x + 2.0).collect();
        for j in 0..m {
            let x = pr.gl.nodes[j];
            let approx: f64 = (0..m).map(|l| pr.integ[j * m + l] * h[l]).sum();
            let exact = x * x * x - 0.5 * x * x + 2.0 * x + 3.5;
            assert_relative_eq!(approx, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn barycentric_interpolation_reproduces_polynomials() {
        let pr = PanelRule::new(8);
        let vals: Vec<f64> = pr.ext_nodes.iter().map(|x| x.powi(5) - 2.0 * x).collect();
        for &x in &[-0.93, -0.1, 0.0, 0.42, 0.999] {
            let v = barycentric_eval(&pr.ext_nodes, &pr.ext_weights, &vals, x);
            assert_relative_eq!(v, x.powi(5) - 2.0 * x, epsilon = 1e-13);
        }
    }
}
