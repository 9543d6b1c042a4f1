//! Closed-form-ish pieces of the t-integral with the weight
//! (t/(t+D))^L · t^{−k}, used where F(y,·) is already constant.

use crate::quad::rules::GaussLegendre;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

const LOG_LO: f64 = -40.0;
const LOG_HI: f64 = 40.0;
const STEP: f64 = 0.02;

/// H(σ) = ∫_σ^∞ (s/(1+s))^L s^{−k} ds tabulated as ln H on a ln σ grid with
/// cubic Hermite interpolation; closed-form asymptotics outside the grid.
#[derive(Debug)]
pub struct WeightTail {
    pub l: f64,
    pub k: f64,
    ln_h: Vec<f64>,
    dln_h: Vec<f64>,
}

impl WeightTail {
    fn integrand(&self, s: f64) -> f64 {
        (s / (1.0 + s)).powf(self.l) * s.powf(-self.k)
    }

    fn asym_hi(&self, s: f64) -> f64 {
        // ∫_s^∞ s^{−k}(1 + 1/s)^{−L} ≈ s^{1−k}/(k−1) − L s^{−k}/k + L(L+1)/2 s^{−k−1}/(k+1)
        let k = self.k;
        let l = self.l;
        s.powf(1.0 - k) / (k - 1.0) - l * s.powf(-k) / k + 0.5 * l * (l + 1.0) * s.powf(-k - 1.0) / (k + 1.0)
    }

    /// ∫_a^b s^{L−k}(1 − L s) ds for small a < b.
    fn small_piece(&self, a: f64, b: f64) -> f64 {
        let p = self.l - self.k;
        let prim = |s: f64, q: f64| {
            if (q + 1.0).abs() < 1e-12 {
                s.ln()
            } else {
                s.powf(q + 1.0) / (q + 1.0)
            }
        };
        (prim(b, p) - prim(a, p)) - self.l * (prim(b, p + 1.0) - prim(a, p + 1.0))
            + 0.5 * self.l * (self.l + 1.0) * (prim(b, p + 2.0) - prim(a, p + 2.0))
    }

    fn new(l: f64, k: f64) -> Self {
        assert!(k > 1.0, "t-weight exponent must exceed 1");
        let n = ((LOG_HI - LOG_LO) / STEP).round() as usize + 1;
        let mut me = Self { l, k, ln_h: vec![0.0; n], dln_h: vec![0.0; n] };
        let gl = GaussLegendre::cached(10);
        let mut h = me.asym_hi(LOG_HI.exp());
        for i in (0..n).rev() {
            let ell = LOG_LO + STEP * i as f64;
            if i + 1 < n {
                let a = ell;
                let b = ell + STEP;
                h += gl.integrate(a, b, |x| {
                    let s = x.exp();
                    me.integrand(s) * s
                });
            }
            let s = ell.exp();
            me.ln_h[i] = h.ln();
            me.dln_h[i] = -me.integrand(s) * s / h;
        }
        me
    }

    /// Shared table for (L, k).
    pub fn get(l: f64, k: f64) -> Arc<WeightTail> {
        static CACHE: OnceLock<Mutex<HashMap<(u64, u64), Arc<WeightTail>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (l.to_bits(), k.to_bits());
        if let Some(t) = cache.lock().expect("weight cache poisoned").get(&key) {
            return t.clone();
        }
        let t = Arc::new(WeightTail::new(l, k));
        cache.lock().expect("weight cache poisoned").entry(key).or_insert(t).clone()
    }

    /// H(σ) for σ > 0.
    pub fn h(&self, s: f64) -> f64 {
        let ell = s.ln();
        if ell >= LOG_HI {
            return self.asym_hi(s);
        }
        if ell <= LOG_LO {
            let s0 = LOG_LO.exp();
            return self.ln_h[0].exp() + self.small_piece(s, s0);
        }
        let x = (ell - LOG_LO) / STEP;
        let i = (x.floor() as usize).min(self.ln_h.len() - 2);
        let u = x - i as f64;
        let (y0, y1) = (self.ln_h[i], self.ln_h[i + 1]);
        let (m0, m1) = (self.dln_h[i] * STEP, self.dln_h[i + 1] * STEP);
        let u2 = u * u;
        let u3 = u2 * u;
        let v = (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * m1;
        v.exp()
    }

    /// ∫_a^b (t/(t+d))^L t^{−k} dt, 0 < a ≤ b ≤ ∞, d ≥ 0.
    pub fn segment(&self, a: f64, b: f64, d: f64) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        let k = self.k;
        if d == 0.0 {
            let top = if b.is_finite() { b.powf(1.0 - k) } else { 0.0 };
            return (a.powf(1.0 - k) - top) / (k - 1.0);
        }
        if b.is_finite() && b <= 4.0 * a {
            let gl = GaussLegendre::cached(16);
            return gl.integrate(a, b, |t| (t / (t + d)).powf(self.l) * t.powf(-k));
        }
        let (sa, sb) = (a / d, b / d);
        let diff = if sb <= 1e-3 {
            self.small_piece(sa, sb)
        } else {
            let hb = if b.is_finite() { self.h(sb) } else { 0.0 };
            self.h(sa) - hb
        };
        d.powf(1.0 - k) * diff
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::rules::adaptive;

    fn direct(l: f64, k: f64, a: f64, b: f64, d: f64) -> f64 {
        let f = |t: f64| (t / (t + d)).powf(l) * t.powf(-k);
        let mut br = vec![a];
        let mut x = a;
        while x * 2.0 < b {
            x *= 2.0;
            br.push(x);
        }
        br.push(b);
        adaptive(f, &br, 0.0, 1e-12, 4000).value
    }

    #[test]
    fn segments_match_direct_quadrature() {
        for (l, k) in [(6.0, 6.0), (5.0, 6.0), (8.0, 6.0), (9.0, 7.0)] {
            let w = WeightTail::get(l, k);
            for (a, b, d) in [
                (0.5, 3.0, 1.0),
                (0.01, 1e4, 2.0),
                (1.0, 50.0, 1e4),
                (3.0, 1e5, 0.01),
                (1e-3, 1e-1, 1e3),
                (2.0, 2.5, 7.0),
            ] {
                let got = w.segment(a, b, d);
                let want = direct(l, k, a, b, d);
                assert!((got - want).abs() <= 1e-8 * want, "L {l} k {k} ({a},{b},{d}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn zero_shift_and_infinite_top() {
        let w = WeightTail::get(6.0, 6.0);
        assert!((w.segment(2.0, f64::INFINITY, 0.0) - 2f64.powi(-5) / 5.0).abs() < 1e-15);
        let got = w.segment(1.0, f64::INFINITY, 1.0);
        let want = direct(6.0, 6.0, 1.0, 1e7, 1.0);
        assert!((got - want).abs() < 1e-9 * want);
    }
}
