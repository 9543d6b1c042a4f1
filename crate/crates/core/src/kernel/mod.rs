//! Variable kernels Ω(x, z) = b(x)·Y(z/|z|), their admissibility checks, the
//! L² continuity modulus ω₂ and the Dini-type integrals built on it.

mod modulus;
mod table;

pub use modulus::{
    default_delta_grid, dini_integral, log_dini_integral, omega2, DiniOutcome, ModulusMeta,
    ModulusTable,
};
pub use table::AngularTable;

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::quad::sphere::SphereRule;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub type AngularFn = Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>;
pub type CoefficientFn = Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>;
pub type GeneralFn = Arc<dyn Fn(&Vec3, &Vec3) -> f64 + Send + Sync>;

/// Default tolerance for the cancellation residual.
pub const CANCEL_TOL: f64 = 1e-8;

/// The z′ dependence.
#[derive(Clone)]
pub enum Angular {
    /// Π z′_i^{e_i}
    Monomial { exponents: [u32; 3] },
    /// cos(kθ + phase) on the circle
    Harmonic { k: u32, phase: f64 },
    /// periodic piecewise-linear samples on the circle
    Table(Arc<AngularTable>),
    Constant(f64),
    /// sign(z′₁), a discontinuous test kernel
    Sign,
    Custom(AngularFn),
}

impl fmt::Debug for Angular {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angular::Monomial { exponents } => write!(f, "Monomial({exponents:?})"),
            Angular::Harmonic { k, phase } => write!(f, "Harmonic(k={k}, phase={phase})"),
            Angular::Table(t) => write!(f, "Table({} samples)", t.len()),
            Angular::Constant(c) => write!(f, "Constant({c})"),
            Angular::Sign => write!(f, "Sign"),
            Angular::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Angular {
    #[inline]
    pub fn eval(&self, d: &Vec3) -> f64 {
        match self {
            Angular::Monomial { exponents } => {
                let mut v = 1.0;
                for i in 0..3 {
                    if exponents[i] > 0 {
                        v *= d[i].powi(exponents[i] as i32);
                    }
                }
                v
            }
            Angular::Harmonic { k, phase } => {
                // Re(e^{i phase} (d0 + i d1)^k)
                let (mut re, mut im) = (1.0, 0.0);
                for _ in 0..*k {
                    let nr = re * d[0] - im * d[1];
                    im = re * d[1] + im * d[0];
                    re = nr;
                }
                if *phase == 0.0 {
                    re
                } else {
                    re * phase.cos() - im * phase.sin()
                }
            }
            Angular::Table(t) => t.eval(d[1].atan2(d[0])),
            Angular::Constant(c) => *c,
            Angular::Sign => {
                if d[0] > 0.0 {
                    1.0
                } else if d[0] < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Angular::Custom(f) => f(d),
        }
    }
}

/// The x dependence, with a known sup bound.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    /// 1 + amplitude·sin(frequency·x_axis), |amplitude| < 1
    Sinusoidal { amplitude: f64, frequency: f64, axis: usize },
    Custom { f: CoefficientFn, sup: f64 },
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Sinusoidal { amplitude, frequency, axis } => {
                write!(f, "Sinusoidal(A={amplitude}, w={frequency}, axis={axis})")
            }
            Coefficient::Custom { sup, .. } => write!(f, "Custom(sup={sup})"),
        }
    }
}

impl Coefficient {
    #[inline]
    pub fn eval(&self, x: &Vec3) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Sinusoidal { amplitude, frequency, axis } => {
                1.0 + amplitude * (frequency * x[*axis]).sin()
            }
            Coefficient::Custom { f, .. } => f(x),
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            Coefficient::Constant(c) => c.abs(),
            Coefficient::Sinusoidal { amplitude, .. } => 1.0 + amplitude.abs(),
            Coefficient::Custom { sup, .. } => *sup,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Coefficient::Constant(_))
    }
}

#[derive(Clone)]
enum Form {
    Separable { coefficient: Coefficient, angular: Angular },
    General { f: GeneralFn, sup: f64 },
}

/// Ω(x, z), homogeneous of degree zero in z.
#[derive(Clone)]
pub struct KernelSpec {
    pub name: String,
    dim: usize,
    form: Form,
    /// overall factor, so that c·Ω can be formed without touching the parts
    factor: f64,
    pub cancellation_exempt: bool,
    /// (α, C) with |Y(y′) − Y(z′)| ≤ C|y′ − z′|^α (angular part only)
    pub lipschitz: Option<(f64, f64)>,
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("KernelSpec");
        d.field("name", &self.name).field("dim", &self.dim);
        match &self.form {
            Form::Separable { coefficient, angular } => {
                d.field("coefficient", coefficient).field("angular", angular);
            }
            Form::General { sup, .. } => {
                d.field("general_sup", sup);
            }
        }
        d.field("factor", &self.factor)
            .field("cancellation_exempt", &self.cancellation_exempt)
            .finish()
    }
}

impl KernelSpec {
    pub fn separable(name: &str, dim: usize, coefficient: Coefficient, angular: Angular) -> Self {
        assert!((2..=3).contains(&dim), "supported dimensions are 2 and 3");
        Self {
            name: name.to_string(),
            dim,
            form: Form::Separable { coefficient, angular },
            factor: 1.0,
            cancellation_exempt: false,
            lipschitz: None,
        }
    }

    /// A genuinely two-argument kernel. `sup` must bound |Ω|.
    pub fn general(name: &str, dim: usize, f: GeneralFn, sup: f64) -> Self {
        assert!((2..=3).contains(&dim), "supported dimensions are 2 and 3");
        Self {
            name: name.to_string(),
            dim,
            form: Form::General { f, sup },
            factor: 1.0,
            cancellation_exempt: false,
            lipschitz: None,
        }
    }

    pub fn exempt(mut self) -> Self {
        self.cancellation_exempt = true;
        self
    }

    pub fn with_lipschitz(mut self, alpha: f64, constant: f64) -> Self {
        self.lipschitz = Some((alpha, constant));
        self
    }

    /// c·Ω
    pub fn scaled(&self, c: f64) -> Self {
        let mut k = self.clone();
        k.factor *= c;
        k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_separable(&self) -> bool {
        matches!(self.form, Form::Separable { .. })
    }

    /// True when Ω does not depend on x (translation invariant operators).
    pub fn is_translation_invariant(&self) -> bool {
        matches!(&self.form, Form::Separable { coefficient, .. } if coefficient.is_constant())
    }

    /// sup_x |b(x)| including the overall factor (sup |Ω| for general kernels).
    pub fn coeff_sup(&self) -> f64 {
        match &self.form {
            Form::Separable { coefficient, .. } => coefficient.sup() * self.factor.abs(),
            Form::General { sup, .. } => sup * self.factor.abs(),
        }
    }

    /// b(x)·factor for separable kernels.
    #[inline]
    pub fn coefficient_at(&self, x: &Vec3) -> Option<f64> {
        match &self.form {
            Form::Separable { coefficient, .. } => Some(coefficient.eval(x) * self.factor),
            Form::General { .. } => None,
        }
    }

    /// Y(dir) for separable kernels (without the factor).
    #[inline]
    pub fn angular_at(&self, dir: &Vec3) -> Option<f64> {
        match &self.form {
            Form::Separable { angular, .. } => Some(angular.eval(dir)),
            Form::General { .. } => None,
        }
    }

    pub fn angular(&self) -> Option<&Angular> {
        match &self.form {
            Form::Separable { angular, .. } => Some(angular),
            Form::General { .. } => None,
        }
    }

    /// Ω(x, dir) for a unit vector `dir`.
    #[inline]
    pub fn omega_unit(&self, x: &Vec3, dir: &Vec3) -> f64 {
        match &self.form {
            Form::Separable { coefficient, angular } => {
                self.factor * coefficient.eval(x) * angular.eval(dir)
            }
            Form::General { f, .. } => self.factor * f(x, dir),
        }
    }

    /// Ω(x, z) = Ω(x, z/|z|).
    pub fn evaluate(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        if x.len() != self.dim || z.len() != self.dim {
            return Err(Error::Domain(format!(
                "expected points in R^{}, got {} and {}",
                self.dim,
                x.len(),
                z.len()
            )));
        }
        let zv = geom::to_vec3(z);
        let r = geom::norm(&zv);
        if r == 0.0 || !r.is_finite() {
            return Err(Error::Domain("kernel evaluated at z = 0".into()));
        }
        let dir = geom::scale(&zv, 1.0 / r);
        Ok(self.omega_unit(&geom::to_vec3(x), &dir))
    }

    /// ‖Y‖_{L²(S^{n-1})} for separable kernels (factor excluded).
    pub fn angular_l2(&self, order: usize) -> Option<f64> {
        let rule = SphereRule::new(self.dim, order);
        self.angular().map(|a| rule.integrate(|d| a.eval(d).powi(2)).sqrt())
    }

    /// Build from flat `kernel.*` keys. See [`KernelSpec::config_keys`].
    pub fn from_keys(keys: &BTreeMap<String, String>) -> Result<Self> {
        table::from_keys(keys)
    }

    /// Keys understood by [`KernelSpec::from_keys`].
    pub fn config_keys() -> &'static [&'static str] {
        &[
            "kernel.id",
            "kernel.family",
            "kernel.dimension",
            "kernel.exponents",
            "kernel.k",
            "kernel.phase",
            "kernel.table",
            "kernel.coefficient",
            "kernel.coefficient.value",
            "kernel.coefficient.amplitude",
            "kernel.coefficient.frequency",
            "kernel.coefficient.axis",
            "kernel.exempt",
        ]
    }
}

/// A catalog entry.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BuiltinInfo {
    pub id: &'static str,
    pub dimension: usize,
    pub description: &'static str,
    pub cancellation_exempt: bool,
}

/// Stable-ordered list of built-in kernels.
pub fn builtin_catalog() -> Vec<BuiltinInfo> {
    vec![
        BuiltinInfo { id: "circle-harmonic-1", dimension: 2, description: "Y = z'_1 = cos(theta), b = 1", cancellation_exempt: false },
        BuiltinInfo { id: "circle-harmonic-2", dimension: 2, description: "Y = cos(2 theta), b = 1", cancellation_exempt: false },
        BuiltinInfo { id: "circle-harmonic-3", dimension: 2, description: "Y = cos(3 theta), b = 1", cancellation_exempt: false },
        BuiltinInfo { id: "circle-harmonic-1-sinusoidal", dimension: 2, description: "Y = z'_1, b(x) = 1 + sin(x_1)/2", cancellation_exempt: false },
        BuiltinInfo { id: "sphere-monomial-1", dimension: 3, description: "Y = z'_1 on S^2, b = 1", cancellation_exempt: false },
        BuiltinInfo { id: "sphere-monomial-12", dimension: 3, description: "Y = z'_1 z'_2 on S^2, b = 1", cancellation_exempt: false },
        BuiltinInfo { id: "test-jump", dimension: 2, description: "Y = sign(z'_1), b = 1 (not Lipschitz)", cancellation_exempt: false },
        BuiltinInfo { id: "test-constant", dimension: 2, description: "Y = 1, b = 1 (violates cancellation)", cancellation_exempt: true },
    ]
}

/// Construct a built-in kernel by id.
pub fn builtin(id: &str) -> Result<KernelSpec> {
    let one = Coefficient::Constant(1.0);
    let h = |k: u32| Angular::Harmonic { k, phase: 0.0 };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let k = match id {
        "circle-harmonic-1" => KernelSpec::separable(id, 2, one, h(1)).with_lipschitz(1.0, 1.0),
        "circle-harmonic-2" => KernelSpec::separable(id, 2, one, h(2)).with_lipschitz(1.0, 2.0 * half_pi),
        "circle-harmonic-3" => KernelSpec::separable(id, 2, one, h(3)).with_lipschitz(1.0, 3.0 * half_pi),
        "circle-harmonic-1-sinusoidal" => KernelSpec::separable(
            id,
            2,
            Coefficient::Sinusoidal { amplitude: 0.5, frequency: 1.0, axis: 0 },
            h(1),
        )
        .with_lipschitz(1.0, 1.0),
        "sphere-monomial-1" => KernelSpec::separable(id, 3, one, Angular::Monomial { exponents: [1, 0, 0] })
            .with_lipschitz(1.0, 1.0),
        "sphere-monomial-12" => KernelSpec::separable(id, 3, one, Angular::Monomial { exponents: [1, 1, 0] })
            .with_lipschitz(1.0, std::f64::consts::SQRT_2),
        "test-jump" => KernelSpec::separable(id, 2, one, Angular::Sign),
        "test-constant" => KernelSpec::separable(id, 2, one, Angular::Constant(1.0))
            .with_lipschitz(1.0, 0.0)
            .exempt(),
        other => return Err(Error::Config(format!("unknown kernel id '{other}'"))),
    };
    Ok(k)
}

/// Outcome of the mean-zero check.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CancellationReport {
    pub residual: f64,
    pub exempt: bool,
    pub pass: bool,
}

/// |∫_{S^{n-1}} Ω(x, ·) dσ|, maximized over a few x for non-separable kernels.
pub fn check_cancellation(kernel: &KernelSpec, sphere_order: usize) -> CancellationReport {
    let rule = SphereRule::new(kernel.dim, sphere_order);
    let residual = match &kernel.form {
        Form::Separable { coefficient, angular } => {
            let _ = coefficient;
            rule.integrate(|d| angular.eval(d)).abs()
        }
        Form::General { .. } => sample_points(kernel.dim, 16, 7)
            .iter()
            .map(|x| rule.integrate(|d| kernel.omega_unit(x, d)).abs())
            .fold(0.0, f64::max),
    };
    CancellationReport {
        residual,
        exempt: kernel.cancellation_exempt,
        pass: kernel.cancellation_exempt || residual <= CANCEL_TOL,
    }
}

/// Sampled uniform-L² size.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct UniformL2Report {
    pub sampled_max: f64,
    /// coeff_sup·‖Y‖_{L²} for separable kernels
    pub analytic_bound: Option<f64>,
}

/// max over (x, r) of (∫ |Ω(x + r z′, z′)|² dσ(z′))^{1/2}.
pub fn check_uniform_l2(
    kernel: &KernelSpec,
    x_samples: &[Vec3],
    r_samples: &[f64],
    sphere_order: usize,
) -> UniformL2Report {
    let rule = SphereRule::new(kernel.dim, sphere_order);
    let mut best: f64 = 0.0;
    for x in x_samples {
        for &r in r_samples {
            let v = rule.integrate(|d| {
                let p = geom::add(x, &geom::scale(d, r));
                kernel.omega_unit(&p, d).powi(2)
            });
            best = best.max(v.sqrt());
        }
    }
    let analytic_bound = kernel
        .angular()
        .map(|a| kernel.coeff_sup() * rule.integrate(|d| a.eval(d).powi(2)).sqrt());
    UniformL2Report { sampled_max: best, analytic_bound }
}

/// Default x samples: a lattice covering one period of the built-in
/// sinusoidal coefficient along each axis.
pub fn default_x_samples(dim: usize) -> Vec<Vec3> {
    let m = 16;
    let step = 2.0 * std::f64::consts::PI / m as f64;
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let mut v = [i as f64 * step, j as f64 * step, 0.0];
            if dim == 3 {
                v[2] = 0.5 * (i + j) as f64 * step;
            }
            out.push(v);
        }
    }
    out
}

pub fn default_r_samples() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0]
}

fn sample_points(dim: usize, count: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut v = [0.0; 3];
            for c in v.iter_mut().take(dim) {
                *c = rng.gen_range(-8.0..8.0);
            }
            v
        })
        .collect()
}

/// Result of the Lipschitz pair search.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LipschitzFit {
    pub alpha: f64,
    pub constant: f64,
    /// the same search with a quarter of the budget
    pub coarse_constant: f64,
    /// constant still growing with resolution: inconsistent with Lipschitz-α
    pub growing: bool,
}

/// Ratio growth (budget vs budget/4) beyond which the search is flagged.
pub const LIPSCHITZ_GROWTH: f64 = 1.5;

/// max |Ω(x,y′) − Ω(x,z′)| / |y′ − z′|^α over a deterministic pair search:
/// a lattice of anchors and geometric separations, followed by bisection
/// around the worst pair.
pub fn lipschitz_check(kernel: &KernelSpec, alpha: f64, pair_budget: usize) -> Result<LipschitzFit> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} outside (0, 1]")));
    }
    let fine = lipschitz_search(kernel, alpha, pair_budget.max(16));
    let coarse = lipschitz_search(kernel, alpha, (pair_budget / 4).max(8));
    let growing = fine > LIPSCHITZ_GROWTH * coarse && fine > 1e-12;
    Ok(LipschitzFit { alpha, constant: fine, coarse_constant: coarse, growing })
}

fn lipschitz_search(kernel: &KernelSpec, alpha: f64, budget: usize) -> f64 {
    let dim = kernel.dim;
    // for separable kernels the x-sup is coeff_sup; otherwise sample x
    let xs: Vec<Vec3> = if kernel.is_separable() { vec![[0.0; 3]] } else { sample_points(dim, 8, 3) };
    let xfactor = match &kernel.form {
        Form::Separable { coefficient, .. } => coefficient.sup() * kernel.factor.abs(),
        Form::General { .. } => 1.0,
    };
    let val = |x: &Vec3, d: &Vec3| -> f64 {
        match &kernel.form {
            Form::Separable { angular, .. } => angular.eval(d),
            Form::General { .. } => kernel.omega_unit(x, d),
        }
    };
    let point = |a: f64, b: f64| -> Vec3 {
        if dim == 2 {
            [a.cos(), a.sin(), 0.0]
        } else {
            [b.sin() * a.cos(), b.sin() * a.sin(), b.cos()]
        }
    };
    let ratio = |x: &Vec3, p: &Vec3, q: &Vec3| -> f64 {
        let chord = geom::norm(&geom::sub(p, q));
        if chord == 0.0 {
            return 0.0;
        }
        (val(x, p) - val(x, q)).abs() / chord.powf(alpha)
    };
    let stage = budget / 2;
    let anchors = ((stage as f64).sqrt() as usize).max(4);
    let seps = (stage / anchors).max(2);
    let mut best = 0.0;
    let mut best_pair = ([0.0; 3], [0.0; 3], [0.0; 3]);
    for x in &xs {
        for a in 0..anchors {
            let phi = 2.0 * std::f64::consts::PI * (a as f64 + 0.5) / anchors as f64;
            let theta = std::f64::consts::PI * (a as f64 * 0.618_034).fract();
            for s in 0..seps {
                let sep = std::f64::consts::PI
                    * (budget as f64).recip().powf(s as f64 / (seps - 1) as f64);
                let p = point(phi, theta);
                let q = if dim == 2 { point(phi + sep, 0.0) } else { point(phi, theta + sep) };
                let r = ratio(x, &p, &q);
                if r > best {
                    best = r;
                    best_pair = (*x, p, q);
                }
            }
        }
    }
    // bisection: keep the half whose endpoint difference is larger
    let (x, mut p, mut q) = best_pair;
    let depth = 2 * (usize::BITS - budget.leading_zeros()) as usize;
    for _ in 0..depth {
        let m = geom::add(&p, &q);
        let nm = geom::norm(&m);
        if nm == 0.0 {
            break;
        }
        let m = geom::scale(&m, 1.0 / nm);
        let (l, r) = ((val(&x, &p) - val(&x, &m)).abs(), (val(&x, &m) - val(&x, &q)).abs());
        if l >= r {
            q = m;
        } else {
            p = m;
        }
        best = f64::max(best, ratio(&x, &p, &q));
    }
    best * xfactor
}
