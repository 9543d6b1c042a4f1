//! Turning a flat config into a validated kernel, parameter set and plan.

use crate::config::Config;
use lpkit_core::kernel::KernelSpec;
use lpkit_core::operators::OperatorParams;
use lpkit_core::quad::{Engine, QuadPlan};
use lpkit_core::{Error, Result};

/// The closed set of suite names, in run order for `all`.
pub const SUITES: [&str; 7] = ["kernel-checks", "atom-checks", "decay", "lp", "weak-type", "domination", "lemma25"];

pub fn is_suite(name: &str) -> bool {
    name == "all" || SUITES.contains(&name)
}

/// Suites that evaluate μ* under the Hardy-space parameter restrictions.
pub fn uses_star(suite: &str) -> bool {
    matches!(suite, "decay" | "lp" | "weak-type" | "all")
}

/// A requested exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PChoice {
    Value(f64),
    /// midpoint of (n/(n+β), 1)
    Mid,
    /// n/(n+β)
    Endpoint,
}

impl PChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "mid" | "midpoint" => Ok(PChoice::Mid),
            "endpoint" => Ok(PChoice::Endpoint),
            v => v
                .parse()
                .map(PChoice::Value)
                .map_err(|e| Error::Config(format!("p = '{v}': {e} (use a number, 'mid' or 'endpoint')"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            PChoice::Value(v) => format!("{v}"),
            PChoice::Mid => "mid".into(),
            PChoice::Endpoint => "endpoint".into(),
        }
    }
}

pub fn p_list(cfg: &Config, key: &str, default: &str) -> Result<Vec<PChoice>> {
    cfg.get(key)
        .unwrap_or(default)
        .trim_matches(|c| c == '[' || c == ']')
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(PChoice::parse)
        .collect()
}

/// Everything a suite needs.
#[derive(Debug, Clone)]
pub struct Setup {
    pub cfg: Config,
    pub kernel: KernelSpec,
    pub params: OperatorParams,
    pub plan: QuadPlan,
    pub seed: u64,
    /// constraint checks bypassed
    pub unsafe_mode: bool,
}

impl Setup {
    /// Validate `cfg` for `suite`. Parameter violations come back as
    /// [`Error::InvalidParams`] unless `unsafe_mode` is set.
    pub fn new(mut cfg: Config, suite: &str, seed: u64, unsafe_mode: bool) -> Result<Self> {
        if !is_suite(suite) {
            return Err(Error::Config(format!("unknown suite '{suite}' (expected one of {}, all)", SUITES.join(", "))));
        }
        if !cfg.keys().keys().any(|k| k.starts_with("kernel.")) {
            cfg.insert("kernel.id", "circle-harmonic-1");
        }
        let kernel = KernelSpec::from_keys(cfg.keys())?;
        let n: usize = cfg.num("params.n", kernel.dim())?;
        if n != kernel.dim() {
            return Err(Error::InvalidParams { constraint: format!("params.n = {n} but the kernel lives in R^{}", kernel.dim()) });
        }
        let rho: f64 = cfg.num("params.rho", 1.5)?;
        let lambda: f64 = cfg.num("params.lambda", 3.0)?;
        let alpha: f64 = cfg.num("params.alpha", 1.0)?;
        let probe = OperatorParams::unchecked(n, rho, lambda, alpha, 0.0, 1.0);
        let beta: f64 = match cfg.opt_num("params.beta")? {
            Some(b) => b,
            None => 0.9 * probe.beta_cap_star(),
        };
        let p = PChoice::parse(cfg.get("params.p").unwrap_or("1"))?;
        let plan = plan_from(&cfg)?;
        plan.validate()?;
        let mut me = Self {
            kernel,
            params: OperatorParams::unchecked(n, rho, lambda, alpha, beta, 1.0),
            plan,
            seed,
            unsafe_mode,
            cfg,
        };
        me.params = me.params_at(p)?;
        if !unsafe_mode && uses_star(suite) {
            me.params.check_star()?;
        }
        Ok(me)
    }

    /// The configured parameters with exponent `p`.
    pub fn params_at(&self, p: PChoice) -> Result<OperatorParams> {
        let q = &self.params;
        let floor = q.n as f64 / (q.n as f64 + q.beta);
        let (value, endpoint) = match p {
            PChoice::Value(v) => (v, false),
            PChoice::Mid => (0.5 * (floor + 1.0), false),
            PChoice::Endpoint => (floor, true),
        };
        if self.unsafe_mode {
            let mut out = OperatorParams::unchecked(q.n, q.rho, q.lambda, q.alpha, q.beta, value);
            out.endpoint = endpoint;
            return Ok(out);
        }
        if endpoint {
            OperatorParams::endpoint(q.n, q.rho, q.lambda, q.alpha, q.beta)
        } else {
            OperatorParams::new(q.n, q.rho, q.lambda, q.alpha, q.beta, value)
        }
    }

    pub fn watermark(&self) -> Option<String> {
        self.unsafe_mode.then(|| {
            if self.params.violations.is_empty() {
                "UNSAFE MODE: parameter validation disabled".to_string()
            } else {
                format!("UNSAFE MODE: parameters outside the admissible range: {}", self.params.violations.join("; "))
            }
        })
    }
}

/// QuadPlan overrides from `plan.*` keys.
pub fn plan_from(cfg: &Config) -> Result<QuadPlan> {
    let d = QuadPlan::default();
    let engine = match cfg.get("plan.engine") {
        None => d.engine,
        Some(s) => Engine::parse(s).ok_or_else(|| Error::Config(format!("plan.engine = '{s}' (auto, adaptive or sweep)")))?,
    };
    Ok(QuadPlan {
        sphere_order: cfg.num("plan.sphere_order", d.sphere_order)?,
        radial_nodes: cfg.num("plan.radial_nodes", d.radial_nodes)?,
        t_min: cfg.opt_num("plan.t_min")?,
        t_max: cfg.opt_num("plan.t_max")?,
        r_y: cfg.opt_num("plan.r_y")?,
        rel_tol: cfg.num("plan.rel_tol", d.rel_tol)?,
        abs_tol: cfg.num("plan.abs_tol", d.abs_tol)?,
        max_pieces: cfg.num("plan.max_pieces", d.max_pieces)?,
        auto_extend: cfg.flag("plan.auto_extend", d.auto_extend)?,
        check_t_min: cfg.flag("plan.check_t_min", d.check_t_min)?,
        engine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(text: &str, suite: &str) -> Result<Setup> {
        Setup::new(Config::parse(text).unwrap(), suite, 1, false)
    }

    #[test]
    fn standard_instance_by_default() {
        let s = setup("", "decay").unwrap();
        assert_eq!(s.kernel.name, "circle-harmonic-1");
        assert_eq!((s.params.n, s.params.rho, s.params.lambda, s.params.alpha), (2, 1.5, 3.0, 1.0));
        assert!((s.params.beta - 0.45).abs() < 1e-15);
        assert_eq!(s.params.p, 1.0);
    }

    #[test]
    fn beta_above_half_gap_names_the_constraint() {
        match setup("params.beta = 0.6", "decay") {
            Err(Error::InvalidParams { constraint }) => assert!(constraint.contains("β ≥ ρ − n/2"), "{constraint}"),
            other => panic!("{other:?}"),
        }
        let s = Setup::new(Config::parse("params.beta = 0.6").unwrap(), "decay", 1, true).unwrap();
        assert!(s.watermark().unwrap().contains("β ≥ ρ − n/2"));
    }

    #[test]
    fn star_restriction_only_for_star_suites() {
        // (λ − 2)n/3 = 1/3 < β = 0.4
        assert!(setup("params.lambda = 2.5\nparams.beta = 0.4", "decay").is_err());
        assert!(setup("params.lambda = 2.5\nparams.beta = 0.4", "domination").is_ok());
    }

    #[test]
    fn p_choices() {
        let s = setup("params.p = mid", "lp").unwrap();
        let floor = 2.0 / 2.45;
        assert!((s.params.p - 0.5 * (1.0 + floor)).abs() < 1e-15);
        let e = s.params_at(PChoice::Endpoint).unwrap();
        assert!(e.endpoint && (e.p - floor).abs() < 1e-15);
        assert!(setup("params.p = 0.5", "lp").is_err());
        assert!(setup("params.p = often", "lp").is_err());
    }

    #[test]
    fn plan_keys_override_defaults() {
        let s = setup("plan.sphere_order = 24\nplan.engine = adaptive", "decay").unwrap();
        assert_eq!(s.plan.sphere_order, 24);
        assert_eq!(s.plan.engine, Engine::Adaptive);
        assert!(setup("plan.rel_tol = 0.5", "decay").is_err());
        assert!(setup("", "everything").is_err());
    }
}
