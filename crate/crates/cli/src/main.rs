use clap::{Parser, Subcommand, ValueEnum};
use lpkit_cli::config::Config;
use lpkit_cli::setup::Setup;
use lpkit_cli::{error_exit_code, run_to_dir};
use lpkit_core::atoms::min_moment_order;
use lpkit_core::kernel::{builtin_catalog, default_delta_grid, omega2, ModulusMeta};
use lpkit_core::operators::{evaluate, OperatorTag};
use lpkit_core::quad::oracle::{dense_oracle, monte_carlo_oracle_sq, DenseResolution};
use lpkit_core::quad::SourceField;
use lpkit_core::{Error, Estimate, Result};
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lpkit", version, about = "Numerical checks for Littlewood-Paley operators with variable kernels")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a suite and write report.json, tables/*.csv and figures/*.svg
    Run {
        /// kernel-checks, atom-checks, decay, lp, weak-type, domination, lemma25 or all
        suite: String,
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "lpkit-out")]
        out: PathBuf,
        /// worker threads (default: all cores)
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Built-in kernels, atom profiles and the standard instance
    List,
    /// Brute-force oracles for debugging
    Oracle {
        #[arg(value_enum)]
        op: OracleOp,
        #[command(flatten)]
        input: Input,
        /// evaluation point, comma separated
        #[arg(long, default_value = "8,0")]
        x: String,
        /// Monte-Carlo (y, t) samples
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(clap::Args)]
struct Input {
    /// flat key = value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// override one config key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// skip parameter validation (reports are watermarked)
    #[arg(long = "unsafe")]
    unsafe_mode: bool,
}

impl Input {
    fn config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        for kv in &self.set {
            cfg.set(kv)?;
        }
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleOp {
    /// μ_S at --x: adaptive, dense grid and Monte Carlo
    MuS,
    /// μ* at --x: adaptive, dense grid and Monte Carlo
    MuStar,
    /// ω₂ table and its 10× cap-search refinement
    Omega2,
}

fn pool(jobs: Option<usize>) -> Result<()> {
    if let Some(j) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("--jobs: {e}")))?;
    }
    Ok(())
}

fn list() -> serde_json::Value {
    let kernels: Vec<_> = builtin_catalog()
        .into_iter()
        .map(|k| {
            json!({
                "id": k.id,
                "dimension": k.dimension,
                "description": k.description,
                "cancellation_exempt": k.cancellation_exempt,
            })
        })
        .collect();
    json!({
        "kernels": kernels,
        "profiles": [
            {"id": "radial-bump", "description": "(1 - |u|^2)^2 with moments removed up to order s"},
            {"id": "bump-times-polynomial", "description": "(1 - |u|^2)^2 Q(u), Q a polynomial"},
        ],
        "standard_instance": {
            "kernel": "circle-harmonic-1",
            "n": 2, "rho": 1.5, "lambda": 3.0, "alpha": 1.0,
            "beta": "0.9 min{1/2, alpha, rho - n/2, (lambda - 2) n / 3} = 0.45",
            "p": "1, or any point of (n/(n+beta), 1]",
            "atom": "radial bump on B(0, 1), s = 1",
        },
        "parameter_ranges": {
            "n": "2 or 3",
            "rho": "(n/2, n)",
            "lambda": "> 2 (domination: > 1)",
            "alpha": "(0, 1]",
            "beta": "(0, min{1/2, alpha, rho - n/2}); for mu_star also < (lambda - 2) n / 3",
            "p": "(n/(n+beta), 1], endpoint n/(n+beta) for weak type",
        },
    })
}

fn oracle(op: OracleOp, input: &Input, x: &str, samples: usize) -> Result<serde_json::Value> {
    let s = Setup::new(input.config()?, "decay", input.seed, input.unsafe_mode)?;
    let n = s.params.n;
    if let OracleOp::Omega2 = op {
        let grid = default_delta_grid(s.cfg.num("kernel-checks.omega_points", 40)?, 2.0);
        let meta = ModulusMeta::new(n);
        let base = omega2(&s.kernel, &grid, &meta)?;
        let fine = omega2(&s.kernel, &grid, &meta.clone().with_refinement(10 * meta.cap_refinement))?;
        let rows: Vec<_> = grid
            .iter()
            .zip(base.omega2_values.iter().zip(&fine.omega2_values))
            .map(|(d, (a, b))| json!({"delta": d, "omega2": Estimate::new(*b, (a - b).abs())}))
            .collect();
        return Ok(json!({"op": "omega2", "kernel": s.kernel.name, "table": rows}));
    }
    let tag = if let OracleOp::MuS = op { OperatorTag::Area } else { OperatorTag::Star };
    let pt: Vec<f64> = x
        .split(',')
        .map(|v| v.trim().parse().map_err(|e| Error::Config(format!("--x '{x}': {e}"))))
        .collect::<Result<_>>()?;
    let radius: f64 = s.cfg.num("atom.radius", 1.0)?;
    let order: u32 = s.cfg.num("atom.s", min_moment_order(n, s.params.p)?.max(1))?;
    let atom = lpkit_core::atoms::build_atom(
        n,
        s.params.p,
        lpkit_core::atoms::Ball::new(&vec![0.0; n], radius),
        &lpkit_core::atoms::Shape::radial_bump(),
        order,
    )?;
    let f = atom.source();
    let adaptive = evaluate(tag, &s.kernel, &f, &pt, &s.params, &s.plan)?.estimate;
    let t_min = s.plan.t_min.unwrap_or(1e-3 * radius);
    let (rho, lambda) = (s.params.rho, s.params.lambda);
    let res = DenseResolution::default();
    let half = DenseResolution { n_d: res.n_d / 2, n_psi: res.n_psi / 2, n_u: res.n_u / 2, n_theta: res.n_theta / 2, reach: res.reach };
    let dense = dense_oracle(&s.kernel, &f, &pt, tag, rho, lambda, t_min, &res)?;
    let dense_half = dense_oracle(&s.kernel, &f, &pt, tag, rho, lambda, t_min, &half)?;
    let field = SourceField::new(&s.kernel, &f, rho, &s.plan)?;
    let mc = monte_carlo_oracle_sq(&field, &pt, tag, lambda, t_min, samples, input.seed)?;
    Ok(json!({
        "op": tag.name(),
        "x": pt,
        "adaptive": adaptive,
        "dense": Estimate::new(dense, (dense - dense_half).abs()),
        "monte_carlo": mc.sqrt(),
        "monte_carlo_squared": mc,
    }))
}

/// Print JSON; a closed pipe (`lpkit list | head`) is not an error.
fn emit(v: &serde_json::Value) {
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(v).expect("json"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<i32> = (|| match &cli.cmd {
        Cmd::Run { suite, input, out, jobs } => {
            pool(*jobs)?;
            let s = Setup::new(input.config()?, suite, input.seed, input.unsafe_mode)?;
            if let Some(w) = s.watermark() {
                eprintln!("{w}");
            }
            let report = run_to_dir(suite, &s, out)?;
            for c in &report.checks {
                println!("{:<40} {:?}", c.id, c.verdict);
            }
            println!("overall: {:?} ({})", report.verdict, out.join("report.json").display());
            Ok(report.exit_code())
        }
        Cmd::List => {
            emit(&list());
            Ok(0)
        }
        Cmd::Oracle { op, input, x, samples, jobs } => {
            pool(*jobs)?;
            let v = oracle(*op, input, x, *samples)?;
            emit(&v);
            Ok(0)
        }
    })();
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
