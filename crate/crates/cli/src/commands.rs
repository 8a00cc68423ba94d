use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use gradflow::flow::{self, Trajectory};
use gradflow::geometry::{self, convexity_constants, metric_distance, ConvexityConstants};
use gradflow::markov::{self, EntropicStructure, GeneratorMatrix};
use gradflow::spectral;
use gradflow::synthesis::{synthesize_canonical, verify_flow_identity};
use gradflow::{Method, MetricContext, Sampling, Vector, ViolationReport};
use log::info;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::input::{self, LoadedSystem, SystemDoc};
use crate::report::{self, Report, SCHEMA_VERSION};
use crate::{Cli, Command, MarkovCommand};

/// Sampled certificates pass when every defect is below this multiple of its
/// rounding scale.
pub const CERTIFICATE_TOL: f64 = 1e-9;

pub const CONTRACTION_TIMES: [f64; 3] = [0.1, 1.0, 10.0];

struct Ctx<'a> {
    cli: &'a Cli,
    warnings: Vec<String>,
}

impl Ctx<'_> {
    fn finish(self, command: &str, options: Value, inputs: &[&[u8]], results: Value) -> Report {
        let mut options = options;
        options["tol"] = json!(self.cli.tol);
        options["seed"] = json!(self.cli.seed);
        options["samples"] = json!(self.cli.samples);
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            inputs_digest: report::digest(command, &options, inputs),
            seed: self.cli.seed,
            results,
            warnings: self.warnings,
        }
    }
}

fn vec_json(v: &Vector) -> Value {
    json!(v.iter().copied().collect::<Vec<f64>>())
}

fn violation_json(r: &ViolationReport) -> Value {
    json!({
        "max_violation": r.max_violation,
        "max_scaled": r.max_scaled,
        "samples": r.samples,
        "passed": r.max_scaled <= CERTIFICATE_TOL,
    })
}

fn constants_json(c: &ConvexityConstants) -> Value {
    json!({
        "lambda": c.lambda,
        "lambda_tilde": c.lambda_tilde,
        "lambda_via_transfer": c.lambda_via_transfer,
        "c_v": c.c_v,
        "c_v_tilde": c.c_v_tilde,
        "esssup_f": c.esssup_f,
    })
}

pub fn dispatch(cli: &Cli) -> Result<Report, CliError> {
    let ctx = Ctx {
        cli,
        warnings: Vec::new(),
    };
    match &cli.command {
        Command::Analyze { matrix } => analyze(ctx, matrix),
        Command::Synthesize { matrix } => synthesize(ctx, matrix),
        Command::Verify { matrix, system } => verify(ctx, matrix, system),
        Command::Simulate {
            system,
            x0,
            x0_pair,
            t_end,
            step,
            method,
        } => simulate(ctx, system, x0, x0_pair.as_deref(), *t_end, *step, *method),
        Command::Convexity { system } => convexity(ctx, system),
        Command::Markov { action } => markov_cmd(ctx, action),
    }
}

fn analyze(ctx: Ctx, path: &Path) -> Result<Report, CliError> {
    let bytes = input::read_bytes(path)?;
    let a = input::parse_matrix(&bytes, path)?;
    let (rep, diag) = spectral::analyse(&a, ctx.cli.tol)?;
    let eigenvalues: Vec<Value> = rep.eigenvalues.iter().map(|z| json!({ "re": z.re, "im": z.im })).collect();
    let results = json!({
        "dim": a.nrows(),
        "eigenvalues": eigenvalues,
        "real_diagonalisable": rep.real_diagonalisable,
        "failure_kind": rep.failure_kind.as_str(),
        "condition_of_v": rep.condition_of_v,
        "f": diag.as_ref().map(|d| vec_json(d.f())),
    });
    Ok(ctx.finish("analyze", json!({}), &[&bytes], results))
}

fn synthesize(mut ctx: Ctx, path: &Path) -> Result<Report, CliError> {
    let tol = ctx.cli.tol;
    let bytes = input::read_bytes(path)?;
    let a = input::parse_matrix(&bytes, path)?;
    let diag = spectral::real_diagonalise(&a, tol)?;
    let gs = synthesize_canonical(&diag)?;
    let check = verify_flow_identity(&a, &gs, tol)?;
    if !check.passed {
        ctx.warnings
            .push(format!("flow identity residual {:e} exceeds tolerance {tol:e}", check.max_residual));
    }
    let doc = SystemDoc::new(&gs, &diag, &a);
    let mut results = json!({
        "dim": gs.dim(),
        "flow_residual": check.max_residual,
        "flow_passed": check.passed,
        "condition_of_v": diag.condition(),
        "constants": constants_json(&convexity_constants(&diag)),
    });
    match &ctx.cli.out {
        Some(out) => {
            fs::write(out, report::to_json(&doc) + "\n")
                .map_err(|e| CliError::Parse(format!("cannot write {}: {e}", out.display())))?;
            info!("system written to {}", out.display());
            results["system_path"] = json!(out.display().to_string());
        }
        None => results["system"] = serde_json::to_value(&doc).expect("system document serializes"),
    }
    Ok(ctx.finish("synthesize", json!({}), &[&bytes], results))
}

fn verify(ctx: Ctx, matrix: &Path, system: &Path) -> Result<Report, CliError> {
    let tol = ctx.cli.tol;
    let a_bytes = input::read_bytes(matrix)?;
    let s_bytes = input::read_bytes(system)?;
    let a = input::parse_matrix(&a_bytes, matrix)?;
    let sys = input::parse_system(&s_bytes, system, tol)?;
    let rep = verify_flow_identity(&a, &sys.gs, tol)?;
    let results = json!({
        "max_residual": rep.max_residual,
        "passed": rep.passed,
        "num_samples": rep.num_samples,
        "worst_point": vec_json(&rep.worst_point),
    });
    Ok(ctx.finish("verify", json!({}), &[&a_bytes, &s_bytes], results))
}

fn integrate(sys: &LoadedSystem, method: Method, x0: &Vector, t_end: f64, step: f64) -> Result<Trajectory, CliError> {
    let traj = match method {
        Method::Exact => flow::exact_trajectory(&sys.diag, x0, t_end, step)?,
        Method::Rk4 => flow::rk4_flow(&sys.a, x0, t_end, step)?,
        Method::MinimizingMovement => {
            let mctx = MetricContext::new(&sys.diag);
            flow::minimizing_movement_flow(&sys.gs, &mctx, x0, t_end, step)?
        }
    };
    Ok(traj)
}

fn simulate(
    mut ctx: Ctx,
    path: &Path,
    x0: &str,
    x0_pair: Option<&str>,
    t_end: f64,
    step: Option<f64>,
    method: Method,
) -> Result<Report, CliError> {
    let tol = ctx.cli.tol;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(CliError::Parse(format!("--t-end must be finite and non-negative, got {t_end}")));
    }
    let step = step.unwrap_or(if t_end > 0.0 {
        t_end / flow::DEFAULT_NODES as f64
    } else {
        1.0
    });
    let bytes = input::read_bytes(path)?;
    let sys = input::parse_system(&bytes, path, tol)?;
    let d = sys.gs.dim();
    let x0 = input::parse_state(x0)?;
    gradflow::linalg::check_len(&x0, d)?;
    let pair = x0_pair.map(input::parse_state).transpose()?;
    if let Some(p) = &pair {
        gradflow::linalg::check_len(p, d)?;
    }

    if method == Method::Rk4 {
        if let Some(msg) = flow::rk4_stability_advisory(&sys.a, step) {
            ctx.warnings.push(msg);
        }
    }
    let traj = integrate(&sys, method, &x0, t_end, step)?;
    let audit = flow::dissipation_audit(&sys.gs, &traj);

    let mut results = json!({
        "method": method.as_str(),
        "t_end": t_end,
        "step": step,
        "nodes": traj.times.len(),
        "final_state": vec_json(traj.last()),
        "dissipation": {
            "monotone": audit.monotone,
            "dissipation_defect": audit.dissipation_defect,
            "f_initial": audit.f_values.first().copied(),
            "f_final": audit.f_values.last().copied(),
        },
    });

    if let Some(p) = pair {
        let other = integrate(&sys, method, &p, t_end, step)?;
        results["contraction"] = contraction_along(&sys, &traj, &other);
    }

    match &ctx.cli.out {
        Some(out) => {
            let file = File::create(out).map_err(|e| CliError::Parse(format!("cannot write {}: {e}", out.display())))?;
            report::write_csv(BufWriter::new(file), &traj)
                .map_err(|e| CliError::Parse(format!("cannot write {}: {e}", out.display())))?;
            results["csv_path"] = json!(out.display().to_string());
        }
        None => ctx.warnings.push("no --out given; trajectory CSV not written".to_string()),
    }

    let options = json!({
        "x0": vec_json(&x0),
        "x0_pair": x0_pair,
        "t_end": t_end,
        "step": step,
        "method": method.as_str(),
    });
    Ok(ctx.finish("simulate", options, &[&bytes], results))
}

/// Compares `d(x₁(t), x₂(t))` with `e^{−λt} d(x₁(0), x₂(0))` at every node.
fn contraction_along(sys: &LoadedSystem, a: &Trajectory, b: &Trajectory) -> Value {
    let mctx = MetricContext::new(&sys.diag);
    let lambda = convexity_constants(&sys.diag).lambda;
    let d0 = metric_distance(&mctx, &a.states[0], &b.states[0]);
    let mut max_defect = 0.0_f64;
    let mut max_scaled = 0.0_f64;
    for ((t, x), y) in a.times.iter().zip(&a.states).zip(&b.states) {
        let dist = metric_distance(&mctx, x, y);
        let bound = (-lambda * t).exp() * d0;
        let defect = dist - bound;
        if defect > 0.0 {
            max_defect = max_defect.max(defect);
            max_scaled = max_scaled.max(defect / bound.max(dist));
        }
    }
    json!({
        "lambda": lambda,
        "initial_distance": d0,
        "final_distance": metric_distance(&mctx, a.last(), b.last()),
        "max_defect": max_defect,
        "max_scaled": max_scaled,
    })
}

fn convexity(ctx: Ctx, path: &Path) -> Result<Report, CliError> {
    let bytes = input::read_bytes(path)?;
    let sys = input::parse_system(&bytes, path, ctx.cli.tol)?;
    let mctx = MetricContext::new(&sys.diag);
    let c = convexity_constants(&sys.diag);
    let opts = Sampling {
        samples: ctx.cli.samples,
        seed: ctx.cli.seed,
        radius: 1.0,
    };
    let thetas = geometry::default_theta_grid();
    let mono = geometry::check_strong_monotonicity(&sys.gs, c.lambda_tilde, opts);
    let geo = geometry::check_geodesic_convexity(&sys.gs, &mctx, c.lambda, &thetas, opts);
    let contraction = geometry::check_contraction(&sys.diag, &mctx, c.lambda, &CONTRACTION_TIMES, opts)?;
    let results = json!({
        "constants": constants_json(&c),
        "f_nonpositive": geometry::essential_range_check(&sys.diag, 0.0),
        "strong_monotonicity": violation_json(&mono),
        "geodesic_convexity": violation_json(&geo),
        "contraction": violation_json(&contraction),
        "contraction_times": CONTRACTION_TIMES,
        "thetas": thetas,
    });
    Ok(ctx.finish("convexity", json!({}), &[&bytes], results))
}

fn load_generator(path: &Path, tol: f64) -> Result<(Vec<u8>, GeneratorMatrix), CliError> {
    let bytes = input::read_bytes(path)?;
    let a = input::parse_generator(&bytes, path)?;
    let g = markov::validate_generator(&a, tol)?;
    Ok((bytes, g))
}

fn markov_cmd(ctx: Ctx, action: &MarkovCommand) -> Result<Report, CliError> {
    let tol = ctx.cli.tol;
    let (name, bytes, results) = match action {
        MarkovCommand::Validate { generator } => {
            let (bytes, g) = load_generator(generator, tol)?;
            ("markov validate", bytes, json!({ "valid": true, "dim": g.dim() }))
        }
        MarkovCommand::Stationary { generator } => {
            let (bytes, g) = load_generator(generator, tol)?;
            let pi = markov::stationary_distribution(&g, tol)?;
            ("markov stationary", bytes, json!({ "pi": vec_json(&pi) }))
        }
        MarkovCommand::Reversible { generator } => {
            let (bytes, g) = load_generator(generator, tol)?;
            let pi = markov::stationary_distribution(&g, tol)?;
            let results = json!({
                "reversible": markov::is_reversible(&g, &pi, tol),
                "detailed_balance_defect": markov::reversibility_defect(&g, &pi),
                "pi": vec_json(&pi),
            });
            ("markov reversible", bytes, results)
        }
        MarkovCommand::EntropicVerify { generator } => {
            let (bytes, g) = load_generator(generator, tol)?;
            let es = EntropicStructure::from_generator(&g, tol)?;
            let rep = markov::verify_entropic_flow(&g, &es, ctx.cli.samples, ctx.cli.seed, tol)?;
            let results = json!({
                "max_residual": rep.max_residual,
                "passed": rep.passed,
                "num_samples": rep.num_samples,
                "worst_point": vec_json(&rep.worst_point),
                "pi": vec_json(es.pi()),
            });
            ("markov entropic-verify", bytes, results)
        }
    };
    Ok(ctx.finish(name, json!({}), &[&bytes], results))
}
