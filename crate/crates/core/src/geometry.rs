//! Metric geometry of a synthesized gradient system.
//!
//! For a constant Onsager operator `K = V⁻¹V⁻ᵀ` the metric tensor is
//! `G = K⁻¹ = VᵀV`, the space is flat, geodesics are straight lines and
//! `d(x₁, x₂) = ‖V(x₂ − x₁)‖`. The convexity constants follow the case splits
//! on the sign of `max f`.

use crate::error::Result;
use crate::flow;
use crate::linalg::{self, Matrix, Vector};
use crate::sampling;
use crate::spectral::Diagonalisation;
use crate::synthesis::CanonicalGradientSystem;

#[derive(Debug, Clone)]
pub struct MetricContext {
    v: Matrix,
    norm_v: f64,
    norm_v_inv: f64,
}

impl MetricContext {
    pub fn new(diag: &Diagonalisation) -> Self {
        Self {
            v: diag.v().clone(),
            norm_v: linalg::operator_norm(diag.v()),
            norm_v_inv: linalg::operator_norm(diag.v_inv()),
        }
    }

    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn norm_v(&self) -> f64 {
        self.norm_v
    }

    pub fn norm_v_inv(&self) -> f64 {
        self.norm_v_inv
    }

    /// Metric tensor `G = VᵀV`.
    pub fn metric_tensor(&self) -> Matrix {
        self.v.transpose() * &self.v
    }
}

/// `d(x₁, x₂) = ‖V(x₂ − x₁)‖₂`.
pub fn metric_distance(ctx: &MetricContext, x1: &Vector, x2: &Vector) -> f64 {
    (&ctx.v * (x2 - x1)).norm()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityConstants {
    /// Flat-space constant `λ̃ = −max f · c̃_V`.
    pub lambda_tilde: f64,
    /// Geodesic constant `λ = −max f · c_V`.
    pub lambda: f64,
    /// `λ` obtained from `λ̃` through the metric-bounds transfer.
    pub lambda_via_transfer: f64,
    pub c_v: f64,
    pub c_v_tilde: f64,
    pub esssup_f: f64,
}

/// Convexity constants of the synthesized energy.
///
/// * `max f ≥ 0`: `c̃_V = ‖V‖²`, `c_V = ‖V⁻¹‖²‖V‖²`;
/// * `max f < 0`: `c̃_V = ‖V⁻¹‖⁻²`, `c_V = (‖V⁻¹‖²‖V‖²)⁻¹`;
///
/// and the transfer `λ = λ̃‖V‖⁻²` if `λ̃ > 0`, `λ = λ̃‖V⁻¹‖²` otherwise.
pub fn convexity_constants(diag: &Diagonalisation) -> ConvexityConstants {
    let ctx = MetricContext::new(diag);
    let (nv, nvi) = (ctx.norm_v, ctx.norm_v_inv);
    let esssup_f = diag.max_f();

    let (c_v_tilde, c_v) = if esssup_f >= 0.0 {
        (nv * nv, nvi * nvi * nv * nv)
    } else {
        (1.0 / (nvi * nvi), 1.0 / (nvi * nvi * nv * nv))
    };
    // `0.0 - x` keeps an exact zero from turning into -0.0.
    let lambda_tilde = 0.0 - esssup_f * c_v_tilde;
    let lambda = 0.0 - esssup_f * c_v;
    let lambda_via_transfer = if lambda_tilde > 0.0 {
        lambda_tilde / (nv * nv)
    } else {
        lambda_tilde * nvi * nvi
    };

    ConvexityConstants {
        lambda_tilde,
        lambda,
        lambda_via_transfer,
        c_v,
        c_v_tilde,
        esssup_f,
    }
}

/// Largest inequality defect found by a sampled certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    /// `max(0, defect)` over all samples, in absolute units.
    pub max_violation: f64,
    /// Largest defect divided by the rounding scale of its own sample.
    pub max_scaled: f64,
    pub samples: usize,
    pub seed: u64,
}

impl ViolationReport {
    fn new(samples: usize, seed: u64) -> Self {
        Self {
            max_violation: 0.0,
            max_scaled: 0.0,
            samples,
            seed,
        }
    }

    fn record(&mut self, defect: f64, scale: f64) {
        let defect = if defect.is_nan() { f64::INFINITY } else { defect };
        if defect > 0.0 {
            self.max_violation = self.max_violation.max(defect);
            self.max_scaled = self.max_scaled.max(defect / scale.max(f64::MIN_POSITIVE));
        }
    }
}

/// Sampling options shared by the certificates.
#[derive(Debug, Clone, Copy)]
pub struct Sampling {
    pub samples: usize,
    pub seed: u64,
    /// Pairs are drawn uniformly from the ball of this radius around `π`.
    pub radius: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 0,
            radius: 1.0,
        }
    }
}

fn sample_pairs(centre: &Vector, opts: Sampling) -> Vec<(Vector, Vector)> {
    let mut rng = sampling::rng(opts.seed);
    let d = centre.len();
    (0..opts.samples)
        .map(|_| {
            let x1 = centre + sampling::unit_ball(&mut rng, d, opts.radius);
            let x2 = centre + sampling::unit_ball(&mut rng, d, opts.radius);
            (x1, x2)
        })
        .collect()
}

/// `λ̃‖x₁−x₂‖² − ⟨DF(x₁)−DF(x₂), x₁−x₂⟩` with its rounding scale.
pub fn strong_monotonicity_defect(
    gs: &CanonicalGradientSystem,
    lambda_tilde: f64,
    x1: &Vector,
    x2: &Vector,
) -> (f64, f64) {
    monotonicity_defect(gs, linalg::operator_norm(gs.b()), lambda_tilde, x1, x2)
}

fn monotonicity_defect(
    gs: &CanonicalGradientSystem,
    b_norm: f64,
    lambda_tilde: f64,
    x1: &Vector,
    x2: &Vector,
) -> (f64, f64) {
    let delta = x1 - x2;
    let dd = delta.norm_squared();
    let form = (gs.b() * &delta).dot(&delta);
    (lambda_tilde * dd - form, (b_norm + lambda_tilde.abs()) * dd)
}

/// Sampled check of `⟨DF(x₁)−DF(x₂), x₁−x₂⟩ ≥ λ̃‖x₁−x₂‖²`.
pub fn check_strong_monotonicity(gs: &CanonicalGradientSystem, lambda_tilde: f64, opts: Sampling) -> ViolationReport {
    let mut report = ViolationReport::new(opts.samples, opts.seed);
    let b_norm = linalg::operator_norm(gs.b());
    for (x1, x2) in sample_pairs(gs.pi(), opts) {
        let (defect, scale) = monotonicity_defect(gs, b_norm, lambda_tilde, &x1, &x2);
        report.record(defect, scale);
    }
    report
}

/// `{0, 0.1, …, 1} ∪ {0.499, 0.501}`.
pub fn default_theta_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    grid.extend([0.5 - 1e-3, 0.5 + 1e-3]);
    grid
}

/// Defect of the geodesic convexity inequality
/// `F(γ(θ)) ≤ (1−θ)F(x₁) + θF(x₂) − λθ(1−θ)d(x₁,x₂)²/2` on the straight line
/// `γ(θ) = (1−θ)x₁ + θx₂`, with its rounding scale.
pub fn geodesic_convexity_defect(
    gs: &CanonicalGradientSystem,
    ctx: &MetricContext,
    lambda: f64,
    x1: &Vector,
    x2: &Vector,
    theta: f64,
) -> (f64, f64) {
    convexity_defect(gs, linalg::operator_norm(gs.b()), ctx, lambda, x1, x2, theta)
}

fn convexity_defect(
    gs: &CanonicalGradientSystem,
    b_norm: f64,
    ctx: &MetricContext,
    lambda: f64,
    x1: &Vector,
    x2: &Vector,
    theta: f64,
) -> (f64, f64) {
    let gamma = x1 * (1.0 - theta) + x2 * theta;
    let dist2 = metric_distance(ctx, x1, x2).powi(2);
    let rhs = (1.0 - theta) * gs.energy(x1) + theta * gs.energy(x2) - lambda * theta * (1.0 - theta) * dist2 / 2.0;
    let defect = gs.energy(&gamma) - rhs;
    let r1 = (x1 - gs.pi()).norm_squared();
    let r2 = (x2 - gs.pi()).norm_squared();
    (defect, 0.5 * b_norm * (r1 + r2) + lambda.abs() * dist2)
}

pub fn check_geodesic_convexity(
    gs: &CanonicalGradientSystem,
    ctx: &MetricContext,
    lambda: f64,
    thetas: &[f64],
    opts: Sampling,
) -> ViolationReport {
    let mut report = ViolationReport::new(opts.samples * thetas.len(), opts.seed);
    let b_norm = linalg::operator_norm(gs.b());
    for (x1, x2) in sample_pairs(gs.pi(), opts) {
        for &theta in thetas {
            let (defect, scale) = convexity_defect(gs, b_norm, ctx, lambda, &x1, &x2, theta);
            report.record(defect, scale);
        }
    }
    report
}

/// Sampled check of `d(x₁(t), x₂(t)) ≤ e^{−λt} d(x₁(0), x₂(0))` along the
/// exact flow, over pairs drawn around the origin.
pub fn check_contraction(
    diag: &Diagonalisation,
    ctx: &MetricContext,
    lambda: f64,
    times: &[f64],
    opts: Sampling,
) -> Result<ViolationReport> {
    let mut report = ViolationReport::new(opts.samples * times.len(), opts.seed);
    let centre = Vector::zeros(diag.dim());
    for (x1, x2) in sample_pairs(&centre, opts) {
        let d0 = metric_distance(ctx, &x1, &x2);
        for &t in times {
            let y1 = flow::exact_flow(diag, &x1, t)?;
            let y2 = flow::exact_flow(diag, &x2, t)?;
            let bound = (-lambda * t).exp() * d0;
            let dt = metric_distance(ctx, &y1, &y2);
            report.record(dt - bound, bound.max(dt));
        }
    }
    Ok(report)
}

/// Whether `max f ≤ bound` up to the diagonalisation's tolerance; with
/// `bound = 0` this is the statement `f ≤ 0` everywhere on the state space.
pub fn essential_range_check(diag: &Diagonalisation, bound: f64) -> bool {
    let scale = diag.f().amax().max(1.0);
    diag.max_f() <= bound + diag.tol() * scale
}
