//! Time integration of `ẋ = Ax`.
//!
//! Three integrators: the exact spectral propagator `V⁻¹ diag(e^{tf}) V`,
//! classical fixed-step RK4, and minimizing-movement steps in the metric of the
//! synthesized gradient system.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::MetricContext;
use crate::linalg::{self, Matrix, Vector};
use crate::spectral::Diagonalisation;
use crate::synthesis::CanonicalGradientSystem;

/// Largest admissible `t·fᵢ` before `exp` overflows in double precision.
pub const OVERFLOW_GUARD: f64 = 700.0;

/// Default node count for audited trajectories.
pub const DEFAULT_NODES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Rk4,
    MinimizingMovement,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Rk4 => "rk4",
            Method::MinimizingMovement => "mm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Method::Exact),
            "rk4" => Ok(Method::Rk4),
            "mm" | "minimizing-movement" => Ok(Method::MinimizingMovement),
            other => Err(format!("unknown method `{other}` (expected exact, rk4 or mm)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub method: Method,
}

impl Trajectory {
    pub fn last(&self) -> &Vector {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

/// `e^{tA} x₀ = V⁻¹ diag(e^{t f}) V x₀`; negative `t` runs the flow backwards.
pub fn exact_flow(diag: &Diagonalisation, x0: &Vector, t: f64) -> Result<Vector> {
    linalg::check_len(x0, diag.dim())?;
    if t == 0.0 {
        return Ok(x0.clone());
    }
    if let Some(worst) = diag.f().iter().map(|&f| t * f).find(|&e| e > OVERFLOW_GUARD) {
        return Err(Error::Overflow(worst));
    }
    let mut y = diag.v() * x0;
    for (yi, &fi) in y.iter_mut().zip(diag.f().iter()) {
        *yi *= (t * fi).exp();
    }
    Ok(diag.v_inv() * y)
}

/// Uniform grid on `[0, t_end]` whose spacing does not exceed `h`.
fn grid(t_end: f64, h: f64) -> Result<Vec<f64>> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::BadParameter("time horizon", t_end));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::BadParameter("step", h));
    }
    if t_end == 0.0 {
        return Ok(vec![0.0]);
    }
    let n = ((t_end / h) - 1e-9).ceil().max(1.0) as usize;
    let dt = t_end / n as f64;
    Ok((0..=n).map(|k| if k == n { t_end } else { k as f64 * dt }).collect())
}

/// Samples the exact flow on the uniform grid of spacing at most `h`.
pub fn exact_trajectory(diag: &Diagonalisation, x0: &Vector, t_end: f64, h: f64) -> Result<Trajectory> {
    let times = grid(t_end, h)?;
    let states = times
        .iter()
        .map(|&t| exact_flow(diag, x0, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times,
        states,
        method: Method::Exact,
    })
}

/// Warning text when `h ‖A‖₂ > 1`, where RK4 may lose stability.
pub fn rk4_stability_advisory(a: &Matrix, h: f64) -> Option<String> {
    let hn = h * linalg::operator_norm(a);
    (hn > 1.0).then(|| format!("rk4 step h = {h} gives h*|A| = {hn:.3} > 1; the scheme may be unstable"))
}

/// Classical fourth-order Runge–Kutta with fixed steps.
///
/// If `t_end` is not a multiple of `h` the step is shrunk uniformly so the
/// grid ends exactly at `t_end`.
pub fn rk4_flow(a: &Matrix, x0: &Vector, t_end: f64, h: f64) -> Result<Trajectory> {
    let d = linalg::check_square(a)?;
    linalg::check_len(x0, d)?;
    if let Some(msg) = rk4_stability_advisory(a, h) {
        log::warn!("{msg}");
    }
    let times = grid(t_end, h)?;
    let mut states = Vec::with_capacity(times.len());
    let mut x = x0.clone();
    states.push(x.clone());
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        let k1 = a * &x;
        let k2 = a * (&x + &k1 * (dt / 2.0));
        let k3 = a * (&x + &k2 * (dt / 2.0));
        let k4 = a * (&x + &k3 * dt);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState(w[1]));
        }
        states.push(x.clone());
    }
    Ok(Trajectory {
        times,
        states,
        method: Method::Rk4,
    })
}

/// Minimizing-movement scheme
/// `x_{k+1} = argmin F(x) + d(x, x_k)² / (2τ)`.
///
/// With `G = VᵀV` and quadratic `F` the minimizer solves
/// `(G + τB) x_{k+1} = G x_k + τBπ`, which has a unique solution exactly when
/// `G + τB` is positive definite.
pub fn minimizing_movement_flow(
    gs: &CanonicalGradientSystem,
    ctx: &MetricContext,
    x0: &Vector,
    t_end: f64,
    tau: f64,
) -> Result<Trajectory> {
    let d = gs.dim();
    if ctx.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: ctx.dim(),
        });
    }
    linalg::check_len(x0, d)?;
    let times = grid(t_end, tau)?;
    let g = ctx.metric_tensor();
    let mut states = Vec::with_capacity(times.len());
    let mut x = x0.clone();
    states.push(x.clone());
    if times.len() > 1 {
        let step = times[1] - times[0];
        let system = linalg::symmetrize(&(&g + gs.b() * step));
        let chol = system.cholesky().ok_or(Error::SingularStep(step))?;
        let forcing = gs.b() * gs.pi() * step;
        for w in times.windows(2) {
            let dt = w[1] - w[0];
            // The last node can differ from the uniform spacing by rounding.
            x = if (dt - step).abs() <= 1e-12 * step {
                chol.solve(&(&g * &x + &forcing))
            } else {
                let sys = linalg::symmetrize(&(&g + gs.b() * dt));
                let c = sys.cholesky().ok_or(Error::SingularStep(dt))?;
                c.solve(&(&g * &x + gs.b() * gs.pi() * dt))
            };
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteState(w[1]));
            }
            states.push(x.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        method: Method::MinimizingMovement,
    })
}

#[derive(Debug, Clone)]
pub struct DissipationReport {
    pub f_values: Vec<f64>,
    /// `F` is non-increasing up to `10⁻⁹` of the trajectory's energy scale.
    pub monotone: bool,
    /// `max |ΔF/Δt + ⟨DF, K DF⟩|` over interior nodes (central differences).
    pub dissipation_defect: f64,
}

/// Evaluates the energy along a trajectory and checks the dissipation
/// identity `dF/dt = −⟨DF, K DF⟩`.
pub fn dissipation_audit(gs: &CanonicalGradientSystem, traj: &Trajectory) -> DissipationReport {
    let f_values: Vec<f64> = traj.states.iter().map(|x| gs.energy(x)).collect();
    let b_norm = linalg::operator_norm(gs.b());
    let scale = traj
        .states
        .iter()
        .map(|x| 0.5 * b_norm * (x - gs.pi()).norm_squared())
        .fold(0.0, f64::max);
    let slack = 1e-9 * scale;
    let monotone = f_values.windows(2).all(|w| w[1] <= w[0] + slack);

    let mut dissipation_defect = 0.0_f64;
    for k in 1..traj.times.len().saturating_sub(1) {
        let dt = traj.times[k + 1] - traj.times[k - 1];
        let slope = (f_values[k + 1] - f_values[k - 1]) / dt;
        let g = gs.gradient(&traj.states[k]);
        let rate = g.dot(&(gs.k() * &g));
        dissipation_defect = dissipation_defect.max((slope + rate).abs());
    }
    DissipationReport {
        f_values,
        monotone,
        dissipation_defect,
    }
}
