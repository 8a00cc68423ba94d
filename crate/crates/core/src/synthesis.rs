//! Canonical gradient systems for linear flows.
//!
//! A canonical gradient system is a triple `(K, B, π)` with a constant
//! symmetric positive definite Onsager operator `K` and the quadratic energy
//! `F(x) = ½⟨B(x−π), x−π⟩`. Its flow is `ẋ = −K DF(x) = −K B (x − π)`.
//!
//! This module builds such a system from a real diagonalisation, recovers a
//! diagonalisation from a system, and linearises generalised systems around an
//! equilibrium.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::spectral::{self, Diagonalisation};

/// Relative tolerance for finite-difference level checks in linearisation.
const FD_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct CanonicalGradientSystem {
    k: Matrix,
    b: Matrix,
    pi: Vector,
}

impl CanonicalGradientSystem {
    /// Validates `K` SPD and `B` symmetric, both relative to `tol`.
    pub fn new(k: Matrix, b: Matrix, pi: Vector, tol: f64) -> Result<Self> {
        let d = linalg::check_square(&k)?;
        let db = linalg::check_square(&b)?;
        if db != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: db,
            });
        }
        linalg::check_finite(&k)?;
        linalg::check_finite(&b)?;
        linalg::check_len(&pi, d)?;
        if !spectral::is_spd(&k, tol) {
            return Err(Error::NotSpd);
        }
        if (&b - b.transpose()).norm() > tol * b.norm() {
            return Err(Error::AsymmetryDefect(linalg::relative(
                (&b - b.transpose()).norm(),
                b.norm(),
            )));
        }
        Ok(Self { k, b, pi })
    }

    /// Skips validation; callers have already certified the parts.
    pub(crate) fn from_parts_unchecked(k: Matrix, b: Matrix, pi: Vector) -> Self {
        Self { k, b, pi }
    }

    pub fn dim(&self) -> usize {
        self.pi.len()
    }

    /// Onsager operator `K`.
    pub fn k(&self) -> &Matrix {
        &self.k
    }

    /// Hessian `B` of the energy.
    pub fn b(&self) -> &Matrix {
        &self.b
    }

    /// Equilibrium `π`.
    pub fn pi(&self) -> &Vector {
        &self.pi
    }

    /// `F(x) = ½⟨B(x−π), x−π⟩`.
    pub fn energy(&self, x: &Vector) -> f64 {
        let z = x - &self.pi;
        0.5 * (&self.b * &z).dot(&z)
    }

    /// `DF(x) = B(x−π)`.
    pub fn gradient(&self, x: &Vector) -> Vector {
        &self.b * (x - &self.pi)
    }

    /// `−K DF(x)`.
    pub fn velocity(&self, x: &Vector) -> Vector {
        -(&self.k * self.gradient(x))
    }

    /// The generator `−K B` of the flow.
    pub fn generator(&self) -> Matrix {
        -(&self.k * &self.b)
    }
}

/// Builds `K = V⁻¹V⁻ᵀ`, `B = −Vᵀ diag(f) V` and `π = 0`.
///
/// With these, `DF(x) = −Vᵀ diag(f) V x` and
/// `−K DF(x) = V⁻¹V⁻ᵀVᵀ diag(f) V x = V⁻¹ diag(f) V x = Ax`.
pub fn synthesize_canonical(diag: &Diagonalisation) -> Result<CanonicalGradientSystem> {
    let tol = diag.tol();
    let w = diag.v_inv();
    let v = diag.v();
    let k = linalg::symmetrize(&(w * w.transpose()));

    let mut fv = v.clone();
    for (i, mut row) in fv.row_iter_mut().enumerate() {
        row *= diag.f()[i];
    }
    let b = -linalg::symmetrize(&(v.transpose() * fv));

    if !spectral::is_spd(&k, tol) {
        return Err(Error::IllConditioned(diag.condition()));
    }
    let a = diag.reconstruct();
    let defect = (&a + &k * &b).norm();
    if defect > tol * a.norm() {
        return Err(Error::IllConditioned(diag.condition()));
    }
    let pi = Vector::zeros(diag.dim());
    Ok(CanonicalGradientSystem::from_parts_unchecked(k, b, pi))
}

/// Recovers `A = V⁻¹ diag(f) V` from `A = −K B` through the symmetric square
/// root: `Ā = S⁻¹ A S` is symmetric for `S = √K`, so `Ā = Q diag(f) Qᵀ` and
/// `V = Qᵀ S⁻¹`.
///
/// Invertibility of `A` is not required: positive definiteness of `K` already
/// makes `S` invertible in finite dimensions.
pub fn recover_diagonalisation(
    gs: &CanonicalGradientSystem,
    a: &Matrix,
    tol: f64,
) -> Result<Diagonalisation> {
    let d = linalg::check_square(a)?;
    linalg::check_finite(a)?;
    if d != gs.dim() {
        return Err(Error::DimensionMismatch {
            expected: gs.dim(),
            found: d,
        });
    }
    let a_norm = a.norm();
    let flow_defect = (a + gs.k() * gs.b()).norm();
    if flow_defect > tol * a_norm {
        return Err(Error::FlowMismatch(linalg::relative(flow_defect, a_norm)));
    }

    let s = spectral::symmetric_sqrt(gs.k(), tol)?;
    let s_inv = linalg::inverse(&s)?;
    let a_bar = &s_inv * a * &s;
    let asym = (&a_bar - a_bar.transpose()).norm();
    if asym > tol * a_bar.norm() {
        return Err(Error::AsymmetryDefect(linalg::relative(asym, a_bar.norm())));
    }

    let eig = linalg::symmetrize(&a_bar).symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let f = Vector::from_iterator(d, order.iter().map(|&i| eig.eigenvalues[i]));
    let q_cols: Vec<Vector> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    let q = Matrix::from_columns(&q_cols);

    let v = q.transpose() * &s_inv;
    let v_inv = &s * &q;
    let diag = Diagonalisation::from_raw(v, v_inv, f, tol);
    let residual = (a - diag.reconstruct()).norm();
    if residual > tol * a_norm {
        return Err(Error::AsymmetryDefect(linalg::relative(residual, a_norm)));
    }
    Ok(diag.with_residual(residual))
}

pub type GradientField = Box<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type ForceResponse = Box<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;

/// Callable view of a generalised gradient system `(Ψ*, F)` near a claimed
/// equilibrium, sufficient to linearise it.
///
/// `psi_star_grad(x, ξ)` is `D_ξΨ*(x, ξ)`; it must vanish at `ξ = 0`.
/// An optional conserved direction `c` (for example mass, `c = 𝟙`) allows the
/// dissipation Hessian to be degenerate along `c` and the energy gradient at
/// `π` to be a multiple of `c`: the flow lives on an affine slice orthogonal
/// to `c`, where both conditions are the usual ones.
pub struct GeneralisedSystemProbe {
    pi: Vector,
    grad_f: GradientField,
    hess_f_at_pi: Option<Matrix>,
    psi_star_grad: ForceResponse,
    psi_star_hess_at_pi0: Option<Matrix>,
    conserved: Option<Vector>,
}

impl GeneralisedSystemProbe {
    pub fn new(pi: Vector, grad_f: GradientField, psi_star_grad: ForceResponse) -> Self {
        Self {
            pi,
            grad_f,
            hess_f_at_pi: None,
            psi_star_grad,
            psi_star_hess_at_pi0: None,
            conserved: None,
        }
    }

    /// Supplies `D²F(π)` analytically instead of by finite differences.
    pub fn with_energy_hessian(mut self, h: Matrix) -> Self {
        self.hess_f_at_pi = Some(h);
        self
    }

    /// Supplies `D²_ξΨ*(π, 0)` analytically instead of by finite differences.
    pub fn with_dissipation_hessian(mut self, h: Matrix) -> Self {
        self.psi_star_hess_at_pi0 = Some(h);
        self
    }

    pub fn with_conserved_direction(mut self, c: Vector) -> Self {
        self.conserved = Some(c);
        self
    }

    pub fn dim(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &Vector {
        &self.pi
    }

    pub fn grad_f(&self, x: &Vector) -> Vector {
        (self.grad_f)(x)
    }

    pub fn psi_star_grad(&self, x: &Vector, xi: &Vector) -> Vector {
        (self.psi_star_grad)(x, xi)
    }

    fn unit_conserved(&self) -> Option<Vector> {
        self.conserved
            .as_ref()
            .filter(|c| c.norm() > 0.0)
            .map(|c| c.normalize())
    }

    /// Removes the component along the conserved direction, if any.
    fn project(&self, v: &Vector) -> Vector {
        match self.unit_conserved() {
            Some(c) => v - &c * c.dot(v),
            None => v.clone(),
        }
    }

    /// Checks the equilibrium condition and that `D_ξΨ*(x, 0)` vanishes at
    /// `π` and at a few nearby states.
    pub fn validate(&self, scale: f64) -> Result<()> {
        let d = self.dim();
        linalg::check_len(&self.pi, d)?;
        let tol = FD_CHECK_TOL * scale.max(1.0);

        let g = self.project(&self.grad_f(&self.pi));
        if g.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: g.len(),
            });
        }
        if !(g.norm() <= tol) {
            return Err(Error::NotCritical(g.norm()));
        }

        let zero = Vector::zeros(d);
        let offset = 1e-3 * (1.0 + self.pi.norm()) / (d as f64).sqrt();
        let mut points = vec![self.pi.clone()];
        for i in 0..d.min(4) {
            let mut x = self.pi.clone();
            x[i] += offset;
            x[(i + 1) % d] -= offset;
            points.push(x);
        }
        for x in &points {
            let r = self.psi_star_grad(x, &zero);
            if !(r.norm() <= tol) {
                return Err(Error::DissipationNotCentred(r.norm()));
            }
        }
        Ok(())
    }
}

/// Default central-difference step `10⁻⁵ (1 + ‖π‖)`.
pub fn default_step(pi: &Vector) -> f64 {
    1e-5 * (1.0 + pi.norm())
}

/// Central-difference Jacobian of `g` at `x`.
fn jacobian(g: impl Fn(&Vector) -> Vector, x: &Vector, h: f64) -> Matrix {
    let d = x.len();
    let mut jac = Matrix::zeros(d, d);
    for j in 0..d {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[j] += h;
        minus[j] -= h;
        let col = (g(&plus) - g(&minus)) / (2.0 * h);
        jac.set_column(j, &col);
    }
    jac
}

/// Linearises a generalised gradient system at its equilibrium.
///
/// Differentiating `Ax = D_ξΨ*(x, −DF(x))` at `π` gives
/// `A = −D²_ξΨ*(π, 0) D²F(π)`, i.e. the canonical system
/// `K̂ = D²_ξΨ*(π, 0)`, `B̂ = D²F(π)` with the same equilibrium.
pub fn linearise_generalised(probe: &GeneralisedSystemProbe, h: f64) -> Result<CanonicalGradientSystem> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::BadParameter("finite-difference step", h));
    }
    let d = probe.dim();
    let pi = probe.pi();

    let b_hat = match &probe.hess_f_at_pi {
        Some(m) => m.clone(),
        None => jacobian(|x| probe.grad_f(x), pi, h),
    };
    let zero = Vector::zeros(d);
    let k_hat = match &probe.psi_star_hess_at_pi0 {
        Some(m) => m.clone(),
        None => jacobian(|xi| probe.psi_star_grad(pi, xi), &zero, h),
    };
    for m in [&b_hat, &k_hat] {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.nrows(),
            });
        }
        linalg::check_finite(m)?;
    }
    let k_hat = linalg::symmetrize(&k_hat);
    let b_hat = linalg::symmetrize(&b_hat);

    probe.validate(linalg::operator_norm(&b_hat) * (1.0 + pi.norm()))?;

    let k_norm = linalg::operator_norm(&k_hat);
    let definite = match probe.unit_conserved() {
        Some(c) => {
            let leak = (&k_hat * &c).norm();
            let lifted = &k_hat + &c * c.transpose() * k_norm.max(1.0);
            leak <= FD_CHECK_TOL * k_norm.max(1.0) && spectral::is_spd(&lifted, FD_CHECK_TOL)
        }
        None => spectral::is_spd(&k_hat, FD_CHECK_TOL),
    };
    if !definite {
        return Err(Error::NotSpd);
    }
    Ok(CanonicalGradientSystem::from_parts_unchecked(k_hat, b_hat, pi.clone()))
}

/// Outcome of checking `A = −K B`.
#[derive(Debug, Clone)]
pub struct FlowResidualReport {
    /// `‖A + KB‖_F / ‖A‖_F`.
    pub max_residual: f64,
    pub num_samples: usize,
    /// Unit direction along which `(A + KB)x` is largest.
    pub worst_point: Vector,
    pub passed: bool,
}

/// Operator-level check of the flow identity; for quadratic energies it is
/// equivalent to checking `Ax = −K DF(x)` at every `x`.
pub fn verify_flow_identity(a: &Matrix, gs: &CanonicalGradientSystem, tol: f64) -> Result<FlowResidualReport> {
    let d = linalg::check_square(a)?;
    if d != gs.dim() {
        return Err(Error::DimensionMismatch {
            expected: gs.dim(),
            found: d,
        });
    }
    let r = a + gs.k() * gs.b();
    let max_residual = linalg::relative(r.norm(), a.norm());
    let (_, basis) = linalg::right_singular_pairs(&r);
    Ok(FlowResidualReport {
        max_residual,
        num_samples: d,
        worst_point: basis.column(0).into_owned(),
        passed: max_residual <= tol,
    })
}
