//! Splitting solver for the masked separation program
//! `min gamma ||S||_1 + ||L||_*  subject to  L + H S = M0`.
//!
//! The iteration is a three-block scheme on the scaled augmented
//! Lagrangian with penalty `rho`:
//!
//! 1. `L <- SVT_{1/rho}(M0 - H S - W)` (exact proximal step),
//! 2. `S <- soft(S - (1/eta) H^T (H S + L - M0 + W), gamma/(rho eta))`
//!    with `eta = ||H||^2 / step_scale` (majorized proximal step; the
//!    S-subproblem has no closed form for general H), or an inner FISTA
//!    loop on the full S-subproblem,
//! 3. `W <- W + (H S + L - M0)`.

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::prox::{soft_threshold, svt_with_factors};
use crate::space::{support_project, tangent_project, SupportSet};
use crate::svd::{pseudoinverse, singular_values, spectral_norm, SvdFactors, DEFAULT_RANK_TOL};
use alloc::vec::Vec;

/// Condition-number guard for the pseudoinverse baseline.
pub const PINV_COND_GUARD: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SolverMethod {
    LinearizedAdmm,
    AdmmInnerFista,
    PinvBaseline,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default = "SolverConfig::template"))]
pub struct SolverConfig {
    /// Trade-off weight on the sparse term.
    pub gamma: f64,
    /// Augmented-Lagrangian penalty.
    pub rho: f64,
    /// Fraction of the safe majorization step actually taken, in (0, 1].
    pub step_scale: f64,
    pub max_iter: usize,
    /// Relative feasibility tolerance ||H S + L - M0||_F / max(1, ||M0||_F).
    pub tol_primal: f64,
    /// Relative successive-iterate change tolerance.
    pub tol_change: f64,
    pub method: SolverMethod,
    /// Inner FISTA steps per outer iteration (AdmmInnerFista only).
    pub inner_iters: usize,
    pub record_history: bool,
}

impl SolverConfig {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            ..Self::template()
        }
    }

    /// Defaults with a placeholder gamma; deserialization base.
    fn template() -> Self {
        Self {
            gamma: 0.1,
            rho: 1.0,
            step_scale: 0.99,
            max_iter: 2000,
            tol_primal: 1e-7,
            tol_change: 1e-7,
            method: SolverMethod::LinearizedAdmm,
            inner_iters: 20,
            record_history: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma must be positive"));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(invalid("rho must be positive"));
        }
        if !(self.step_scale > 0.0 && self.step_scale <= 1.0) {
            return Err(invalid("step_scale must lie in (0, 1]"));
        }
        if self.max_iter < 1 {
            return Err(invalid("max_iter must be at least 1"));
        }
        if !(self.tol_primal > 0.0 && self.tol_change > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        if self.method == SolverMethod::AdmmInnerFista && self.inner_iters < 1 {
            return Err(invalid("inner_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SolverStatus {
    Converged,
    MaxIter,
    Diverged,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub s_hat: Matrix,
    pub l_hat: Matrix,
    /// Scaled dual variable W at the last iteration; the Lagrange
    /// multiplier estimate is `Q = -rho * W`.
    pub dual: Matrix,
    /// Penalty rho the run used (needed to unscale the dual).
    pub penalty: f64,
    pub iterations: usize,
    /// ||H S + L - M0||_F / max(1, ||M0||_F) at exit.
    pub primal_residual: f64,
    /// gamma ||S||_1 + ||L||_* at exit.
    pub objective: f64,
    pub status: SolverStatus,
    /// (primal_residual, objective) per iteration when recorded.
    pub history: Option<Vec<(f64, f64)>>,
    /// sigma_min(H) < 1e-8 sigma_max(H) (or H wider than tall): S_hat is
    /// one minimizer among possibly many; only G S_hat is pinned down.
    pub possibly_non_unique: bool,
}

fn l1_norm(a: &Matrix) -> f64 {
    a.data().iter().map(|&v| math::abs(v)).sum()
}

/// Solve the masked separation program.
pub fn solve_masked_separation(
    m0: &Matrix,
    h: &Matrix,
    config: &SolverConfig,
) -> Result<SolverResult> {
    config.validate()?;
    if config.method == SolverMethod::PinvBaseline {
        return solve_via_pinv(m0, h, config);
    }
    if h.rows() != m0.rows() {
        return Err(crate::error::shape_err(
            alloc::format!("mask with {} rows", m0.rows()),
            alloc::format!("{}x{}", h.rows(), h.cols()),
        ));
    }
    m0.check_finite()?;
    h.check_finite()?;

    let m = m0.rows();
    let n = m0.cols();
    let p = h.cols();
    let h_values = singular_values(h)?;
    let h_norm = h_values.first().copied().unwrap_or(0.0);
    let h_min = h_values.last().copied().unwrap_or(0.0);
    let possibly_non_unique = m < p || h_min < 1e-8 * h_norm;
    let eta = if h_norm > 0.0 {
        h_norm * h_norm / config.step_scale
    } else {
        1.0
    };

    let rho = config.rho;
    let gamma = config.gamma;
    let denom = m0.frobenius_norm().max(1.0);

    let mut s = Matrix::zeros(p, n);
    let mut l = Matrix::zeros(m, n);
    let mut w = Matrix::zeros(m, n);
    let mut history = config.record_history.then(Vec::new);

    let mut status = SolverStatus::MaxIter;
    let mut iterations = config.max_iter;
    let mut primal_residual = f64::INFINITY;
    let mut objective = f64::NAN;

    for iter in 1..=config.max_iter {
        let s_prev = s.clone();
        let l_prev = l.clone();

        // L-step at the current S
        let hs = h.matmul(&s);
        let target = m0.sub(&hs).sub(&w);
        let (l_new, l_factors) = svt_with_factors(&target, 1.0 / rho)?;
        l = l_new;

        // S-step at the new L
        match config.method {
            SolverMethod::LinearizedAdmm => {
                let residual = hs.add(&l).sub(m0).add(&w);
                let grad = h.at_mul_b(&residual);
                let stepped = s.sub(&grad.scale(1.0 / eta));
                s = soft_threshold(&stepped, gamma / (rho * eta))?;
            }
            SolverMethod::AdmmInnerFista => {
                let offset = l.sub(m0).add(&w);
                s = fista_s_step(h, &offset, &s, gamma, rho, eta, config.inner_iters)?;
            }
            SolverMethod::PinvBaseline => unreachable!("dispatched above"),
        }

        // dual ascent on the new residual
        let residual = h.matmul(&s).add(&l).sub(m0);
        w = w.add(&residual);

        if !(s.is_finite() && l.is_finite() && w.is_finite()) {
            status = SolverStatus::Diverged;
            iterations = iter;
            break;
        }

        primal_residual = residual.frobenius_norm() / denom;
        let nuclear: f64 = l_factors.singular_values.iter().sum();
        objective = gamma * l1_norm(&s) + nuclear;
        if let Some(hist) = history.as_mut() {
            hist.push((primal_residual, objective));
        }

        let change = (s.sub(&s_prev).frobenius_norm() + l.sub(&l_prev).frobenius_norm())
            / (s_prev.frobenius_norm() + l_prev.frobenius_norm()).max(1.0);
        if primal_residual <= config.tol_primal && change <= config.tol_change {
            status = SolverStatus::Converged;
            iterations = iter;
            break;
        }
    }

    if status == SolverStatus::Diverged {
        objective = f64::NAN;
    }
    Ok(SolverResult {
        s_hat: s,
        l_hat: l,
        dual: w,
        penalty: rho,
        iterations,
        primal_residual,
        objective,
        status,
        history,
        possibly_non_unique,
    })
}

/// Accelerated proximal-gradient steps on the S-subproblem
/// `min gamma ||S||_1 + (rho/2) ||H S + offset||_F^2`, warm-started.
fn fista_s_step(
    h: &Matrix,
    offset: &Matrix,
    warm: &Matrix,
    gamma: f64,
    rho: f64,
    eta: f64,
    inner_iters: usize,
) -> Result<Matrix> {
    let step = 1.0 / eta;
    let threshold = gamma / (rho * eta);
    let mut x_prev = warm.clone();
    let mut y = warm.clone();
    let mut t = 1.0f64;
    for _ in 0..inner_iters {
        let grad = h.at_mul_b(&h.matmul(&y).add(offset));
        let x = soft_threshold(&y.sub(&grad.scale(step)), threshold)?;
        let t_next = 0.5 * (1.0 + math::sqrt(1.0 + 4.0 * t * t));
        let momentum = (t - 1.0) / t_next;
        y = x.add(&x.sub(&x_prev).scale(momentum));
        x_prev = x;
        t = t_next;
    }
    Ok(x_prev)
}

/// Baseline for invertible masks: solve the unmasked program on
/// `H^{-1} M0 = S + Y` and map back through `L = H Y`.
pub fn solve_via_pinv(m0: &Matrix, h: &Matrix, config: &SolverConfig) -> Result<SolverResult> {
    config.validate()?;
    if h.rows() != h.cols() {
        return Err(invalid(alloc::format!(
            "pinv baseline needs a square mask, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    if h.rows() != m0.rows() {
        return Err(crate::error::shape_err(
            alloc::format!("mask with {} rows", m0.rows()),
            alloc::format!("{}x{}", h.rows(), h.cols()),
        ));
    }
    let values = singular_values(h)?;
    let sigma_max = values.first().copied().unwrap_or(0.0);
    let sigma_min = values.last().copied().unwrap_or(0.0);
    let cond = if sigma_min > 0.0 {
        sigma_max / sigma_min
    } else {
        f64::INFINITY
    };
    if cond.is_nan() || cond > PINV_COND_GUARD {
        return Err(Error::IllConditioned {
            cond,
            guard: PINV_COND_GUARD,
        });
    }

    let h_inv = pseudoinverse(h, DEFAULT_RANK_TOL)?;
    let reduced = h_inv.matmul(m0);
    let inner_config = SolverConfig {
        method: SolverMethod::LinearizedAdmm,
        ..config.clone()
    };
    let eye = Matrix::identity(h.rows());
    let inner = solve_masked_separation(&reduced, &eye, &inner_config)?;

    let l_hat = h.matmul(&inner.l_hat);
    let denom = m0.frobenius_norm().max(1.0);
    let primal_residual = h.matmul(&inner.s_hat).add(&l_hat).sub(m0).frobenius_norm() / denom;
    let objective = config.gamma * l1_norm(&inner.s_hat)
        + crate::matrix::norm(&l_hat, crate::matrix::NormKind::Nuclear)?;
    Ok(SolverResult {
        s_hat: inner.s_hat,
        l_hat,
        dual: inner.dual,
        penalty: inner.penalty,
        iterations: inner.iterations,
        primal_residual,
        objective,
        status: inner.status,
        history: inner.history,
        possibly_non_unique: inner.possibly_non_unique,
    })
}

/// The four optimality residuals at a candidate solution, measured
/// against the dual estimate `Q = -rho W` carried by the result.
///
/// `omega` must be the support of `result.s_hat` and `factors` the SVD of
/// `result.l_hat`. All four near zero certifies approximate optimality.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KktResiduals {
    /// ||P_Omega(H^T Q) - gamma sign(S)||_inf.
    pub support_equality: f64,
    /// max(0, ||P_Omega_perp(H^T Q)||_inf - gamma).
    pub support_excess: f64,
    /// ||P_T(Q) - U V^T||_F.
    pub tangent_equality: f64,
    /// max(0, ||P_T_perp(Q)|| - 1).
    pub tangent_excess: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.support_equality
            .max(self.support_excess)
            .max(self.tangent_equality)
            .max(self.tangent_excess)
    }
}

pub fn kkt_report(
    result: &SolverResult,
    h: &Matrix,
    gamma: f64,
    omega: &SupportSet,
    factors: &SvdFactors,
) -> Result<KktResiduals> {
    let q = result.dual.scale(-result.penalty);
    let htq = h.at_mul_b(&q);
    let sign_s = result.s_hat.sign();
    let support_equality = support_project(&htq, omega, false)?
        .sub(&support_project(&sign_s.scale(gamma), omega, false)?)
        .max_abs();
    let support_excess = (support_project(&htq, omega, true)?.max_abs() - gamma).max(0.0);
    let uv = factors.u.a_mul_bt(&factors.v);
    let tangent_equality = tangent_project(factors, &q, false)?
        .sub(&uv)
        .frobenius_norm();
    let tangent_excess = (spectral_norm(&tangent_project(factors, &q, true)?)? - 1.0).max(0.0);
    Ok(KktResiduals {
        support_equality,
        support_excess,
        tangent_equality,
        tangent_excess,
    })
}

/// `||estimate - truth||_F / ||truth||_F`, falling back to
/// `||estimate||_F` for a zero truth.
pub fn relative_error(truth: &Matrix, estimate: &Matrix) -> Result<f64> {
    if truth.shape() != estimate.shape() {
        return Err(crate::error::shape_err(
            alloc::format!("{}x{}", truth.rows(), truth.cols()),
            alloc::format!("{}x{}", estimate.rows(), estimate.cols()),
        ));
    }
    let denom = truth.frobenius_norm();
    if denom == 0.0 {
        return Ok(estimate.frobenius_norm());
    }
    Ok(estimate.sub(truth).frobenius_norm() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svd::reduced_svd;

    #[test]
    fn zero_observation_is_fixed_point() {
        let m0 = Matrix::zeros(4, 4);
        let h = Matrix::identity(4);
        let out = solve_masked_separation(&m0, &h, &SolverConfig::new(0.5)).unwrap();
        assert_eq!(out.status, SolverStatus::Converged);
        assert_eq!(out.s_hat, Matrix::zeros(4, 4));
        assert_eq!(out.l_hat, Matrix::zeros(4, 4));
        assert_eq!(out.objective, 0.0);
    }

    #[test]
    fn history_records_every_iteration() {
        let m0 = Matrix::identity(4).scale(3.0);
        let h = Matrix::identity(4);
        let mut config = SolverConfig::new(0.5);
        config.record_history = true;
        let out = solve_masked_separation(&m0, &h, &config).unwrap();
        let history = out.history.as_ref().unwrap();
        assert_eq!(history.len(), out.iterations);
        // the feasibility trace reaches the convergence tolerance
        let min_residual = history
            .iter()
            .map(|&(r, _)| r)
            .fold(f64::INFINITY, f64::min);
        assert!(min_residual <= config.tol_primal);
        // recorded objectives are finite throughout
        assert!(history.iter().all(|&(_, obj)| obj.is_finite()));
    }

    #[test]
    fn config_validation() {
        let m0 = Matrix::zeros(2, 2);
        let h = Matrix::identity(2);
        let mut bad = SolverConfig::new(0.1);
        bad.gamma = -1.0;
        assert!(solve_masked_separation(&m0, &h, &bad).is_err());
        let mut bad = SolverConfig::new(0.1);
        bad.step_scale = 1.5;
        assert!(solve_masked_separation(&m0, &h, &bad).is_err());
        let wide = Matrix::zeros(3, 2);
        assert!(solve_masked_separation(&m0, &wide, &SolverConfig::new(0.1)).is_err());
    }

    #[test]
    fn relative_error_conventions() {
        let t = Matrix::identity(2);
        assert_eq!(relative_error(&t, &t).unwrap(), 0.0);
        assert!((relative_error(&t, &t.scale(2.0)).unwrap() - 1.0).abs() < 1e-15);
        let zero = Matrix::zeros(2, 2);
        let e = Matrix::identity(2);
        assert!((relative_error(&zero, &e).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(relative_error(&t, &Matrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn kkt_accepts_hand_built_optimum() {
        // H = I, S0 = 0, L0 = e1 e1^T, gamma large: Q = U V^T certifies.
        let l0 = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
        let factors = reduced_svd(&l0, DEFAULT_RANK_TOL).unwrap();
        let result = SolverResult {
            s_hat: Matrix::zeros(2, 2),
            l_hat: l0.clone(),
            dual: factors.u.a_mul_bt(&factors.v).scale(-1.0),
            penalty: 1.0,
            iterations: 0,
            primal_residual: 0.0,
            objective: 1.0,
            status: SolverStatus::Converged,
            history: None,
            possibly_non_unique: false,
        };
        let omega = SupportSet::from_matrix(&result.s_hat, 0.0);
        let h = Matrix::identity(2);
        let kkt = kkt_report(&result, &h, 2.0, &omega, &factors).unwrap();
        assert!(kkt.max() <= 1e-6, "{kkt:?}");
    }

    #[test]
    fn kkt_rejects_zero_dual() {
        let l0 = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
        let factors = reduced_svd(&l0, DEFAULT_RANK_TOL).unwrap();
        let mut s = Matrix::zeros(2, 2);
        s[(1, 1)] = 1.0;
        let result = SolverResult {
            s_hat: s.clone(),
            l_hat: l0,
            dual: Matrix::zeros(2, 2),
            penalty: 1.0,
            iterations: 0,
            primal_residual: 0.0,
            objective: 1.0,
            status: SolverStatus::Converged,
            history: None,
            possibly_non_unique: false,
        };
        let omega = SupportSet::from_matrix(&s, 0.0);
        let h = Matrix::identity(2);
        let kkt = kkt_report(&result, &h, 0.5, &omega, &factors).unwrap();
        assert!(kkt.max() > 0.01, "{kkt:?}");
    }

    #[test]
    fn pinv_requires_square_and_conditioning() {
        let m0 = Matrix::zeros(3, 2);
        let tall = Matrix::zeros(3, 2);
        assert!(solve_via_pinv(&m0, &tall, &SolverConfig::new(0.1)).is_err());

        let nearly_singular = Matrix::diag(&[1.0, 1e-12, 1.0]);
        let m0 = Matrix::zeros(3, 3);
        assert!(matches!(
            solve_via_pinv(&m0, &nearly_singular, &SolverConfig::new(0.1)),
            Err(Error::IllConditioned { .. })
        ));
    }
}
