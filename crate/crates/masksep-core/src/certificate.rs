//! Dual certificates of exact recovery.
//!
//! A certificate is a matrix `Q` in the span `G Omega + T` satisfying the
//! two equality conditions
//!
//! * `P_T(Q) = U V^T`,
//! * `P_Omega(G^T Q) = gamma sign(S0)`,
//!
//! with strict margins on the two inequality conditions
//! `||P_T_perp(Q)|| < 1` and `||P_Omega_perp(G^T Q)||_inf < gamma`. Its
//! existence certifies that every optimizer of the separation program
//! satisfies `G S_hat = G S0` and `L_hat = L0`; combined with the
//! restricted-infinity-norm property it pins down `(S0, L0)` uniquely.
//!
//! The construction parameterizes `Q = G Q_Omega + Q_T` by the support
//! entries of `Q_Omega` and the coefficients of `Q_T` in an orthonormal
//! tangent basis, enforces the two equalities as a square linear system,
//! and takes the least-norm solution: the minimum of
//! `||Q_Omega||_F^2 + ||Q_T||_F^2` over the solution family.

use crate::error::{invalid, Error, Result};
use crate::matrix::Matrix;
use crate::space::{support_project, tangent_basis, tangent_project, SupportSet};
use crate::svd::{pseudoinverse, spectral_norm, SvdFactors};
use alloc::vec::Vec;

/// Margin for pass/fail verdicts on the strict inequality conditions.
pub const DEFAULT_STRICT_MARGIN: f64 = 1e-6;
/// Tolerance on the equality conditions (a) and (c).
pub const EQUALITY_TOL: f64 = 1e-8;
/// Relative least-squares residual above which the system is declared
/// singular (transversality failure).
const SYSTEM_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Certificate {
    /// The certificate matrix, `G Q_Omega + Q_T`.
    pub q: Matrix,
    /// Support-side component, supported on Omega(S0), p x n.
    pub q_omega: Matrix,
    /// Tangent-side component, in T(L0), m x n.
    pub q_t: Matrix,
    /// Q_Omega - gamma sign(S0).
    pub eps_omega: Matrix,
    /// Q_T - U V^T.
    pub eps_t: Matrix,
    /// Condition (a): ||P_T(Q) - U V^T||_F.
    pub cond_a_residual: f64,
    /// Condition (b): ||P_T_perp(Q)||, must stay below 1.
    pub cond_b_value: f64,
    /// Condition (c): ||P_Omega(G^T Q) - gamma sign(S0)||_inf.
    pub cond_c_residual: f64,
    /// Condition (d): ||P_Omega_perp(G^T Q)||_inf, must stay below gamma.
    pub cond_d_value: f64,
    pub gamma: f64,
}

/// The four dual-optimality conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Condition {
    TangentEquality,
    TangentStrict,
    SupportEquality,
    SupportStrict,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CertificateVerdict {
    pub pass: bool,
    pub failed: Vec<Condition>,
    pub cond_a_residual: f64,
    pub cond_b_value: f64,
    pub cond_c_residual: f64,
    pub cond_d_value: f64,
    pub gamma: f64,
    pub strict_margin: f64,
}

fn condition_values(
    g: &Matrix,
    q: &Matrix,
    sign_s0: &Matrix,
    omega: &SupportSet,
    factors: &SvdFactors,
    gamma: f64,
) -> Result<(f64, f64, f64, f64)> {
    let uv = if factors.rank() > 0 {
        factors.u.a_mul_bt(&factors.v)
    } else {
        Matrix::zeros(q.rows(), q.cols())
    };
    let cond_a = tangent_project(factors, q, false)?
        .sub(&uv)
        .frobenius_norm();
    let cond_b = spectral_norm(&tangent_project(factors, q, true)?)?;
    let gtq = g.at_mul_b(q);
    let cond_c = support_project(&gtq, omega, false)?
        .sub(&support_project(&sign_s0.scale(gamma), omega, false)?)
        .max_abs();
    let cond_d = support_project(&gtq, omega, true)?.max_abs();
    Ok((cond_a, cond_b, cond_c, cond_d))
}

/// Build the least-norm certificate for `(G, S0, L0-factors)` at `gamma`.
///
/// Fails with `CertificateSystem` when the equality system is singular or
/// inconsistent beyond tolerance, which signals a transversality failure.
pub fn construct_certificate(
    g: &Matrix,
    s0: &Matrix,
    factors: &SvdFactors,
    gamma: f64,
    size_guard: usize,
) -> Result<Certificate> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid("gamma must be positive"));
    }
    if s0.rows() != g.cols() {
        return Err(invalid(alloc::format!(
            "S0 has {} rows but G has {} columns",
            s0.rows(),
            g.cols()
        )));
    }
    let m = g.rows();
    let n = s0.cols();
    if factors.rank() > 0 && (factors.u.rows() != m || factors.v.rows() != n) {
        return Err(invalid("L0 factors do not match the instance dimensions"));
    }
    let omega = SupportSet::from_matrix(s0, 0.0);
    let entries = omega.indices();
    let r = factors.rank();
    let dim_t = r * (m + n - r);
    let unknowns = entries.len() + dim_t;
    if unknowns > size_guard {
        return Err(Error::SizeGuard {
            needed: unknowns,
            cap: size_guard,
        });
    }
    let sign_s0 = s0.sign();

    if unknowns == 0 {
        let zero_mn = Matrix::zeros(m, n);
        let zero_pn = Matrix::zeros(s0.rows(), n);
        return Ok(Certificate {
            q: zero_mn.clone(),
            q_omega: zero_pn.clone(),
            q_t: zero_mn.clone(),
            eps_omega: zero_pn,
            eps_t: zero_mn.clone(),
            cond_a_residual: 0.0,
            cond_b_value: 0.0,
            cond_c_residual: 0.0,
            cond_d_value: 0.0,
            gamma,
        });
    }

    let basis = tangent_basis(factors, m, n)?;
    let gram = g.at_mul_b(g);

    // Unknowns: entries of Q_Omega on the support, then tangent
    // coefficients. Equations in the same order: P_Omega(G^T Q) entrywise,
    // then <B_l, Q>.
    let mut system = Matrix::zeros(unknowns, unknowns);
    for (col, &(i, j)) in entries.iter().enumerate() {
        for (row, &(i2, j2)) in entries.iter().enumerate() {
            if j2 == j {
                system[(row, col)] = gram[(i2, i)];
            }
        }
        for (l, b) in basis.iter().enumerate() {
            let mut inner = 0.0;
            for a in 0..m {
                inner += b[(a, j)] * g[(a, i)];
            }
            system[(entries.len() + l, col)] = inner;
        }
    }
    for (k, b) in basis.iter().enumerate() {
        let col = entries.len() + k;
        let gtb = g.at_mul_b(b);
        for (row, &(i2, j2)) in entries.iter().enumerate() {
            system[(row, col)] = gtb[(i2, j2)];
        }
        for (l, bl) in basis.iter().enumerate() {
            system[(entries.len() + l, col)] = bl.dot(b);
        }
    }

    let mut rhs = Matrix::zeros(unknowns, 1);
    for (row, &(i, j)) in entries.iter().enumerate() {
        rhs[(row, 0)] = gamma * sign_s0[(i, j)];
    }
    let uv = if r > 0 {
        factors.u.a_mul_bt(&factors.v)
    } else {
        Matrix::zeros(m, n)
    };
    for (l, b) in basis.iter().enumerate() {
        rhs[(entries.len() + l, 0)] = b.dot(&uv);
    }

    let solution = pseudoinverse(&system, 1e-12)?.matmul(&rhs);
    let residual_rel =
        system.matmul(&solution).sub(&rhs).frobenius_norm() / rhs.frobenius_norm().max(1e-300);
    if residual_rel > SYSTEM_RESIDUAL_TOL {
        return Err(Error::CertificateSystem {
            residual: residual_rel,
        });
    }

    let mut q_omega = Matrix::zeros(s0.rows(), n);
    for (idx, &(i, j)) in entries.iter().enumerate() {
        q_omega[(i, j)] = solution[(idx, 0)];
    }
    let mut q_t = Matrix::zeros(m, n);
    for (l, b) in basis.iter().enumerate() {
        q_t = q_t.add(&b.scale(solution[(entries.len() + l, 0)]));
    }
    let q = g.matmul(&q_omega).add(&q_t);

    let eps_omega = q_omega.sub(&sign_s0.scale(gamma));
    let eps_t = q_t.sub(&uv);
    let (cond_a, cond_b, cond_c, cond_d) =
        condition_values(g, &q, &sign_s0, &omega, factors, gamma)?;

    Ok(Certificate {
        q,
        q_omega,
        q_t,
        eps_omega,
        eps_t,
        cond_a_residual: cond_a,
        cond_b_value: cond_b,
        cond_c_residual: cond_c,
        cond_d_value: cond_d,
        gamma,
    })
}

/// Re-derive the four condition values from the stored decomposition
/// `(Q_Omega, Q_T)` and apply the pass thresholds: equalities within
/// 1e-8, strict inequalities with the given relative margin.
pub fn check_certificate(
    cert: &Certificate,
    g: &Matrix,
    s0: &Matrix,
    factors: &SvdFactors,
    strict_margin: f64,
) -> Result<CertificateVerdict> {
    if !(0.0..1.0).contains(&strict_margin) {
        return Err(invalid("strict_margin must lie in [0, 1)"));
    }
    let omega = SupportSet::from_matrix(s0, 0.0);
    let q = g.matmul(&cert.q_omega).add(&cert.q_t);
    let (cond_a, cond_b, cond_c, cond_d) =
        condition_values(g, &q, &s0.sign(), &omega, factors, cert.gamma)?;

    let mut failed = Vec::new();
    if cond_a > EQUALITY_TOL {
        failed.push(Condition::TangentEquality);
    }
    if cond_b > 1.0 - strict_margin {
        failed.push(Condition::TangentStrict);
    }
    if cond_c > EQUALITY_TOL {
        failed.push(Condition::SupportEquality);
    }
    if cond_d > cert.gamma * (1.0 - strict_margin) {
        failed.push(Condition::SupportStrict);
    }
    Ok(CertificateVerdict {
        pass: failed.is_empty(),
        failed,
        cond_a_residual: cond_a,
        cond_b_value: cond_b,
        cond_c_residual: cond_c,
        cond_d_value: cond_d,
        gamma: cert.gamma,
        strict_margin,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GammaScanRow {
    pub gamma: f64,
    pub pass: bool,
    pub failed: Vec<Condition>,
    pub cond_a_residual: f64,
    pub cond_b_value: f64,
    pub cond_c_residual: f64,
    pub cond_d_value: f64,
}

/// Construct and check a certificate at every listed gamma.
pub fn certificate_gamma_scan(
    g: &Matrix,
    s0: &Matrix,
    factors: &SvdFactors,
    gammas: &[f64],
    size_guard: usize,
) -> Result<Vec<GammaScanRow>> {
    let mut rows = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let cert = construct_certificate(g, s0, factors, gamma, size_guard)?;
        let verdict = check_certificate(&cert, g, s0, factors, DEFAULT_STRICT_MARGIN)?;
        rows.push(GammaScanRow {
            gamma,
            pass: verdict.pass,
            failed: verdict.failed,
            cond_a_residual: verdict.cond_a_residual,
            cond_b_value: verdict.cond_b_value,
            cond_c_residual: verdict.cond_c_residual,
            cond_d_value: verdict.cond_d_value,
        });
    }
    Ok(rows)
}
