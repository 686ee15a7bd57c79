//! JSON views of the core report types. JSON has no Infinity literal, so
//! an unbounded gamma window is encoded as `gamma_hi: null` together with
//! `gamma_hi_unbounded: true`.

use masksep_core::certificate::{CertificateVerdict, Condition};
use masksep_core::diagnostics::DiagnosticsReport;
use masksep_core::solver::{SolverResult, SolverStatus};
use serde_json::{json, Value};

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub fn status_name(status: SolverStatus) -> &'static str {
    match status {
        SolverStatus::Converged => "converged",
        SolverStatus::MaxIter => "max_iter",
        SolverStatus::Diverged => "diverged",
    }
}

pub fn diagnostics_json(report: &DiagnosticsReport) -> Value {
    let (gamma_lo, gamma_hi, unbounded) = match report.gamma_interval {
        Some((lo, hi)) => (json!(lo), finite_or_null(hi), !hi.is_finite()),
        None => (Value::Null, Value::Null, false),
    };
    json!({
        "delta": report.delta,
        "d_used": report.d_used,
        "mu_lower": report.mu_lower,
        "mu_upper": report.mu_upper,
        "mu_exact": report.mu_exact,
        "xi_lower": report.xi_lower,
        "xi_upper": report.xi_upper,
        "alpha": report.alpha,
        "beta_U_G": report.beta_u_g,
        "beta_V": report.beta_v,
        "inc": report.inc,
        "theorem_ok": report.theorem_ok,
        "theorem_ok_optimistic": report.theorem_ok_optimistic,
        "gamma_lo": gamma_lo,
        "gamma_hi": gamma_hi,
        "gamma_hi_unbounded": unbounded,
        "transversal": report.transversal,
    })
}

fn condition_name(c: Condition) -> &'static str {
    match c {
        Condition::TangentEquality => "tangent_equality",
        Condition::TangentStrict => "tangent_strict",
        Condition::SupportEquality => "support_equality",
        Condition::SupportStrict => "support_strict",
    }
}

pub fn certificate_json(verdict: &CertificateVerdict) -> Value {
    json!({
        "gamma": verdict.gamma,
        "pass": verdict.pass,
        "failed": verdict.failed.iter().map(|&c| condition_name(c)).collect::<Vec<_>>(),
        "cond_a_residual": verdict.cond_a_residual,
        "cond_b_value": verdict.cond_b_value,
        "cond_c_residual": verdict.cond_c_residual,
        "cond_d_value": verdict.cond_d_value,
        "strict_margin": verdict.strict_margin,
    })
}

pub fn solve_run_json(
    result: &SolverResult,
    config: &masksep_core::solver::SolverConfig,
    method: &str,
    wall_seconds: f64,
    s_path: &str,
    l_path: &str,
) -> Value {
    json!({
        "config": {
            "gamma": config.gamma,
            "rho": config.rho,
            "step_scale": config.step_scale,
            "max_iter": config.max_iter,
            "tol_primal": config.tol_primal,
            "tol_change": config.tol_change,
            "method": method,
            "inner_iters": config.inner_iters,
        },
        "status": status_name(result.status),
        "iterations": result.iterations,
        "primal_residual": finite_or_null(result.primal_residual),
        "objective": finite_or_null(result.objective),
        "possibly_non_unique": result.possibly_non_unique,
        "wall_seconds": wall_seconds,
        "outputs": { "s_hat": s_path, "l_hat": l_path },
    })
}
