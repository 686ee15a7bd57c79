//! Recoverability diagnostics for the masked separation program.
//!
//! Everything here answers one question: for a concrete `(G, S0, L0)`, how
//! close is the instance to satisfying the sufficient recovery conditions?
//! The restricted-infinity-norm constant `delta` is computed exactly from
//! `P = I - G^T G`; `mu_G(S0)` and `xi_G(L0)` are reported as intervals
//! (exact values are only tractable for tiny supports); the product test
//! `mu * xi < (1 - 3 delta) / 6` and the admissible `gamma` window follow.

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::rng::{derive_seed, SeededRng};
use crate::space::{tangent_basis, tangent_project, SupportSet};
use crate::svd::{spectral_norm, SvdFactors};
use alloc::vec;
use alloc::vec::Vec;

/// Exact mu enumeration is exponential in the support size; above this cap
/// only bounds are reported.
pub const DEFAULT_ENUMERATE_CAP: usize = 20;
/// Relative smallest-singular-value threshold for the transversality test.
pub const DEFAULT_TRANSVERSALITY_TOL: f64 = 1e-8;
/// Unknown-count guard shared by the transversality check and the
/// certificate construction.
pub const DEFAULT_SIZE_GUARD: usize = 5000;

const MU_SAMPLES: usize = 256;
const MU_SAMPLING_SEED: u64 = 0x6d75_7369_6776; // fixed; lower bounds replay

/// The restricted-infinity-norm constant for column sparsity `d`:
/// `max_{|T| <= d} ||P_T||_mi` with `P = I - G^T G`, which reduces to the
/// largest sum of the `d` largest magnitudes within any row of P.
pub fn rinp_delta_exact(g: &Matrix, d: usize) -> Result<f64> {
    let p = g.cols();
    if d < 1 || d > p {
        return Err(invalid(alloc::format!("d = {d} out of range 1..={p}")));
    }
    let gram = g.at_mul_b(g);
    let mut best = 0.0f64;
    let mut row_abs = vec![0.0f64; p];
    for i in 0..p {
        for j in 0..p {
            let p_ij = if i == j {
                1.0 - gram[(i, j)]
            } else {
                -gram[(i, j)]
            };
            row_abs[j] = math::abs(p_ij);
        }
        row_abs.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
        let sum: f64 = row_abs[..d].iter().sum();
        best = best.max(sum);
    }
    Ok(best)
}

/// Kernel-basis bound on delta when `||H|| ||H^+|| = 1`:
/// `max_{|T| <= d} sum_k ||v_{k,T}||_1 ||v_k||_inf`, which collapses to the
/// top-d sum of the weights `w_j = sum_k |v_k[j]| ||v_k||_inf`.
pub fn rinp_delta_kernel_bound(kernel_basis: &[Vec<f64>], d: usize) -> Result<f64> {
    if kernel_basis.is_empty() {
        return Ok(0.0);
    }
    let p = kernel_basis[0].len();
    if d < 1 || d > p {
        return Err(invalid(alloc::format!("d = {d} out of range 1..={p}")));
    }
    for (k, v) in kernel_basis.iter().enumerate() {
        if v.len() != p {
            return Err(invalid(alloc::format!(
                "kernel vector {k} has length {}, expected {p}",
                v.len()
            )));
        }
        let norm_sq: f64 = v.iter().map(|&x| x * x).sum();
        if math::abs(math::sqrt(norm_sq) - 1.0) > 1e-8 {
            return Err(invalid(alloc::format!(
                "kernel vector {k} is not unit norm ({})",
                math::sqrt(norm_sq)
            )));
        }
    }
    let mut weights = vec![0.0f64; p];
    for v in kernel_basis {
        let v_inf = v.iter().fold(0.0f64, |acc, &x| acc.max(math::abs(x)));
        for (w, &x) in weights.iter_mut().zip(v.iter()) {
            *w += math::abs(x) * v_inf;
        }
    }
    weights.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    Ok(weights[..d].iter().sum())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MuBounds {
    pub lower: f64,
    pub upper: f64,
    pub exact: Option<f64>,
}

/// `||G A||` for the sign pattern `signs` placed on the support entries.
fn masked_image_norm(g: &Matrix, entries: &[(usize, usize)], signs: &[f64]) -> Result<f64> {
    let mut active_cols: Vec<usize> = entries.iter().map(|&(_, j)| j).collect();
    active_cols.sort_unstable();
    active_cols.dedup();
    let mut compact = Matrix::zeros(g.rows(), active_cols.len());
    for (&(i, j), &sign) in entries.iter().zip(signs.iter()) {
        let cj = active_cols.binary_search(&j).expect("column present");
        for a in 0..g.rows() {
            compact[(a, cj)] += sign * g[(a, i)];
        }
    }
    spectral_norm(&compact)
}

/// Interval (and, for small supports, exact value) of
/// `mu_G(S) = max { ||G A|| : A in Omega(S), ||A||_inf <= 1 }`.
///
/// The maximum of the convex map `A -> ||G A||` over the unit-infinity box
/// on Omega is attained at a sign vertex, and a global sign flip leaves the
/// norm unchanged, so enumerating `2^(|Omega|-1)` patterns is exact. Above
/// `enumerate_cap` the lower bound comes from a fixed-seed sign sample and
/// the upper bound is `||G|| d(S)`.
pub fn mu_bounds(g: &Matrix, omega: &SupportSet, enumerate_cap: usize) -> Result<MuBounds> {
    if omega.rows() != g.cols() {
        return Err(invalid(alloc::format!(
            "support has {} rows but G has {} columns",
            omega.rows(),
            g.cols()
        )));
    }
    let entries = omega.indices();
    let k = entries.len();
    if k == 0 {
        return Ok(MuBounds {
            lower: 0.0,
            upper: 0.0,
            exact: Some(0.0),
        });
    }
    let (_, _, d) = omega.degrees();
    let upper = spectral_norm(g)? * d as f64;

    // u64 pattern indices bound the practical enumeration width
    if k <= enumerate_cap && k <= 30 {
        let mut best = 0.0f64;
        let mut signs = vec![1.0f64; k];
        for pattern in 0..(1u64 << (k - 1)) {
            for (bit, sign) in signs.iter_mut().enumerate().take(k - 1) {
                *sign = if pattern >> bit & 1 == 1 { -1.0 } else { 1.0 };
            }
            best = best.max(masked_image_norm(g, &entries, &signs)?);
        }
        return Ok(MuBounds {
            lower: best,
            upper,
            exact: Some(best),
        });
    }

    let mut rng = SeededRng::new(MU_SAMPLING_SEED);
    let mut best = 0.0f64;
    let mut signs = vec![0.0f64; k];
    for _ in 0..MU_SAMPLES {
        for sign in signs.iter_mut() {
            *sign = rng.pm_one();
        }
        best = best.max(masked_image_norm(g, &entries, &signs)?);
    }
    Ok(MuBounds {
        lower: best,
        upper,
        exact: None,
    })
}

/// Maximum column norm of G, the two subspace incoherences, and their
/// combination `inc(L, G) = beta(U, G) + alpha(G) beta(V)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IncoherenceStats {
    pub alpha: f64,
    pub beta_u_g: f64,
    pub beta_v: f64,
    pub inc: f64,
}

pub fn incoherence_stats(g: &Matrix, factors: &SvdFactors) -> Result<IncoherenceStats> {
    if factors.rank() > 0 && factors.u.rows() != g.rows() {
        return Err(invalid(alloc::format!(
            "U has {} rows but G has {}",
            factors.u.rows(),
            g.rows()
        )));
    }
    let mut alpha = 0.0f64;
    let mut beta_u_g = 0.0f64;
    for j in 0..g.cols() {
        let mut col_sq = 0.0;
        for i in 0..g.rows() {
            col_sq += g[(i, j)] * g[(i, j)];
        }
        alpha = alpha.max(math::sqrt(col_sq));
        if factors.rank() > 0 {
            let mut proj_sq = 0.0;
            for a in 0..factors.rank() {
                let mut dot = 0.0;
                for i in 0..g.rows() {
                    dot += factors.u[(i, a)] * g[(i, j)];
                }
                proj_sq += dot * dot;
            }
            beta_u_g = beta_u_g.max(math::sqrt(proj_sq));
        }
    }
    let mut beta_v = 0.0f64;
    for j in 0..factors.v.rows() {
        let mut row_sq = 0.0;
        for a in 0..factors.rank() {
            row_sq += factors.v[(j, a)] * factors.v[(j, a)];
        }
        beta_v = beta_v.max(math::sqrt(row_sq));
    }
    Ok(IncoherenceStats {
        alpha,
        beta_u_g,
        beta_v,
        inc: beta_u_g + alpha * beta_v,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct XiBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Interval for `xi_G(L) = max { ||G^T B||_inf : B in T(L), ||B|| <= 1 }`.
///
/// The upper bound is the incoherence chain `inc(L, G)`. The lower bound
/// evaluates feasible points: `U V^T` itself plus `samples` normalized
/// tangent projections of seeded Gaussian draws.
pub fn xi_bounds(g: &Matrix, factors: &SvdFactors, samples: usize, seed: u64) -> Result<XiBounds> {
    if samples < 1 {
        return Err(invalid("need at least one sample"));
    }
    if factors.rank() == 0 {
        return Ok(XiBounds {
            lower: 0.0,
            upper: 0.0,
        });
    }
    let stats = incoherence_stats(g, factors)?;
    let m = factors.u.rows();
    let n = factors.v.rows();
    if g.rows() != m {
        return Err(invalid("G and L row dimensions differ"));
    }

    let uv = factors.u.a_mul_bt(&factors.v);
    let mut lower = g.at_mul_b(&uv).max_abs();

    let mut resamples = 0usize;
    let mut draw = 0u64;
    let mut accepted = 0usize;
    while accepted < samples {
        let mut rng = SeededRng::new(derive_seed(seed, &[draw]));
        draw += 1;
        let mut z = Matrix::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                z[(i, j)] = rng.normal();
            }
        }
        let projected = tangent_project(factors, &z, false)?;
        let scale = spectral_norm(&projected)?;
        if scale <= 1e-12 {
            resamples += 1;
            if resamples > 100 {
                return Err(Error::DegenerateSampling(
                    "tangent projection vanished on 100 consecutive draws".into(),
                ));
            }
            continue;
        }
        lower = lower.max(g.at_mul_b(&projected).max_abs() / scale);
        accepted += 1;
    }
    Ok(XiBounds {
        lower,
        upper: stats.inc,
    })
}

/// Admissible trade-off window from the recovery theorem:
/// `lo = (1 + delta) e / (1 - 3 delta - 4 u e)` and
/// `hi = (1 - delta - 3 u e) / u`, nonempty exactly when
/// `u e < (1 - 3 delta) / 6`. `u = 0` yields an unbounded window.
pub fn gamma_interval(u: f64, e: f64, delta: f64) -> Result<Option<(f64, f64)>> {
    if u < 0.0 || e < 0.0 || u.is_nan() || e.is_nan() {
        return Err(invalid("u and e must be nonnegative"));
    }
    if !(0.0..(1.0 / 3.0)).contains(&delta) {
        return Err(invalid(alloc::format!(
            "delta = {delta} outside [0, 1/3); the theorem hypothesis fails"
        )));
    }
    let ue = u * e;
    if ue >= (1.0 - 3.0 * delta) / 6.0 {
        return Ok(None);
    }
    let lo = (1.0 + delta) * e / (1.0 - 3.0 * delta - 4.0 * ue);
    let hi = if u == 0.0 {
        f64::INFINITY
    } else {
        (1.0 - delta - 3.0 * ue) / u
    };
    Ok(Some((lo, hi)))
}

/// Sound sufficient-condition test `mu_upper * xi_upper < (1 - 3 delta)/6`.
/// Feeding upper bounds makes a `true` answer a certificate that the
/// theorem hypothesis holds.
pub fn theorem_verdict(delta: f64, mu_upper: f64, xi_upper: f64) -> bool {
    mu_upper * xi_upper < (1.0 - 3.0 * delta) / 6.0
}

/// Decide `G Omega(S0) intersect T(L0) = {0}` by stacking a basis of the
/// masked support images next to an orthonormal tangent basis and testing
/// the smallest singular value of the combined column set.
pub fn transversality_check(
    g: &Matrix,
    omega: &SupportSet,
    factors: &SvdFactors,
    tol: f64,
) -> Result<bool> {
    if omega.rows() != g.cols() {
        return Err(invalid(alloc::format!(
            "support has {} rows but G has {} columns",
            omega.rows(),
            g.cols()
        )));
    }
    let m = g.rows();
    let n = omega.cols();
    let r = factors.rank();
    let dim_t = r * (m + n - r);
    let entries = omega.indices();
    let total = entries.len() + dim_t;
    if total > DEFAULT_SIZE_GUARD {
        return Err(Error::SizeGuard {
            needed: total,
            cap: DEFAULT_SIZE_GUARD,
        });
    }
    if total == 0 {
        return Ok(true);
    }

    let mut stacked = Matrix::zeros(m * n, total);
    let mut max_col_norm = 0.0f64;
    for (col, &(i, j)) in entries.iter().enumerate() {
        let mut norm_sq = 0.0;
        for a in 0..m {
            let value = g[(a, i)];
            stacked[(a * n + j, col)] = value;
            norm_sq += value * value;
        }
        max_col_norm = max_col_norm.max(math::sqrt(norm_sq));
    }
    let basis = tangent_basis(factors, m, n)?;
    for (offset, b) in basis.iter().enumerate() {
        let col = entries.len() + offset;
        for (flat, &value) in b.data().iter().enumerate() {
            stacked[(flat, col)] = value;
        }
        max_col_norm = max_col_norm.max(1.0);
    }
    let values = crate::svd::singular_values(&stacked)?;
    // more columns than rows forces an intersection; sigma_min is then 0
    let sigma_min = if total > m * n {
        0.0
    } else {
        values.last().copied().unwrap_or(0.0)
    };
    Ok(sigma_min > tol * max_col_norm)
}

/// Everything the recovery theorem needs to know about one instance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DiagnosticsReport {
    /// Exact RINP constant for the instance's column sparsity.
    pub delta: f64,
    /// Column sparsity d_c(S0) the delta computation used (0 for S0 = 0).
    pub d_used: usize,
    pub mu_lower: f64,
    pub mu_upper: f64,
    pub mu_exact: Option<f64>,
    pub xi_lower: f64,
    pub xi_upper: f64,
    pub alpha: f64,
    pub beta_u_g: f64,
    pub beta_v: f64,
    pub inc: f64,
    /// Sound verdict from upper bounds.
    pub theorem_ok: bool,
    /// Exploratory verdict from lower bounds; true here does NOT certify.
    pub theorem_ok_optimistic: bool,
    /// Admissible (lo, hi) for gamma; present exactly when theorem_ok.
    pub gamma_interval: Option<(f64, f64)>,
    /// None when the dimension guard made the check too large to run.
    pub transversal: Option<bool>,
}

pub struct ReportOptions {
    pub enumerate_cap: usize,
    pub xi_samples: usize,
    pub seed: u64,
    pub transversality_tol: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            enumerate_cap: DEFAULT_ENUMERATE_CAP,
            xi_samples: 32,
            seed: 0,
            transversality_tol: DEFAULT_TRANSVERSALITY_TOL,
        }
    }
}

/// Assemble the full report for an instance `(G, S0, L0-factors)`.
pub fn diagnostics_report(
    g: &Matrix,
    s0: &Matrix,
    factors: &SvdFactors,
    opts: &ReportOptions,
) -> Result<DiagnosticsReport> {
    let omega = SupportSet::from_matrix(s0, 0.0);
    let (_, d_c, _) = omega.degrees();
    let delta = if d_c == 0 {
        0.0
    } else {
        rinp_delta_exact(g, d_c)?
    };
    let mu = mu_bounds(g, &omega, opts.enumerate_cap)?;
    let xi = xi_bounds(g, factors, opts.xi_samples.max(1), opts.seed)?;
    let stats = incoherence_stats(g, factors)?;
    let theorem_ok = theorem_verdict(delta, mu.upper, xi.upper);
    let theorem_ok_optimistic = theorem_verdict(delta, mu.lower, xi.lower);
    let interval = if delta < 1.0 / 3.0 {
        gamma_interval(mu.upper, xi.upper, delta)?
    } else {
        None
    };
    let r = factors.rank();
    let dim_t = r * (g.rows() + s0.cols() - r);
    let transversal = if omega.cardinality() + dim_t <= DEFAULT_SIZE_GUARD {
        Some(transversality_check(
            g,
            &omega,
            factors,
            opts.transversality_tol,
        )?)
    } else {
        None
    };
    Ok(DiagnosticsReport {
        delta,
        d_used: d_c,
        mu_lower: mu.lower,
        mu_upper: mu.upper,
        mu_exact: mu.exact,
        xi_lower: xi.lower,
        xi_upper: xi.upper,
        alpha: stats.alpha,
        beta_u_g: stats.beta_u_g,
        beta_v: stats.beta_v,
        inc: stats.inc,
        theorem_ok,
        theorem_ok_optimistic,
        gamma_interval: interval,
        transversal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::{build_blur_mask, build_orthogonal_columns_mask};
    use crate::svd::{reduced_svd, DEFAULT_RANK_TOL};

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = SeededRng::new(seed);
        let mut a = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                a[(i, j)] = rng.normal();
            }
        }
        a
    }

    #[test]
    fn delta_vanishes_for_orthonormal_columns() {
        let mask = build_orthogonal_columns_mask(8, 5, &[1.0; 5], 2).unwrap();
        for d in 1..=5 {
            assert!(rinp_delta_exact(mask.h(), d).unwrap() < 1e-12);
        }
    }

    #[test]
    fn delta_of_blur_mask_is_d_over_p() {
        let mask = build_blur_mask(100).unwrap();
        for d in [1usize, 3, 7] {
            let delta = rinp_delta_exact(mask.h(), d).unwrap();
            assert!(
                (delta - d as f64 / 100.0).abs() < 1e-10,
                "d = {d}: delta = {delta}"
            );
        }
    }

    #[test]
    fn delta_of_blur_mask_all_d_small_p() {
        let p = 12;
        let mask = build_blur_mask(p).unwrap();
        for d in 1..=p {
            let delta = rinp_delta_exact(mask.h(), d).unwrap();
            assert!(
                (delta - d as f64 / p as f64).abs() < 1e-10,
                "d = {d}: delta = {delta}"
            );
        }
    }

    #[test]
    fn delta_matches_subset_enumeration() {
        let g = random_matrix(6, 6, 17).scale(0.4);
        let d = 2;
        let fast = rinp_delta_exact(&g, d).unwrap();
        // brute force over every column subset of size <= d
        let p = 6;
        let gram = g.at_mul_b(&g);
        let entry = |i: usize, j: usize| {
            let base = if i == j { 1.0 } else { 0.0 };
            (base - gram[(i, j)]).abs()
        };
        let mut brute = 0.0f64;
        for a in 0..p {
            for b in a..p {
                let cols: &[usize] = if a == b { &[a][..] } else { &[a, b][..] };
                for i in 0..p {
                    let sum: f64 = cols.iter().map(|&j| entry(i, j)).sum();
                    brute = brute.max(sum);
                }
            }
        }
        assert!((fast - brute).abs() < 1e-12, "{fast} vs {brute}");
    }

    #[test]
    fn delta_is_nondecreasing_in_d() {
        let g = random_matrix(7, 5, 4).scale(0.3);
        let mut prev = 0.0;
        for d in 1..=5 {
            let delta = rinp_delta_exact(&g, d).unwrap();
            assert!(delta >= prev - 1e-15);
            prev = delta;
        }
    }

    #[test]
    fn kernel_bound_flat_vector() {
        let p = 16;
        let v = vec![1.0 / (p as f64).sqrt(); p];
        let bound = rinp_delta_kernel_bound(&[v], 3).unwrap();
        assert!((bound - 3.0 / 16.0).abs() < 1e-12);
        assert_eq!(rinp_delta_kernel_bound(&[], 3).unwrap(), 0.0);
    }

    #[test]
    fn kernel_bound_rejects_non_unit() {
        let v = vec![1.0; 4];
        assert!(rinp_delta_kernel_bound(&[v], 2).is_err());
    }

    #[test]
    fn kernel_bound_dominates_exact_delta() {
        // G = p-2 rows of a random orthogonal matrix; kernel = dropped rows
        let p = 8;
        let q = reduced_svd(&random_matrix(p, p, 33), DEFAULT_RANK_TOL).unwrap();
        let full = q.u.a_mul_bt(&q.v); // p x p orthogonal
        let keep = p - 2;
        let mut g = Matrix::zeros(keep, p);
        for i in 0..keep {
            for j in 0..p {
                g[(i, j)] = full[(j, i)];
            }
        }
        let kernel: Vec<Vec<f64>> = (keep..p).map(|i| full.col(i)).collect();
        let d = 3;
        let exact = rinp_delta_exact(&g, d).unwrap();
        let bound = rinp_delta_kernel_bound(&kernel, d).unwrap();
        assert!(bound >= exact - 1e-12, "bound {bound} < exact {exact}");
    }

    #[test]
    fn mu_single_entry_identity() {
        let g = Matrix::identity(4);
        let omega = SupportSet::from_indices(4, 4, &[(1, 2)]);
        let mu = mu_bounds(&g, &omega, 20).unwrap();
        assert_eq!(mu.exact, Some(1.0));
    }

    #[test]
    fn mu_all_ones_block_is_block_size() {
        let g = Matrix::identity(5);
        for k in [2usize, 3] {
            let mut entries = Vec::new();
            for i in 0..k {
                for j in 0..k {
                    entries.push((i, j));
                }
            }
            let omega = SupportSet::from_indices(5, 5, &entries);
            let mu = mu_bounds(&g, &omega, 20).unwrap();
            assert!(
                (mu.exact.unwrap() - k as f64).abs() < 1e-10,
                "k = {k}: {:?}",
                mu
            );
        }
    }

    #[test]
    fn mu_sampled_lower_at_most_exact() {
        let g = random_matrix(5, 5, 6);
        let omega =
            SupportSet::from_indices(5, 5, &[(0, 0), (1, 3), (2, 2), (3, 1), (4, 4), (0, 2)]);
        let exact = mu_bounds(&g, &omega, 20).unwrap();
        let sampled = mu_bounds(&g, &omega, 0).unwrap();
        assert!(exact.exact.is_some());
        assert!(sampled.exact.is_none());
        assert!(sampled.lower <= exact.exact.unwrap() + 1e-12);
        assert!(exact.exact.unwrap() <= exact.upper + 1e-12);
    }

    #[test]
    fn xi_coordinate_rank_one() {
        let g = Matrix::identity(2);
        let l = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
        let f = reduced_svd(&l, DEFAULT_RANK_TOL).unwrap();
        let xi = xi_bounds(&g, &f, 8, 0).unwrap();
        assert!(xi.lower >= 1.0 - 1e-12, "lower {}", xi.lower);
        assert!((xi.upper - 2.0).abs() < 1e-12, "upper {}", xi.upper);
    }

    #[test]
    fn xi_rank_zero_is_zero() {
        let g = Matrix::identity(3);
        let f = SvdFactors::empty(3, 3);
        let xi = xi_bounds(&g, &f, 4, 0).unwrap();
        assert_eq!((xi.lower, xi.upper), (0.0, 0.0));
    }

    #[test]
    fn xi_interval_is_ordered_across_seeds() {
        for seed in 0..100 {
            let g = random_matrix(6, 5, 1000 + seed).scale(0.5);
            let l = random_matrix(6, 4, 2000 + seed);
            let f = reduced_svd(
                &crate::prox::singular_value_threshold(&l, 1.5).unwrap(),
                DEFAULT_RANK_TOL,
            )
            .unwrap();
            if f.rank() == 0 {
                continue;
            }
            let xi = xi_bounds(&g, &f, 4, seed).unwrap();
            assert!(
                xi.lower <= xi.upper + 1e-12,
                "seed {seed}: {} > {}",
                xi.lower,
                xi.upper
            );
        }
    }

    #[test]
    fn incoherence_identity_full_space() {
        let g = Matrix::identity(3);
        let f = reduced_svd(&Matrix::identity(3), DEFAULT_RANK_TOL).unwrap();
        let stats = incoherence_stats(&g, &f).unwrap();
        assert!((stats.alpha - 1.0).abs() < 1e-12);
        assert!((stats.beta_u_g - 1.0).abs() < 1e-12);
        assert!((stats.beta_v - 1.0).abs() < 1e-12);
        assert!((stats.inc - 2.0).abs() < 1e-12);
    }

    #[test]
    fn incoherence_orthogonal_directions() {
        // U = span{e1}; columns of G are e2, e3: beta(U, G) = 0
        let mut g = Matrix::zeros(3, 2);
        g[(1, 0)] = 1.0;
        g[(2, 1)] = 1.0;
        let mut u = Matrix::zeros(3, 1);
        u[(0, 0)] = 1.0;
        let mut v = Matrix::zeros(2, 1);
        v[(0, 0)] = 0.6;
        v[(1, 0)] = 0.8;
        let f = SvdFactors {
            u,
            singular_values: vec![1.0],
            v,
        };
        let stats = incoherence_stats(&g, &f).unwrap();
        assert_eq!(stats.beta_u_g, 0.0);
        assert!((stats.beta_v - 0.8).abs() < 1e-12);
    }

    #[test]
    fn gamma_interval_worked_example() {
        let (lo, hi) = gamma_interval(0.5, 1.0 / 6.0, 0.0).unwrap().unwrap();
        assert!((lo - 0.25).abs() < 1e-12);
        assert!((hi - 1.5).abs() < 1e-12);
    }

    #[test]
    fn gamma_interval_boundary_and_degenerate() {
        // u e exactly at the threshold: empty
        assert_eq!(gamma_interval(1.0, 1.0 / 6.0, 0.0).unwrap(), None);
        // u = e = 0: everything admissible
        let (lo, hi) = gamma_interval(0.0, 0.0, 0.0).unwrap().unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi.is_infinite());
        // hypothesis delta < 1/3 enforced
        assert!(gamma_interval(0.1, 0.1, 1.0 / 3.0).is_err());
    }

    #[test]
    fn gamma_interval_is_ordered_when_present() {
        for i in 0..50 {
            let u = 0.05 * i as f64;
            for j in 0..20 {
                let e = 0.03 * j as f64;
                for delta in [0.0, 0.1, 0.2, 0.3] {
                    if let Some((lo, hi)) = gamma_interval(u, e, delta).unwrap() {
                        assert!(lo < hi, "u={u} e={e} delta={delta}: [{lo}, {hi}]");
                    }
                }
            }
        }
    }

    #[test]
    fn verdict_arithmetic() {
        assert!(theorem_verdict(0.0, 0.5, 0.2)); // 0.1 < 1/6
        assert!(!theorem_verdict(0.2, 0.5, 0.2)); // 0.1 >= 0.4/6
        assert!(!theorem_verdict(1.0 / 3.0, 0.0, 0.0)); // threshold collapses to 0
    }

    #[test]
    fn transversality_empty_support() {
        let g = Matrix::identity(4);
        let f = SvdFactors::empty(4, 4);
        let omega = SupportSet::empty(4, 4);
        assert!(transversality_check(&g, &omega, &f, 1e-8).unwrap());
    }

    #[test]
    fn transversality_detects_shared_direction() {
        let g = Matrix::identity(2);
        let omega = SupportSet::from_indices(2, 2, &[(0, 0)]);
        let l = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
        let f = reduced_svd(&l, DEFAULT_RANK_TOL).unwrap();
        assert!(!transversality_check(&g, &omega, &f, 1e-8).unwrap());
    }

    #[test]
    fn transversality_consistent_with_product_condition() {
        // incoherent rank-one direction, single-entry support: mu xi < 1
        let m = 8;
        let g = Matrix::identity(m);
        let omega = SupportSet::from_indices(m, m, &[(0, 0)]);
        let flat = Matrix::from_vec(m, 1, vec![1.0 / (m as f64).sqrt(); m]).unwrap();
        let f = SvdFactors {
            u: flat.clone(),
            singular_values: vec![1.0],
            v: flat,
        };
        let mu = mu_bounds(&g, &omega, 20).unwrap().exact.unwrap();
        let xi = xi_bounds(&g, &f, 8, 1).unwrap();
        assert!(
            mu * xi.upper < 1.0,
            "hypothesis violated: {}",
            mu * xi.upper
        );
        assert!(transversality_check(&g, &omega, &f, 1e-8).unwrap());
    }

    #[test]
    fn report_assembles_consistently() {
        let mask = build_blur_mask(12).unwrap();
        let mut s0 = Matrix::zeros(12, 12);
        s0[(3, 4)] = 1.5;
        s0[(7, 1)] = 1.2;
        let l = random_matrix(12, 1, 5).a_mul_bt(&random_matrix(12, 1, 6));
        let f = reduced_svd(&l, DEFAULT_RANK_TOL).unwrap();
        let report = diagnostics_report(mask.h(), &s0, &f, &ReportOptions::default()).unwrap();
        assert_eq!(report.d_used, 1);
        assert!((report.delta - 1.0 / 12.0).abs() < 1e-10);
        assert!(report.mu_lower <= report.mu_upper);
        assert!(report.xi_lower <= report.xi_upper);
        assert!((report.inc - (report.beta_u_g + report.alpha * report.beta_v)).abs() < 1e-12);
        assert_eq!(report.gamma_interval.is_some(), report.theorem_ok);
        assert_eq!(report.transversal, Some(true));
    }
}
