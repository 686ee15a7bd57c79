//! Random instance generators: the uniform-support sparse model, the
//! random orthogonal low-rank model, the slow-varying tonic component,
//! noise, and the degree-tail Monte Carlo check.

use crate::error::{invalid, Result};
use crate::math;
use crate::matrix::{degree_stats, Matrix};
use crate::rng::{derive_seed, SeededRng};
use crate::svd::{reduced_svd, SvdFactors, DEFAULT_RANK_TOL};
use alloc::vec::Vec;

/// Sparse matrix with support drawn uniformly among all size-s subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseModelSpec {
    pub p: usize,
    pub n: usize,
    /// Support size (exact nonzero count).
    pub s: usize,
    pub value_low: f64,
    pub value_high: f64,
    pub seed: u64,
}

impl SparseModelSpec {
    /// The experiment default: values uniform on [1, 2].
    pub fn unit_band(p: usize, n: usize, s: usize, seed: u64) -> Self {
        Self {
            p,
            n,
            s,
            value_low: 1.0,
            value_high: 2.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.s > self.p * self.n {
            return Err(invalid(alloc::format!(
                "support size {} exceeds {} entries",
                self.s,
                self.p * self.n
            )));
        }
        if self.value_low > self.value_high
            || !self.value_low.is_finite()
            || !self.value_high.is_finite()
        {
            return Err(invalid("need finite value_low <= value_high"));
        }
        Ok(())
    }
}

/// Exactly `s` nonzeros at a uniformly random support, values i.i.d.
/// uniform on [value_low, value_high].
///
/// The support is a seeded partial Fisher-Yates draw over entry indices
/// (exact uniformity over subsets); values are assigned in ascending
/// index order so the output is a pure function of the spec.
pub fn random_sparse(spec: &SparseModelSpec) -> Result<Matrix> {
    spec.validate()?;
    let total = spec.p * spec.n;
    let mut rng = SeededRng::new(spec.seed);
    let mut indices: Vec<usize> = (0..total).collect();
    for draw in 0..spec.s {
        let pick = draw + rng.below(total - draw);
        indices.swap(draw, pick);
    }
    let mut support: Vec<usize> = indices[..spec.s].to_vec();
    support.sort_unstable();

    let mut out = Matrix::zeros(spec.p, spec.n);
    for &flat in &support {
        out.data_mut()[flat] = rng.uniform_in(spec.value_low, spec.value_high);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum LowRankKind {
    /// Both singular-vector factors drawn uniformly from partial isometries.
    Orthogonal,
    /// Right factor random, left factor supplied by the caller.
    RightSideOrthogonal { u_input: Matrix },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SingularValueRule {
    /// All values sqrt(m n / r), giving entries of unit root-mean-square,
    /// commensurate with sparse values of order one.
    UnitRms,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowRankModelSpec {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub kind: LowRankKind,
    pub singular_values: SingularValueRule,
    pub seed: u64,
}

impl LowRankModelSpec {
    pub fn orthogonal(m: usize, n: usize, r: usize, seed: u64) -> Self {
        Self {
            m,
            n,
            r,
            kind: LowRankKind::Orthogonal,
            singular_values: SingularValueRule::UnitRms,
            seed,
        }
    }
}

/// Haar-distributed m x r partial isometry: the orthogonal polar factor
/// of an i.i.d. Gaussian draw.
fn random_partial_isometry(m: usize, r: usize, rng: &mut SeededRng) -> Result<Matrix> {
    let mut a = Matrix::zeros(m, r);
    for i in 0..m {
        for j in 0..r {
            a[(i, j)] = rng.normal();
        }
    }
    let f = reduced_svd(&a, DEFAULT_RANK_TOL)?;
    if f.rank() != r {
        return Err(crate::error::Error::DegenerateSampling(alloc::format!(
            "Gaussian draw was rank deficient ({} < {r})",
            f.rank()
        )));
    }
    Ok(f.u.a_mul_bt(&f.v))
}

fn orthonormality_defect(u: &Matrix) -> f64 {
    let k = u.cols();
    u.at_mul_b(u).sub(&Matrix::identity(k)).max_abs()
}

/// Draw from the (right-side) random orthogonal model.
pub fn random_low_rank(spec: &LowRankModelSpec) -> Result<(Matrix, SvdFactors)> {
    if spec.r < 1 || spec.r > spec.m.min(spec.n) {
        return Err(invalid(alloc::format!(
            "rank {} out of range 1..={}",
            spec.r,
            spec.m.min(spec.n)
        )));
    }
    let mut values = match &spec.singular_values {
        SingularValueRule::UnitRms => {
            alloc::vec![math::sqrt((spec.m * spec.n) as f64 / spec.r as f64); spec.r]
        }
        SingularValueRule::Explicit(v) => {
            if v.len() != spec.r {
                return Err(invalid(alloc::format!(
                    "need {} singular values, got {}",
                    spec.r,
                    v.len()
                )));
            }
            if v.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
                return Err(invalid("singular values must be positive and finite"));
            }
            v.clone()
        }
    };
    values.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));

    let mut rng = SeededRng::new(spec.seed);
    let u = match &spec.kind {
        LowRankKind::Orthogonal => random_partial_isometry(spec.m, spec.r, &mut rng)?,
        LowRankKind::RightSideOrthogonal { u_input } => {
            if u_input.shape() != (spec.m, spec.r) {
                return Err(invalid(alloc::format!(
                    "u_input must be {}x{}, got {}x{}",
                    spec.m,
                    spec.r,
                    u_input.rows(),
                    u_input.cols()
                )));
            }
            if orthonormality_defect(u_input) > 1e-8 {
                return Err(invalid("u_input columns are not orthonormal"));
            }
            u_input.clone()
        }
    };
    let v = random_partial_isometry(spec.n, spec.r, &mut rng)?;
    let factors = SvdFactors {
        u,
        singular_values: values,
        v,
    };
    Ok((factors.reconstruct(), factors))
}

/// Slow-varying near-rank-1 component: one sinusoid period over the
/// column-major flattening of the matrix, with the given modulation depth.
pub fn eda_tonic_with_modulation(
    m: usize,
    n: usize,
    amplitude: f64,
    modulation: f64,
) -> Result<Matrix> {
    if m == 0 || n == 0 {
        return Err(invalid("tonic component needs m, n >= 1"));
    }
    let total = (m * n) as f64;
    let mut out = Matrix::zeros(m, n);
    for j in 0..n {
        for i in 0..m {
            let k = (j * m + i) as f64;
            out[(i, j)] =
                amplitude * (1.0 + modulation * math::sin(2.0 * core::f64::consts::PI * k / total));
        }
    }
    Ok(out)
}

/// Tonic component at the default modulation depth 0.5.
pub fn eda_tonic(m: usize, n: usize, amplitude: f64) -> Result<Matrix> {
    eda_tonic_with_modulation(m, n, amplitude, 0.5)
}

/// i.i.d. N(0, sigma^2) noise.
pub fn gaussian_noise(m: usize, n: usize, sigma: f64, seed: u64) -> Result<Matrix> {
    if sigma < 0.0 || sigma.is_nan() {
        return Err(invalid("sigma must be nonnegative"));
    }
    let mut rng = SeededRng::new(seed);
    let mut out = Matrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            out[(i, j)] = sigma * rng.normal();
        }
    }
    Ok(out)
}

/// Monte Carlo check of the hypergeometric degree-tail bounds.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TailCheckReport {
    pub p: usize,
    pub n: usize,
    pub s: usize,
    pub trials: usize,
    /// Row event threshold (s/p) ln p and its empirical frequency.
    pub threshold_row: f64,
    pub freq_row: f64,
    /// Tail bound p^{-n rho / (p (2 - rho))} with rho = s/(p n).
    pub bound_row: f64,
    /// Column event threshold (s/n) ln n and its empirical frequency.
    pub threshold_col: f64,
    pub freq_col: f64,
    pub bound_col: f64,
    /// Binomial standard deviations of the frequency estimators at the bound.
    pub sd_row: f64,
    pub sd_col: f64,
    /// Frequency exceeded bound + 3 sd.
    pub violation_row: bool,
    pub violation_col: bool,
}

/// Sample `trials` matrices from the random sparsity model and compare the
/// frequencies of `d_r >= (s/p) ln p` and `d_c >= (s/n) ln n` with the
/// hypergeometric tail bounds.
pub fn degree_tail_check(
    p: usize,
    n: usize,
    s: usize,
    trials: usize,
    seed: u64,
) -> Result<TailCheckReport> {
    if trials < 1 {
        return Err(invalid("need at least one trial"));
    }
    if p == 0 || n == 0 {
        return Err(invalid("need p, n >= 1"));
    }
    let threshold_row = (s as f64 / p as f64) * math::ln(p as f64);
    let threshold_col = (s as f64 / n as f64) * math::ln(n as f64);
    let mut hits_row = 0usize;
    let mut hits_col = 0usize;
    for trial in 0..trials {
        let spec = SparseModelSpec::unit_band(p, n, s, derive_seed(seed, &[trial as u64]));
        let sample = random_sparse(&spec)?;
        let (d_r, d_c, _) = degree_stats(&sample, 0.0)?;
        if d_r as f64 >= threshold_row {
            hits_row += 1;
        }
        if d_c as f64 >= threshold_col {
            hits_col += 1;
        }
    }
    let rho = s as f64 / (p * n) as f64;
    let bound_row = math::powf(p as f64, -(n as f64) * rho / (p as f64 * (2.0 - rho)));
    let bound_col = math::powf(n as f64, -(p as f64) * rho / (n as f64 * (2.0 - rho)));
    let freq_row = hits_row as f64 / trials as f64;
    let freq_col = hits_col as f64 / trials as f64;
    let sd_row = math::sqrt(bound_row * (1.0 - bound_row) / trials as f64);
    let sd_col = math::sqrt(bound_col * (1.0 - bound_col) / trials as f64);
    Ok(TailCheckReport {
        p,
        n,
        s,
        trials,
        threshold_row,
        freq_row,
        bound_row,
        threshold_col,
        freq_col,
        bound_col,
        sd_row,
        sd_col,
        violation_row: freq_row > bound_row + 3.0 * sd_row,
        violation_col: freq_col > bound_col + 3.0 * sd_col,
    })
}
