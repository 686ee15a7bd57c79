//! Mask constructors and their column scalings `G = H D`.
//!
//! A mask is the known linear transform applied to the sparse component
//! before mixing. Builders are deterministic given (params, seed), so a
//! mask can be rebuilt bit-identically from its metadata.

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::rng::SeededRng;
use crate::svd::{reduced_svd, spectral_norm, SvdFactors, DEFAULT_RANK_TOL};
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MaskFamily {
    Identity,
    BlurCirculant,
    Gaussian,
    EdaConvolution,
    OrthogonalColumns,
    Custom,
}

/// Family-specific build parameters, kept so masks can be rebuilt.
#[derive(Debug, Clone, PartialEq)]
pub enum MaskParams {
    None,
    Blur {
        p: usize,
    },
    Gaussian {
        m: usize,
        p: usize,
    },
    Eda {
        tau1: f64,
        tau2: f64,
        rate: f64,
        window: f64,
        m: usize,
        p: usize,
    },
    OrthogonalColumns {
        m: usize,
        p: usize,
        scales: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct Mask {
    h: Matrix,
    family: MaskFamily,
    params: MaskParams,
    seed: Option<u64>,
    cached_svd: Option<SvdFactors>,
}

impl Mask {
    /// Wrap an arbitrary matrix as a custom mask.
    pub fn custom(h: Matrix) -> Result<Self> {
        h.check_finite()?;
        Ok(Self {
            h,
            family: MaskFamily::Custom,
            params: MaskParams::None,
            seed: None,
            cached_svd: None,
        })
    }

    #[inline]
    pub fn h(&self) -> &Matrix {
        &self.h
    }

    #[inline]
    pub fn family(&self) -> MaskFamily {
        self.family
    }

    #[inline]
    pub fn params(&self) -> &MaskParams {
        &self.params
    }

    #[inline]
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn rows(&self) -> usize {
        self.h.rows()
    }

    pub fn cols(&self) -> usize {
        self.h.cols()
    }

    /// Reduced SVD of H, reusing the builder's cache when present.
    pub fn svd_factors(&self) -> Result<SvdFactors> {
        match &self.cached_svd {
            Some(f) => Ok(f.clone()),
            None => reduced_svd(&self.h, DEFAULT_RANK_TOL),
        }
    }

    pub fn spectral_norm(&self) -> Result<f64> {
        match &self.cached_svd {
            Some(f) => Ok(f.singular_values.first().copied().unwrap_or(0.0)),
            None => spectral_norm(&self.h),
        }
    }
}

/// H = I_n: the classical (unmasked) separation problem.
pub fn build_identity(n: usize) -> Result<Mask> {
    if n == 0 {
        return Err(invalid("identity mask needs n >= 1"));
    }
    Ok(Mask {
        h: Matrix::identity(n),
        family: MaskFamily::Identity,
        params: MaskParams::None,
        seed: None,
        cached_svd: None,
    })
}

/// Orthogonal polar factor of the circulant with first row [1, 1, 0, ..., 0].
///
/// For even p the circulant is singular with kernel spanned by the
/// alternating vector (1, -1, ..., 1, -1)/sqrt(p); the polar factor H then
/// has p-1 unit singular values and the same kernel, so `I - H^T H` is the
/// rank-one projector onto the alternating direction. For odd p the
/// circulant is invertible and the construction degenerates to an
/// orthogonal matrix, so odd p is rejected.
pub fn build_blur_mask(p: usize) -> Result<Mask> {
    if p < 2 || !p.is_multiple_of(2) {
        return Err(invalid(
            "blur mask needs even p >= 2 (odd p has no alternating kernel)",
        ));
    }
    let mut circulant = Matrix::zeros(p, p);
    for i in 0..p {
        circulant[(i, i)] = 1.0;
        circulant[(i, (i + 1) % p)] = 1.0;
    }
    let f = reduced_svd(&circulant, DEFAULT_RANK_TOL)?;
    debug_assert_eq!(f.rank(), p - 1);
    let h = f.u.a_mul_bt(&f.v);
    let cached = SvdFactors {
        u: f.u,
        singular_values: alloc::vec![1.0; p - 1],
        v: f.v,
    };
    Ok(Mask {
        h,
        family: MaskFamily::BlurCirculant,
        params: MaskParams::Blur { p },
        seed: None,
        cached_svd: Some(cached),
    })
}

/// i.i.d. N(0, 1/m) entries; the compressed-sensing normalization.
pub fn build_gaussian_mask(m: usize, p: usize, seed: u64) -> Result<Mask> {
    if m == 0 || p == 0 {
        return Err(invalid("gaussian mask needs m, p >= 1"));
    }
    let mut rng = SeededRng::new(seed);
    let scale = 1.0 / math::sqrt(m as f64);
    let mut h = Matrix::zeros(m, p);
    for i in 0..m {
        for j in 0..p {
            h[(i, j)] = rng.normal() * scale;
        }
    }
    Ok(Mask {
        h,
        family: MaskFamily::Gaussian,
        params: MaskParams::Gaussian { m, p },
        seed: Some(seed),
        cached_svd: None,
    })
}

/// The biexponential response kernel `f(t) = 2 (e^{-t/tau1} - e^{-t/tau2})`
/// sampled on the uniform grid `t = 0, 1/rate, ..., window - 1/rate`.
pub fn eda_kernel(tau1: f64, tau2: f64, rate: f64, window: f64) -> Result<Vec<f64>> {
    if !(tau1 > tau2 && tau2 > 0.0) {
        return Err(invalid("eda kernel needs tau1 > tau2 > 0"));
    }
    if !(rate > 0.0 && window > 0.0) {
        return Err(invalid("eda kernel needs positive rate and window"));
    }
    let len = libm::round(rate * window) as usize;
    if len == 0 {
        return Err(invalid("eda kernel grid is empty"));
    }
    Ok((0..len)
        .map(|i| {
            let t = i as f64 / rate;
            2.0 * (math::exp(-t / tau1) - math::exp(-t / tau2))
        })
        .collect())
}

/// Centered block of the banded convolution matrix of `eda_kernel`.
///
/// The full matrix stacks the kernel shifted down by one row per column
/// (p columns, p + len - 1 rows); the returned mask keeps m centered rows,
/// dropping floor((L-m)/2) from the top.
pub fn build_eda_mask_with(
    tau1: f64,
    tau2: f64,
    rate: f64,
    window: f64,
    m: usize,
    p: usize,
) -> Result<Mask> {
    let kernel = eda_kernel(tau1, tau2, rate, window)?;
    if p == 0 {
        return Err(invalid("eda mask needs p >= 1"));
    }
    let full_rows = p + kernel.len() - 1;
    if m == 0 || m > full_rows {
        return Err(invalid(alloc::format!(
            "eda mask needs 1 <= m <= {full_rows} (kernel length {})",
            kernel.len()
        )));
    }
    let offset = (full_rows - m) / 2;
    let mut h = Matrix::zeros(m, p);
    for j in 0..p {
        for (k, &hk) in kernel.iter().enumerate() {
            let full_row = j + k;
            if full_row >= offset && full_row < offset + m {
                h[(full_row - offset, j)] = hk;
            }
        }
    }
    Ok(Mask {
        h,
        family: MaskFamily::EdaConvolution,
        params: MaskParams::Eda {
            tau1,
            tau2,
            rate,
            window,
            m,
            p,
        },
        seed: None,
        cached_svd: None,
    })
}

/// The skin-conductance deconvolution mask: tau1 = 2, tau2 = 0.75,
/// 4 samples/second over a 40 s window, 240 x 160.
pub fn build_eda_mask() -> Result<Mask> {
    build_eda_mask_with(2.0, 0.75, 4.0, 40.0, 240, 160)
}

/// H = Q diag(scales) with Q the orthogonal polar factor of a seeded
/// Gaussian matrix; rescaling by diag(1/scales) recovers a Parseval frame.
pub fn build_orthogonal_columns_mask(
    m: usize,
    p: usize,
    column_scales: &[f64],
    seed: u64,
) -> Result<Mask> {
    if m < p {
        return Err(invalid("orthogonal-columns mask needs m >= p"));
    }
    if column_scales.len() != p {
        return Err(invalid(alloc::format!(
            "need {p} column scales, got {}",
            column_scales.len()
        )));
    }
    if let Some(idx) = column_scales
        .iter()
        .position(|&s| !(s > 0.0 && s.is_finite()))
    {
        return Err(invalid(alloc::format!(
            "column scale {idx} must be positive and finite"
        )));
    }
    let mut rng = SeededRng::new(seed);
    let mut a = Matrix::zeros(m, p);
    for i in 0..m {
        for j in 0..p {
            a[(i, j)] = rng.normal();
        }
    }
    let f = reduced_svd(&a, DEFAULT_RANK_TOL)?;
    if f.rank() != p {
        return Err(Error::DegenerateSampling(alloc::format!(
            "seeded Gaussian draw was rank deficient ({} < {p})",
            f.rank()
        )));
    }
    let q = f.u.a_mul_bt(&f.v);
    let mut h = q;
    for j in 0..p {
        for i in 0..m {
            h[(i, j)] *= column_scales[j];
        }
    }
    Ok(Mask {
        h,
        family: MaskFamily::OrthogonalColumns,
        params: MaskParams::OrthogonalColumns {
            m,
            p,
            scales: column_scales.to_vec(),
        },
        seed: Some(seed),
        cached_svd: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalingMode {
    /// D = (1 / ||H||) I.
    Spectral,
    /// d_jj = 1 / ||h_j||_2.
    ColumnNorm,
    /// Caller-supplied positive diagonal.
    Custom(Vec<f64>),
}

/// The invertible diagonal D of a column scaling G = H D.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnScaling {
    pub diag: Vec<f64>,
    pub mode: ScalingMode,
}

/// Build `G = H D` for the requested scaling mode.
pub fn scale_columns(mask: &Mask, mode: ScalingMode) -> Result<(Matrix, ColumnScaling)> {
    let h = mask.h();
    let p = h.cols();
    let diag: Vec<f64> = match &mode {
        ScalingMode::Spectral => {
            let s = mask.spectral_norm()?;
            if s <= 0.0 {
                return Err(invalid("spectral scaling of a zero mask"));
            }
            alloc::vec![1.0 / s; p]
        }
        ScalingMode::ColumnNorm => {
            let mut out = Vec::with_capacity(p);
            for j in 0..p {
                let sq: f64 = (0..h.rows()).map(|i| h[(i, j)] * h[(i, j)]).sum();
                let norm = math::sqrt(sq);
                if norm <= 0.0 {
                    return Err(Error::ZeroColumn { index: j });
                }
                out.push(1.0 / norm);
            }
            out
        }
        ScalingMode::Custom(values) => {
            if values.len() != p {
                return Err(invalid(alloc::format!(
                    "custom scaling needs {p} entries, got {}",
                    values.len()
                )));
            }
            if let Some(idx) = values.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(invalid(alloc::format!(
                    "custom scaling entry {idx} must be positive and finite"
                )));
            }
            values.clone()
        }
    };
    let mut g = h.clone();
    for j in 0..p {
        for i in 0..h.rows() {
            g[(i, j)] *= diag[j];
        }
    }
    Ok((g, ColumnScaling { diag, mode }))
}
