//! Fisher information under additive Gaussian price noise.
//!
//! For one option with price gradient `g = ∇_Θ E` and noise variance `v̂` the
//! information is `g gᵀ / v̂`; independent options add. Over a panel of `m`
//! days with per-day volatilities `σ_t` and four shared parameters
//! `(κ, √θ, σ, ρ)` the matrix has arrow shape
//!
//! ```text
//! J = (1/v̂) [ diag(a)  A₁₂ ]
//!           [ A₁₂ᵀ     A₂₂ ]
//! ```
//!
//! and its diagonal inverse is obtained in `O(m)` through the Schur
//! complement `S = A₂₂ − A₁₂ᵀ diag(a)⁻¹ A₁₂` of the day block.

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::greeks::{GreekVector, Parameter};

/// Relative symmetry tolerance of an information matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue relative to the largest.
pub const PSD_TOL: f64 = 1e-10;
/// Above this condition number of `S` the shared-parameter errors are
/// flagged unreliable.
pub const CONDITION_LIMIT: f64 = 1e12;
/// A day whose `a_ii` falls below this fraction of the largest carries no
/// volatility information and is reported with infinite uncertainty.
pub const SINGULAR_DAY_TOL: f64 = 1e-16;

/// Symmetric information matrix with named rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    pub labels: Vec<String>,
    pub entries: DMatrix<f64>,
}

impl FisherMatrix {
    pub fn zeros(labels: Vec<String>) -> Self {
        let n = labels.len();
        FisherMatrix {
            labels,
            entries: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn is_symmetric(&self) -> bool {
        is_symmetric(&self.entries)
    }

    pub fn is_psd(&self) -> bool {
        is_psd(&self.entries)
    }

    /// Diagonal of `J⁻¹`, or a singular error.
    pub fn inverse_diagonal(&self) -> Result<Vec<f64>> {
        let inv = self
            .entries
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular(format!("{}x{} information matrix", self.dim(), self.dim())))?;
        Ok(inv.diagonal().iter().copied().collect())
    }
}

fn default_labels() -> Vec<String> {
    Parameter::ALL.iter().map(|p| p.label().to_string()).collect()
}

pub fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    (m - m.transpose()).amax() <= SYMMETRY_TOL * scale
}

/// `λ_min ≥ −PSD_TOL · λ_max`.
pub fn is_psd(m: &DMatrix<f64>) -> bool {
    if m.nrows() == 0 {
        return true;
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    min >= -PSD_TOL * max.abs().max(0.0)
}

/// `(1/v̂) g gᵀ` for one option.
pub fn fisher_single(grad: &GreekVector, noise_variance: f64) -> Result<FisherMatrix> {
    check_noise(noise_variance)?;
    let g = DVector::from_row_slice(&grad.to_array());
    Ok(FisherMatrix {
        labels: default_labels(),
        entries: &g * g.transpose() / noise_variance,
    })
}

/// `(1/v̂) Σ g gᵀ` over a list of option gradients.
pub fn fisher_from_gradients(grads: &[GreekVector], noise_variance: f64) -> Result<FisherMatrix> {
    check_noise(noise_variance)?;
    let mut m = DMatrix::zeros(5, 5);
    for g in grads {
        let g = DVector::from_row_slice(&g.to_array());
        m += &g * g.transpose();
    }
    Ok(FisherMatrix {
        labels: default_labels(),
        entries: m / noise_variance,
    })
}

/// Entrywise sum. The empty sum is the zero matrix over the canonical labels.
pub fn fisher_aggregate(list: &[FisherMatrix]) -> Result<FisherMatrix> {
    let Some(first) = list.first() else {
        return Ok(FisherMatrix::zeros(default_labels()));
    };
    let mut acc = FisherMatrix::zeros(first.labels.clone());
    for f in list {
        if f.labels != acc.labels {
            return Err(Error::LabelMismatch(format!("{:?} vs {:?}", f.labels, acc.labels)));
        }
        acc.entries += &f.entries;
    }
    Ok(acc)
}

pub(crate) fn check_noise(v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidNoise(v))
    }
}

/// Panel parameter vector `(σ_t) ⊕ (κ, √θ, σ, ρ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesTheta {
    pub sigmas: Vec<f64>,
    pub shared: [f64; 4],
}

impl TimeSeriesTheta {
    pub fn new(sigmas: Vec<f64>, shared: [f64; 4]) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::EmptyPanel);
        }
        if let Some(s) = sigmas.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::InvalidParameter(format!("volatility must be >= 0, got {s}")));
        }
        Ok(TimeSeriesTheta { sigmas, shared })
    }

    pub fn days(&self) -> usize {
        self.sigmas.len()
    }
}

/// Price gradients of every option observed on one day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayGradients {
    pub date: NaiveDate,
    pub gradients: Vec<GreekVector>,
}

/// How the per-day blocks are formed from option gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FisherMode {
    /// Sum of per-option outer products, the information of independent
    /// Gaussian quote errors.
    #[default]
    PerOption,
    /// Outer product of the gradient of the day's summed price. Each day
    /// then contributes a rank-one block, so `S` vanishes identically and
    /// only the single-parameter bounds are available.
    SummedPrice,
}

/// Arrow-shaped panel information, stored without the `1/v̂` factor.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockFisher {
    pub dates: Vec<NaiveDate>,
    pub a11_diag: Vec<f64>,
    /// `m × p`
    pub a12: DMatrix<f64>,
    /// `p × p`
    pub a22: DMatrix<f64>,
    pub noise_variance: f64,
}

impl BlockFisher {
    pub fn new(
        dates: Vec<NaiveDate>,
        a11_diag: Vec<f64>,
        a12: DMatrix<f64>,
        a22: DMatrix<f64>,
        noise_variance: f64,
    ) -> Result<Self> {
        check_noise(noise_variance)?;
        let m = a11_diag.len();
        if dates.len() != m || a12.nrows() != m || a12.ncols() != a22.nrows() || !a22.is_square() {
            return Err(Error::Dimension(format!(
                "days {} / {}, a12 {}x{}, a22 {}x{}",
                dates.len(),
                m,
                a12.nrows(),
                a12.ncols(),
                a22.nrows(),
                a22.ncols()
            )));
        }
        Ok(BlockFisher {
            dates,
            a11_diag,
            a12,
            a22,
            noise_variance,
        })
    }

    pub fn days(&self) -> usize {
        self.a11_diag.len()
    }

    pub fn shared_dim(&self) -> usize {
        self.a22.nrows()
    }

    /// The dense `(m+p)²` matrix including the `1/v̂` factor.
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let m = self.days();
        let p = self.shared_dim();
        let mut full = DMatrix::zeros(m + p, m + p);
        for (i, a) in self.a11_diag.iter().enumerate() {
            full[(i, i)] = *a;
        }
        full.view_mut((0, m), (m, p)).copy_from(&self.a12);
        full.view_mut((m, 0), (p, m)).copy_from(&self.a12.transpose());
        full.view_mut((m, m), (p, p)).copy_from(&self.a22);
        full / self.noise_variance
    }
}

/// Builds the panel matrix from per-day option gradients. Days are
/// processed in parallel; summation order within a day is fixed.
pub fn assemble_block_fisher(days: &[DayGradients], noise_variance: f64, mode: FisherMode) -> Result<BlockFisher> {
    check_noise(noise_variance)?;
    if days.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let blocks: Vec<(f64, [f64; 4], DMatrix<f64>)> = days
        .par_iter()
        .map(|day| day_block(day, mode))
        .collect::<Result<_>>()?;
    let m = days.len();
    let mut a12 = DMatrix::zeros(m, 4);
    let mut a22 = DMatrix::zeros(4, 4);
    let mut a11 = Vec::with_capacity(m);
    for (i, (a, row, block)) in blocks.into_iter().enumerate() {
        a11.push(a);
        for (j, x) in row.iter().enumerate() {
            a12[(i, j)] = *x;
        }
        a22 += block;
    }
    BlockFisher::new(days.iter().map(|d| d.date).collect(), a11, a12, a22, noise_variance)
}

fn day_block(day: &DayGradients, mode: FisherMode) -> Result<(f64, [f64; 4], DMatrix<f64>)> {
    if day.gradients.is_empty() {
        return Err(Error::EmptyDay(day.date));
    }
    if let Some(g) = day.gradients.iter().find(|g| !g.is_finite()) {
        return Err(Error::DomainEvaluation {
            phi: day.date.to_string(),
            reason: format!("non-finite gradient {g:?}"),
        });
    }
    let outer = |g: &GreekVector| {
        let s = DVector::from_row_slice(&g.shared());
        let vega = g.d_sigma0;
        let row: [f64; 4] = g.shared().map(|x| vega * x);
        (vega * vega, row, &s * s.transpose())
    };
    match mode {
        FisherMode::PerOption => {
            let mut a = 0.0;
            let mut row = [0.0; 4];
            let mut block = DMatrix::zeros(4, 4);
            for g in &day.gradients {
                let (ai, ri, bi) = outer(g);
                a += ai;
                row.iter_mut().zip(ri).for_each(|(r, x)| *r += x);
                block += bi;
            }
            Ok((a, row, block))
        }
        FisherMode::SummedPrice => {
            let total: GreekVector = day.gradients.iter().copied().sum();
            Ok(outer(&total))
        }
    }
}

/// Outcome of the block inversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InverseStatus {
    /// All finite entries are exact diagonal entries of `J⁻¹`.
    Full,
    /// `S` is singular: day entries are the single-parameter bounds
    /// `v̂/a_ii` and shared entries are infinite.
    BoundOnly,
}

/// Diagonal of `J⁻¹` split into day and shared entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalInverse {
    /// `+∞` on days without volatility information.
    pub days: Vec<f64>,
    pub shared: Vec<f64>,
    pub status: InverseStatus,
    pub schur_condition: f64,
    pub shared_reliable: bool,
}

impl DiagonalInverse {
    pub fn all(&self) -> Vec<f64> {
        self.days.iter().chain(&self.shared).copied().collect()
    }
}

/// Diagonal of `J⁻¹` via the Schur complement of the day block, without
/// forming the dense inverse. Days with vanishing `a_ii` are removed from
/// the system and reported as `+∞`.
pub fn invert_block_diagonal_entries(bf: &BlockFisher) -> Result<DiagonalInverse> {
    let vhat = bf.noise_variance;
    let p = bf.shared_dim();
    let max_a = bf.a11_diag.iter().copied().fold(0.0, f64::max);
    let informative: Vec<bool> = bf
        .a11_diag
        .iter()
        .map(|a| a.is_finite() && *a > SINGULAR_DAY_TOL * max_a && *a > 0.0)
        .collect();

    let mut s = bf.a22.clone();
    for (i, _) in informative.iter().enumerate().filter(|(_, ok)| **ok) {
        let b = bf.a12.row(i);
        s -= b.transpose() * b / bf.a11_diag[i];
    }
    let s = (&s + s.transpose()) * 0.5;

    let (s_inv, condition) = if p == 0 {
        (Some(DMatrix::zeros(0, 0)), 1.0)
    } else {
        let eig = SymmetricEigen::new(s.clone()).eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        let singular = !(hi > 0.0) || lo <= 1e-14 * hi;
        let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        (if singular { None } else { s.clone().try_inverse() }, cond)
    };

    let Some(s_inv) = s_inv else {
        let days = bf
            .a11_diag
            .iter()
            .zip(&informative)
            .map(|(a, ok)| if *ok { vhat / a } else { f64::INFINITY })
            .collect();
        return Ok(DiagonalInverse {
            days,
            shared: vec![f64::INFINITY; p],
            status: InverseStatus::BoundOnly,
            schur_condition: condition,
            shared_reliable: false,
        });
    };

    let days = (0..bf.days())
        .map(|i| {
            if !informative[i] {
                return f64::INFINITY;
            }
            let a = bf.a11_diag[i];
            let b = bf.a12.row(i).transpose();
            let quad = (b.transpose() * &s_inv * &b)[(0, 0)];
            vhat * (1.0 / a + quad / (a * a))
        })
        .collect();
    let shared = s_inv.diagonal().iter().map(|x| vhat * x).collect();
    Ok(DiagonalInverse {
        days,
        shared,
        status: InverseStatus::Full,
        schur_condition: condition,
        shared_reliable: condition <= CONDITION_LIMIT,
    })
}

/// Diagonal of `J⁻¹` by dense inversion of the assembled matrix. Used as a
/// cross-check of the Schur path. The matrix is scaled to unit diagonal
/// first, since day and shared parameters differ by orders of magnitude.
pub fn dense_diagonal_inverse(bf: &BlockFisher) -> Result<Vec<f64>> {
    let n = bf.days() + bf.shared_dim();
    let full = bf.full_matrix();
    let scale: Vec<f64> = full
        .diagonal()
        .iter()
        .map(|d| if *d > 0.0 { 1.0 / d.sqrt() } else { 1.0 })
        .collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| full[(i, j)] * scale[i] * scale[j]);
    let inv = scaled
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("{n}x{n} panel matrix")))?;
    Ok((0..n).map(|i| inv[(i, i)] * scale[i] * scale[i]).collect())
}

/// Largest relative deviation between two diagonal-inverse vectors, over
/// entries finite in both.
pub fn max_relative_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Two-standard-error bands from the diagonal inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct CredibilityBand {
    /// `β_t = 2√(J⁻¹_tt)`, in the units of the day parameter.
    pub beta: Vec<f64>,
    /// `β_t / σ_t`.
    pub relative: Vec<f64>,
    /// `√(J⁻¹_jj)` for the shared parameters.
    pub shared_se: Vec<f64>,
    pub shared_reliable: bool,
}

impl CredibilityBand {
    /// Mean band over days with finite `β_t`.
    pub fn mean_beta(&self) -> Option<f64> {
        let finite: Vec<f64> = self.beta.iter().copied().filter(|b| b.is_finite()).collect();
        (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64)
    }
}

/// `β_t = 2√entry`; infinite entries stay infinite.
pub fn credibility_bands(diag_inv: &DiagonalInverse, sigmas: &[f64]) -> Result<CredibilityBand> {
    if sigmas.len() != diag_inv.days.len() {
        return Err(Error::Dimension(format!(
            "{} day entries vs {} volatilities",
            diag_inv.days.len(),
            sigmas.len()
        )));
    }
    let beta: Vec<f64> = diag_inv.days.iter().map(|e| 2.0 * e.max(0.0).sqrt()).collect();
    let relative = beta.iter().zip(sigmas).map(|(b, s)| b / s).collect();
    Ok(CredibilityBand {
        beta,
        relative,
        shared_se: diag_inv.shared.iter().map(|e| e.max(0.0).sqrt()).collect(),
        shared_reliable: diag_inv.shared_reliable,
    })
}

/// Both sides of `(J⁻¹)_ii ≥ 1/J_ii` for one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaBound {
    pub inverse_diagonal: f64,
    pub reciprocal_information: f64,
}

impl LemmaBound {
    pub fn slack(&self) -> f64 {
        self.inverse_diagonal - self.reciprocal_information
    }
}

/// Lemma bounds for a dense information matrix. A singular `J` yields
/// infinite inverse-diagonal sides (bound-only mode).
pub fn lemma_lower_bound(j: &DMatrix<f64>) -> Vec<LemmaBound> {
    let inv = j.clone().try_inverse().filter(|inv| inv.iter().all(|x| x.is_finite()));
    (0..j.nrows())
        .map(|i| LemmaBound {
            inverse_diagonal: inv.as_ref().map_or(f64::INFINITY, |inv| inv[(i, i)]),
            reciprocal_information: 1.0 / j[(i, i)],
        })
        .collect()
}

/// Per-day single-parameter bounds `v̂/a_ii` of a panel matrix; the
/// corresponding band is `2√v̂ / √a_ii`.
pub fn lemma_day_bounds(bf: &BlockFisher) -> Vec<f64> {
    bf.a11_diag.iter().map(|a| bf.noise_variance / a).collect()
}
