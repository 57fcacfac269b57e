//! Entropies and divergences in bits.
//!
//! Relative entropies return a tagged [`Divergence`]; the infinite case is
//! decided by the overlap of the first argument with the numerical kernel of
//! the second (eigenvalues at or below [`SUPPORT_TOL`]).

use faer::Mat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, CMat, LinalgError};
use crate::measurement::MeasurementFamily;
use crate::states::{DensityMatrix, ProbVector};

pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DivergenceError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain violation: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, DivergenceError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Divergence {
    Finite(f64),
    Infinite,
}

impl Divergence {
    pub fn is_finite(self) -> bool {
        matches!(self, Divergence::Finite(_))
    }

    /// The value as `f64`, `+∞` for the infinite case.
    pub fn value(self) -> f64 {
        match self {
            Divergence::Finite(v) => v,
            Divergence::Infinite => f64::INFINITY,
        }
    }
}

fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * p.log2()
    }
}

pub fn shannon(p: &[f64]) -> f64 {
    -p.iter().map(|&x| plogp(x)).sum::<f64>()
}

/// Entropy of the spectrum of a PSD matrix (negative rounding noise ignored).
pub fn matrix_entropy(m: &CMat) -> Result<f64> {
    let ev = linalg::herm_eigvals(m)?;
    Ok(shannon(&ev).max(0.0))
}

pub fn vn_entropy(rho: &DensityMatrix) -> f64 {
    matrix_entropy(rho.matrix()).expect("density matrices have a spectrum")
}

/// Entropy of the marginal on `keep`.
pub fn marginal_entropy(m: &CMat, dims: &[usize], keep: &[usize]) -> Result<f64> {
    if keep.is_empty() {
        return Ok(0.0);
    }
    if keep.len() == dims.len() {
        return matrix_entropy(m);
    }
    matrix_entropy(&linalg::partial_trace(m, dims, keep)?)
}

/// `Tr[ρ log₂σ]`, or `None` when `ρ` has weight on the numerical kernel of `σ`.
pub fn tr_rho_log_sigma(rho: &CMat, sigma: &CMat) -> Result<Option<f64>> {
    if rho.nrows() != sigma.nrows() || rho.ncols() != sigma.ncols() {
        return Err(DivergenceError::Shape(format!("{}x{} vs {}x{}", rho.nrows(), rho.ncols(), sigma.nrows(), sigma.ncols())));
    }
    let s = linalg::herm_eig(sigma)?;
    let v = &s.vectors;
    let rotated = v.adjoint() * rho * v;
    let mut kernel_weight = 0.0;
    let mut cross = 0.0;
    for (k, &mu) in s.values.iter().enumerate() {
        let w = rotated[(k, k)].re;
        if mu <= SUPPORT_TOL {
            kernel_weight += w;
        } else {
            cross += w * mu.log2();
        }
    }
    Ok((kernel_weight <= SUPPORT_TOL).then_some(cross))
}

/// `Tr[ρ(log₂ρ − log₂σ)]` for PSD matrices of equal size.
pub fn umegaki_matrices(rho: &CMat, sigma: &CMat) -> Result<Divergence> {
    match tr_rho_log_sigma(rho, sigma)? {
        None => Ok(Divergence::Infinite),
        Some(cross) => Ok(Divergence::Finite(-matrix_entropy(rho)? - cross)),
    }
}

pub fn umegaki(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Divergence> {
    umegaki_matrices(rho.matrix(), sigma.matrix())
}

/// Classical relative entropy for raw nonnegative weights.
pub fn kl_slices(p: &[f64], q: &[f64]) -> Result<Divergence> {
    if p.len() != q.len() {
        return Err(DivergenceError::Shape(format!("{} vs {} outcomes", p.len(), q.len())));
    }
    let mut total = 0.0;
    for (&px, &qx) in p.iter().zip(q) {
        if px <= 0.0 {
            continue;
        }
        if qx <= 0.0 {
            return Ok(Divergence::Infinite);
        }
        total += px * (px / qx).log2();
    }
    Ok(Divergence::Finite(total))
}

pub fn kl(p: &ProbVector, q: &ProbVector) -> Result<Divergence> {
    kl_slices(p.as_slice(), q.as_slice())
}

/// Binary relative entropy `D₂(p‖q)`.
pub fn binary_d2(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(DivergenceError::Domain(format!("D2({p}, {q})")));
    }
    match kl_slices(&[p, 1.0 - p], &[q, 1.0 - q])? {
        Divergence::Finite(v) => Ok(v),
        Divergence::Infinite => Err(DivergenceError::Domain(format!("D2({p}, {q}) is infinite"))),
    }
}

pub fn trace_distance(rho: &DensityMatrix, omega: &DensityMatrix) -> Result<f64> {
    if rho.dim() != omega.dim() {
        return Err(DivergenceError::Shape(format!("{} vs {}", rho.dim(), omega.dim())));
    }
    Ok(0.5 * linalg::trace_norm(&linalg::axpby(1.0, rho.matrix(), -1.0, omega.matrix()))?)
}

/// `g(x) = (1+x)log₂(1+x) − x log₂ x`.
pub fn g_fn(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(DivergenceError::Domain(format!("g({x})")));
    }
    Ok(plogp(1.0 + x) - plogp(x))
}

pub fn h2(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(DivergenceError::Domain(format!("h2({x})")));
    }
    Ok(shannon(&[x, 1.0 - x]))
}

/// Both sides of the classical-quantum chain rule
/// `D(ρ_XS‖σ_XS) = D(p‖q) + Σ_x p_x D(ρ^x‖σ^x)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChainCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

fn block_diag(weights: &[f64], blocks: &[DensityMatrix]) -> CMat {
    let d = blocks[0].dim();
    let n = d * blocks.len();
    let mut m = Mat::zeros(n, n);
    for (x, (w, b)) in weights.iter().zip(blocks).enumerate() {
        for i in 0..d {
            for j in 0..d {
                m[(x * d + i, x * d + j)] = b.matrix()[(i, j)] * *w;
            }
        }
    }
    m
}

pub fn cq_chain_identity_check(
    px: &ProbVector,
    rhos: &[DensityMatrix],
    qx: &ProbVector,
    sigmas: &[DensityMatrix],
) -> Result<ChainCheck> {
    let k = px.len();
    if qx.len() != k || rhos.len() != k || sigmas.len() != k {
        return Err(DivergenceError::Shape("ensemble lengths differ".into()));
    }
    let d = rhos[0].dim();
    if rhos.iter().chain(sigmas).any(|r| r.dim() != d) {
        return Err(DivergenceError::Shape("ensemble members differ in dimension".into()));
    }
    let lhs = umegaki_matrices(&block_diag(px.as_slice(), rhos), &block_diag(qx.as_slice(), sigmas))?.value();
    let mut rhs = kl(px, qx)?.value();
    for x in 0..k {
        let p = px.as_slice()[x];
        if p > 0.0 {
            rhs += p * umegaki(&rhos[x], &sigmas[x])?.value();
        }
    }
    let residual = if lhs.is_infinite() && rhs.is_infinite() { 0.0 } else { (lhs - rhs).abs() };
    Ok(ChainCheck { lhs, rhs, residual })
}

/// `max_M Σ_i |Tr[E_i X]|` over the family: a lower bound on the
/// distinguishability norm, never above `‖X‖₁`.
pub fn family_norm(x: &CMat, family: &MeasurementFamily) -> f64 {
    family
        .povms
        .iter()
        .map(|p| p.apply(x).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `I(A:B) = S(A) + S(B) − S(AB)` for disjoint factor sets.
pub fn mutual_information(m: &CMat, dims: &[usize], a: &[usize], b: &[usize]) -> Result<f64> {
    let mut ab: Vec<usize> = a.iter().chain(b).copied().collect();
    ab.sort_unstable();
    Ok(marginal_entropy(m, dims, a)? + marginal_entropy(m, dims, b)? - marginal_entropy(m, dims, &ab)?)
}
