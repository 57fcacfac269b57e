//! Coherence monotones in the computational basis.

use faer::{c64, Mat};
use rand::Rng;
use serde::Serialize;

use crate::divergences::{self, DivergenceError};
use crate::linalg::{self, CMat};
use crate::optim::{self, PatternOptions};
use crate::record::{CheckStatus, InequalityRecord, Term};
use crate::rng;
use crate::states::{DensityMatrix, StateError};

pub type Result<T> = std::result::Result<T, CoherenceError>;

#[derive(Debug, thiserror::Error)]
pub enum CoherenceError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Relative tolerance for `|ρ_ij|² ≥ ρ_ii ρ_jj`.
pub const TRIM_TOL: f64 = 1e-9;

pub fn dephase(rho: &DensityMatrix) -> DensityMatrix {
    let m = rho.matrix();
    let diag: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)].re).collect();
    DensityMatrix::from_parts_unchecked(linalg::diag_real(&diag), rho.dims().to_vec(), rho.cut().map(|c| c.to_vec()))
}

/// Keeps the entries with `|ρ_ij| = √(ρ_ii ρ_jj)` and zeroes the rest.
pub fn trim(rho: &DensityMatrix) -> CMat {
    let m = rho.matrix();
    let n = m.nrows();
    Mat::from_fn(n, n, |i, j| {
        let v = m[(i, j)];
        if i == j || v.norm_sqr() >= (1.0 - TRIM_TOL) * m[(i, i)].re * m[(j, j)].re {
            v
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

fn diag_entropy(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    divergences::shannon(&(0..m.nrows()).map(|i| m[(i, i)].re.max(0.0)).collect::<Vec<_>>())
}

/// `C_r(ρ) = S(Δ(ρ)) − S(ρ)`.
pub fn c_r(rho: &DensityMatrix) -> f64 {
    (diag_entropy(rho) - divergences::vn_entropy(rho)).max(0.0)
}

/// `Q(ρ) = S(Δ(ρ)) − S(ρ̄)` with `ρ̄` the trimmed state.
pub fn quintessential(rho: &DensityMatrix) -> Result<f64> {
    let s_trim = divergences::matrix_entropy(&trim(rho))?;
    Ok((diag_entropy(rho) - s_trim).max(0.0))
}

/// `ρ̃ = Σ ρ_ij |ii⟩⟨jj|` on `d ⊗ d` with the cut between the copies.
#[derive(Debug, Clone)]
pub struct MaxCorrState {
    pub state: DensityMatrix,
    pub source: DensityMatrix,
}

pub fn max_corr(rho: &DensityMatrix) -> MaxCorrState {
    let d = rho.dim();
    let m = rho.matrix();
    let mut out = linalg::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            out[(i * d + i, j * d + j)] = m[(i, j)];
        }
    }
    MaxCorrState { state: DensityMatrix::from_parts_unchecked(out, vec![d, d], Some(vec![0])), source: rho.clone() }
}

/// `I_c(A⟩A′) = S(ω_{A′}) − S(ω_{AA′})` for a two-factor state `[A, A′]`.
pub fn coherent_info(omega: &DensityMatrix) -> Result<f64> {
    if omega.dims().len() != 2 {
        return Err(CoherenceError::Argument(format!("expected two factors, got {:?}", omega.dims())));
    }
    let s_b = divergences::marginal_entropy(omega.matrix(), omega.dims(), &[1])?;
    Ok(s_b - divergences::vn_entropy(omega))
}

/// `|C_r(ρ) − I_c(A⟩A′)_ρ̃|`.
pub fn check_cr_identity(rho: &DensityMatrix) -> Result<f64> {
    Ok((c_r(rho) - coherent_info(&max_corr(rho).state)?).abs())
}

/// `C_r(ρ_AB) ≥ C_r(ρ_A) + C_r(ρ_B)`, all terms exact.
pub fn check_cr_strong_superadditivity(rho: &DensityMatrix) -> Result<InequalityRecord> {
    let cut = rho.cut().ok_or(StateError::MissingCut)?.to_vec();
    let b: Vec<usize> = rho.b_systems()?;
    let whole = c_r(rho);
    let a_part = c_r(&rho.marginal(&cut)?);
    let b_part = c_r(&rho.marginal(&b)?);
    let slack = whole - a_part - b_part + 1e-9;
    Ok(InequalityRecord {
        check: "cr-strong-superadditivity".into(),
        lhs: Term::exact("C_r(AB)", whole),
        rhs: vec![Term::exact("C_r(A)", a_part), Term::exact("C_r(B)", b_part)],
        rhs_constant: 0.0,
        allowance: 1e-9,
        slack,
        status: if slack >= 0.0 { CheckStatus::Pass } else { CheckStatus::Fail },
        note: String::new(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CfResult {
    /// Value of the best decomposition found (an upper bound).
    pub value: f64,
    /// The pattern-search optimum alone.
    pub optimizer: f64,
    /// Qubit case: optimizer and dense search agree within `1e−4`.
    pub exact: bool,
    /// Qubit case: the dense two-member search value.
    pub oracle: Option<f64>,
    pub ensemble_size: usize,
    pub restarts: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct CfOptions {
    /// Members of the decomposition; `0` means `d²`.
    pub ensemble_size: usize,
    pub restarts: usize,
    pub seed: u64,
    pub search: PatternOptions,
}

impl Default for CfOptions {
    fn default() -> Self {
        Self { ensemble_size: 0, restarts: 16, seed: 0, search: PatternOptions { initial_step: 0.5, min_step: 1e-6, shrink: 0.5, max_evals: 8_000 } }
    }
}

/// Square-root factor columns `√λ_k v_k` of the nonzero spectrum.
fn sqrt_factor(rho: &DensityMatrix) -> Result<Vec<Vec<c64>>> {
    let e = linalg::herm_eig(rho.matrix()).map_err(StateError::from)?;
    let d = rho.dim();
    let mut cols = Vec::new();
    for (k, &lam) in e.values.iter().enumerate() {
        if lam > 1e-14 {
            let s = lam.sqrt();
            cols.push((0..d).map(|i| e.vectors[(i, k)] * s).collect());
        }
    }
    Ok(cols)
}

/// `Σ_x p_x S(Δ(ψ_x))` for the ensemble `ψ̃_x = Σ_k U_xk a_k`, with `U` the
/// orthonormalized `m × r` parameter matrix.
fn ensemble_value(params: &[f64], factor: &[Vec<c64>], m: usize) -> f64 {
    let r = factor.len();
    let d = factor[0].len();
    // columns of U from params, Gram–Schmidt
    let mut cols: Vec<Vec<c64>> = (0..r).map(|k| (0..m).map(|x| c64::new(params[2 * (k * m + x)], params[2 * (k * m + x) + 1])).collect()).collect();
    for k in 0..r {
        for j in 0..k {
            let proj: c64 = (0..m).map(|x| cols[j][x].conj() * cols[k][x]).sum();
            for x in 0..m {
                let v = cols[j][x] * proj;
                cols[k][x] -= v;
            }
        }
        let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 1e-12) {
            return f64::INFINITY;
        }
        cols[k].iter_mut().for_each(|z| *z /= norm);
    }
    let mut total = 0.0;
    let mut amps = vec![0.0; d];
    for x in 0..m {
        let mut p = 0.0;
        for (i, a) in amps.iter_mut().enumerate() {
            let mut z = c64::new(0.0, 0.0);
            for k in 0..r {
                z += cols[k][x] * factor[k][i];
            }
            *a = z.norm_sqr();
            p += *a;
        }
        if p > 1e-300 {
            // p·H(a/p) = −Σ a log a + p log p
            let s: f64 = amps.iter().filter(|&&a| a > 0.0).map(|&a| a * a.log2()).sum();
            total += p * p.log2() - s;
        }
    }
    total
}

/// Upper bound on the coherence of formation by pattern search over
/// decompositions `ψ̃ = U·A` with `A` a square-root factor of `ρ` and `U` an
/// isometry. For qubits the dense search [`c_f_qubit_bruteforce`] runs too.
pub fn c_f(rho: &DensityMatrix, opts: &CfOptions) -> Result<CfResult> {
    let d = rho.dim();
    let factor = sqrt_factor(rho)?;
    let r = factor.len();
    let m = if opts.ensemble_size == 0 { d * d } else { opts.ensemble_size };
    if m < r {
        return Err(CoherenceError::Argument(format!("ensemble size {m} below rank {r}")));
    }
    let mut best = f64::INFINITY;
    let mut gen = rng::from_seed(opts.seed);
    for restart in 0..opts.restarts.max(1) {
        let x0: Vec<f64> = if restart == 0 {
            // the eigen-ensemble
            let mut v = vec![0.0; 2 * m * r];
            for k in 0..r {
                v[2 * (k * m + k)] = 1.0;
            }
            v
        } else {
            (0..2 * m * r).map(|_| rng::normal(&mut gen)).collect()
        };
        let res = optim::hooke_jeeves(|p| ensemble_value(p, &factor, m), &x0, &opts.search);
        best = best.min(res.value);
    }
    let best = best.max(0.0);
    let (exact, oracle) = if d == 2 {
        let o = c_f_qubit_bruteforce(rho, 1e-3);
        (((best - o).abs() <= 1e-4), Some(o))
    } else {
        (false, None)
    };
    let value = match oracle {
        Some(o) => best.min(o),
        None => best,
    };
    Ok(CfResult { value, optimizer: best, exact, oracle, ensemble_size: m, restarts: opts.restarts.max(1) })
}

fn h_of_z(z: f64) -> f64 {
    let p = (0.5 * (1.0 + z)).clamp(0.0, 1.0);
    divergences::shannon(&[p, 1.0 - p])
}

/// Two-member decompositions of a qubit state: the chord through the Bloch
/// vector `r` in direction `n` meets the sphere at `r + t₁n` and `r − t₂n`
/// with weights `t₂/(t₁+t₂)` and `t₁/(t₁+t₂)`.
fn chord_value(r: [f64; 3], theta: f64, phi: f64) -> f64 {
    let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    let rn = r[0] * n[0] + r[1] * n[1] + r[2] * n[2];
    let rr = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    let disc = (rn * rn + 1.0 - rr).max(0.0).sqrt();
    let t1 = -rn + disc;
    let t2 = rn + disc;
    if t1 + t2 <= 1e-15 {
        return h_of_z(r[2]);
    }
    let z1 = r[2] + t1 * n[2];
    let z2 = r[2] - t2 * n[2];
    (t2 * h_of_z(z1) + t1 * h_of_z(z2)) / (t1 + t2)
}

/// Dense search over two-member pure decompositions of a qubit state: a grid
/// on the sphere of chord directions, refined around the best cell until the
/// angular resolution reaches `resolution`.
pub fn c_f_qubit_bruteforce(rho: &DensityMatrix, resolution: f64) -> f64 {
    let m = rho.matrix();
    let r = [2.0 * m[(0, 1)].re, -2.0 * m[(0, 1)].im, m[(0, 0)].re - m[(1, 1)].re];
    let pi = std::f64::consts::PI;
    let (nt, np) = (120usize, 240usize);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=nt {
        let theta = pi * i as f64 / nt as f64;
        for j in 0..np {
            let phi = 2.0 * pi * j as f64 / np as f64;
            let v = chord_value(r, theta, phi);
            if v < best.0 {
                best = (v, theta, phi);
            }
        }
    }
    let mut width = pi / nt as f64;
    while width > resolution {
        let (_, t0, p0) = best;
        for i in -10..=10 {
            let theta = (t0 + width * i as f64 / 10.0).clamp(0.0, pi);
            for j in -10..=10 {
                let phi = p0 + width * j as f64 / 10.0;
                let v = chord_value(r, theta, phi);
                if v < best.0 {
                    best = (v, theta, phi);
                }
            }
        }
        width /= 5.0;
    }
    best.0
}

/// Random incoherent-basis phase rotation `diag(e^{iθ_k})`.
pub fn random_diagonal_phase<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let phases: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
    Mat::from_fn(d, d, |i, j| if i == j { c64::new(phases[i].cos(), phases[i].sin()) } else { c64::new(0.0, 0.0) })
}

/// Qutrit whose first two levels form a saturated (rank-one) block while the
/// third couples only weakly, so trimming keeps exactly one coherence.
pub fn saturated_block_fixture() -> DensityMatrix {
    let m = Mat::from_fn(3, 3, |i, j| {
        let v = [[0.3, 0.3, 0.05], [0.3, 0.3, 0.05], [0.05, 0.05, 0.4]][i][j];
        c64::new(v, 0.0)
    });
    DensityMatrix::new(m, vec![3], None).expect("valid fixture")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{self, max_coherent, max_entangled, plus_state};

    fn block_fixture() -> DensityMatrix {
        saturated_block_fixture()
    }

    #[test]
    fn dephase_examples() {
        let p = plus_state();
        let d = dephase(&p);
        assert!(linalg::max_abs(&linalg::axpby(1.0, d.matrix(), -0.5, &linalg::identity(2))) < 1e-15);
        let r = states::random_density(3, 5).unwrap();
        let once = dephase(&r);
        assert!(linalg::max_abs(&linalg::axpby(1.0, once.matrix(), -1.0, dephase(&once).matrix())) == 0.0);
    }

    #[test]
    fn trim_examples() {
        let psi = states::random_pure(4, 2).unwrap();
        assert!(linalg::max_abs(&linalg::axpby(1.0, &trim(&psi), -1.0, psi.matrix())) < 1e-15);
        let r = states::random_density(3, 7).unwrap();
        let m = r.matrix();
        // full rank generic: every off-diagonal strictly below the bound
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(m[(i, j)].norm_sqr() < 0.99 * m[(i, i)].re * m[(j, j)].re);
                }
            }
        }
        assert!(linalg::max_abs(&linalg::axpby(1.0, &trim(&r), -1.0, dephase(&r).matrix())) == 0.0);
        let b = block_fixture();
        let t = trim(&b);
        assert_eq!(t[(0, 1)].re, 0.3);
        assert_eq!(t[(0, 2)].re, 0.0);
        assert_eq!(t[(1, 2)].re, 0.0);
    }

    #[test]
    fn cr_and_q_examples() {
        assert!((c_r(&plus_state()) - 1.0).abs() < 1e-12);
        for d in 2..6 {
            assert!((c_r(&max_coherent(d).unwrap()) - (d as f64).log2()).abs() < 1e-12);
        }
        let inc = DensityMatrix::new(linalg::diag_real(&[0.2, 0.3, 0.5]), vec![3], None).unwrap();
        assert!(c_r(&inc) < 1e-12);
        let psi = states::random_pure(3, 4).unwrap();
        assert!((quintessential(&psi).unwrap() - c_r(&psi)).abs() < 1e-9);
        let r = states::random_density(3, 9).unwrap();
        assert!(quintessential(&r).unwrap() <= 1e-9);
        let b = block_fixture();
        let q = quintessential(&b).unwrap();
        assert!(q > 1e-3 && q < c_r(&b) - 1e-3, "{q} {}", c_r(&b));
    }

    #[test]
    fn max_corr_and_coherent_info() {
        let mc = max_corr(&plus_state());
        let phi = max_entangled(2).unwrap();
        assert!(linalg::max_abs(&linalg::axpby(1.0, mc.state.matrix(), -1.0, phi.matrix())) < 1e-15);
        assert!((coherent_info(&phi).unwrap() - 1.0).abs() < 1e-12);
        let a = states::random_density(2, 1).unwrap();
        let b = states::random_density(3, 2).unwrap();
        let prod = a.tensor(&b);
        assert!((coherent_info(&prod).unwrap() + divergences::vn_entropy(&a)).abs() < 1e-12);
        for seed in 0..5 {
            assert!(check_cr_identity(&states::random_density(3, seed).unwrap()).unwrap() <= 1e-9);
        }
        let diag = DensityMatrix::new(linalg::diag_real(&[0.5, 0.5]), vec![2], None).unwrap();
        assert!(coherent_info(&max_corr(&diag).state).unwrap().abs() < 1e-12);
    }

    #[test]
    fn cr_superadditivity_examples() {
        let a = states::random_density(2, 3).unwrap();
        let b = states::random_density(2, 4).unwrap();
        let rec = check_cr_strong_superadditivity(&a.tensor(&b).with_cut(vec![0]).unwrap()).unwrap();
        assert_eq!(rec.status, CheckStatus::Pass);
        assert!((rec.slack - 1e-9).abs() < 1e-9);
        let mc = max_corr(&states::random_density(2, 5).unwrap()).state;
        assert_eq!(check_cr_strong_superadditivity(&mc).unwrap().status, CheckStatus::Pass);
    }

    /// `h((1 + √(1 − 4|ρ₀₁|²))/2)`.
    fn qubit_closed_form(rho: &DensityMatrix) -> f64 {
        let c = 2.0 * rho.matrix()[(0, 1)].norm();
        divergences::h2(0.5 * (1.0 + (1.0 - c * c).max(0.0).sqrt())).unwrap()
    }

    #[test]
    fn cf_examples() {
        let opts = CfOptions::default();
        let plus = c_f(&plus_state(), &opts).unwrap();
        assert!((plus.value - 1.0).abs() < 1e-6, "{plus:?}");
        let mixed = DensityMatrix::maximally_mixed(vec![2], None).unwrap();
        assert!(c_f(&mixed, &opts).unwrap().value < 1e-6);
        let m = Mat::from_fn(2, 2, |i, j| c64::new(if i == j { 0.5 } else { 0.3 }, 0.0));
        let rho = DensityMatrix::new(m, vec![2], None).unwrap();
        let res = c_f(&rho, &opts).unwrap();
        let oracle = c_f_qubit_bruteforce(&rho, 1e-3);
        assert!((res.value - oracle).abs() <= 1e-4 && res.exact, "{res:?} {oracle}");
        assert!((oracle - qubit_closed_form(&rho)).abs() <= 1e-6);
    }

    #[test]
    fn bruteforce_matches_closed_form() {
        let mut g = rng::from_seed(3);
        for _ in 0..10 {
            let rho = states::random_density_with(&[2], None, None, &mut g).unwrap();
            assert!((c_f_qubit_bruteforce(&rho, 1e-3) - qubit_closed_form(&rho)).abs() < 1e-6);
        }
    }

    #[test]
    fn cf_qutrit_above_cr() {
        let r = states::random_density(3, 12).unwrap();
        let opts = CfOptions { restarts: 4, ..Default::default() };
        let cf = c_f(&r, &opts).unwrap();
        assert!(cf.value >= c_r(&r) - 1e-6 && cf.oracle.is_none() && !cf.exact);
    }
}
