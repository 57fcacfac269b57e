//! Density matrices with subsystem metadata, standard states, random sampling.
//!
//! A [`DensityMatrix`] carries the list of tensor factors and an optional
//! bipartition `cut`, the set of factor indices forming the A side. Every
//! factor not in `cut` belongs to B, and "the" partial transpose of a state
//! transposes all B-side factors.
//!
//! Werner states are parameterized by `p = Tr[F ρ]` with `F` the swap, so
//! `p ∈ [−1, 1]` and the state is PPT iff `p ≥ 0`.

use faer::{c64, Mat};
use rand::Rng;
use thiserror::Error;

use crate::linalg::{self, CMat, LinalgError};
use crate::rng;

pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum StateError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("trace {0} differs from 1")]
    Trace(f64),
    #[error("minimum eigenvalue {0:e} is negative")]
    NotPsd(f64),
    #[error("dimension mismatch: {0}")]
    Dims(String),
    #[error("invalid bipartition: {0}")]
    Cut(String),
    #[error("state has no bipartition")]
    MissingCut,
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error("probability vector invalid: {0}")]
    Prob(String),
}

pub type Result<T> = std::result::Result<T, StateError>;

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: CMat,
    dims: Vec<usize>,
    cut: Option<Vec<usize>>,
}

impl DensityMatrix {
    /// Validates trace, positivity and dimensions; the matrix is symmetrized.
    pub fn new(matrix: CMat, dims: Vec<usize>, cut: Option<Vec<usize>>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(LinalgError::NotSquare { rows: n, cols: matrix.ncols() }.into());
        }
        let prod: usize = dims.iter().product();
        if dims.is_empty() || prod != n || dims.contains(&0) {
            return Err(StateError::Dims(format!("dims {dims:?} vs size {n}")));
        }
        if let Some(c) = &cut {
            validate_cut(c, dims.len())?;
        }
        let matrix = linalg::hermitian_part(&matrix);
        let tr = linalg::trace(&matrix).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(StateError::Trace(tr));
        }
        let min = linalg::min_eigenvalue(&matrix)?;
        if min < -PSD_TOL {
            return Err(StateError::NotPsd(min));
        }
        Ok(Self { matrix, dims, cut })
    }

    /// Normalizes a PSD matrix to unit trace, then validates.
    pub fn from_unnormalized(matrix: CMat, dims: Vec<usize>, cut: Option<Vec<usize>>) -> Result<Self> {
        let tr = linalg::trace(&matrix).re;
        if tr <= 0.0 || !tr.is_finite() {
            return Err(StateError::Trace(tr));
        }
        Self::new(linalg::scale(&matrix, 1.0 / tr), dims, cut)
    }

    /// Bipartite `[d_a, d_b]` state with cut `{0}`.
    pub fn bipartite(matrix: CMat, d_a: usize, d_b: usize) -> Result<Self> {
        Self::new(matrix, vec![d_a, d_b], Some(vec![0]))
    }

    pub fn maximally_mixed(dims: Vec<usize>, cut: Option<Vec<usize>>) -> Result<Self> {
        let n: usize = dims.iter().product();
        Self::new(linalg::scale(&linalg::identity(n), 1.0 / n as f64), dims, cut)
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cut(&self) -> Option<&[usize]> {
        self.cut.as_deref()
    }

    pub fn with_cut(mut self, cut: Vec<usize>) -> Result<Self> {
        validate_cut(&cut, self.dims.len())?;
        self.cut = Some(cut);
        Ok(self)
    }

    /// Factor indices on the B side of the cut.
    pub fn b_systems(&self) -> Result<Vec<usize>> {
        let cut = self.cut.as_ref().ok_or(StateError::MissingCut)?;
        Ok((0..self.dims.len()).filter(|k| !cut.contains(k)).collect())
    }

    /// Total dimensions `(d_A, d_B)` of the two sides of the cut.
    pub fn cut_dims(&self) -> Result<(usize, usize)> {
        let cut = self.cut.as_ref().ok_or(StateError::MissingCut)?;
        let da: usize = cut.iter().map(|&k| self.dims[k]).product();
        Ok((da, self.dim() / da))
    }

    /// Partial transpose over every B-side factor.
    pub fn partial_transpose(&self) -> Result<CMat> {
        let b = self.b_systems()?;
        Ok(linalg::partial_transpose(&self.matrix, &self.dims, &b)?)
    }

    /// Reduced state on `keep`. The cut is restricted to the kept factors;
    /// it is dropped when one side becomes empty.
    pub fn marginal(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        let m = linalg::partial_trace(&self.matrix, &self.dims, &keep_sorted)?;
        let dims: Vec<usize> = keep_sorted.iter().map(|&k| self.dims[k]).collect();
        let cut = self.cut.as_ref().and_then(|c| {
            let new: Vec<usize> = keep_sorted
                .iter()
                .enumerate()
                .filter(|(_, k)| c.contains(k))
                .map(|(i, _)| i)
                .collect();
            (!new.is_empty() && new.len() < dims.len()).then_some(new)
        });
        Ok(Self { matrix: linalg::hermitian_part(&m), dims, cut })
    }

    /// `self ⊗ other`; factors concatenate and the A sides are joined.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let cut = match (&self.cut, &other.cut) {
            (Some(a), Some(b)) => {
                let mut c = a.clone();
                c.extend(b.iter().map(|k| k + self.dims.len()));
                Some(c)
            }
            _ => None,
        };
        DensityMatrix { matrix: linalg::kron(&self.matrix, &other.matrix), dims, cut }
    }

    /// `n`-fold tensor power.
    pub fn tensor_power(&self, n: usize) -> DensityMatrix {
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.tensor(self);
        }
        acc
    }

    /// Reorders factors: factor `k` of the result is factor `perm[k]` here.
    pub fn permute(&self, perm: &[usize]) -> Result<DensityMatrix> {
        let m = linalg::permute_subsystems(&self.matrix, &self.dims, perm)?;
        let dims = perm.iter().map(|&p| self.dims[p]).collect();
        let cut = self
            .cut
            .as_ref()
            .map(|c| (0..perm.len()).filter(|&k| c.contains(&perm[k])).collect());
        Ok(DensityMatrix { matrix: m, dims, cut })
    }

    /// Mixture `(1−t)·self + t·other` of states with matching layout.
    pub fn mix(&self, other: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if self.dims != other.dims {
            return Err(StateError::Dims(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(DensityMatrix {
            matrix: linalg::axpby(1.0 - t, &self.matrix, t, &other.matrix),
            dims: self.dims.clone(),
            cut: self.cut.clone(),
        })
    }

    pub fn purity(&self) -> f64 {
        linalg::inner(&self.matrix, &self.matrix)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(linalg::herm_eigvals(&self.matrix)?)
    }

    pub fn rank(&self, tol: f64) -> Result<usize> {
        Ok(self.eigenvalues()?.iter().filter(|&&v| v > tol).count())
    }

    /// Same layout, different matrix; used by optimizers for iterates that are
    /// density matrices by construction.
    pub(crate) fn same_layout(&self, matrix: CMat) -> DensityMatrix {
        DensityMatrix { matrix, dims: self.dims.clone(), cut: self.cut.clone() }
    }

    pub(crate) fn from_parts_unchecked(matrix: CMat, dims: Vec<usize>, cut: Option<Vec<usize>>) -> DensityMatrix {
        DensityMatrix { matrix, dims, cut }
    }
}

fn validate_cut(cut: &[usize], n_factors: usize) -> Result<()> {
    if cut.is_empty() || cut.len() >= n_factors {
        return Err(StateError::Cut(format!("{cut:?} must be a proper nonempty subset of {n_factors} factors")));
    }
    let mut seen = vec![false; n_factors];
    for &k in cut {
        if k >= n_factors || std::mem::replace(&mut seen[k], true) {
            return Err(StateError::Cut(format!("{cut:?} is not a set of factor indices")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(StateError::Prob("empty".into()));
        }
        if let Some(x) = p.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(StateError::Prob(format!("entry {x}")));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(StateError::Prob(format!("sum {s}")));
        }
        Ok(Self(p))
    }

    /// Clips tiny negatives and renormalizes; for outcome statistics that are
    /// probabilities up to rounding.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        let clipped: Vec<f64> = w.iter().map(|x| x.max(0.0)).collect();
        let s: f64 = clipped.iter().sum();
        if s <= 0.0 {
            return Err(StateError::Prob("zero total weight".into()));
        }
        Self::new(clipped.iter().map(|x| x / s).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn c(re: f64) -> c64 {
    c64::new(re, 0.0)
}

/// `(1/√d) Σ_i |ii⟩`.
pub fn max_entangled_vector(d: usize) -> Vec<c64> {
    let mut v = vec![c(0.0); d * d];
    for i in 0..d {
        v[i * d + i] = c(1.0 / (d as f64).sqrt());
    }
    v
}

/// Projector `Φ_d` as a plain matrix.
pub fn phi_matrix(d: usize) -> CMat {
    linalg::projector(&max_entangled_vector(d))
}

/// Swap operator on `C^d ⊗ C^d`.
pub fn swap_matrix(d: usize) -> CMat {
    let n = d * d;
    Mat::from_fn(n, n, |r, col| {
        let (i, j) = (r / d, r % d);
        if col == j * d + i {
            c(1.0)
        } else {
            c(0.0)
        }
    })
}

pub fn max_entangled(d: usize) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(StateError::Range(format!("local dimension {d} < 2")));
    }
    DensityMatrix::bipartite(phi_matrix(d), d, d)
}

/// The coherence bit `|+⟩⟨+|`.
pub fn plus_state() -> DensityMatrix {
    DensityMatrix::new(Mat::from_fn(2, 2, |_, _| c(0.5)), vec![2], None).expect("valid state")
}

/// The uniform superposition `Σ_i |i⟩/√d`.
pub fn max_coherent(d: usize) -> Result<DensityMatrix> {
    if d < 1 {
        return Err(StateError::Range("dimension 0".into()));
    }
    DensityMatrix::new(Mat::from_fn(d, d, |_, _| c(1.0 / d as f64)), vec![d], None)
}

/// `p·Φ_d + (1−p)(I − Φ_d)/(d² − 1)`, `p ∈ [0, 1]`.
pub fn isotropic(d: usize, p: f64) -> Result<DensityMatrix> {
    if d < 2 || !(0.0..=1.0).contains(&p) {
        return Err(StateError::Range(format!("isotropic(d={d}, p={p})")));
    }
    let phi = phi_matrix(d);
    let n = d * d;
    let rest = linalg::axpby(1.0, &linalg::identity(n), -1.0, &phi);
    DensityMatrix::bipartite(linalg::axpby(p, &phi, (1.0 - p) / (n as f64 - 1.0), &rest), d, d)
}

/// Werner state with `Tr[Fρ] = p`, `p ∈ [−1, 1]`.
pub fn werner(d: usize, p: f64) -> Result<DensityMatrix> {
    if d < 2 || !(-1.0..=1.0).contains(&p) {
        return Err(StateError::Range(format!("werner(d={d}, p={p})")));
    }
    let df = d as f64;
    let denom = df * (df * df - 1.0);
    let m = linalg::axpby((df - p) / denom, &linalg::identity(d * d), (df * p - 1.0) / denom, &swap_matrix(d));
    DensityMatrix::bipartite(m, d, d)
}

/// The five product vectors of the "tiles" unextendible product basis in 3⊗3.
pub fn tiles_vectors() -> Vec<Vec<c64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let e = |i: usize| {
        let mut v = vec![c(0.0); 3];
        v[i] = c(1.0);
        v
    };
    let diff = |i: usize, j: usize| {
        let mut v = vec![c(0.0); 3];
        v[i] = c(s);
        v[j] = c(-s);
        v
    };
    let uni = vec![c(1.0 / 3f64.sqrt()); 3];
    let prod = |a: &[c64], b: &[c64]| -> Vec<c64> {
        let mut v = Vec::with_capacity(9);
        for x in a {
            for y in b {
                v.push(*x * *y);
            }
        }
        v
    };
    vec![
        prod(&e(0), &diff(0, 1)),
        prod(&diff(0, 1), &e(2)),
        prod(&e(2), &diff(1, 2)),
        prod(&diff(1, 2), &e(0)),
        prod(&uni, &uni),
    ]
}

/// `(I − Σ_k |ψ_k⟩⟨ψ_k|)/4` for the tiles UPB: a PPT entangled two-qutrit state of rank 4.
pub fn tiles_upb() -> DensityMatrix {
    let mut m = linalg::identity(9);
    for v in tiles_vectors() {
        m = linalg::axpby(1.0, &m, -1.0, &linalg::projector(&v));
    }
    DensityMatrix::bipartite(linalg::scale(&m, 0.25), 3, 3).expect("tiles state is valid")
}

/// Ginibre matrix with `rank` columns.
fn ginibre<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> CMat {
    Mat::from_fn(n, rank, |_, _| rng::complex_normal(rng))
}

/// Hilbert–Schmidt random state (`rank = None` means full rank).
pub fn random_density_with<R: Rng + ?Sized>(
    dims: &[usize],
    cut: Option<Vec<usize>>,
    rank: Option<usize>,
    rng: &mut R,
) -> Result<DensityMatrix> {
    let n: usize = dims.iter().product();
    let g = ginibre(n, rank.unwrap_or(n).max(1), rng);
    let m = &g * g.adjoint();
    DensityMatrix::from_unnormalized(m, dims.to_vec(), cut)
}

pub fn random_density(d: usize, seed: u64) -> Result<DensityMatrix> {
    random_density_with(&[d], None, None, &mut rng::from_seed(seed))
}

/// Haar-random unit vector as a state vector.
pub fn random_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<c64> {
    loop {
        let v: Vec<c64> = (0..n).map(|_| rng::complex_normal(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

pub fn random_pure_with<R: Rng + ?Sized>(dims: &[usize], cut: Option<Vec<usize>>, rng: &mut R) -> Result<DensityMatrix> {
    let n: usize = dims.iter().product();
    DensityMatrix::new(linalg::projector(&random_vector(n, rng)), dims.to_vec(), cut)
}

pub fn random_pure(d: usize, seed: u64) -> Result<DensityMatrix> {
    random_pure_with(&[d], None, &mut rng::from_seed(seed))
}

/// Haar unitary: Gram–Schmidt on a Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let mut cols: Vec<Vec<c64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<c64> = (0..d).map(|_| rng::complex_normal(rng)).collect();
        for _ in 0..2 {
            for q in &cols {
                let ov: c64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= ov * y;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    Mat::from_fn(d, d, |i, j| cols[j][i])
}

/// `U_1 ⊗ U_2 ⊗ ...` with independent Haar factors.
pub fn random_local_unitary_with<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> CMat {
    let us: Vec<CMat> = dims.iter().map(|&d| haar_unitary(d, rng)).collect();
    let refs: Vec<&CMat> = us.iter().collect();
    linalg::kron_all(&refs)
}

pub fn random_local_unitary(dims: &[usize], seed: u64) -> CMat {
    random_local_unitary_with(dims, &mut rng::from_seed(seed))
}

/// `U ρ U†` keeping the layout.
pub fn conjugate(rho: &DensityMatrix, u: &CMat) -> DensityMatrix {
    rho.same_layout(linalg::hermitian_part(&(u * rho.matrix() * u.adjoint())))
}

/// Smallest `t` making `(1−t)ρ + t·I/n` PPT. Exact, since the partial
/// transpose of the identity is the identity.
pub fn ppt_mixing_threshold(rho: &DensityMatrix) -> Result<f64> {
    let lam = linalg::min_eigenvalue(&rho.partial_transpose()?)?;
    if lam >= 0.0 {
        return Ok(0.0);
    }
    let inv_n = 1.0 / rho.dim() as f64;
    Ok(-lam / (inv_n - lam))
}

/// Random PPT state: Hilbert–Schmidt sample, accepted if PPT, for up to
/// `attempts` draws; otherwise the last draw is mixed with white noise just
/// past the PPT threshold.
pub fn random_ppt_with<R: Rng + ?Sized>(
    dims: &[usize],
    cut: Vec<usize>,
    attempts: usize,
    rng: &mut R,
) -> Result<DensityMatrix> {
    let mut last = None;
    for _ in 0..attempts.max(1) {
        let rho = random_density_with(dims, Some(cut.clone()), None, rng)?;
        if linalg::min_eigenvalue(&rho.partial_transpose()?)? >= 0.0 {
            return Ok(rho);
        }
        last = Some(rho);
    }
    let rho = last.expect("at least one draw");
    let t = ppt_mixing_threshold(&rho)?;
    let t = t + (1.0 - t) * 1e-6;
    let mixed = DensityMatrix::maximally_mixed(dims.to_vec(), Some(cut))?;
    rho.mix(&mixed, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, herm_eigvals, partial_trace, trace_norm};

    #[test]
    fn phi2_entries() {
        let phi = max_entangled(2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if (i == 0 || i == 3) && (j == 0 || j == 3) { 0.5 } else { 0.0 };
                assert!((phi.matrix()[(i, j)] - c(expect)).norm() < 1e-15);
            }
        }
        assert!((phi.purity() - 1.0).abs() < 1e-14);
        for d in 2..5 {
            let red = partial_trace(max_entangled(d).unwrap().matrix(), &[d, d], &[0]).unwrap();
            let diff = linalg::axpby(1.0, &red, -1.0 / d as f64, &linalg::identity(d));
            assert!(frobenius(&diff) < 1e-14);
        }
        assert!(max_entangled(1).is_err());
    }

    #[test]
    fn plus_state_dephases_to_mixed() {
        let p = plus_state();
        assert!((p.purity() - 1.0).abs() < 1e-15);
        assert!((p.matrix()[(0, 1)] - c(0.5)).norm() == 0.0);
    }

    #[test]
    fn isotropic_endpoints_and_ppt_threshold() {
        let a = isotropic(2, 1.0).unwrap();
        assert!(frobenius(&linalg::axpby(1.0, a.matrix(), -1.0, &phi_matrix(2))) < 1e-15);
        let b = isotropic(2, 0.25).unwrap();
        assert!(frobenius(&linalg::axpby(1.0, b.matrix(), -0.25, &linalg::identity(4))) < 1e-15);
        // bisection on the partial-transpose spectrum
        for d in 2..5 {
            let min_pt = |p: f64| linalg::min_eigenvalue(&isotropic(d, p).unwrap().partial_transpose().unwrap()).unwrap();
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if min_pt(mid) >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!((lo - 1.0 / d as f64).abs() < 1e-9, "d={d}: {lo}");
        }
        assert!(isotropic(2, 1.5).is_err());
    }

    #[test]
    fn werner_parameter_is_swap_expectation() {
        for d in 2..4 {
            for p in [-1.0, -0.3, 0.0, 0.5, 1.0] {
                let w = werner(d, p).unwrap();
                let tr = linalg::trace(&(w.matrix() * swap_matrix(d))).re;
                assert!((tr - p).abs() < 1e-13);
                let ppt = linalg::min_eigenvalue(&w.partial_transpose().unwrap()).unwrap() >= -1e-12;
                assert_eq!(ppt, p >= 0.0, "d={d} p={p}");
            }
        }
        assert!(werner(2, -1.5).is_err());
    }

    #[test]
    fn twirl_invariance() {
        let mut rng = rng::from_seed(99);
        for _ in 0..20 {
            let u = haar_unitary(3, &mut rng);
            let uu = linalg::kron(&u, &u);
            let uuc = linalg::kron(&u, &Mat::from_fn(3, 3, |i, j| u[(i, j)].conj()));
            let w = werner(3, 0.3).unwrap();
            let iso = isotropic(3, 0.6).unwrap();
            let dw = frobenius(&linalg::axpby(1.0, conjugate(&w, &uu).matrix(), -1.0, w.matrix()));
            let di = frobenius(&linalg::axpby(1.0, conjugate(&iso, &uuc).matrix(), -1.0, iso.matrix()));
            assert!(dw < 1e-9 && di < 1e-9);
        }
    }

    fn realign(m: &CMat, d: usize) -> CMat {
        Mat::from_fn(d * d, d * d, |r, col| {
            let (i, j) = (r / d, r % d);
            let (k, l) = (col / d, col % d);
            m[(i * d + k, j * d + l)]
        })
    }

    #[test]
    fn tiles_is_ppt_rank_four_and_realignment_detects_it() {
        let t = tiles_upb();
        let ev = herm_eigvals(t.matrix()).unwrap();
        assert_eq!(ev.iter().filter(|&&v| v > 1e-10).count(), 4);
        assert!(herm_eigvals(&t.partial_transpose().unwrap()).unwrap()[0] >= -1e-10);
        // product vectors are mutually orthogonal
        let vs = tiles_vectors();
        for a in 0..5 {
            for b in 0..5 {
                let ov: c64 = vs[a].iter().zip(&vs[b]).map(|(x, y)| x.conj() * y).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ov - c(expect)).norm() < 1e-14);
            }
        }
        let r = trace_norm(&realign(t.matrix(), 3)).unwrap();
        assert!(r > 1.0, "realignment norm {r}");
    }

    #[test]
    fn random_states_valid_and_deterministic() {
        for seed in 0..10 {
            let a = random_density(4, seed).unwrap();
            let b = random_density(4, seed).unwrap();
            assert!((linalg::trace(a.matrix()).re - 1.0).abs() < 1e-12);
            assert!(herm_eigvals(a.matrix()).unwrap()[0] >= -1e-12);
            for i in 0..4 {
                for j in 0..4 {
                    assert_eq!(a.matrix()[(i, j)], b.matrix()[(i, j)]);
                }
            }
            let p = random_pure(3, seed).unwrap();
            assert!((p.purity() - 1.0).abs() < 1e-12);
        }
        let low = random_density_with(&[2, 2], Some(vec![0]), Some(2), &mut rng::from_seed(1)).unwrap();
        assert_eq!(low.rank(1e-10).unwrap(), 2);
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let u = random_local_unitary(&[2, 3], 4);
        let uu = u.adjoint() * &u;
        assert!(frobenius(&linalg::axpby(1.0, &uu, -1.0, &linalg::identity(6))) < 1e-12);
    }

    #[test]
    fn random_ppt_is_ppt() {
        let mut rng = rng::from_seed(5);
        for _ in 0..20 {
            let s = random_ppt_with(&[2, 3], vec![0], 3, &mut rng).unwrap();
            assert!(herm_eigvals(&s.partial_transpose().unwrap()).unwrap()[0] >= -1e-12);
        }
    }

    #[test]
    fn marginal_tensor_permute_layouts() {
        let a = random_density_with(&[2, 3], Some(vec![0]), None, &mut rng::from_seed(1)).unwrap();
        let b = random_density_with(&[2, 2], Some(vec![0]), None, &mut rng::from_seed(2)).unwrap();
        let ab = a.tensor(&b);
        assert_eq!(ab.dims(), &[2, 3, 2, 2]);
        assert_eq!(ab.cut(), Some(&[0, 2][..]));
        let m = ab.marginal(&[0, 1]).unwrap();
        assert!(frobenius(&linalg::axpby(1.0, m.matrix(), -1.0, a.matrix())) < 1e-12);
        assert_eq!(m.cut(), Some(&[0][..]));
        let p = ab.permute(&[0, 2, 1, 3]).unwrap();
        assert_eq!(p.dims(), &[2, 2, 3, 2]);
        assert_eq!(p.cut(), Some(&[0, 1][..]));
        assert_eq!(p.cut_dims().unwrap(), (4, 6));
        assert!(DensityMatrix::new(linalg::identity(2), vec![2], None).is_err());
        assert!(DensityMatrix::new(linalg::diag_real(&[1.5, -0.5]), vec![2], None).is_err());
    }
}
