//! Dense complex Hermitian linear algebra.
//!
//! Everything works on [`CMat`], a column-major `faer` matrix of `c64`
//! entries. Subsystem bookkeeping (partial traces, partial transposes,
//! subsystem permutations) uses the row-major tensor convention: for
//! `dims = [d0, d1, ...]` the first factor is the most significant digit of
//! the flat index.

use faer::{c64, Mat, Side};
use thiserror::Error;

pub type CMat = Mat<c64>;

/// Hermitian inputs whose asymmetry exceeds this are symmetrized with a warning.
pub const HERMITICITY_WARN: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("eigensolver did not converge")]
    NoConvergence,
    #[error("matrix function domain violation: {0}")]
    Domain(String),
    #[error("matrix is singular (min eigenvalue {0:e})")]
    Singular(f64),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Scalar functions applied eigenvalue-wise by [`matrix_fn`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFn {
    Log2,
    Exp2,
    XLog2X,
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermEig {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// `U f(Λ) U†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let scaled = Mat::from_fn(n, n, |i, j| self.vectors[(i, j)] * f(self.values[j]));
        &scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMat {
        self.reconstruct_with(|x| x)
    }
}

pub fn zeros(n: usize) -> CMat {
    Mat::zeros(n, n)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn diag_real(values: &[f64]) -> CMat {
    let n = values.len();
    Mat::from_fn(n, n, |i, j| if i == j { c64::new(values[i], 0.0) } else { c64::new(0.0, 0.0) })
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint().to_owned()
}

pub fn transpose(m: &CMat) -> CMat {
    m.transpose().to_owned()
}

pub fn scale(m: &CMat, s: f64) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

/// `a·x + b·y` for matrices of equal shape.
pub fn axpby(a: f64, x: &CMat, b: f64, y: &CMat) -> CMat {
    Mat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * a + y[(i, j)] * b)
}

pub fn trace(m: &CMat) -> c64 {
    let mut t = c64::new(0.0, 0.0);
    for i in 0..m.nrows().min(m.ncols()) {
        t += m[(i, i)];
    }
    t
}

/// `Re Tr[a† b]`, the real Frobenius inner product.
pub fn inner(a: &CMat, b: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let x = a[(i, j)];
            let y = b[(i, j)];
            s += x.re * y.re + x.im * y.im;
        }
    }
    s
}

pub fn frobenius(m: &CMat) -> f64 {
    inner(m, m).sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

/// `max_ij |M_ij − conj(M_ji)|`.
pub fn max_asymmetry(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.nrows() == m.ncols() && max_asymmetry(m) <= tol * max_abs(m).max(1.0)
}

/// `(M + M†)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

fn ensure_square(m: &CMat) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized first.
pub fn herm_eig(m: &CMat) -> Result<HermEig> {
    let n = ensure_square(m)?;
    if n == 0 {
        return Ok(HermEig { values: vec![], vectors: zeros(0) });
    }
    let asym = max_asymmetry(m);
    if asym > HERMITICITY_WARN * max_abs(m).max(1.0) {
        log::warn!("symmetrizing input with asymmetry {asym:e}");
    }
    let h = hermitian_part(m);
    let evd = h.self_adjoint_eigen(Side::Lower).map_err(|_| LinalgError::NoConvergence)?;
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NoConvergence);
    }
    Ok(HermEig { values, vectors: evd.U().to_owned() })
}

/// Eigenvalues only, ascending.
pub fn herm_eigvals(m: &CMat) -> Result<Vec<f64>> {
    let n = ensure_square(m)?;
    if n == 0 {
        return Ok(vec![]);
    }
    let h = hermitian_part(m);
    let mut v: Vec<f64> = h
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| LinalgError::NoConvergence)?
        .into_iter()
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(v)
}

pub fn min_eigenvalue(m: &CMat) -> Result<f64> {
    Ok(herm_eigvals(m)?[0])
}

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Applies `f` eigenvalue-wise to a Hermitian matrix.
pub fn matrix_fn(m: &CMat, f: MatrixFn) -> Result<CMat> {
    let eig = herm_eig(m)?;
    match f {
        MatrixFn::Log2 => {
            if eig.min() <= 0.0 {
                return Err(LinalgError::Domain(format!("log2 of eigenvalue {:e}", eig.min())));
            }
            Ok(eig.reconstruct_with(f64::log2))
        }
        MatrixFn::Exp2 => Ok(eig.reconstruct_with(f64::exp2)),
        MatrixFn::XLog2X => {
            if eig.min() < -1e-10 {
                return Err(LinalgError::Domain(format!("xlog2x of eigenvalue {:e}", eig.min())));
            }
            Ok(eig.reconstruct_with(xlog2x))
        }
    }
}

/// First divided difference of `log2` at `(a, b)`, both positive.
fn log2_divided_difference(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    let delta = hi - lo;
    if delta <= 1e-13 * hi {
        // derivative at the midpoint
        2.0 / ((hi + lo) * std::f64::consts::LN_2)
    } else {
        (delta / lo).ln_1p() / (delta * std::f64::consts::LN_2)
    }
}

/// Fréchet gradient `G` of `σ ↦ Tr[ρ log2 σ]`, so that
/// `Tr[G Δ] = d/dt Tr[ρ log2(σ + tΔ)]` at `t = 0`.
pub fn log_gradient(rho: &CMat, sigma: &CMat) -> Result<CMat> {
    let n = ensure_square(sigma)?;
    if rho.nrows() != n || rho.ncols() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "rho is {}x{}, sigma is {n}x{n}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let eig = herm_eig(sigma)?;
    if eig.min() <= 1e-12 {
        return Err(LinalgError::Singular(eig.min()));
    }
    log_gradient_in_basis(rho, &eig)
}

/// [`log_gradient`] with a precomputed eigendecomposition of `σ`.
pub fn log_gradient_in_basis(rho: &CMat, sigma_eig: &HermEig) -> Result<CMat> {
    let u = &sigma_eig.vectors;
    let lam = &sigma_eig.values;
    let n = lam.len();
    let rho_rot = u.adjoint() * rho * u;
    let g_rot = Mat::from_fn(n, n, |i, j| rho_rot[(i, j)] * log2_divided_difference(lam[i], lam[j]));
    Ok(hermitian_part(&(u * &g_rot * u.adjoint())))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn kron_all(parts: &[&CMat]) -> CMat {
    let mut acc = identity(1);
    for p in parts {
        acc = kron(&acc, p);
    }
    acc
}

fn check_dims(m: &CMat, dims: &[usize]) -> Result<usize> {
    let n = ensure_square(m)?;
    let prod: usize = dims.iter().product();
    if prod != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "dims {dims:?} (product {prod}) vs matrix size {n}"
        )));
    }
    Ok(n)
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Splits every flat index into its contribution from the subsystems in
/// `mask` and from the rest, as flat offsets in the original index space.
fn split_offsets(dims: &[usize], mask: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let n: usize = dims.iter().product();
    let st = strides(dims);
    let mut inside = vec![0usize; n];
    let mut outside = vec![0usize; n];
    for idx in 0..n {
        let mut rem = idx;
        for k in 0..dims.len() {
            let digit = rem / st[k];
            rem %= st[k];
            if mask[k] {
                inside[idx] += digit * st[k];
            } else {
                outside[idx] += digit * st[k];
            }
        }
    }
    (inside, outside)
}

fn subsystem_mask(dims: &[usize], systems: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; dims.len()];
    for &s in systems {
        if s >= dims.len() {
            return Err(LinalgError::DimensionMismatch(format!(
                "subsystem {s} out of range for {} factors",
                dims.len()
            )));
        }
        mask[s] = true;
    }
    Ok(mask)
}

/// Traces out every subsystem not listed in `keep`. Kept factors stay in
/// their original relative order.
pub fn partial_trace(m: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    check_dims(m, dims)?;
    let mask = subsystem_mask(dims, keep)?;
    let kept_dims: Vec<usize> = dims.iter().zip(&mask).filter(|(_, &k)| k).map(|(&d, _)| d).collect();
    let traced_dims: Vec<usize> = dims.iter().zip(&mask).filter(|(_, &k)| !k).map(|(&d, _)| d).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();
    // groups[t][a] = flat index with traced digits t and kept digits a
    let st = strides(dims);
    let mut groups = vec![vec![0usize; dk]; dt];
    let n = m.nrows();
    for idx in 0..n {
        let mut rem = idx;
        let (mut a, mut t) = (0usize, 0usize);
        for k in 0..dims.len() {
            let digit = rem / st[k];
            rem %= st[k];
            if mask[k] {
                a = a * dims[k] + digit;
            } else {
                t = t * dims[k] + digit;
            }
        }
        groups[t][a] = idx;
    }
    let mut out = zeros(dk);
    for g in &groups {
        for b in 0..dk {
            let col = g[b];
            for a in 0..dk {
                out[(a, b)] += m[(g[a], col)];
            }
        }
    }
    Ok(out)
}

/// Partial transpose over the listed subsystems.
pub fn partial_transpose(m: &CMat, dims: &[usize], systems: &[usize]) -> Result<CMat> {
    let n = check_dims(m, dims)?;
    let mask = subsystem_mask(dims, systems)?;
    let (inside, outside) = split_offsets(dims, &mask);
    let mut out = zeros(n);
    for j in 0..n {
        for i in 0..n {
            let ii = outside[i] + inside[j];
            let jj = outside[j] + inside[i];
            out[(ii, jj)] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Reorders tensor factors: factor `k` of the result is factor `perm[k]` of
/// the input.
pub fn permute_subsystems(m: &CMat, dims: &[usize], perm: &[usize]) -> Result<CMat> {
    let n = check_dims(m, dims)?;
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() || perm.iter().any(|&p| p >= dims.len() || std::mem::replace(&mut seen[p], true)) {
        return Err(LinalgError::DimensionMismatch(format!("{perm:?} is not a permutation of {} factors", dims.len())));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let old_st = strides(dims);
    let new_st = strides(&new_dims);
    let map: Vec<usize> = (0..n)
        .map(|new_idx| {
            let mut rem = new_idx;
            let mut old = 0;
            for k in 0..perm.len() {
                let digit = rem / new_st[k];
                rem %= new_st[k];
                old += digit * old_st[perm[k]];
            }
            old
        })
        .collect();
    Ok(Mat::from_fn(n, n, |i, j| m[(map[i], map[j])]))
}

/// Columns of a `rows × cols` complex matrix read from interleaved
/// `(re, im)` pairs in column-major order and orthonormalized by modified
/// Gram–Schmidt. `None` if the columns are numerically dependent.
pub fn isometry_from_params(params: &[f64], rows: usize, cols: usize) -> Option<CMat> {
    assert_eq!(params.len(), 2 * rows * cols, "parameter count");
    let mut v = Mat::from_fn(rows, cols, |i, k| c64::new(params[2 * (k * rows + i)], params[2 * (k * rows + i) + 1]));
    for k in 0..cols {
        for j in 0..k {
            let mut proj = c64::new(0.0, 0.0);
            for i in 0..rows {
                proj += v[(i, j)].conj() * v[(i, k)];
            }
            for i in 0..rows {
                let z = v[(i, j)] * proj;
                v[(i, k)] -= z;
            }
        }
        let norm = (0..rows).map(|i| v[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 1e-12) {
            return None;
        }
        for i in 0..rows {
            v[(i, k)] /= norm;
        }
    }
    Some(v)
}

/// Sum of singular values.
pub fn trace_norm(m: &CMat) -> Result<f64> {
    ensure_square(m)?;
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    if max_asymmetry(m) <= 1e-14 * max_abs(m).max(1.0) {
        return Ok(herm_eigvals(m)?.iter().map(|x| x.abs()).sum());
    }
    let sv = m.singular_values().map_err(|_| LinalgError::NoConvergence)?;
    Ok(sv.iter().sum())
}

/// Frobenius-nearest positive semidefinite matrix (eigenvalue clipping).
pub fn psd_clip(m: &CMat) -> Result<CMat> {
    let eig = herm_eig(m)?;
    if eig.min() >= 0.0 {
        return Ok(hermitian_part(m));
    }
    Ok(eig.reconstruct_with(|x| x.max(0.0)))
}

/// Column vector as a rank-one projector `|v⟩⟨v|`.
pub fn projector(v: &[c64]) -> CMat {
    let n = v.len();
    Mat::from_fn(n, n, |i, j| v[i] * v[j].conj())
}

/// Serde adapter: `{"rows", "cols", "data": [[re, im], ...]}`, row-major.
pub mod cmat_serde {
    use super::CMat;
    use faer::{c64, Mat};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Dense {
        rows: usize,
        cols: usize,
        data: Vec<[f64; 2]>,
    }

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        Dense { rows: m.nrows(), cols: m.ncols(), data }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let dense = Dense::deserialize(d)?;
        if dense.data.len() != dense.rows * dense.cols {
            return Err(serde::de::Error::custom(format!("{} entries for {}x{}", dense.data.len(), dense.rows, dense.cols)));
        }
        Ok(Mat::from_fn(dense.rows, dense.cols, |i, j| {
            let [re, im] = dense.data[i * dense.cols + j];
            c64::new(re, im)
        }))
    }

    pub mod vec {
        use super::*;

        struct W<'a>(&'a CMat);
        impl Serialize for W<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                super::serialize(self.0, s)
            }
        }

        pub fn serialize<S: Serializer>(m: &[CMat], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(m.iter().map(W))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMat>, D::Error> {
            #[derive(Deserialize)]
            struct V(#[serde(with = "super")] CMat);
            Ok(Vec::<V>::deserialize(d)?.into_iter().map(|v| v.0).collect())
        }
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(m: &Option<CMat>, s: S) -> Result<S::Ok, S::Error> {
            struct W<'a>(&'a CMat);
            impl Serialize for W<'_> {
                fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                    super::serialize(self.0, s)
                }
            }
            m.as_ref().map(W).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<CMat>, D::Error> {
            #[derive(Deserialize)]
            struct W(#[serde(with = "super")] CMat);
            Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let a = Mat::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        hermitian_part(&a)
    }

    fn random_pd(n: usize, seed: u64, floor: f64) -> CMat {
        let h = random_hermitian(n, seed);
        let g = &h * &h;
        let t = trace(&g).re;
        axpby(1.0 / t, &g, floor, &identity(n))
    }

    fn assert_close(a: &CMat, b: &CMat, tol: f64) {
        let d = frobenius(&axpby(1.0, a, -1.0, b));
        assert!(d <= tol, "distance {d:e} > {tol:e}");
    }

    #[test]
    fn eig_diagonal() {
        let e = herm_eig(&diag_real(&[1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0]);
        for i in 0..2 {
            assert!((e.vectors[(i, i)].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn eig_pauli_x() {
        let x = Mat::from_fn(2, 2, |i, j| if i != j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let e = herm_eig(&x).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // columns are Hadamard columns up to phase
        assert!((e.vectors[(0, 1)].norm() - s).abs() < 1e-14);
        assert!((e.vectors[(1, 1)] / e.vectors[(0, 1)] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((e.vectors[(1, 0)] / e.vectors[(0, 0)] + c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn eig_reconstruction_and_orthonormality() {
        let m = random_hermitian(6, 7);
        let e = herm_eig(&m).unwrap();
        assert!(frobenius(&axpby(1.0, &e.reconstruct(), -1.0, &m)) <= 1e-10 * frobenius(&m));
        let utu = e.vectors.adjoint() * &e.vectors;
        assert_close(&utu, &identity(6), 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eig_rejects_non_square() {
        let m: CMat = Mat::zeros(2, 3);
        assert!(matches!(herm_eig(&m), Err(LinalgError::NotSquare { .. })));
    }

    #[test]
    fn matrix_functions() {
        let half = scale(&identity(2), 0.5);
        assert_close(&matrix_fn(&half, MatrixFn::Log2).unwrap(), &scale(&identity(2), -1.0), 1e-14);
        assert_close(&matrix_fn(&diag_real(&[1.0, 4.0]), MatrixFn::Log2).unwrap(), &diag_real(&[0.0, 2.0]), 1e-14);
        assert_close(&matrix_fn(&half, MatrixFn::XLog2X).unwrap(), &scale(&identity(2), -0.5), 1e-14);
        assert_close(&matrix_fn(&diag_real(&[0.0, 1.0]), MatrixFn::Exp2).unwrap(), &diag_real(&[1.0, 2.0]), 1e-14);
        assert!(matches!(matrix_fn(&diag_real(&[0.0, 1.0]), MatrixFn::Log2), Err(LinalgError::Domain(_))));
        // 0 log 0 := 0
        assert_close(&matrix_fn(&diag_real(&[0.0, 1.0]), MatrixFn::XLog2X).unwrap(), &zeros(2), 1e-14);
    }

    #[test]
    fn log_gradient_commuting_cases() {
        let ln2 = std::f64::consts::LN_2;
        for d in 2..5 {
            let mixed = scale(&identity(d), 1.0 / d as f64);
            let g = log_gradient(&mixed, &mixed).unwrap();
            assert_close(&g, &scale(&identity(d), 1.0 / ln2), 1e-12);
        }
        let rho = diag_real(&[0.2, 0.3, 0.5]);
        let sigma = diag_real(&[0.5, 0.25, 0.25]);
        let g = log_gradient(&rho, &sigma).unwrap();
        assert_close(&g, &diag_real(&[0.4 / ln2, 1.2 / ln2, 2.0 / ln2]), 1e-12);
    }

    fn tr_rho_log_sigma(rho: &CMat, sigma: &CMat) -> f64 {
        trace(&(rho * matrix_fn(sigma, MatrixFn::Log2).unwrap())).re
    }

    #[test]
    fn log_gradient_matches_finite_differences() {
        for seed in 0..20u64 {
            let rho = random_pd(4, 3 + 100 * seed, 0.0);
            let sigma = random_pd(4, 1000 + seed, 0.05);
            let delta = random_hermitian(4, 5000 + seed);
            let g = log_gradient(&rho, &sigma).unwrap();
            let h = 1e-5;
            let fd = (tr_rho_log_sigma(&rho, &axpby(1.0, &sigma, h, &delta))
                - tr_rho_log_sigma(&rho, &axpby(1.0, &sigma, -h, &delta)))
                / (2.0 * h);
            assert!((inner(&g, &delta) - fd).abs() < 1e-6, "seed {seed}");
        }
    }

    #[test]
    fn log_gradient_rejects_singular() {
        let r = diag_real(&[0.5, 0.5]);
        assert!(matches!(log_gradient(&r, &diag_real(&[1.0, 0.0])), Err(LinalgError::Singular(_))));
    }

    fn phi2() -> CMat {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        projector(&[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)])
    }

    #[test]
    fn partial_trace_examples() {
        let red = partial_trace(&phi2(), &[2, 2], &[0]).unwrap();
        assert_close(&red, &scale(&identity(2), 0.5), 1e-15);
        let rho = random_pd(2, 1, 0.0);
        let tau = random_pd(3, 2, 0.0);
        let prod = kron(&rho, &tau);
        assert_close(&partial_trace(&prod, &[2, 3], &[0]).unwrap(), &rho, 1e-12);
        assert_close(&partial_trace(&prod, &[2, 3], &[1]).unwrap(), &tau, 1e-12);
        let tri = random_hermitian(12, 5);
        for keep in [vec![0], vec![1], vec![2], vec![0, 2], vec![1, 2], vec![]] {
            let r = partial_trace(&tri, &[2, 3, 2], &keep).unwrap();
            assert!((trace(&r) - trace(&tri)).norm() <= 1e-12);
        }
        assert!(partial_trace(&tri, &[2, 2], &[0]).is_err());
    }

    #[test]
    fn partial_trace_middle_factor() {
        let a = random_pd(2, 11, 0.0);
        let b = random_pd(3, 12, 0.0);
        let c_ = random_pd(2, 13, 0.0);
        let abc = kron_all(&[&a, &b, &c_]);
        assert_close(&partial_trace(&abc, &[2, 3, 2], &[0, 2]).unwrap(), &kron(&a, &c_), 1e-12);
        assert_close(&partial_trace(&abc, &[2, 3, 2], &[1]).unwrap(), &b, 1e-12);
    }

    #[test]
    fn partial_transpose_examples() {
        let pt = partial_transpose(&phi2(), &[2, 2], &[1]).unwrap();
        let ev = herm_eigvals(&pt).unwrap();
        let expect = [-0.5, 0.5, 0.5, 0.5];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        let rho = random_pd(2, 21, 0.0);
        let tau = random_pd(3, 22, 0.0);
        let lhs = partial_transpose(&kron(&rho, &tau), &[2, 3], &[1]).unwrap();
        assert_close(&lhs, &kron(&rho, &transpose(&tau)), 1e-15);
        let m = random_hermitian(9, 9);
        let twice = partial_transpose(&partial_transpose(&m, &[3, 3], &[1]).unwrap(), &[3, 3], &[1]).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(twice[(i, j)], m[(i, j)]);
            }
        }
    }

    #[test]
    fn permute_matches_kron_order() {
        let a = random_pd(2, 31, 0.0);
        let b = random_pd(3, 32, 0.0);
        let ab = kron(&a, &b);
        let ba = permute_subsystems(&ab, &[2, 3], &[1, 0]).unwrap();
        assert_close(&ba, &kron(&b, &a), 1e-15);
        assert!(permute_subsystems(&ab, &[2, 3], &[0, 0]).is_err());
    }

    #[test]
    fn norms() {
        assert!((trace_norm(&diag_real(&[1.0, -1.0])).unwrap() - 2.0).abs() < 1e-14);
        let r = random_pd(3, 41, 0.0);
        assert_eq!(trace_norm(&axpby(1.0, &r, -1.0, &r)).unwrap(), 0.0);
        let diff = axpby(1.0, &phi2(), -0.25, &identity(4));
        assert!((0.5 * trace_norm(&diff).unwrap() - 0.75).abs() < 1e-14);
        // non-Hermitian input goes through singular values
        let m = Mat::from_fn(2, 2, |i, j| if i == 0 && j == 1 { c(3.0, 0.0) } else { c(0.0, 0.0) });
        assert!((trace_norm(&m).unwrap() - 3.0).abs() < 1e-14);
        assert!((frobenius(&identity(4)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn psd_clip_examples() {
        assert_close(&psd_clip(&diag_real(&[1.0, -1.0])).unwrap(), &diag_real(&[1.0, 0.0]), 1e-15);
        let p = random_pd(4, 51, 0.0);
        assert_close(&psd_clip(&p).unwrap(), &p, 1e-15);
    }
}
