//! PPT cone membership, projections, and the linear minimization oracle over
//! PPT density matrices.

use faer::Mat;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, CMat, LinalgError};
use crate::states::{DensityMatrix, StateError};

#[derive(Debug, Error)]
pub enum ConeError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    State(#[from] StateError),
}

pub type Result<T> = std::result::Result<T, ConeError>;

/// Factor dimensions plus the factors transposed by "the" partial transpose.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PptSpace {
    pub dims: Vec<usize>,
    pub b_systems: Vec<usize>,
}

impl PptSpace {
    pub fn new(dims: Vec<usize>, b_systems: Vec<usize>) -> Self {
        Self { dims, b_systems }
    }

    pub fn of(rho: &DensityMatrix) -> Result<Self> {
        Ok(Self { dims: rho.dims().to_vec(), b_systems: rho.b_systems()? })
    }

    /// `d_A × d_B` with cut `{0}`.
    pub fn bipartite(da: usize, db: usize) -> Self {
        Self { dims: vec![da, db], b_systems: vec![1] }
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn gamma(&self, m: &CMat) -> CMat {
        linalg::partial_transpose(m, &self.dims, &self.b_systems).expect("matrix matches space")
    }

    pub fn min_pt_eigenvalue(&self, m: &CMat) -> Result<f64> {
        Ok(linalg::min_eigenvalue(&self.gamma(m))?)
    }
}

pub fn is_ppt(rho: &DensityMatrix, tol: f64) -> Result<bool> {
    Ok(linalg::min_eigenvalue(&rho.partial_transpose()?)? >= -tol)
}

/// Frobenius-nearest PSD matrix.
pub fn psd_project(h: &CMat) -> Result<CMat> {
    Ok(linalg::psd_clip(h)?)
}

/// Euclidean projection of a real vector onto the probability simplex.
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cumulative += x;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Frobenius-nearest density matrix (eigenvalues projected onto the simplex).
pub fn density_project(h: &CMat) -> Result<CMat> {
    let eig = linalg::herm_eig(h)?;
    let p = simplex_project(&eig.values);
    let n = p.len();
    let scaled = Mat::from_fn(n, n, |i, j| eig.vectors[(i, j)] * p[j]);
    Ok(linalg::hermitian_part(&(&scaled * eig.vectors.adjoint())))
}

/// Mixes a density matrix with `I/n` just enough to make it PPT:
/// `(X + cI)/(1 + nc)` with `c = max(0, −λ_min(X^Γ))`.
pub fn repair_ppt(x: &CMat, space: &PptSpace) -> Result<CMat> {
    let lam = space.min_pt_eigenvalue(x)?;
    if lam >= 0.0 {
        return Ok(x.clone());
    }
    let n = space.dim() as f64;
    let c = -lam;
    Ok(linalg::axpby(1.0 / (1.0 + n * c), x, c / (1.0 + n * c), &linalg::identity(space.dim())))
}

/// Density matrix (PSD, unit trace) made PPT; PSD clipping and trace
/// renormalization first.
pub fn repair_density_ppt(x: &CMat, space: &PptSpace) -> Result<CMat> {
    let p = psd_project(x)?;
    let tr = linalg::trace(&p).re;
    let n = space.dim();
    let p = if tr > 1e-300 { linalg::scale(&p, 1.0 / tr) } else { linalg::scale(&linalg::identity(n), 1.0 / n as f64) };
    repair_ppt(&p, space)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionResult {
    #[serde(skip)]
    pub point: CMat,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub residual_trace: Vec<f64>,
}

impl ProjectionResult {
    pub fn state(&self, layout: &DensityMatrix) -> DensityMatrix {
        layout.same_layout(self.point.clone())
    }
}

/// Dykstra alternating projections onto {density matrices} ∩ {X : X^Γ ⪰ 0}.
/// The returned point is made exactly feasible by [`repair_ppt`].
pub fn dykstra_ppt_density(h: &CMat, space: &PptSpace, max_iter: usize, tol: f64) -> Result<ProjectionResult> {
    let n = space.dim();
    let mut x = linalg::hermitian_part(h);
    let mut p = linalg::zeros(n);
    let mut q = linalg::zeros(n);
    let mut y = x.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let y_new = density_project(&linalg::axpby(1.0, &x, 1.0, &p))?;
        p = linalg::axpby(1.0, &linalg::axpby(1.0, &x, 1.0, &p), -1.0, &y_new);
        let shifted = linalg::axpby(1.0, &y_new, 1.0, &q);
        let x_new = space.gamma(&psd_project(&space.gamma(&shifted))?);
        q = linalg::axpby(1.0, &shifted, -1.0, &x_new);
        let residual = linalg::frobenius(&linalg::axpby(1.0, &y_new, -1.0, &x_new));
        let movement = linalg::frobenius(&linalg::axpby(1.0, &y_new, -1.0, &y));
        trace.push(residual);
        y = y_new;
        x = x_new;
        if residual <= tol && movement <= tol {
            converged = true;
            break;
        }
    }
    let point = repair_ppt(&y, space)?;
    let residual = *trace.last().unwrap_or(&0.0);
    Ok(ProjectionResult { point, iterations, residual, converged, residual_trace: trace })
}

#[derive(Debug, Clone, Copy)]
pub struct LmoOptions {
    /// Stop when primal and dual residuals are both below this.
    pub tol: f64,
    /// Or when the certified objective gap is below this.
    pub gap_tol: f64,
    pub max_iter: usize,
    pub penalty: f64,
}

impl Default for LmoOptions {
    fn default() -> Self {
        Self { tol: 1e-8, gap_tol: 1e-6, max_iter: 20_000, penalty: 1.0 }
    }
}

/// ADMM iterates kept between calls with related objectives.
#[derive(Debug, Clone)]
pub struct LmoWarmStart {
    s1: CMat,
    s2: CMat,
    u1: CMat,
    u2: CMat,
    penalty: f64,
}

#[derive(Debug, Clone)]
pub struct LmoResult {
    /// PPT density matrix (exactly feasible after repair).
    pub minimizer: CMat,
    /// `Tr[G · minimizer]`.
    pub objective: f64,
    /// Certified: no PPT density matrix has `Tr[Gσ]` below this.
    pub lower_bound: f64,
    /// `Z ⪰ 0` with `λ_min(G − Z^Γ) ≥ lower_bound`, for re-verification.
    pub dual_witness: CMat,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Dual certificate: for any `Z ⪰ 0`, `λ_min(G − Z^Γ)` bounds
/// `min Tr[Gσ]` over PPT density matrices from below.
pub fn lmo_dual_bound(g: &CMat, z: &CMat, space: &PptSpace) -> Result<f64> {
    let z_psd = psd_project(z)?;
    Ok(linalg::min_eigenvalue(&linalg::axpby(1.0, g, -1.0, &space.gamma(&z_psd)))?)
}

/// `min Tr[Gσ]` over PPT density matrices, by ADMM on the splitting
/// `σ = S₁`, `σ^Γ = S₂` with `S₁, S₂ ⪰ 0` and `Tr σ = 1` kept in the σ step.
pub fn lmo_ppt(g: &CMat, space: &PptSpace, opts: &LmoOptions, warm: Option<&mut LmoWarmStart>) -> Result<LmoResult> {
    let n = space.dim();
    let g = linalg::hermitian_part(g);
    let scale = linalg::frobenius(&g).max(1e-300);
    let gs = linalg::scale(&g, 1.0 / scale);
    let id = linalg::identity(n);
    let mixed = linalg::scale(&id, 1.0 / n as f64);

    let (mut s1, mut s2, mut u1, mut u2, mut r) = match &warm {
        Some(w) if w.s1.nrows() == n => (w.s1.clone(), w.s2.clone(), w.u1.clone(), w.u2.clone(), w.penalty),
        _ => (mixed.clone(), mixed.clone(), linalg::zeros(n), linalg::zeros(n), opts.penalty),
    };
    let mut x = mixed.clone();
    let mut best_lower = f64::NEG_INFINITY;
    let mut best_z = linalg::zeros(n);
    let (mut rp, mut rd) = (f64::INFINITY, f64::INFINITY);
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let a = linalg::axpby(1.0, &s1, -1.0, &u1);
        let b = space.gamma(&linalg::axpby(1.0, &s2, -1.0, &u2));
        let mut m = linalg::axpby(0.5, &a, 0.5, &b);
        m = linalg::axpby(1.0, &m, -0.5 / r, &gs);
        let shift = (1.0 - linalg::trace(&m).re) / n as f64;
        x = linalg::axpby(1.0, &m, shift, &id);
        let gx = space.gamma(&x);
        let s1_new = psd_project(&linalg::axpby(1.0, &x, 1.0, &u1))?;
        let s2_new = psd_project(&linalg::axpby(1.0, &gx, 1.0, &u2))?;
        let d1 = linalg::axpby(1.0, &s1_new, -1.0, &s1);
        let d2 = space.gamma(&linalg::axpby(1.0, &s2_new, -1.0, &s2));
        rd = r * linalg::frobenius(&linalg::axpby(1.0, &d1, 1.0, &d2));
        s1 = s1_new;
        s2 = s2_new;
        let e1 = linalg::axpby(1.0, &x, -1.0, &s1);
        let e2 = linalg::axpby(1.0, &gx, -1.0, &s2);
        rp = (linalg::inner(&e1, &e1) + linalg::inner(&e2, &e2)).sqrt();
        u1 = linalg::axpby(1.0, &u1, 1.0, &e1);
        u2 = linalg::axpby(1.0, &u2, 1.0, &e2);
        if rp <= opts.tol && rd <= opts.tol {
            converged = true;
            break;
        }
        if it % 25 == 24 {
            let lower = lmo_dual_bound(&gs, &linalg::scale(&u2, -r), space)?;
            if lower > best_lower {
                best_lower = lower;
                best_z = linalg::scale(&u2, -r);
            }
            let feasible = repair_density_ppt(&s1, space)?;
            if linalg::inner(&gs, &feasible) - best_lower <= opts.gap_tol / scale {
                converged = true;
                break;
            }
        }
        if rp > 10.0 * rd {
            r *= 2.0;
            u1 = linalg::scale(&u1, 0.5);
            u2 = linalg::scale(&u2, 0.5);
        } else if rd > 10.0 * rp {
            r *= 0.5;
            u1 = linalg::scale(&u1, 2.0);
            u2 = linalg::scale(&u2, 2.0);
        }
    }
    let lower = lmo_dual_bound(&gs, &linalg::scale(&u2, -r), space)?;
    if lower > best_lower {
        best_lower = lower;
        best_z = linalg::scale(&u2, -r);
    }
    // both the consensus point and the PSD block are candidates; keep the better
    let cand_a = repair_density_ppt(&s1, space)?;
    let cand_b = repair_density_ppt(&x, space)?;
    let (minimizer, obj_s) = {
        let oa = linalg::inner(&gs, &cand_a);
        let ob = linalg::inner(&gs, &cand_b);
        if oa <= ob {
            (cand_a, oa)
        } else {
            (cand_b, ob)
        }
    };
    if let Some(w) = warm {
        *w = LmoWarmStart { s1, s2, u1, u2, penalty: r };
    }
    Ok(LmoResult {
        objective: linalg::inner(&g, &minimizer),
        minimizer,
        lower_bound: (best_lower.min(obj_s)) * scale,
        dual_witness: linalg::scale(&psd_project(&best_z)?, scale),
        primal_residual: rp,
        dual_residual: rd,
        iterations,
        converged,
    })
}

/// Fresh warm-start slot for [`lmo_ppt`].
pub fn lmo_warm_start(n: usize) -> LmoWarmStart {
    let mixed = linalg::scale(&linalg::identity(n), 1.0 / n as f64);
    LmoWarmStart { s1: mixed.clone(), s2: mixed, u1: linalg::zeros(n), u2: linalg::zeros(n), penalty: 1.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::states::{self, isotropic, max_entangled, tiles_upb};

    #[test]
    fn membership_examples() {
        let prod = states::random_density(2, 1).unwrap().tensor(&states::random_density(2, 2).unwrap());
        let prod = prod.with_cut(vec![0]).unwrap();
        assert!(is_ppt(&prod, 1e-10).unwrap());
        let phi = max_entangled(2).unwrap();
        assert!(!is_ppt(&phi, 1e-10).unwrap());
        assert!((linalg::min_eigenvalue(&phi.partial_transpose().unwrap()).unwrap() + 0.5).abs() < 1e-14);
        assert!(is_ppt(&tiles_upb(), 1e-10).unwrap());
        assert!(is_ppt(&states::random_density(4, 1).unwrap(), 1e-10).is_err());
    }

    #[test]
    fn psd_projection_idempotent() {
        let mut r = rng::from_seed(3);
        for _ in 0..100 {
            let g = Mat::from_fn(4, 4, |_, _| rng::complex_normal(&mut r));
            let h = linalg::hermitian_part(&g);
            let p = psd_project(&h).unwrap();
            let pp = psd_project(&p).unwrap();
            assert!(linalg::frobenius(&linalg::axpby(1.0, &p, -1.0, &pp)) < 1e-12);
        }
        let d = psd_project(&linalg::diag_real(&[1.0, -1.0])).unwrap();
        assert!(linalg::frobenius(&linalg::axpby(1.0, &d, -1.0, &linalg::diag_real(&[1.0, 0.0]))) < 1e-15);
    }

    #[test]
    fn simplex_projection() {
        assert_eq!(simplex_project(&[0.5, 0.5]), vec![0.5, 0.5]);
        let p = simplex_project(&[2.0, 0.0, -1.0]);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
        let p = simplex_project(&[0.3, 0.3, 0.1]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dykstra_fixed_point_and_isotropic_oracle() {
        let space = PptSpace::bipartite(2, 2);
        let sep = isotropic(2, 0.4).unwrap();
        let res = dykstra_ppt_density(sep.matrix(), &space, 20_000, 1e-12).unwrap();
        assert!(linalg::frobenius(&linalg::axpby(1.0, &res.point, -1.0, sep.matrix())) <= 1e-10);

        let phi = max_entangled(2).unwrap();
        let res = dykstra_ppt_density(phi.matrix(), &space, 20_000, 1e-12).unwrap();
        assert!(space.min_pt_eigenvalue(&res.point).unwrap() >= -1e-12);

        // isotropic input: projection stays on the isotropic line, at the PPT boundary p = 1/2
        let iso = isotropic(2, 0.9).unwrap();
        let res = dykstra_ppt_density(iso.matrix(), &space, 20_000, 1e-12).unwrap();
        let p = linalg::inner(&states::phi_matrix(2), &res.point);
        assert!((p - 0.5).abs() < 1e-4, "overlap {p}");
        let target = isotropic(2, p).unwrap();
        assert!(linalg::frobenius(&linalg::axpby(1.0, &res.point, -1.0, target.matrix())) < 1e-4);
        let tr = &res.residual_trace;
        let burn = tr.len() / 10;
        for w in tr[burn..].windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-6) + 1e-14);
        }
    }

    #[test]
    fn lmo_examples() {
        let opts = LmoOptions::default();
        let space = PptSpace::bipartite(2, 2);
        let r = lmo_ppt(&linalg::identity(4), &space, &opts, None).unwrap();
        assert!((r.objective - 1.0).abs() < 1e-9);
        assert!((linalg::trace(&r.minimizer).re - 1.0).abs() < 1e-12);
        for d in 2..4 {
            let space = PptSpace::bipartite(d, d);
            let g = linalg::scale(&states::phi_matrix(d), -1.0);
            let r = lmo_ppt(&g, &space, &opts, None).unwrap();
            let expect = -1.0 / d as f64;
            assert!((r.objective - expect).abs() < 1e-5, "d={d}: {}", r.objective);
            assert!(r.lower_bound <= expect + 1e-12 && r.lower_bound >= expect - 1e-5);
            assert!(space.min_pt_eigenvalue(&r.minimizer).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn lmo_beats_random_feasible_points() {
        let opts = LmoOptions::default();
        let mut r = rng::from_seed(17);
        for (da, db) in [(2, 2), (2, 3)] {
            let space = PptSpace::bipartite(da, db);
            let n = da * db;
            for _ in 0..20 {
                let g = linalg::hermitian_part(&Mat::from_fn(n, n, |_, _| rng::complex_normal(&mut r)));
                let res = lmo_ppt(&g, &space, &opts, None).unwrap();
                assert!(res.lower_bound <= res.objective + 1e-12);
                assert!(space.min_pt_eigenvalue(&res.minimizer).unwrap() >= -1e-12);
                for _ in 0..50 {
                    let s = states::random_ppt_with(&[da, db], vec![0], 5, &mut r).unwrap();
                    assert!(res.objective <= linalg::inner(&g, s.matrix()) + 1e-5);
                }
            }
        }
    }
}
