//! Conic programs over Hermitian matrix variables, solved by ADMM.
//!
//! ```text
//! minimize   Σ_v Re Tr[C_v X_v]
//! subject to Σ_v a_cv T_c(X_v) + O_c ⪰ 0      for every cone c
//!            Σ_v E_ev(X_v) = B_e              for every equality e
//! ```
//!
//! `T_c` is the identity or a partial transpose. Both are orthogonal and
//! self-adjoint, so the x-update is a least-squares problem whose normal
//! matrix is a small scalar matrix `Q` over the variables; the equality
//! system `E Q⁻¹ E†` is factored once with a pivoted Cholesky.
//!
//! Two certificates are computed from an iterate, both independent of how
//! the iterate was produced:
//! * a dual bound `−Σ⟨S_c, O_c⟩ − ⟨y, B⟩ − ‖R‖·r` on the optimum, valid for
//!   any `S_c ⪰ 0` and `y` when every feasible point has norm at most `r`;
//! * a primal feasible value, from the segment between the iterate and a
//!   supplied interior point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, cmat_serde, CMat, LinalgError};

#[derive(Debug, Error)]
pub enum SdpError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("malformed problem: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, SdpError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Transform {
    Identity,
    PartialTranspose { dims: Vec<usize>, systems: Vec<usize> },
}

impl Transform {
    fn apply(&self, m: &CMat) -> CMat {
        match self {
            Transform::Identity => m.clone(),
            Transform::PartialTranspose { dims, systems } => {
                linalg::partial_transpose(m, dims, systems).expect("dimensions validated")
            }
        }
    }
}

/// `Σ_v a_v T(X_v) + offset ⪰ 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsdCone {
    pub name: String,
    pub transform: Transform,
    pub terms: Vec<(usize, f64)>,
    #[serde(with = "cmat_serde::option")]
    pub offset: Option<CMat>,
}

/// Linear maps from `(p·q)`-dimensional Hermitian matrices, the left factor
/// of dimension `p` and the right of dimension `q`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum LinearMap {
    /// `X ↦ Tr_right X`.
    TraceRight { left: usize, right: usize },
    /// `X ↦ Tr_left[(W ⊗ I) X]` for Hermitian `W`.
    ContractLeft {
        #[serde(with = "cmat_serde")]
        weight: CMat,
        right: usize,
    },
    /// `X ↦ Y − Tr[Y]·τ` with `Y` the contraction above.
    ContractLeftCentered {
        #[serde(with = "cmat_serde")]
        weight: CMat,
        #[serde(with = "cmat_serde")]
        tau: CMat,
        right: usize,
    },
}

impl LinearMap {
    pub fn in_dim(&self) -> usize {
        match self {
            LinearMap::TraceRight { left, right } => left * right,
            LinearMap::ContractLeft { weight, right } | LinearMap::ContractLeftCentered { weight, right, .. } => {
                weight.nrows() * right
            }
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            LinearMap::TraceRight { left, .. } => *left,
            LinearMap::ContractLeft { right, .. } | LinearMap::ContractLeftCentered { right, .. } => *right,
        }
    }

    fn contract(weight: &CMat, right: usize, x: &CMat) -> CMat {
        let p = weight.nrows();
        let q = right;
        let mut out = linalg::zeros(q);
        for a in 0..p {
            for b in 0..p {
                let w = weight[(a, b)];
                if w.re == 0.0 && w.im == 0.0 {
                    continue;
                }
                for j in 0..q {
                    for i in 0..q {
                        out[(i, j)] += w * x[(b * q + i, a * q + j)];
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        match self {
            LinearMap::TraceRight { left, right } => {
                let (p, q) = (*left, *right);
                let mut out = linalg::zeros(p);
                for b in 0..p {
                    for a in 0..p {
                        let mut acc = faer::c64::new(0.0, 0.0);
                        for k in 0..q {
                            acc += x[(a * q + k, b * q + k)];
                        }
                        out[(a, b)] = acc;
                    }
                }
                out
            }
            LinearMap::ContractLeft { weight, right } => Self::contract(weight, *right, x),
            LinearMap::ContractLeftCentered { weight, tau, right } => {
                let y = Self::contract(weight, *right, x);
                let t = linalg::trace(&y).re;
                linalg::axpby(1.0, &y, -t, tau)
            }
        }
    }

    pub fn adjoint(&self, y: &CMat) -> CMat {
        match self {
            LinearMap::TraceRight { right, .. } => linalg::kron(y, &linalg::identity(*right)),
            LinearMap::ContractLeft { weight, .. } => linalg::kron(weight, y),
            LinearMap::ContractLeftCentered { weight, tau, right } => {
                let c = linalg::inner(tau, y);
                linalg::kron(weight, &linalg::axpby(1.0, y, -c, &linalg::identity(*right)))
            }
        }
    }
}

/// `Σ_v E_v(X_v) = rhs`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Equality {
    pub name: String,
    pub terms: Vec<(usize, LinearMap)>,
    #[serde(with = "cmat_serde")]
    pub rhs: CMat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpProblem {
    pub var_dims: Vec<usize>,
    /// `C_v`; `None` is zero.
    pub objective: Vec<Option<CmatBox>>,
    pub cones: Vec<PsdCone>,
    pub equalities: Vec<Equality>,
    /// Frobenius-norm bound on every feasible point (all variables stacked).
    pub x_norm_bound: Option<f64>,
    /// `Σ_v Tr X_v` bound on the feasible set, valid when every variable is
    /// itself constrained PSD. Gives a much tighter dual bound than the
    /// Frobenius one when the dual residual is mostly positive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_bound: Option<f64>,
    /// A feasible point strictly inside the cones, used for the primal
    /// certificate.
    #[serde(with = "cmat_serde::vec")]
    pub interior: Vec<CMat>,
}

/// Serializable matrix wrapper for optional slots.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CmatBox(#[serde(with = "cmat_serde")] pub CMat);

impl SdpProblem {
    fn validate(&self) -> Result<()> {
        let nv = self.var_dims.len();
        let bad = |s: String| Err(SdpError::Malformed(s));
        if self.objective.len() != nv {
            return bad(format!("{} objective slots for {nv} variables", self.objective.len()));
        }
        for (v, c) in self.objective.iter().enumerate() {
            if let Some(c) = c {
                if c.0.nrows() != self.var_dims[v] {
                    return bad(format!("objective {v} has size {}", c.0.nrows()));
                }
            }
        }
        let mut covered = vec![false; nv];
        for cone in &self.cones {
            if cone.terms.is_empty() {
                return bad(format!("cone {} has no terms", cone.name));
            }
            let n = self.var_dims.get(cone.terms[0].0).copied().ok_or_else(|| SdpError::Malformed(format!("cone {}", cone.name)))?;
            for &(v, _) in &cone.terms {
                if v >= nv || self.var_dims[v] != n {
                    return bad(format!("cone {} mixes variable sizes", cone.name));
                }
                covered[v] = true;
            }
            if let Transform::PartialTranspose { dims, .. } = &cone.transform {
                if dims.iter().product::<usize>() != n {
                    return bad(format!("cone {} transform dims {dims:?}", cone.name));
                }
            }
            if let Some(o) = &cone.offset {
                if o.nrows() != n {
                    return bad(format!("cone {} offset size", cone.name));
                }
            }
        }
        if let Some(v) = covered.iter().position(|c| !c) {
            return bad(format!("variable {v} is in no cone"));
        }
        for eq in &self.equalities {
            for (v, map) in &eq.terms {
                if *v >= nv || map.in_dim() != self.var_dims[*v] || map.out_dim() != eq.rhs.nrows() {
                    return bad(format!("equality {} term on variable {v}", eq.name));
                }
            }
        }
        if !self.interior.is_empty() && (self.interior.len() != nv || self.interior.iter().zip(&self.var_dims).any(|(x, &d)| x.nrows() != d)) {
            return bad("interior point shape".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdmmOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub penalty: f64,
    /// Over-relaxation factor in `(0, 2)`.
    pub relaxation: f64,
    /// Stop once the certified interval is this narrow.
    pub gap_tol: Option<f64>,
    /// Decision mode: stop once the certified lower bound on the minimum
    /// reaches this value.
    pub bound_target: Option<f64>,
    pub check_every: usize,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 50_000, penalty: 1.0, relaxation: 1.6, gap_tol: None, bound_target: None, check_every: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Converged,
    MaxIterations,
    /// The equality constraints are inconsistent.
    Infeasible,
    Diverging,
    /// The certified bound reached `bound_target`.
    TargetReached,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Objective at the affine iterate.
    pub objective: f64,
    /// Certified lower bound on the optimum.
    pub dual_bound: Option<f64>,
    /// Objective at a certified feasible point (an upper bound on the optimum).
    pub feasible_objective: Option<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub equality_residual: f64,
    pub iterations: usize,
    #[serde(with = "cmat_serde::vec")]
    pub x: Vec<CMat>,
    #[serde(with = "cmat_serde::vec")]
    pub feasible_x: Vec<CMat>,
}

/// `rows × rows` symmetric PSD system solved on its numerically nonsingular
/// part.
struct PivotedCholesky {
    /// Pivot order; the first `rank` entries are factored.
    perm: Vec<usize>,
    rank: usize,
    /// Lower factor of the pivoted leading block, row-major `rank × rank`.
    l: Vec<f64>,
}

impl PivotedCholesky {
    fn new(m: &[f64], n: usize, rel_tol: f64) -> Self {
        let mut a = m.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let max_diag = (0..n).map(|i| a[i * n + i]).fold(0.0, f64::max);
        let mut rank = 0;
        for k in 0..n {
            let (p, d) = (k..n).map(|i| (i, a[i * n + i])).max_by(|x, y| x.1.total_cmp(&y.1)).unwrap();
            if !(d > rel_tol * max_diag) {
                break;
            }
            if p != k {
                perm.swap(k, p);
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                for i in 0..n {
                    a.swap(i * n + k, i * n + p);
                }
            }
            let piv = a[k * n + k].sqrt();
            a[k * n + k] = piv;
            for i in k + 1..n {
                a[i * n + k] /= piv;
                a[k * n + i] = a[i * n + k];
            }
            // full symmetric Schur complement, so later swaps read fresh entries
            for j in k + 1..n {
                let ajk = a[j * n + k];
                if ajk == 0.0 {
                    continue;
                }
                for i in k + 1..n {
                    a[i * n + j] -= a[i * n + k] * ajk;
                }
            }
            rank = k + 1;
        }
        let mut l = vec![0.0; rank * rank];
        for i in 0..rank {
            for j in 0..=i {
                l[i * rank + j] = a[i * n + j];
            }
        }
        Self { perm, rank, l }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let r = self.rank;
        let mut z: Vec<f64> = (0..r).map(|i| rhs[self.perm[i]]).collect();
        for i in 0..r {
            let mut s = z[i];
            for j in 0..i {
                s -= self.l[i * r + j] * z[j];
            }
            z[i] = s / self.l[i * r + i];
        }
        for i in (0..r).rev() {
            let mut s = z[i];
            for j in i + 1..r {
                s -= self.l[j * r + i] * z[j];
            }
            z[i] = s / self.l[i * r + i];
        }
        let mut out = vec![0.0; rhs.len()];
        for i in 0..r {
            out[self.perm[i]] = z[i];
        }
        out
    }
}

/// Coordinates in the orthonormal Hermitian basis
/// `{E_ii, (E_ij+E_ji)/√2, i(E_ij−E_ji)/√2}`.
fn hvec(m: &CMat, out: &mut Vec<f64>) {
    let n = m.nrows();
    let s2 = std::f64::consts::SQRT_2;
    for i in 0..n {
        out.push(m[(i, i)].re);
        for j in i + 1..n {
            out.push(s2 * m[(i, j)].re);
            out.push(s2 * m[(i, j)].im);
        }
    }
}

fn hmat(v: &[f64], n: usize) -> CMat {
    let mut m = linalg::zeros(n);
    let s2 = std::f64::consts::SQRT_2;
    let mut k = 0;
    for i in 0..n {
        m[(i, i)] = faer::c64::new(v[k], 0.0);
        k += 1;
        for j in i + 1..n {
            let z = faer::c64::new(v[k] / s2, v[k + 1] / s2);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

struct Solver<'a> {
    p: &'a SdpProblem,
    qinv: Vec<Vec<f64>>,
    offsets: Vec<usize>,
    chol: Option<PivotedCholesky>,
    b_vec: Vec<f64>,
    interior_min: std::cell::OnceCell<Vec<f64>>,
}

fn invert_small(q: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = q.len();
    let mut a: Vec<Vec<f64>> = q.iter().cloned().collect();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for k in 0..n {
        let p = (k..n).max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs())).unwrap();
        if a[p][k].abs() < 1e-12 {
            return Err(SdpError::Malformed("cone coefficient matrix is singular".into()));
        }
        a.swap(k, p);
        inv.swap(k, p);
        let d = a[k][k];
        for j in 0..n {
            a[k][j] /= d;
            inv[k][j] /= d;
        }
        for i in 0..n {
            if i != k {
                let f = a[i][k];
                for j in 0..n {
                    a[i][j] -= f * a[k][j];
                    inv[i][j] -= f * inv[k][j];
                }
            }
        }
    }
    Ok(inv)
}

impl<'a> Solver<'a> {
    fn new(p: &'a SdpProblem) -> Result<Self> {
        p.validate()?;
        let nv = p.var_dims.len();
        let mut q = vec![vec![0.0; nv]; nv];
        for cone in &p.cones {
            for &(v, a) in &cone.terms {
                for &(w, b) in &cone.terms {
                    q[v][w] += a * b;
                }
            }
        }
        let qinv = invert_small(&q)?;
        let mut offsets = vec![0];
        for eq in &p.equalities {
            let n = eq.rhs.nrows();
            offsets.push(offsets.last().unwrap() + n * n);
        }
        let mut s = Self { p, qinv, offsets, chol: None, b_vec: Vec::new(), interior_min: Default::default() };
        let mut b_vec = Vec::new();
        for eq in &p.equalities {
            hvec(&eq.rhs, &mut b_vec);
        }
        s.b_vec = b_vec;
        let m = *s.offsets.last().unwrap();
        if m > 0 {
            // columns of E Q⁻¹ E† from basis vectors
            let mut mat = vec![0.0; m * m];
            let mut unit = vec![0.0; m];
            for j in 0..m {
                unit[j] = 1.0;
                let col = s.e_apply(&s.q_apply(&s.e_adjoint(&unit)));
                unit[j] = 0.0;
                for i in 0..m {
                    mat[i * m + j] = col[i];
                }
            }
            for i in 0..m {
                for j in 0..i {
                    let avg = 0.5 * (mat[i * m + j] + mat[j * m + i]);
                    mat[i * m + j] = avg;
                    mat[j * m + i] = avg;
                }
            }
            s.chol = Some(PivotedCholesky::new(&mat, m, 1e-12));
        }
        Ok(s)
    }

    fn q_apply(&self, xs: &[CMat]) -> Vec<CMat> {
        let nv = xs.len();
        (0..nv)
            .map(|v| {
                let mut acc = linalg::zeros(self.p.var_dims[v]);
                for w in 0..nv {
                    let c = self.qinv[v][w];
                    if c != 0.0 {
                        acc = linalg::axpby(1.0, &acc, c, &xs[w]);
                    }
                }
                acc
            })
            .collect()
    }

    fn e_apply(&self, xs: &[CMat]) -> Vec<f64> {
        let mut out = Vec::with_capacity(*self.offsets.last().unwrap());
        for eq in &self.p.equalities {
            let mut acc = linalg::zeros(eq.rhs.nrows());
            for (v, map) in &eq.terms {
                acc = linalg::axpby(1.0, &acc, 1.0, &map.apply(&xs[*v]));
            }
            hvec(&acc, &mut out);
        }
        out
    }

    fn e_adjoint(&self, y: &[f64]) -> Vec<CMat> {
        let mut out: Vec<CMat> = self.p.var_dims.iter().map(|&d| linalg::zeros(d)).collect();
        for (e, eq) in self.p.equalities.iter().enumerate() {
            let seg = &y[self.offsets[e]..self.offsets[e + 1]];
            if seg.iter().all(|&v| v == 0.0) {
                continue;
            }
            let ym = hmat(seg, eq.rhs.nrows());
            for (v, map) in &eq.terms {
                out[*v] = linalg::axpby(1.0, &out[*v], 1.0, &map.adjoint(&ym));
            }
        }
        out
    }

    fn cone_value(&self, c: usize, xs: &[CMat]) -> CMat {
        let cone = &self.p.cones[c];
        let n = self.p.var_dims[cone.terms[0].0];
        let mut acc = linalg::zeros(n);
        for &(v, a) in &cone.terms {
            acc = linalg::axpby(1.0, &acc, a, &xs[v]);
        }
        let mut w = cone.transform.apply(&acc);
        if let Some(o) = &cone.offset {
            w = linalg::axpby(1.0, &w, 1.0, o);
        }
        w
    }

    /// `Σ_c a_cv T_c(M_c)` for every variable.
    fn cone_adjoint(&self, ms: &[CMat]) -> Vec<CMat> {
        let mut out: Vec<CMat> = self.p.var_dims.iter().map(|&d| linalg::zeros(d)).collect();
        for (cone, m) in self.p.cones.iter().zip(ms) {
            let t = cone.transform.apply(m);
            for &(v, a) in &cone.terms {
                out[v] = linalg::axpby(1.0, &out[v], a, &t);
            }
        }
        out
    }

    fn objective(&self, xs: &[CMat]) -> f64 {
        self.p.objective.iter().zip(xs).filter_map(|(c, x)| c.as_ref().map(|c| linalg::inner(&c.0, x))).sum()
    }

    /// x-update for `g` (already including `−C`), returning `(x, y)`.
    fn x_update(&self, g: &[CMat], rho: f64) -> (Vec<CMat>, Vec<f64>) {
        let qg = self.q_apply(g);
        let Some(chol) = &self.chol else {
            return (qg.iter().map(|m| linalg::scale(m, 1.0 / rho)).collect(), Vec::new());
        };
        let mut rhs = self.e_apply(&qg);
        for (r, b) in rhs.iter_mut().zip(&self.b_vec) {
            *r -= rho * b;
        }
        let y = chol.solve(&rhs);
        let corr = self.q_apply(&self.e_adjoint(&y));
        let x = qg.iter().zip(&corr).map(|(a, b)| linalg::axpby(1.0 / rho, a, -1.0 / rho, b)).collect();
        (x, y)
    }

    fn equality_residual(&self, xs: &[CMat]) -> f64 {
        self.e_apply(xs).iter().zip(&self.b_vec).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }

    fn dual_bound(&self, u: &[CMat], y: &[f64], rho: f64) -> Result<Option<f64>> {
        let trace = self.p.trace_bound.filter(|_| self.all_vars_psd());
        if self.p.x_norm_bound.is_none() && trace.is_none() {
            return Ok(None);
        }
        let s: Vec<CMat> = u.iter().map(|m| linalg::psd_clip(&linalg::scale(m, -rho))).collect::<std::result::Result<_, _>>()?;
        let ts = self.cone_adjoint(&s);
        let ey = self.e_adjoint(y);
        let mut res2 = 0.0;
        let mut worst_neg = 0.0f64;
        for v in 0..self.p.var_dims.len() {
            let mut rv = linalg::axpby(-1.0, &ts[v], 1.0, &ey[v]);
            if let Some(c) = &self.p.objective[v] {
                rv = linalg::axpby(1.0, &rv, 1.0, &c.0);
            }
            res2 += linalg::frobenius(&rv).powi(2);
            if trace.is_some() {
                worst_neg = worst_neg.max(-linalg::min_eigenvalue(&rv)?);
            }
        }
        // ⟨R, X⟩ ≥ −‖R‖·‖X‖, or ≥ λ_min(R)⁻·ΣTr X when every X_v ⪰ 0
        let frob = self.p.x_norm_bound.map_or(f64::INFINITY, |r| res2.sqrt() * r);
        let eig = trace.map_or(f64::INFINITY, |t| worst_neg * t);
        let mut bound = -frob.min(eig);
        for (cone, sc) in self.p.cones.iter().zip(&s) {
            if let Some(o) = &cone.offset {
                bound -= linalg::inner(sc, o);
            }
        }
        bound -= y.iter().zip(&self.b_vec).map(|(a, b)| a * b).sum::<f64>();
        Ok(Some(bound))
    }

    /// Every variable appears alone, unscaled and untransformed, in some cone.
    fn all_vars_psd(&self) -> bool {
        (0..self.p.var_dims.len()).all(|v| {
            self.p.cones.iter().any(|c| matches!(c.transform, Transform::Identity) && c.offset.is_none() && c.terms.len() == 1 && c.terms[0].0 == v && c.terms[0].1 > 0.0)
        })
    }

    /// Smallest step toward the interior point that makes every cone PSD.
    fn repair(&self, xs: &[CMat]) -> Result<Option<(Vec<CMat>, f64)>> {
        if self.p.interior.is_empty() {
            return Ok(None);
        }
        let x0 = &self.p.interior;
        if self.interior_min.get().is_none() {
            let mins = (0..self.p.cones.len()).map(|c| linalg::min_eigenvalue(&self.cone_value(c, x0))).collect::<std::result::Result<Vec<_>, _>>()?;
            let _ = self.interior_min.set(mins);
        }
        let mins = self.interior_min.get().expect("set above");
        let mut t = 0.0f64;
        for c in 0..self.p.cones.len() {
            let l1 = linalg::min_eigenvalue(&self.cone_value(c, xs))?;
            let l0 = mins[c];
            if l1 < 0.0 {
                if !(l0 > 0.0) {
                    return Ok(None);
                }
                t = t.max(-l1 / (l0 - l1));
            }
        }
        for _ in 0..8 {
            let cand: Vec<CMat> = xs.iter().zip(x0).map(|(a, b)| linalg::axpby(1.0 - t, a, t, b)).collect();
            let mut ok = true;
            for c in 0..self.p.cones.len() {
                if linalg::min_eigenvalue(&self.cone_value(c, &cand))? < 0.0 {
                    ok = false;
                    break;
                }
            }
            if ok {
                let obj = self.objective(&cand);
                return Ok(Some((cand, obj)));
            }
            t = (t * 1.01 + 1e-12).min(1.0);
        }
        Ok(None)
    }
}

/// Cone iterates and penalty carried between solves of problems with the
/// same cone layout.
#[derive(Debug, Clone)]
pub struct SdpWarmStart {
    z: Vec<CMat>,
    u: Vec<CMat>,
    penalty: f64,
}

/// Solves the problem by ADMM with over-relaxation and residual balancing.
pub fn admm_sdp(problem: &SdpProblem, opts: &AdmmOptions) -> Result<SdpSolution> {
    admm_sdp_warm(problem, opts, None).map(|(sol, _)| sol)
}

pub fn admm_sdp_warm(problem: &SdpProblem, opts: &AdmmOptions, warm: Option<&SdpWarmStart>) -> Result<(SdpSolution, SdpWarmStart)> {
    let s = Solver::new(problem)?;
    let nc = problem.cones.len();
    let nv = problem.var_dims.len();
    let size = |c: usize| problem.var_dims[problem.cones[c].terms[0].0];
    let fits = warm.is_some_and(|w| w.z.len() == nc && (0..nc).all(|c| w.z[c].nrows() == size(c)));
    let (mut z, mut u, mut rho) = match warm {
        Some(w) if fits => (w.z.clone(), w.u.clone(), w.penalty),
        _ => {
            let z: Vec<CMat> = (0..nc).map(|c| linalg::zeros(size(c))).collect();
            (z.clone(), z, opts.penalty)
        }
    };
    let alpha = opts.relaxation;
    let c_norm = problem.objective.iter().flatten().map(|c| linalg::frobenius(&c.0).powi(2)).sum::<f64>().sqrt();
    let mut x: Vec<CMat> = problem.var_dims.iter().map(|&d| linalg::zeros(d)).collect();
    let mut y = Vec::new();
    let (mut pres, mut dres) = (f64::INFINITY, f64::INFINITY);
    let mut status = SdpStatus::MaxIterations;
    let mut iterations = 0;
    let mut certified: Option<(f64, Option<(Vec<CMat>, f64)>)> = None;
    for it in 1..=opts.max_iter {
        iterations = it;
        // g = −C − ρ Σ_c a_cv T_c(O_c − z_c + u_c)
        let h: Vec<CMat> = (0..nc)
            .map(|c| {
                let mut m = linalg::axpby(1.0, &u[c], -1.0, &z[c]);
                if let Some(o) = &problem.cones[c].offset {
                    m = linalg::axpby(1.0, &m, 1.0, o);
                }
                m
            })
            .collect();
        let th = s.cone_adjoint(&h);
        let g: Vec<CMat> = (0..nv)
            .map(|v| {
                let mut gv = linalg::scale(&th[v], -rho);
                if let Some(c) = &problem.objective[v] {
                    gv = linalg::axpby(1.0, &gv, -1.0, &c.0);
                }
                gv
            })
            .collect();
        let (xn, yn) = s.x_update(&g, rho);
        x = xn;
        y = yn;
        if it == 1 {
            let eq = s.equality_residual(&x);
            if eq > 1e-6 * (1.0 + s.b_vec.iter().map(|b| b * b).sum::<f64>().sqrt()) {
                status = SdpStatus::Infeasible;
                break;
            }
        }
        let mut p2 = 0.0;
        let mut w_norm = 0.0f64;
        let mut dz = Vec::with_capacity(nc);
        for c in 0..nc {
            let w = s.cone_value(c, &x);
            let relaxed = linalg::axpby(alpha, &w, 1.0 - alpha, &z[c]);
            let znew = linalg::psd_clip(&linalg::axpby(1.0, &relaxed, 1.0, &u[c]))?;
            u[c] = linalg::axpby(1.0, &u[c], 1.0, &linalg::axpby(1.0, &relaxed, -1.0, &znew));
            p2 += linalg::frobenius(&linalg::axpby(1.0, &w, -1.0, &znew)).powi(2);
            w_norm = w_norm.max(linalg::frobenius(&w)).max(linalg::frobenius(&znew));
            dz.push(linalg::axpby(1.0, &znew, -1.0, &z[c]));
            z[c] = znew;
        }
        pres = p2.sqrt();
        dres = rho * s.cone_adjoint(&dz).iter().map(|m| linalg::frobenius(m).powi(2)).sum::<f64>().sqrt();
        let u_norm: f64 = u.iter().map(|m| linalg::max_abs(m)).fold(0.0, f64::max);
        if !pres.is_finite() || !dres.is_finite() || rho * u_norm > 1e12 {
            status = SdpStatus::Diverging;
            break;
        }
        if pres <= opts.tol * (1.0 + w_norm) && dres <= opts.tol * (1.0 + c_norm) {
            status = SdpStatus::Converged;
            break;
        }
        if it % opts.check_every.max(1) == 0 {
            if opts.gap_tol.is_some() || opts.bound_target.is_some() {
                let lb = s.dual_bound(&u, &y, rho)?;
                let reached = matches!((lb, opts.bound_target), (Some(l), Some(t)) if l >= t);
                let repaired = if reached || (lb.is_some() && opts.gap_tol.is_some()) { s.repair(&x)? } else { None };
                log::trace!("iteration {it}: bound {lb:?}, feasible {:?}, penalty {rho}, residuals {pres:.2e} {dres:.2e}", repaired.as_ref().map(|r| r.1));
                if let Some(l) = lb {
                    if reached {
                        certified = Some((l, repaired));
                        status = SdpStatus::TargetReached;
                        break;
                    }
                    if let (Some(gap_tol), Some((fx, fv))) = (opts.gap_tol, repaired) {
                        if fv - l <= gap_tol {
                            certified = Some((l, Some((fx, fv))));
                            status = SdpStatus::Converged;
                            break;
                        }
                    }
                }
            }
            // residual balancing
            if pres > 3.0 * dres {
                rho *= 2.0;
                u.iter_mut().for_each(|m| *m = linalg::scale(m, 0.5));
            } else if dres > 3.0 * pres {
                rho *= 0.5;
                u.iter_mut().for_each(|m| *m = linalg::scale(m, 2.0));
            }
        }
    }
    let equality_residual = s.equality_residual(&x);
    let objective = s.objective(&x);
    let (dual_bound, feasible_x, feasible_objective) = match certified {
        Some((lb, Some((fx, fv)))) => (Some(lb), fx, Some(fv)),
        Some((lb, None)) => (Some(lb), Vec::new(), None),
        None if status == SdpStatus::Infeasible || status == SdpStatus::Diverging => (None, Vec::new(), None),
        None => {
            let lb = s.dual_bound(&u, &y, rho)?;
            match s.repair(&x)? {
                Some((fx, fv)) => (lb, fx, Some(fv)),
                None => (lb, Vec::new(), None),
            }
        }
    };
    let sol = SdpSolution {
        status,
        objective,
        dual_bound,
        feasible_objective,
        primal_residual: pres,
        dual_residual: dres,
        equality_residual,
        iterations,
        x,
        feasible_x,
    };
    Ok((sol, SdpWarmStart { z, u, penalty: rho }))
}

/// Recomputes the certificates of a solution from the problem data alone:
/// returns `(max cone violation at feasible_x, equality residual at feasible_x)`.
pub fn verify_feasible(problem: &SdpProblem, sol: &SdpSolution) -> Result<Option<(f64, f64)>> {
    if sol.feasible_x.is_empty() {
        return Ok(None);
    }
    let s = Solver { p: problem, qinv: Vec::new(), offsets: equality_offsets(problem), chol: None, b_vec: rhs_vec(problem), interior_min: Default::default() };
    let mut worst = 0.0f64;
    for c in 0..problem.cones.len() {
        worst = worst.max(-linalg::min_eigenvalue(&s.cone_value(c, &sol.feasible_x))?);
    }
    Ok(Some((worst, s.equality_residual(&sol.feasible_x))))
}

fn equality_offsets(p: &SdpProblem) -> Vec<usize> {
    let mut offsets = vec![0];
    for eq in &p.equalities {
        let n = eq.rhs.nrows();
        offsets.push(offsets.last().unwrap() + n * n);
    }
    offsets
}

fn rhs_vec(p: &SdpProblem) -> Vec<f64> {
    let mut b = Vec::new();
    for eq in &p.equalities {
        hvec(&eq.rhs, &mut b);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::{self, PptSpace};
    use crate::states;

    fn density_problem(n: usize) -> SdpProblem {
        SdpProblem {
            var_dims: vec![n],
            objective: vec![None],
            cones: vec![PsdCone { name: "psd".into(), transform: Transform::Identity, terms: vec![(0, 1.0)], offset: None }],
            equalities: vec![Equality {
                name: "trace".into(),
                terms: vec![(0, LinearMap::TraceRight { left: 1, right: n })],
                rhs: linalg::identity(1),
            }],
            x_norm_bound: Some(1.0),
            trace_bound: None,
            interior: vec![linalg::scale(&linalg::identity(n), 1.0 / n as f64)],
        }
    }

    #[test]
    fn map_adjoints() {
        let mut r = crate::rng::from_seed(4);
        let x = states::random_density_with(&[3, 2], None, None, &mut r).unwrap().into_matrix();
        let w = states::random_density_with(&[3], None, None, &mut r).unwrap().into_matrix();
        let tau = states::random_density_with(&[2], None, None, &mut r).unwrap().into_matrix();
        let maps = [
            LinearMap::TraceRight { left: 3, right: 2 },
            LinearMap::ContractLeft { weight: w.clone(), right: 2 },
            LinearMap::ContractLeftCentered { weight: w, tau, right: 2 },
        ];
        for map in &maps {
            let y = states::random_density_with(&[map.out_dim()], None, None, &mut r).unwrap().into_matrix();
            let lhs = linalg::inner(&y, &map.apply(&x));
            let rhs = linalg::inner(&map.adjoint(&y), &x);
            assert!((lhs - rhs).abs() < 1e-12, "{map:?}");
        }
        // trace-right is the partial trace over the second factor
        let pt = linalg::partial_trace(&x, &[3, 2], &[0]).unwrap();
        assert!(linalg::max_abs(&linalg::axpby(1.0, &maps[0].apply(&x), -1.0, &pt)) < 1e-14);
    }

    #[test]
    fn hvec_roundtrip() {
        let m = states::random_density(4, 3).unwrap().into_matrix();
        let mut v = Vec::new();
        hvec(&m, &mut v);
        assert_eq!(v.len(), 16);
        assert!(linalg::max_abs(&linalg::axpby(1.0, &hmat(&v, 4), -1.0, &m)) < 1e-15);
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - linalg::frobenius(&m)).abs() < 1e-14);
    }

    #[test]
    fn trivial_feasibility() {
        let p = density_problem(3);
        let sol = admm_sdp(&p, &AdmmOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Converged);
        assert!(sol.equality_residual < 1e-9);
        assert!(linalg::min_eigenvalue(&sol.x[0]).unwrap() > -1e-5);
    }

    #[test]
    fn phi2_overlap_over_ppt() {
        // max Tr[Φ₂σ] over PPT densities is 1/2
        let phi = states::max_entangled(2).unwrap();
        let mut p = density_problem(4);
        p.objective = vec![Some(CmatBox(linalg::scale(phi.matrix(), -1.0)))];
        p.cones.push(PsdCone {
            name: "ppt".into(),
            transform: Transform::PartialTranspose { dims: vec![2, 2], systems: vec![1] },
            terms: vec![(0, 1.0)],
            offset: None,
        });
        let sol = admm_sdp(&p, &AdmmOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Converged);
        assert!((-sol.objective - 0.5).abs() < 1e-4, "{}", sol.objective);
        let lb = sol.dual_bound.unwrap();
        let fv = sol.feasible_objective.unwrap();
        assert!(lb <= -0.5 + 1e-9 && fv >= -0.5 - 1e-9 && fv - lb < 1e-4, "{lb} {fv}");
        // the same number from the cone module's linear minimization
        let lmo = cones::lmo_ppt(&linalg::scale(phi.matrix(), -1.0), &PptSpace::of(&phi).unwrap(), &Default::default(), None).unwrap();
        assert!((lmo.objective - sol.objective).abs() < 1e-4);
        let (viol, eq) = verify_feasible(&p, &sol).unwrap().unwrap();
        assert!(viol <= 0.0 && eq < 1e-9);
    }

    #[test]
    fn inconsistent_equalities_flagged() {
        let mut p = density_problem(2);
        p.equalities.push(Equality {
            name: "trace two".into(),
            terms: vec![(0, LinearMap::TraceRight { left: 1, right: 2 })],
            rhs: linalg::scale(&linalg::identity(1), 2.0),
        });
        let sol = admm_sdp(&p, &AdmmOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn redundant_equalities_tolerated() {
        let mut p = density_problem(2);
        let again = p.equalities[0].clone();
        p.equalities.push(again);
        let sol = admm_sdp(&p, &AdmmOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Converged);
        assert!(sol.equality_residual < 1e-9);
    }

    #[test]
    fn pivoted_cholesky_solves_on_range() {
        // rank-2 PSD matrix B Bᵀ, right-hand side in its range
        let b = [1.0, 2.0, 0.5, -1.0, 0.3, 4.0, 2.0, 1.0, 0.0];
        let n = 3;
        let mut m = vec![0.0; 9];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = (0..2).map(|k| b[i * 3 + k] * b[j * 3 + k]).sum();
            }
        }
        let chol = PivotedCholesky::new(&m, n, 1e-12);
        assert_eq!(chol.rank, 2);
        let x_true = [0.7, -0.2, 1.1];
        let rhs: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m[i * n + j] * x_true[j]).sum()).collect();
        let x = chol.solve(&rhs);
        for i in 0..n {
            let r: f64 = (0..n).map(|j| m[i * n + j] * x[j]).sum();
            assert!((r - rhs[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn malformed_rejected() {
        let mut p = density_problem(2);
        p.cones.clear();
        assert!(admm_sdp(&p, &AdmmOptions::default()).is_err());
    }

    #[test]
    fn problem_roundtrips_through_json() {
        let p = density_problem(2);
        let text = serde_json::to_string(&p).unwrap();
        let back: SdpProblem = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}
