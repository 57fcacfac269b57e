//! Singlet-distillation fidelity under PPT operations, with and without a
//! catalyst, as conic programs.
//!
//! Operations are Choi-PPT maps: `J ⪰ 0`, `Tr_out J = I`, and `J^Γ ⪰ 0`
//! with Γ over every B-side input and output factor. Since the target is
//! `Φ_K` and the `U⊗Ū` twirl on the output pair is itself such a map, the
//! optimum is attained by maps of the form
//!
//! ```text
//! J = X₁ ⊗ Φ_K + X₀ ⊗ (I − Φ_K)/(K² − 1)
//! ```
//!
//! and the program only carries `X₁, X₀` (on input ⊗ catalyst output). With
//! no catalyst, `TP` fixes `X₀ = I − X₁` and the problem collapses to one
//! variable `N = X₁ᵀ`. The full Choi program is kept as an independent
//! route for small inputs.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cones;
use crate::linalg::{self, cmat_serde, CMat, LinalgError};
use crate::rng;
use crate::sdp::{self, AdmmOptions, CmatBox, Equality, LinearMap, PsdCone, SdpError, SdpProblem, SdpStatus, SdpWarmStart, Transform};
use crate::states::{self, DensityMatrix, StateError};

/// Largest Choi dimension accepted.
pub const DIM_GUARD: usize = 4096;

#[derive(Debug, Error)]
pub enum CatalysisError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Cone(#[from] cones::ConeError),
    #[error("Choi dimension {0} exceeds the guard {DIM_GUARD}")]
    TooLarge(usize),
    #[error("{0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, CatalysisError>;

/// Choi matrix `J` on `in ⊗ out`, with `Λ(ρ) = Tr_in[(ρᵀ ⊗ I) J]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChoiMatrix {
    #[serde(with = "cmat_serde")]
    pub matrix: CMat,
    pub in_dims: Vec<usize>,
    pub out_dims: Vec<usize>,
    /// B-side factors of the input.
    pub in_b: Vec<usize>,
    /// B-side factors of the output.
    pub out_b: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChoiCheck {
    pub cp_min_eig: f64,
    pub tp_residual: f64,
    pub ppt_min_eig: f64,
}

impl ChoiCheck {
    pub fn ok(&self, tol: f64) -> bool {
        self.cp_min_eig >= -tol && self.tp_residual <= tol && self.ppt_min_eig >= -tol
    }
}

impl ChoiMatrix {
    pub fn new(matrix: CMat, in_dims: Vec<usize>, out_dims: Vec<usize>, in_b: Vec<usize>, out_b: Vec<usize>) -> Result<Self> {
        let n: usize = in_dims.iter().product::<usize>() * out_dims.iter().product::<usize>();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(CatalysisError::Input(format!("Choi matrix is {}x{}, expected {n}", matrix.nrows(), matrix.ncols())));
        }
        if in_b.iter().any(|&k| k >= in_dims.len()) || out_b.iter().any(|&k| k >= out_dims.len()) {
            return Err(CatalysisError::Input("B-side factor out of range".into()));
        }
        Ok(Self { matrix, in_dims, out_dims, in_b, out_b })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dims.iter().product()
    }

    pub fn out_dim(&self) -> usize {
        self.out_dims.iter().product()
    }

    /// Identity channel on a bipartite register.
    pub fn identity(dims: &[usize], b: &[usize]) -> Self {
        let d: usize = dims.iter().product();
        let v: Vec<faer::c64> = (0..d * d).map(|k| faer::c64::new(if k / d == k % d { 1.0 } else { 0.0 }, 0.0)).collect();
        let m = linalg::projector(&v);
        Self { matrix: m, in_dims: dims.to_vec(), out_dims: dims.to_vec(), in_b: b.to_vec(), out_b: b.to_vec() }
    }

    /// Replaces every input with `I/d_out`.
    pub fn depolarizing(in_dims: &[usize], in_b: &[usize], out_dims: &[usize], out_b: &[usize]) -> Self {
        let din: usize = in_dims.iter().product();
        let dout: usize = out_dims.iter().product();
        let m = linalg::scale(&linalg::identity(din * dout), 1.0 / dout as f64);
        Self { matrix: m, in_dims: in_dims.to_vec(), out_dims: out_dims.to_vec(), in_b: in_b.to_vec(), out_b: out_b.to_vec() }
    }

    fn all_dims(&self) -> Vec<usize> {
        self.in_dims.iter().chain(&self.out_dims).copied().collect()
    }

    fn all_b(&self) -> Vec<usize> {
        self.in_b.iter().copied().chain(self.out_b.iter().map(|k| k + self.in_dims.len())).collect()
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dims() != self.in_dims.as_slice() {
            return Err(CatalysisError::Input(format!("state dims {:?} vs channel input {:?}", rho.dims(), self.in_dims)));
        }
        let map = LinearMap::ContractLeft { weight: linalg::transpose(rho.matrix()), right: self.out_dim() };
        let out = linalg::hermitian_part(&map.apply(&self.matrix));
        let cut: Vec<usize> = (0..self.out_dims.len()).filter(|k| !self.out_b.contains(k)).collect();
        let cut = (!cut.is_empty() && cut.len() < self.out_dims.len()).then_some(cut);
        Ok(DensityMatrix::from_unnormalized(out, self.out_dims.clone(), cut)?)
    }

    /// Checks CP, TP and the PPT-operation condition directly on `J`.
    pub fn verify(&self) -> Result<ChoiCheck> {
        let cp_min_eig = linalg::min_eigenvalue(&self.matrix)?;
        let tr_out = LinearMap::TraceRight { left: self.in_dim(), right: self.out_dim() }.apply(&self.matrix);
        let tp_residual = linalg::max_abs(&linalg::axpby(1.0, &tr_out, -1.0, &linalg::identity(self.in_dim())));
        let pt = linalg::partial_transpose(&self.matrix, &self.all_dims(), &self.all_b())?;
        let ppt_min_eig = linalg::min_eigenvalue(&pt)?;
        Ok(ChoiCheck { cp_min_eig, tp_residual, ppt_min_eig })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalystMode {
    /// Output must be `(main output) ⊗ τ`.
    Strict,
    /// Only the catalyst marginal must return to `τ`.
    Correlated,
}

#[derive(Debug, Clone, Copy)]
pub struct CatalysisOptions {
    pub admm: AdmmOptions,
    /// Assemble and return the full Choi matrix of the certified map.
    pub build_choi: bool,
}

impl Default for CatalysisOptions {
    fn default() -> Self {
        Self { admm: AdmmOptions { gap_tol: Some(1e-4), check_every: 25, ..Default::default() }, build_choi: true }
    }
}

impl CatalysisOptions {
    /// Decision mode: stop as soon as `F ≤ ceiling` is certified. The lower
    /// end of the reported interval is then looser.
    pub fn with_ceiling(mut self, ceiling: f64) -> Self {
        self.admm.bound_target = Some(-ceiling);
        self
    }
}

/// Fidelity with `Φ_K`: `lower` is attained by a verified map, `upper` is a
/// dual certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FidelityResult {
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    pub equality_residual: f64,
    /// Catalytic programs: the constrained program's own dual bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sdp_upper: Option<f64>,
    /// Catalytic programs: the catalyst-free bound on `ρ ⊗ τ` (the return
    /// constraint dropped and the catalyst output discarded).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation_upper: Option<f64>,
    #[serde(skip)]
    pub choi: Option<ChoiMatrix>,
}

impl FidelityResult {
    pub fn width(&self) -> f64 {
        self.upper - self.lower.unwrap_or(0.0)
    }
}

fn target_dim(k: usize) -> Result<usize> {
    if k == 0 || k > 6 {
        return Err(CatalysisError::Input(format!("target copies k = {k}")));
    }
    Ok(1 << k)
}

fn guard(n: usize) -> Result<()> {
    if n > DIM_GUARD {
        return Err(CatalysisError::TooLarge(n));
    }
    Ok(())
}

fn fidelity_from(sol: &sdp::SdpSolution, choi: Option<ChoiMatrix>) -> FidelityResult {
    let upper = sol.dual_bound.map_or(1.0, |b| (-b).min(1.0));
    let lower = sol.feasible_objective.map(|v| (-v).max(0.0));
    FidelityResult {
        value: (-sol.objective).clamp(0.0, 1.0),
        lower,
        upper: upper.max(lower.unwrap_or(f64::NEG_INFINITY)),
        status: sol.status,
        iterations: sol.iterations,
        equality_residual: sol.equality_residual,
        sdp_upper: None,
        relaxation_upper: None,
        choi,
    }
}

fn space_of(rho: &DensityMatrix) -> Result<(Vec<usize>, Vec<usize>)> {
    Ok((rho.dims().to_vec(), rho.b_systems()?))
}

/// Best fidelity `Tr[Φ_K Λ(ρ)]`, `K = 2^k`, over Choi-PPT operations.
pub fn ppt_ops_fidelity(rho: &DensityMatrix, k: usize, opts: &CatalysisOptions) -> Result<FidelityResult> {
    let kk = target_dim(k)?;
    let n = rho.dim();
    guard(n * kk * kk)?;
    let (dims, b) = space_of(rho)?;
    let kf = kk as f64;
    let pt = || Transform::PartialTranspose { dims: dims.clone(), systems: b.clone() };
    let id = linalg::identity(n);
    let cone = |name: &str, transform, a: f64, offset: Option<CMat>| PsdCone { name: name.into(), transform, terms: vec![(0, a)], offset };
    let problem = SdpProblem {
        var_dims: vec![n],
        objective: vec![Some(CmatBox(linalg::scale(rho.matrix(), -1.0)))],
        cones: vec![
            cone("N", Transform::Identity, 1.0, None),
            cone("I - N", Transform::Identity, -1.0, Some(id.clone())),
            cone("N^G + I/K", pt(), 1.0, Some(linalg::scale(&id, 1.0 / kf))),
            cone("I/K - N^G", pt(), -1.0, Some(linalg::scale(&id, 1.0 / kf))),
        ],
        equalities: Vec::new(),
        x_norm_bound: Some((n as f64).sqrt()),
        trace_bound: Some(n as f64),
        interior: vec![linalg::scale(&id, 0.5 / kf)],
    };
    let sol = sdp::admm_sdp(&problem, &opts.admm)?;
    let choi = match sol.feasible_x.first() {
        Some(nmat) if opts.build_choi => Some(twirled_choi(&linalg::transpose(nmat), &linalg::axpby(1.0, &id, -1.0, &linalg::transpose(nmat)), &dims, &b, &[], &[], kk)?),
        _ => None,
    };
    Ok(fidelity_from(&sol, choi))
}

/// `X₁ ⊗ Φ_K + X₀ ⊗ (I − Φ_K)/(K² − 1)` with `X` on `in ⊗ cat`, reordered
/// so the output reads `A' B' cat`.
fn twirled_choi(x1: &CMat, x0: &CMat, in_dims: &[usize], in_b: &[usize], cat_dims: &[usize], cat_b: &[usize], kk: usize) -> Result<ChoiMatrix> {
    let phi = states::phi_matrix(kk);
    let n2 = kk * kk;
    let rest = linalg::scale(&linalg::axpby(1.0, &linalg::identity(n2), -1.0, &phi), 1.0 / (n2 as f64 - 1.0));
    let j = linalg::axpby(1.0, &linalg::kron(x1, &phi), 1.0, &linalg::kron(x0, &rest));
    let ni = in_dims.len();
    let nc = cat_dims.len();
    let mut dims: Vec<usize> = in_dims.to_vec();
    dims.extend_from_slice(cat_dims);
    dims.extend([kk, kk]);
    // current order: in, cat, A', B'; wanted: in, A', B', cat
    let mut perm: Vec<usize> = (0..ni).collect();
    perm.extend([ni + nc, ni + nc + 1]);
    perm.extend(ni..ni + nc);
    let j = linalg::permute_subsystems(&j, &dims, &perm)?;
    let mut out_dims = vec![kk, kk];
    out_dims.extend_from_slice(cat_dims);
    let mut out_b = vec![1];
    out_b.extend(cat_b.iter().map(|k| k + 2));
    ChoiMatrix::new(j, in_dims.to_vec(), out_dims, in_b.to_vec(), out_b)
}

/// The same optimum as [`ppt_ops_fidelity`] from the unreduced program over
/// the full Choi matrix. Only for small inputs.
pub fn ppt_ops_fidelity_full_choi(rho: &DensityMatrix, k: usize, opts: &CatalysisOptions) -> Result<FidelityResult> {
    let kk = target_dim(k)?;
    let n = rho.dim();
    let big = n * kk * kk;
    if big > 256 {
        return Err(CatalysisError::TooLarge(big));
    }
    let (dims, b) = space_of(rho)?;
    let mut all_dims = dims.clone();
    all_dims.extend([kk, kk]);
    let mut all_b = b.clone();
    all_b.push(dims.len() + 1);
    let problem = SdpProblem {
        var_dims: vec![big],
        objective: vec![Some(CmatBox(linalg::scale(&linalg::kron(&linalg::transpose(rho.matrix()), &states::phi_matrix(kk)), -1.0)))],
        cones: vec![
            PsdCone { name: "CP".into(), transform: Transform::Identity, terms: vec![(0, 1.0)], offset: None },
            PsdCone { name: "PPT".into(), transform: Transform::PartialTranspose { dims: all_dims.clone(), systems: all_b.clone() }, terms: vec![(0, 1.0)], offset: None },
        ],
        equalities: vec![Equality {
            name: "TP".into(),
            terms: vec![(0, LinearMap::TraceRight { left: n, right: kk * kk })],
            rhs: linalg::identity(n),
        }],
        x_norm_bound: Some(n as f64),
        trace_bound: Some(n as f64),
        interior: vec![linalg::scale(&linalg::identity(big), 1.0 / (kk * kk) as f64)],
    };
    let sol = sdp::admm_sdp(&problem, &opts.admm)?;
    let choi = match sol.feasible_x.first() {
        Some(j) if opts.build_choi => Some(ChoiMatrix::new(j.clone(), dims, vec![kk, kk], b, vec![1])?),
        _ => None,
    };
    Ok(fidelity_from(&sol, choi))
}

/// Which catalyst-return constraints to impose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Return {
    None,
    Marginal,
    Product,
}

struct CatalyticProgram {
    problem: SdpProblem,
    omega: DensityMatrix,
    cat_dims: Vec<usize>,
    cat_b: Vec<usize>,
    kk: usize,
}

fn catalytic_program(rho: &DensityMatrix, tau: &DensityMatrix, k: usize, ret: Return) -> Result<CatalyticProgram> {
    let kk = target_dim(k)?;
    if tau.cut().is_none() {
        return Err(CatalysisError::Input("catalyst needs a bipartition".into()));
    }
    let omega = rho.tensor(tau);
    let n_in = omega.dim();
    let m = tau.dim();
    guard(n_in * kk * kk * m)?;
    let (in_dims, in_b) = space_of(&omega)?;
    let cat_dims = tau.dims().to_vec();
    let cat_b = tau.b_systems()?;
    let mut dims = in_dims.clone();
    dims.extend_from_slice(&cat_dims);
    let mut systems = in_b.clone();
    systems.extend(cat_b.iter().map(|k| k + in_dims.len()));
    let pt = Transform::PartialTranspose { dims, systems };
    let kf = kk as f64;
    let wt = linalg::transpose(omega.matrix());
    let mut equalities = vec![Equality {
        name: "TP".into(),
        terms: vec![(0, LinearMap::TraceRight { left: n_in, right: m }), (1, LinearMap::TraceRight { left: n_in, right: m })],
        rhs: linalg::identity(n_in),
    }];
    if ret != Return::None {
        let c = LinearMap::ContractLeft { weight: wt.clone(), right: m };
        equalities.push(Equality { name: "catalyst return".into(), terms: vec![(0, c.clone()), (1, c)], rhs: tau.matrix().clone() });
    }
    if ret == Return::Product {
        equalities.push(Equality {
            name: "product output".into(),
            terms: vec![(0, LinearMap::ContractLeftCentered { weight: wt.clone(), tau: tau.matrix().clone(), right: m })],
            rhs: linalg::zeros(m),
        });
    }
    let base = linalg::kron(&linalg::identity(n_in), tau.matrix());
    let problem = SdpProblem {
        var_dims: vec![n_in * m, n_in * m],
        objective: vec![Some(CmatBox(linalg::scale(&linalg::kron(&wt, &linalg::identity(m)), -1.0))), None],
        cones: vec![
            PsdCone { name: "X1".into(), transform: Transform::Identity, terms: vec![(0, 1.0)], offset: None },
            PsdCone { name: "X0".into(), transform: Transform::Identity, terms: vec![(1, 1.0)], offset: None },
            PsdCone { name: "symmetric".into(), transform: pt.clone(), terms: vec![(0, kf + 1.0), (1, 1.0)], offset: None },
            PsdCone { name: "antisymmetric".into(), transform: pt, terms: vec![(0, -(kf - 1.0)), (1, 1.0)], offset: None },
        ],
        equalities,
        x_norm_bound: Some(n_in as f64),
        trace_bound: Some(n_in as f64),
        interior: vec![linalg::scale(&base, 0.5 / kf), linalg::scale(&base, 1.0 - 0.5 / kf)],
    };
    Ok(CatalyticProgram { problem, omega, cat_dims, cat_b, kk })
}

fn solve_catalytic(
    prog: &CatalyticProgram,
    opts: &CatalysisOptions,
    warm: Option<&SdpWarmStart>,
) -> Result<(FidelityResult, sdp::SdpSolution, SdpWarmStart)> {
    let (sol, next) = sdp::admm_sdp_warm(&prog.problem, &opts.admm, warm)?;
    let choi = match sol.feasible_x.as_slice() {
        [x1, x0] if opts.build_choi => {
            let (in_dims, in_b) = space_of(&prog.omega)?;
            Some(twirled_choi(x1, x0, &in_dims, &in_b, &prog.cat_dims, &prog.cat_b, prog.kk)?)
        }
        _ => None,
    };
    Ok((fidelity_from(&sol, choi), sol, next))
}

/// Best fidelity with `Φ_K` on the main output when the operation acts on
/// `ρ ⊗ τ` and must return the catalyst.
pub fn catalytic_fidelity(rho: &DensityMatrix, tau: &DensityMatrix, k: usize, mode: CatalystMode, opts: &CatalysisOptions) -> Result<FidelityResult> {
    let ret = match mode {
        CatalystMode::Strict => Return::Product,
        CatalystMode::Correlated => Return::Marginal,
    };
    let prog = catalytic_program(rho, tau, k, ret)?;
    let (fid, _, _) = solve_catalytic(&prog, opts, None)?;
    finish(fid, &prog, rho, tau, opts)
}

const RELAXATION_MIN_ITER: usize = 20_000;

/// Idle-catalyst lower bound plus the relaxation upper bound. Any map
/// feasible for the catalytic program, followed by discarding `CD`, is a
/// PPT-preserving map `AC:BD → A′:B′` on `ρ ⊗ τ`, so the catalyst-free
/// optimum on `ρ ⊗ τ` bounds the catalytic one from above.
fn finish(fid: FidelityResult, prog: &CatalyticProgram, rho: &DensityMatrix, tau: &DensityMatrix, opts: &CatalysisOptions) -> Result<FidelityResult> {
    let mut fid = with_idle_catalyst(fid, prog, rho, opts)?;
    let joint = rho.tensor(tau);
    // one small variable, so it can afford far more iterations
    let mut ro = CatalysisOptions { build_choi: false, ..*opts };
    ro.admm.max_iter = ro.admm.max_iter.max(RELAXATION_MIN_ITER);
    let relax = ppt_ops_fidelity(&joint, prog.kk.trailing_zeros() as usize, &ro)?;
    fid.sdp_upper = Some(fid.upper);
    fid.relaxation_upper = Some(relax.upper);
    fid.upper = fid.upper.min(relax.upper).max(fid.lower.unwrap_or(f64::NEG_INFINITY));
    Ok(fid)
}

/// `Λ ⊗ id` with `Λ` the catalyst-free optimizer is feasible in both modes,
/// so its fidelity is a lower bound wherever the repair certificate is
/// weaker or missing (catalysts without interior points).
fn with_idle_catalyst(mut fid: FidelityResult, prog: &CatalyticProgram, rho: &DensityMatrix, opts: &CatalysisOptions) -> Result<FidelityResult> {
    let plain = ppt_ops_fidelity(rho, prog.kk.trailing_zeros() as usize, &CatalysisOptions { build_choi: true, ..*opts })?;
    let (Some(pl), Some(choi)) = (plain.lower, plain.choi.as_ref()) else {
        return Ok(fid);
    };
    if fid.lower.is_some_and(|l| l >= pl) {
        return Ok(fid);
    }
    // recover N from the plain Choi matrix: X₁ = Nᵀ = Tr_out[J (I ⊗ Φ_K)]
    let x1 = idle_block(choi, prog.kk, true);
    let x0 = idle_block(choi, prog.kk, false);
    let m = prog.cat_dims.iter().product::<usize>();
    let omega_id = ChoiMatrix::identity(&[m], &[]).matrix;
    let xs = [linalg::kron(&x1, &omega_id), linalg::kron(&x0, &omega_id)];
    fid.lower = Some(pl);
    fid.upper = fid.upper.max(pl);
    if opts.build_choi {
        let (in_dims, in_b) = space_of(&prog.omega)?;
        fid.choi = Some(twirled_choi(&xs[0], &xs[1], &in_dims, &in_b, &prog.cat_dims, &prog.cat_b, prog.kk)?);
    }
    Ok(fid)
}

fn idle_block(choi: &ChoiMatrix, kk: usize, target: bool) -> CMat {
    let phi = states::phi_matrix(kk);
    let w = if target { phi } else { linalg::axpby(1.0, &linalg::identity(kk * kk), -1.0, &phi) };
    let weighted = &choi.matrix * linalg::kron(&linalg::identity(choi.in_dim()), &w);
    LinearMap::TraceRight { left: choi.in_dim(), right: kk * kk }.apply(&linalg::hermitian_part(&weighted))
}

#[derive(Debug, Clone)]
pub struct Catalyst {
    pub name: String,
    pub state: DensityMatrix,
}

/// 20 random PPT two-qubit catalysts plus five structured ones.
pub fn default_catalysts(seed: u64) -> Result<Vec<Catalyst>> {
    catalysts_of_dim(2, seed)
}

/// 20 random PPT `d⊗d` catalysts plus maximally mixed, pure product,
/// classically correlated (dephased `Φ_d`), isotropic at the PPT boundary
/// and a `d⊗1` local catalyst. `d = 1` gives only the trivial catalyst.
pub fn catalysts_of_dim(d: usize, seed: u64) -> Result<Vec<Catalyst>> {
    if d == 0 {
        return Err(CatalysisError::Input("catalyst dimension 0".into()));
    }
    if d == 1 {
        return Ok(vec![Catalyst { name: "trivial".into(), state: DensityMatrix::maximally_mixed(vec![1, 1], Some(vec![0]))? }]);
    }
    let mut out = Vec::new();
    let mut r = rng::substream(seed, 0xCA7);
    for i in 0..20 {
        let state = states::random_ppt_with(&[d, d], vec![0], 50, &mut r)?;
        out.push(Catalyst { name: format!("random-{i}"), state });
    }
    let mut dephased = linalg::zeros(d * d);
    for i in 0..d {
        dephased[(i * d + i, i * d + i)] = faer::c64::new(1.0 / d as f64, 0.0);
    }
    let mut e00 = linalg::zeros(d * d);
    e00[(0, 0)] = faer::c64::new(1.0, 0.0);
    out.push(Catalyst { name: "maximally-mixed".into(), state: DensityMatrix::maximally_mixed(vec![d, d], Some(vec![0]))? });
    out.push(Catalyst { name: "pure-product".into(), state: DensityMatrix::bipartite(e00, d, d)? });
    out.push(Catalyst { name: "bell-diagonal-half".into(), state: DensityMatrix::bipartite(dephased, d, d)? });
    out.push(Catalyst { name: "isotropic-boundary".into(), state: states::isotropic(d, 1.0 / d as f64)? });
    out.push(Catalyst { name: "local-mixed".into(), state: DensityMatrix::maximally_mixed(vec![d, 1], Some(vec![0]))? });
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub catalyst: String,
    pub fidelity: FidelityResult,
}

/// `catalytic_fidelity` over a list of catalysts, warm-starting between
/// solves of equal shape.
pub fn catalyst_sweep(rho: &DensityMatrix, catalysts: &[Catalyst], k: usize, mode: CatalystMode, opts: &CatalysisOptions) -> Result<Vec<SweepEntry>> {
    let ret = if mode == CatalystMode::Strict { Return::Product } else { Return::Marginal };
    let mut warm: Option<SdpWarmStart> = None;
    let mut out = Vec::with_capacity(catalysts.len());
    for cat in catalysts {
        let prog = catalytic_program(rho, &cat.state, k, ret)?;
        let (fid, _, next) = solve_catalytic(&prog, opts, warm.as_ref())?;
        let fid = finish(fid, &prog, rho, &cat.state, opts)?;
        warm = Some(next);
        log::debug!("catalyst {}: [{:?}, {}] in {} iterations", cat.name, fid.lower, fid.upper, fid.iterations);
        out.push(SweepEntry { catalyst: cat.name.clone(), fidelity: fid });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub rounds: usize,
    pub cat_dims: (usize, usize),
    pub seed: u64,
    pub fidelity: CatalysisOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { rounds: 10, cat_dims: (2, 2), seed: 0, fidelity: CatalysisOptions { build_choi: false, ..Default::default() } }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub catalyst: DensityMatrix,
    pub fidelity: FidelityResult,
    /// Certified lower value of each round (0 when no feasible map was certified).
    pub history: Vec<f64>,
    pub upper_history: Vec<f64>,
}

/// Fixed-point heuristic over catalysts: solve the correlated program for
/// `τ`, then move `τ` halfway toward the catalyst marginal produced by the
/// best map that ignores the return constraint, projected back to PPT
/// states. A fresh random catalyst replaces a stalled one.
pub fn catalyst_search(rho: &DensityMatrix, k: usize, opts: &SearchOptions) -> Result<SearchResult> {
    let (c, d) = opts.cat_dims;
    let dims = vec![c, d];
    let space = cones::PptSpace::new(dims.clone(), vec![1]);
    let mut r = rng::substream(opts.seed, 0x5EA);
    let mut tau = states::random_ppt_with(&dims, vec![0], 50, &mut r)?;
    let mut best: Option<(DensityMatrix, FidelityResult)> = None;
    let mut history = Vec::new();
    let mut upper_history = Vec::new();
    for _ in 0..opts.rounds.max(1) {
        let prog = catalytic_program(rho, &tau, k, Return::Marginal)?;
        let (fid, _, _) = solve_catalytic(&prog, &opts.fidelity, None)?;
        let fid = finish(fid, &prog, rho, &tau, &opts.fidelity)?;
        let score = fid.lower.unwrap_or(0.0);
        history.push(score);
        upper_history.push(fid.upper);
        if best.as_ref().is_none_or(|(_, b)| score > b.lower.unwrap_or(0.0)) {
            best = Some((tau.clone(), fid));
        }
        let free = catalytic_program(rho, &tau, k, Return::None)?;
        let (_, sol, _) = solve_catalytic(&free, &CatalysisOptions { build_choi: false, ..opts.fidelity }, None)?;
        let xs = if sol.feasible_x.is_empty() { &sol.x } else { &sol.feasible_x };
        let contract = LinearMap::ContractLeft { weight: linalg::transpose(prog.omega.matrix()), right: tau.dim() };
        let marginal = linalg::axpby(1.0, &contract.apply(&xs[0]), 1.0, &contract.apply(&xs[1]));
        let moved = cones::repair_density_ppt(&linalg::axpby(0.5, tau.matrix(), 0.5, &marginal), &space)?;
        let next = if linalg::frobenius(&linalg::axpby(1.0, &moved, -1.0, tau.matrix())) < 1e-6 {
            let _: f64 = r.random();
            states::random_ppt_with(&dims, vec![0], 50, &mut r)?
        } else {
            DensityMatrix::new(moved, dims.clone(), Some(vec![0]))?
        };
        tau = next;
    }
    let (catalyst, fidelity) = best.expect("at least one round");
    Ok(SearchResult { catalyst, fidelity, history, upper_history })
}
