//! Frank–Wolfe over PPT density matrices with certified lower bounds.
//!
//! The iterate is a convex combination of floored LMO vertices
//! `(1−ε)s + ε·I/n`, so it never becomes singular. Between LMO calls the
//! weights are re-optimized with pairwise steps over the active set.
//!
//! For convex `f` and any feasible `σ`, `f* ≥ f(σ) + min_s Tr[∇f(σ)(s − σ)]`;
//! the inner minimum is replaced by the LMO's dual certificate, so every
//! reported lower bound is valid even when the inner ADMM stops early. Inner
//! LMO calls are cheap and loose; a tight call at the final iterate produces
//! the reported certificate.

use crate::cones::{self, ConeError, LmoOptions, LmoWarmStart, PptSpace};
use crate::linalg::{self, CMat, LinalgError};

pub trait ConvexObjective {
    /// `f(σ)`, possibly `+∞`.
    fn value(&self, sigma: &CMat) -> Result<f64, LinalgError>;
    fn gradient(&self, sigma: &CMat) -> Result<CMat, LinalgError>;
    /// A priori lower limit (0 for divergences).
    fn floor(&self) -> f64 {
        f64::NEG_INFINITY
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FwOptions {
    pub eps_floor: f64,
    /// LMO calls.
    pub max_iter: usize,
    /// Pairwise steps over the active set after each LMO call.
    pub inner_steps: usize,
    /// Target width `upper − lower`.
    pub tol: f64,
    /// ADMM iteration cap for the loose LMO calls inside the loop.
    pub inner_lmo_iters: usize,
    /// Settings of the final certificate call.
    pub lmo: LmoOptions,
    /// Stop as soon as the lower bound reaches this value.
    pub stop_lower_above: f64,
    /// Stop as soon as the upper bound drops below this value.
    pub stop_upper_below: f64,
}

impl Default for FwOptions {
    fn default() -> Self {
        Self {
            eps_floor: 1e-6,
            max_iter: 150,
            inner_steps: 10,
            tol: 1e-6,
            inner_lmo_iters: 100,
            lmo: LmoOptions { tol: 1e-9, gap_tol: 1e-8, max_iter: 5_000, penalty: 1.0 },
            stop_lower_above: f64::INFINITY,
            stop_upper_below: f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FwOutcome {
    pub sigma: CMat,
    pub upper: f64,
    pub lower: f64,
    /// Certified gap at the final iterate.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub lmo_inexact: usize,
    /// Best objective value after each LMO call (non-increasing).
    pub upper_trace: Vec<f64>,
    /// `(σ, Z)` behind `lower`: `lower = f(σ) − Tr[∇f(σ) σ] + λ_min(∇f(σ) − Z^Γ)`.
    pub lower_witness: Option<(CMat, CMat)>,
}

fn floor_point(x: &CMat, eps: f64) -> CMat {
    let n = x.nrows();
    linalg::axpby(1.0 - eps, x, eps / n as f64, &linalg::identity(n))
}

/// Exact line search on `γ ↦ f(σ + γ·dir)`, `γ ∈ [0, γ_max]`: the
/// directional derivative is nondecreasing, so its root is bracketed and found
/// by Illinois regula falsi. Returns `(0, f0)` when no step improves.
fn line_search(
    obj: &dyn ConvexObjective,
    sigma: &CMat,
    dir: &CMat,
    gmax: f64,
    f0: f64,
) -> Result<(f64, f64), LinalgError> {
    let point = |g: f64| linalg::axpby(1.0, sigma, g, dir);
    let slope = |g: f64| -> Result<f64, LinalgError> { Ok(linalg::inner(&obj.gradient(&point(g))?, dir)) };
    let value = |g: f64| obj.value(&point(g)).map(|v| if v.is_nan() { f64::INFINITY } else { v });
    let (mut a, mut sa) = (0.0, slope(0.0)?);
    if !(sa < 0.0) {
        return Ok((0.0, f0));
    }
    let (mut b, mut sb) = (gmax, slope(gmax)?);
    let g = if sb <= 0.0 {
        gmax
    } else {
        let mut side = 0i8;
        let mut g = gmax / 2.0;
        for _ in 0..30 {
            g = (a * sb - b * sa) / (sb - sa);
            if !(g > a && g < b) {
                g = 0.5 * (a + b);
            }
            let sg = slope(g)?;
            if sg.abs() <= 1e-12 * (sa.abs() + sb.abs()) || b - a <= 1e-12 * gmax {
                break;
            }
            if sg < 0.0 {
                a = g;
                sa = sg;
                if side == -1 {
                    sb *= 0.5;
                }
                side = -1;
            } else {
                b = g;
                sb = sg;
                if side == 1 {
                    sa *= 0.5;
                }
                side = 1;
            }
        }
        g
    };
    let fg = value(g)?;
    if fg < f0 {
        return Ok((g, fg));
    }
    // rounding at a tiny step: fall back to the left end of the bracket
    if a > 0.0 {
        let fa = value(a)?;
        if fa < f0 {
            return Ok((a, fa));
        }
    }
    Ok((0.0, f0))
}

fn cone_err(e: ConeError) -> LinalgError {
    match e {
        ConeError::Linalg(l) => l,
        other => LinalgError::DimensionMismatch(other.to_string()),
    }
}

struct ActiveSet {
    atoms: Vec<CMat>,
    weights: Vec<f64>,
}

impl ActiveSet {
    fn prune(&mut self) {
        let mut k = 0;
        while k < self.atoms.len() {
            if self.weights[k] <= 1e-14 && self.atoms.len() > 1 {
                self.atoms.swap_remove(k);
                self.weights.swap_remove(k);
            } else {
                k += 1;
            }
        }
        let total: f64 = self.weights.iter().sum();
        self.weights.iter_mut().for_each(|w| *w /= total);
    }
}

/// One certificate evaluation: `(gap, lower)` at `sigma`.
fn certify(
    obj: &dyn ConvexObjective,
    space: &PptSpace,
    sigma: &CMat,
    f: f64,
    lmo: &LmoOptions,
    warm: &mut LmoWarmStart,
) -> Result<(f64, f64, cones::LmoResult), LinalgError> {
    let grad = obj.gradient(sigma)?;
    let res = cones::lmo_ppt(&grad, space, lmo, Some(warm)).map_err(cone_err)?;
    let gap = (linalg::inner(&grad, sigma) - res.lower_bound).max(0.0);
    Ok((gap, f - gap, res))
}

/// Minimizes `obj` over PPT density matrices starting from `start`.
pub fn frank_wolfe(obj: &dyn ConvexObjective, space: &PptSpace, start: &CMat, opts: &FwOptions) -> Result<FwOutcome, LinalgError> {
    let n = space.dim();
    let mut set = ActiveSet { atoms: vec![floor_point(start, opts.eps_floor)], weights: vec![1.0] };
    let mut sigma = set.atoms[0].clone();
    let mut f = obj.value(&sigma)?;
    let mut lower = obj.floor();
    let mut gap = f64::INFINITY;
    let mut trace = vec![f];
    let mut warm = cones::lmo_warm_start(n);
    let mut lmo_inexact = 0;
    let mut iterations = 0;
    let mut witness = None;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let loose = LmoOptions {
            max_iter: opts.inner_lmo_iters,
            gap_tol: (0.1 * gap.min(1.0)).max(opts.tol * 0.1),
            ..opts.lmo
        };
        let (g, lo, res) = certify(obj, space, &sigma, f, &loose, &mut warm)?;
        if !res.converged {
            lmo_inexact += 1;
        }
        gap = g;
        if lo > lower {
            lower = lo;
            witness = Some((sigma.clone(), res.dual_witness.clone()));
        }
        if f - lower <= opts.tol || lower >= opts.stop_lower_above || f < opts.stop_upper_below {
            break;
        }
        // Frank–Wolfe step toward the new vertex
        let s = floor_point(&res.minimizer, opts.eps_floor);
        let dir = linalg::axpby(1.0, &s, -1.0, &sigma);
        let (gamma, f_new) = line_search(obj, &sigma, &dir, 1.0, f)?;
        if gamma > 0.0 {
            set.weights.iter_mut().for_each(|w| *w *= 1.0 - gamma);
            set.atoms.push(s);
            set.weights.push(gamma);
            sigma = linalg::axpby(1.0, &sigma, gamma, &dir);
            f = f_new;
        }
        // pairwise steps over the active set
        for _ in 0..opts.inner_steps {
            if set.atoms.len() < 2 {
                break;
            }
            let grad = obj.gradient(&sigma)?;
            let scores: Vec<f64> = set.atoms.iter().map(|a| linalg::inner(&grad, a)).collect();
            let (fw_i, _) = scores.iter().enumerate().min_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap();
            let (aw_i, _) = scores
                .iter()
                .enumerate()
                .filter(|(k, _)| set.weights[*k] > 0.0)
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            if fw_i == aw_i || scores[aw_i] - scores[fw_i] <= 1e-12 * scores[aw_i].abs().max(1.0) {
                break;
            }
            let dir = linalg::axpby(1.0, &set.atoms[fw_i], -1.0, &set.atoms[aw_i]);
            let gmax = set.weights[aw_i];
            let (gamma, f_new) = line_search(obj, &sigma, &dir, gmax, f)?;
            if gamma <= 0.0 {
                break;
            }
            set.weights[fw_i] += gamma;
            set.weights[aw_i] = (set.weights[aw_i] - gamma).max(0.0);
            sigma = linalg::axpby(1.0, &sigma, gamma, &dir);
            f = f_new;
            set.prune();
        }
        trace.push(f);
    }
    // tight certificate at the final iterate
    let decided = lower >= opts.stop_lower_above || f < opts.stop_upper_below;
    if f - lower > opts.tol && !decided {
        let (g, lo, res) = certify(obj, space, &sigma, f, &opts.lmo, &mut warm)?;
        if !res.converged {
            lmo_inexact += 1;
        }
        gap = g;
        if lo > lower {
            lower = lo;
            witness = Some((sigma.clone(), res.dual_witness));
        }
    }
    let converged = f - lower <= opts.tol;
    Ok(FwOutcome { sigma, upper: f, lower: lower.min(f), gap, iterations, converged, lmo_inexact, upper_trace: trace, lower_witness: witness })
}
