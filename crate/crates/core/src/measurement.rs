//! POVMs and finite PPT measurement families.
//!
//! Effects are stored on the full space of the state they measure, in the
//! state's own factor order. A family is tagged PPT only after every effect
//! has been checked to have a positive partial transpose on the B side.

use faer::c64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, CMat, LinalgError};
use crate::rng;
use crate::states::{self, DensityMatrix, StateError};

pub const POVM_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum MeasurementError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("malformed POVM {name}: {reason}")]
    Malformed { name: String, reason: String },
    #[error("empty measurement family")]
    Empty,
}

pub type Result<T> = std::result::Result<T, MeasurementError>;

#[derive(Debug, Clone)]
pub struct Povm {
    pub name: String,
    pub effects: Vec<CMat>,
}

impl Povm {
    /// Checks that effects are PSD and sum to the identity.
    pub fn new(name: impl Into<String>, effects: Vec<CMat>) -> Result<Self> {
        let name = name.into();
        let bad = |reason: String| MeasurementError::Malformed { name: name.clone(), reason };
        let n = effects.first().ok_or_else(|| bad("no effects".into()))?.nrows();
        let mut total = linalg::zeros(n);
        for (i, e) in effects.iter().enumerate() {
            if e.nrows() != n || e.ncols() != n {
                return Err(bad(format!("effect {i} has wrong shape")));
            }
            let min = linalg::min_eigenvalue(e)?;
            if min < -POVM_TOL {
                return Err(bad(format!("effect {i} has eigenvalue {min:e}")));
            }
            total = linalg::axpby(1.0, &total, 1.0, e);
        }
        let dev = linalg::max_abs(&linalg::axpby(1.0, &total, -1.0, &linalg::identity(n)));
        if dev > POVM_TOL {
            return Err(bad(format!("effects sum to identity only within {dev:e}")));
        }
        Ok(Self { name, effects: effects.iter().map(linalg::hermitian_part).collect() })
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    /// `Re Tr[E_i X]` for each effect.
    pub fn apply(&self, x: &CMat) -> Vec<f64> {
        self.effects.iter().map(|e| linalg::inner(e, x)).collect()
    }

    /// True when every effect has PSD partial transpose over `b_systems`.
    pub fn is_ppt(&self, dims: &[usize], b_systems: &[usize]) -> Result<bool> {
        for e in &self.effects {
            let pt = linalg::partial_transpose(e, dims, b_systems)?;
            if linalg::min_eigenvalue(&pt)? < -POVM_TOL {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConeTag {
    Ppt,
}

#[derive(Debug, Clone)]
pub struct MeasurementFamily {
    pub povms: Vec<Povm>,
    pub cone_tag: ConeTag,
    pub provenance: String,
}

impl MeasurementFamily {
    /// Validates PPT membership of every effect with respect to `rho`'s cut.
    pub fn new_ppt(povms: Vec<Povm>, layout: &DensityMatrix, provenance: impl Into<String>) -> Result<Self> {
        if povms.is_empty() {
            return Err(MeasurementError::Empty);
        }
        let b = layout.b_systems()?;
        for p in &povms {
            if p.dim() != layout.dim() {
                return Err(MeasurementError::Malformed { name: p.name.clone(), reason: "dimension".into() });
            }
            if !p.is_ppt(layout.dims(), &b)? {
                return Err(MeasurementError::Malformed { name: p.name.clone(), reason: "not PPT".into() });
            }
        }
        Ok(Self { povms, cone_tag: ConeTag::Ppt, provenance: provenance.into() })
    }

    pub fn len(&self) -> usize {
        self.povms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.povms.is_empty()
    }
}

/// Reorders an operator written in `[A-side factors..., B-side factors...]`
/// order back to the layout's own factor order.
fn from_cut_order(m: &CMat, layout: &DensityMatrix) -> Result<CMat> {
    let cut = layout.cut().ok_or(StateError::MissingCut)?.to_vec();
    let b = layout.b_systems()?;
    let grouped: Vec<usize> = cut.iter().chain(b.iter()).copied().collect();
    let grouped_dims: Vec<usize> = grouped.iter().map(|&k| layout.dims()[k]).collect();
    let mut inverse = vec![0; grouped.len()];
    for (pos, &k) in grouped.iter().enumerate() {
        inverse[k] = pos;
    }
    Ok(linalg::permute_subsystems(m, &grouped_dims, &inverse)?)
}

fn complement(e: &CMat) -> CMat {
    linalg::axpby(1.0, &linalg::identity(e.nrows()), -1.0, e)
}

/// Local computational-basis coincidence test `(E, I − E)` with
/// `E = Σ_i |ii⟩⟨ii|` on `C^d ⊗ C^d`.
pub fn detection_measurement(d: usize) -> Result<Povm> {
    if d < 2 {
        return Err(StateError::Range(format!("local dimension {d} < 2")).into());
    }
    let mut diag = vec![0.0; d * d];
    for i in 0..d {
        diag[i * d + i] = 1.0;
    }
    let e = linalg::diag_real(&diag);
    Povm::new(format!("detection(d={d})"), vec![e.clone(), complement(&e)])
}

/// The detection test averaged over `U ⊗ U*`:
/// `E = Φ_d + (I − Φ_d)/(d + 1)`. It has the same expectation as the raw
/// test on every twirl-invariant state.
pub fn twirled_detection(d: usize) -> Result<Povm> {
    if d < 2 {
        return Err(StateError::Range(format!("local dimension {d} < 2")).into());
    }
    let phi = states::phi_matrix(d);
    let e = linalg::axpby(1.0, &phi, 1.0 / (d as f64 + 1.0), &complement(&phi));
    Povm::new(format!("twirled-detection(d={d})"), vec![e.clone(), complement(&e)])
}

/// Detection-type test across a cut of arbitrary layout; uses the first
/// `min(d_A, d_B)` levels when the sides differ.
pub fn detection_for(layout: &DensityMatrix) -> Result<Povm> {
    let (da, db) = layout.cut_dims()?;
    let k = da.min(db);
    let mut diag = vec![0.0; da * db];
    for i in 0..k {
        diag[i * db + i] = 1.0;
    }
    let e = from_cut_order(&linalg::diag_real(&diag), layout)?;
    Povm::new(format!("detection(cut {da}x{db})"), vec![e.clone(), complement(&e)])
}

pub fn twirled_detection_for(layout: &DensityMatrix) -> Result<Option<Povm>> {
    let (da, db) = layout.cut_dims()?;
    if da != db {
        return Ok(None);
    }
    let p = twirled_detection(da)?;
    let effects = p.effects.iter().map(|e| from_cut_order(e, layout)).collect::<Result<Vec<_>>>()?;
    Ok(Some(Povm::new(p.name, effects)?))
}

/// Product basis `U_A|a⟩ ⊗ U_B|b⟩` across the cut.
pub fn product_basis(layout: &DensityMatrix, ua: &CMat, ub: &CMat, name: String) -> Result<Povm> {
    let (da, db) = layout.cut_dims()?;
    let u = linalg::kron(ua, ub);
    let mut effects = Vec::with_capacity(da * db);
    for k in 0..da * db {
        let v: Vec<c64> = (0..da * db).map(|i| u[(i, k)]).collect();
        effects.push(from_cut_order(&linalg::projector(&v), layout)?);
    }
    Povm::new(name, effects)
}

pub fn computational_basis(layout: &DensityMatrix) -> Result<Povm> {
    let (da, db) = layout.cut_dims()?;
    product_basis(layout, &linalg::identity(da), &linalg::identity(db), "computational".into())
}

pub fn random_product_basis<R: Rng + ?Sized>(layout: &DensityMatrix, rng: &mut R, index: usize) -> Result<Povm> {
    let (da, db) = layout.cut_dims()?;
    let ua = states::haar_unitary(da, rng);
    let ub = states::haar_unitary(db, rng);
    product_basis(layout, &ua, &ub, format!("random-product-{index}"))
}

/// Detection tests (raw and, for equal sides, twirled), the computational
/// product basis, and `n_random` Haar-random local product bases.
pub fn default_family(layout: &DensityMatrix, n_random: usize, seed: u64) -> Result<MeasurementFamily> {
    let mut povms = vec![detection_for(layout)?];
    if let Some(t) = twirled_detection_for(layout)? {
        povms.push(t);
    }
    povms.push(computational_basis(layout)?);
    let mut r = rng::from_seed(seed);
    for i in 0..n_random {
        povms.push(random_product_basis(layout, &mut r, i)?);
    }
    MeasurementFamily::new_ppt(povms, layout, format!("default(n_random={n_random}, seed={seed}, {})", rng::RNG_NAME))
}

/// Two-outcome POVM `(E, I − E)` from a single effect with `0 ⪯ E ⪯ I`.
pub fn binary(name: impl Into<String>, e: CMat) -> Result<Povm> {
    let c = complement(&e);
    Povm::new(name, vec![e, c])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{isotropic, max_entangled};

    #[test]
    fn detection_expectations() {
        for d in 2..6 {
            let p = detection_measurement(d).unwrap();
            let phi = max_entangled(d).unwrap();
            assert!((p.apply(phi.matrix())[0] - 1.0).abs() < 1e-14);
            let mixed = linalg::scale(&linalg::identity(d * d), 1.0 / (d * d) as f64);
            assert!((p.apply(&mixed)[0] - 1.0 / d as f64).abs() < 1e-14);
            // σ* = (1/d)Φ + ((d−1)/d)(I−Φ)/(d²−1) is isotropic with p = 1/d
            let sigma = isotropic(d, 1.0 / d as f64).unwrap();
            let expect = 2.0 / (d as f64 + 1.0);
            assert!((p.apply(sigma.matrix())[0] - expect).abs() < 1e-14);
            let t = twirled_detection(d).unwrap();
            assert!((t.apply(sigma.matrix())[0] - expect).abs() < 1e-14);
            assert!((t.apply(phi.matrix())[0] - 1.0).abs() < 1e-14);
            assert!(p.is_ppt(&[d, d], &[1]).unwrap());
            assert!(t.is_ppt(&[d, d], &[1]).unwrap());
        }
    }

    #[test]
    fn default_family_is_ppt_on_four_party_cut() {
        let layout = DensityMatrix::maximally_mixed(vec![2, 2, 2, 2], Some(vec![0, 2])).unwrap();
        let fam = default_family(&layout, 3, 1).unwrap();
        assert_eq!(fam.len(), 6);
        // twirled detection across the grouped cut sees Φ_2 ⊗ Φ_2 as Φ_4
        let phi = max_entangled(2).unwrap();
        let pair = phi.tensor(&phi);
        assert_eq!(pair.cut(), layout.cut());
        let tw = fam.povms.iter().find(|p| p.name.starts_with("twirled")).unwrap();
        assert!((tw.apply(pair.matrix())[0] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn malformed_povm_rejected() {
        let e = linalg::diag_real(&[1.0, 0.5]);
        assert!(Povm::new("bad", vec![e]).is_err());
        let neg = linalg::diag_real(&[2.0, 1.0]);
        assert!(Povm::new("neg", vec![neg, linalg::diag_real(&[-1.0, 0.0])]).is_err());
    }

    #[test]
    fn raw_detection_is_not_ppt_certifying_but_ppt() {
        let layout = DensityMatrix::maximally_mixed(vec![3, 2], Some(vec![0])).unwrap();
        let p = detection_for(&layout).unwrap();
        assert!(p.is_ppt(&[3, 2], &[1]).unwrap());
        assert!(twirled_detection_for(&layout).unwrap().is_none());
    }
}
