//! Uniform interface over the implemented monotones. Suites only assert the
//! properties a monotone declares.

use serde::{Deserialize, Serialize};

use crate::coherence::{self, CfOptions};
use crate::extension::{self, ExtensionOptions};
use crate::fw::FwOptions;
use crate::measurement;
use crate::ree::{self, MeasuredOptions};
use crate::states::DensityMatrix;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Additive,
    StronglySuperadditive,
    Normalized,
    AsymptoticallyContinuous,
}

/// Exact values have `lower == upper`.
#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub monotone: String,
    pub lower: f64,
    pub upper: f64,
    pub note: String,
}

impl Evaluation {
    fn exact(monotone: &str, v: f64) -> Self {
        Self { monotone: monotone.into(), lower: v, upper: v, note: "exact".into() }
    }
}

pub trait Monotone {
    fn name(&self) -> &'static str;
    fn properties(&self) -> &'static [Property];
    /// Whether the monotone needs a bipartition.
    fn bipartite(&self) -> bool;
    fn evaluate(&self, rho: &DensityMatrix, seed: u64) -> Result<Evaluation, HarnessError>;

    fn declares(&self, p: Property) -> bool {
        self.properties().contains(&p)
    }
}

use Property::*;

pub struct Ree;
pub struct MeasuredRee {
    pub random_bases: usize,
}
pub struct RelativeCoherence;
pub struct Quintessential;
pub struct CoherenceOfFormation;
pub struct Squashed;
pub struct Cemi;

impl Monotone for Ree {
    fn name(&self) -> &'static str {
        "ree"
    }
    // subadditive on tensor powers only; neither additive nor strongly superadditive
    fn properties(&self) -> &'static [Property] {
        &[Normalized, AsymptoticallyContinuous]
    }
    fn bipartite(&self) -> bool {
        true
    }
    fn evaluate(&self, rho: &DensityMatrix, _seed: u64) -> Result<Evaluation, HarnessError> {
        let b = ree::ree_ppt(rho, &FwOptions::default())?;
        Ok(Evaluation { monotone: self.name().into(), lower: b.lower, upper: b.upper, note: b.lower_certificate })
    }
}

impl Monotone for MeasuredRee {
    fn name(&self) -> &'static str {
        "mree"
    }
    fn properties(&self) -> &'static [Property] {
        &[StronglySuperadditive, Normalized, AsymptoticallyContinuous]
    }
    fn bipartite(&self) -> bool {
        true
    }
    fn evaluate(&self, rho: &DensityMatrix, seed: u64) -> Result<Evaluation, HarnessError> {
        let family = measurement::default_family(rho, self.random_bases, seed)?;
        let b = ree::measured_ree(rho, &family, &MeasuredOptions { seed, ..Default::default() })?;
        Ok(Evaluation {
            monotone: self.name().into(),
            lower: b.lower,
            upper: b.upper,
            note: format!("{} POVMs; {}", family.len(), b.lower_certificate),
        })
    }
}

impl Monotone for RelativeCoherence {
    fn name(&self) -> &'static str {
        "cr"
    }
    fn properties(&self) -> &'static [Property] {
        &[Additive, StronglySuperadditive, Normalized, AsymptoticallyContinuous]
    }
    fn bipartite(&self) -> bool {
        false
    }
    fn evaluate(&self, rho: &DensityMatrix, _seed: u64) -> Result<Evaluation, HarnessError> {
        Ok(Evaluation::exact(self.name(), coherence::c_r(rho)))
    }
}

impl Monotone for Quintessential {
    fn name(&self) -> &'static str {
        "q"
    }
    // only upper semicontinuous
    fn properties(&self) -> &'static [Property] {
        &[Additive, StronglySuperadditive, Normalized]
    }
    fn bipartite(&self) -> bool {
        false
    }
    fn evaluate(&self, rho: &DensityMatrix, _seed: u64) -> Result<Evaluation, HarnessError> {
        Ok(Evaluation::exact(self.name(), coherence::quintessential(rho)?))
    }
}

impl Monotone for CoherenceOfFormation {
    fn name(&self) -> &'static str {
        "cf"
    }
    fn properties(&self) -> &'static [Property] {
        &[Additive, StronglySuperadditive, Normalized, AsymptoticallyContinuous]
    }
    fn bipartite(&self) -> bool {
        false
    }
    fn evaluate(&self, rho: &DensityMatrix, seed: u64) -> Result<Evaluation, HarnessError> {
        let r = coherence::c_f(rho, &CfOptions { seed, ..Default::default() })?;
        // c_r ≤ c_f bounds it from below
        let lower = if r.exact { r.value } else { coherence::c_r(rho).min(r.value) };
        Ok(Evaluation { monotone: self.name().into(), lower, upper: r.value, note: if r.exact { "qubit oracle agrees".into() } else { "upper bound".into() } })
    }
}

impl Monotone for Squashed {
    fn name(&self) -> &'static str {
        "sq"
    }
    fn properties(&self) -> &'static [Property] {
        &[Additive, StronglySuperadditive, Normalized, AsymptoticallyContinuous]
    }
    fn bipartite(&self) -> bool {
        true
    }
    fn evaluate(&self, rho: &DensityMatrix, seed: u64) -> Result<Evaluation, HarnessError> {
        let b = extension::squashed_upper(rho, &ExtensionOptions { seed, ..Default::default() })?;
        Ok(Evaluation { monotone: self.name().into(), lower: 0.0, upper: b.value, note: format!("extension dimension {:?}", b.ext_dims) })
    }
}

impl Monotone for Cemi {
    fn name(&self) -> &'static str {
        "cemi"
    }
    fn properties(&self) -> &'static [Property] {
        &[StronglySuperadditive, Normalized, AsymptoticallyContinuous]
    }
    fn bipartite(&self) -> bool {
        true
    }
    fn evaluate(&self, rho: &DensityMatrix, seed: u64) -> Result<Evaluation, HarnessError> {
        let b = extension::cemi_upper(rho, &ExtensionOptions { seed, ..Default::default() })?;
        Ok(Evaluation { monotone: self.name().into(), lower: 0.0, upper: b.value, note: format!("extension dimensions {:?}", b.ext_dims) })
    }
}

pub const NAMES: [&str; 7] = ["ree", "mree", "cr", "q", "cf", "sq", "cemi"];

pub fn by_name(name: &str) -> Option<Box<dyn Monotone>> {
    Some(match name {
        "ree" => Box::new(Ree),
        "mree" => Box::new(MeasuredRee { random_bases: 2 }),
        "cr" => Box::new(RelativeCoherence),
        "q" => Box::new(Quintessential),
        "cf" => Box::new(CoherenceOfFormation),
        "sq" => Box::new(Squashed),
        "cemi" => Box::new(Cemi),
        _ => return None,
    })
}
