//! Configuration-driven verification suites and their reports.
//!
//! Every trial draws from its own RNG substream `(seed, index)`, so a single
//! trial can be rerun standalone with [`run_trial`] and the report of a
//! configuration is byte-identical across runs once the isolated `timing`
//! block is dropped.

pub mod monotone;
pub mod state_file;

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cones::ConeError;
use crate::catalysis::{self, CatalysisError, CatalysisOptions, CatalystMode};
use crate::coherence::{self, CfOptions, CoherenceError};
use crate::divergences::{self, DivergenceError};
use crate::extension::ExtensionError;
use crate::fw::FwOptions;
use crate::linalg::{self, LinalgError};
use crate::measurement::{self, MeasurementError};
use crate::record::{CheckStatus, InequalityRecord, Term};
use crate::ree::{self, CheckOptions, ReeError, SuperadditivityFamilies};
use crate::rng;
use crate::states::{self, DensityMatrix, StateError};

pub use monotone::{Monotone, Property};

pub const SCHEMA: &str = "resmono.report.v1";
pub const SEED_ENV: &str = "RESMONO_SEED";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Ree(#[from] ReeError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error(transparent)]
    Coherence(#[from] CoherenceError),
    #[error(transparent)]
    Extension(#[from] ExtensionError),
    #[error(transparent)]
    Catalysis(#[from] CatalysisError),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

impl HarnessError {
    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Piani,
    Superadd,
    Continuity,
    Pinsker,
    Normalization,
    CoherenceIdentities,
    Theorem2,
    Subadditivity,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Piani,
        Suite::Superadd,
        Suite::Continuity,
        Suite::Pinsker,
        Suite::Normalization,
        Suite::CoherenceIdentities,
        Suite::Theorem2,
        Suite::Subadditivity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Piani => "piani",
            Suite::Superadd => "superadd",
            Suite::Continuity => "continuity",
            Suite::Pinsker => "pinsker",
            Suite::Normalization => "normalization",
            Suite::CoherenceIdentities => "coherence-identities",
            Suite::Theorem2 => "theorem2",
            Suite::Subadditivity => "subadditivity",
        }
    }
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown suite {s:?}; expected one of {}", Suite::ALL.map(|x| x.name()).join(", "))))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub suite: Suite,
    pub trials: usize,
    pub seed: u64,
    /// `"2..5"` (single dimensions) or `"2x2,2x3"` (factor lists).
    pub dims: String,
    pub tolerance: f64,
    /// Above this fraction of inconclusive trials the suite fails.
    pub max_inconclusive: f64,
    /// Random product bases added to each measurement family.
    pub random_bases: usize,
    /// Frank–Wolfe LMO calls for relative entropy bounds.
    pub fw_iters: usize,
    pub sdp_max_iter: usize,
    /// Coherence suite: trials that also run the qubit `C_f` cross-check.
    pub cf_trials: usize,
    pub cf_tolerance: f64,
    /// Superadditivity suite: which monotone to check.
    pub monotone: String,
}

/// Default seed: `RESMONO_SEED` when set, else 0.
pub fn default_seed() -> u64 {
    std::env::var(SEED_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

impl SuiteConfig {
    pub fn defaults(suite: Suite) -> Self {
        let base = SuiteConfig {
            suite,
            trials: 20,
            seed: default_seed(),
            dims: "2x2".into(),
            tolerance: ree::CHECK_EPS,
            max_inconclusive: 0.2,
            random_bases: 2,
            fw_iters: FwOptions::default().max_iter,
            sdp_max_iter: 50_000,
            cf_trials: 0,
            cf_tolerance: 1e-4,
            monotone: "mree".into(),
        };
        match suite {
            Suite::Piani => SuiteConfig { trials: 100, dims: "2x2x2x2".into(), ..base },
            Suite::Superadd => SuiteConfig { trials: 10, dims: "2x2x2x2".into(), ..base },
            // only a valid REE upper is needed here; the family bound tightens it
            Suite::Continuity => SuiteConfig { trials: 50, dims: "2x2,2x3".into(), fw_iters: 50, ..base },
            Suite::Pinsker => SuiteConfig { trials: 200, ..base },
            Suite::Normalization => SuiteConfig { trials: 4, dims: "2..5".into(), tolerance: 1e-6, ..base },
            Suite::CoherenceIdentities => SuiteConfig { trials: 200, dims: "2..4".into(), tolerance: 1e-9, cf_trials: 50, ..base },
            Suite::Theorem2 => SuiteConfig { trials: 26, dims: "3x3".into(), tolerance: 1e-3, sdp_max_iter: 2000, ..base },
            Suite::Subadditivity => SuiteConfig { trials: 50, tolerance: 1e-4, ..base },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.tolerance > 0.0) || !(self.cf_tolerance > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.max_inconclusive) {
            return bad(format!("max_inconclusive {} outside [0, 1]", self.max_inconclusive));
        }
        if self.fw_iters == 0 || self.sdp_max_iter == 0 {
            return bad("iteration caps must be positive".into());
        }
        let layouts = parse_dims(&self.dims)?;
        match self.suite {
            Suite::Piani | Suite::Superadd => {
                if layouts != [vec![2, 2, 2, 2]] {
                    return bad(format!("{} runs on 2x2x2x2 states", self.suite.name()));
                }
            }
            Suite::Normalization => {
                if layouts.iter().any(|l| l.len() != 1 || l[0] < 2 || l[0] > 9) {
                    return bad("normalization takes local dimensions 2..9".into());
                }
            }
            Suite::CoherenceIdentities => {
                if layouts.iter().any(|l| l.len() != 1 || l[0] < 2 || l[0] > 4) {
                    return bad("coherence identities take dimensions 2..4".into());
                }
            }
            Suite::Theorem2 => {
                if layouts != [vec![3, 3]] {
                    return bad("theorem2 runs on the 3x3 tiles state".into());
                }
            }
            Suite::Continuity | Suite::Pinsker | Suite::Subadditivity => {
                if layouts.iter().any(|l| l.len() != 2 || l.iter().product::<usize>() > 16 || l.contains(&1)) {
                    return bad(format!("{} takes bipartite layouts such as 2x2", self.suite.name()));
                }
            }
        }
        if self.suite == Suite::Superadd {
            let m = monotone::by_name(&self.monotone).ok_or_else(|| HarnessError::Config(format!("unknown monotone {:?}", self.monotone)))?;
            if !m.declares(Property::StronglySuperadditive) {
                return bad(format!("monotone {} does not declare strong superadditivity", self.monotone));
            }
            if self.monotone != "mree" {
                return bad(format!("no four-party checker for monotone {}", self.monotone));
            }
        }
        Ok(())
    }

    fn check_options(&self) -> CheckOptions {
        let mut opts = CheckOptions::default();
        opts.ree.max_iter = self.fw_iters;
        opts.measured.ree.max_iter = self.fw_iters;
        opts.measured.seed = self.seed;
        opts
    }
}

/// `"2..5"` → `[[2], [3], [4], [5]]`; `"2x2,2x3"` → `[[2, 2], [2, 3]]`.
pub fn parse_dims(s: &str) -> Result<Vec<Vec<usize>>> {
    let bad = || HarnessError::Config(format!("cannot parse dims {s:?}"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).map(|d| vec![d]).collect());
    }
    let out: Vec<Vec<usize>> = s
        .split(',')
        .map(|part| part.trim().split('x').map(|d| d.trim().parse::<usize>().map_err(|_| bad())).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    if out.is_empty() || out.iter().any(|l| l.is_empty() || l.contains(&0)) {
        return Err(bad());
    }
    Ok(out)
}

/// Optional per-suite keys of a config file section.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Overrides {
    trials: Option<usize>,
    seed: Option<u64>,
    dims: Option<String>,
    tolerance: Option<f64>,
    max_inconclusive: Option<f64>,
    random_bases: Option<usize>,
    fw_iters: Option<usize>,
    sdp_max_iter: Option<usize>,
    cf_trials: Option<usize>,
    cf_tolerance: Option<f64>,
    monotone: Option<String>,
}

/// Parses a config file: one `[suite-name]` section per suite with
/// `key = value` lines. Omitted keys take the suite defaults.
pub fn parse_config(text: &str) -> Result<Vec<SuiteConfig>> {
    let sections: BTreeMap<String, toml::Value> = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut out = Vec::new();
    for (name, body) in sections {
        let suite: Suite = name.parse()?;
        let o: Overrides = body.try_into().map_err(|e: toml::de::Error| HarnessError::Config(format!("[{name}] {e}")))?;
        let mut c = SuiteConfig::defaults(suite);
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = o.$f { c.$f = v; })* };
        }
        take!(trials, seed, dims, tolerance, max_inconclusive, random_bases, fw_iters, sdp_max_iter, cf_trials, cf_tolerance, monotone);
        c.validate()?;
        out.push(c);
    }
    if out.is_empty() {
        return Err(HarnessError::Config("no suite sections".into()));
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<Vec<SuiteConfig>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    /// Base seed; the trial's stream is `substream(seed, index)`.
    pub seed: u64,
    pub inputs_digest: String,
    pub label: String,
    /// Plot abscissa (a trial parameter).
    pub x: f64,
    pub status: CheckStatus,
    /// Smallest slack over the trial's checks; negative on failure.
    pub slack: f64,
    pub checks: Vec<InequalityRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteStatus {
    Pass,
    Fail,
    TooInconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    pub inconclusive_fraction: f64,
    /// Largest `−slack` over failed trials, 0 without failures.
    pub max_violation: f64,
    pub min_slack: f64,
    pub status: SuiteStatus,
}

/// Wall-clock data, kept apart so the rest of the report is reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub trial_seconds: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub config: SuiteConfig,
    pub summary: Summary,
    pub trials: Vec<TrialRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl Report {
    /// JSON without the timing block; identical for identical configs.
    pub fn deterministic_json(&self) -> String {
        let stripped = Report { timing: None, ..self.clone() };
        serde_json::to_string_pretty(&stripped).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Report = serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("report: {e}")))?;
        if r.schema != SCHEMA {
            return Err(HarnessError::Config(format!("report schema {:?}, expected {SCHEMA:?}", r.schema)));
        }
        Ok(r)
    }

    /// One row per trial; the printed side terms come from the tightest check.
    pub fn to_csv(&self) -> String {
        #[derive(Serialize)]
        struct Row<'a> {
            index: usize,
            seed: u64,
            inputs_digest: &'a str,
            label: &'a str,
            x: f64,
            status: CheckStatus,
            slack: f64,
            check: &'a str,
            lhs_lower: f64,
            lhs_upper: f64,
            rhs_lower: f64,
            rhs_upper: f64,
            checks: usize,
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for t in &self.trials {
            let tight = t.checks.iter().min_by(|a, b| a.slack.total_cmp(&b.slack));
            let (check, ll, lu, rl, ru) = match tight {
                Some(c) => (c.check.as_str(), c.lhs.lower, c.lhs.upper, c.rhs_lower(), c.rhs_upper()),
                None => ("", f64::NAN, f64::NAN, f64::NAN, f64::NAN),
            };
            w.serialize(Row {
                index: t.index,
                seed: t.seed,
                inputs_digest: &t.inputs_digest,
                label: &t.label,
                x: t.x,
                status: t.status,
                slack: t.slack,
                check,
                lhs_lower: ll,
                lhs_upper: lu,
                rhs_lower: rl,
                rhs_upper: ru,
                checks: t.checks.len(),
            })
            .expect("csv row");
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("utf-8")
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| HarnessError::Io(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, bytes).map_err(|e| HarnessError::Io(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

/// SHA-256 over the layouts and matrix entries of the trial inputs.
pub fn inputs_digest(inputs: &[&DensityMatrix]) -> String {
    let mut h = Sha256::new();
    for rho in inputs {
        for d in rho.dims() {
            h.update((*d as u64).to_le_bytes());
        }
        h.update(b";");
        let m = rho.matrix();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                h.update(m[(i, j)].re.to_le_bytes());
                h.update(m[(i, j)].im.to_le_bytes());
            }
        }
        h.update(b"|");
    }
    format!("{:x}", h.finalize())
}

fn trial(config: &SuiteConfig, index: usize, inputs: &[&DensityMatrix], label: String, x: f64, checks: Vec<InequalityRecord>) -> TrialRecord {
    let status = if checks.iter().any(|c| c.status == CheckStatus::Fail) {
        CheckStatus::Fail
    } else if checks.iter().any(|c| c.status == CheckStatus::Inconclusive) {
        CheckStatus::Inconclusive
    } else {
        CheckStatus::Pass
    };
    let slack = checks.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min);
    TrialRecord { index, seed: config.seed, inputs_digest: inputs_digest(inputs), label, x, status, slack, checks }
}

/// `lhs ≤ bound` style record with an exactly known bound.
fn ceiling_record(check: &str, name: &str, value: Term, bound: f64, note: String) -> InequalityRecord {
    let slack = bound - value.upper;
    let status = if value.upper <= bound {
        CheckStatus::Pass
    } else if value.lower > bound {
        CheckStatus::Fail
    } else {
        CheckStatus::Inconclusive
    };
    InequalityRecord {
        check: check.into(),
        lhs: Term::exact(name, bound),
        rhs: vec![value],
        rhs_constant: 0.0,
        allowance: 0.0,
        slack,
        // a pass needs the whole interval under the bound; slack only goes negative on a certified failure
        status,
        note,
    }
}

/// Four-party ensemble: pure, low-rank, products of entangled pairs and
/// noisy maximally entangled pairs next to pure pairs.
fn four_party_state<R: Rng + ?Sized>(index: usize, r: &mut R) -> Result<(DensityMatrix, String)> {
    let dims = [2, 2, 2, 2];
    let pair = |rank: usize, r: &mut R| states::random_density_with(&[2, 2], Some(vec![0]), Some(rank), r);
    Ok(match index % 5 {
        0 => (states::random_density_with(&dims, None, Some(1), r)?, "pure".into()),
        1 => (states::random_density_with(&dims, None, Some(2), r)?, "rank-2".into()),
        2 => (pair(1, r)?.tensor(&pair(2, r)?), "product-of-pairs".into()),
        3 => {
            let p = r.random_range(0.5..1.0);
            let iso = states::isotropic(2, p)?;
            (iso.tensor(&pair(1, r)?), format!("isotropic-{p:.3}-x-pure"))
        }
        _ => (states::random_density_with(&dims, None, Some(4), r)?, "rank-4".into()),
    })
}

fn bipartite_state<R: Rng + ?Sized>(dims: &[usize], index: usize, r: &mut R) -> Result<DensityMatrix> {
    let n: usize = dims.iter().product();
    let rank = match index % 3 {
        0 => n,
        1 => 2,
        _ => 1,
    };
    Ok(states::random_density_with(dims, Some(vec![0]), Some(rank), r)?)
}

/// Number of trials a config actually runs.
pub fn trial_count(config: &SuiteConfig) -> Result<usize> {
    Ok(match config.suite {
        Suite::Normalization => parse_dims(&config.dims)?.len(),
        Suite::Continuity => config.trials * parse_dims(&config.dims)?.len(),
        Suite::Theorem2 => config.trials.min(26),
        _ => config.trials,
    })
}

/// Runs trial `index` of `config` on its own.
pub fn run_trial(config: &SuiteConfig, index: usize) -> Result<TrialRecord> {
    config.validate()?;
    let mut r = rng::substream(config.seed, index as u64);
    let opts = config.check_options();
    let layouts = parse_dims(&config.dims)?;
    match config.suite {
        Suite::Piani => {
            let (rho, label) = four_party_state(index, &mut r)?;
            let layout = rho.marginal(&[2, 3])?.with_cut(vec![0])?;
            let family = measurement::default_family(&layout, config.random_bases, config.seed ^ index as u64)?;
            let rec = ree::check_piani(&rho, &family, &opts)?;
            Ok(trial(config, index, &[&rho], label, (index % 5) as f64, vec![rec]))
        }
        Suite::Superadd => {
            let (rho, label) = four_party_state(index, &mut r)?;
            let whole_layout = rho.clone().with_cut(vec![0, 2])?;
            let first_layout = rho.marginal(&[0, 1])?.with_cut(vec![0])?;
            let seed = config.seed ^ index as u64;
            let whole = measurement::default_family(&whole_layout, config.random_bases, seed)?;
            let first = measurement::default_family(&first_layout, config.random_bases, seed.wrapping_add(1))?;
            let second = measurement::default_family(&first_layout, config.random_bases, seed.wrapping_add(2))?;
            let fams = SuperadditivityFamilies { whole: &whole, first: &first, second: &second };
            let rec = ree::check_strong_superadditivity(&rho, &fams, &opts)?;
            Ok(trial(config, index, &[&rho], label, (index % 5) as f64, vec![rec]))
        }
        Suite::Continuity => {
            let dims = &layouts[index / config.trials % layouts.len()];
            let rho = bipartite_state(dims, index, &mut r)?;
            let other = bipartite_state(dims, index + 1, &mut r)?;
            let t = if index % 4 == 3 { 1.0 } else { r.random_range(0.001..0.3) };
            let omega = rho.mix(&other, t)?;
            let layout = rho.clone();
            let family = measurement::default_family(&layout, config.random_bases, config.seed ^ index as u64)?;
            let rec = ree::check_asymptotic_continuity(&rho, &omega, &family, &opts)?;
            let eps = divergences::trace_distance(&rho, &omega)?;
            Ok(trial(config, index, &[&rho, &omega], format!("{}x{}", dims[0], dims[1]), eps, vec![rec]))
        }
        Suite::Pinsker => {
            let dims = &layouts[index % layouts.len()];
            let rho = bipartite_state(dims, index, &mut r)?;
            let family = measurement::default_family(&rho, config.random_bases, config.seed ^ index as u64)?;
            let rec = ree::check_pinsker(&rho, &family, &opts)?;
            Ok(trial(config, index, &[&rho], format!("{}x{}", dims[0], dims[1]), rho.purity(), vec![rec]))
        }
        Suite::Normalization => {
            let d = layouts.get(index).ok_or_else(|| HarnessError::Config(format!("trial {index} beyond dims")))?[0];
            let rec = ree::check_normalization(d, config.random_bases, &opts)?;
            let phi = states::max_entangled(d)?;
            Ok(trial(config, index, &[&phi], format!("d={d}"), d as f64, vec![rec]))
        }
        Suite::CoherenceIdentities => coherence_trial(config, index, &layouts, &mut r),
        Suite::Theorem2 => theorem2_trial(config, index),
        Suite::Subadditivity => {
            let dims = &layouts[index % layouts.len()];
            let rho = bipartite_state(dims, index, &mut r)?;
            let rec = subadditivity_record(&rho, config)?;
            Ok(trial(config, index, &[&rho], format!("{}x{}", dims[0], dims[1]), rho.purity(), rec))
        }
    }
}

fn coherence_trial<R: Rng + ?Sized>(config: &SuiteConfig, index: usize, layouts: &[Vec<usize>], r: &mut R) -> Result<TrialRecord> {
    let d = layouts[index % layouts.len()][0];
    let rank = r.random_range(1..=d);
    let rho = states::random_density_with(&[d], None, Some(rank), r)?;
    let residual = coherence::check_cr_identity(&rho)?;
    let mut checks = vec![ceiling_record("cr-identity", "tolerance", Term::exact("|C_r - I_c(max_corr)|", residual), config.tolerance, format!("d={d}"))];
    let pair = states::random_density_with(&[2, 2], Some(vec![0]), Some(r.random_range(1..=4)), r)?;
    checks.push(coherence::check_cr_strong_superadditivity(&pair)?);
    let mut inputs = vec![rho, pair];
    if index < config.cf_trials {
        let q = states::random_density_with(&[2], None, None, r)?;
        let cf = coherence::c_f(&q, &CfOptions { seed: config.seed ^ index as u64, ..Default::default() })?;
        let oracle = cf.oracle.expect("qubit oracle");
        let diff = (cf.optimizer - oracle).abs();
        checks.push(ceiling_record(
            "cf-qubit-oracle",
            "tolerance",
            Term::exact("|C_f optimizer - brute force|", diff),
            config.cf_tolerance,
            format!("optimizer {:.9}, brute force {:.9}", cf.optimizer, oracle),
        ));
        // C_f is an upper bound sitting above the exact C_r
        let cr = coherence::c_r(&q);
        let slack = cf.value - cr + 1e-6;
        checks.push(InequalityRecord {
            check: "cf-above-cr".into(),
            lhs: Term::new("C_f upper", cf.value, cf.value),
            rhs: vec![Term::exact("C_r", cr)],
            rhs_constant: 0.0,
            allowance: 1e-6,
            slack,
            status: if slack >= 0.0 { CheckStatus::Pass } else { CheckStatus::Fail },
            note: String::new(),
        });
        inputs.push(q);
    }
    let refs: Vec<&DensityMatrix> = inputs.iter().collect();
    Ok(trial(config, index, &refs, format!("d={d}"), d as f64, checks))
}

fn theorem2_trial(config: &SuiteConfig, index: usize) -> Result<TrialRecord> {
    let tiles = states::tiles_upb();
    let ceiling = 0.5 + config.tolerance;
    // stop once the bound sits halfway inside the tolerance
    let mut opts = CatalysisOptions::default().with_ceiling(0.5 + config.tolerance / 2.0);
    opts.admm.max_iter = config.sdp_max_iter;
    if index == 0 {
        let f = catalysis::ppt_ops_fidelity(&tiles, 1, &opts)?;
        let mut checks = vec![ceiling_record("fidelity-ceiling", "1/2 + tol", Term::new("F(tiles)", f.lower.unwrap_or(0.0), f.upper), ceiling, format!("{:?} after {} iterations", f.status, f.iterations))];
        if let Some(choi) = &f.choi {
            checks.push(choi_record(choi)?);
        }
        return Ok(trial(config, index, &[&tiles], "no catalyst".into(), 0.0, checks));
    }
    let cats = catalysis::default_catalysts(config.seed)?;
    let cat = cats.get(index - 1).ok_or_else(|| HarnessError::Config(format!("trial {index} beyond the {} catalysts", cats.len())))?;
    opts.build_choi = false;
    let f = catalysis::catalytic_fidelity(&tiles, &cat.state, 1, CatalystMode::Correlated, &opts)?;
    let checks = vec![ceiling_record(
        "fidelity-ceiling",
        "1/2 + tol",
        Term::new("F(tiles, catalyst)", f.lower.unwrap_or(0.0), f.upper),
        ceiling,
        format!(
            "{:?} after {} iterations; constrained dual {:.7}, relaxation {:.7}",
            f.status,
            f.iterations,
            f.sdp_upper.unwrap_or(f64::NAN),
            f.relaxation_upper.unwrap_or(f64::NAN)
        ),
    )];
    Ok(trial(config, index, &[&tiles, &cat.state], cat.name.clone(), cat.state.dim() as f64, checks))
}

/// Re-verifies a Choi matrix directly: CP, TP and PPT within `1e−6`.
fn choi_record(choi: &catalysis::ChoiMatrix) -> Result<InequalityRecord> {
    let chk = choi.verify()?;
    let worst = (-chk.cp_min_eig).max(-chk.ppt_min_eig).max(chk.tp_residual).max(0.0);
    Ok(ceiling_record("choi-certificate", "tolerance", Term::exact("max violation", worst), 1e-6, format!("{chk:?}")))
}

fn subadditivity_record(rho: &DensityMatrix, config: &SuiteConfig) -> Result<Vec<InequalityRecord>> {
    let fw = FwOptions { max_iter: config.fw_iters, ..Default::default() };
    let seq = ree::regularized_ree_sequence(rho, 2, &fw)?;
    let (u1, u2) = (seq[0].upper, seq[1].upper);
    let slack = u1 - u2 + config.tolerance;
    let mono = InequalityRecord {
        check: "per-copy-upper-nonincreasing".into(),
        lhs: Term::exact("upper_1", u1),
        rhs: vec![Term::exact("upper_2 / 2", u2)],
        rhs_constant: 0.0,
        allowance: config.tolerance,
        slack,
        status: if slack >= 0.0 { CheckStatus::Pass } else { CheckStatus::Fail },
        note: String::new(),
    };
    // recompute the two-copy witness value from the certificate itself
    let sigma = seq[1].upper_certificate.as_ref().ok_or_else(|| HarnessError::Config("missing two-copy witness".into()))?;
    let rho2 = rho.tensor_power(2);
    let space = crate::cones::PptSpace::of(&rho2)?;
    let pt_min = space.min_pt_eigenvalue(sigma)?;
    let value = divergences::umegaki_matrices(rho2.matrix(), sigma)?.value() / 2.0;
    let trace_err = (linalg::trace(sigma).re - 1.0).abs();
    let mismatch = (value - u2).abs().max(-pt_min.min(0.0)).max(trace_err);
    let witness = ceiling_record("two-copy-witness", "tolerance", Term::exact("witness mismatch", mismatch), 1e-9, format!("D(rho^2||sigma)/2 = {value:.12}"));
    Ok(vec![mono, witness])
}

fn summarize(config: &SuiteConfig, trials: &[TrialRecord]) -> Summary {
    let count = |s| trials.iter().filter(|t| t.status == s).count();
    let (pass, fail, inconclusive) = (count(CheckStatus::Pass), count(CheckStatus::Fail), count(CheckStatus::Inconclusive));
    let n = trials.len();
    let inconclusive_fraction = inconclusive as f64 / n.max(1) as f64;
    let max_violation = trials.iter().filter(|t| t.status == CheckStatus::Fail).map(|t| -t.slack).fold(0.0, f64::max);
    let min_slack = trials.iter().map(|t| t.slack).fold(f64::INFINITY, f64::min);
    let status = if fail > 0 {
        SuiteStatus::Fail
    } else if inconclusive_fraction > config.max_inconclusive {
        SuiteStatus::TooInconclusive
    } else {
        SuiteStatus::Pass
    };
    Summary { trials: n, pass, fail, inconclusive, inconclusive_fraction, max_violation, min_slack, status }
}

/// Runs every trial of the suite.
pub fn run_suite(config: &SuiteConfig) -> Result<Report> {
    run_suite_with(config, |_, _| {})
}

/// As [`run_suite`], calling `progress(done, total)` after each trial.
pub fn run_suite_with(config: &SuiteConfig, mut progress: impl FnMut(usize, usize)) -> Result<Report> {
    config.validate()?;
    let n = trial_count(config)?;
    let start = Instant::now();
    let mut trials = Vec::with_capacity(n);
    let mut trial_seconds = Vec::with_capacity(n);
    for index in 0..n {
        let t0 = Instant::now();
        trials.push(run_trial(config, index)?);
        trial_seconds.push(t0.elapsed().as_secs_f64());
        progress(index + 1, n);
    }
    let summary = summarize(config, &trials);
    Ok(Report {
        schema: SCHEMA.into(),
        config: config.clone(),
        summary,
        trials,
        timing: Some(Timing { wall_seconds: start.elapsed().as_secs_f64(), trial_seconds }),
    })
}

/// Writes the report as JSON or CSV.
pub fn emit_report(report: &Report, path: &Path, format: ReportFormat) -> Result<()> {
    let text = match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => report.to_csv(),
    };
    write_atomic(path, text.as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(HarnessError::Config(format!("unknown format {s:?}"))),
        }
    }
}
