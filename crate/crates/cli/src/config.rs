//! Experiment configuration files and their validation.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Verdict a check is expected to reach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
}

impl Verdict {
    pub fn of(holds: bool) -> Self {
        if holds {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }
}

/// Four measurement angles `a1, a2, b1, b2` in radians.
pub type Angles = [f64; 4];

pub const CHSH_ANGLES: Angles = [0.0, PI / 2.0, PI / 4.0, 3.0 * PI / 4.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(flatten)]
    pub experiment: Experiment,
    /// Overrides the built-in expected verdict of a check, by check id.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expect: BTreeMap<String, Verdict>,
    /// Output directory; not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_tolerance() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Experiment {
    Sel(SelParams),
    Pcc(PccParams),
    Bell(BellParams),
    Szabo(SzaboParams),
    Causet(CausetParams),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Sel(_) => "sel",
            Experiment::Pcc(_) => "pcc",
            Experiment::Bell(_) => "bell",
            Experiment::Szabo(_) => "szabo",
            Experiment::Causet(_) => "causet",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelCondition {
    Sels,
    Seld1,
    Seld2,
    RatioAssumption,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelParams {
    /// Seeded random ensembles checked for the SEL implications.
    ImplicationSuite {
        ensembles: usize,
        /// Also run the singlet embedding, whose checks are expected to fail.
        #[serde(default)]
        with_bell_embedding: bool,
    },
    /// The singlet written onto a two-wing lattice layout.
    BellEmbedding {
        #[serde(default = "chsh_angles")]
        angles: Angles,
    },
    /// Conditions on an ensemble file.
    Check {
        ensemble: PathBuf,
        e: serde_json::Value,
        #[serde(default)]
        f: Option<serde_json::Value>,
        surface: Vec<i64>,
        conditions: Vec<SelCondition>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PccParams {
    /// Common-cause extensions of seeded random correlated pairs, and the
    /// positive-correlation theorem on seeded screened triples.
    Suite { pairs: usize, triples: usize },
    /// Extends a family file with one cause per pair.
    Extend { family: PathBuf },
    /// Weak and strong common-cause conditions for given partitions.
    Check {
        family: PathBuf,
        /// One partition per pair, each a list of cells of atom labels.
        /// Omitted: trivial partitions.
        #[serde(default)]
        partitions: Option<Vec<Vec<Vec<String>>>>,
        #[serde(default)]
        common_partition: Option<Vec<Vec<String>>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BellParams {
    /// CHSH value of the singlet against its closed form and the local bound.
    Chsh {
        #[serde(default = "chsh_angles")]
        angles: Angles,
    },
    /// Seeded random factorizable models and the sixteen deterministic ones.
    LocalBound { models: usize, max_hidden_states: usize },
    /// Parameter and outcome independence of the singlet per `(a, b)`.
    PiOi { angle_pairs: Vec<(f64, f64)> },
    /// Locality conditions on a hidden-variable model file.
    Audit { model: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SzaboParams {
    #[serde(default = "chsh_angles")]
    pub angles: Angles,
    #[serde(default = "half_pair")]
    pub left_priors: [f64; 2],
    #[serde(default = "half_pair")]
    pub right_priors: [f64; 2],
    /// Zero picks the most balanced cause per stage.
    #[serde(default)]
    pub solver_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum CausetParams {
    /// One seeded growth run.
    Grow { q: Vec<f64>, steps: usize },
    /// Identities of the given law and of seeded random rational laws.
    Verify {
        #[serde(default)]
        q: Option<Vec<f64>>,
        #[serde(default)]
        random_laws: usize,
        /// Rank for the exact inversion and sum-rule checks.
        exact_rank: usize,
        /// Rank for the covariance and Bell-causality checks.
        max_rank: usize,
    },
    /// Grid search for laws obeying strong SEL.
    StrongSel {
        max_rank: usize,
        divisions: u32,
        #[serde(default)]
        q: Option<Vec<f64>>,
    },
}

fn chsh_angles() -> Angles {
    CHSH_ANGLES
}

fn half_pair() -> [f64; 2] {
    [0.5, 0.5]
}

fn usage(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{field}: {msg}"))
}

fn check_q(field: &str, q: &[f64]) -> Result<(), CliError> {
    if q.first() != Some(&1.0) {
        return Err(usage(field, "q must start with q_0 = 1"));
    }
    if q.iter().any(|x| !(x.is_finite() && *x > 0.0 && *x <= 1.0)) {
        return Err(usage(field, "every q_n must lie in (0, 1]"));
    }
    Ok(())
}

fn check_prior(field: &str, p: &[f64; 2]) -> Result<(), CliError> {
    if p.iter().any(|x| !(*x > 0.0 && x.is_finite())) || (p[0] + p[1] - 1.0).abs() > 1e-12 {
        return Err(usage(field, "priors must be positive and sum to 1"));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    /// Makes file references relative to the config's directory.
    fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        match &mut self.experiment {
            Experiment::Sel(SelParams::Check { ensemble, .. }) => fix(ensemble),
            Experiment::Pcc(PccParams::Extend { family } | PccParams::Check { family, .. }) => fix(family),
            Experiment::Bell(BellParams::Audit { model }) => fix(model),
            _ => {}
        }
    }

    /// Preconditions of the selected module, checked before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.name.is_empty() || self.name.contains(['/', '\\', ',']) {
            return Err(usage("name", "must be non-empty without '/', '\\' or ','"));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(usage("tolerance", "must be finite and non-negative"));
        }
        match &self.experiment {
            Experiment::Sel(p) => match p {
                SelParams::ImplicationSuite { ensembles, .. } if *ensembles == 0 => {
                    return Err(usage("params.ensembles", "must be positive"))
                }
                SelParams::Check { conditions, f, .. } => {
                    if conditions.is_empty() {
                        return Err(usage("params.conditions", "list at least one condition"));
                    }
                    let pair = conditions.iter().any(|c| *c != SelCondition::Sels);
                    if pair && f.is_none() {
                        return Err(usage("params.f", "required by SELD and ratio conditions"));
                    }
                }
                _ => {}
            },
            Experiment::Pcc(PccParams::Suite { pairs, triples }) => {
                if *pairs == 0 && *triples == 0 {
                    return Err(usage("params", "pairs and triples are both zero"));
                }
            }
            Experiment::Pcc(_) => {}
            Experiment::Bell(p) => match p {
                BellParams::Chsh { angles } if angles.iter().any(|a| !a.is_finite()) => {
                    return Err(usage("params.angles", "must be finite"))
                }
                BellParams::LocalBound { max_hidden_states, .. } if *max_hidden_states == 0 => {
                    return Err(usage("params.max_hidden_states", "must be positive"))
                }
                BellParams::PiOi { angle_pairs } => {
                    if angle_pairs.is_empty() {
                        return Err(usage("params.angle_pairs", "list at least one pair"));
                    }
                    if angle_pairs.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
                        return Err(usage("params.angle_pairs", "must be finite"));
                    }
                }
                _ => {}
            },
            Experiment::Szabo(p) => {
                check_prior("params.left_priors", &p.left_priors)?;
                check_prior("params.right_priors", &p.right_priors)?;
                if p.angles.iter().any(|a| !a.is_finite()) {
                    return Err(usage("params.angles", "must be finite"));
                }
            }
            Experiment::Causet(p) => match p {
                CausetParams::Grow { q, steps } => {
                    check_q("params.q", q)?;
                    if *steps > q.len() {
                        return Err(usage("params.steps", format!("{steps} births need q_0..q_{}", steps - 1)));
                    }
                }
                CausetParams::Verify { q, random_laws, exact_rank, max_rank } => {
                    if let Some(q) = q {
                        check_q("params.q", q)?;
                        let need = (exact_rank + 1).max(*max_rank);
                        if q.len() < need {
                            return Err(usage("params.q", format!("ranks need q_0..q_{}", need - 1)));
                        }
                    } else if *random_laws == 0 {
                        return Err(usage("params", "give q or random_laws"));
                    }
                    if *exact_rank > 7 || *max_rank > 7 {
                        return Err(usage("params.max_rank", "ranks above 7 are not enumerated"));
                    }
                }
                CausetParams::StrongSel { max_rank, divisions, q } => {
                    if *max_rank < 2 || *max_rank > 5 {
                        return Err(usage("params.max_rank", "must be between 2 and 5"));
                    }
                    if *divisions == 0 {
                        return Err(usage("params.divisions", "must be positive"));
                    }
                    if let Some(q) = q {
                        check_q("params.q", q)?;
                        if q.len() < *max_rank {
                            return Err(usage("params.q", "too short for max_rank"));
                        }
                    }
                }
            },
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
