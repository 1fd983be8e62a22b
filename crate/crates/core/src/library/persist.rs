//! On-disk layout:
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/decision.bin            (optional)
//! <dir>/mp_000/actor.bin
//! <dir>/mp_000/actor_target.bin
//! <dir>/mp_000/critic.bin
//! <dir>/mp_000/critic_target.bin
//! <dir>/mp_000/classifier.bin
//! <dir>/mp_000/termination.bin  (only when the termination region is not
//!                                another primitive's initiation region)
//! ```
//!
//! Every binary file is listed in the manifest with its CRC32.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{CreationRecord, Library, MotionPrimitive, PrimitiveMeta};
use crate::approximator::codec::{decode_f64s, decode_mlp, encode_f64s, encode_mlp};
use crate::approximator::{Mlp, MlpSpec};
use crate::env::ActionSpace;
use crate::error::{Error, Result};
use crate::execution::{DdpgAgent, DdpgConfig};
use crate::skill::{GoalDisk, InitiationClassifier, TerminationSet};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LIBRARY_FORMAT_VERSION: u32 = 1;
const CLASSIFIER_MAGIC: [u8; 4] = *b"OCSV";
const DECISION_FILE: &str = "decision.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ClassifierEntry {
    nu: f64,
    sigma: f64,
    rho: f64,
    support_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TerminationEntry {
    Goal { disk: GoalDisk },
    /// The initiation region of primitive `of`.
    Initiation { of: usize },
    /// A classifier stored in `termination.bin`.
    Stored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PrimitiveEntry {
    id: usize,
    dir: String,
    meta: PrimitiveMeta,
    ddpg: DdpgConfig,
    action_low: Vec<f64>,
    action_high: Vec<f64>,
    actor: MlpSpec,
    critic: MlpSpec,
    classifier: ClassifierEntry,
    termination: TerminationEntry,
    /// File name → CRC32.
    files: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DecisionEntry {
    spec: MlpSpec,
    width: usize,
    file: String,
    crc32: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    revision: u64,
    mp_count: usize,
    primitives: Vec<PrimitiveEntry>,
    decision: Option<DecisionEntry>,
    log: Vec<CreationRecord>,
}

/// A library read back from disk, with the decision network if one was saved.
#[derive(Debug, Clone)]
pub struct LoadedLibrary {
    pub library: Library,
    pub decision: Option<Mlp>,
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<u32> {
    fs::write(dir.join(name), bytes)?;
    Ok(crc32fast::hash(bytes))
}

fn read_checked(path: &Path, crc: Option<u32>) -> Result<Vec<u8>> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::MissingFile(path.to_path_buf())),
        Err(e) => return Err(e.into()),
    };
    match crc {
        Some(expected) if crc32fast::hash(&bytes) != expected => {
            Err(Error::Corruption { path: path.to_path_buf(), reason: "checksum mismatch".into() })
        }
        None => Err(Error::Corruption { path: path.to_path_buf(), reason: "file not listed in the manifest".into() }),
        _ => Ok(bytes),
    }
}

fn read_mlp(path: PathBuf, spec: &MlpSpec, crc: Option<u32>) -> Result<Mlp> {
    let bytes = read_checked(&path, crc)?;
    decode_mlp(spec.clone(), &bytes).map_err(|e| e.into_error(&path))
}

fn read_classifier(path: PathBuf, crc: Option<u32>) -> Result<InitiationClassifier> {
    let bytes = read_checked(&path, crc)?;
    let values = decode_f64s(CLASSIFIER_MAGIC, &bytes).map_err(|e| e.into_error(&path))?;
    InitiationClassifier::from_values(&values)
        .ok_or_else(|| Error::Corruption { path: path.clone(), reason: "malformed classifier record".into() })
}

impl Library {
    /// Writes the library (and optionally the decision network) into `dir`.
    pub fn save(&self, dir: &Path, decision: Option<&Mlp>) -> Result<()> {
        if let Some(net) = decision {
            if net.output_dim() != self.len() {
                return Err(Error::Contract(format!(
                    "decision network has {} outputs for {} primitives",
                    net.output_dim(),
                    self.len()
                )));
            }
        }
        fs::create_dir_all(dir)?;
        let mut entries = Vec::with_capacity(self.len());
        for p in self.primitives() {
            let name = format!("mp_{:03}", p.id);
            let sub = dir.join(&name);
            fs::create_dir_all(&sub)?;
            let mut files = BTreeMap::new();
            files.insert("actor.bin".to_string(), write_file(&sub, "actor.bin", &encode_mlp(&p.policy.actor))?);
            files.insert("actor_target.bin".to_string(), write_file(&sub, "actor_target.bin", &encode_mlp(&p.policy.actor_target))?);
            files.insert("critic.bin".to_string(), write_file(&sub, "critic.bin", &encode_mlp(&p.policy.critic))?);
            files.insert("critic_target.bin".to_string(), write_file(&sub, "critic_target.bin", &encode_mlp(&p.policy.critic_target))?);
            files.insert(
                "classifier.bin".to_string(),
                write_file(&sub, "classifier.bin", &encode_f64s(CLASSIFIER_MAGIC, &p.initiation.to_values()))?,
            );
            let termination = match &p.termination {
                TerminationSet::Goal(disk) => TerminationEntry::Goal { disk: disk.clone() },
                TerminationSet::Classifier(c) => {
                    match self.primitives().iter().find(|q| Arc::ptr_eq(&q.initiation, c)) {
                        Some(q) => TerminationEntry::Initiation { of: q.id },
                        None => {
                            let crc = write_file(&sub, "termination.bin", &encode_f64s(CLASSIFIER_MAGIC, &c.to_values()))?;
                            files.insert("termination.bin".to_string(), crc);
                            TerminationEntry::Stored
                        }
                    }
                }
            };
            entries.push(PrimitiveEntry {
                id: p.id,
                dir: name,
                meta: p.meta.clone(),
                ddpg: p.policy.config.clone(),
                action_low: p.policy.action_space.low.clone(),
                action_high: p.policy.action_space.high.clone(),
                actor: p.policy.actor.spec().clone(),
                critic: p.policy.critic.spec().clone(),
                classifier: ClassifierEntry {
                    nu: p.initiation.nu,
                    sigma: p.initiation.sigma,
                    rho: p.initiation.rho,
                    support_count: p.initiation.n_support(),
                },
                termination,
                files,
            });
        }
        let decision = match decision {
            Some(net) => Some(DecisionEntry {
                spec: net.spec().clone(),
                width: net.output_dim(),
                file: DECISION_FILE.to_string(),
                crc32: write_file(dir, DECISION_FILE, &encode_mlp(net))?,
            }),
            None => None,
        };
        let manifest = Manifest {
            format_version: LIBRARY_FORMAT_VERSION,
            revision: self.revision(),
            mp_count: self.len(),
            primitives: entries,
            decision,
            log: self.log().to_vec(),
        };
        fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Library> {
        Ok(Self::load_with_decision(dir)?.library)
    }

    /// Reads a directory written by [`Library::save`], verifying versions and checksums.
    pub fn load_with_decision(dir: &Path) -> Result<LoadedLibrary> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let text = match fs::read_to_string(&manifest_path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::MissingFile(manifest_path)),
            Err(e) => return Err(e.into()),
        };
        let raw: serde_json::Value = serde_json::from_str(&text)?;
        let found = raw.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != LIBRARY_FORMAT_VERSION {
            return Err(Error::FormatVersion { found, expected: LIBRARY_FORMAT_VERSION });
        }
        let manifest: Manifest = serde_json::from_value(raw)?;
        if manifest.mp_count != manifest.primitives.len() {
            return Err(Error::Corruption {
                path: manifest_path,
                reason: format!("mp_count {} but {} entries", manifest.mp_count, manifest.primitives.len()),
            });
        }
        let mut initiations = Vec::with_capacity(manifest.primitives.len());
        for e in &manifest.primitives {
            let sub = dir.join(&e.dir);
            initiations.push(Arc::new(read_classifier(sub.join("classifier.bin"), e.files.get("classifier.bin").copied())?));
        }
        let mut primitives = Vec::with_capacity(manifest.primitives.len());
        for (e, initiation) in manifest.primitives.iter().zip(&initiations) {
            let sub = dir.join(&e.dir);
            let crc = |name: &str| e.files.get(name).copied();
            let actor = read_mlp(sub.join("actor.bin"), &e.actor, crc("actor.bin"))?;
            let critic = read_mlp(sub.join("critic.bin"), &e.critic, crc("critic.bin"))?;
            let mut policy = DdpgAgent::from_networks(
                e.ddpg.clone(),
                ActionSpace { low: e.action_low.clone(), high: e.action_high.clone() },
                actor,
                critic,
            )?;
            policy.actor_target = read_mlp(sub.join("actor_target.bin"), &e.actor, crc("actor_target.bin"))?;
            policy.critic_target = read_mlp(sub.join("critic_target.bin"), &e.critic, crc("critic_target.bin"))?;
            let termination = match &e.termination {
                TerminationEntry::Goal { disk } => TerminationSet::Goal(disk.clone()),
                TerminationEntry::Initiation { of } => TerminationSet::Classifier(Arc::clone(initiations.get(*of).ok_or_else(|| {
                    Error::Corruption { path: manifest_path.clone(), reason: format!("termination refers to missing primitive {of}") }
                })?)),
                TerminationEntry::Stored => {
                    TerminationSet::Classifier(Arc::new(read_classifier(sub.join("termination.bin"), crc("termination.bin"))?))
                }
            };
            primitives.push(MotionPrimitive {
                id: e.id,
                initiation: Arc::clone(initiation),
                policy,
                termination,
                meta: e.meta.clone(),
            });
        }
        let library = Library::from_parts(primitives, manifest.revision, manifest.log)?;
        let decision = match manifest.decision {
            Some(d) => {
                if d.width != library.len() || d.spec.output_dim() != library.len() {
                    return Err(Error::Shape(format!(
                        "decision network has {} outputs but the library holds {} primitives",
                        d.width,
                        library.len()
                    )));
                }
                Some(read_mlp(dir.join(&d.file), &d.spec, Some(d.crc32))?)
            }
            None => None,
        };
        Ok(LoadedLibrary { library, decision })
    }
}
