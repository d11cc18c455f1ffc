//! Run configuration: JSON files, command-line flags and their merge.
//!
//! A config file holds the shared keys of [`Common`] at the top level and at
//! most one block per command, keyed by the command name in snake case.
//! Flags override file values field by field. Unknown keys are rejected, all
//! of them in one diagnostic.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Configuration fault; maps to exit status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Keys shared by every command.
#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default)]
pub struct Common {
    /// Named parameter set (see `spinline presets`).
    #[arg(long)]
    pub preset: Option<String>,
    /// asymmetric | symmetric | minimal5 | single_channel
    #[arg(long)]
    pub topology: Option<String>,
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long)]
    pub delta1: Option<f64>,
    #[arg(long)]
    pub delta2: Option<f64>,
    #[arg(long)]
    pub delta3: Option<f64>,
    /// Registration time.
    #[arg(long)]
    pub t0: Option<f64>,
    /// Master seed for randomized searches (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Eigenvalue branch: larger | ground | excited.
    #[arg(long)]
    pub policy: Option<String>,
    /// Angle step of region sweeps, 1/k for integer k.
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Raster resolution per axis.
    #[arg(long)]
    pub raster: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Initial state of the two senders.
#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default)]
pub struct StateArgs {
    /// IS10 | IS01 | IS11 | IS1 | IS2 | IS3
    #[arg(long)]
    pub scenario: Option<String>,
    /// alpha11,alpha12,alpha21,alpha22
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// phi11,phi12,phi21,phi22
    #[arg(long, value_delimiter = ',')]
    pub phi: Option<Vec<f64>>,
    /// fermion | dense
    #[arg(long)]
    pub route: Option<String>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default)]
pub struct EvolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub state: StateArgs,
    /// Time grid lo:hi:step or a comma list.
    #[arg(long)]
    pub times: Option<String>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default)]
pub struct ReceiverArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub state: StateArgs,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default)]
pub struct RegionArgs {
    /// IS10 | IS01 | IS1 | IS2 | IS3
    #[arg(long)]
    pub scenario: Option<String>,
    /// Free phase of the first sender in IS10.
    #[arg(long)]
    pub phi12: Option<f64>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default)]
pub struct OverlapArgs {
    #[arg(long)]
    pub phi12: Option<f64>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default)]
pub struct TransferArgs {
    #[arg(long)]
    pub from: Option<usize>,
    #[arg(long)]
    pub to: Option<usize>,
    /// Time window lo:hi.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default)]
pub struct OptimizeBoundaryArgs {
    /// Search interval lo:hi for delta1.
    #[arg(long)]
    pub delta1_box: Option<String>,
    #[arg(long)]
    pub delta2_box: Option<String>,
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Coarse grid points per axis seeding the simplex.
    #[arg(long)]
    pub seed_grid: Option<usize>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default)]
pub struct OptimizeLinkArgs {
    #[arg(long)]
    pub delta3_box: Option<String>,
    #[arg(long)]
    pub delta3_samples: Option<usize>,
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default)]
pub struct SeparationArgs {
    /// lo:hi:step or a comma list.
    #[arg(long)]
    pub delta3_grid: Option<String>,
    #[arg(long)]
    pub t_grid: Option<String>,
    #[arg(long)]
    pub phi12: Option<f64>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default)]
pub struct Gate1Args {
    /// lo:hi:step, increasing, inside [0.5, 1).
    #[arg(long)]
    pub lambda_grid: Option<String>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default)]
pub struct Gate2Args {
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
pub struct NoArgs {}

/// Every command's option block has this shape.
pub trait Block: Serialize + DeserializeOwned + Default + Clone {}

impl<T: Serialize + DeserializeOwned + Default + Clone> Block for T {}

/// Resolved configuration of one run, as recorded in its manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig<T> {
    #[serde(flatten)]
    pub common: Common,
    #[serde(skip)]
    pub command: &'static str,
    #[serde(skip)]
    pub args: T,
    #[serde(skip)]
    pub block_key: String,
}

impl<T: Block> RunConfig<T> {
    pub fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(&self.common).expect("serializable");
        let obj = v.as_object_mut().expect("object");
        obj.retain(|_, x| !x.is_null());
        let mut block = serde_json::to_value(&self.args).expect("serializable");
        if let Some(b) = block.as_object_mut() {
            b.retain(|_, x| !x.is_null());
            if !b.is_empty() {
                obj.insert(self.block_key.clone(), block);
            }
        }
        v
    }

    pub fn seed(&self) -> u64 {
        self.common.seed.unwrap_or(0)
    }
}

pub fn block_key(command: &str) -> String {
    command.replace('-', "_")
}

const COMMANDS: [&str; 11] = [
    "presets",
    "evolve",
    "receiver",
    "region",
    "overlap",
    "transfer",
    "optimize-boundary",
    "optimize-link",
    "separation-scan",
    "gate1",
    "gate2",
];

fn keys_of<T: Serialize + Default>() -> BTreeSet<String> {
    match serde_json::to_value(T::default()) {
        Ok(Value::Object(m)) => m.keys().cloned().collect(),
        _ => BTreeSet::new(),
    }
}

/// Reads a config file or a manifest (whose recorded config is used).
pub fn read_document(path: &Path, command: &str) -> anyhow::Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("{} is not valid JSON: {e}", path.display())))?;
    let Value::Object(mut obj) = value else {
        return Err(usage(format!("{} must hold a JSON object", path.display())));
    };
    if obj.contains_key("manifest_version") {
        let recorded = obj.get("command").and_then(Value::as_str).unwrap_or_default();
        if recorded != command {
            return Err(usage(format!("manifest {} records command '{recorded}', not '{command}'", path.display())));
        }
        return match obj.remove("config") {
            Some(Value::Object(c)) => Ok(c),
            _ => Err(usage(format!("manifest {} has no config object", path.display()))),
        };
    }
    Ok(obj)
}

/// Checks every key against the schema of `T` and returns the parsed
/// shared keys and this command's block.
pub fn parse_document<T: Block>(obj: &Map<String, Value>, command: &str) -> anyhow::Result<(Common, T)> {
    let shared = keys_of::<Common>();
    let own = block_key(command);
    let mut offending = Vec::new();
    for (k, v) in obj {
        if shared.contains(k) {
            continue;
        }
        if *k == own {
            let allowed = keys_of::<T>();
            match v {
                Value::Object(b) => offending.extend(b.keys().filter(|x| !allowed.contains(*x)).map(|x| format!("{k}.{x}"))),
                _ => offending.push(format!("{k} (must be an object)")),
            }
        } else if COMMANDS.iter().any(|c| block_key(c) == *k) {
            // Blocks of other commands may share a file.
            continue;
        } else {
            offending.push(k.clone());
        }
    }
    if !offending.is_empty() {
        return Err(usage(format!("unknown config keys: {}", offending.join(", "))));
    }
    let mut top = obj.clone();
    top.retain(|k, _| shared.contains(k));
    let common: Common =
        serde_json::from_value(Value::Object(top)).map_err(|e| usage(format!("invalid config value: {e}")))?;
    let block: T = match obj.get(&own) {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| usage(format!("invalid {own} block: {e}")))?,
        None => T::default(),
    };
    Ok((common, block))
}

/// `over` wins wherever it has a value.
pub fn overlay<T: Block>(base: &T, over: &T) -> T {
    let mut b = serde_json::to_value(base).expect("serializable");
    if let (Some(bm), Value::Object(om)) = (b.as_object_mut(), serde_json::to_value(over).expect("serializable")) {
        for (k, v) in om {
            if !v.is_null() {
                bm.insert(k, v);
            }
        }
    }
    serde_json::from_value(b).expect("same schema")
}

pub fn resolve<T: Block>(
    command: &'static str,
    config: Option<&Path>,
    flags_common: &Common,
    flags: &T,
) -> anyhow::Result<RunConfig<T>> {
    let (file_common, file_block) = match config {
        Some(path) => parse_document::<T>(&read_document(path, command)?, command)?,
        None => (Common::default(), T::default()),
    };
    Ok(RunConfig {
        common: overlay(&file_common, flags_common),
        command,
        args: overlay(&file_block, flags),
        block_key: block_key(command),
    })
}

/// `lo:hi:step` (inclusive) or a comma-separated list.
pub fn parse_grid(text: &str, what: &str) -> anyhow::Result<Vec<f64>> {
    let bad = || usage(format!("{what} '{text}' is neither lo:hi:step nor a comma list"));
    let parts: Vec<&str> = text.split(':').collect();
    let nums = |xs: &[&str]| xs.iter().map(|x| x.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>();
    match parts.len() {
        1 => {
            let v: Vec<f64> = text.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
            if v.is_empty() {
                return Err(bad());
            }
            Ok(v)
        }
        3 => {
            let v = nums(&parts).map_err(|_| bad())?;
            let (lo, hi, step) = (v[0], v[1], v[2]);
            if !(step > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) {
                return Err(bad());
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|k| lo + k as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}

/// `lo:hi` with `lo < hi`.
pub fn parse_interval(text: &str, what: &str) -> anyhow::Result<(f64, f64)> {
    let bad = || usage(format!("{what} '{text}' must be lo:hi with lo < hi"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let (lo, hi) = (a.trim().parse::<f64>().map_err(|_| bad())?, b.trim().parse::<f64>().map_err(|_| bad())?);
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(bad())
    }
}
