//! Instance and dataset files, measure selectors, and input digests.
//!
//! An instance file is a JSON object:
//!
//! ```json
//! {
//!   "alphabet": ["z1", "z2"],
//!   "reference": [0.5, 0.5],
//!   "data": [0.5, 0.5],
//!   "models": ["theta0"],
//!   "loss": [[0.0, 1.0]]
//! }
//! ```
//!
//! `data` is optional. A loss entry may be the string `"inf"`. A dataset file
//! is `{"entries": ["z1", "z2", ...]}` with labels from the instance alphabet.

use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use gibbsgap::measure::first_violation;
use gibbsgap::{aggregate, mixed_reference, type_of, Alphabet, Dataset, DiscreteMeasure, Error, LossModel};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::report::InputDigest;

/// Files read by a command, in the order they were read.
#[derive(Debug, Default)]
pub struct Inputs {
    digests: Vec<InputDigest>,
}

impl Inputs {
    pub fn read(&mut self, role: &str, path: &str) -> CliResult<String> {
        let bytes = std::fs::read(Path::new(path))
            .map_err(|e| CliError::input(format!("{path}: cannot read {role} file: {e}")))?;
        self.digests.push(InputDigest {
            role: role.to_owned(),
            path: path.to_owned(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        String::from_utf8(bytes).map_err(|_| CliError::input(format!("{path}: {role} file is not valid UTF-8")))
    }

    pub fn into_digests(self) -> Vec<InputDigest> {
        self.digests
    }
}

fn parse_json<'a, T: Deserialize<'a>>(path: &str, text: &'a str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::input(format!("{path}: {e}")))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LossEntry {
    Number(f64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    alphabet: Vec<String>,
    reference: Vec<f64>,
    #[serde(default)]
    data: Option<Vec<f64>>,
    models: Vec<String>,
    loss: Vec<Vec<LossEntry>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    entries: Vec<String>,
}

#[derive(Debug)]
pub struct Instance {
    pub path: String,
    pub lm: LossModel,
    pub reference: DiscreteMeasure,
    pub data: Option<DiscreteMeasure>,
}

fn field_error(path: &str, field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::input(format!("{path}: field `{field}`: {msg}"))
}

fn measure_field(path: &str, field: &str, alphabet: &Arc<Alphabet>, weights: Vec<f64>) -> CliResult<DiscreteMeasure> {
    if weights.len() != alphabet.size() {
        return Err(field_error(
            path,
            field,
            format!(
                "expected {} weights (one per alphabet label), found {}",
                alphabet.size(),
                weights.len()
            ),
        ));
    }
    DiscreteMeasure::new(alphabet.clone(), weights).map_err(|e| field_error(path, field, e))
}

fn loss_value(path: &str, m: usize, i: usize, entry: LossEntry) -> CliResult<f64> {
    match entry {
        LossEntry::Number(v) => Ok(v),
        LossEntry::Text(s) if matches!(s.to_ascii_lowercase().as_str(), "inf" | "+inf" | "infinity") => {
            Ok(f64::INFINITY)
        }
        LossEntry::Text(s) => Err(field_error(
            path,
            &format!("loss[{m}][{i}]"),
            format!("expected a number or \"inf\", found \"{s}\""),
        )),
    }
}

impl Instance {
    pub fn load(inputs: &mut Inputs, path: &str) -> CliResult<Self> {
        let text = inputs.read("instance", path)?;
        let raw: RawInstance = parse_json(path, &text)?;
        let alphabet = Alphabet::new(raw.alphabet).map_err(|e| field_error(path, "alphabet", e))?;
        let models = Alphabet::new(raw.models).map_err(|e| field_error(path, "models", e))?;
        if raw.loss.len() != models.size() {
            return Err(field_error(
                path,
                "loss",
                format!(
                    "expected {} rows (one per model), found {}",
                    models.size(),
                    raw.loss.len()
                ),
            ));
        }
        let mut table = Vec::with_capacity(raw.loss.len());
        for (m, row) in raw.loss.into_iter().enumerate() {
            if row.len() != alphabet.size() {
                return Err(field_error(
                    path,
                    &format!("loss[{m}]"),
                    format!(
                        "expected {} entries (one per alphabet label), found {}",
                        alphabet.size(),
                        row.len()
                    ),
                ));
            }
            let row = row
                .into_iter()
                .enumerate()
                .map(|(i, e)| loss_value(path, m, i, e))
                .collect::<CliResult<Vec<f64>>>()?;
            table.push(row);
        }
        let lm = LossModel::new(alphabet.clone(), models, table).map_err(|e| match e {
            Error::InvalidLoss { model, point, .. } => field_error(path, &format!("loss[{model}][{point}]"), e),
            other => field_error(path, "loss", other),
        })?;
        let reference = measure_field(path, "reference", &alphabet, raw.reference)?;
        let data = raw
            .data
            .map(|w| measure_field(path, "data", &alphabet, w))
            .transpose()?;
        Ok(Self {
            path: path.to_owned(),
            lm,
            reference,
            data,
        })
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        self.lm.alphabet()
    }

    pub fn model_index(&self, label: Option<&str>) -> CliResult<(usize, String)> {
        let models = self.lm.models();
        match label {
            Some(l) => models.index_of(l).map(|i| (i, l.to_owned())).ok_or_else(|| {
                CliError::input(format!(
                    "--model: unknown model `{l}` (instance {} has: {})",
                    self.path,
                    models.labels().join(", ")
                ))
            }),
            None if models.size() == 1 => Ok((0, models.labels()[0].clone())),
            None => Err(CliError::input(format!(
                "--model is required: instance {} has {} models",
                self.path,
                models.size()
            ))),
        }
    }

    pub fn data(&self) -> CliResult<&DiscreteMeasure> {
        self.data.as_ref().ok_or_else(|| {
            field_error(
                &self.path,
                "data",
                "selector `data` used but the instance has no data measure",
            )
        })
    }
}

pub fn load_dataset(inputs: &mut Inputs, path: &str, alphabet: &Arc<Alphabet>) -> CliResult<Dataset> {
    let text = inputs.read("dataset", path)?;
    let raw: RawDataset = parse_json(path, &text)?;
    if raw.entries.is_empty() {
        return Err(field_error(path, "entries", "dataset must contain at least one entry"));
    }
    let entries = raw
        .entries
        .iter()
        .enumerate()
        .map(|(t, label)| {
            alphabet
                .index_of(label)
                .ok_or_else(|| field_error(path, &format!("entries[{t}]"), format!("unknown label `{label}`")))
        })
        .collect::<CliResult<Vec<usize>>>()?;
    Dataset::new(alphabet.clone(), entries).map_err(|e| field_error(path, "entries", e))
}

pub fn parse_weights(flag: &str, list: &str) -> CliResult<Vec<f64>> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::input(format!("{flag}: `{}` is not a decimal weight", s.trim())))
        })
        .collect()
}

/// Ways to name a measure on the data alphabet.
#[derive(Clone, Debug, PartialEq)]
pub enum Selector {
    Reference,
    Data,
    Weights(Vec<f64>),
    /// The type of a dataset file.
    Dataset(String),
    /// Type of the concatenation of the two dataset selectors.
    Aggregate,
    /// Even mixture of the two compared measures.
    Mix,
}

impl FromStr for Selector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "reference" => Ok(Selector::Reference),
            "data" => Ok(Selector::Data),
            "aggregate" => Ok(Selector::Aggregate),
            "mix" => Ok(Selector::Mix),
            _ => {
                if let Some(list) = s.strip_prefix("weights:") {
                    parse_weights("weights", list)
                        .map(Selector::Weights)
                        .map_err(|e| e.to_string())
                } else if let Some(path) = s.strip_prefix("dataset:") {
                    Ok(Selector::Dataset(path.to_owned()))
                } else {
                    Err(format!(
                        "unknown selector `{s}`; expected reference, data, aggregate, mix, weights:W1,W2,... or dataset:PATH"
                    ))
                }
            }
        }
    }
}

/// A resolved measure and, for dataset selectors, the dataset itself.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub measure: DiscreteMeasure,
    pub dataset: Option<Dataset>,
}

/// Resolves a selector that does not depend on other measures.
pub fn resolve(inputs: &mut Inputs, inst: &Instance, flag: &str, sel: &Selector) -> CliResult<Resolved> {
    let measure = |m: DiscreteMeasure| Resolved {
        measure: m,
        dataset: None,
    };
    match sel {
        Selector::Reference => Ok(measure(inst.reference.clone())),
        Selector::Data => Ok(measure(inst.data()?.clone())),
        Selector::Weights(w) => {
            if w.len() != inst.alphabet().size() {
                return Err(CliError::input(format!(
                    "{flag}: expected {} weights (one per alphabet label), found {}",
                    inst.alphabet().size(),
                    w.len()
                )));
            }
            DiscreteMeasure::new(inst.alphabet().clone(), w.clone())
                .map(measure)
                .map_err(|e| CliError::input(format!("{flag}: {e}")))
        }
        Selector::Dataset(path) => {
            let z = load_dataset(inputs, path, inst.alphabet())?;
            Ok(Resolved {
                measure: type_of(&z).into_measure(),
                dataset: Some(z),
            })
        }
        Selector::Aggregate | Selector::Mix => Err(CliError::input(format!(
            "{flag}: `aggregate` and `mix` are only valid as --reference of decompose"
        ))),
    }
}

/// Resolves a reference that may combine `p1` and `p2`.
pub fn resolve_reference(
    inputs: &mut Inputs,
    inst: &Instance,
    sel: &Selector,
    p1: &Resolved,
    p2: &Resolved,
) -> CliResult<DiscreteMeasure> {
    match sel {
        Selector::Aggregate => match (&p1.dataset, &p2.dataset) {
            (Some(z1), Some(z2)) => {
                let z = aggregate(z1, z2).map_err(|e| CliError::from_core("--reference aggregate", e, None))?;
                Ok(type_of(&z).into_measure())
            }
            _ => Err(CliError::input(
                "--reference aggregate: both --p1 and --p2 must be dataset:PATH selectors",
            )),
        },
        Selector::Mix => {
            mixed_reference(&p1.measure, &p2.measure).map_err(|e| CliError::from_core("--reference mix", e, None))
        }
        other => resolve(inputs, inst, "--reference", other).map(|r| r.measure),
    }
}

/// Exit-2 error naming the first point where `p` is not dominated by `reference`.
pub fn require_dominated(
    name: &str,
    p: &DiscreteMeasure,
    reference_name: &str,
    reference: &DiscreteMeasure,
) -> CliResult<()> {
    match first_violation(p, reference).map_err(|e| CliError::from_core(name, e, None))? {
        None => Ok(()),
        Some(point) => Err(CliError::Infeasible(format!(
            "{name} is not absolutely continuous with respect to {reference_name}: point `{}` has mass {} under {name} but 0 under {reference_name}",
            p.alphabet().label(point).unwrap_or("?"),
            p.weight(point)
        ))),
    }
}
