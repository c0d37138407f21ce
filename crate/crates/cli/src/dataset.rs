//! Labeled vector datasets on disk.
//!
//! `{"n_classes": k, "domains": [{"name": str, "inputs": [[f64]], "labels": [usize]}]}`

use domainshift_core::json;
use domainshift_core::metrics::SampleDomain;
use domainshift_core::smos::LabeledSet;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorDomain {
    pub name: String,
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorDataset {
    pub n_classes: usize,
    pub domains: Vec<VectorDomain>,
}

impl VectorDataset {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let parse = |m: String| CliError::new("ParseError", format!("{}: {m}", path.display()));
        let text = fs::read_to_string(path).map_err(|e| parse(e.to_string()))?;
        let data: VectorDataset = serde_json::from_str(&text).map_err(|e| parse(e.to_string()))?;
        data.validate()?;
        Ok(data)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = json::to_canonical_string(self).expect("dataset serializes");
        fs::write(path, text).map_err(|e| CliError::io(path, e))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::new("InvariantViolation", m));
        if self.domains.is_empty() {
            return bad("dataset has no domains".into());
        }
        let mut names = BTreeSet::new();
        let dim = self.domains.iter().flat_map(|d| d.inputs.first()).map(Vec::len).next();
        for (i, d) in self.domains.iter().enumerate() {
            if !names.insert(d.name.as_str()) {
                return bad(format!("domains[{i}].name: duplicate domain {:?}", d.name));
            }
            if d.inputs.is_empty() {
                return bad(format!("domains[{i}].inputs: domain {:?} is empty", d.name));
            }
            let set = self.labeled(d);
            set.validate()
                .map_err(|e| CliError::new("InvariantViolation", format!("domains[{i}]: {e}")))?;
            if Some(set.input_dim()) != dim {
                return bad(format!("domains[{i}].inputs: dimension differs from other domains"));
            }
        }
        Ok(())
    }

    fn labeled(&self, d: &VectorDomain) -> LabeledSet {
        LabeledSet {
            inputs: d.inputs.clone(),
            labels: d.labels.clone(),
            n_classes: self.n_classes,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.domains[0].inputs[0].len()
    }

    pub fn names(&self) -> Vec<String> {
        self.domains.iter().map(|d| d.name.clone()).collect()
    }

    pub fn domain(&self, name: &str) -> Result<&VectorDomain, CliError> {
        self.domains
            .iter()
            .find(|d| d.name == name)
            .ok_or_else(|| CliError::new("UnknownDomain", format!("no domain named {name:?}")))
    }

    /// Labeled sets for the named domains, in the given order.
    pub fn sets(&self, names: &[String]) -> Result<Vec<LabeledSet>, CliError> {
        names.iter().map(|n| Ok(self.labeled(self.domain(n)?))).collect()
    }

    pub fn pooled(&self) -> LabeledSet {
        let sets: Vec<LabeledSet> = self.domains.iter().map(|d| self.labeled(d)).collect();
        LabeledSet::concat(&sets).expect("validated dataset")
    }

    pub fn sample_domains(&self, names: &[String]) -> Result<Vec<SampleDomain>, CliError> {
        names
            .iter()
            .map(|n| {
                let d = self.domain(n)?;
                Ok(SampleDomain {
                    name: d.name.clone(),
                    samples: d.inputs.clone(),
                })
            })
            .collect()
    }
}
