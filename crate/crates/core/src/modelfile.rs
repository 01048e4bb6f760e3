//! Model definition files.
//!
//! Plain `key = value` text (TOML):
//!
//! ```text
//! model = "grover"        # grover | ising | table
//! n_qubits = 6
//! J = 1.0
//! gamma = 0.5
//! targets = [63]          # grover, optional; default all-ones
//! threshold_k = 1         # ising
//! potential = [0.0, ...]  # table, 2^N values
//! max_v_cond = -1.0       # optional threshold partition
//! partition_file = "p.json"
//! k_B = 1.0
//! ```
//!
//! The partition is taken from `partition_file` if present, otherwise from
//! `max_v_cond`, otherwise from the model default (Grover targets, Ising
//! cut count `<= threshold_k`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::configspace::{
    partition_from_threshold, ModelSpec, Partition, Potential, DEFAULT_ENUMERATION_LIMIT,
};
use crate::error::{Error, Result};
use crate::models::{ising_partition, GroverSpec, IsingChainSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Grover,
    Ising,
    Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub model: ModelKind,
    pub n_qubits: u32,
    #[serde(rename = "J", default = "one")]
    pub j: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_v_cond: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition_file: Option<PathBuf>,
    #[serde(rename = "k_B", default = "one")]
    pub k_b: f64,
}

fn one() -> f64 {
    1.0
}

/// How the partition of a resolved model was obtained.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum PartitionSource {
    File { path: PathBuf },
    Threshold { max_v_cond: f64 },
    ModelDefault,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if !(file.k_b > 0.0) || !file.k_b.is_finite() {
            return Err(Error::Parse(format!(
                "k_B must be positive, got {}",
                file.k_b
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let mut file = Self::parse(&text)?;
        // relative partition files are resolved next to the model file
        if let (Some(p), Some(dir)) = (&file.partition_file, path.parent()) {
            if p.is_relative() {
                file.partition_file = Some(dir.join(p));
            }
        }
        Ok(file)
    }

    /// Replaces `N`; explicit Grover targets and tables are kept and revalidated.
    pub fn with_n_qubits(mut self, n_qubits: u32) -> Self {
        self.n_qubits = n_qubits;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn grover(&self) -> Result<GroverSpec> {
        match &self.targets {
            None => GroverSpec::new(self.n_qubits, self.j, self.gamma),
            Some(t) => GroverSpec::with_targets(self.n_qubits, self.j, self.gamma, t.clone()),
        }
    }

    pub fn ising(&self) -> Result<IsingChainSpec> {
        let k = self
            .threshold_k
            .ok_or_else(|| Error::Parse("ising model needs threshold_k".into()))?;
        IsingChainSpec::new(self.n_qubits, self.j, self.gamma, k)
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        match self.model {
            ModelKind::Grover => self.grover()?.model(),
            ModelKind::Ising => {
                if self.threshold_k.is_some() {
                    self.ising()?.model()
                } else {
                    ModelSpec::new(
                        self.n_qubits,
                        self.gamma,
                        Potential::IsingChain { j: self.j },
                    )
                }
            }
            ModelKind::Table => {
                let values = self
                    .potential
                    .clone()
                    .ok_or_else(|| Error::Parse("table model needs potential".into()))?;
                ModelSpec::new(self.n_qubits, self.gamma, Potential::Table { values })
            }
        }
    }

    pub fn partition(&self, limit: u64) -> Result<(Partition, PartitionSource)> {
        if let Some(path) = &self.partition_file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            let p = Partition::from_json(&text)?;
            if p.n_qubits() != self.n_qubits {
                return Err(Error::InvalidModel(format!(
                    "partition file is for {} qubits, model has {}",
                    p.n_qubits(),
                    self.n_qubits
                )));
            }
            return Ok((p, PartitionSource::File { path: path.clone() }));
        }
        if let Some(max_v) = self.max_v_cond {
            let p = partition_from_threshold(&self.spec()?, max_v, limit)?;
            return Ok((p, PartitionSource::Threshold { max_v_cond: max_v }));
        }
        let p = match self.model {
            ModelKind::Grover => self.grover()?.partition()?,
            ModelKind::Ising => ising_partition(&self.ising()?, limit)?,
            ModelKind::Table => {
                return Err(Error::Parse(
                    "table model needs max_v_cond or partition_file".into(),
                ));
            }
        };
        Ok((p, PartitionSource::ModelDefault))
    }

    pub fn resolve(&self) -> Result<(ModelSpec, Partition, PartitionSource)> {
        let spec = self.spec()?;
        let (p, source) = self.partition(DEFAULT_ENUMERATION_LIMIT)?;
        Ok((spec, p, source))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grover_defaults() {
        let f = ModelFile::parse("model = \"grover\"\nn_qubits = 4\ngamma = 0.5\n").unwrap();
        assert_eq!((f.j, f.k_b), (1.0, 1.0));
        let (spec, p, src) = f.resolve().unwrap();
        assert_eq!(spec.v(15), -4.0);
        assert_eq!(p.cond_members(), &[15]);
        assert_eq!(src, PartitionSource::ModelDefault);
        let p8 = f.with_n_qubits(8).resolve().unwrap().1;
        assert_eq!(p8.cond_members(), &[255]);
    }

    #[test]
    fn ising_threshold() {
        let f = ModelFile::parse(
            "model = \"ising\"\nn_qubits = 6\nJ = 1.0\ngamma = 0.2\nthreshold_k = 1\n",
        )
        .unwrap();
        assert_eq!(f.resolve().unwrap().1.dim_cond(), 12);
    }

    #[test]
    fn table_needs_partition_rule() {
        let text = "model = \"table\"\nn_qubits = 1\npotential = [0.0, -1.0]\n";
        let f = ModelFile::parse(text).unwrap();
        assert!(matches!(f.resolve(), Err(Error::Parse(_))));
        let f = ModelFile::parse(&format!("{text}max_v_cond = -0.5\n")).unwrap();
        assert_eq!(f.resolve().unwrap().1.cond_members(), &[1]);
    }

    #[test]
    fn parse_errors_are_reported() {
        for text in [
            "model = \"potts\"\nn_qubits = 2\n",
            "model = \"grover\"\n",
            "model = \"grover\"\nn_qubits = 2\nbogus = 1\n",
        ] {
            let e = ModelFile::parse(text).unwrap_err();
            assert_eq!(e.code(), "models.parse");
        }
    }
}
