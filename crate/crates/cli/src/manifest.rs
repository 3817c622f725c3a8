use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mzk_core::solver::SimConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outputs {
    pub snapshots_csv: String,
    pub constants_json: String,
    pub bounds_json: String,
    pub checkpoint: String,
}

impl Outputs {
    pub fn standard() -> Self {
        Self {
            snapshots_csv: "snapshots.csv".into(),
            constants_json: "constants.json".into(),
            bounds_json: "bounds.json".into(),
            checkpoint: "final.zkcp".into(),
        }
    }

    fn all(&self) -> [&str; 4] {
        [&self.snapshots_csv, &self.constants_json, &self.bounds_json, &self.checkpoint]
    }
}

/// Written next to the results of a `simulate` run. Contains no clock or
/// host data, so identical inputs give an identical manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: SimConfig,
    pub seed: u64,
    pub outputs: Outputs,
    pub run_id: String,
}

impl RunManifest {
    pub fn new(config: SimConfig, seed: u64, outputs: Outputs) -> Self {
        let run_id = run_id(&config, seed);
        Self {
            config,
            seed,
            outputs,
            run_id,
        }
    }

    pub fn outputs_distinct(&self) -> bool {
        let all = self.outputs.all();
        all.iter().enumerate().all(|(i, a)| all[i + 1..].iter().all(|b| a != b))
    }
}

/// First 12 hex digits of the SHA-256 of the configuration JSON and seed.
pub fn run_id(config: &SimConfig, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config).expect("SimConfig serializes"));
    h.update(seed.to_le_bytes());
    h.finalize()[..6].iter().map(|b| format!("{b:02x}")).collect()
}
