use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One oracle comparison, as written to the golden directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    /// First 16 hex digits of the SHA-256 of the scene description.
    pub scene_digest: String,
    pub metric: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleReport {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: &str, scene: &str, metric: &str, value: f64, tolerance: f64) -> Self {
        OracleReport {
            name: name.into(),
            scene_digest: digest(scene),
            metric: metric.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

pub fn digest(scene: &str) -> String {
    let h = Sha256::digest(scene.as_bytes());
    hex::encode(&h[..8])
}
