//! Versioned parameter container shared by the policy and the situation model.
//!
//! Layout (little-endian):
//!
//! ```text
//! b"SAAGCKPT"  u32 version  u32 header_len  header_json[header_len]  f64 weights[len]
//! ```
//!
//! The JSON header holds `kind`, `id`, `arch` (a free-form architecture
//! descriptor), `arch_hash` (hash of `arch`) and `len`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CheckpointError;

pub const MAGIC: &[u8; 8] = b"SAAGCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub kind: String,
    pub id: String,
    pub arch: serde_json::Value,
    pub arch_hash: String,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub weights: Vec<f64>,
}

/// Hex of the first 8 bytes of SHA-256 over the canonical JSON of `arch`.
pub fn arch_hash(arch: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(arch).expect("json value serializes");
    hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
}

impl Checkpoint {
    pub fn new(kind: &str, id: &str, arch: serde_json::Value, weights: Vec<f64>) -> Checkpoint {
        let header = CheckpointHeader {
            kind: kind.to_string(),
            id: id.to_string(),
            arch_hash: arch_hash(&arch),
            arch,
            len: weights.len(),
        };
        Checkpoint { header, weights }
    }

    pub fn encode(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header).expect("header serializes");
        let mut out = Vec::with_capacity(16 + header.len() + self.weights.len() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for w in &self.weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
        if bytes.len() < 8 {
            return Err(CheckpointError::Truncated);
        }
        if &bytes[..8] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let u32_at = |at: usize| {
            bytes
                .get(at..at + 4)
                .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
                .ok_or(CheckpointError::Truncated)
        };
        let version = u32_at(8)?;
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let hlen = u32_at(12)? as usize;
        let body = 16usize.checked_add(hlen).ok_or(CheckpointError::Truncated)?;
        let raw = bytes.get(16..body).ok_or(CheckpointError::Truncated)?;
        let header: CheckpointHeader = serde_json::from_slice(raw).map_err(|e| CheckpointError::Header(e.to_string()))?;
        if header.arch_hash != arch_hash(&header.arch) {
            return Err(CheckpointError::Architecture { expected: arch_hash(&header.arch), found: header.arch_hash });
        }
        let rest = &bytes[body..];
        if rest.len() % 8 != 0 {
            return Err(CheckpointError::Truncated);
        }
        let found = rest.len() / 8;
        if found != header.len {
            return Err(CheckpointError::Length { expected: header.len, found });
        }
        let mut weights = Vec::with_capacity(found);
        for (i, chunk) in rest.chunks_exact(8).enumerate() {
            let w = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
            if !w.is_finite() {
                return Err(CheckpointError::NonFinite(i));
            }
            weights.push(w);
        }
        Ok(Checkpoint { header, weights })
    }

    /// Checks kind and architecture against what the caller expects.
    pub fn expect(&self, kind: &str, arch: &serde_json::Value) -> Result<(), CheckpointError> {
        if self.header.kind != kind {
            return Err(CheckpointError::Kind { expected: kind.to_string(), found: self.header.kind.clone() });
        }
        let want = arch_hash(arch);
        if self.header.arch_hash != want {
            return Err(CheckpointError::Architecture { expected: want, found: self.header.arch_hash.clone() });
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        std::fs::write(path, self.encode()).map_err(|e| CheckpointError::Io(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint, CheckpointError> {
        let bytes = std::fs::read(path).map_err(|e| CheckpointError::Io(e.to_string()))?;
        Checkpoint::decode(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;

    fn sample() -> Checkpoint {
        Checkpoint::new("policy", "p0", json!({"board": 9, "hidden": 64}), vec![0.5, -1.25, 3.0])
    }

    #[test]
    fn round_trip() {
        let c = sample();
        assert_eq!(Checkpoint::decode(&c.encode()).unwrap(), c);
        assert!(c.expect("policy", &json!({"board": 9, "hidden": 64})).is_ok());
        assert!(matches!(c.expect("gcn", &c.header.arch), Err(CheckpointError::Kind { .. })));
        assert!(matches!(c.expect("policy", &json!({"board": 11})), Err(CheckpointError::Architecture { .. })));
    }

    #[test]
    fn corrupt_inputs() {
        let bytes = sample().encode();
        assert_eq!(Checkpoint::decode(b"SAAG"), Err(CheckpointError::Truncated));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(Checkpoint::decode(&bad), Err(CheckpointError::BadMagic));
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert_eq!(Checkpoint::decode(&bad), Err(CheckpointError::Version(9)));
        assert_eq!(Checkpoint::decode(&bytes[..bytes.len() - 3]), Err(CheckpointError::Truncated));
        assert!(matches!(Checkpoint::decode(&bytes[..bytes.len() - 8]), Err(CheckpointError::Length { expected: 3, found: 2 })));
        let mut bad = bytes.clone();
        let n = bad.len();
        bad[n - 8..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert_eq!(Checkpoint::decode(&bad), Err(CheckpointError::NonFinite(2)));
    }
}
