//! Versioned binary container used for vocabularies, embedding models and
//! trained classifiers.
//!
//! Layout: 8-byte magic `FNEWSBIN`, u32 LE format version, 4-byte kind tag,
//! u64 LE payload length, then the bincode payload.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"FNEWSBIN";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 4 + 8;

pub fn encode<T: Serialize>(kind: &[u8; 4], value: &T) -> Result<Vec<u8>> {
    let payload = bincode::serialize(value).map_err(|e| Error::ModelFormat(e.to_string()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(kind);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

/// Returns the kind tag stored in a container header.
pub fn peek_kind(bytes: &[u8]) -> Result<[u8; 4]> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(Error::ModelFormat("missing magic header".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    Ok(bytes[12..16].try_into().unwrap())
}

pub fn decode<T: DeserializeOwned>(kind: &[u8; 4], bytes: &[u8]) -> Result<T> {
    let found = peek_kind(bytes)?;
    if &found != kind {
        return Err(Error::ModelFormat(format!(
            "expected kind {}, found {}",
            String::from_utf8_lossy(kind),
            String::from_utf8_lossy(&found)
        )));
    }
    let len = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let payload = bytes
        .get(HEADER_LEN..HEADER_LEN + len)
        .ok_or_else(|| Error::ModelFormat("truncated payload".into()))?;
    bincode::deserialize(payload).map_err(|e| Error::ModelFormat(e.to_string()))
}

pub fn save<T: Serialize>(path: &Path, kind: &[u8; 4], value: &T) -> Result<()> {
    fs::write(path, encode(kind, value)?).map_err(|e| Error::io(path, e))
}

pub fn load<T: DeserializeOwned>(path: &Path, kind: &[u8; 4]) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(kind, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_checks() {
        let bytes = encode(b"TEST", &vec![1u32, 2, 3]).unwrap();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(decode::<Vec<u32>>(b"TEST", &bytes).unwrap(), vec![1, 2, 3]);
        assert!(decode::<Vec<u32>>(b"ELSE", &bytes).is_err());
        assert!(decode::<Vec<u32>>(b"TEST", &bytes[..20]).is_err());
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(peek_kind(&bad).is_err());
    }
}
