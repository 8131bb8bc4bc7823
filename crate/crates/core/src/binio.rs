//! Shared plumbing for the artifact formats: one ASCII header line of
//! `key=value` fields followed by a payload of little-endian `f64`s.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// First 16 hex digits of the SHA-256 of `bytes`.
pub fn checksum(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug)]
pub(crate) struct Header {
    fields: Vec<(String, String)>,
}

impl Header {
    pub fn parse(line: &str, magic: &str) -> Result<Self> {
        let mut parts = line.split_whitespace();
        if parts.next() != Some(magic) {
            return Err(Error::Format(format!("expected a '{magic}' header")));
        }
        if parts.next() != Some("v1") {
            return Err(Error::Format(format!("unsupported {magic} version")));
        }
        let fields = parts
            .map(|kv| {
                kv.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| Error::Format(format!("malformed header field '{kv}'")))
            })
            .collect::<Result<_>>()?;
        Ok(Self { fields })
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Format(format!("header is missing '{key}'")))
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| Error::Format(format!("header field {key}={raw} is not valid")))
    }
}

/// Splits a file into its header line and binary payload.
pub(crate) fn split_header(bytes: &[u8]) -> Result<(&str, &[u8])> {
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("missing header line".into()))?;
    let line = std::str::from_utf8(&bytes[..end])
        .map_err(|_| Error::Format("header is not ASCII".into()))?;
    Ok((line, &bytes[end + 1..]))
}

pub(crate) fn push_f64s<'a>(buf: &mut Vec<u8>, values: impl IntoIterator<Item = &'a f64>) {
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

/// Checks the payload length against `expected_values` doubles and decodes it.
pub(crate) fn decode_f64s(payload: &[u8], expected_values: usize) -> Result<Vec<f64>> {
    let expected = 8 * expected_values;
    if payload.len() < expected {
        return Err(Error::Format(format!(
            "truncated payload: missing {} bytes",
            expected - payload.len()
        )));
    }
    if payload.len() > expected {
        return Err(Error::Format(format!(
            "payload has {} bytes beyond the declared dimensions",
            payload.len() - expected
        )));
    }
    Ok(payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub(crate) fn verify_checksum(header: &Header, payload: &[u8]) -> Result<()> {
    let stored = header.get("checksum")?;
    let actual = checksum(payload);
    if stored != actual {
        return Err(Error::Format(format!(
            "checksum mismatch (header {stored}, payload {actual})"
        )));
    }
    Ok(())
}
