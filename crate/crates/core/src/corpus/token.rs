use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use hmac::{Hmac, KeyInit, Mac};
use rand::RngCore;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::Sha256;

use crate::{Error, Result};

type HmacSha256 = Hmac<Sha256>;

pub const TOKEN_LEN: usize = 32;
pub const KEY_LEN: usize = 32;

/// Deterministic keyed image of a plaintext term; the only form of a term the
/// cloud tier ever sees. Serialized as lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermToken([u8; TOKEN_LEN]);

impl TermToken {
    pub fn from_bytes(bytes: [u8; TOKEN_LEN]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; TOKEN_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let mut out = [0u8; TOKEN_LEN];
        hex::decode_to_slice(s, &mut out)
            .map_err(|e| Error::InvalidArgument(format!("bad token hex {s:?}: {e}")))?;
        Ok(Self(out))
    }
}

impl fmt::Display for TermToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for TermToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TermToken({})", &self.to_hex()[..12])
    }
}

impl FromStr for TermToken {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_hex(s)
    }
}

impl Serialize for TermToken {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for TermToken {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        Self::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// User secret. Sub-keys for term tokens and document encryption are derived
/// from it so that the two uses never share key material.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey([u8; KEY_LEN]);

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

impl SecretKey {
    pub fn from_bytes(bytes: [u8; KEY_LEN]) -> Self {
        Self(bytes)
    }

    pub fn generate() -> Self {
        let mut bytes = [0u8; KEY_LEN];
        rand::rng().fill_bytes(&mut bytes);
        Self(bytes)
    }

    /// Parses key file contents: exactly 32 raw bytes, or 64 hex characters
    /// (surrounding whitespace allowed).
    pub fn parse(contents: &[u8]) -> Result<Self> {
        if contents.len() == KEY_LEN {
            let mut bytes = [0u8; KEY_LEN];
            bytes.copy_from_slice(contents);
            return Ok(Self(bytes));
        }
        let text = std::str::from_utf8(contents)
            .map_err(|_| {
                Error::InvalidKey(format!(
                    "expected {KEY_LEN} raw bytes or 64 hex chars, got {} bytes",
                    contents.len()
                ))
            })?
            .trim();
        let mut bytes = [0u8; KEY_LEN];
        hex::decode_to_slice(text, &mut bytes)
            .map_err(|e| Error::InvalidKey(format!("bad hex key: {e}")))?;
        Ok(Self(bytes))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read(path)?)
    }

    /// Writes the key as 64 hex characters.
    pub fn save_hex(&self, path: &Path) -> Result<()> {
        fs::write(path, format!("{}\n", hex::encode(self.0)))?;
        Ok(())
    }

    fn derive(&self, label: &[u8]) -> [u8; KEY_LEN] {
        let mut mac = HmacSha256::new_from_slice(&self.0).expect("hmac accepts any key length");
        mac.update(label);
        mac.finalize().into_bytes().into()
    }

    pub fn token_key(&self) -> TokenKey {
        TokenKey(self.derive(b"prunesearch/term-token/v1"))
    }

    pub fn document_key(&self) -> [u8; KEY_LEN] {
        self.derive(b"prunesearch/document/v1")
    }
}

/// Key of the term-token PRF.
#[derive(Clone, PartialEq, Eq)]
pub struct TokenKey([u8; KEY_LEN]);

impl fmt::Debug for TokenKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TokenKey(..)")
    }
}

impl TokenKey {
    pub fn from_bytes(bytes: [u8; KEY_LEN]) -> Self {
        Self(bytes)
    }
}

/// HMAC-SHA256 of the term under `key`.
pub fn tokenize_term(term: &str, key: &TokenKey) -> Result<TermToken> {
    if term.is_empty() {
        return Err(Error::EmptyTerm);
    }
    let mut mac = HmacSha256::new_from_slice(&key.0).expect("hmac accepts any key length");
    mac.update(term.as_bytes());
    Ok(TermToken(mac.finalize().into_bytes().into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(byte: u8) -> TokenKey {
        TokenKey::from_bytes([byte; KEY_LEN])
    }

    #[test]
    fn deterministic() {
        let a = tokenize_term("network", &key(7)).unwrap();
        let b = tokenize_term("network", &key(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_terms_distinct_tokens() {
        let a = tokenize_term("network", &key(7)).unwrap();
        let b = tokenize_term("protocol", &key(7)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn distinct_keys_distinct_tokens() {
        let a = tokenize_term("network", &key(1)).unwrap();
        let b = tokenize_term("network", &key(2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn stable_across_processes() {
        // HMAC-SHA256(key = 32 x 0x0b, "network")
        let tok = tokenize_term("network", &key(0x0b)).unwrap();
        assert_eq!(tok.to_hex().len(), 64);
        assert_eq!(tok, TermToken::from_hex(&tok.to_hex()).unwrap());
        assert_eq!(tok.to_hex(), FROZEN_NETWORK_TOKEN);
    }

    // Computed independently with Python's hmac module.
    const FROZEN_NETWORK_TOKEN: &str =
        "ccd5678e4e030808dccab0d78c2ff0a1ea220b433cdf06bac4a5f4a17883cb7b";

    #[test]
    fn empty_term_rejected() {
        assert!(matches!(tokenize_term("", &key(1)), Err(Error::EmptyTerm)));
    }

    #[test]
    fn key_file_formats() {
        let raw = [0x42u8; 32];
        assert_eq!(SecretKey::parse(&raw).unwrap(), SecretKey::from_bytes(raw));
        let hexed = format!("{}\n", hex::encode(raw));
        assert_eq!(
            SecretKey::parse(hexed.as_bytes()).unwrap(),
            SecretKey::from_bytes(raw)
        );
        assert!(SecretKey::parse(b"too short").is_err());
        assert!(SecretKey::parse(&[b'z'; 64]).is_err());
    }

    #[test]
    fn subkeys_differ() {
        let k = SecretKey::from_bytes([9; 32]);
        assert_ne!(k.token_key().0, k.document_key());
    }

    #[test]
    fn serde_as_hex() {
        let tok = tokenize_term("x", &key(3)).unwrap();
        let json = serde_json::to_string(&tok).unwrap();
        assert_eq!(json, format!("\"{}\"", tok.to_hex()));
        let back: TermToken = serde_json::from_str(&json).unwrap();
        assert_eq!(back, tok);
    }
}
