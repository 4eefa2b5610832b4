use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Nonce};
use rand::RngCore;

use super::document::Document;
use super::token::SecretKey;
use crate::{DocId, Error, Result};

const NONCE_LEN: usize = 12;

/// Authenticated document encryption. Implementations must fail `decrypt`
/// on any modified ciphertext.
pub trait DocumentCipher: Send + Sync {
    fn encrypt(&self, plaintext: &[u8]) -> Vec<u8>;
    fn decrypt(&self, ciphertext: &[u8]) -> Result<Vec<u8>>;
}

/// ChaCha20-Poly1305 with a random 96-bit nonce prepended to each ciphertext.
pub struct ChaChaCipher {
    aead: ChaCha20Poly1305,
}

impl ChaChaCipher {
    pub fn new(key: [u8; 32]) -> Self {
        Self {
            aead: ChaCha20Poly1305::new(&key.into()),
        }
    }

    pub fn from_secret(secret: &SecretKey) -> Self {
        Self::new(secret.document_key())
    }
}

impl DocumentCipher for ChaChaCipher {
    fn encrypt(&self, plaintext: &[u8]) -> Vec<u8> {
        let mut nonce = [0u8; NONCE_LEN];
        rand::rng().fill_bytes(&mut nonce);
        let body = self
            .aead
            .encrypt(&Nonce::from(nonce), plaintext)
            .expect("chacha20poly1305 encryption is infallible for in-memory buffers");
        let mut out = Vec::with_capacity(NONCE_LEN + body.len());
        out.extend_from_slice(&nonce);
        out.extend_from_slice(&body);
        out
    }

    fn decrypt(&self, ciphertext: &[u8]) -> Result<Vec<u8>> {
        if ciphertext.len() < NONCE_LEN {
            return Err(Error::Decrypt);
        }
        let (nonce, body) = ciphertext.split_at(NONCE_LEN);
        let nonce: [u8; NONCE_LEN] = nonce.try_into().expect("split at nonce length");
        self.aead
            .decrypt(&Nonce::from(nonce), body)
            .map_err(|_| Error::Decrypt)
    }
}

pub fn encrypt_document(doc: &Document, cipher: &dyn DocumentCipher) -> (DocId, Vec<u8>) {
    (doc.doc_id.clone(), cipher.encrypt(doc.text.as_bytes()))
}

pub fn decrypt_document(ciphertext: &[u8], cipher: &dyn DocumentCipher) -> Result<String> {
    let bytes = cipher.decrypt(ciphertext)?;
    String::from_utf8(bytes).map_err(|_| Error::Decrypt)
}
