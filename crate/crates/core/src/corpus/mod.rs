//! Document ingestion: keyword extraction, term tokens and document
//! encryption. Everything here runs on the trusted side.

mod cipher;
mod document;
pub mod text;
mod token;
mod upload;

pub use cipher::{decrypt_document, encrypt_document, ChaChaCipher, DocumentCipher};
pub use document::{distinct_terms, extract_keywords, load_corpus_dir, Document, KeywordRecord};
pub use token::{tokenize_term, SecretKey, TermToken, TokenKey, KEY_LEN, TOKEN_LEN};
pub use upload::{build_upload, prepare_upload, EncryptedDoc, UploadBatch, Vocabulary};
