//! HTTP/JSON transport between the edge and cloud tiers: axum services for
//! both, blocking ureq clients, and a wire log of everything the cloud
//! receives.

mod client;
mod cloud_server;
mod edge_server;
mod error;
mod server;
pub mod wire;
pub mod wirelog;

pub use client::{ClientConfig, CloudClient, EdgeClient, DEFAULT_TIMEOUT};
pub use cloud_server::cloud_router;
pub use edge_server::{edge_router, EdgeApp, EdgeHealth, MaintenanceSummary};
pub use error::{Result, TransportError};
pub use server::{base_url, serve, spawn, ApiError, ServerHandle, MAX_BODY_BYTES};
pub use wire::{
    ClusterRequest, Health, MessageKind, QueryRequest, QueryResponse, SearchRequest, WireMessage,
};
pub use wirelog::{leaked_words, read_wire_log, WireEntry, WireLog};
