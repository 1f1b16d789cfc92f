//! HTTP API over a loaded terminology index, authenticated per request with
//! HTTP Digest.

pub mod api;
pub mod digest;

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use sctbrowse_core::{load_index, IndexError};
use thiserror::Error;
use tokio::net::TcpListener;

pub use api::{router, AppState};
pub use digest::{
    compute_digest_response, ha1, load_credentials, upsert_credential, AuthResult, Authenticator, CredentialError,
    CredentialFileError, Credentials, DigestCredential, MalformedHeader, NonceTable, UnsupportedQop,
};

pub const DEFAULT_NONCE_TTL_SECONDS: u64 = 300;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiConfig {
    pub port: u16,
    pub realm: String,
    pub index_path: PathBuf,
    pub credentials_path: PathBuf,
    pub nonce_ttl_seconds: u64,
    pub include_inactive: bool,
    pub renderer_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("port must be in 1..=65535")]
    Port,
    #[error("nonce TTL must be positive")]
    NonceTtl,
    #[error("realm must be non-empty and contain no ':' or '\"'")]
    Realm,
}

impl ApiConfig {
    pub fn new(port: u16, realm: &str, index_path: PathBuf, credentials_path: PathBuf) -> Self {
        ApiConfig {
            port,
            realm: realm.to_owned(),
            index_path,
            credentials_path,
            nonce_ttl_seconds: DEFAULT_NONCE_TTL_SECONDS,
            include_inactive: false,
            renderer_path: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.port == 0 {
            return Err(ConfigError::Port);
        }
        if self.nonce_ttl_seconds == 0 {
            return Err(ConfigError::NonceTtl);
        }
        if self.realm.is_empty() || self.realm.contains([':', '"', '\n', '\r']) {
            return Err(ConfigError::Realm);
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("loading index: {0}")]
    Index(#[from] IndexError),
    #[error(transparent)]
    Credentials(#[from] CredentialFileError),
    #[error("binding port {port}: {source}")]
    Bind {
        port: u16,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Loads the index and credentials named by `config`.
pub fn load_state(config: &ApiConfig) -> Result<AppState, ServeError> {
    config.validate()?;
    let store = load_index(&config.index_path)?;
    let credentials = load_credentials(&config.credentials_path)?;
    let auth = Authenticator::new(
        config.realm.clone(),
        credentials,
        Duration::from_secs(config.nonce_ttl_seconds),
    );
    Ok(AppState::new(store, auth, config.include_inactive, config.renderer_path.clone()))
}

/// A bound, not yet running server.
pub struct Server {
    listener: TcpListener,
    state: Arc<AppState>,
}

impl Server {
    pub async fn bind(config: &ApiConfig) -> Result<Self, ServeError> {
        let state = load_state(config)?;
        let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
        let listener = TcpListener::bind(addr)
            .await
            .map_err(|source| ServeError::Bind { port: config.port, source })?;
        Ok(Server { listener, state: Arc::new(state) })
    }

    pub fn from_parts(listener: TcpListener, state: AppState) -> Self {
        Server { listener, state: Arc::new(state) }
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves until `shutdown` resolves, then lets in-flight requests finish.
    pub async fn run(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServeError> {
        axum::serve(self.listener, router(self.state))
            .with_graceful_shutdown(shutdown)
            .await?;
        Ok(())
    }
}
