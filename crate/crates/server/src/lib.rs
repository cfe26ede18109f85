//! HTTP service for vanlearn: accounts, dataset upload, training,
//! prediction and result download over a JSON API.

pub mod analysis;
mod auth;
pub mod captcha;
pub mod config;
pub mod error;
mod handlers;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::Router;
use tokio::sync::Semaphore;
use tower_http::services::ServeDir;
use vanlearn_store::Store;

pub use captcha::{CaptchaVerifier, RecaptchaVerifier, StubVerifier};
pub use config::{CaptchaMode, Config, ConfigError};
pub use error::ApiError;

pub const SESSION_COOKIE: &str = "vanlearn_session";

/// Shared by every request: the store, settings, captcha gate and the fit
/// limiter.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    store: Arc<Store>,
    config: Config,
    captcha: Option<Arc<dyn CaptchaVerifier>>,
    fits: Arc<Semaphore>,
}

impl AppState {
    /// `captcha: None` disables the human check entirely.
    pub fn new(store: Store, config: Config, captcha: Option<Arc<dyn CaptchaVerifier>>) -> Self {
        let fits = Arc::new(Semaphore::new(config.max_concurrent_fits.max(1)));
        Self {
            inner: Arc::new(Inner {
                store: Arc::new(store),
                config,
                captcha,
                fits,
            }),
        }
    }

    /// Picks the verifier named by `config.captcha`.
    pub fn from_config(store: Store, config: Config) -> Self {
        let captcha: Option<Arc<dyn CaptchaVerifier>> = match config.captcha {
            CaptchaMode::Off => None,
            CaptchaMode::Stub => Some(Arc::new(StubVerifier)),
            CaptchaMode::Real => Some(Arc::new(RecaptchaVerifier::new(
                config.captcha_secret.clone().unwrap_or_default(),
            ))),
        };
        Self::new(store, config, captcha)
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.inner.store
    }

    pub fn config(&self) -> &Config {
        &self.inner.config
    }

    /// Runs blocking store work off the async workers.
    pub(crate) async fn db<R, F>(&self, f: F) -> Result<R, ApiError>
    where
        R: Send + 'static,
        F: FnOnce(&Store) -> Result<R, ApiError> + Send + 'static,
    {
        let store = Arc::clone(&self.inner.store);
        tokio::task::spawn_blocking(move || f(&store))
            .await
            .map_err(|e| ApiError::internal(format!("storage task failed: {e}")))?
    }

    pub(crate) async fn check_captcha(&self, token: Option<&str>, ip: &str) -> Result<(), ApiError> {
        let Some(verifier) = &self.inner.captcha else {
            return Ok(());
        };
        if verifier.verify(token.unwrap_or_default(), ip).await {
            Ok(())
        } else {
            Err(ApiError::bad_request("E_CAPTCHA", "captcha verification failed"))
        }
    }

    pub(crate) fn fits(&self) -> Arc<Semaphore> {
        Arc::clone(&self.inner.fits)
    }
}

/// Largest JSON body accepted: room for a wire payload of `max_bytes` of
/// CSV, which grows once keys are repeated per row.
pub(crate) fn json_body_limit(config: &Config) -> usize {
    config.rules.max_bytes.saturating_mul(8).saturating_add(64 * 1024)
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/api/auth/signup", post(auth::signup))
        .route("/api/auth/signin", post(auth::signin))
        .route("/api/auth/signout", post(auth::signout))
        .route("/api/auth/status", get(auth::status))
        .route("/api/datasets", post(handlers::upload).get(handlers::list_datasets))
        .route("/api/datasets/{id}", get(handlers::get_dataset))
        .route("/api/analyze/train", post(handlers::train))
        .route("/api/analyze/predict", post(handlers::predict))
        .route("/api/results/{id}/download", get(handlers::download))
        // handlers read bodies with their own limits
        .layer(DefaultBodyLimit::disable());
    let app = match &state.config().static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.with_state(state)
}

/// Binds and serves until ctrl-c.
pub async fn serve(state: AppState) -> std::io::Result<()> {
    let addr = SocketAddr::from(([0, 0, 0, 0], state.config().port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(
        listener,
        router(state).into_make_service_with_connect_info::<SocketAddr>(),
    )
    .with_graceful_shutdown(async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
