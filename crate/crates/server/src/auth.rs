use std::net::SocketAddr;

use axum::body::Body;
use axum::extract::{ConnectInfo, FromRequestParts, State};
use axum::http::header::{AUTHORIZATION, COOKIE, SET_COOKIE};
use axum::http::request::Parts;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Deserialize;
use serde_json::json;
use vanlearn_store::{ActionKind, UserAccount, SESSION_TTL_MILLIS};

use crate::error::ApiError;
use crate::handlers::read_json;
use crate::{AppState, SESSION_COOKIE};

/// Peer address when the server was started with connect info; empty in
/// in-process tests.
pub(crate) struct ClientIp(pub String);

impl<S: Send + Sync> FromRequestParts<S> for ClientIp {
    type Rejection = std::convert::Infallible;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, Self::Rejection> {
        let ip = parts
            .extensions
            .get::<ConnectInfo<SocketAddr>>()
            .map(|c| c.0.ip().to_string())
            .unwrap_or_default();
        Ok(ClientIp(ip))
    }
}

/// Bearer header first, then the session cookie.
pub(crate) fn session_token(headers: &HeaderMap) -> Option<String> {
    if let Some(v) = headers.get(AUTHORIZATION).and_then(|v| v.to_str().ok()) {
        if let Some(t) = v.strip_prefix("Bearer ") {
            return Some(t.trim().to_owned());
        }
    }
    headers
        .get_all(COOKIE)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(';'))
        .filter_map(|kv| kv.trim().split_once('='))
        .find(|(k, _)| *k == SESSION_COOKIE)
        .map(|(_, v)| v.to_owned())
}

/// The signed-in caller; rejects with 401 otherwise.
pub(crate) struct CurrentUser(pub UserAccount);

impl FromRequestParts<AppState> for CurrentUser {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let token = session_token(&parts.headers).ok_or_else(ApiError::unauthenticated)?;
        state
            .db(move |s| Ok(s.session_user(&token)?))
            .await?
            .map(CurrentUser)
            .ok_or_else(ApiError::unauthenticated)
    }
}

#[derive(Deserialize)]
pub(crate) struct Credentials {
    username: String,
    password: String,
    #[serde(default)]
    email: String,
    #[serde(default)]
    captcha_token: Option<String>,
}

const CREDENTIALS_LIMIT: usize = 16 * 1024;

pub(crate) async fn signup(State(state): State<AppState>, ClientIp(ip): ClientIp, body: Body) -> Result<Response, ApiError> {
    let c: Credentials = read_json(body, CREDENTIALS_LIMIT).await?;
    state.check_captcha(c.captcha_token.as_deref(), &ip).await?;
    let user = state
        .db(move |s| {
            Ok(s.transaction(|tx| {
                let u = tx.create_user(&c.username, &c.password, &c.email)?;
                tx.record_action(u.id, ActionKind::Signup, "")?;
                Ok::<_, vanlearn_store::StoreError>(u)
            })?)
        })
        .await?;
    Ok((
        StatusCode::CREATED,
        Json(json!({"user_id": user.id, "username": user.username})),
    )
        .into_response())
}

fn session_cookie(token: &str, max_age_secs: i64) -> String {
    format!("{SESSION_COOKIE}={token}; HttpOnly; SameSite=Strict; Path=/; Max-Age={max_age_secs}")
}

pub(crate) async fn signin(State(state): State<AppState>, ClientIp(ip): ClientIp, body: Body) -> Result<Response, ApiError> {
    let c: Credentials = read_json(body, CREDENTIALS_LIMIT).await?;
    state.check_captcha(c.captcha_token.as_deref(), &ip).await?;
    let (user, session) = state
        .db(move |s| {
            Ok(s.transaction(|tx| {
                let (u, session) = tx.authenticate(&c.username, &c.password)?;
                tx.record_action(u.id, ActionKind::Signin, "")?;
                Ok::<_, vanlearn_store::StoreError>((u, session))
            })?)
        })
        .await?;
    let cookie = session_cookie(&session.token, SESSION_TTL_MILLIS / 1000);
    let body = json!({
        "token": session.token,
        "username": user.username,
        "expires_at": session.expires_at,
    });
    Ok(([(SET_COOKIE, cookie)], Json(body)).into_response())
}

pub(crate) async fn signout(State(state): State<AppState>, headers: HeaderMap) -> Result<Response, ApiError> {
    if let Some(token) = session_token(&headers) {
        state.db(move |s| Ok(s.end_session(&token)?)).await?;
    }
    Ok((StatusCode::NO_CONTENT, [(SET_COOKIE, session_cookie("", 0))]).into_response())
}

pub(crate) async fn status(State(state): State<AppState>, headers: HeaderMap) -> Result<Response, ApiError> {
    let user = match session_token(&headers) {
        Some(token) => state.db(move |s| Ok(s.session_user(&token)?)).await?,
        None => None,
    };
    let body = match user {
        Some(u) => json!({"authenticated": true, "username": u.username}),
        None => json!({
            "authenticated": false,
            "username": null,
            "prompt": "Sign in or sign up to continue.",
        }),
    };
    Ok(Json(body).into_response())
}
