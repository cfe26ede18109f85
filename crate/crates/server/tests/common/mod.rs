#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use vanlearn_server::{router, AppState, CaptchaVerifier, Config, StubVerifier};
use vanlearn_store::Store;

pub struct App {
    pub router: Router,
    pub state: AppState,
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: axum::http::HeaderMap,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap_or_else(|_| panic!("not JSON: {}", String::from_utf8_lossy(&self.bytes)))
    }

    pub fn code(&self) -> String {
        self.json()["code"].as_str().unwrap_or_default().to_owned()
    }
}

pub fn app_with(config: Config, captcha: bool) -> App {
    let store = Store::open_in_memory().unwrap();
    let verifier: Option<Arc<dyn CaptchaVerifier>> = captcha.then(|| Arc::new(StubVerifier) as _);
    let state = AppState::new(store, config, verifier);
    App {
        router: router(state.clone()),
        state,
    }
}

pub fn app() -> App {
    app_with(Config::default(), false)
}

impl App {
    pub async fn send(&self, req: Request<Body>) -> Reply {
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let headers = resp.headers().clone();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        Reply { status, headers, bytes }
    }

    pub async fn call(&self, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> Reply {
        let mut b = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            b = b.header(header::AUTHORIZATION, format!("Bearer {t}"));
        }
        let req = match body {
            Some(v) => b
                .header(header::CONTENT_TYPE, "application/json")
                .body(Body::from(v.to_string()))
                .unwrap(),
            None => b.body(Body::empty()).unwrap(),
        };
        self.send(req).await
    }

    pub async fn post(&self, uri: &str, token: Option<&str>, body: Value) -> Reply {
        self.call(Method::POST, uri, token, Some(body)).await
    }

    pub async fn get(&self, uri: &str, token: Option<&str>) -> Reply {
        self.call(Method::GET, uri, token, None).await
    }

    pub async fn upload(&self, token: &str, name: &str, csv: impl Into<Vec<u8>>) -> Reply {
        let req = Request::builder()
            .method(Method::POST)
            .uri(format!("/api/datasets?name={name}"))
            .header(header::AUTHORIZATION, format!("Bearer {token}"))
            .header(header::CONTENT_TYPE, "text/csv")
            .body(Body::from(csv.into()))
            .unwrap();
        self.send(req).await
    }

    /// Signs up and in; returns the bearer token.
    pub async fn user(&self, name: &str) -> String {
        let creds = json!({"username": name, "password": "correct horse", "email": "u@example.com"});
        let r = self.post("/api/auth/signup", None, creds.clone()).await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&r.bytes));
        let r = self.post("/api/auth/signin", None, creds).await;
        assert_eq!(r.status, StatusCode::OK);
        r.json()["token"].as_str().unwrap().to_owned()
    }
}
