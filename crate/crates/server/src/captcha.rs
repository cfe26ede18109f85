use async_trait::async_trait;
use serde::Deserialize;

/// Human-check gate in front of sign-up, sign-in and training.
#[async_trait]
pub trait CaptchaVerifier: Send + Sync {
    async fn verify(&self, token: &str, client_ip: &str) -> bool;
}

/// Accepts only [`StubVerifier::TOKEN`]. For tests and offline demos.
#[derive(Debug, Default, Clone, Copy)]
pub struct StubVerifier;

impl StubVerifier {
    pub const TOKEN: &'static str = "test-ok";
}

#[async_trait]
impl CaptchaVerifier for StubVerifier {
    async fn verify(&self, token: &str, _client_ip: &str) -> bool {
        token == Self::TOKEN
    }
}

pub const RECAPTCHA_VERIFY_URL: &str = "https://www.google.com/recaptcha/api/siteverify";

/// Google reCAPTCHA server-side verification.
pub struct RecaptchaVerifier {
    client: reqwest::Client,
    secret: String,
    endpoint: String,
}

impl RecaptchaVerifier {
    pub fn new(secret: impl Into<String>) -> Self {
        Self::with_endpoint(secret, RECAPTCHA_VERIFY_URL)
    }

    pub fn with_endpoint(secret: impl Into<String>, endpoint: impl Into<String>) -> Self {
        let client = reqwest::Client::builder()
            .timeout(std::time::Duration::from_secs(10))
            .build()
            .expect("static client configuration");
        Self {
            client,
            secret: secret.into(),
            endpoint: endpoint.into(),
        }
    }
}

#[derive(Deserialize)]
struct SiteVerify {
    success: bool,
}

#[async_trait]
impl CaptchaVerifier for RecaptchaVerifier {
    async fn verify(&self, token: &str, client_ip: &str) -> bool {
        if token.is_empty() {
            return false;
        }
        let mut form = vec![("secret", self.secret.as_str()), ("response", token)];
        if !client_ip.is_empty() {
            form.push(("remoteip", client_ip));
        }
        let sent = self.client.post(&self.endpoint).form(&form).send().await;
        let reply = match sent {
            Ok(r) => r.json::<SiteVerify>().await,
            Err(e) => Err(e),
        };
        match reply {
            Ok(r) => r.success,
            Err(e) => {
                // fail closed: an unreachable verifier blocks the request
                tracing::warn!(error = %e, "captcha verification failed");
                false
            }
        }
    }
}
