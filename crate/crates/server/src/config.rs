use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;
use vanlearn_core::ValidationRules;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CaptchaMode {
    #[default]
    Off,
    Stub,
    Real,
}

impl FromStr for CaptchaMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" | "" => Ok(CaptchaMode::Off),
            "stub" => Ok(CaptchaMode::Stub),
            "real" => Ok(CaptchaMode::Real),
            other => Err(ConfigError::Invalid {
                var: "VANLEARN_CAPTCHA",
                value: other.to_owned(),
                expected: "off, stub or real",
            }),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{var}={value:?} is invalid; expected {expected}")]
    Invalid {
        var: &'static str,
        value: String,
        expected: &'static str,
    },
    #[error("VANLEARN_CAPTCHA=real needs VANLEARN_CAPTCHA_SECRET")]
    MissingSecret,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub port: u16,
    pub db_path: PathBuf,
    pub captcha: CaptchaMode,
    pub captcha_secret: Option<String>,
    pub rules: ValidationRules,
    pub fit_timeout: Duration,
    pub max_concurrent_fits: usize,
    pub static_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            port: 8080,
            db_path: PathBuf::from("vanlearn.db"),
            captcha: CaptchaMode::Off,
            captcha_secret: None,
            rules: ValidationRules::default(),
            fit_timeout: Duration::from_secs(60),
            max_concurrent_fits: 2,
            static_dir: None,
        }
    }
}

fn parse<T: FromStr>(var: &'static str, value: String, expected: &'static str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Invalid {
        var,
        value,
        expected,
    })
}

fn positive(var: &'static str, value: String) -> Result<usize, ConfigError> {
    match parse::<usize>(var, value.clone(), "a positive integer")? {
        0 => Err(ConfigError::Invalid {
            var,
            value,
            expected: "a positive integer",
        }),
        n => Ok(n),
    }
}

impl Config {
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Builds a config from any variable source; unset keys keep defaults.
    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut c = Config::default();
        if let Some(v) = get("VANLEARN_PORT") {
            c.port = parse("VANLEARN_PORT", v, "a port number")?;
        }
        if let Some(v) = get("VANLEARN_DB_PATH") {
            c.db_path = PathBuf::from(v);
        }
        if let Some(v) = get("VANLEARN_CAPTCHA") {
            c.captcha = v.trim().to_ascii_lowercase().parse()?;
        }
        c.captcha_secret = get("VANLEARN_CAPTCHA_SECRET").filter(|s| !s.is_empty());
        if c.captcha == CaptchaMode::Real && c.captcha_secret.is_none() {
            return Err(ConfigError::MissingSecret);
        }
        if let Some(v) = get("VANLEARN_MAX_BYTES") {
            c.rules.max_bytes = positive("VANLEARN_MAX_BYTES", v)?;
        }
        if let Some(v) = get("VANLEARN_MAX_ROWS") {
            c.rules.max_rows = positive("VANLEARN_MAX_ROWS", v)?;
        }
        if let Some(v) = get("VANLEARN_MAX_COLS") {
            c.rules.max_cols = positive("VANLEARN_MAX_COLS", v)?;
        }
        if let Some(v) = get("VANLEARN_FIT_TIMEOUT_SECS") {
            c.fit_timeout = Duration::from_secs(positive("VANLEARN_FIT_TIMEOUT_SECS", v)? as u64);
        }
        if let Some(v) = get("VANLEARN_MAX_CONCURRENT_FITS") {
            c.max_concurrent_fits = positive("VANLEARN_MAX_CONCURRENT_FITS", v)?;
        }
        c.static_dir = get("VANLEARN_STATIC_DIR").filter(|s| !s.is_empty()).map(PathBuf::from);
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;

    fn from(pairs: &[(&str, &str)]) -> Result<Config, ConfigError> {
        let m: HashMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        Config::from_lookup(|k| m.get(k).cloned())
    }

    #[test]
    fn defaults_apply_when_unset() {
        let c = from(&[]).unwrap();
        assert_eq!(c.port, 8080);
        assert_eq!(c.captcha, CaptchaMode::Off);
        assert_eq!(c.rules, ValidationRules::default());
        assert_eq!(c.fit_timeout, Duration::from_secs(60));
    }

    #[test]
    fn overrides_and_errors() {
        let c = from(&[("VANLEARN_MAX_ROWS", "50"), ("VANLEARN_CAPTCHA", "stub")]).unwrap();
        assert_eq!(c.rules.max_rows, 50);
        assert_eq!(c.captcha, CaptchaMode::Stub);
        assert!(from(&[("VANLEARN_MAX_ROWS", "0")]).is_err());
        assert!(from(&[("VANLEARN_PORT", "http")]).is_err());
        assert_eq!(from(&[("VANLEARN_CAPTCHA", "real")]).unwrap_err(), ConfigError::MissingSecret);
    }
}
