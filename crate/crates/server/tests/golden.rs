mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;

use axum::http::StatusCode;
use serde::Deserialize;
use serde_json::{json, Value};
use vanlearn_core::{parse_csv, screen, Algorithm, SchemaRequirement, ValidationRules, ViolationCode};
use vanlearn_server::Config;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../validation")
}

#[derive(Deserialize)]
struct Case {
    file: String,
    algorithm: Algorithm,
    target_column: Option<usize>,
    #[serde(default)]
    rules: serde_json::Map<String, Value>,
    codes: BTreeSet<ViolationCode>,
}

fn cases() -> Vec<Case> {
    let text = std::fs::read_to_string(corpus_dir().join("golden/expected.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn rules_for(case: &Case) -> ValidationRules {
    let mut base: serde_json::Map<String, Value> =
        serde_json::from_str(&std::fs::read_to_string(corpus_dir().join("rules.json")).unwrap()).unwrap();
    base.remove("violation_codes");
    base.extend(case.rules.clone());
    let rules: ValidationRules = serde_json::from_value(Value::Object(base)).unwrap();
    rules.check().unwrap();
    rules
}

#[test]
fn shared_rules_match_the_defaults() {
    let text = std::fs::read_to_string(corpus_dir().join("rules.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let d = ValidationRules::default();
    assert_eq!(v["max_bytes"], json!(d.max_bytes));
    assert_eq!(v["max_rows"], json!(d.max_rows));
    assert_eq!(v["max_cols"], json!(d.max_cols));
    let listed: Vec<String> = serde_json::from_value(v["violation_codes"].clone()).unwrap();
    let known: Vec<String> = ViolationCode::ALL.iter().map(|c| c.as_str().to_owned()).collect();
    assert_eq!(listed, known);
}

#[test]
fn corpus_covers_every_code() {
    let cases = cases();
    assert!(cases.len() >= 12);
    let covered: BTreeSet<ViolationCode> = cases.iter().flat_map(|c| c.codes.iter().copied()).collect();
    assert_eq!(covered, ViolationCode::ALL.into_iter().collect());
}

#[test]
fn library_screen_matches_expected_codes() {
    for case in cases() {
        let bytes = std::fs::read(corpus_dir().join("golden").join(&case.file)).unwrap();
        let d = parse_csv(&bytes).unwrap();
        let req = SchemaRequirement::new(case.algorithm, case.target_column).unwrap();
        let report = screen(bytes.len(), &d, &req, &rules_for(&case));
        assert_eq!(report.codes(), case.codes, "{}", case.file);
    }
}

/// The same corpus through the HTTP API: upload, then train on the stored
/// dataset. Whichever step rejects must report exactly the expected codes.
#[tokio::test]
async fn service_reports_expected_codes() {
    for case in cases() {
        let config = Config {
            rules: rules_for(&case),
            ..Config::default()
        };
        let app = common::app_with(config, false);
        let token = app.user("golden").await;
        let bytes = std::fs::read(corpus_dir().join("golden").join(&case.file)).unwrap();

        let up = app.upload(&token, &case.file, bytes).await;
        let violations = if up.status == StatusCode::CREATED {
            let params = match case.algorithm {
                Algorithm::Kmeans => json!({"k": 1}),
                Algorithm::Linreg | Algorithm::Logreg => json!({"target_column": case.target_column.unwrap()}),
                Algorithm::Dtree => json!({}),
            };
            let body = json!({
                "algorithm": case.algorithm,
                "params": params,
                "dataset_id": up.json()["dataset_id"],
            });
            let r = app.post("/api/analyze/train", Some(&token), body).await;
            if case.codes.is_empty() {
                assert_eq!(r.status, StatusCode::OK, "{}: {}", case.file, String::from_utf8_lossy(&r.bytes));
                continue;
            }
            r.json()["violations"].clone()
        } else {
            up.json()["violations"].clone()
        };
        let codes: BTreeSet<ViolationCode> = serde_json::from_value::<Vec<Value>>(violations)
            .unwrap_or_else(|_| panic!("{} returned no violations", case.file))
            .into_iter()
            .map(|v| serde_json::from_value(v["code"].clone()).unwrap())
            .collect();
        assert_eq!(codes, case.codes, "{}", case.file);
    }
}
