use std::collections::HashMap;
use std::str::FromStr;

use axum::body::{to_bytes, Body};
use axum::extract::{Path, Query, State};
use axum::http::header::{CONTENT_DISPOSITION, CONTENT_TYPE};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Map, Value};
use vanlearn_core::{
    decode_wire, encode_wire, export, parse_csv, screen, validate_size, Algorithm, Dataset, ExportFormat,
    WirePayload,
};
use vanlearn_store::{ActionKind, NewResult, StoreError};

use crate::analysis::{self, ModelRecord, Outcome, Params};
use crate::auth::{ClientIp, CurrentUser};
use crate::error::ApiError;
use crate::{json_body_limit, AppState};

pub(crate) async fn read_json<T: DeserializeOwned>(body: Body, limit: usize) -> Result<T, ApiError> {
    let bytes = to_bytes(body, limit).await.map_err(|_| {
        ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "E_TOO_LARGE",
            format!("request body exceeds {limit} bytes"),
        )
    })?;
    serde_json::from_slice(&bytes).map_err(|e| ApiError::bad_request("E_REQUEST", format!("malformed request: {e}")))
}

fn too_large(state: &AppState, byte_len: usize) -> ApiError {
    ApiError::rejected(validate_size(byte_len, 0, 0, &state.config().rules))
}

pub(crate) async fn upload(
    State(state): State<AppState>,
    CurrentUser(user): CurrentUser,
    Query(query): Query<HashMap<String, String>>,
    body: Body,
) -> Result<Response, ApiError> {
    let max = state.config().rules.max_bytes;
    let bytes = to_bytes(body, max.saturating_add(1))
        .await
        .map_err(|_| too_large(&state, max.saturating_add(1)))?;
    if bytes.len() > max {
        return Err(too_large(&state, bytes.len()));
    }
    let d = parse_csv(&bytes)?;
    let report = validate_size(bytes.len(), d.n_rows(), d.n_cols(), &state.config().rules);
    if !report.ok {
        return Err(ApiError::rejected(report));
    }
    let name = query
        .get("name")
        .map(|n| n.trim())
        .filter(|n| !n.is_empty())
        .unwrap_or("dataset.csv")
        .to_owned();
    let (rows, cols) = (d.n_rows(), d.n_cols());
    let stored = state
        .db(move |s| {
            Ok(s.transaction(|tx| {
                let ds = tx.store_dataset(user.id, &name, &bytes, rows, cols)?;
                tx.record_action(user.id, ActionKind::Upload, &format!("dataset:{}", ds.id))?;
                Ok::<_, StoreError>(ds)
            })?)
        })
        .await?;
    let body = json!({
        "dataset_id": stored.id,
        "name": stored.name,
        "rows": rows,
        "cols": cols,
        "columns": d.columns(),
    });
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

pub(crate) async fn list_datasets(
    State(state): State<AppState>,
    CurrentUser(user): CurrentUser,
) -> Result<Response, ApiError> {
    let list = state.db(move |s| Ok(s.list_datasets(user.id)?)).await?;
    let items: Vec<Value> = list
        .into_iter()
        .map(|d| {
            json!({
                "dataset_id": d.id,
                "name": d.name,
                "rows": d.rows,
                "cols": d.cols,
                "uploaded_at": d.uploaded_at,
            })
        })
        .collect();
    Ok(Json(items).into_response())
}

pub(crate) async fn get_dataset(
    State(state): State<AppState>,
    CurrentUser(user): CurrentUser,
    Path(id): Path<i64>,
) -> Result<Response, ApiError> {
    let ds = state.db(move |s| Ok(s.load_dataset(user.id, id)?)).await?;
    Ok(([(CONTENT_TYPE, ExportFormat::Csv.content_type())], ds.csv_bytes).into_response())
}

/// Inline wire data or a stored dataset; returns it with the byte length
/// the size limit applies to.
async fn resolve_data(
    state: &AppState,
    user_id: i64,
    data: Option<String>,
    dataset_id: Option<i64>,
) -> Result<(Dataset, usize), ApiError> {
    match (data, dataset_id) {
        (Some(wire), None) => {
            if wire.len() > state.config().rules.max_bytes {
                return Err(too_large(state, wire.len()));
            }
            let len = wire.len();
            Ok((decode_wire(&WirePayload(wire))?, len))
        }
        (None, Some(id)) => {
            let ds = state.db(move |s| Ok(s.load_dataset(user_id, id)?)).await?;
            let len = ds.csv_bytes.len();
            Ok((parse_csv(&ds.csv_bytes)?, len))
        }
        _ => Err(ApiError::bad_request(
            "E_REQUEST",
            "give exactly one of \"data\" or \"dataset_id\"",
        )),
    }
}

/// Runs CPU-bound analysis on the blocking pool, bounded by the fit
/// limiter and the configured timeout. Panics become 500s.
async fn run_analysis<R, F>(state: &AppState, f: F) -> Result<R, ApiError>
where
    R: Send + 'static,
    F: FnOnce() -> Result<R, ApiError> + Send + 'static,
{
    let permit = state
        .fits()
        .acquire_owned()
        .await
        .map_err(|_| ApiError::internal("analysis limiter closed"))?;
    let task = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        f()
    });
    match tokio::time::timeout(state.config().fit_timeout, task).await {
        Err(_) => Err(ApiError::new(
            StatusCode::GATEWAY_TIMEOUT,
            "E_TIMEOUT",
            format!("analysis exceeded {} s", state.config().fit_timeout.as_secs_f64()),
        )),
        Ok(Err(e)) => {
            tracing::error!(error = %e, "analysis task failed");
            Err(ApiError::internal("analysis failed unexpectedly"))
        }
        Ok(Ok(r)) => r,
    }
}

fn stored_output(r: &vanlearn_store::StoredResult) -> Result<Dataset, ApiError> {
    serde_json::from_str(&r.output_json).map_err(|e| ApiError::internal(format!("stored output: {e}")))
}

fn outcome_body(result_id: i64, algorithm: &str, outcome: &Outcome) -> Value {
    json!({
        "result_id": result_id,
        "algorithm": algorithm,
        "summary": outcome.summary,
        "columns": outcome.output.columns(),
        "output": encode_wire(&outcome.output),
    })
}

#[derive(Deserialize)]
pub(crate) struct TrainRequest {
    algorithm: String,
    #[serde(default)]
    params: Map<String, Value>,
    data: Option<String>,
    dataset_id: Option<i64>,
    captcha_token: Option<String>,
}

pub(crate) async fn train(
    State(state): State<AppState>,
    CurrentUser(user): CurrentUser,
    ClientIp(ip): ClientIp,
    body: Body,
) -> Result<Response, ApiError> {
    let req: TrainRequest = read_json(body, json_body_limit(state.config())).await?;
    state.check_captcha(req.captcha_token.as_deref(), &ip).await?;
    let algorithm = Algorithm::from_str(&req.algorithm).map_err(|_| {
        ApiError::bad_request(
            "E_ALGORITHM",
            format!("unknown algorithm {:?}; use kmeans, linreg, logreg or dtree", req.algorithm),
        )
    })?;
    let params = Params::parse(algorithm, &req.params)?;
    let (d, byte_len) = resolve_data(&state, user.id, req.data, req.dataset_id).await?;
    let schema = params.requirement(algorithm, &d);
    let report = screen(byte_len, &d, &schema, &state.config().rules);
    if !report.ok {
        return Err(ApiError::rejected(report));
    }

    let outcome = run_analysis(&state, move || Ok(analysis::train(&d, &schema, &params)?)).await?;

    let model_json = serde_json::to_string(&outcome.record).expect("record serializes");
    let output_json = serde_json::to_string(&outcome.output).expect("dataset serializes");
    let name = algorithm.as_str();
    let result = state
        .db(move |s| {
            Ok(s.transaction(|tx| {
                let r = tx.store_result(
                    user.id,
                    &NewResult {
                        algorithm: name,
                        model_json: &model_json,
                        output_json: &output_json,
                    },
                )?;
                tx.record_action(user.id, ActionKind::Train, &format!("result:{} algorithm:{name}", r.id))?;
                Ok::<_, StoreError>(r)
            })?)
        })
        .await?;
    Ok(Json(outcome_body(result.id, name, &outcome)).into_response())
}

#[derive(Deserialize)]
pub(crate) struct PredictRequest {
    result_id: i64,
    data: Option<String>,
    dataset_id: Option<i64>,
}

pub(crate) async fn predict(
    State(state): State<AppState>,
    CurrentUser(user): CurrentUser,
    body: Body,
) -> Result<Response, ApiError> {
    let req: PredictRequest = read_json(body, json_body_limit(state.config())).await?;
    let source_id = req.result_id;
    let source = state.db(move |s| Ok(s.load_result(user.id, source_id)?)).await?;
    let record: ModelRecord = serde_json::from_str(&source.model_json)
        .map_err(|e| ApiError::internal(format!("stored model: {e}")))?;
    let (d, byte_len) = resolve_data(&state, user.id, req.data, req.dataset_id).await?;
    let report = validate_size(byte_len, d.n_rows(), d.n_cols(), &state.config().rules);
    if !report.ok {
        return Err(ApiError::rejected(report));
    }

    let outcome = run_analysis(&state, move || analysis::predict(&record, &d)).await?;

    let output_json = serde_json::to_string(&outcome.output).expect("dataset serializes");
    let algorithm = source.algorithm.clone();
    let result = state
        .db(move |s| {
            Ok(s.transaction(|tx| {
                let r = tx.store_result(
                    user.id,
                    &NewResult {
                        algorithm: &source.algorithm,
                        model_json: &source.model_json,
                        output_json: &output_json,
                    },
                )?;
                let detail = format!("result:{} source:{}", r.id, source.id);
                tx.record_action(user.id, ActionKind::Predict, &detail)?;
                Ok::<_, StoreError>(r)
            })?)
        })
        .await?;
    let mut body = outcome_body(result.id, &algorithm, &outcome);
    body["source_result_id"] = json!(source_id);
    Ok(Json(body).into_response())
}

pub(crate) async fn download(
    State(state): State<AppState>,
    CurrentUser(user): CurrentUser,
    Path(id): Path<i64>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let format = match query.get("format") {
        Some(f) => ExportFormat::from_str(f)?,
        None => ExportFormat::Csv,
    };
    // a result counts as downloaded once, whatever the format or retries
    let result = state
        .db(move |s| {
            Ok(s.transaction(|tx| {
                let r = tx.load_result(user.id, id)?;
                let detail = format!("result:{id}");
                if !tx.action_exists(user.id, ActionKind::Download, &detail)? {
                    tx.record_action(user.id, ActionKind::Download, &detail)?;
                }
                Ok::<_, StoreError>(r)
            })?)
        })
        .await?;
    let bytes = export(&stored_output(&result)?, format);
    let disposition = format!("attachment; filename=\"result-{id}.{}\"", format.extension());
    Ok((
        [(CONTENT_TYPE, format.content_type().to_owned()), (CONTENT_DISPOSITION, disposition)],
        bytes,
    )
        .into_response())
}
