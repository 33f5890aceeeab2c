use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use modelcard_core::codeview::{
    apply_assignments, assignments_from_metadata, clear_stage, detect_notebook_stages, write_stage_comment, StageError,
};
use modelcard_core::rubric::{assess_notebook, manual_answers_from_json, with_manual_answers};
use modelcard_core::{
    build_navigation, check_trace_integrity, completion_check, completion_vs_rubric, export_card, extract_card,
    upsert_section, CardError, CellId, Stage, StageSource,
};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::{write_atomic, AppState};

type ApiResult = Result<Response, ApiError>;

#[derive(Deserialize)]
pub struct NbQuery {
    nb: String,
}

fn nb_param(q: Result<Query<NbQuery>, QueryRejection>) -> Result<String, ApiError> {
    q.map(|Query(q)| q.nb).map_err(|_| ApiError::bad_request("missing `nb` query parameter"))
}

fn if_match(headers: &HeaderMap) -> Result<Option<String>, ApiError> {
    match headers.get(header::IF_MATCH) {
        None => Ok(None),
        Some(v) => {
            let s = v.to_str().map_err(|_| ApiError::bad_request("If-Match is not ASCII"))?;
            let s = s.trim().trim_start_matches("W/").trim_matches('"');
            Ok(Some(s.to_owned()))
        }
    }
}

fn json_body(body: &Bytes) -> Result<Value, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("request body is not valid JSON: {e}")))
}

fn with_etag(hash: &str, body: Value) -> Response {
    let mut resp = Json(body).into_response();
    if let Ok(v) = HeaderValue::from_str(&format!("\"{hash}\"")) {
        resp.headers_mut().insert(header::ETAG, v);
    }
    resp
}

fn stage_error(e: StageError) -> ApiError {
    match e {
        StageError::UnknownCellId(id) => ApiError::not_found("unknown_cell", format!("no cell with id `{id}`")),
        StageError::NotACodeCell(id) => {
            ApiError::unprocessable("not_a_code_cell", format!("cell `{id}` is not a code cell"))
        }
        StageError::Edit(e) => ApiError::internal("edit", e.to_string()),
    }
}

pub fn routes() -> Router<AppState> {
    Router::new()
        .route("/api/health", get(|| async { Json(json!({"ok": true})) }))
        .route("/api/template", get(template))
        .route("/api/card", get(card))
        .route("/api/card/sections/{id}", put(put_section))
        .route("/api/card/export", post(export))
        .route("/api/outline", get(outline))
        .route("/api/stages", get(stages))
        .route("/api/stages/detect", post(detect))
        .route("/api/stages/{cell_id}", put(put_stage))
        .route("/api/navigation", get(navigation))
        .route("/api/trace", get(trace))
        .route("/api/rubric", get(rubric))
        .route("/api/rubric/answers", put(put_answers))
}

pub fn panel_placeholder() -> Router {
    async fn missing() -> ApiError {
        ApiError::not_found("panel_not_configured", "start the service with a panel directory to serve the panel")
    }
    Router::new().route("/panel", get(missing)).route("/panel/", get(missing)).route("/panel/{*rest}", get(missing))
}

async fn template(State(s): State<AppState>) -> ApiResult {
    Ok(Json(json!(s.template()?)).into_response())
}

async fn card(State(s): State<AppState>, q: Result<Query<NbQuery>, QueryRejection>) -> ApiResult {
    let raw = nb_param(q)?;
    let tpl = s.template()?;
    let loaded = s.load(&raw)?;
    let card = extract_card(&loaded.notebook, &tpl);
    let body = json!({
        "entries": card.entries,
        "orphans": card.orphans,
        "missing": completion_check(&card, &tpl),
        "coverage": completion_vs_rubric(&card),
        "hash": loaded.hash,
    });
    Ok(with_etag(&loaded.hash, body))
}

async fn put_section(
    State(s): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<NbQuery>, QueryRejection>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let raw = nb_param(q)?;
    let expected = if_match(&headers)?;
    let value = json_body(&body)?;
    let content = value
        .get("content")
        .and_then(Value::as_str)
        .ok_or_else(|| ApiError::bad_request("body must be {\"content\": <string>}"))?
        .to_owned();
    let tpl = s.template()?;
    if !tpl.contains(&id) {
        return Err(ApiError::not_found("unknown_section", format!("section `{id}` is not in the template")));
    }
    let (cell_id, hash) = s
        .mutate(&raw, expected, |nb| match upsert_section(nb, &tpl, &id, &content) {
            Ok((next, cell)) => Ok((next, cell)),
            Err(CardError::UnknownSection(id)) => {
                Err(ApiError::not_found("unknown_section", format!("section `{id}` is not in the template")))
            }
            Err(e) => Err(ApiError::internal("edit", e.to_string())),
        })
        .await?;
    Ok(with_etag(&hash, json!({ "cell_id": cell_id, "hash": hash })))
}

async fn export(State(s): State<AppState>, q: Result<Query<NbQuery>, QueryRejection>, body: Bytes) -> ApiResult {
    let raw = nb_param(q)?;
    let value = json_body(&body)?;
    let out = value
        .get("path")
        .and_then(Value::as_str)
        .ok_or_else(|| ApiError::bad_request("body must be {\"path\": <string>}"))?;
    let target = s.resolve_output(out)?;
    let tpl = s.template()?;
    let loaded = s.load(&raw)?;
    let card = extract_card(&loaded.notebook, &tpl);
    let bytes = export_card(&card, &tpl);
    write_atomic(&target, &bytes)?;
    let written = target.strip_prefix(s.root()).unwrap_or(&target).to_string_lossy().into_owned();
    Ok(Json(json!({
        "written": written,
        "bytes": bytes.len(),
        "empty_sections": completion_check(&card, &tpl),
    }))
    .into_response())
}

async fn outline(State(s): State<AppState>, q: Result<Query<NbQuery>, QueryRejection>) -> ApiResult {
    let loaded = s.load(&nb_param(q)?)?;
    let cells: Vec<Value> = loaded
        .notebook
        .cells()
        .iter()
        .map(|c| {
            json!({
                "id": c.id,
                "kind": c.kind.as_str(),
                "first_line": c.source.lines().next().unwrap_or(""),
                "stage": c.model_card_str("stage"),
            })
        })
        .collect();
    Ok(with_etag(&loaded.hash, json!({ "cells": cells, "hash": loaded.hash })))
}

async fn stages(State(s): State<AppState>, q: Result<Query<NbQuery>, QueryRejection>) -> ApiResult {
    let loaded = s.load(&nb_param(q)?)?;
    let stored = assignments_from_metadata(&loaded.notebook);
    Ok(with_etag(&loaded.hash, json!({ "assignments": stored, "hash": loaded.hash })))
}

async fn detect(
    State(s): State<AppState>,
    q: Result<Query<NbQuery>, QueryRejection>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let raw = nb_param(q)?;
    let write = if body.is_empty() {
        false
    } else {
        let v = json_body(&body)?;
        match v.get("write") {
            None => false,
            Some(Value::Bool(b)) => *b,
            Some(_) => return Err(ApiError::bad_request("`write` must be a boolean")),
        }
    };
    let kb = s.knowledge_base()?;
    if !write {
        let loaded = s.load(&raw)?;
        let detected = detect_notebook_stages(&loaded.notebook, &kb);
        return Ok(with_etag(&loaded.hash, json!({ "assignments": detected, "written": false, "hash": loaded.hash })));
    }
    let expected = if_match(&headers)?;
    let (detected, hash) = s
        .mutate(&raw, expected, |nb| {
            let detected = detect_notebook_stages(nb, &kb);
            let next = apply_assignments(nb, &detected).map_err(stage_error)?;
            Ok((next, detected))
        })
        .await?;
    Ok(with_etag(&hash, json!({ "assignments": detected, "written": true, "hash": hash })))
}

async fn put_stage(
    State(s): State<AppState>,
    Path(cell_id): Path<String>,
    q: Result<Query<NbQuery>, QueryRejection>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let raw = nb_param(q)?;
    let expected = if_match(&headers)?;
    let value = json_body(&body)?;
    let stage = match value.get("stage") {
        Some(Value::Null) => None,
        Some(Value::String(name)) => Some(
            name.parse::<Stage>()
                .map_err(|_| ApiError::unprocessable("unknown_stage", format!("unknown stage `{name}`")))?,
        ),
        _ => return Err(ApiError::bad_request("body must be {\"stage\": <stage name> | null}")),
    };
    let id = CellId::new(cell_id);
    let (_, hash) = s
        .mutate(&raw, expected, |nb| {
            let next = match stage {
                Some(st) => write_stage_comment(nb, &id, st, StageSource::Manual),
                None => clear_stage(nb, &id),
            }
            .map_err(stage_error)?;
            Ok((next, ()))
        })
        .await?;
    let source = stage.map(|_| StageSource::Manual);
    Ok(with_etag(&hash, json!({ "cell_id": id, "stage": stage, "source": source, "hash": hash })))
}

async fn navigation(State(s): State<AppState>, q: Result<Query<NbQuery>, QueryRejection>) -> ApiResult {
    let loaded = s.load(&nb_param(q)?)?;
    let nav = build_navigation(&loaded.notebook);
    Ok(with_etag(&loaded.hash, json!(nav)))
}

async fn trace(State(s): State<AppState>, q: Result<Query<NbQuery>, QueryRejection>) -> ApiResult {
    let raw = nb_param(q)?;
    let tpl = s.template()?;
    let loaded = s.load(&raw)?;
    let issues = check_trace_integrity(&loaded.notebook, &tpl);
    Ok(with_etag(&loaded.hash, json!({ "issues": issues, "hash": loaded.hash })))
}

async fn rubric(State(s): State<AppState>, q: Result<Query<NbQuery>, QueryRejection>) -> ApiResult {
    let raw = nb_param(q)?;
    let tpl = s.template()?;
    let loaded = s.load(&raw)?;
    let (report, document) = assess_notebook(&raw, &loaded.notebook, &tpl)
        .map_err(|e| ApiError::unprocessable("bad_stored_answers", e.to_string()))?;
    Ok(with_etag(&loaded.hash, json!({ "report": report, "document": document, "hash": loaded.hash })))
}

async fn put_answers(
    State(s): State<AppState>,
    q: Result<Query<NbQuery>, QueryRejection>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let raw = nb_param(q)?;
    let expected = if_match(&headers)?;
    let value = json_body(&body)?;
    if !value.is_object() {
        return Err(ApiError::bad_request("body must be a JSON object of question id to answer"));
    }
    let answers = manual_answers_from_json(&value).map_err(|e| ApiError::unprocessable("bad_answer", e.to_string()))?;
    let tpl = s.template()?;
    let (report, hash) = s
        .mutate(&raw, expected, |nb| {
            let next = with_manual_answers(nb, &answers);
            let (report, _) = assess_notebook(&raw, &next, &tpl)
                .map_err(|e| ApiError::internal("bad_stored_answers", e.to_string()))?;
            Ok((next, report))
        })
        .await?;
    Ok(with_etag(&hash, json!({ "report": report, "hash": hash })))
}
