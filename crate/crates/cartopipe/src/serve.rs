//! JSON API over an immutable snapshot loaded at startup.
//!
//! | route                      | body                                   |
//! |----------------------------|----------------------------------------|
//! | `GET /api/model`           | viewjson of the central model          |
//! | `GET /api/schema`          | the schema file as loaded              |
//! | `GET /api/views`           | `[{"id","name","iconPath"?}]`          |
//! | `POST /api/views/{id}/run` | viewjson of the view result            |
//! | `GET /`                    | the viewer bundle (or a stub page)     |

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use serde::Serialize;
use tower_http::services::ServeDir;

use cartopipe_core::export::to_view_json;
use cartopipe_core::views::{run_view, ViewError, ViewRegistry};
use cartopipe_core::xform::ExecOptions;
use cartopipe_core::{validate, CartographyModel, MetamodelSchema};

use crate::files::{load_model, load_registry, load_schema_arg};

pub struct Snapshot {
    model: CartographyModel,
    schema: MetamodelSchema,
    registry: ViewRegistry,
    options: ExecOptions,
    model_json: String,
    schema_json: String,
    views_json: String,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ViewEntry<'a> {
    id: &'a str,
    name: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    icon_path: Option<&'a str>,
}

impl Snapshot {
    /// `schema_text` is served verbatim; pass an empty string for built-in
    /// schemas to get a synthesized `{"name", "types": []}` document.
    pub fn new(
        model: CartographyModel,
        schema: MetamodelSchema,
        schema_text: String,
        registry: ViewRegistry,
        options: ExecOptions,
    ) -> Result<Snapshot> {
        let report = validate(&model, &schema);
        if let Some(issue) = report.errors().next() {
            anyhow::bail!("model does not conform to schema `{}`: {issue}", schema.name());
        }
        let entries: Vec<ViewEntry<'_>> = registry
            .views()
            .map(|v| ViewEntry {
                id: &v.id,
                name: &v.name,
                icon_path: v.icon_path.as_deref(),
            })
            .collect();
        let views_json = serde_json::to_string(&entries)?;
        let schema_json = if schema_text.trim().is_empty() {
            serde_json::json!({"name": schema.name(), "types": []}).to_string()
        } else {
            schema_text
        };
        Ok(Snapshot {
            model_json: to_view_json(&model, &schema),
            model,
            schema,
            registry,
            options,
            schema_json,
            views_json,
        })
    }

    pub fn load(model: &Path, registry: &Path, schema: &str, options: ExecOptions) -> Result<Snapshot> {
        let (schema, text) = load_schema_arg(schema)?;
        let model = load_model(model)?;
        let registry = load_registry(registry)?;
        Snapshot::new(model, schema, text, registry, options)
    }
}

fn json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error(status: StatusCode, message: &str) -> Response {
    json(status, serde_json::json!({ "error": message }).to_string())
}

async fn model(State(s): State<Arc<Snapshot>>) -> Response {
    json(StatusCode::OK, s.model_json.clone())
}

async fn schema(State(s): State<Arc<Snapshot>>) -> Response {
    json(StatusCode::OK, s.schema_json.clone())
}

async fn views(State(s): State<Arc<Snapshot>>) -> Response {
    json(StatusCode::OK, s.views_json.clone())
}

async fn run(State(s): State<Arc<Snapshot>>, UrlPath(id): UrlPath<String>) -> Response {
    let work = tokio::task::spawn_blocking(move || {
        run_view(&s.registry, &id, &s.model, &s.schema, s.options).map(|r| to_view_json(&r.model, &s.schema))
    });
    match work.await {
        Ok(Ok(body)) => json(StatusCode::OK, body),
        Ok(Err(e @ ViewError::NotFound(_))) => error(StatusCode::NOT_FOUND, &e.to_string()),
        Ok(Err(e)) => {
            log::error!("{e}");
            error(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string())
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string()),
    }
}

async fn api_not_found() -> Response {
    error(StatusCode::NOT_FOUND, "no such endpoint")
}

const STUB_PAGE: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>cartopipe</title></head>
<body>
<h1>cartopipe</h1>
<p>No viewer bundle is configured (start with <code>--static-dir</code>).
The JSON API is available:</p>
<ul>
<li><a href=\"/api/model\">/api/model</a></li>
<li><a href=\"/api/schema\">/api/schema</a></li>
<li><a href=\"/api/views\">/api/views</a></li>
<li><code>POST /api/views/{id}/run</code></li>
</ul>
</body></html>
";

/// The service. `static_dir`, when given, is served at `/`.
pub fn router(snapshot: Arc<Snapshot>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/model", get(model))
        .route("/api/schema", get(schema))
        .route("/api/views", get(views))
        // GET is accepted too so the endpoint can be tried from a browser.
        .route("/api/views/{id}/run", get(run).post(run))
        .route("/api/{*rest}", get(api_not_found).post(api_not_found))
        .with_state(snapshot);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(STUB_PAGE) })),
    }
}

/// Serves until the process is stopped.
pub async fn serve(snapshot: Snapshot, addr: SocketAddr, static_dir: Option<PathBuf>) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("cannot listen on {addr}"))?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(snapshot), static_dir)).await?;
    Ok(())
}
