//! HTTP endpoints used by the annotation editor.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use log::info;
use vcam_core::grid::build_full_grid;
use vcam_core::video::{frame_file_name, FrameManifest};
use vcam_core::{Error, GlimpseGrid, Result, TrajectoryFile};

use crate::commands::read_grid;
use crate::config::{Config, DEFAULT_BIND};
use crate::ServeArgs;

#[derive(Debug)]
pub struct ServeState {
    pub frames_dir: PathBuf,
    pub manifest: FrameManifest,
    pub grid: GlimpseGrid,
    pub store: PathBuf,
}

impl ServeState {
    /// Without an explicit grid, the full grid for the video's length is served.
    pub fn new(frames_dir: &Path, grid: Option<GlimpseGrid>, store: &Path) -> Result<Self> {
        let manifest = FrameManifest::read(frames_dir)?;
        let grid = match grid {
            Some(g) => g,
            None => build_full_grid(manifest.duration_s(), true)?,
        };
        std::fs::create_dir_all(store).map_err(|e| Error::io(store, e))?;
        Ok(Self {
            frames_dir: frames_dir.to_path_buf(),
            manifest,
            grid,
            store: store.to_path_buf(),
        })
    }
}

pub fn router(state: Arc<ServeState>) -> Router {
    Router::new()
        .route("/manifest", get(manifest))
        .route("/grid", get(grid))
        .route("/frames/{name}", get(frame))
        .route("/trajectories", get(list_trajectories).post(upload))
        .with_state(state)
}

fn error(status: StatusCode, e: impl ToString) -> Response {
    (status, Json(serde_json::json!({ "error": e.to_string() }))).into_response()
}

async fn manifest(State(s): State<Arc<ServeState>>) -> Json<FrameManifest> {
    Json(s.manifest)
}

async fn grid(State(s): State<Arc<ServeState>>) -> Json<GlimpseGrid> {
    Json(s.grid.clone())
}

async fn frame(State(s): State<Arc<ServeState>>, UrlPath(name): UrlPath<String>) -> Response {
    let stem = name.strip_suffix(".png").unwrap_or(&name);
    let index = match stem.parse::<usize>() {
        Ok(i) if stem.bytes().all(|b| b.is_ascii_digit()) && i < s.manifest.frame_count => i,
        _ => return error(StatusCode::NOT_FOUND, format!("no frame '{name}'")),
    };
    let path = s.frames_dir.join(frame_file_name(index));
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, "image/png")], bytes).into_response(),
        Err(e) => error(StatusCode::NOT_FOUND, format!("frame {index}: {e}")),
    }
}

fn stored_names(store: &Path) -> std::io::Result<Vec<String>> {
    let mut names: Vec<String> = std::fs::read_dir(store)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".json"))
        .collect();
    names.sort();
    Ok(names)
}

async fn list_trajectories(State(s): State<Arc<ServeState>>) -> Response {
    match stored_names(&s.store) {
        Ok(names) => Json(names).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

/// Writes through a temporary file in the store and links it under the first
/// free `human_NNNN.json` name, so readers never see partial files and
/// concurrent uploads never overwrite each other.
fn store_file(store: &Path, json: &str) -> std::io::Result<String> {
    use std::io::Write;
    let mut tmp = tempfile::NamedTempFile::new_in(store)?;
    tmp.write_all(json.as_bytes())?;
    tmp.as_file().sync_all()?;
    let mut n = stored_names(store)?.len();
    loop {
        let name = format!("human_{n:04}.json");
        match tmp.persist_noclobber(store.join(&name)) {
            Ok(_) => return Ok(name),
            Err(e) if e.error.kind() == std::io::ErrorKind::AlreadyExists => {
                tmp = e.file;
                n += 1;
            }
            Err(e) => return Err(e.error),
        }
    }
}

async fn upload(State(s): State<Arc<ServeState>>, body: Bytes) -> Response {
    let text = match std::str::from_utf8(&body) {
        Ok(t) => t,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let file = match TrajectoryFile::from_json(text) {
        Ok(f) => f,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let json = match file.to_json() {
        Ok(j) => j,
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, e),
    };
    let store = s.store.clone();
    match tokio::task::spawn_blocking(move || store_file(&store, &json)).await {
        Ok(Ok(name)) => {
            info!("stored {name}");
            (StatusCode::CREATED, Json(serde_json::json!({ "name": name }))).into_response()
        }
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

pub fn serve(a: &ServeArgs, cfg: &Config) -> Result<()> {
    let grid = a.grid.as_deref().map(read_grid).transpose()?;
    let state = Arc::new(ServeState::new(&a.frames, grid, &a.store)?);
    let bind = a.bind.clone().or(cfg.bind.clone()).unwrap_or(DEFAULT_BIND.into());
    let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Data(format!("runtime: {e}")))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&bind)
            .await
            .map_err(|e| Error::InvalidArgument(format!("cannot bind {bind}: {e}")))?;
        info!("serving on {bind}");
        axum::serve(listener, router(state))
            .await
            .map_err(|e| Error::Data(format!("server stopped: {e}")))
    })
}
