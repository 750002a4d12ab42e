//! Local HTTP/JSON front end for the browser UI.

use std::collections::{BTreeMap, HashMap};
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::{Body, Bytes};
use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use csplens::fiber::MeshFormat;
use csplens::lens::{LensKind, LensSpec};
use csplens::quant::Weight;
use csplens::segmentation::WHOLE_DOMAIN;
use csplens::{RangePoint, RangePolyline};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::workflow::{self, AppError, Config, CspRequest, Dataset};

pub const DEFAULT_PORT: u16 = 8737;
pub const META_HEADER: &str = "x-csp-meta";

/// Rendered CSP view as served.
#[derive(Debug)]
pub struct CachedCsp {
    pub png: Vec<u8>,
    pub csv: String,
    pub meta: String,
}

#[derive(Debug)]
pub struct AppState {
    config: Config,
    data_dir: PathBuf,
    datasets: RwLock<BTreeMap<String, Arc<Dataset>>>,
    cache: Mutex<HashMap<String, Arc<CachedCsp>>>,
}

pub type SharedState = Arc<AppState>;

impl AppState {
    pub fn new(config: Config, data_dir: PathBuf) -> Self {
        Self {
            config,
            data_dir,
            datasets: RwLock::new(BTreeMap::new()),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn insert(&self, ds: Dataset) {
        let mut map = self.datasets.write().expect("dataset lock");
        map.insert(ds.id.clone(), Arc::new(ds));
    }

    pub fn dataset(&self, id: &str) -> Result<Arc<Dataset>, AppError> {
        let map = self.datasets.read().expect("dataset lock");
        map.get(id).cloned().ok_or_else(|| AppError::UnknownDataset(id.to_string()))
    }

    pub fn dataset_ids(&self) -> Vec<String> {
        self.datasets.read().expect("dataset lock").keys().cloned().collect()
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    /// Loads `data_dir` itself (as `default`) and every immediate
    /// subdirectory holding a cube pair. Returns the ids loaded.
    pub fn load_data_dir(&self) -> Result<Vec<String>, AppError> {
        let mut found = Vec::new();
        if has_pair(&self.data_dir) {
            found.push(("default".to_string(), self.data_dir.clone()));
        }
        let mut subdirs: Vec<PathBuf> = std::fs::read_dir(&self.data_dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir() && has_pair(p))
            .collect();
        subdirs.sort();
        for p in subdirs {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            found.push((name, p));
        }
        let mut ids = Vec::new();
        for (id, dir) in found {
            self.insert(Dataset::load_dir(id.clone(), &dir)?);
            ids.push(id);
        }
        Ok(ids)
    }

    /// Resolves a user path inside the data directory.
    fn sandboxed(&self, rel: &str) -> Result<PathBuf, AppError> {
        let root = self.data_dir.canonicalize()?;
        let p = root
            .join(rel)
            .canonicalize()
            .map_err(|e| AppError::Usage(format!("cannot open `{rel}`: {e}")))?;
        if !p.starts_with(&root) {
            return Err(AppError::Usage(format!("`{rel}` lies outside the data directory")));
        }
        Ok(p)
    }

    fn csp(&self, ds: &Dataset, req: &CspRequest) -> Result<Arc<CachedCsp>, AppError> {
        let key = format!("{}|{:?}", ds.id, req);
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let view = workflow::csp_view(ds, req, self.config.r0)?;
        let fresh = Arc::new(CachedCsp {
            png: view.png()?,
            csv: view.csv(),
            meta: view.meta_json(),
        });
        let mut cache = self.cache.lock().expect("cache lock");
        Ok(cache.entry(key).or_insert(fresh).clone())
    }
}

fn has_pair(dir: &Path) -> bool {
    dir.join(workflow::HOLE_FILE).is_file() && dir.join(workflow::PARTICLE_FILE).is_file()
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl From<AppError> for ApiError {
    fn from(e: AppError) -> Self {
        use csplens::Error as E;
        let status = match &e {
            AppError::UnknownDataset(_) | AppError::Core(E::UnknownSubgroup(_)) => StatusCode::NOT_FOUND,
            AppError::Core(E::InvalidPolyline(_)) => StatusCode::UNPROCESSABLE_ENTITY,
            AppError::Core(E::Png(_)) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::to_string(&json!({ "error": self.message })).expect("error serializes");
        (self.status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn json_body(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, AppError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(ApiError::from)
}

fn parse_body(bytes: &Bytes) -> Result<serde_json::Map<String, Value>, ApiError> {
    match serde_json::from_slice::<Value>(bytes) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(ApiError::bad_request("request body must be a JSON object")),
        Err(e) => Err(ApiError::bad_request(format!("malformed JSON: {e}"))),
    }
}

fn field<T: DeserializeOwned>(
    body: &serde_json::Map<String, Value>,
    name: &str,
    status: StatusCode,
) -> Result<Option<T>, ApiError> {
    match body.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => T::deserialize(v)
            .map(Some)
            .map_err(|e| ApiError::new(status, format!("field `{name}`: {e}"))),
    }
}

fn required<T: DeserializeOwned>(
    body: &serde_json::Map<String, Value>,
    name: &str,
    status: StatusCode,
) -> Result<T, ApiError> {
    field(body, name, status)?.ok_or_else(|| ApiError::new(status, format!("missing field `{name}`")))
}

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/datasets", get(list_datasets).post(add_dataset))
        .route("/csp", get(get_csp))
        .route("/contour", post(post_contour))
        .route("/fibersurface", post(post_fibersurface))
        .route("/fiber", post(post_fiber))
        .route("/quant", get(get_quant))
        .route("/molecule", get(get_molecule))
        .route("/openapi.json", get(openapi))
        .with_state(state)
}

/// Binds the loopback interface and serves until the process ends.
pub async fn serve(state: SharedState, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(SocketAddr::from((Ipv4Addr::LOCALHOST, port))).await?;
    let addr = listener.local_addr()?;
    println!("listening on http://{addr}");
    use std::io::Write;
    std::io::stdout().flush()?;
    axum::serve(listener, router(state)).await
}

async fn list_datasets(State(st): State<SharedState>) -> ApiResult {
    let infos: Vec<_> = st
        .dataset_ids()
        .iter()
        .map(|id| st.dataset(id).map(|d| d.info()))
        .collect::<Result<_, _>>()?;
    Ok(json_body(workflow::to_pretty_json(&infos)))
}

async fn add_dataset(State(st): State<SharedState>, body: Bytes) -> ApiResult {
    let body = parse_body(&body)?;
    let bad = StatusCode::BAD_REQUEST;
    let id: String = required(&body, "id", bad)?;
    let hole: String = required(&body, "hole", bad)?;
    let particle: String = required(&body, "particle", bad)?;
    let groups: Option<String> = field(&body, "subgroups", bad)?;
    if id.is_empty() {
        return Err(ApiError::bad_request("dataset id is empty"));
    }
    let info = blocking(move || {
        let hole = st.sandboxed(&hole)?;
        let particle = st.sandboxed(&particle)?;
        let groups = groups.map(|g| st.sandboxed(&g)).transpose()?;
        let ds = Dataset::load(id, &hole, &particle, groups.as_deref())?;
        let info = ds.info();
        st.insert(ds);
        Ok(info)
    })
    .await?;
    Ok((StatusCode::CREATED, json_body(workflow::to_pretty_json(&info))).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CspQuery {
    pub dataset: String,
    pub segment: Option<String>,
    pub lens: Option<String>,
    pub r0: Option<f64>,
    pub expr: Option<String>,
    pub res: Option<usize>,
    pub log: Option<bool>,
    pub window: Option<String>,
    /// `png` (default), `meta` or `csv`.
    pub format: Option<String>,
}

fn lens_spec(kind: Option<&str>, r0: Option<f64>, expr: Option<String>) -> Result<Option<LensSpec>, ApiError> {
    let Some(k) = kind else {
        if r0.is_some() || expr.is_some() {
            return Err(ApiError::bad_request("r0/expr given without a lens"));
        }
        return Ok(None);
    };
    let kind: LensKind = k.parse().map_err(|e: csplens::Error| ApiError::bad_request(e.to_string()))?;
    Ok(Some(LensSpec { kind, r0, expr }))
}

async fn get_csp(State(st): State<SharedState>, Query(q): Query<CspQuery>) -> ApiResult {
    let ds = st.dataset(&q.dataset)?;
    let window = q.window.as_deref().map(workflow::parse_window).transpose()?;
    let req = CspRequest {
        segment: q.segment.unwrap_or_else(|| WHOLE_DOMAIN.to_string()),
        lens: lens_spec(q.lens.as_deref(), q.r0, q.expr)?,
        resolution: q.res.unwrap_or(st.config.resolution),
        window,
        log_scale: q.log.unwrap_or(true),
    };
    let format = q.format.unwrap_or_else(|| "png".into());
    if !matches!(format.as_str(), "png" | "meta" | "csv") {
        return Err(ApiError::bad_request(format!("unknown format `{format}`")));
    }
    let st2 = st.clone();
    let view = blocking(move || st2.csp(&ds, &req)).await?;
    Ok(match format.as_str() {
        "meta" => json_body(format!("{}\n", view.meta)),
        "csv" => ([(header::CONTENT_TYPE, "text/csv")], view.csv.clone()).into_response(),
        _ => {
            let mut r = Response::new(Body::from(view.png.clone()));
            let h = r.headers_mut();
            h.insert(header::CONTENT_TYPE, HeaderValue::from_static("image/png"));
            if let Ok(v) = HeaderValue::from_str(&view.meta) {
                h.insert(META_HEADER, v);
            }
            r
        }
    })
}

async fn post_contour(State(st): State<SharedState>, body: Bytes) -> ApiResult {
    let body = parse_body(&body)?;
    let bad = StatusCode::BAD_REQUEST;
    let id: String = required(&body, "dataset", bad)?;
    let lens: LensSpec = required(&body, "lens", bad)?;
    let k: f64 = required(&body, "k", bad)?;
    let res: usize = field(&body, "res", bad)?.unwrap_or(st.config.resolution);
    let window: Option<[f64; 4]> = field(&body, "window", bad)?;
    let ds = st.dataset(&id)?;
    let r0 = st.config.r0;
    let cps = blocking(move || workflow::contours(&ds, &lens, k, res, window, r0)).await?;
    Ok(json_body(workflow::contours_json(&cps)))
}

async fn post_fibersurface(State(st): State<SharedState>, body: Bytes) -> ApiResult {
    let body = parse_body(&body)?;
    let bad = StatusCode::BAD_REQUEST;
    let id: String = required(&body, "dataset", bad)?;
    let segment: String = field(&body, "segment", bad)?.unwrap_or_else(|| WHOLE_DOMAIN.to_string());
    let format: Option<String> = field(&body, "format", bad)?;
    let format: MeshFormat = match format {
        Some(f) => f.parse().map_err(|e: csplens::Error| ApiError::bad_request(e.to_string()))?,
        None => MeshFormat::Json,
    };
    let polyline: RangePolyline = required(&body, "polyline", StatusCode::UNPROCESSABLE_ENTITY)?;
    let ds = st.dataset(&id)?;
    let mesh = blocking(move || workflow::fiber_surface(&ds, &polyline, &segment)).await?;
    let ctype = match format {
        MeshFormat::Obj => "text/plain",
        _ => "application/json",
    };
    Ok(([(header::CONTENT_TYPE, ctype)], workflow::mesh_bytes(&mesh, format)).into_response())
}

async fn post_fiber(State(st): State<SharedState>, body: Bytes) -> ApiResult {
    let body = parse_body(&body)?;
    let bad = StatusCode::BAD_REQUEST;
    let id: String = required(&body, "dataset", bad)?;
    let point: RangePoint = required(&body, "point", bad)?;
    let segment: String = field(&body, "segment", bad)?.unwrap_or_else(|| WHOLE_DOMAIN.to_string());
    let ds = st.dataset(&id)?;
    let out = blocking(move || workflow::fiber_curve(&ds, point, &segment)).await?;
    Ok(json_body(out.to_json()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantQuery {
    pub dataset: String,
    pub weight: Option<String>,
    pub res: Option<usize>,
}

async fn get_quant(State(st): State<SharedState>, Query(q): Query<QuantQuery>) -> ApiResult {
    let ds = st.dataset(&q.dataset)?;
    let weight: Weight = match q.weight.as_deref() {
        Some(w) => w.parse().map_err(|e: csplens::Error| ApiError::bad_request(e.to_string()))?,
        None => Weight::DonorStrength,
    };
    let res = q.res.unwrap_or(st.config.resolution);
    let report = blocking(move || workflow::quant(&ds, &weight, res)).await?;
    Ok(json_body(report.to_json()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetQuery {
    pub dataset: String,
}

async fn get_molecule(State(st): State<SharedState>, Query(q): Query<DatasetQuery>) -> ApiResult {
    let ds = st.dataset(&q.dataset)?;
    Ok(json_body(workflow::to_pretty_json(&workflow::molecule_view(&ds.molecule))))
}

async fn openapi() -> Response {
    json_body(workflow::to_pretty_json(&openapi_document()))
}

/// Hand-written description of every endpoint and JSON field.
pub fn openapi_document() -> Value {
    let q = |name: &str, ty: &str, required: bool, doc: &str| {
        json!({"name": name, "in": "query", "required": required, "schema": {"type": ty}, "description": doc})
    };
    let err = json!({"description": "error", "content": {"application/json": {"schema": {"$ref": "#/components/schemas/Error"}}}});
    json!({
        "openapi": "3.0.3",
        "info": {"title": "csplens", "version": env!("CARGO_PKG_VERSION")},
        "paths": {
            "/datasets": {
                "get": {"summary": "Loaded datasets", "responses": {"200": {"description": "list of DatasetInfo"}}},
                "post": {
                    "summary": "Load a cube pair from the data directory",
                    "requestBody": {"content": {"application/json": {"schema": {"$ref": "#/components/schemas/DatasetRequest"}}}},
                    "responses": {"201": {"description": "DatasetInfo"}, "400": err}
                }
            },
            "/csp": {"get": {
                "summary": "Rendered CSP view; metadata in the x-csp-meta header",
                "parameters": [
                    q("dataset", "string", true, "dataset id"),
                    q("segment", "string", false, "subgroup name or `whole` (default)"),
                    q("lens", "string", false, "identity, hole, particle, charge_transfer, donor, acceptor or custom"),
                    q("r0", "number", false, "origin exclusion radius"),
                    q("expr", "string", false, "custom mask expression in s1, s2"),
                    q("res", "integer", false, "bins per axis"),
                    q("log", "boolean", false, "logarithmic color scale (default true)"),
                    q("window", "string", false, "s1min,s1max,s2min,s2max"),
                    q("format", "string", false, "png (default), meta or csv")
                ],
                "responses": {"200": {"description": "image/png, CspMeta JSON or CSV"}, "400": err, "404": err}
            }},
            "/contour": {"post": {
                "summary": "Isocontours of a lens mask as control polygons",
                "requestBody": {"content": {"application/json": {"schema": {"$ref": "#/components/schemas/ContourRequest"}}}},
                "responses": {"200": {"description": "list of ControlPolygon"}, "400": err, "404": err}
            }},
            "/fibersurface": {"post": {
                "summary": "Fiber surface of a range polyline",
                "requestBody": {"content": {"application/json": {"schema": {"$ref": "#/components/schemas/FiberSurfaceRequest"}}}},
                "responses": {"200": {"description": "FiberSurfaceMesh (json), OBJ or glTF"}, "400": err, "404": err, "422": err}
            }},
            "/fiber": {"post": {
                "summary": "Fiber of a range point",
                "requestBody": {"content": {"application/json": {"schema": {"$ref": "#/components/schemas/FiberRequest"}}}},
                "responses": {"200": {"description": "FiberOutput"}, "400": err, "404": err}
            }},
            "/quant": {"get": {
                "summary": "Per-subgroup quantification report",
                "parameters": [
                    q("dataset", "string", true, "dataset id"),
                    q("weight", "string", false, "identity, hole, particle, donor_strength (default) or poly:c0,c1,c2,c11,c12,c22"),
                    q("res", "integer", false, "bins per axis")
                ],
                "responses": {"200": {"description": "QuantReport"}, "400": err, "404": err}
            }},
            "/molecule": {"get": {
                "summary": "Atoms and distance-heuristic bonds",
                "parameters": [q("dataset", "string", true, "dataset id")],
                "responses": {"200": {"description": "MoleculeView"}, "404": err}
            }}
        },
        "components": {"schemas": {
            "Error": {"type": "object", "properties": {"error": {"type": "string"}}},
            "RangePoint": {"type": "object", "properties": {"s1": {"type": "number"}, "s2": {"type": "number"}}},
            "RangePolyline": {"type": "object", "properties": {
                "points": {"type": "array", "items": {"$ref": "#/components/schemas/RangePoint"}, "description": "at least two points, three when closed"},
                "closed": {"type": "boolean"}
            }},
            "RangeWindow": {"type": "object", "properties": {
                "s1": {"type": "array", "items": {"type": "number"}, "description": "[min, max]"},
                "s2": {"type": "array", "items": {"type": "number"}, "description": "[min, max]"},
                "bins": {"type": "array", "items": {"type": "integer"}, "description": "[bins_x, bins_y]"}
            }},
            "LensSpec": {"type": "object", "properties": {
                "kind": {"type": "string"},
                "r0": {"type": "number", "description": "origin exclusion radius; defaults to 2% of the window diagonal, 0 for identity"},
                "expr": {"type": "string", "description": "custom lenses only"}
            }},
            "DatasetRequest": {"type": "object", "properties": {
                "id": {"type": "string"},
                "hole": {"type": "string", "description": "cube path relative to the data directory"},
                "particle": {"type": "string"},
                "subgroups": {"type": "string", "description": "subgroup JSON path, optional"}
            }},
            "DatasetInfo": {"type": "object", "properties": {
                "id": {"type": "string"},
                "dims": {"type": "array", "items": {"type": "integer"}},
                "atoms": {"type": "integer"},
                "subgroups": {"type": "array", "items": {"type": "string"}}
            }},
            "CspMeta": {"type": "object", "properties": {
                "dataset": {"type": "string"},
                "segment": {"type": "string"},
                "lens": {"type": "string", "nullable": true},
                "r0": {"type": "number", "nullable": true},
                "window": {"$ref": "#/components/schemas/RangeWindow"},
                "log_scale": {"type": "boolean"},
                "total_mass": {"type": "number", "description": "volume inside the window before the lens"},
                "delta": {"type": "number", "description": "lens quantity of the view"},
                "donor_strength": {"type": "number", "description": "exact donor strength of the segment"},
                "clamped": {"type": "boolean", "description": "part of the image fell outside the window"}
            }},
            "ContourRequest": {"type": "object", "properties": {
                "dataset": {"type": "string"},
                "lens": {"$ref": "#/components/schemas/LensSpec"},
                "k": {"type": "number", "description": "isovalue"},
                "res": {"type": "integer"},
                "window": {"type": "array", "items": {"type": "number"}}
            }},
            "ControlPolygon": {"type": "object", "properties": {
                "polyline": {"$ref": "#/components/schemas/RangePolyline"},
                "level": {"type": "number"},
                "mask_kind": {"type": "string"}
            }},
            "FiberSurfaceRequest": {"type": "object", "properties": {
                "dataset": {"type": "string"},
                "polyline": {"$ref": "#/components/schemas/RangePolyline"},
                "segment": {"type": "string"},
                "format": {"type": "string", "description": "json (default), obj or gltf"}
            }},
            "FiberSurfaceMesh": {"type": "object", "properties": {
                "vertices": {"type": "array", "description": "[x, y, z] in bohr"},
                "triangles": {"type": "array", "description": "vertex index triples"},
                "range_points": {"type": "array", "items": {"$ref": "#/components/schemas/RangePoint"}},
                "params": {"type": "array", "description": "parameter along the source segment"},
                "segment_ids": {"type": "array", "description": "polyline segment of each vertex"},
                "triangle_cells": {"type": "array", "description": "tetrahedron of each triangle"}
            }},
            "FiberRequest": {"type": "object", "properties": {
                "dataset": {"type": "string"},
                "point": {"$ref": "#/components/schemas/RangePoint"},
                "segment": {"type": "string"}
            }},
            "FiberOutput": {"type": "object", "properties": {
                "point": {"$ref": "#/components/schemas/RangePoint"},
                "segment": {"type": "string"},
                "length": {"type": "number"},
                "polylines": {"type": "array", "description": "lists of [x, y, z]"}
            }},
            "QuantReport": {"type": "object", "properties": {
                "weight": {"type": "string"},
                "resolution": {"type": "array", "items": {"type": "integer"}},
                "window": {"$ref": "#/components/schemas/RangeWindow"},
                "rows": {"type": "array", "items": {"$ref": "#/components/schemas/DeltaRow"}}
            }},
            "DeltaRow": {"type": "object", "properties": {
                "name": {"type": "string"},
                "delta_hist": {"type": "number", "description": "histogram estimate"},
                "delta_exact": {"type": "number", "nullable": true, "description": "exact quadrature"},
                "delta_vertex": {"type": "number", "description": "unrounded vertex-sample value"},
                "error": {"type": "number", "nullable": true, "description": "delta_hist - delta_exact"},
                "rounding_error": {"type": "number", "description": "delta_hist - delta_vertex"},
                "rounding_bound": {"type": "number", "nullable": true}
            }},
            "MoleculeView": {"type": "object", "properties": {
                "atoms": {"type": "array", "description": "index, atomic_number, symbol, position, radius, subgroup"},
                "bonds": {"type": "array", "description": "atom index pairs within 1.2 times the summed covalent radii"},
                "subgroups": {"type": "array", "items": {"type": "string"}}
            }}
        }}
    })
}
