use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use csplens_service::service::{router, AppState, META_HEADER};
use csplens_service::workflow::{self, Config, CspRequest, Dataset, SynthKind};
use http_body_util::BodyExt;
use tower::ServiceExt;

fn state() -> Arc<AppState> {
    let st = AppState::new(Config::default(), std::env::temp_dir());
    let (f, m) = workflow::synthesize(SynthKind::Nto, 9).unwrap();
    st.insert(Dataset::new("nto", f, m).unwrap());
    let (f, m) = workflow::synthesize(SynthKind::Xy, 9).unwrap();
    st.insert(Dataset::new("xy", f, m).unwrap());
    Arc::new(st)
}

async fn call(st: &Arc<AppState>, req: Request<Body>) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    let resp = router(st.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, headers, body)
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post(uri: &str, json: &str) -> Request<Body> {
    Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(json.to_string()))
        .unwrap()
}

#[tokio::test]
async fn identity_csp_matches_the_cli_rendering() {
    let st = state();
    let (status, headers, body) = call(&st, get("/csp?dataset=nto&lens=identity&res=64")).await;
    assert_eq!(status, StatusCode::OK);
    let (f, m) = workflow::synthesize(SynthKind::Nto, 9).unwrap();
    let ds = Dataset::new("nto", f, m).unwrap();
    let direct = workflow::csp_view(&ds, &CspRequest::whole(64), None).unwrap();
    assert_eq!(body, direct.png().unwrap());
    let meta: serde_json::Value = serde_json::from_str(headers[META_HEADER].to_str().unwrap()).unwrap();
    assert_eq!(meta["window"]["bins"], serde_json::json!([64, 64]));
    assert!((meta["delta"].as_f64().unwrap() - 216.0).abs() < 1e-6);
}

#[tokio::test]
async fn cached_views_equal_fresh_ones() {
    let st = state();
    let uri = "/csp?dataset=nto&segment=A&lens=donor&res=48";
    let (_, h1, first) = call(&st, get(uri)).await;
    assert_eq!(st.cache_len(), 1);
    let (_, h2, second) = call(&st, get(uri)).await;
    assert_eq!(st.cache_len(), 1);
    assert_eq!(first, second);
    assert_eq!(h1[META_HEADER], h2[META_HEADER]);
    let (_, _, fresh) = call(&state(), get(uri)).await;
    assert_eq!(first, fresh);
    let (status, _, meta) = call(&st, get(&format!("{uri}&format=meta"))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(String::from_utf8(meta).unwrap().trim_end(), h1[META_HEADER].to_str().unwrap());
}

#[tokio::test]
async fn error_statuses() {
    let st = state();
    let cases = [
        (get("/csp?dataset=missing"), StatusCode::NOT_FOUND),
        (get("/csp?dataset=nto&segment=Z"), StatusCode::NOT_FOUND),
        (get("/csp?dataset=nto&lens=sideways"), StatusCode::BAD_REQUEST),
        (get("/csp?dataset=nto&res=abc"), StatusCode::BAD_REQUEST),
        (get("/csp?dataset=nto&res=0"), StatusCode::BAD_REQUEST),
        (get("/quant"), StatusCode::BAD_REQUEST),
        (get("/quant?dataset=nto&weight=cubic"), StatusCode::BAD_REQUEST),
        (get("/molecule?dataset=none"), StatusCode::NOT_FOUND),
        (
            post("/fibersurface", r#"{"dataset":"xy","polyline":{"points":[{"s1":0.2,"s2":0.2}]}}"#),
            StatusCode::UNPROCESSABLE_ENTITY,
        ),
        (post("/fibersurface", r#"{"dataset":"xy","polyline":"oops"}"#), StatusCode::UNPROCESSABLE_ENTITY),
        (post("/fibersurface", "{not json"), StatusCode::BAD_REQUEST),
        (post("/contour", r#"{"dataset":"nto","lens":{"kind":"donor"}}"#), StatusCode::BAD_REQUEST),
        (post("/fiber", r#"{"dataset":"nope","point":{"s1":0,"s2":0}}"#), StatusCode::NOT_FOUND),
        (post("/datasets", r#"{"id":"x","hole":"../../etc/passwd","particle":"p"}"#), StatusCode::BAD_REQUEST),
    ];
    for (req, want) in cases {
        let uri = req.uri().to_string();
        let (status, _, body) = call(&st, req).await;
        assert_eq!(status, want, "{uri}: {}", String::from_utf8_lossy(&body));
        // extractor rejections answer in plain text
        if let Ok(v) = serde_json::from_slice::<serde_json::Value>(&body) {
            assert!(v["error"].is_string(), "{uri}");
        }
    }
}

#[tokio::test]
async fn quant_is_deterministic_and_has_a_whole_row() {
    let st = state();
    let (s1, _, a) = call(&st, get("/quant?dataset=nto&res=200")).await;
    let (_, _, b) = call(&st, get("/quant?dataset=nto&res=200")).await;
    assert_eq!(s1, StatusCode::OK);
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.last().unwrap()["name"], "whole");
    assert!(rows.last().unwrap()["delta_exact"].as_f64().unwrap().abs() < 1e-9);
}

#[tokio::test]
async fn fiber_surface_and_fiber_endpoints() {
    let st = state();
    let body = r#"{"dataset":"xy","polyline":{"points":[{"s1":0.2,"s2":0.2},{"s1":0.2,"s2":0.8}],"closed":false}}"#;
    let (status, _, mesh) = call(&st, post("/fibersurface", body)).await;
    assert_eq!(status, StatusCode::OK);
    let mesh = csplens::fiber::import_json(&mesh).unwrap();
    assert!((mesh.area() - 0.6).abs() < 1e-6);
    let (status, _, obj) = call(
        &st,
        post("/fibersurface", &body.replace("{\"dataset\"", "{\"format\":\"obj\",\"dataset\"")),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(obj).unwrap().lines().any(|l| l.starts_with("f ")));
    let (status, _, f) = call(&st, post("/fiber", r#"{"dataset":"xy","point":{"s1":0.3,"s2":0.6}}"#)).await;
    assert_eq!(status, StatusCode::OK);
    let v: serde_json::Value = serde_json::from_slice(&f).unwrap();
    assert!((v["length"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[tokio::test]
async fn contour_molecule_and_listing() {
    let st = state();
    let (status, _, body) = call(
        &st,
        post("/contour", r#"{"dataset":"nto","lens":{"kind":"donor","r0":0},"k":0.05,"res":120}"#),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let cps: Vec<csplens::lens::ControlPolygon> = serde_json::from_slice(&body).unwrap();
    assert!(!cps.is_empty());
    let (_, _, mol) = call(&st, get("/molecule?dataset=nto")).await;
    let v: serde_json::Value = serde_json::from_slice(&mol).unwrap();
    assert_eq!(v["atoms"].as_array().unwrap().len(), 2);
    // 2.2 bohr apart, well inside 1.2 × (2 × 1.44)
    assert_eq!(v["bonds"], serde_json::json!([[0, 1]]));
    let (_, _, list) = call(&st, get("/datasets")).await;
    let v: serde_json::Value = serde_json::from_slice(&list).unwrap();
    assert_eq!(v[0]["id"], "nto");
    assert_eq!(v[1]["id"], "xy");
    let (status, _, doc) = call(&st, get("/openapi.json")).await;
    assert_eq!(status, StatusCode::OK);
    let v: serde_json::Value = serde_json::from_slice(&doc).unwrap();
    assert!(v["components"]["schemas"]["DeltaRow"].is_object());
}

#[tokio::test]
async fn datasets_load_from_the_sandbox() {
    let dir = tempfile::tempdir().unwrap();
    workflow::write_synthetic(SynthKind::Nto, 7, &dir.path().join("pair")).unwrap();
    let st = Arc::new(AppState::new(Config::default(), dir.path().to_path_buf()));
    assert_eq!(st.load_data_dir().unwrap(), vec!["pair"]);
    let (status, _, body) = call(
        &st,
        post(
            "/datasets",
            r#"{"id":"again","hole":"pair/hole.cube","particle":"pair/particle.cube","subgroups":"pair/subgroups.json"}"#,
        ),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&body));
    let v: serde_json::Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["subgroups"], serde_json::json!(["A", "B"]));
    assert_eq!(st.dataset_ids(), vec!["again", "pair"]);
}
