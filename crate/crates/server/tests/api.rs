mod common;

use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use motiv::api;
use motiv::http::{cors, router, AppState, Settings};
use motiv_core::Dataset;
use serde_json::Value;
use tower::ServiceExt;

fn dataset() -> &'static Dataset {
    static DS: OnceLock<Dataset> = OnceLock::new();
    DS.get_or_init(common::fixture_dataset)
}

fn app() -> Router {
    let state = Arc::new(AppState {
        dataset: dataset().clone(),
        settings: Settings::default(),
    });
    router(state, cors(None).unwrap())
}

async fn send(app: Router, req: Request<Body>) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    let resp = app.oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, headers, body)
}

async fn get(uri: &str) -> (StatusCode, Vec<u8>) {
    let (s, _, b) = send(app(), Request::get(uri).body(Body::empty()).unwrap()).await;
    (s, b)
}

async fn post(uri: &str, body: &str) -> (StatusCode, Vec<u8>) {
    let req = Request::post(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let (s, _, b) = send(app(), req).await;
    (s, b)
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

#[tokio::test]
async fn frames_lists_twelve() {
    let (status, body) = get("/api/frames").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json(&body).as_array().map(Vec::len), Some(12));
}

#[tokio::test]
async fn summary_sorts_and_rejects_unknown_keys() {
    let (status, body) = get("/api/summary?sort=popularity&dir=desc").await;
    assert_eq!(status, StatusCode::OK);
    let v = json(&body);
    assert_eq!(v["sort"], "popularity");
    let frames = v["summaries"].as_array().unwrap();
    assert_eq!(frames.len(), 12);
    let pop: Vec<u64> = frames.iter().map(|f| f["popularity"].as_u64().unwrap()).collect();
    assert!(pop.windows(2).all(|w| w[0] >= w[1]), "{pop:?}");

    let (status, body) = get("/api/summary?sort=loudness").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let err = json(&body);
    assert_eq!(err["code"], "bad_request");
    assert!(err["detail"]["valid"].as_array().unwrap().len() >= 4);
}

#[tokio::test]
async fn timeline_tile_count_matches_filter() {
    let ds = dataset();
    let (status, body) = get("/api/timeline?frame=care").await;
    assert_eq!(status, StatusCode::OK);
    let v = json(&body);
    let care = ds.tweets().iter().filter(|t| t.has_frame(motiv_core::MoralFrame::Care)).count();
    assert_eq!(v["tile_count"].as_u64().unwrap() as usize, care);
    assert_eq!(v["tweets"].as_object().unwrap().len(), care);
    let (status, body) = get("/api/timeline").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json(&body)["tile_count"].as_u64().unwrap() as usize, ds.tweets().len());

    let (status, _) = get("/api/timeline?frame=kindness").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = get("/api/timeline?color=shoe_size").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn map_is_deterministic_and_matches_shared_payload() {
    let (s1, a) = get("/api/map?frame=fairness&color=mask_usage").await;
    let (s2, b) = get("/api/map?frame=fairness&color=mask_usage").await;
    assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
    assert_eq!(a, b);
    let direct = api::map_payload(
        dataset(),
        Some("fairness"),
        Some("mask_usage"),
        &Default::default(),
        &Default::default(),
    )
    .unwrap();
    assert_eq!(a, direct);
    let v = json(&a);
    assert_eq!(v["glyph_count"].as_u64().unwrap() as usize, v["glyphs"].as_array().unwrap().len());
    assert_eq!(v["glyph_count"].as_u64().unwrap() as usize, dataset().counties().len());
}

#[tokio::test]
async fn gam_linear_reports_pvalues() {
    let spec = r#"{"target":"mask_usage","terms":[{"feature":"leaning","kind":"linear"},{"feature":"median_income","kind":"linear"}]}"#;
    let (status, body) = post("/api/gam", spec).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let v = json(&body);
    assert_eq!(v["p_values"].as_array().unwrap().len(), 2);
    for p in v["p_values"].as_array().unwrap() {
        let p = p["p_value"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
    assert_eq!(v["partial_dependence"][0]["grid"].as_array().unwrap().len(), 50);
    assert_eq!(body, api::gam_payload(dataset(), spec.as_bytes()).unwrap());
}

#[tokio::test]
async fn gam_spline_withholds_pvalues() {
    let spec = r#"{"target":"mask_usage","terms":[{"feature":"median_income","kind":"spline"}]}"#;
    let (status, body) = post("/api/gam", spec).await;
    assert_eq!(status, StatusCode::OK);
    let v = json(&body);
    assert!(v["p_values"].is_null());
    assert!(v["p_value_note"].is_string());
    assert!(v["lambda"].as_f64().is_some());
}

#[tokio::test]
async fn gam_errors_have_codes() {
    let (status, body) = post("/api/gam", r#"{"target":"mask_usage","terms":[{"feature":"shoe_size","kind":"linear"}]}"#).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(String::from_utf8_lossy(&body).contains("shoe_size"));

    let (status, _) = post("/api/gam", "{not json").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    // leaning is exactly dem_votes - rep_votes
    let collinear = r#"{"target":"mask_usage","terms":[
        {"feature":"dem_votes","kind":"linear"},{"feature":"rep_votes","kind":"linear"},{"feature":"leaning","kind":"linear"}]}"#;
    let (status, body) = post("/api/gam", collinear).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{}", String::from_utf8_lossy(&body));
    assert_eq!(json(&body)["code"], "degenerate_model");
}

#[tokio::test]
async fn brush_ids_resolve_to_the_same_county() {
    let ds = dataset();
    let fips = ds.tweets()[0].county_fips.clone().unwrap();
    let (status, body) = get(&format!("/api/brush/county/{fips}")).await;
    assert_eq!(status, StatusCode::OK);
    let v = json(&body);
    let ids = v["tweet_ids"].as_array().unwrap();
    assert_eq!(ids.len(), ds.tweets_in_county(&fips).count());
    for id in ids {
        let (status, body) = get(&format!("/api/tweets/{}", id.as_str().unwrap())).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(json(&body)["fips"].as_str(), Some(fips.as_str()));
    }
    assert!(v["features"]["population"].as_f64().is_some());

    let (status, body) = get("/api/brush/county/99999").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(json(&body)["code"], "not_found");
    let (status, _) = get("/api/tweets/nope").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn unknown_routes_and_methods() {
    let (status, body) = get("/api/nothing").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(json(&body)["code"], "not_found");
    let (status, _, body) = send(app(), Request::delete("/api/frames").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::METHOD_NOT_ALLOWED);
    assert_eq!(json(&body)["code"], "bad_request");
}

#[tokio::test]
async fn cors_preflight_and_origin_restriction() {
    let preflight = || {
        Request::builder()
            .method(Method::OPTIONS)
            .uri("/api/gam")
            .header(header::ORIGIN, "http://localhost:5173")
            .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
            .body(Body::empty())
            .unwrap()
    };
    let (status, headers, _) = send(app(), preflight()).await;
    assert!(status.is_success());
    assert_eq!(headers[header::ACCESS_CONTROL_ALLOW_ORIGIN], "*");

    let state = Arc::new(AppState {
        dataset: dataset().clone(),
        settings: Settings::default(),
    });
    let strict = router(state, cors(Some("http://example.org")).unwrap());
    let (_, headers, _) = send(strict, preflight()).await;
    // an exact policy always names the allowed origin, never the caller's
    assert_eq!(headers[header::ACCESS_CONTROL_ALLOW_ORIGIN], "http://example.org");
    assert!(cors(Some("bad\norigin")).is_err());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests_match_sequential_ones() {
    let uris = ["/api/summary", "/api/timeline?frame=freedom", "/api/map?color=leaning", "/api/frames"];
    let mut expected = Vec::new();
    for u in uris {
        let (status, body) = get(u).await;
        assert_eq!(status, StatusCode::OK, "{u}");
        expected.push(body);
    }
    let app = app();
    let mut handles = Vec::new();
    for i in 0..48 {
        let app = app.clone();
        let uri = uris[i % uris.len()];
        handles.push(tokio::spawn(async move {
            let (_, _, body) = send(app, Request::get(uri).body(Body::empty()).unwrap()).await;
            (i, body)
        }));
    }
    for h in handles {
        let (i, body) = h.await.unwrap();
        assert_eq!(body, expected[i % uris.len()]);
    }
}
