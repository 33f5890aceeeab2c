use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use modelcard_core::notebook::content_hash;
use modelcard_service::{router, ServiceOptions};
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/notebooks").join(name)
}

struct Env {
    dir: tempfile::TempDir,
    app: Router,
}

impl Env {
    fn new(notebooks: &[&str]) -> Env {
        let dir = tempfile::tempdir().unwrap();
        for n in notebooks {
            std::fs::copy(fixture(n), dir.path().join(n)).unwrap();
        }
        let app = router(&ServiceOptions { notebook_root: dir.path().to_owned(), ..Default::default() }).unwrap();
        Env { dir, app }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    async fn call(&self, method: &str, uri: &str, body: Option<&str>, if_match: Option<&str>) -> (StatusCode, Value) {
        let (status, _, v) = send(&self.app, method, uri, body, if_match).await;
        (status, v)
    }
}

async fn send(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<&str>,
    if_match: Option<&str>,
) -> (StatusCode, axum::http::HeaderMap, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(tag) = if_match {
        req = req.header(header::IF_MATCH, format!("\"{tag}\""));
    }
    if body.is_some() {
        req = req.header(header::CONTENT_TYPE, "application/json");
    }
    let req = req.body(Body::from(body.unwrap_or("").to_owned())).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
    (status, headers, v)
}

#[tokio::test]
async fn template_lists_nine_sections() {
    let env = Env::new(&[]);
    let (status, v) = env.call("GET", "/api/template", None, None).await;
    assert_eq!(status, 200);
    let sections = v["sections"].as_array().unwrap();
    assert_eq!(sections.len(), 9);
    assert!(sections.iter().all(|s| !s["description"].as_str().unwrap().is_empty()));
}

#[tokio::test]
async fn card_read_and_edit() {
    let env = Env::new(&["model_card_partial.ipynb"]);
    let (status, headers, v) = send(&env.app, "GET", "/api/card?nb=model_card_partial.ipynb", None, None).await;
    assert_eq!(status, 200);
    let on_disk = content_hash(&std::fs::read(env.path("model_card_partial.ipynb")).unwrap());
    assert_eq!(v["hash"], on_disk);
    assert_eq!(headers[header::ETAG], format!("\"{on_disk}\""));
    assert_eq!(v["missing"].as_array().unwrap().len(), 8);

    let (_, rubric) = env.call("GET", "/api/rubric?nb=model_card_partial.ipynb", None, None).await;
    let q20 = |r: &Value| r["report"]["answers"][19]["value"].clone();
    assert_eq!(q20(&rubric), "no");

    let body = json!({"content": "Outputs may disadvantage customers in rural regions."}).to_string();
    let (status, put) = env
        .call("PUT", "/api/card/sections/ethical-considerations?nb=model_card_partial.ipynb", Some(&body), None)
        .await;
    assert_eq!(status, 200, "{put}");
    assert_eq!(put["cell_id"], "p4");

    let (_, v) = env.call("GET", "/api/card?nb=model_card_partial.ipynb", None, None).await;
    let ethics = v["entries"].as_array().unwrap().iter().find(|e| e["section_id"] == "ethical-considerations").unwrap();
    assert!(ethics["content"].as_str().unwrap().contains("rural regions"));
    assert_eq!(v["missing"].as_array().unwrap().len(), 7);
    let (_, rubric) = env.call("GET", "/api/rubric?nb=model_card_partial.ipynb", None, None).await;
    assert_eq!(q20(&rubric), "yes");
    let doc = rubric["document"].as_str().unwrap();
    for span in rubric["report"]["answers"][19]["evidence"].as_array().unwrap() {
        let (s, e) = (span[0].as_u64().unwrap() as usize, span[1].as_u64().unwrap() as usize);
        assert!(e <= doc.len() && s < e);
    }

    let (_, trace) = env.call("GET", "/api/trace?nb=model_card_partial.ipynb", None, None).await;
    assert_eq!(trace["issues"], json!([]));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_conflicting_puts_yield_one_409() {
    let env = Env::new(&["model_card_partial.ipynb"]);
    let (_, v) = env.call("GET", "/api/card?nb=model_card_partial.ipynb", None, None).await;
    let tag = v["hash"].as_str().unwrap().to_owned();
    let uri = "/api/card/sections/metrics?nb=model_card_partial.ipynb";
    let a = json!({"content": "F1 0.8"}).to_string();
    let b = json!({"content": "F1 0.9"}).to_string();
    let (ra, rb) = tokio::join!(
        send(&env.app, "PUT", uri, Some(&a), Some(&tag)),
        send(&env.app, "PUT", uri, Some(&b), Some(&tag)),
    );
    let mut statuses = [ra.0, rb.0];
    statuses.sort();
    assert_eq!(statuses, [StatusCode::OK, StatusCode::CONFLICT]);

    // Many writers against one version: exactly one wins.
    let (_, v) = env.call("GET", "/api/card?nb=model_card_partial.ipynb", None, None).await;
    let tag = v["hash"].as_str().unwrap().to_owned();
    let mut tasks = tokio::task::JoinSet::new();
    for i in 0..8 {
        let (app, tag) = (env.app.clone(), tag.clone());
        tasks.spawn(async move {
            let body = json!({"content": format!("v{i}")}).to_string();
            send(&app, "PUT", uri, Some(&body), Some(&tag)).await.0
        });
    }
    let results = tasks.join_all().await;
    let ok = results.iter().filter(|s| **s == StatusCode::OK).count();
    let conflicts = results.iter().filter(|s| **s == StatusCode::CONFLICT).count();
    assert_eq!((ok, conflicts), (1, 7));
}

#[tokio::test]
async fn external_edit_is_detected_without_if_match() {
    let env = Env::new(&["model_card_partial.ipynb"]);
    env.call("GET", "/api/card?nb=model_card_partial.ipynb", None, None).await;
    let path = env.path("model_card_partial.ipynb");
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push('\n');
    std::fs::write(&path, text).unwrap();
    let body = json!({"content": "x"}).to_string();
    let (status, v) =
        env.call("PUT", "/api/card/sections/metrics?nb=model_card_partial.ipynb", Some(&body), None).await;
    assert_eq!(status, 409);
    assert_eq!(v["error"], "conflict");
    env.call("GET", "/api/card?nb=model_card_partial.ipynb", None, None).await;
    let (status, _) =
        env.call("PUT", "/api/card/sections/metrics?nb=model_card_partial.ipynb", Some(&body), None).await;
    assert_eq!(status, 200);
}

#[tokio::test]
async fn traversal_is_forbidden() {
    let outer = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("model_card_partial.ipynb"), outer.path().join("secret.ipynb")).unwrap();
    let root = outer.path().join("root");
    std::fs::create_dir(&root).unwrap();
    let app = router(&ServiceOptions { notebook_root: root.clone(), ..Default::default() }).unwrap();
    for uri in [
        "/api/card?nb=../secret.ipynb",
        "/api/card?nb=..%2Fsecret.ipynb",
        "/api/card?nb=%2Fetc%2Fpasswd",
        "/api/stages?nb=sub/../../secret.ipynb",
    ] {
        let (status, _, v) = send(&app, "GET", uri, None, None).await;
        assert_eq!(status, 403, "{uri}: {v}");
    }
    #[cfg(unix)]
    {
        std::os::unix::fs::symlink(outer.path().join("secret.ipynb"), root.join("link.ipynb")).unwrap();
        let (status, _, _) = send(&app, "GET", "/api/card?nb=link.ipynb", None, None).await;
        assert_eq!(status, 403);
    }
    std::fs::copy(fixture("model_card_partial.ipynb"), root.join("nb.ipynb")).unwrap();
    let (status, _, _) =
        send(&app, "POST", "/api/card/export?nb=nb.ipynb", Some(r#"{"path": "../card.md"}"#), None).await;
    assert_eq!(status, 403);
    assert!(!outer.path().join("card.md").exists());
}

#[tokio::test]
async fn request_errors() {
    let env = Env::new(&["stage_tagged.ipynb"]);
    let nb = "stage_tagged.ipynb";
    let cases: Vec<(&str, String, Option<&str>, u16)> = vec![
        ("GET", "/api/card".into(), None, 400),
        ("GET", "/api/card?nb=missing.ipynb".into(), None, 404),
        ("PUT", format!("/api/card/sections/metrics?nb={nb}"), Some("{not json"), 400),
        ("PUT", format!("/api/card/sections/metrics?nb={nb}"), Some(r#"{"text": "x"}"#), 400),
        ("PUT", format!("/api/card/sections/no-such?nb={nb}"), Some(r#"{"content": "x"}"#), 404),
        ("PUT", format!("/api/stages/t1?nb={nb}"), Some(r#"{"stage": "training"}"#), 422),
        ("PUT", format!("/api/stages/t4?nb={nb}"), Some(r#"{"stage": "model_training"}"#), 422),
        ("PUT", format!("/api/stages/nope?nb={nb}"), Some(r#"{"stage": "model_training"}"#), 404),
        ("PUT", format!("/api/stages/t1?nb={nb}"), Some("[]"), 400),
        ("PUT", format!("/api/rubric/answers?nb={nb}"), Some("nope"), 400),
        ("PUT", format!("/api/rubric/answers?nb={nb}"), Some("[1]"), 400),
        ("PUT", format!("/api/rubric/answers?nb={nb}"), Some(r#"{"Q99": "yes"}"#), 422),
        ("POST", format!("/api/card/export?nb={nb}"), Some(r#"{"path": "no/dir/card.md"}"#), 422),
        ("POST", format!("/api/stages/detect?nb={nb}"), Some(r#"{"write": 1}"#), 400),
        ("GET", "/panel/".into(), None, 404),
    ];
    for (method, uri, body, want) in cases {
        let (status, v) = env.call(method, &uri, body, None).await;
        assert_eq!(status.as_u16(), want, "{method} {uri}: {v}");
        if !v.is_null() {
            assert!(v["error"].is_string(), "{method} {uri}: {v}");
        }
    }
}

#[tokio::test]
async fn stages_detect_set_and_navigate() {
    let env = Env::new(&["stage_oracle.ipynb"]);
    let nb = "stage_oracle.ipynb";
    let (status, v) = env.call("POST", &format!("/api/stages/detect?nb={nb}"), None, None).await;
    assert_eq!(status, 200);
    assert_eq!(v["written"], false);
    assert_eq!(v["assignments"].as_array().unwrap().len(), 14);

    let (status, v) = env.call("POST", &format!("/api/stages/detect?nb={nb}"), Some(r#"{"write": true}"#), None).await;
    assert_eq!(status, 200);
    assert_eq!(v["written"], true);
    let (_, stored) = env.call("GET", &format!("/api/stages?nb={nb}"), None, None).await;
    assert_eq!(stored["assignments"].as_array().unwrap().len(), 11);

    let (status, v) =
        env.call("PUT", &format!("/api/stages/c12?nb={nb}"), Some(r#"{"stage": "model_evaluation"}"#), None).await;
    assert_eq!(status, 200, "{v}");
    assert_eq!(v["source"], "manual");
    let (_, nav) = env.call("GET", &format!("/api/navigation?nb={nb}"), None, None).await;
    let eval: Vec<&str> =
        nav["stages"]["model_evaluation"].as_array().unwrap().iter().map(|e| e["cell_id"].as_str().unwrap()).collect();
    assert_eq!(eval, ["c05", "c11", "c12", "c13"]);
    let c12 = &nav["stages"]["model_evaluation"][2];
    assert!((c12["position"].as_f64().unwrap() - 12.0 / 14.0).abs() < 1e-12);

    let (status, _) = env.call("PUT", &format!("/api/stages/c12?nb={nb}"), Some(r#"{"stage": null}"#), None).await;
    assert_eq!(status, 200);
    let (_, trace) = env.call("GET", &format!("/api/trace?nb={nb}"), None, None).await;
    assert_eq!(trace["issues"], json!([]));
    let (_, outline) = env.call("GET", &format!("/api/outline?nb={nb}"), None, None).await;
    assert_eq!(outline["cells"].as_array().unwrap().len(), 15);
}

#[tokio::test]
async fn export_and_answers() {
    let env = Env::new(&["model_card_partial.ipynb"]);
    let nb = "model_card_partial.ipynb";
    let (status, v) =
        env.call("POST", &format!("/api/card/export?nb={nb}"), Some(r#"{"path": "card.md"}"#), None).await;
    assert_eq!(status, 200, "{v}");
    assert_eq!(v["written"], "card.md");
    assert_eq!(v["empty_sections"].as_array().unwrap().len(), 8);
    let text = std::fs::read_to_string(env.path("card.md")).unwrap();
    assert!(text.starts_with("## Model Details\n\nGradient boosting classifier.\n"));

    let (status, v) =
        env.call("PUT", &format!("/api/rubric/answers?nb={nb}"), Some(r#"{"Q21": "yes", "Q4": "no"}"#), None).await;
    assert_eq!(status, 200, "{v}");
    assert_eq!(v["report"]["answers"][20]["value"], "yes");
    assert_eq!(v["report"]["answers"][20]["source"], "manual");
    let stored: Value = serde_json::from_slice(&std::fs::read(env.path(nb)).unwrap()).unwrap();
    assert_eq!(stored["metadata"]["model_card"]["rubric_answers"], json!({"Q21": "yes", "Q4": "no"}));
}

#[tokio::test]
async fn bad_config_is_a_server_error() {
    let env = Env::new(&["model_card_partial.ipynb"]);
    std::fs::write(env.path("modelcard.config.json"), r#"[{"description": "no title"}]"#).unwrap();
    let (status, v) = env.call("GET", "/api/template", None, None).await;
    assert_eq!(status, 500);
    assert_eq!(v["error"], "config_schema");
    std::fs::write(env.path("modelcard.config.json"), r#"[{"title": "Only One", "description": "d"}]"#).unwrap();
    let (_, v) = env.call("GET", "/api/card?nb=model_card_partial.ipynb", None, None).await;
    assert_eq!(v["missing"], json!(["only-one"]));
}

#[tokio::test]
async fn panel_assets_and_cors() {
    let dir = tempfile::tempdir().unwrap();
    let panel = tempfile::tempdir().unwrap();
    std::fs::write(panel.path().join("index.html"), "<html>panel</html>").unwrap();
    let app = router(&ServiceOptions {
        notebook_root: dir.path().to_owned(),
        panel_dir: Some(panel.path().to_owned()),
        config_path: None,
    })
    .unwrap();
    let resp = app.clone().oneshot(Request::get("/panel/index.html").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), 200);
    let body = resp.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(&body[..], b"<html>panel</html>");

    let preflight = |origin: &'static str| {
        Request::builder()
            .method("OPTIONS")
            .uri("/api/template")
            .header(header::ORIGIN, origin)
            .header(header::ACCESS_CONTROL_REQUEST_METHOD, "PUT")
            .body(Body::empty())
            .unwrap()
    };
    let ok = app.clone().oneshot(preflight("http://localhost:5173")).await.unwrap();
    assert_eq!(ok.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], "http://localhost:5173");
    let evil = app.clone().oneshot(preflight("https://evil.example")).await.unwrap();
    assert!(evil.headers().get(header::ACCESS_CONTROL_ALLOW_ORIGIN).is_none());
}
