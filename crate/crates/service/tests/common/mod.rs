#![allow(dead_code)]

use std::path::{Path, PathBuf};

use cablebot_core::winchsim::ClockMode;
use cablebot_service::{cli, router, AppState};
use reqwest::{Method, StatusCode};
use serde_json::{json, Value};
use tempfile::TempDir;

pub struct Server {
    pub base: String,
    pub state: AppState,
    pub client: reqwest::Client,
    task: tokio::task::JoinHandle<()>,
}

impl Drop for Server {
    fn drop(&mut self) {
        self.task.abort();
    }
}

impl Server {
    pub async fn start(config: &Path, clock: ClockMode, rate: Option<f64>) -> Server {
        Server::start_with_static(config, clock, rate, None).await
    }

    pub async fn start_with_static(
        config: &Path,
        clock: ClockMode,
        rate: Option<f64>,
        static_dir: Option<&Path>,
    ) -> Server {
        let state = cli::open(config.to_path_buf(), clock, rate).expect("service opens");
        let app = router(state.clone(), static_dir);
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let task = tokio::spawn(async move {
            axum::serve(listener, app).await.unwrap();
        });
        Server {
            base: format!("http://{addr}"),
            state,
            client: reqwest::Client::new(),
            task,
        }
    }

    pub async fn request(
        &self,
        method: Method,
        path: &str,
        body: Option<Value>,
    ) -> (StatusCode, Value) {
        let mut req = self
            .client
            .request(method, format!("{}{}", self.base, path));
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().await.expect("request sent");
        let status = resp.status();
        let text = resp.text().await.unwrap();
        let value = if text.is_empty() {
            Value::Null
        } else {
            serde_json::from_str(&text).unwrap_or(Value::String(text))
        };
        (status, value)
    }

    pub async fn get(&self, path: &str) -> (StatusCode, Value) {
        self.request(Method::GET, path, None).await
    }

    pub async fn post(&self, path: &str, body: Value) -> (StatusCode, Value) {
        self.request(Method::POST, path, Some(body)).await
    }

    pub async fn delete(&self, path: &str) -> (StatusCode, Value) {
        self.request(Method::DELETE, path, None).await
    }

    pub async fn zero_all(&self) {
        for coil in ["A", "B", "C", "D"] {
            let (s, body) = self
                .post(&format!("/api/coil/{coil}/zero"), json!({}))
                .await;
            assert_eq!(s, StatusCode::OK, "{body}");
        }
    }

    pub async fn goto(&self, x: f64, y: f64, z: f64) -> (StatusCode, Value) {
        self.post(
            "/api/move/goto",
            json!({"x": x, "y": y, "z": z, "relative": false}),
        )
        .await
    }
}

pub fn config_in(dir: &TempDir) -> PathBuf {
    dir.path().join("cablebot.json")
}

pub fn position_of(status: &Value) -> [f64; 3] {
    let p = &status["position"]["position"];
    [
        p["x"].as_f64().unwrap(),
        p["y"].as_f64().unwrap(),
        p["z"].as_f64().unwrap(),
    ]
}
