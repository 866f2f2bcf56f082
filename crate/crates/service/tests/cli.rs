use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use cablebot_service::PersistedConfig;

const BIN: &str = env!("CARGO_BIN_EXE_cablebotd");

struct Daemon {
    child: Child,
    addr: String,
}

impl Drop for Daemon {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn spawn(args: &[&str]) -> Daemon {
    let mut child = Command::new(BIN)
        .args(args)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("cablebotd listening on http://")
        .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
        .to_string();
    Daemon { child, addr }
}

/// Runs to completion, failing the test if it is still alive after 10 s.
fn run_to_exit(args: &[&str]) -> (i32, String) {
    let mut child = Command::new(BIN)
        .args(args)
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(10);
    loop {
        if let Some(status) = child.try_wait().unwrap() {
            let mut err = String::new();
            std::io::Read::read_to_string(&mut child.stderr.take().unwrap(), &mut err).unwrap();
            return (status.code().unwrap_or(-1), err);
        }
        if Instant::now() > deadline {
            let _ = child.kill();
            panic!("cablebotd {args:?} did not exit");
        }
        std::thread::sleep(Duration::from_millis(20));
    }
}

fn get_status(addr: &str) -> reqwest::StatusCode {
    let rt = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .unwrap();
    rt.block_on(async {
        reqwest::get(format!("http://{addr}/api/status"))
            .await
            .unwrap()
            .status()
    })
}

fn dir_listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn missing_config_is_created_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cablebot.json");
    let d = spawn(&[
        "--port",
        "0",
        "--config",
        path.to_str().unwrap(),
        "--clock",
        "manual",
    ]);
    assert_eq!(get_status(&d.addr), reqwest::StatusCode::OK);
    assert_eq!(
        std::fs::read(&path).unwrap(),
        PersistedConfig::default().to_bytes()
    );
}

#[test]
fn port_flag_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let port = {
        let l = std::net::TcpListener::bind("0.0.0.0:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let path = dir.path().join("c.json");
    let d = spawn(&[
        "--port",
        &port.to_string(),
        "--config",
        path.to_str().unwrap(),
    ]);
    assert!(d.addr.ends_with(&format!(":{port}")), "{}", d.addr);
    assert_eq!(
        get_status(&format!("127.0.0.1:{port}")),
        reqwest::StatusCode::OK
    );
}

#[test]
fn default_port_is_8080() {
    use clap::Parser;
    let args = cablebot_service::cli::Args::parse_from(["cablebotd"]);
    assert_eq!(args.port, 8080);
    assert_eq!(args.config, Path::new("./cablebot.json"));
    assert_eq!(args.rate.0, None);
    let args = cablebot_service::cli::Args::parse_from(["cablebotd", "--rate", "50"]);
    assert_eq!(args.rate.0, Some(50.0));
}

#[test]
fn corrupt_config_exits_nonzero_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cablebot.json");
    std::fs::write(&path, b"{\"schema_version\": 1, \"anchors\": [").unwrap();
    let (code, err) = run_to_exit(&["--port", "0", "--config", path.to_str().unwrap()]);
    assert_ne!(code, 0);
    assert!(err.contains("malformed"), "{err}");
    assert_eq!(
        std::fs::read(&path).unwrap(),
        b"{\"schema_version\": 1, \"anchors\": ["
    );
    assert_eq!(dir_listing(dir.path()), vec!["cablebot.json"]);
}

#[test]
fn future_schema_version_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cablebot.json");
    let mut v: serde_json::Value =
        serde_json::from_slice(&PersistedConfig::default().to_bytes()).unwrap();
    v["schema_version"] = 7.into();
    let bytes = serde_json::to_vec(&v).unwrap();
    std::fs::write(&path, &bytes).unwrap();
    let (code, err) = run_to_exit(&["--port", "0", "--config", path.to_str().unwrap()]);
    assert_ne!(code, 0);
    assert!(err.contains("schema_version 7"), "{err}");
    assert_eq!(std::fs::read(&path).unwrap(), bytes);
}

#[test]
fn busy_port_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let taken = std::net::TcpListener::bind("0.0.0.0:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let path = dir.path().join("c.json");
    let (code, err) = run_to_exit(&["--port", &port, "--config", path.to_str().unwrap()]);
    assert_ne!(code, 0);
    assert!(err.contains("cannot listen"), "{err}");
}

#[test]
fn bad_rate_is_rejected() {
    let (code, err) = run_to_exit(&["--rate", "fast"]);
    assert_ne!(code, 0);
    assert!(err.contains("instant"), "{err}");
}
