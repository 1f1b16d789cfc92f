//! Drives the `sctbrowse` binary and talks Digest to a running server.
#![allow(dead_code)]

use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use sctbrowse_server::digest::parse_authorization;
use sctbrowse_server::{compute_digest_response, ha1};

pub const REALM: &str = "sctbrowse@test";
pub const USER: &str = "reader";
pub const PASSWORD: &str = "correct horse";

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sctbrowse"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).stdin(Stdio::null()).output().expect("binary runs")
}

pub fn run_with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/tiny-ct")
}

pub fn ingest_args<'a>(dir: &'a Path, isa: &'a str, out: &'a Path) -> Vec<String> {
    vec![
        "ingest".into(),
        "--concepts".into(),
        dir.join("concepts.tsv").display().to_string(),
        "--descriptions".into(),
        dir.join("descriptions.tsv").display().to_string(),
        "--relationships".into(),
        dir.join("relationships.tsv").display().to_string(),
        "--isa".into(),
        isa.into(),
        "--out".into(),
        out.display().to_string(),
    ]
}

pub fn run_owned(args: &[String]) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    run(&refs)
}

/// Ingests `dir` into `out`, panicking on failure.
pub fn ingest(dir: &Path, isa: &str, out: &Path) -> Output {
    let o = run_owned(&ingest_args(dir, isa, out));
    assert_eq!(o.status.code(), Some(0), "ingest failed: {}", stderr(&o));
    o
}

pub fn add_user(credentials: &Path, user: &str, realm: &str, password: &str) -> Output {
    let c = credentials.display().to_string();
    run_with_stdin(&["user-add", "--credentials", &c, "--user", user, "--realm", realm], &format!("{password}\n"))
}

pub fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

pub struct ServerProcess {
    pub child: Child,
    pub base: String,
}

impl ServerProcess {
    /// Starts `serve` and waits until /api/health answers.
    pub fn start(index: &Path, credentials: &Path, extra: &[&str]) -> ServerProcess {
        let port = free_port();
        let child = bin()
            .args(["serve", "--index"])
            .arg(index)
            .args(["--port", &port.to_string(), "--realm", REALM, "--credentials"])
            .arg(credentials)
            .args(extra)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .expect("server spawns");
        let server = ServerProcess { child, base: format!("http://127.0.0.1:{port}") };
        let deadline = Instant::now() + Duration::from_secs(10);
        let agent = agent();
        loop {
            if let Ok(r) = agent.get(&format!("{}/api/health", server.base)).call() {
                if r.status() == 200 {
                    return server;
                }
            }
            assert!(Instant::now() < deadline, "server did not come up");
            std::thread::sleep(Duration::from_millis(20));
        }
    }

    pub fn client(&self) -> DigestClient {
        DigestClient::new(&self.base, USER, PASSWORD)
    }
}

impl Drop for ServerProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub fn agent() -> ureq::Agent {
    ureq::Agent::new_with_config(ureq::config::Config::builder().http_status_as_error(false).build())
}

pub struct Reply {
    pub status: u16,
    pub www_authenticate: Option<String>,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).expect("JSON body")
    }
}

pub struct DigestClient {
    agent: ureq::Agent,
    base: String,
    user: String,
    password: String,
    nonce: Option<(String, String)>,
    nc: u32,
}

impl DigestClient {
    pub fn new(base: &str, user: &str, password: &str) -> Self {
        DigestClient {
            agent: agent(),
            base: base.to_owned(),
            user: user.into(),
            password: password.into(),
            nonce: None,
            nc: 0,
        }
    }

    pub fn raw(&self, path: &str, authorization: Option<&str>) -> Reply {
        let mut req = self.agent.get(&format!("{}{path}", self.base));
        if let Some(a) = authorization {
            req = req.header("Authorization", a);
        }
        let mut resp = req.call().expect("request completes");
        let header = |name: &str| resp.headers().get(name).map(|v| v.to_str().unwrap().to_owned());
        let www_authenticate = header("www-authenticate");
        let content_type = header("content-type");
        Reply {
            status: resp.status().as_u16(),
            www_authenticate,
            content_type,
            body: resp.body_mut().read_to_vec().unwrap(),
        }
    }

    /// The Authorization value for the next request to `path`.
    pub fn authorization(&mut self, path: &str) -> Option<String> {
        let (nonce, opaque) = self.nonce.clone()?;
        self.nc += 1;
        let nc = format!("{:08x}", self.nc);
        let cnonce = format!("{:x}", self.nc * 7919);
        let h = ha1(&self.user, REALM, &self.password);
        let response = compute_digest_response(&h, "GET", path, &nonce, &nc, &cnonce, Some("auth")).unwrap();
        Some(format!(
            "Digest username=\"{}\", realm=\"{REALM}\", nonce=\"{nonce}\", uri=\"{path}\", qop=auth, nc={nc}, \
             cnonce=\"{cnonce}\", response=\"{response}\", opaque=\"{opaque}\"",
            self.user
        ))
    }

    fn adopt(&mut self, challenge: &str) {
        let p = parse_authorization(challenge).unwrap().expect("Digest challenge");
        self.nonce = Some((p["nonce"].clone(), p["opaque"].clone()));
        self.nc = 0;
    }

    /// GET with Digest, answering at most one challenge.
    pub fn get(&mut self, path: &str) -> Reply {
        let auth = self.authorization(path);
        let reply = self.raw(path, auth.as_deref());
        if reply.status != 401 {
            return reply;
        }
        self.adopt(reply.www_authenticate.as_deref().expect("401 carries a challenge"));
        let auth = self.authorization(path);
        self.raw(path, auth.as_deref())
    }
}
