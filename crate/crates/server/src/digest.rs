//! HTTP Digest access authentication (RFC 2617, MD5, `qop=auth`).
//!
//! MD5 is what the scheme mandates. It authenticates users against an
//! htdigest file; it does not protect the traffic itself, so deployments
//! that need confidentiality belong behind a TLS proxy.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use md5::{Digest, Md5};
use rand::RngCore;
use thiserror::Error;

pub fn md5_hex(input: &str) -> String {
    let digest = Md5::digest(input.as_bytes());
    let mut out = String::with_capacity(32);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// `MD5(username ":" realm ":" password)`.
pub fn ha1(username: &str, realm: &str, password: &str) -> String {
    md5_hex(&format!("{username}:{realm}:{password}"))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unsupported qop {0:?}; only \"auth\" is accepted")]
pub struct UnsupportedQop(pub String);

/// The `response` value a client must send.
///
/// With `qop = Some("auth")`:
/// `MD5(ha1:nonce:nc:cnonce:auth:MD5(method:uri))`; without qop:
/// `MD5(ha1:nonce:MD5(method:uri))`.
pub fn compute_digest_response(
    ha1: &str,
    method: &str,
    uri: &str,
    nonce: &str,
    nc: &str,
    cnonce: &str,
    qop: Option<&str>,
) -> Result<String, UnsupportedQop> {
    let ha2 = md5_hex(&format!("{method}:{uri}"));
    match qop {
        Some("auth") => Ok(md5_hex(&format!("{ha1}:{nonce}:{nc}:{cnonce}:auth:{ha2}"))),
        None => Ok(md5_hex(&format!("{ha1}:{nonce}:{ha2}"))),
        Some(other) => Err(UnsupportedQop(other.to_owned())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CredentialError {
    #[error("{0:?} must not contain ':' or be empty")]
    BadName(String),
    #[error("ha1 must be 32 lowercase hex characters")]
    BadHa1,
    #[error("line {line}: expected username:realm:ha1")]
    BadLine { line: usize },
}

/// One htdigest entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DigestCredential {
    pub username: String,
    pub realm: String,
    pub ha1: String,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && !s.contains([':', '\n', '\r'])
}

impl DigestCredential {
    pub fn new(username: &str, realm: &str, ha1: &str) -> Result<Self, CredentialError> {
        for name in [username, realm] {
            if !valid_name(name) {
                return Err(CredentialError::BadName(name.to_owned()));
            }
        }
        if ha1.len() != 32 || !ha1.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            return Err(CredentialError::BadHa1);
        }
        Ok(DigestCredential { username: username.into(), realm: realm.into(), ha1: ha1.into() })
    }

    pub fn from_password(username: &str, realm: &str, password: &str) -> Result<Self, CredentialError> {
        DigestCredential::new(username, realm, &ha1(username, realm, password))
    }

    pub fn to_line(&self) -> String {
        format!("{}:{}:{}", self.username, self.realm, self.ha1)
    }
}

/// Credentials keyed by (username, realm).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Credentials(HashMap<(String, String), String>);

impl Credentials {
    /// Parses htdigest text. Blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, CredentialError> {
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cred = parse_line(line).ok_or(CredentialError::BadLine { line: i + 1 })?;
            map.insert((cred.username, cred.realm), cred.ha1);
        }
        Ok(Credentials(map))
    }

    pub fn insert(&mut self, cred: DigestCredential) {
        self.0.insert((cred.username, cred.realm), cred.ha1);
    }

    pub fn ha1(&self, username: &str, realm: &str) -> Option<&str> {
        self.0.get(&(username.to_owned(), realm.to_owned())).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn parse_line(line: &str) -> Option<DigestCredential> {
    let mut parts = line.splitn(3, ':');
    let (u, r, h) = (parts.next()?, parts.next()?, parts.next()?);
    DigestCredential::new(u, r, h.trim_end()).ok()
}

#[derive(Debug, Error)]
pub enum CredentialFileError {
    #[error(transparent)]
    Format(#[from] CredentialError),
    #[error("credentials file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub fn load_credentials(path: &Path) -> Result<Credentials, CredentialFileError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CredentialFileError::Io { path: path.display().to_string(), source })?;
    Ok(Credentials::parse(&text)?)
}

/// Adds `cred` to the htdigest file at `path`, replacing any line for the
/// same user and realm. The file is created if absent and rewritten
/// atomically.
pub fn upsert_credential(path: &Path, cred: &DigestCredential) -> Result<(), CredentialFileError> {
    let io = |source| CredentialFileError::Io { path: path.display().to_string(), source };
    let existing = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(io(e)),
    };
    let mut out = String::new();
    let mut replaced = false;
    for line in existing.lines() {
        let same = parse_line(line).is_some_and(|c| c.username == cred.username && c.realm == cred.realm);
        if same {
            if !replaced {
                out.push_str(&cred.to_line());
                out.push('\n');
                replaced = true;
            }
        } else {
            out.push_str(line);
            out.push('\n');
        }
    }
    if !replaced {
        out.push_str(&cred.to_line());
        out.push('\n');
    }
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new().prefix(".htdigest-").tempfile_in(dir).map_err(io)?;
    tmp.write_all(out.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct NonceRecord {
    issued_at: Instant,
    highest_nc: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonceCheck {
    Fresh,
    Stale,
}

/// Server nonces with their issue time and the highest nonce count seen.
#[derive(Debug)]
pub struct NonceTable {
    ttl: Duration,
    inner: Mutex<NonceState>,
}

#[derive(Debug, Default)]
struct NonceState {
    records: HashMap<String, NonceRecord>,
    issued: u64,
}

impl NonceTable {
    pub fn new(ttl: Duration) -> Self {
        NonceTable { ttl, inner: Mutex::default() }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    /// Registers and returns a fresh nonce, dropping expired ones.
    pub fn issue(&self, now: Instant) -> String {
        let mut random = [0u8; 16];
        rand::rng().fill_bytes(&mut random);
        let mut state = self.inner.lock().expect("nonce table poisoned");
        let ttl = self.ttl;
        state.records.retain(|_, r| now.saturating_duration_since(r.issued_at) <= ttl);
        state.issued += 1;
        // The counter prefix keeps nonces unique even if random bytes repeat.
        let mut nonce = format!("{:016x}", state.issued);
        for b in random {
            let _ = write!(nonce, "{b:02x}");
        }
        state.records.insert(nonce.clone(), NonceRecord { issued_at: now, highest_nc: 0 });
        nonce
    }

    /// Accepts `nc` for `nonce` only if the nonce is live and `nc` exceeds
    /// every count already accepted for it; records `nc` on success.
    pub fn check(&self, nonce: &str, nc: u32, now: Instant) -> NonceCheck {
        let mut state = self.inner.lock().expect("nonce table poisoned");
        let Some(record) = state.records.get_mut(nonce) else {
            return NonceCheck::Stale;
        };
        if now.saturating_duration_since(record.issued_at) > self.ttl {
            state.records.remove(nonce);
            return NonceCheck::Stale;
        }
        if nc <= record.highest_nc {
            return NonceCheck::Stale;
        }
        record.highest_nc = nc;
        NonceCheck::Fresh
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("nonce table poisoned").records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed Authorization header: {0}")]
pub struct MalformedHeader(pub String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuthResult {
    Ok(String),
    /// Correct credentials over an expired or unknown nonce, or a reused
    /// nonce count. The client should retry with a fresh nonce.
    Stale,
    Rejected(String),
}

/// Splits the parameters of a `Digest` credentials header.
/// Returns `None` when the scheme is not Digest.
pub fn parse_authorization(header: &str) -> Result<Option<HashMap<String, String>>, MalformedHeader> {
    let header = header.trim();
    let (scheme, rest) = header.split_once(char::is_whitespace).unwrap_or((header, ""));
    if !scheme.eq_ignore_ascii_case("digest") {
        return Ok(None);
    }
    let bad = |why: &str| MalformedHeader(why.to_owned());
    let mut params = HashMap::new();
    let mut chars = rest.trim_start().chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace() || *c == ',') {
            chars.next();
        }
        if chars.peek().is_none() {
            break;
        }
        let mut key = String::new();
        while let Some(&c) = chars.peek() {
            if c == '=' || c.is_whitespace() {
                break;
            }
            key.push(c);
            chars.next();
        }
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        if chars.next() != Some('=') || key.is_empty() {
            return Err(bad("expected key=value"));
        }
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        let mut value = String::new();
        if chars.peek() == Some(&'"') {
            chars.next();
            loop {
                match chars.next() {
                    None => return Err(bad("unterminated quoted string")),
                    Some('"') => break,
                    Some('\\') => value.push(chars.next().ok_or_else(|| bad("dangling escape"))?),
                    Some(c) => value.push(c),
                }
            }
        } else {
            while let Some(&c) = chars.peek() {
                if c == ',' || c.is_whitespace() {
                    break;
                }
                value.push(c);
                chars.next();
            }
        }
        if params.insert(key.to_ascii_lowercase(), value).is_some() {
            return Err(bad("repeated parameter"));
        }
    }
    Ok(Some(params))
}

fn constant_time_eq(a: &str, b: &str) -> bool {
    a.len() == b.len() && a.bytes().zip(b.bytes()).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

fn random_hex(bytes: usize) -> String {
    let mut buf = vec![0u8; bytes];
    rand::rng().fill_bytes(&mut buf);
    buf.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Per-server Digest state: realm, credentials, nonce table and the opaque
/// value fixed for the lifetime of the process.
#[derive(Debug)]
pub struct Authenticator {
    realm: String,
    opaque: String,
    credentials: Credentials,
    nonces: NonceTable,
}

impl Authenticator {
    pub fn new(realm: impl Into<String>, credentials: Credentials, nonce_ttl: Duration) -> Self {
        Authenticator {
            realm: realm.into(),
            opaque: random_hex(16),
            credentials,
            nonces: NonceTable::new(nonce_ttl),
        }
    }

    pub fn realm(&self) -> &str {
        &self.realm
    }

    pub fn opaque(&self) -> &str {
        &self.opaque
    }

    pub fn nonces(&self) -> &NonceTable {
        &self.nonces
    }

    /// A `WWW-Authenticate` value carrying a freshly registered nonce.
    pub fn issue_challenge(&self, stale: bool, now: Instant) -> String {
        let nonce = self.nonces.issue(now);
        let mut value = format!(
            "Digest realm=\"{}\", qop=\"auth\", nonce=\"{nonce}\", opaque=\"{}\"",
            self.realm, self.opaque
        );
        if stale {
            value.push_str(", stale=true");
        }
        value
    }

    /// Checks an `Authorization` header for a request with the given method
    /// and request target (path and query, as sent).
    pub fn verify_request(
        &self,
        header: &str,
        method: &str,
        request_uri: &str,
        now: Instant,
    ) -> Result<AuthResult, MalformedHeader> {
        let Some(params) = parse_authorization(header)? else {
            return Ok(AuthResult::Rejected("authorization scheme is not Digest".into()));
        };
        let field = |name: &str| {
            params
                .get(name)
                .map(String::as_str)
                .ok_or_else(|| MalformedHeader(format!("missing {name}")))
        };
        let username = field("username")?;
        let realm = field("realm")?;
        let nonce = field("nonce")?;
        let uri = field("uri")?;
        let response = field("response")?;
        let reject = |why: &str| Ok(AuthResult::Rejected(why.to_owned()));

        let qop = params.get("qop").map(String::as_str);
        if qop != Some("auth") {
            return reject("qop=auth is required");
        }
        let nc_text = field("nc")?;
        let cnonce = field("cnonce")?;
        if nc_text.len() != 8 {
            return Err(MalformedHeader("nc must be 8 hex digits".into()));
        }
        let nc = u32::from_str_radix(nc_text, 16).map_err(|_| MalformedHeader("nc must be 8 hex digits".into()))?;
        if params.get("algorithm").is_some_and(|a| !a.eq_ignore_ascii_case("MD5")) {
            return reject("unsupported algorithm");
        }
        if params.get("opaque").is_some_and(|o| *o != self.opaque) {
            return reject("opaque mismatch");
        }
        if realm != self.realm {
            return reject("realm mismatch");
        }
        let Some(ha1) = self.credentials.ha1(username, realm) else {
            return reject("unknown user");
        };
        if uri != request_uri {
            return reject("uri does not match the request target");
        }
        let expected = compute_digest_response(ha1, method, uri, nonce, nc_text, cnonce, qop)
            .expect("qop checked above");
        if !constant_time_eq(&expected, &response.to_ascii_lowercase()) {
            return reject("response mismatch");
        }
        Ok(match self.nonces.check(nonce, nc, now) {
            NonceCheck::Fresh => AuthResult::Ok(username.to_owned()),
            NonceCheck::Stale => AuthResult::Stale,
        })
    }
}
