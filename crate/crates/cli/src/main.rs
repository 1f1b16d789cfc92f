//! `sctbrowse`: ingest terminology releases, serve them over HTTP, manage
//! Digest users, emit diagrams and generate synthetic releases.
//!
//! Exit codes: 0 success, 1 data error, 2 usage error, 3 I/O or environment.

use std::io::{BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use sctbrowse_core::{
    load_index, neighborhood, neighborhood_diagram, render_external, save_index, validate_bundle, ConceptId,
    ImageFormat, IngestError, ReleaseBundle,
};
use sctbrowse_server::{upsert_credential, ApiConfig, DigestCredential, Server, DEFAULT_NONCE_TTL_SECONDS};

#[derive(Debug, Parser)]
#[command(name = "sctbrowse", version, about = "Terminology browser server and tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a release, then write a binary index.
    Ingest {
        #[arg(long)]
        concepts: PathBuf,
        #[arg(long)]
        descriptions: PathBuf,
        #[arg(long)]
        relationships: PathBuf,
        /// Concept id of the is-a relationship type.
        #[arg(long)]
        isa: ConceptId,
        #[arg(long)]
        out: PathBuf,
        /// Reject identifiers whose Verhoeff check digit is wrong.
        #[arg(long)]
        check_digits: bool,
    },
    /// Serve the HTTP API over an index until interrupted.
    Serve {
        #[arg(long)]
        index: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
        port: u16,
        #[arg(long)]
        realm: String,
        #[arg(long)]
        credentials: PathBuf,
        /// Graphviz-compatible executable used for diagram.svg.
        #[arg(long)]
        renderer: Option<PathBuf>,
        #[arg(long)]
        include_inactive: bool,
    },
    /// Add or replace a user in an htdigest credentials file. The password is
    /// read from the terminal, or from the first line of stdin when piped.
    UserAdd {
        #[arg(long)]
        credentials: PathBuf,
        #[arg(long)]
        user: String,
        #[arg(long)]
        realm: String,
    },
    /// Write the neighborhood diagram of one concept.
    Diagram {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        id: ConceptId,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Dot)]
        format: Format,
        #[arg(long, required_if_eq("format", "svg"))]
        renderer: Option<PathBuf>,
    },
    /// Generate a seeded synthetic release.
    Synth {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        concepts: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Dot,
    Svg,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn data(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: error.into() }
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

fn io(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 3, error: error.into() }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let outcome = match cli.command {
        Command::Ingest { concepts, descriptions, relationships, isa, out, check_digits } => {
            ingest(&concepts, &descriptions, &relationships, isa, &out, check_digits)
        }
        Command::Serve { index, port, realm, credentials, renderer, include_inactive } => serve(ApiConfig {
            port,
            realm,
            index_path: index,
            credentials_path: credentials,
            nonce_ttl_seconds: DEFAULT_NONCE_TTL_SECONDS,
            include_inactive,
            renderer_path: renderer,
        }),
        Command::UserAdd { credentials, user, realm } => user_add(&credentials, &user, &realm),
        Command::Diagram { index, id, out, format, renderer } => diagram(&index, id, &out, format, renderer.as_deref()),
        Command::Synth { concepts, seed, out_dir } => synth(concepts as usize, seed, &out_dir),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn ingest(
    concepts: &Path,
    descriptions: &Path,
    relationships: &Path,
    isa: ConceptId,
    out: &Path,
    check_digits: bool,
) -> Outcome {
    let bundle = match ReleaseBundle::read(concepts, descriptions, relationships) {
        Ok(b) => b,
        Err(e @ IngestError::Io { .. }) => return Err(io(e)),
        Err(e @ IngestError::BadHeader(_)) => return Err(data(e)),
    };
    let fatal = validate_bundle(&bundle, check_digits);
    let mut stderr = std::io::stderr().lock();
    for issue in bundle.issues.iter().chain(&fatal) {
        let _ = writeln!(stderr, "{issue}");
    }
    drop(stderr);
    println!(
        "{} concepts, {} descriptions, {} relationships, {} issues",
        bundle.concepts.len(),
        bundle.descriptions.len(),
        bundle.relationships.len(),
        bundle.issues.len() + fatal.len()
    );
    if !fatal.is_empty() {
        return Err(data(anyhow!("{} fatal issues; no index written", fatal.len())));
    }
    let store = bundle.build_store(isa).map_err(data)?;
    save_index(&store, out).map_err(io)?;
    Ok(())
}

fn serve(config: ApiConfig) -> Outcome {
    config.validate().map_err(usage)?;
    let runtime = tokio::runtime::Runtime::new().map_err(io)?;
    runtime.block_on(async {
        let server = Server::bind(&config).await.map_err(io)?;
        let addr = server.local_addr().map_err(io)?;
        println!("listening on {addr}");
        let _ = std::io::stdout().flush();
        tracing::info!(%addr, realm = %config.realm, "serving");
        server.run(shutdown_signal()).await.map_err(io)
    })
}

async fn shutdown_signal() {
    let interrupt = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = interrupt => {}
        _ = terminate => {}
    }
    tracing::info!("shutting down");
}

fn read_password() -> anyhow::Result<String> {
    if std::io::stdin().is_terminal() {
        let first = rpassword::prompt_password("Password: ")?;
        let second = rpassword::prompt_password("Confirm password: ")?;
        if first != second {
            return Err(anyhow!("passwords do not match"));
        }
        Ok(first)
    } else {
        let mut line = String::new();
        std::io::stdin().lock().read_line(&mut line)?;
        Ok(line.trim_end_matches(['\n', '\r']).to_owned())
    }
}

fn user_add(credentials: &Path, user: &str, realm: &str) -> Outcome {
    // Validate names before prompting.
    DigestCredential::new(user, realm, &"0".repeat(32)).map_err(usage)?;
    let password = read_password().map_err(io)?;
    if password.is_empty() {
        return Err(usage(anyhow!("password must not be empty")));
    }
    let cred = DigestCredential::from_password(user, realm, &password).map_err(usage)?;
    upsert_credential(credentials, &cred).map_err(io)?;
    println!("stored {user} in realm {realm}");
    Ok(())
}

fn diagram(index: &Path, id: ConceptId, out: &Path, format: Format, renderer: Option<&Path>) -> Outcome {
    let store = load_index(index).map_err(io)?;
    let n = neighborhood(&store, id, false).map_err(data)?;
    let dot = neighborhood_diagram(&n);
    let bytes = match (format, renderer) {
        (Format::Dot, _) => dot.into_string().into_bytes(),
        (Format::Svg, Some(r)) => render_external(&dot, ImageFormat::Svg, r).map_err(io)?,
        (Format::Svg, None) => return Err(usage(anyhow!("--format svg requires --renderer"))),
    };
    std::fs::write(out, bytes).with_context(|| format!("writing {}", out.display())).map_err(io)?;
    Ok(())
}

fn synth(concepts: usize, seed: u64, out_dir: &Path) -> Outcome {
    let release = sctbrowse_core::synth::generate(concepts, seed).ok_or_else(|| usage(anyhow!("--concepts must be at least 1")))?;
    let bundle = &release.bundle;
    std::fs::create_dir_all(out_dir)
        .and_then(|()| bundle.write_dir(out_dir))
        .with_context(|| format!("writing {}", out_dir.display())).map_err(io)?;
    println!(
        "{} concepts, {} descriptions, {} relationships; is-a type {}",
        bundle.concepts.len(),
        bundle.descriptions.len(),
        bundle.relationships.len(),
        release.isa_type_id
    );
    Ok(())
}
