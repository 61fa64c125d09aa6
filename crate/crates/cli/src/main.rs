//! `secss-gate`: run the gateway, check rule documents, make dev keys, sign and submit requests.

mod report;

use std::io::{IsTerminal, Read};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use chrono::NaiveDateTime;
use clap::{Args, Parser, Subcommand};
use secss_core::playground::{self, SeedError};
use secss_core::{
    Clock, FixedClock, Gateway, LoadedEla, ResponseEnvelope, SignedRequest, Signer, SqliteBackend,
    SystemClock, TrustStore,
};

/// Exit status of every command.
mod status {
    pub const OK: u8 = 0;
    /// Invalid input, refused request or failed operation.
    pub const FAILED: u8 = 1;
    /// The gateway could not be reached.
    pub const NETWORK: u8 = 3;
}

#[derive(Parser, Debug)]
#[command(name = "secss-gate", version, about = "Policy-enforcing SQL gateway")]
struct Cli {
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,

    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the HTTP gateway.
    Serve(ServeArgs),
    /// Check a rule document and summarize what it grants.
    ValidateEla(ValidateArgs),
    /// Create a self-signed key pair for development (test only).
    Keygen(KeygenArgs),
    /// Sign SQL and print the request JSON.
    Sign(SignArgs),
    /// Send a request to a running gateway and print the response.
    Submit(SubmitArgs),
    /// Create and fill the playground tables.
    SeedPlayground(SeedArgs),
}

#[derive(Args, Debug)]
struct BackendArg {
    /// `memory` or a SQLite file path (optionally prefixed `sqlite:`).
    /// `serve` falls back to the ELA's Connection element, then to `memory`.
    #[arg(long, env = "SECSS_BACKEND")]
    backend: Option<String>,

    /// Fixed time for NOW() and CURDATE(), e.g. 2012-06-15T12:00:00.
    #[arg(long, value_parser = parse_clock)]
    pin_clock: Option<NaiveDateTime>,
}

impl BackendArg {
    fn clock(&self) -> Arc<dyn Clock> {
        match self.pin_clock {
            Some(t) => Arc::new(FixedClock(t)),
            None => Arc::new(SystemClock),
        }
    }

    fn url<'a>(&'a self, fallback: &'a str) -> &'a str {
        match self.backend.as_deref() {
            Some(b) => b,
            None if !fallback.trim().is_empty() => fallback.trim(),
            None => "memory",
        }
    }

    fn open(&self, fallback: &str) -> Result<SqliteBackend> {
        let url = self.url(fallback);
        SqliteBackend::open(url, playground::SCHEMA, self.clock())
            .with_context(|| format!("opening backend {url}"))
    }
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,

    /// Rule document; defaults to the bundled playground ELA with --playground.
    #[arg(long, env = "SECSS_ELA")]
    ela: Option<PathBuf>,

    /// Directory of trusted root certificates (PEM).
    #[arg(long, env = "SECSS_TRUST_DIR")]
    trust_dir: Option<PathBuf>,

    #[command(flatten)]
    backend: BackendArg,

    /// Seed the playground tables (if empty) before serving.
    #[arg(long)]
    playground: bool,

    /// Expose POST /dev/sign with a fresh throwaway key (test only).
    #[arg(long)]
    dev_signer: bool,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(env = "SECSS_ELA")]
    path: PathBuf,

    /// Verify `<path>.p7s` against these roots when present.
    #[arg(long, env = "SECSS_TRUST_DIR")]
    trust_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct KeygenArgs {
    /// Directory for key.pem and cert.pem.
    #[arg(long)]
    out: PathBuf,

    /// Certificate common name.
    #[arg(long, default_value = "secss-dev")]
    name: String,

    /// Also copy the certificate here so the gateway trusts it.
    #[arg(long, env = "SECSS_TRUST_DIR")]
    trust_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SignArgs {
    #[arg(long)]
    key: PathBuf,

    #[arg(long)]
    cert: PathBuf,

    /// File holding the SQL text; stdin when absent or `-`.
    sql_file: Option<PathBuf>,

    #[arg(long)]
    comment: Option<String>,
}

#[derive(Args, Debug)]
struct SubmitArgs {
    /// Gateway base URL.
    #[arg(long, default_value = "http://127.0.0.1:8080")]
    url: String,

    /// Request JSON file; stdin when absent or `-`.
    request_file: Option<PathBuf>,

    /// Send this SQL unsigned instead of reading a request file.
    #[arg(long, conflicts_with = "request_file")]
    sql: Option<String>,
}

#[derive(Args, Debug)]
struct SeedArgs {
    #[command(flatten)]
    backend: BackendArg,

    /// Drop and recreate existing playground tables.
    #[arg(long)]
    force: bool,
}

fn parse_clock(s: &str) -> Result<NaiveDateTime, String> {
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .or_else(|| {
            chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .ok()
                .and_then(|d| d.and_hms_opt(12, 0, 0))
        })
        .ok_or_else(|| format!("expected YYYY-MM-DD[THH:MM:SS], got {s:?}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let filter = match cli.verbose {
        0 => "warn,secss=info",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| filter.into()),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();

    let json = cli.json;
    let outcome = match cli.command {
        Command::Serve(a) => serve(a),
        Command::ValidateEla(a) => validate_ela(a, json),
        Command::Keygen(a) => keygen(a, json),
        Command::Sign(a) => sign(a, json),
        Command::Submit(a) => submit(a, json),
        Command::SeedPlayground(a) => seed_playground(a, json),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if json {
                let msg = serde_json::json!({ "error": format!("{e:#}") });
                println!("{msg}");
            } else {
                eprintln!("error: {e:#}");
            }
            let network = e
                .chain()
                .any(|c| c.downcast_ref::<reqwest::Error>().is_some());
            ExitCode::from(if network {
                status::NETWORK
            } else {
                status::FAILED
            })
        }
    }
}

fn readable_dir(p: &Path) -> Result<PathBuf> {
    let p = p
        .canonicalize()
        .with_context(|| format!("trust directory {}", p.display()))?;
    if !p.is_dir() {
        bail!("trust directory {} is not a directory", p.display());
    }
    Ok(p)
}

fn trust_store(dir: Option<&Path>) -> Result<TrustStore> {
    match dir {
        Some(d) => {
            let d = readable_dir(d)?;
            TrustStore::from_dir(&d).with_context(|| format!("loading roots from {}", d.display()))
        }
        None => Ok(TrustStore::default()),
    }
}

fn load_ela(path: &Path, trust: &TrustStore) -> Result<LoadedEla> {
    let path = path
        .canonicalize()
        .with_context(|| format!("ELA {}", path.display()))?;
    LoadedEla::from_path(&path, trust)
        .map_err(|e| anyhow::anyhow!("{}: {e}", e.code()))
        .with_context(|| format!("invalid ELA {}", path.display()))
}

fn read_input(path: Option<&Path>) -> Result<Vec<u8>> {
    match path {
        Some(p) if p != Path::new("-") => {
            std::fs::read(p).with_context(|| format!("reading {}", p.display()))
        }
        _ => {
            let mut buf = Vec::new();
            std::io::stdin()
                .read_to_end(&mut buf)
                .context("reading stdin")?;
            Ok(buf)
        }
    }
}

fn serve(args: ServeArgs) -> Result<u8> {
    let trust = trust_store(args.trust_dir.as_deref())?;
    let ela = match (&args.ela, args.playground) {
        (Some(path), _) => load_ela(path, &trust)?,
        (None, true) => playground::playground_ela()?,
        (None, false) => bail!("no ELA given: pass --ela, set SECSS_ELA, or use --playground"),
    };
    for w in &ela.document.warnings {
        tracing::warn!("ELA {w}");
    }
    let backend = args.backend.open(&ela.document.connection)?;
    if args.playground {
        match playground::seed(&backend, false) {
            Ok(()) => tracing::info!("playground seeded"),
            Err(SeedError::AlreadySeeded(_)) => tracing::info!("playground tables already present"),
            Err(e) => return Err(e).context("seeding playground"),
        }
    }
    let mut gateway = Gateway::new(ela, trust, Arc::new(backend));
    if args.dev_signer {
        let signer = Signer::generate_dev("secss-dev-signer")?;
        tracing::warn!(
            "dev signer enabled (test only): identity {}",
            signer.identity()
        );
        gateway = gateway.with_dev_signer(signer);
    }

    let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.listen)
            .await
            .with_context(|| format!("binding {}", args.listen))?;
        let addr = listener.local_addr()?;
        tracing::info!("listening on http://{addr}");
        println!("listening on http://{addr}");
        secss_core::gateway::serve(listener, Arc::new(gateway))
            .await
            .context("server stopped")
    })?;
    Ok(status::OK)
}

fn validate_ela(args: ValidateArgs, json: bool) -> Result<u8> {
    let trust = trust_store(args.trust_dir.as_deref())?;
    let path = args
        .path
        .canonicalize()
        .with_context(|| format!("ELA {}", args.path.display()))?;
    match LoadedEla::from_path(&path, &trust) {
        Ok(ela) => {
            if json {
                println!("{}", report::ela_json(&ela));
            } else {
                print!("{}", report::ela_text(&ela));
            }
            Ok(status::OK)
        }
        Err(e) => {
            if json {
                let v =
                    serde_json::json!({ "valid": false, "code": e.code(), "error": e.to_string() });
                println!("{v}");
            } else {
                println!("invalid: {}: {e}", e.code());
            }
            Ok(status::FAILED)
        }
    }
}

fn keygen(args: KeygenArgs, json: bool) -> Result<u8> {
    let signer = Signer::generate_dev(&args.name)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let key_path = args.out.join("key.pem");
    let cert_path = args.out.join("cert.pem");
    std::fs::write(&key_path, signer.key_pem()?)
        .with_context(|| format!("writing {}", key_path.display()))?;
    std::fs::write(&cert_path, signer.cert_pem()?)
        .with_context(|| format!("writing {}", cert_path.display()))?;
    let trusted = match &args.trust_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let dest = dir.join(format!("{}.pem", args.name));
            std::fs::write(&dest, signer.cert_pem()?)
                .with_context(|| format!("writing {}", dest.display()))?;
            Some(dest)
        }
        None => None,
    };
    let id = signer.identity().id().unwrap_or_default().to_string();
    if json {
        let v = serde_json::json!({
            "key": key_path,
            "cert": cert_path,
            "trusted": trusted,
            "identity": id,
        });
        println!("{v}");
    } else {
        println!("test-only key pair written to {}", args.out.display());
        println!("identity: {id}");
        if let Some(t) = trusted {
            println!("trusted as {}", t.display());
        }
    }
    Ok(status::OK)
}

fn sign(args: SignArgs, json: bool) -> Result<u8> {
    let key =
        std::fs::read(&args.key).with_context(|| format!("reading {}", args.key.display()))?;
    let cert =
        std::fs::read(&args.cert).with_context(|| format!("reading {}", args.cert.display()))?;
    let signer = Signer::from_pem(&key, &cert)?;
    let sql = String::from_utf8(read_input(args.sql_file.as_deref())?)
        .context("SQL text is not UTF-8")?;
    let request = signer.sign_request(&sql, args.comment)?;
    let out = if json {
        serde_json::to_string(&request)?
    } else {
        serde_json::to_string_pretty(&request)?
    };
    println!("{out}");
    Ok(status::OK)
}

fn submit(args: SubmitArgs, json: bool) -> Result<u8> {
    let body = match args.sql {
        Some(sql) => serde_json::to_vec(&SignedRequest::anonymous(sql))?,
        None => read_input(args.request_file.as_deref())?,
    };
    let url = format!("{}/query", args.url.trim_end_matches('/'));
    let resp = reqwest::blocking::Client::new()
        .post(&url)
        .header(reqwest::header::CONTENT_TYPE, "application/json")
        .body(body)
        .send()
        .with_context(|| format!("POST {url}"))?;
    let http = resp.status();
    let text = resp
        .text()
        .with_context(|| format!("reading response from {url}"))?;
    let envelope: ResponseEnvelope = serde_json::from_str(&text)
        .with_context(|| format!("HTTP {http}: response is not an envelope: {text}"))?;
    if json {
        println!("{text}");
    } else {
        print!("{}", report::envelope_text(&envelope));
        if !http.is_success() {
            println!("HTTP {http}");
        }
    }
    Ok(if envelope.ok && http.is_success() {
        status::OK
    } else {
        status::FAILED
    })
}

fn seed_playground(args: SeedArgs, json: bool) -> Result<u8> {
    let backend = args.backend.open("")?;
    match playground::seed(&backend, args.force) {
        Ok(()) => {}
        Err(SeedError::AlreadySeeded(tables)) => bail!(
            "tables already exist: {}; rerun with --force to recreate them",
            tables.join(", ")
        ),
        Err(e) => return Err(e).context("seeding playground"),
    }
    let tables = backend.tables()?;
    if json {
        println!(
            "{}",
            serde_json::json!({ "seeded": tables, "backend": args.backend.url("") })
        );
    } else {
        println!("seeded {} in {}", tables.join(", "), args.backend.url(""));
    }
    Ok(status::OK)
}
