//! `seamquest`: run scenarios headlessly, dump coverage maps, validate
//! scenario files, or serve live sessions over WebSocket.

use std::fmt;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{mpsc, Arc};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use clap::{Parser, Subcommand};
use seamquest::gateway::{default_run_dir, serve_session, ChannelTransport, SessionOptions};
use seamquest::harness::{coverage_map, run, CoverageMode};
use seamquest::{load_scenario_file, Scenario, ScenarioError};

#[derive(Parser)]
#[command(name = "seamquest", version, about = "BLE museum ghost-quest simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario headlessly and write its event log.
    Run {
        scenario: PathBuf,
        /// Where to write the JSONL event log
        /// [default: $SEAMQUEST_RUN_DIR/<name>-<seed>.jsonl, else ./runs/...]
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Write a signal coverage CSV and one PGM image per beacon.
    Coverage {
        scenario: PathBuf,
        /// Grid spacing in metres.
        #[arg(long)]
        resolution: f64,
        /// Output directory [default: <run dir>/coverage-<name>].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Average K noisy draws per cell (seeded from the scenario) instead
        /// of the noiseless prediction.
        #[arg(long, value_name = "K")]
        mean_of: Option<u32>,
    },
    /// Serve live sessions over WebSocket at ws://HOST:PORT/ws.
    Serve {
        scenario: PathBuf,
        #[arg(long)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Stream per-beacon smoothed RSSI and zones to clients.
        #[arg(long)]
        debug_rssi: bool,
    },
    /// Check a scenario file and report the first problem.
    Validate { scenario: PathBuf },
}

/// Failure classes, each with its own exit code.
enum Failure {
    Unreadable(PathBuf, std::io::Error),
    Invalid(PathBuf, String),
    Output(PathBuf, std::io::Error),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Unreadable(..) => 3,
            Failure::Invalid(..) => 4,
            Failure::Output(..) => 5,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Unreadable(p, e) => write!(f, "cannot read scenario {}: {e}", p.display()),
            Failure::Invalid(p, e) => write!(f, "invalid scenario {}: {e}", p.display()),
            Failure::Output(p, e) => write!(f, "cannot write {}: {e}", p.display()),
            Failure::Runtime(e) => f.write_str(e),
        }
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    load_scenario_file(path).map_err(|e| match e {
        ScenarioError::Io { source, .. } => Failure::Unreadable(path.to_owned(), source),
        ScenarioError::Invalid(v) => Failure::Invalid(path.to_owned(), v.to_string()),
    })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    let out = |e| Failure::Output(path.to_owned(), e);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(out)?;
    }
    std::fs::write(path, contents).map_err(out)
}

/// Print to stdout, tolerating a closed pipe (`seamquest run ... | head`).
fn say(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn cmd_run(path: &Path, log: Option<PathBuf>) -> Result<(), Failure> {
    let scenario = load(path)?;
    let (events, metrics) = run(&scenario).map_err(|e| Failure::Runtime(e.to_string()))?;
    let log_path = log.unwrap_or_else(|| default_run_dir().join(format!("{}-{}.jsonl", scenario.name, scenario.seed)));
    write_file(&log_path, events.to_jsonl().as_bytes())?;
    let summary = serde_json::json!({ "log": log_path, "metrics": metrics });
    say(&serde_json::to_string_pretty(&summary).expect("metrics serialize"));
    Ok(())
}

fn cmd_coverage(path: &Path, resolution: f64, out: Option<PathBuf>, mean_of: Option<u32>) -> Result<(), Failure> {
    let scenario = load(path)?;
    let mode = match mean_of {
        Some(k) => CoverageMode::MeanOf { k, seed: scenario.seed },
        None => CoverageMode::Deterministic,
    };
    let radio = match mode {
        CoverageMode::Deterministic => scenario.radio.noiseless(),
        CoverageMode::MeanOf { .. } => scenario.radio,
    };
    let map = coverage_map(&scenario.floorplan, &scenario.beacons, &radio, resolution, mode)
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let dir = out.unwrap_or_else(|| default_run_dir().join(format!("coverage-{}", scenario.name)));
    write_file(&dir.join("coverage.csv"), map.to_csv().as_bytes())?;
    for (i, id) in map.beacon_ids.iter().enumerate() {
        write_file(&dir.join(format!("{id}.pgm")), &map.to_pgm(i))?;
    }
    say(&format!(
        "wrote {}x{} cells for {} beacon(s) to {}",
        map.nx,
        map.ny,
        map.beacon_ids.len(),
        dir.display()
    ));
    Ok(())
}

fn cmd_validate(path: &Path) -> Result<(), Failure> {
    let s = load(path)?;
    say(&format!(
        "ok: {} ({} ticks of {}, {} beacon(s), {} quest(s))",
        s.name,
        s.tick_count(),
        s.tick,
        s.beacons.len(),
        s.quests.quests.len()
    ));
    Ok(())
}

struct AppState {
    scenario: Scenario,
    debug_rssi: bool,
}

fn cmd_serve(path: &Path, host: std::net::IpAddr, port: u16, debug_rssi: bool) -> Result<(), Failure> {
    let scenario = load(path)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Runtime(e.to_string()))?;
    runtime.block_on(async move {
        let state = Arc::new(AppState { scenario, debug_rssi });
        let app = Router::new()
            .route("/ws", get(upgrade))
            .route("/", get(|| async { "seamquest session server; connect a WebSocket to /ws\n" }))
            .with_state(state);
        let listener = tokio::net::TcpListener::bind(SocketAddr::new(host, port))
            .await
            .map_err(|e| Failure::Runtime(format!("cannot listen on {host}:{port}: {e}")))?;
        let bound = listener.local_addr().map_err(|e| Failure::Runtime(e.to_string()))?;
        eprintln!("listening on ws://{bound}/ws");
        axum::serve(listener, app)
            .await
            .map_err(|e| Failure::Runtime(e.to_string()))
    })
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<Arc<AppState>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| play(socket, state))
}

/// Bridge one socket to a blocking session loop through ordered queues.
async fn play(mut socket: WebSocket, state: Arc<AppState>) {
    let (to_session, session_in) = mpsc::channel::<String>();
    let (session_out, from_session) = mpsc::channel::<String>();
    let (relay_tx, mut relay_rx) = tokio::sync::mpsc::unbounded_channel::<String>();

    let scenario = state.scenario.clone();
    let options = SessionOptions {
        debug_rssi: state.debug_rssi,
        ..SessionOptions::default()
    };
    let session = tokio::task::spawn_blocking(move || {
        let mut transport = ChannelTransport::new(session_in, session_out);
        serve_session(&scenario, &mut transport, &options)
    });
    tokio::task::spawn_blocking(move || {
        while let Ok(text) = from_session.recv() {
            if relay_tx.send(text).is_err() {
                break;
            }
        }
    });

    loop {
        tokio::select! {
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(text))) => {
                    // one message per frame, or several separated by newlines
                    for line in text.as_str().lines().filter(|l| !l.trim().is_empty()) {
                        if to_session.send(line.to_owned()).is_err() {
                            break;
                        }
                    }
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
            outgoing = relay_rx.recv() => match outgoing {
                Some(text) => {
                    if socket.send(Message::Text(text.into())).await.is_err() {
                        break;
                    }
                }
                None => break,
            },
        }
    }
    drop(to_session);
    match session.await {
        Ok(Ok(summary)) => match summary.log_path {
            Some(p) => eprintln!("session ended after {} ticks; log at {}", summary.ticks, p.display()),
            None => eprintln!("session ended after {} ticks", summary.ticks),
        },
        Ok(Err(e)) => eprintln!("session failed: {e}"),
        Err(e) => eprintln!("session task failed: {e}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, log } => cmd_run(&scenario, log),
        Command::Coverage { scenario, resolution, out, mean_of } => cmd_coverage(&scenario, resolution, out, mean_of),
        Command::Serve { scenario, port, host, debug_rssi } => cmd_serve(&scenario, host, port, debug_rssi),
        Command::Validate { scenario } => cmd_validate(&scenario),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
