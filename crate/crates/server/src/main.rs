use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use rebalance_core::engine::Engine;
use rebalance_core::ingest::DatasetManifest;
use rebalance_core::session::load_session;
use rebalance_core::Execution;
use rebalance_server::{router, AppState};

#[derive(Parser)]
#[command(name = "rebalance-server", about = "Serve a rebalance session over HTTP")]
struct Args {
    /// Listen address.
    #[arg(long, env = "REBALANCE_ADDR", default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Dataset manifest to load at startup.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Saved session to restore at startup (its manifest is loaded).
    #[arg(long, conflicts_with = "manifest")]
    session: Option<PathBuf>,
    /// Run statistics on a single thread.
    #[arg(long)]
    sequential: bool,
}

#[tokio::main]
async fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };

    let engine = if let Some(path) = &args.manifest {
        let base = path.parent().map(PathBuf::from).unwrap_or_default();
        Some(DatasetManifest::read(path).and_then(|m| Engine::open(&m, &base)))
    } else {
        args.session.as_ref().map(|path| {
            std::fs::read(path)
                .map_err(|e| rebalance_core::Error::Io { path: path.display().to_string(), source: e })
                .and_then(|b| Engine::from_session(load_session(&b)?))
        })
    };
    let state = match engine {
        Some(Ok(e)) => AppState::with_engine(e.with_execution(exec)),
        Some(Err(e)) => {
            log::error!("{e}");
            std::process::exit(if e.is_validation() { 2 } else { 1 });
        }
        None => AppState::new(exec, std::env::current_dir().unwrap_or_default()),
    };

    let listener = match tokio::net::TcpListener::bind(args.addr).await {
        Ok(l) => l,
        Err(e) => {
            log::error!("cannot listen on {}: {e}", args.addr);
            std::process::exit(1);
        }
    };
    log::info!("listening on {}", args.addr);
    if let Err(e) = axum::serve(listener, router(Arc::new(state))).await {
        log::error!("{e}");
        std::process::exit(1);
    }
}
