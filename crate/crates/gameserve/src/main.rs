use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context as _;
use clap::Parser;

use refgame::arena::CampaignConfig;

/// Serves live reference games over HTTP.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Campaign config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Append finished games to this JSONL file.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            CampaignConfig::parse(&text)?
        }
        None => CampaignConfig::default(),
    };
    log::info!("training initial models");
    let mut state = tokio::task::spawn_blocking(move || gameserve::AppState::bootstrap(&config)).await??;
    if let Some(path) = &args.log {
        state = state.with_log(path).with_context(|| format!("opening {}", path.display()))?;
    }
    let app = gameserve::router(Arc::new(state));
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", args.port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}
