use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use hubflow::api::{router, AppState};
use hubflow::bundle::Bundle;
use hubflow::{fixture, gen, pipeline};

/// Exit status when the bundle was written but some stage failed.
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "hubflow", version, about = "Transport-hub flow analysis from taxi probe data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the batch pipeline described by a TOML config.
    Run { config: PathBuf },
    /// Serve a bundle over HTTP.
    Serve {
        workspace: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
    /// Generate a synthetic scenario with ground truth and a ready config.
    Gen {
        /// Scenario TOML; omitted keys take their defaults.
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the small reference bundle.
    Fixture { workspace: PathBuf },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Run { config } => match pipeline::run(&config) {
            Ok(outcome) => {
                print!("{}", outcome.summary_text());
                if outcome.manifest.errors.is_empty() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_PARTIAL)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Serve { workspace, bind } => {
            let bundle = match Bundle::load(&workspace) {
                Ok(b) => b,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
            match rt.block_on(serve(bundle, bind)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Gen { scenario, out, seed } => {
            let cfg = match scenario.as_deref().map(gen::load_scenario_config).transpose() {
                Ok(c) => c.unwrap_or_default(),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(e.exit_code() as u8);
                }
            };
            let cfg = hubflow_core::synth::ScenarioConfig { seed: seed.unwrap_or(cfg.seed), ..cfg };
            match gen::generate_into(&cfg, &out) {
                Ok(path) => {
                    println!("scenario written; run with: hubflow run {}", path.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Fixture { workspace } => match fixture::write_fixture(&workspace) {
            Ok(_) => {
                println!("fixture bundle written to {}", workspace.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}

async fn serve(bundle: Bundle, bind: SocketAddr) -> std::io::Result<()> {
    for (name, why) in bundle.manifest.artifacts.iter().filter_map(|a| bundle.unavailable(&a.name).map(|u| (&a.name, u))) {
        tracing::warn!(artifact = %name, reason = ?why, "artifact not served");
    }
    let app = router(Arc::new(AppState::new(bundle)));
    let listener = tokio::net::TcpListener::bind(bind).await?;
    tracing::info!(%bind, "serving");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
