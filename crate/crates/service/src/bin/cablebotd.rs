use clap::Parser;
use tracing_subscriber::EnvFilter;

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let args = cablebot_service::cli::Args::parse();
    if let Err(e) = cablebot_service::cli::run(args).await {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
