use clap::Parser;
use mga_cli::{main_with, Cli, WORKERS_ENV};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let env = std::env::var(WORKERS_ENV).ok();
    std::process::exit(main_with(&cli, env.as_deref()));
}
