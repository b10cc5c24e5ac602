use clap::Parser;
use phfoam::shell::{execute, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(failure) = execute(&cli) {
        eprintln!("error: {failure}");
        std::process::exit(failure.exit_code());
    }
}
