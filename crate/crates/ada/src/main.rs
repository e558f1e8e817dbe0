use clap::Parser;

use ada::cli::{run, Args};

fn init_logging() -> Result<(), String> {
    let level = match std::env::var("ADA_LOG_LEVEL").as_deref() {
        Err(_) | Ok("info") => log::LevelFilter::Info,
        Ok("error") => log::LevelFilter::Error,
        Ok("debug") => log::LevelFilter::Debug,
        Ok(other) => return Err(format!("ADA_LOG_LEVEL must be error, info or debug, got {:?}", other)),
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    Ok(())
}

fn main() {
    if let Err(e) = init_logging() {
        eprintln!("error: {}", e);
        std::process::exit(2);
    }
    let args = Args::parse();
    if let Err(e) = run(&args) {
        log::error!("{}", e);
        std::process::exit(e.exit_code());
    }
}
