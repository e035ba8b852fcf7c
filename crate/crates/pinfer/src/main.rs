fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp_millis()
        .init();
    if let Err(e) = pinfer::cli::run(std::env::args_os()) {
        eprintln!("error: {:#}", e);
        std::process::exit(1);
    }
}
