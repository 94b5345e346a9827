use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = vcam_cli::Cli::parse();
    if let Err(e) = vcam_cli::run(cli) {
        let msg = e.to_string().replace('\n', " ");
        eprintln!("vcam-error[{}]: {msg}", e.kind());
        std::process::exit(1);
    }
}
