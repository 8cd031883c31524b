mod args;
mod pipeline;

use std::process::ExitCode;

use clap::Parser;

fn configure_threads() {
    let Ok(v) = std::env::var("CURVETOMO_THREADS") else {
        return;
    };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: could not size the thread pool: {e}");
            }
        }
        _ => eprintln!("warning: ignoring CURVETOMO_THREADS={v:?}"),
    }
}

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    configure_threads();
    match pipeline::run(&cli) {
        Ok(manifest) => {
            println!("{}", serde_json::to_string(&manifest.results).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
