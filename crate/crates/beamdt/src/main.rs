use clap::Parser;

fn main() -> std::process::ExitCode {
    let cli = beamdt::cli::Cli::parse();
    match beamdt::cli::run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::FAILURE
        }
    }
}
