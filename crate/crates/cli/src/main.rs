use std::process::ExitCode;

fn main() -> ExitCode {
    match heston_fisher_cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
