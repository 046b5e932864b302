use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CONEKIT_LOG", "error")).init();
    let code = conekit::cli::run(std::env::args_os(), &mut io::stdout().lock());
    ExitCode::from(code as u8)
}
