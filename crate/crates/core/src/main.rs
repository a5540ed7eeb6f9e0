use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match sphere_renyi::cli::run_command(std::env::args_os(), &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("sphere-renyi: {}: {e}", e.kind());
            e.exit_code()
        }
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
