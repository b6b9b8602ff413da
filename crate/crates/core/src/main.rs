use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = match qchannel::cli::run(std::env::args_os()) {
        Ok(outcome) => outcome,
        Err(e) => {
            let code = if e.use_stderr() { qchannel::cli::EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(outcome.render().as_bytes());
    ExitCode::from(outcome.code as u8)
}
