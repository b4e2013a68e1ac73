mod args;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hsi_refine::Error;

use args::Cli;

/// A failed command, printed to stderr as one JSON line.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    kind: String,
    message: String,
    path: Option<PathBuf>,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 1, kind: "Usage".into(), message: message.into(), path: None }
    }

    fn print(&self) {
        let mut obj = serde_json::json!({
            "error": self.kind,
            "message": self.message,
            "exit_code": self.code,
        });
        if let Some(path) = &self.path {
            obj["path"] = path.display().to_string().into();
        }
        eprintln!("{obj}");
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let path = match &err {
            Error::Io { path, .. } => Some(path.clone()),
            _ => None,
        };
        Self {
            code: if err.is_numerical() { 3 } else { 2 },
            kind: err.kind().to_string(),
            message: err.to_string(),
            path,
        }
    }
}

/// Attaches the input path to errors raised while reading it.
pub fn at(path: &std::path::Path) -> impl FnOnce(Error) -> Failure + '_ {
    move |err| {
        let mut failure = Failure::from(err);
        if failure.path.is_none() {
            failure.message = format!("{}: {}", path.display(), failure.message);
            failure.path = Some(path.to_path_buf());
        }
        failure
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| commands::run(cli.command)),
        Err(e) => Err(Failure::usage(format!("cannot start thread pool: {e}"))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            failure.print();
            ExitCode::from(failure.code)
        }
    }
}
