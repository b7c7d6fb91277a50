use std::fs;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use residua::commands::{self, Elim, Mode};
use residua::http::{router, AppState};
use residua::report::{render, report};
use residua::session::{SessionError, Store};

#[derive(Parser)]
#[command(name = "residua", version, about = "Iterative audit of temporal privacy policies against incomplete logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, translate and mode-check a policy; print the translated formula.
    Check {
        policy: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Print the outcome, including mode diagnostics, as JSON on stdout.
        #[arg(long)]
        json: bool,
    },
    /// Reduce a policy against a log once and print the residual.
    Reduce {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "auto")]
        elim: Elim,
    },
    /// Safety or co-safety verdict on a past-complete log, as JSON.
    Verdict {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Mode,
    },
    /// Persistent audit sessions.
    Session {
        /// Directory holding one subdirectory per session.
        #[arg(long, env = "RESIDUA_ROOT", default_value = "sessions")]
        root: PathBuf,
        #[command(subcommand)]
        action: SessionAction,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "RESIDUA_ROOT", default_value = "sessions")]
        root: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Require `Authorization: Bearer <token>` on every request.
        #[arg(long, env = "RESIDUA_TOKEN")]
        token: Option<String>,
    },
}

#[derive(Subcommand)]
enum SessionAction {
    /// Create a session and print its id.
    New {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    Ingest {
        id: String,
        log: PathBuf,
    },
    Iterate {
        id: String,
    },
    /// Decide a pending subjective atom, e.g. `'contains(M, Alice, mr, 11)' tt`.
    Assert {
        id: String,
        atom: String,
        #[arg(value_parser = parse_value, action = clap::ArgAction::Set)]
        value: bool,
        #[arg(long)]
        justification: String,
    },
    Report {
        id: String,
    },
    /// Recompute the residual from the ledger and compare it with the stored one.
    Replay {
        id: String,
    },
}

/// An error whose details already went to stdout.
#[derive(Debug)]
struct Reported;

impl std::fmt::Display for Reported {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("policy rejected")
    }
}

impl std::error::Error for Reported {}

fn parse_value(s: &str) -> Result<bool, String> {
    match s {
        "tt" | "true" => Ok(true),
        "ff" | "false" => Ok(false),
        _ => Err(format!("expected tt or ff, found `{s}`")),
    }
}

fn read(path: &PathBuf) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

fn read_opt(path: &Option<PathBuf>) -> anyhow::Result<String> {
    path.as_ref().map_or(Ok(String::new()), read)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Check { policy, schema, json: false } => {
            println!("{}", commands::check(&read(&policy)?, &read_opt(&schema)?)?)
        }
        Command::Check { policy, schema, json: true } => {
            let outcome = commands::check(&read(&policy)?, &read_opt(&schema)?);
            let doc = match &outcome {
                Ok(f) => serde_json::json!({"ok": true, "formula": f}),
                Err(SessionError::Modes(d)) => serde_json::json!({"ok": false, "error": "modes", "diagnostics": d}),
                Err(SessionError::Engine(residua_core::Error::Parse { span, message })) => {
                    serde_json::json!({"ok": false, "error": "parse", "span": span, "message": message})
                }
                Err(e) => serde_json::json!({"ok": false, "error": "invalid", "message": e.to_string()}),
            };
            println!("{}", serde_json::to_string_pretty(&doc)?);
            if outcome.is_err() {
                return Err(Reported.into());
            }
        }
        Command::Reduce { policy, log, schema, elim } => {
            println!("{}", commands::reduce_once(&read(&policy)?, &read_opt(&schema)?, &read(&log)?, elim)?)
        }
        Command::Verdict { policy, log, schema, mode } => {
            let v = commands::verdict(&read(&policy)?, &read_opt(&schema)?, &read(&log)?, mode)?;
            println!("{}", serde_json::to_string(&v)?);
        }
        Command::Session { root, action } => {
            let store = Store::new(root);
            match action {
                SessionAction::New { policy, schema } => {
                    println!("{}", store.create(&read(&policy)?, &read_opt(&schema)?)?.id)
                }
                SessionAction::Ingest { id, log } => {
                    let mut s = store.load(&id)?;
                    s.ingest(&read(&log)?)?;
                    store.save(&s)?;
                }
                SessionAction::Iterate { id } => {
                    let mut s = store.load(&id)?;
                    s.iterate()?;
                    store.save(&s)?;
                    println!("{}", s.residual_text());
                }
                SessionAction::Assert { id, atom, value, justification } => {
                    let mut s = store.load(&id)?;
                    s.assert(&atom, value, &justification)?;
                    store.save(&s)?;
                }
                SessionAction::Report { id } => print!("{}", render(&report(&store.load(&id)?)?)),
                SessionAction::Replay { id } => {
                    let s = store.load(&id)?;
                    let f = s.replay(&store.dir(&id))?;
                    anyhow::ensure!(f == s.residual, "replay gives {f}, stored residual is {}", s.residual);
                    println!("{f}");
                }
            }
        }
        Command::Serve { root, addr, token } => {
            let app = router(AppState::new(Store::new(root), token));
            tokio::runtime::Runtime::new()?.block_on(async {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                eprintln!("listening on http://{addr}");
                axum::serve(listener, app).await
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(SessionError::Modes(diags)) = e.downcast_ref::<SessionError>() {
                for d in diags {
                    eprintln!("  {d}");
                }
            }
            ExitCode::FAILURE
        }
    }
}
