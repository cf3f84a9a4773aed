use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use sabotage_cli::api::{self, ApiError, CheckRequest, MincutRequest, Semantics};
use sabotage_cli::service::{self, AppState, CreateRequest, MoveRequest};
use sabotage_core::atl::parse_formula;
use sabotage_core::session::{default_objective, SessionError, SessionStore};

#[derive(Debug, Parser)]
#[command(name = "sabotage", version, about = "Solvers and model checkers for sabotage games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a formula; exits 0 when true, 1 when false, 2 on error.
    Check(CheckArgs),
    /// Static or dynamic minimum cut between two vertices.
    Mincut(MincutArgs),
    /// Print the witness strategy of a coalition formula.
    Solve(CheckArgs),
    /// Play interactively on the terminal against the solver.
    Play(PlayArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Graph JSON file.
    #[arg(long)]
    graph: PathBuf,
    /// Structure kind: tb, con, gen or angelic.
    #[arg(long, default_value = "tb")]
    kind: String,
    /// Goal vertex, overriding the graph file.
    #[arg(long)]
    goal: Option<String>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    formula: String,
    /// State in text form, e.g. "((E,u),r)"; the initial state by default.
    #[arg(long)]
    state: Option<String>,
    /// Read the formula as sabotage modal logic.
    #[arg(long)]
    sml: bool,
    /// Imperfect-information semantics with uniform strategies.
    #[arg(long)]
    imp: bool,
    /// Relations as JSON text or a JSON file, e.g. '{"r":"local_degree"}'.
    #[arg(long)]
    relations: Option<String>,
    /// Also run the enumeration oracle and report agreement.
    #[arg(long)]
    oracle: bool,
}

#[derive(Debug, Args)]
struct MincutArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    from: String,
    #[arg(long)]
    to: String,
    /// The game-theoretic cut, with the runner moving between deletions.
    #[arg(long)]
    dynamic: bool,
}

#[derive(Debug, Args)]
struct PlayArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Agents played by the human, e.g. "r" or "r,d".
    #[arg(long, default_value = "r")]
    human: String,
    /// Objective of the solver-driven agents.
    #[arg(long)]
    objective: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Session snapshot file, loaded at start and rewritten after each change.
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn relations_arg(v: Option<&str>) -> anyhow::Result<Option<Value>> {
    let Some(text) = v else { return Ok(None) };
    let path = Path::new(text);
    if path.is_file() {
        return read_json(path).map(Some);
    }
    Ok(Some(serde_json::from_str(text).context("parsing --relations")?))
}

fn check_request(args: &CheckArgs) -> anyhow::Result<CheckRequest> {
    Ok(CheckRequest {
        graph: read_json(&args.model.graph)?,
        kind: args.model.kind.clone(),
        goal: args.model.goal.clone(),
        state: args.state.clone().map(Value::String),
        formula: args.formula.clone(),
        semantics: if args.imp { Semantics::Imp } else { Semantics::Standard },
        relations: relations_arg(args.relations.as_deref())?,
        sml: args.sml,
        oracle: args.oracle,
    })
}

fn print(v: &Value) {
    let text = serde_json::to_string_pretty(v).unwrap_or_else(|_| v.to_string());
    // A closed pipe is not an error worth a panic.
    writeln!(std::io::stdout(), "{text}").ok();
}

fn fail(e: &ApiError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(2)
}

fn verdict_code(v: bool) -> ExitCode {
    if v {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    Ok(match cli.command {
        Command::Check(args) => match api::run_check(&check_request(&args)?) {
            Ok((v, report)) => {
                print(&report);
                verdict_code(v)
            }
            Err(e) => fail(&e),
        },
        Command::Solve(args) => match api::run_solve(&check_request(&args)?) {
            Ok((v, report)) => {
                print(&report);
                verdict_code(v)
            }
            Err(e) => fail(&e),
        },
        Command::Mincut(args) => {
            let req = MincutRequest {
                graph: read_json(&args.graph)?,
                from: args.from,
                to: args.to,
                dynamic: args.dynamic,
            };
            match api::run_mincut(&req) {
                Ok(report) => {
                    print(&report);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Play(args) => {
            let stdin = std::io::stdin();
            let stdout = std::io::stdout();
            play(&args, &mut stdin.lock(), &mut stdout.lock())?
        }
        Command::Serve(args) => {
            serve(args)?;
            ExitCode::SUCCESS
        }
    })
}

/// Terminal front end over the session API. Commands: a move such as `u v`,
/// `skip` or `r=u,v d=skip`; `moves`; `hint [formula]`; `eval formula`; `quit`.
fn play(args: &PlayArgs, input: &mut dyn BufRead, out: &mut dyn Write) -> anyhow::Result<ExitCode> {
    let req = CreateRequest {
        graph: read_json(&args.model.graph)?,
        kind: args.model.kind.clone(),
        goal: args.model.goal.clone(),
        human: Value::String(args.human.clone()),
        objective: args.objective.clone(),
        relations: None,
        seed: args.seed,
    };
    let store = SessionStore::new();
    let config = match service::session_config(&req) {
        Ok(c) => c,
        Err(e) => return Ok(fail(&e)),
    };
    let id = store.create(config).map_err(anyhow::Error::from)?["id"]
        .as_str()
        .unwrap_or_default()
        .to_string();
    let mut line = String::new();
    loop {
        let status: Result<bool, ApiError> = store.with(&id, |s| {
            while !s.is_over() && s.legal_moves()?.is_empty() {
                let o = s.solver_move(None)?;
                let note = if o.random { " (random)" } else { "" };
                writeln!(out, "solver plays {}{note}", s.arena().format_profile(&o.profile)).ok();
            }
            writeln!(out, "state {}", s.arena().format_state(&s.state)).ok();
            if s.is_over() {
                let reached = Some(s.state.position) == s.model.goal;
                writeln!(out, "game over{}", if reached { ": goal reached" } else { "" }).ok();
                return Ok(true);
            }
            Ok(false)
        });
        match status {
            Ok(true) => return Ok(ExitCode::SUCCESS),
            Ok(false) => {}
            Err(e) => return Ok(fail(&e)),
        }
        write!(out, "> ")?;
        out.flush()?;
        line.clear();
        if input.read_line(&mut line)? == 0 {
            return Ok(ExitCode::SUCCESS);
        }
        let cmd = line.trim();
        let result: Result<Option<Value>, ApiError> =
            store.with(&id, |s| match cmd.split_once(' ').unwrap_or((cmd, "")) {
                ("quit", _) | ("exit", _) => Ok(None),
                ("moves", _) => Ok(Some(service::moves_json(s)?)),
                ("hint", rest) => {
                    let f = (!rest.trim().is_empty())
                        .then(|| parse_formula(rest.trim()))
                        .transpose()?;
                    let hints = s.hint(f.as_ref())?;
                    let shown = match &f {
                        Some(f) => f.to_string(),
                        None => default_objective(s.human, s.model.goal.is_some()).to_string(),
                    };
                    Ok(Some(service::hints_json(s, &shown, &hints)))
                }
                ("eval", rest) => {
                    let f = parse_formula(rest.trim())?;
                    Ok(Some(json!({ "verdict": s.eval(&f)? })))
                }
                _ => {
                    let req = parse_move_text(cmd)?;
                    let choice = service::parse_choice(s, &req)?;
                    let o = s.human_move(None, &choice)?;
                    Ok(Some(
                        json!({ "played": s.arena().format_profile(&o.profile), "random_reply": o.random }),
                    ))
                }
            });
        match result {
            Ok(None) => return Ok(ExitCode::SUCCESS),
            Ok(Some(v)) => writeln!(out, "{v}")?,
            Err(e) => writeln!(out, "{}", e.to_json())?,
        }
    }
}

fn action_text(text: &str) -> Value {
    if text == "skip" {
        return json!("skip");
    }
    let parts: Vec<&str> = text.split([',', ' ']).filter(|p| !p.is_empty()).collect();
    json!(parts)
}

fn parse_move_text(cmd: &str) -> Result<MoveRequest, ApiError> {
    if cmd.contains('=') {
        let mut choice = std::collections::BTreeMap::new();
        for part in cmd.split_whitespace() {
            let (agent, act) = part
                .split_once('=')
                .ok_or_else(|| ApiError::BadRequest(format!("expected agent=move, got \"{part}\"")))?;
            choice.insert(agent.to_string(), action_text(act));
        }
        return Ok(MoveRequest {
            choice: Some(choice),
            ..MoveRequest::default()
        });
    }
    if cmd.is_empty() {
        return Err(SessionError::Invalid("empty command".into()).into());
    }
    Ok(MoveRequest {
        action: Some(action_text(cmd)),
        ..MoveRequest::default()
    })
}

#[tokio::main]
async fn serve(args: ServeArgs) -> anyhow::Result<()> {
    let store = match &args.snapshot {
        Some(path) => SessionStore::load(path).map_err(anyhow::Error::from)?,
        None => SessionStore::new(),
    };
    let app = service::router(AppState::new(store, args.snapshot.clone()));
    let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
        .await
        .with_context(|| format!("binding {}:{}", args.host, args.port))?;
    tracing::info!(addr = %listener.local_addr()?, "serving");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            tokio::signal::ctrl_c().await.ok();
        })
        .await?;
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!(
                "{}",
                json!({ "error": "bad_request", "detail": { "message": format!("{e:#}") } })
            );
            ExitCode::from(2)
        }
    }
}
