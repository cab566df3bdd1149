//! `iupc`: identify, check, replay, lint and classify process constraints.

use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use iupc_core::base::{check_consistency, evaluate_meta, ConstraintBase};
use iupc_core::dsl::{parse_document, Item};
use iupc_core::identify::{identify, DomainRuleSet};
use iupc_core::model::{parse_trace, ActivityRepository, ProcessSchema, ResourceModel};
use iupc_core::monitor::{replay, MonitorSession};
use iupc_core::verify::{verify_all, Outcome, Witness, DEFAULT_LOOP_BOUND};

/// `println!` that stops quietly when the reader has gone away.
macro_rules! out {
    ($($arg:tt)*) => {
        if let Err(e) = writeln!(io::stdout().lock(), $($arg)*) {
            if e.kind() == io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            panic!("writing to stdout: {e}");
        }
    };
}

#[derive(Parser)]
#[command(name = "iupc", version, about = "Process-constraint identification, verification and monitoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the rules of a document as enabled, idle or non-process.
    Identify {
        /// Constraint document (.iupc).
        rules: PathBuf,
        /// Directory of process schemas (*.json).
        #[arg(long)]
        schemas: PathBuf,
        /// Activity repository (JSON).
        #[arg(long)]
        repo: Option<PathBuf>,
        /// Also store the constraints and their identification as a base.
        #[arg(long, value_name = "DIR")]
        write_base: Option<PathBuf>,
    },
    /// Verify enabled compliance constraints against the schemas.
    Check {
        /// Base directory or constraint document.
        base: PathBuf,
        #[arg(long)]
        schemas: PathBuf,
        #[arg(long)]
        repo: Option<PathBuf>,
        /// Maximum number of executions of a loop body.
        #[arg(long, env = "IUPC_LOOP_BOUND", default_value_t = DEFAULT_LOOP_BOUND)]
        loop_bound: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Replay a trace file and report run-time violations as JSON lines.
    Replay {
        /// Base directory or constraint document.
        base: PathBuf,
        /// Trace file (JSON lines).
        trace: PathBuf,
        /// Resource model (JSON).
        #[arg(long)]
        resources: Option<PathBuf>,
        /// Schemas to re-identify against; without it the stored identification is used.
        #[arg(long)]
        schemas: Option<PathBuf>,
        #[arg(long)]
        repo: Option<PathBuf>,
        /// Also print the actions taken by behavioral constraints.
        #[arg(long)]
        actions: bool,
    },
    /// Check the base for conflicts and unmet meta constraints.
    Lint {
        base: PathBuf,
        #[arg(long)]
        schemas: Option<PathBuf>,
        #[arg(long)]
        resources: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Print the derived properties and type of every constraint.
    Classify {
        base: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

/// Input error, reported with exit code 2.
struct InputError(String);

impl<E: Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

type CmdResult = Result<ExitCode, InputError>;

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn load_schemas(dir: &Path) -> Result<Vec<ProcessSchema>, InputError> {
    let entries = fs::read_dir(dir).map_err(|e| InputError(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut schemas = Vec::new();
    for f in files {
        let s = ProcessSchema::parse(&read(&f)?).map_err(|e| InputError(format!("{}: {e}", f.display())))?;
        if schemas.iter().any(|x: &ProcessSchema| x.id == s.id) {
            return Err(InputError(format!("{}: schema id {} is used twice", f.display(), s.id)));
        }
        schemas.push(s);
    }
    Ok(schemas)
}

fn load_repo(path: Option<&Path>) -> Result<ActivityRepository, InputError> {
    match path {
        None => Ok(ActivityRepository::default()),
        Some(p) => ActivityRepository::parse(&read(p)?).map_err(|e| InputError(format!("{}: {e}", p.display()))),
    }
}

fn load_resources(path: Option<&Path>) -> Result<ResourceModel, InputError> {
    match path {
        None => Ok(ResourceModel::default()),
        Some(p) => ResourceModel::parse(&read(p)?).map_err(|e| InputError(format!("{}: {e}", p.display()))),
    }
}

fn load_items(path: &Path) -> Result<Vec<Item>, InputError> {
    parse_document(&read(path)?).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

/// A base directory, or a constraint document loaded as an unidentified base.
fn load_base(path: &Path) -> Result<ConstraintBase, InputError> {
    if path.is_dir() {
        Ok(ConstraintBase::load(path)?)
    } else {
        Ok(ConstraintBase::from_items(load_items(path)?)?)
    }
}

fn print_json<T: Serialize>(value: &T) {
    out!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn exit(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_identify(rules: &Path, schemas: &Path, repo: Option<&Path>, write_base: Option<&Path>) -> CmdResult {
    let items = load_items(rules)?;
    let schemas = load_schemas(schemas)?;
    let repo = load_repo(repo)?;
    let rule_set = DomainRuleSet::from_items(items.clone())?;
    let results = identify(&rule_set, &schemas, &repo);
    if let Some(dir) = write_base {
        let mut base = ConstraintBase::from_items(items)?;
        base.set_identification(results.clone());
        base.save(dir)?;
    }
    print_json(&results);
    Ok(ExitCode::SUCCESS)
}

fn witness_text(w: &Witness) -> String {
    match w {
        Witness::Path(nodes) => format!("path {}", nodes.join(" > ")),
        Witness::Interval { element, min, max } => format!("{element} in [{min},{max}]"),
    }
}

fn cmd_check(base: &Path, schemas: &Path, repo: Option<&Path>, loop_bound: usize, format: Format) -> CmdResult {
    if loop_bound == 0 {
        return Err(InputError("loop bound must be at least 1".into()));
    }
    let mut base = load_base(base)?;
    let schemas = load_schemas(schemas)?;
    let repo = load_repo(repo)?;
    base.identify(&schemas, &repo);
    let report = verify_all(&base, &schemas, loop_bound)?;
    match format {
        Format::Json => print_json(&report),
        Format::Text => {
            for e in &report.entries {
                let schema = e.schema.as_deref().unwrap_or("-");
                let detail = match &e.outcome {
                    Outcome::Checked(v) => {
                        let mut s = v.status.keyword().to_string();
                        for w in &v.witnesses {
                            s.push_str(&format!("; {}", witness_text(w)));
                        }
                        if v.monitor_required {
                            s.push_str("; monitor at run time");
                        }
                        s
                    }
                    Outcome::Failed(err) => format!("error: {err}"),
                    Outcome::Skipped(r) => format!("skipped: {r}"),
                };
                out!("{}\t{schema}\t{detail}", e.constraint);
            }
            out!("checked {}, skipped {}", report.checked, report.skipped);
        }
    }
    Ok(exit(report.all_satisfied()))
}

fn cmd_replay(
    base: &Path,
    trace: &Path,
    resources: Option<&Path>,
    schemas: Option<&Path>,
    repo: Option<&Path>,
    show_actions: bool,
) -> CmdResult {
    let mut base = load_base(base)?;
    let resources = load_resources(resources)?;
    let schemas = match schemas {
        Some(dir) => {
            let s = load_schemas(dir)?;
            base.identify(&s, &load_repo(repo)?);
            s
        }
        None => {
            base.ensure_identified()?;
            Vec::new()
        }
    };
    let traces = parse_trace(&read(trace)?).map_err(|e| InputError(format!("{}: {e}", trace.display())))?;
    let mut session = MonitorSession::open(&base, &schemas, &resources);
    let outcome = replay(&mut session, &traces)?;
    if show_actions {
        for a in &outcome.actions {
            out!("{}", serde_json::to_string(a).expect("action serializes"));
        }
    }
    for v in &outcome.violations {
        out!("{}", serde_json::to_string(v).expect("violation serializes"));
    }
    Ok(exit(outcome.violations.is_empty()))
}

fn cmd_lint(base: &Path, schemas: Option<&Path>, resources: Option<&Path>, format: Format) -> CmdResult {
    let base = load_base(base)?;
    let schemas = match schemas {
        Some(dir) => load_schemas(dir)?,
        None => Vec::new(),
    };
    let resources = load_resources(resources)?;
    let conflicts = check_consistency(&base);
    let meta = evaluate_meta(&base, &schemas, &resources);
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Lint<'a> {
                conflicts: &'a [iupc_core::base::Conflict],
                meta_violations: &'a [iupc_core::base::MetaViolation],
            }
            print_json(&Lint {
                conflicts: &conflicts,
                meta_violations: &meta,
            });
        }
        Format::Text => {
            for c in &conflicts {
                let kind = serde_json::to_value(c.kind).expect("kind serializes");
                out!("{}\t{} / {}\t{}", kind.as_str().unwrap_or_default(), c.first, c.second, c.detail);
            }
            for m in &meta {
                out!("meta {}\t{}\t{}", m.meta, m.element, m.message);
            }
            out!("{} conflict(s), {} meta violation(s)", conflicts.len(), meta.len());
        }
    }
    Ok(exit(conflicts.is_empty() && meta.is_empty()))
}

#[derive(Serialize)]
struct Classification {
    id: String,
    #[serde(rename = "type")]
    constraint_type: String,
    usage: String,
    application: Vec<String>,
    scope: Vec<String>,
    origin: String,
    linkage: Option<String>,
}

fn cmd_classify(base: &Path, format: Format) -> CmdResult {
    let base = load_base(base)?;
    let mut rows: Vec<Classification> = base
        .constraints()
        .map(|c| {
            let p = &c.properties;
            Classification {
                id: c.id.clone(),
                constraint_type: c.constraint_type().keyword().into(),
                usage: p.usage.keyword().into(),
                application: p.application.iter().map(|a| a.keyword().into()).collect(),
                scope: p.scope.iter().map(|s| s.keyword().into()).collect(),
                origin: serde_json::to_value(p.origin)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default(),
                linkage: Some(c.compact_linkage()),
            }
        })
        .collect();
    rows.extend(base.meta_constraints().map(|m| {
        let p = m.properties();
        Classification {
            id: m.id.clone(),
            constraint_type: m.constraint_type().keyword().into(),
            usage: p.usage.keyword().into(),
            application: p.application.iter().map(|a| a.keyword().into()).collect(),
            scope: p.scope.iter().map(|s| s.keyword().into()).collect(),
            origin: "external".into(),
            linkage: None,
        }
    }));
    rows.sort_by(|a, b| a.id.cmp(&b.id));
    match format {
        Format::Json => print_json(&rows),
        Format::Text => {
            for r in &rows {
                out!(
                    "{}\t{}\t{}\t{}\t{}",
                    r.id,
                    r.constraint_type,
                    r.usage,
                    r.application.join(","),
                    r.scope.join(",")
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Identify {
            rules,
            schemas,
            repo,
            write_base,
        } => cmd_identify(rules, schemas, repo.as_deref(), write_base.as_deref()),
        Command::Check {
            base,
            schemas,
            repo,
            loop_bound,
            format,
        } => cmd_check(base, schemas, repo.as_deref(), *loop_bound, *format),
        Command::Replay {
            base,
            trace,
            resources,
            schemas,
            repo,
            actions,
        } => cmd_replay(base, trace, resources.as_deref(), schemas.as_deref(), repo.as_deref(), *actions),
        Command::Lint {
            base,
            schemas,
            resources,
            format,
        } => cmd_lint(base, schemas.as_deref(), resources.as_deref(), *format),
        Command::Classify { base, format } => cmd_classify(base, *format),
    };
    match result {
        Ok(code) => code,
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
