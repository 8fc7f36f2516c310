//! `shiftkit` command line: ingestion, extraction, validation, reporting
//! and serving. Data goes to stdout, diagnostics to stderr.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 rule violations found.

use std::fs::File;
use std::io::{BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use shiftkit_core::corpus::{parse_alignment, parse_corpus, CorpusFormat};
use shiftkit_core::extraction::{SkipReason, SpeakerWhitelist};
use shiftkit_core::project::{apply, load, save, validate_project, Project, ProjectStore};
use shiftkit_core::report::{export_csv, shift_counts, GroupBy};
use shiftkit_core::Execution;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATIONS: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "shiftkit", version, about = "Translation shift annotation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a fresh project from two corpora and their sentence alignment.
    Ingest {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        alignment: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Corpus format; inferred from the file extension when omitted.
        #[arg(long)]
        format: Option<CorpusFormat>,
    },
    /// Select direction-verified sentence pairs and add them to the project.
    Extract {
        #[arg(long)]
        project: PathBuf,
        /// One speaker name per line.
        #[arg(long)]
        whitelist: PathBuf,
        /// Genre label attached to the new pairs.
        #[arg(long)]
        genre: Option<String>,
    },
    /// Revalidate every alignment record; prints pair, rule and message.
    Validate {
        #[arg(long)]
        project: PathBuf,
    },
    /// Print the shift frequency table.
    Report {
        #[arg(long)]
        project: PathBuf,
        #[arg(long, default_value = "none")]
        group_by: GroupBy,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Serve the HTTP API for the annotation UI.
    Serve {
        #[arg(long)]
        project: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// Directory of static UI assets.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs one command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_ERROR
                }
            };
        }
    };
    let result = match cli.command {
        Command::Ingest {
            source,
            target,
            alignment,
            out: dest,
            format,
        } => cmd_ingest(&source, &target, &alignment, &dest, format, out),
        Command::Extract {
            project,
            whitelist,
            genre,
        } => cmd_extract(&project, &whitelist, genre.as_deref(), out, err),
        Command::Validate { project } => cmd_validate(&project, out),
        Command::Report { project, group_by, csv } => cmd_report(&project, group_by, csv.as_deref(), out),
        Command::Serve { project, bind, assets } => cmd_serve(&project, &bind, assets, err),
    };
    match result {
        Ok(code) => code,
        Err(Failure(message)) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_ERROR
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn infer_format(path: &Path) -> CorpusFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("jsonlines") => CorpusFormat::JsonLines,
        _ => CorpusFormat::Xml,
    }
}

fn load_project(path: &Path) -> Result<Project, Failure> {
    load(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn cmd_ingest(
    source: &Path,
    target: &Path,
    alignment: &Path,
    dest: &Path,
    format: Option<CorpusFormat>,
    out: &mut dyn Write,
) -> CmdResult {
    let read = |path: &Path| -> Result<_, Failure> {
        parse_corpus(open(path)?, format.unwrap_or_else(|| infer_format(path)))
            .map_err(|e| Failure(format!("{}: {e}", path.display())))
    };
    let src = read(source)?;
    let tgt = read(target)?;
    let links = parse_alignment(open(alignment)?).map_err(|e| Failure(format!("{}: {e}", alignment.display())))?;
    let project = Project::from_bitext(src, tgt, links)?;
    save(&project, dest)?;
    writeln!(out, "corpora\t{}", project.corpora.len())?;
    for c in &project.corpora {
        writeln!(out, "sentences\t{}\t{}", c.language, c.sentence_count())?;
    }
    writeln!(out, "links\t{}", project.links.len())?;
    writeln!(out, "pairs\t{}", project.pairs.len())?;
    Ok(EXIT_OK)
}

fn cmd_extract(
    path: &Path,
    whitelist: &Path,
    genre: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let whitelist = SpeakerWhitelist::from_reader(open(whitelist)?)?;
    let project = load_project(path)?;
    let expected = project.revision;
    let (next, result) = apply(&project, Some(expected), |p| {
        p.extract(&whitelist, genre, Execution::default())
    })?;
    save(&next, path)?;
    writeln!(out, "{} emitted, {} skipped", result.pairs.len(), result.skipped.len())?;
    for reason in SkipReason::ALL {
        writeln!(out, "skipped\t{}\t{}", reason.code(), result.tally(reason))?;
    }
    for s in &result.skipped {
        let codes: Vec<&str> = s.reasons.iter().map(|r| r.code()).collect();
        writeln!(err, "link {} ({}): {}", s.link_index, s.link, codes.join(", "))?;
    }
    Ok(EXIT_OK)
}

fn cmd_validate(path: &Path, out: &mut dyn Write) -> CmdResult {
    let project = load_project(path)?;
    let violations = validate_project(&project, Execution::default());
    for v in &violations {
        writeln!(out, "{}\t{}\t{}", v.pair, v.violation.rule, v.violation.message)?;
    }
    Ok(if violations.is_empty() {
        EXIT_OK
    } else {
        EXIT_VIOLATIONS
    })
}

fn cmd_report(path: &Path, group_by: GroupBy, csv: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let project = load_project(path)?;
    let report = shift_counts(&project, group_by);
    writeln!(out, "group\ttag\tcount\tdenominator")?;
    for r in &report.rows {
        writeln!(out, "{}\t{}\t{}\t{}", r.group, r.tag, r.count, r.denominator)?;
    }
    if let Some(dest) = csv {
        let file = File::create(dest).map_err(|e| Failure(format!("{}: {e}", dest.display())))?;
        export_csv(&report, file)?;
    }
    Ok(EXIT_OK)
}

fn cmd_serve(path: &Path, bind: &str, assets: Option<PathBuf>, err: &mut dyn Write) -> CmdResult {
    let addr: SocketAddr = bind
        .parse()
        .map_err(|e| Failure(format!("bad bind address {bind:?}: {e}")))?;
    let store = Arc::new(ProjectStore::open(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure(format!("cannot bind {addr}: {e}")))?;
        let local = listener.local_addr()?;
        writeln!(err, "listening on http://{local}")?;
        err.flush()?;
        shiftkit_service::serve_on(listener, shiftkit_service::router(store, assets)).await?;
        Ok(EXIT_OK)
    })
}
