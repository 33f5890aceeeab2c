//! `modelcard`: batch front end for card export, stage tagging, trace checks
//! and rubric assessment.
//!
//! Exit status is 0 on success, 1 when a check found issues and 2 on usage,
//! I/O or parse errors. Payloads go to stdout, diagnostics to stderr.

use std::io::Write as _;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use modelcard_core::card::{CardTemplate, EMPTY_SECTION_PLACEHOLDER};
use modelcard_core::codeview::{apply_assignments, detect_notebook_stages, write_stage_comment};
use modelcard_core::rubric::{
    assess_corpus, manual_answers_from_json, notebook_manual_answers, render_corpus_table, render_report_table,
    CorpusDocument,
};
use modelcard_core::{
    check_trace_integrity, completion_check, export_card, extract_card, load_template, parse_notebook,
    serialize_notebook, CellId, KnowledgeBase, ManualAnswers, Notebook, Stage, StageAssignment, StageSource,
};
use modelcard_service::{router, ServiceOptions};

#[derive(Parser)]
#[command(name = "modelcard", version, about = "Model-card documentation inside Jupyter notebooks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read or export the model card embedded in a notebook.
    #[command(subcommand)]
    Card(CardCommand),
    /// Detect or set ML pipeline stages of code cells.
    #[command(subcommand)]
    Stages(StagesCommand),
    /// Check consistency between stage tags, comments and card markers.
    #[command(subcommand)]
    Trace(TraceCommand),
    /// Answer the 22-question documentation rubric.
    #[command(subcommand)]
    Rubric(RubricCommand),
    /// Run the local HTTP service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// Card template config (JSON list of sections).
    #[arg(long, env = "MODELCARD_CONFIG")]
    config: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum CardCommand {
    /// Print the assembled card markdown.
    Show {
        notebook: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Write the card markdown to a file and warn about empty sections.
    Export {
        notebook: PathBuf,
        out: PathBuf,
        /// Exit with status 1 when a required section is empty.
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        config: ConfigArg,
    },
}

#[derive(Subcommand)]
enum StagesCommand {
    /// Print the detected stage of every code cell.
    Detect {
        notebook: PathBuf,
        /// Knowledge base JSON replacing the built-in one.
        #[arg(long)]
        kb: Option<PathBuf>,
        /// Store detected stages in the notebook.
        #[arg(long)]
        write: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Assign a stage to one cell manually.
    Set { notebook: PathBuf, cell_id: String, stage: String },
}

#[derive(Subcommand)]
enum TraceCommand {
    /// List integrity issues; exits 1 when any are found.
    Check {
        notebook: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        config: ConfigArg,
    },
}

#[derive(Subcommand)]
enum RubricCommand {
    /// Assess markdown documents or notebook cards. Several paths give a corpus report.
    Assess {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Treat every path as a notebook and assess its exported card.
        #[arg(long)]
        from_card: bool,
        /// Manual answers JSON, e.g. {"Q6": "no"}.
        #[arg(long)]
        answers: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        config: ConfigArg,
    },
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8765)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: IpAddr,
    #[arg(long, default_value = ".")]
    notebook_root: PathBuf,
    /// Built panel assets served under /panel/.
    #[arg(long)]
    panel_dir: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Card(CardCommand::Show { notebook, config }) => {
            let tpl = template(&config)?;
            let nb = read_notebook(&notebook)?;
            let bytes = export_card(&extract_card(&nb, &tpl), &tpl);
            std::io::stdout().write_all(&bytes)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Card(CardCommand::Export { notebook, out, strict, config }) => {
            let tpl = template(&config)?;
            let nb = read_notebook(&notebook)?;
            let card = extract_card(&nb, &tpl);
            std::fs::write(&out, export_card(&card, &tpl)).with_context(|| format!("writing {}", out.display()))?;
            let missing = completion_check(&card, &tpl);
            for id in &missing {
                let title = tpl.section(id).map_or(id.as_str(), |s| s.title.as_str());
                eprintln!("warning: section `{title}` is empty (exported as {EMPTY_SECTION_PLACEHOLDER})");
            }
            Ok(if strict && !missing.is_empty() { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Command::Stages(StagesCommand::Detect { notebook, kb, write, format }) => {
            let kb = match kb {
                Some(p) => {
                    let bytes = std::fs::read(&p).with_context(|| format!("reading {}", p.display()))?;
                    KnowledgeBase::from_json(&bytes).with_context(|| format!("knowledge base {}", p.display()))?
                }
                None => KnowledgeBase::default_kb(),
            };
            let nb = read_notebook(&notebook)?;
            let detected = detect_notebook_stages(&nb, &kb);
            if write {
                let next = apply_assignments(&nb, &detected)?;
                write_if_changed(&notebook, &nb, &next)?;
            }
            match format {
                Format::Json => print_json(&detected)?,
                Format::Text => print!("{}", stages_table(&detected)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Stages(StagesCommand::Set { notebook, cell_id, stage }) => {
            let stage: Stage = stage.parse().map_err(|e| anyhow::anyhow!("{e}"))?;
            let nb = read_notebook(&notebook)?;
            let next = write_stage_comment(&nb, &CellId::new(cell_id), stage, StageSource::Manual)?;
            write_if_changed(&notebook, &nb, &next)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Trace(TraceCommand::Check { notebook, format, config }) => {
            let tpl = template(&config)?;
            let nb = read_notebook(&notebook)?;
            let issues = check_trace_integrity(&nb, &tpl);
            match format {
                Format::Json => print_json(&issues)?,
                Format::Text => {
                    for i in &issues {
                        let cell = i.cell_id.as_ref().map_or("-", |c| c.as_str());
                        println!("{}\t{cell}\t{}", i.kind.as_str(), i.detail);
                    }
                }
            }
            Ok(if issues.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Rubric(RubricCommand::Assess { paths, from_card, answers, format, config }) => {
            rubric_assess(&paths, from_card, answers.as_deref(), format, &config)
        }
        Command::Serve(args) => serve(args),
    }
}

fn template(arg: &ConfigArg) -> Result<CardTemplate> {
    let bytes = match &arg.config {
        Some(p) => Some(std::fs::read(p).with_context(|| format!("reading config {}", p.display()))?),
        None => None,
    };
    load_template(bytes.as_deref()).context("card template config")
}

fn read_notebook(path: &Path) -> Result<Notebook> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_notebook(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn write_if_changed(path: &Path, before: &Notebook, after: &Notebook) -> Result<()> {
    if after != before {
        std::fs::write(path, serialize_notebook(after)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn stages_table(assignments: &[StageAssignment]) -> String {
    let mut out = String::new();
    for a in assignments {
        let stage = a.stage.map_or("-", Stage::as_str);
        let source = a.source.map_or("-", StageSource::as_str);
        out.push_str(&format!("{}\t{stage}\t{source}\t{}\n", a.cell_id.as_str(), a.matched_calls.join(",")));
    }
    out
}

fn is_notebook(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ipynb"))
}

fn rubric_assess(
    paths: &[PathBuf],
    from_card: bool,
    answers: Option<&Path>,
    format: Format,
    config: &ConfigArg,
) -> Result<ExitCode> {
    let from_file = match answers {
        Some(p) => {
            let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            let value: serde_json::Value =
                serde_json::from_slice(&bytes).with_context(|| format!("answers file {} is not JSON", p.display()))?;
            manual_answers_from_json(&value).with_context(|| format!("answers file {}", p.display()))?
        }
        None => ManualAnswers::new(),
    };
    let tpl = if from_card || paths.iter().any(|p| is_notebook(p)) { Some(template(config)?) } else { None };

    let mut texts = Vec::with_capacity(paths.len());
    for path in paths {
        let mut manual = ManualAnswers::new();
        let text = match &tpl {
            Some(tpl) if from_card || is_notebook(path) => {
                let nb = read_notebook(path)?;
                manual =
                    notebook_manual_answers(&nb).with_context(|| format!("stored answers in {}", path.display()))?;
                String::from_utf8(export_card(&extract_card(&nb, tpl), tpl))?
            }
            _ => {
                let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
                match String::from_utf8(bytes) {
                    Ok(s) => s,
                    Err(_) => bail!("{} is not UTF-8 text", path.display()),
                }
            }
        };
        manual.extend(from_file.iter().map(|(k, v)| (k.clone(), *v)));
        texts.push((path.display().to_string(), text, manual));
    }
    let docs: Vec<CorpusDocument<'_>> = texts
        .iter()
        .map(|(target, text, manual)| CorpusDocument { target: target.clone(), text, manual: manual.clone() })
        .collect();
    let corpus = assess_corpus(&docs);

    match (format, corpus.reports.as_slice()) {
        (Format::Json, [single]) => print_json(single)?,
        (Format::Json, _) => print_json(&corpus)?,
        (Format::Text, [single]) => print!("{}", render_report_table(single)),
        (Format::Text, _) => print!("{}", render_corpus_table(&corpus)),
    }
    Ok(ExitCode::SUCCESS)
}

fn serve(args: ServeArgs) -> Result<ExitCode> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let options = ServiceOptions {
        notebook_root: args.notebook_root,
        panel_dir: args.panel_dir,
        config_path: args.config.config,
    };
    let app = router(&options)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let addr = SocketAddr::new(args.bind, args.port);
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        modelcard_service::serve(listener, app).await?;
        Ok(ExitCode::SUCCESS)
    })
}
