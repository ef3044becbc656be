// SPDX-License-Identifier: Apache-2.0

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use xarlog_core::assessment::{render_table, AssessmentMatrix, CellKey, Verdict};
use xarlog_core::chunk::{chunk_segment_with, Chunk, SegmentRef};
use xarlog_core::classify::{segment_log, LogCategory, Segment};
use xarlog_core::extract::reconstruct_blocks;
use xarlog_core::grounding::{ground_answer, GroundingReport};
use xarlog_core::interrogate::{find_question, question_catalog, render_prompt_with, ActorRole, PromptJob};
use xarlog_core::log::{parse_file, ParsedLog};
use xarlog_core::pddl::{
    brute_force_plan, parse_domain, parse_plan, parse_problem, validate_plan, PddlDomain, PddlProblem, Provenance,
};

use crate::config::{AppConfig, ConfigError, Settings};
use crate::gateway::{prompt_key, ChatResponse, ExchangeFailure, Gateway};
use crate::transcript::Transcript;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "xarlog", version, about = "Interpret ROS 2 launch logs: categorize, extract PDDL, validate plans, and ask LLM backends about robot behavior")]
struct Cli {
    /// Configuration file (default: ./xarlog.json if present).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Machine-readable output for subcommands that default to text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print every record as a JSON line.
    Parse { log: PathBuf },
    /// Print the segment index as a JSON array.
    Classify { log: PathBuf },
    /// Write reconstructed PDDL blocks to `<name>.<kind>.pddl` plus index.json.
    ExtractPddl {
        log: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// List the chunks of every segment in a category.
    Chunk {
        log: PathBuf,
        #[arg(long)]
        category: LogCategory,
    },
    /// Render a prompt, query a backend, ground the answer and log the exchange.
    Ask(AskArgs),
    /// Execute a plan against a domain and problem.
    ValidatePlan {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Find a shortest plan by breadth-first search.
    BrutePlan {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = 5)]
        max_depth: usize,
    },
    /// Record verdicts and render the assessment table.
    #[command(subcommand)]
    Assess(AssessCommand),
}

#[derive(Debug, Args)]
struct AskArgs {
    log: PathBuf,
    #[arg(long)]
    category: LogCategory,
    #[arg(long, required_unless_present = "all_questions", conflicts_with = "all_questions")]
    question: Option<String>,
    /// Ask every catalog question open to the actor.
    #[arg(long)]
    all_questions: bool,
    #[arg(long)]
    actor: ActorRole,
    #[arg(long)]
    backend: String,
    #[arg(long, default_value = "default")]
    template: String,
    /// Segment index from `classify`; defaults to the first segment of the category.
    #[arg(long)]
    segment: Option<usize>,
    /// 1-based chunk of the segment.
    #[arg(long, default_value_t = 1)]
    part: usize,
}

#[derive(Debug, Subcommand)]
enum AssessCommand {
    /// Set one cell: `assess set "GPT 4.0" pddl Q2 yes`.
    Set {
        model: String,
        category: LogCategory,
        question: String,
        verdict: Verdict,
        #[arg(long)]
        assessor: Option<String>,
        #[arg(long)]
        answer_ref: Option<u64>,
        #[arg(long)]
        note: Option<String>,
    },
    /// Render the matrix as a Markdown table (or JSON with --json).
    Report {
        /// Comma-separated question ids; defaults to those present in the matrix.
        #[arg(long, value_delimiter = ',')]
        questions: Vec<String>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn domain(message: impl ToString) -> Self {
        Self {
            code: EXIT_DOMAIN,
            message: message.to_string(),
        }
    }

    fn usage(message: impl ToString) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::usage(format!("config: {e}"))
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::domain(e)
    }
}

type Outcome = Result<i32, Failure>;

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Runs the CLI with explicit output streams and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let mut io = Io { out, err };
    match dispatch(&cli, &mut io) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(io.err, "xarlog: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: &Cli, io: &mut Io) -> Outcome {
    let settings = AppConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Parse { log } => cmd_parse(log, io),
        Command::Classify { log } => cmd_classify(&settings, log, io),
        Command::ExtractPddl { log, out_dir } => cmd_extract(log, out_dir, cli.json, io),
        Command::Chunk { log, category } => cmd_chunk(&settings, log, *category, cli.json, io),
        Command::Ask(args) => cmd_ask(&settings, args, cli.json, io),
        Command::ValidatePlan { domain, problem, plan } => cmd_validate(domain, problem, plan, io),
        Command::BrutePlan {
            domain,
            problem,
            max_depth,
        } => cmd_brute(domain, problem, *max_depth, cli.json, io),
        Command::Assess(a) => cmd_assess(&settings, a, cli.json, io),
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// Parses a log, reporting malformed lines on stderr.
fn load_log(path: &Path, io: &mut Io) -> Result<ParsedLog, Failure> {
    let log = parse_file(&read_text(path)?);
    for e in &log.errors {
        writeln!(io.err, "{}: {e}", path.display())?;
    }
    Ok(log)
}

fn file_id(path: &Path) -> String {
    path.file_stem().unwrap_or_default().to_string_lossy().into_owned()
}

fn print_json<T: Serialize + ?Sized>(out: &mut dyn Write, value: &T) -> io::Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    s.push('\n');
    out.write_all(s.as_bytes())
}

fn cmd_parse(log: &Path, io: &mut Io) -> Outcome {
    let parsed = load_log(log, io)?;
    for r in &parsed.records {
        let line = serde_json::to_string(r).map_err(io::Error::other)?;
        writeln!(io.out, "{line}")?;
    }
    Ok(if parsed.errors.is_empty() { EXIT_OK } else { EXIT_DOMAIN })
}

fn cmd_classify(settings: &Settings, log: &Path, io: &mut Io) -> Outcome {
    let parsed = load_log(log, io)?;
    let summaries: Vec<_> = segment_log(&parsed.records, &settings.rules)
        .iter()
        .map(Segment::summary)
        .collect();
    print_json(io.out, &summaries)?;
    Ok(EXIT_OK)
}

fn safe_file_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() || matches!(c, '_' | '-') { c } else { '_' })
        .collect()
}

#[derive(Serialize)]
struct BlockIndexEntry {
    name: String,
    kind: &'static str,
    file: String,
    first_line: usize,
    last_line: usize,
    process_tag: String,
}

fn cmd_extract(log: &Path, out_dir: &Path, json: bool, io: &mut Io) -> Outcome {
    let parsed = load_log(log, io)?;
    let blocks = reconstruct_blocks(&parsed.records).map_err(Failure::domain)?;
    fs::create_dir_all(out_dir)?;
    let mut index = Vec::new();
    for b in &blocks {
        let file = format!("{}.{}.pddl", safe_file_name(&b.name), b.kind.file_tag());
        let mut text = b.text.clone();
        text.push('\n');
        fs::write(out_dir.join(&file), text)?;
        index.push(BlockIndexEntry {
            name: b.name.clone(),
            kind: b.kind.file_tag(),
            file,
            first_line: b.source_span.0,
            last_line: b.source_span.1,
            process_tag: b.process_tag.clone(),
        });
    }
    let index_json = serde_json::to_string_pretty(&index).map_err(io::Error::other)?;
    fs::write(out_dir.join("index.json"), index_json + "\n")?;
    if json {
        print_json(io.out, &index)?;
    } else {
        for e in &index {
            writeln!(io.out, "{} (lines {}-{})", out_dir.join(&e.file).display(), e.first_line, e.last_line)?;
        }
    }
    Ok(EXIT_OK)
}

fn category_chunks(
    settings: &Settings,
    log: &Path,
    category: LogCategory,
    only: Option<usize>,
    io: &mut Io,
) -> Result<Vec<Vec<Chunk>>, Failure> {
    let parsed = load_log(log, io)?;
    let segments = segment_log(&parsed.records, &settings.rules);
    let mut out = Vec::new();
    for (i, seg) in segments.iter().enumerate() {
        if seg.category != category || only.is_some_and(|o| o != i) {
            continue;
        }
        let seg_ref = SegmentRef {
            file_id: file_id(log),
            segment_index: i,
        };
        out.push(chunk_segment_with(seg, seg_ref, &settings.budget, &settings.estimator).map_err(Failure::domain)?);
    }
    Ok(out)
}

fn cmd_chunk(settings: &Settings, log: &Path, category: LogCategory, json: bool, io: &mut Io) -> Outcome {
    let chunks: Vec<Chunk> = category_chunks(settings, log, category, None, io)?.into_iter().flatten().collect();
    if json {
        print_json(io.out, &chunks)?;
    } else {
        for c in &chunks {
            writeln!(
                io.out,
                "segment {} part {}/{} lines {}-{} ~{} tokens",
                c.segment_ref.segment_index, c.part, c.parts, c.first_line, c.last_line, c.est_tokens
            )?;
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct AskResult {
    question: String,
    receipt: Option<u64>,
    prompt_key: String,
    response: Option<ChatResponse>,
    error: Option<ExchangeFailure>,
    grounding: Option<GroundingReport>,
}

fn cmd_ask(settings: &Settings, args: &AskArgs, json: bool, io: &mut Io) -> Outcome {
    let backend = settings
        .backend(&args.backend)
        .ok_or_else(|| Failure::usage(format!("unknown backend `{}`", args.backend)))?;
    if settings.templates.get(&args.template).is_none() {
        return Err(Failure::usage(format!("unknown template `{}`", args.template)));
    }
    let questions: Vec<String> = match &args.question {
        Some(q) => {
            let found = find_question(q).ok_or_else(|| Failure::usage(format!("unknown question `{q}`")))?;
            if !found.permits(args.actor) {
                return Err(Failure::usage(format!("question {} is not addressed to {}", found.id, args.actor)));
            }
            vec![found.id.to_string()]
        }
        None => question_catalog()
            .iter()
            .filter(|q| q.permits(args.actor))
            .map(|q| q.id.to_string())
            .collect(),
    };

    let segments = category_chunks(settings, &args.log, args.category, args.segment, io)?;
    let chunks = segments
        .into_iter()
        .next()
        .ok_or_else(|| Failure::domain(format!("no {} segment in {}", args.category, args.log.display())))?;
    let chunk = chunks
        .get(args.part.wrapping_sub(1))
        .cloned()
        .ok_or_else(|| Failure::usage(format!("segment has {} part(s); --part {} is out of range", chunks.len(), args.part)))?;

    let mut prompts = Vec::with_capacity(questions.len());
    for q in &questions {
        let job = PromptJob {
            question: q.clone(),
            actor: args.actor,
            category: args.category,
            chunk: chunk.clone(),
            backend: backend.id.clone(),
            template_id: args.template.clone(),
        };
        let prompt = render_prompt_with(&job, &settings.templates, &settings.budget, &settings.estimator)
            .map_err(Failure::domain)?;
        prompts.push((q.clone(), prompt));
    }

    let transcript = Transcript::open(&settings.config.transcript_path)?;
    let gateway = Gateway::from_env();
    let results: Vec<Mutex<Option<io::Result<AskResult>>>> = prompts.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = settings.config.gateway.max_inflight.min(prompts.len()).max(1);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((question, prompt)) = prompts.get(i) else { break };
                let exchange = match gateway.complete(backend, prompt) {
                    Ok(x) => x,
                    Err(f) => *f.exchange,
                };
                let result = transcript.record(&exchange).map(|receipt| AskResult {
                    question: question.clone(),
                    receipt: Some(receipt),
                    prompt_key: prompt_key(prompt),
                    grounding: exchange
                        .response
                        .as_ref()
                        .map(|r| ground_answer(&r.content, &chunk.text).with_answer_ref(receipt)),
                    response: exchange.response,
                    error: exchange.error,
                });
                *results[i].lock().unwrap_or_else(|p| p.into_inner()) = Some(result);
            });
        }
    });
    let results: Vec<AskResult> = results
        .into_iter()
        .map(|m| m.into_inner().unwrap_or_else(|p| p.into_inner()).expect("every job ran"))
        .collect::<io::Result<_>>()?;

    let failed = results.iter().filter(|r| r.error.is_some()).count();
    if json {
        print_json(io.out, &results)?;
    } else {
        for r in &results {
            match (&r.response, &r.error, &r.grounding) {
                (Some(resp), _, Some(g)) => {
                    writeln!(
                        io.out,
                        "== {} (receipt {}, grounding {:.2}) ==",
                        r.question,
                        r.receipt.unwrap_or_default(),
                        g.grounding_ratio
                    )?;
                    writeln!(io.out, "{}", resp.content.trim_end())?;
                    if !g.ungrounded_terms.is_empty() {
                        let terms: Vec<&str> = g.ungrounded_terms.iter().map(String::as_str).collect();
                        writeln!(io.out, "-- not found in the log excerpt: {}", terms.join(", "))?;
                    }
                }
                (_, Some(e), _) => {
                    writeln!(io.out, "== {} (receipt {}) failed: {} ==", r.question, r.receipt.unwrap_or_default(), e.message)?;
                }
                _ => {}
            }
        }
    }
    if failed > 0 {
        writeln!(io.err, "xarlog: {failed} of {} request(s) failed", results.len())?;
        return Ok(EXIT_DOMAIN);
    }
    Ok(EXIT_OK)
}

fn load_models(domain: &Path, problem: &Path) -> Result<(PddlDomain, PddlProblem), Failure> {
    let d = parse_domain(&read_text(domain)?).map_err(|e| Failure::domain(format!("{}: {e}", domain.display())))?;
    let p = parse_problem(&read_text(problem)?, &d).map_err(|e| Failure::domain(format!("{}: {e}", problem.display())))?;
    Ok((d, p))
}

fn cmd_validate(domain: &Path, problem: &Path, plan: &Path, io: &mut Io) -> Outcome {
    let (d, p) = load_models(domain, problem)?;
    let plan = parse_plan(&read_text(plan)?, Provenance::Human).map_err(|e| Failure::domain(format!("{}: {e}", plan.display())))?;
    let report = validate_plan(&d, &p, &plan).map_err(Failure::domain)?;
    print_json(io.out, &report)?;
    Ok(EXIT_OK)
}

fn cmd_brute(domain: &Path, problem: &Path, max_depth: usize, json: bool, io: &mut Io) -> Outcome {
    let (d, p) = load_models(domain, problem)?;
    let plan = brute_force_plan(&d, &p, max_depth).map_err(Failure::domain)?;
    if json {
        print_json(io.out, &plan)?;
    } else {
        write!(io.out, "{plan}")?;
    }
    Ok(EXIT_OK)
}

fn load_matrix(settings: &Settings) -> Result<AssessmentMatrix, Failure> {
    let path = &settings.config.matrix_path;
    match fs::read_to_string(path) {
        Ok(text) => serde_json::from_str(&text).map_err(|e| Failure::domain(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(AssessmentMatrix::new(settings.config.assessment.models.clone())),
        Err(e) => Err(Failure::domain(format!("{}: {e}", path.display()))),
    }
}

fn save_matrix(path: &Path, m: &AssessmentMatrix) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    let text = serde_json::to_string_pretty(m).map_err(io::Error::other)?;
    tmp.write_all(text.as_bytes())?;
    tmp.write_all(b"\n")?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn cmd_assess(settings: &Settings, cmd: &AssessCommand, json: bool, io: &mut Io) -> Outcome {
    let mut m = load_matrix(settings)?;
    match cmd {
        AssessCommand::Set {
            model,
            category,
            question,
            verdict,
            assessor,
            answer_ref,
            note,
        } => {
            let key = m.key(model, *category, question).map_err(Failure::usage)?;
            let assessor = assessor
                .clone()
                .or_else(|| std::env::var("USER").ok())
                .unwrap_or_else(|| "unknown".into());
            m.record_verdict(key.clone(), *verdict, &assessor, *answer_ref)
                .map_err(Failure::usage)?;
            if let Some(n) = note {
                m.set_note(&key, n).map_err(Failure::usage)?;
            }
            save_matrix(&settings.config.matrix_path, &m)?;
            let CellKey { model, category, question } = key;
            writeln!(io.err, "{model} / {category} / {question} = {verdict}")?;
            Ok(EXIT_OK)
        }
        AssessCommand::Report { questions } => {
            if json {
                print_json(io.out, &m)?;
                return Ok(EXIT_OK);
            }
            let questions: Vec<String> = if questions.is_empty() {
                let present: Vec<String> = question_catalog()
                    .iter()
                    .filter(|q| m.cells().any(|(k, _)| k.question == q.id))
                    .map(|q| q.id.to_string())
                    .collect();
                if present.is_empty() {
                    ["Q1", "Q2", "Q3"].map(String::from).to_vec()
                } else {
                    present
                }
            } else {
                questions.clone()
            };
            write!(io.out, "{}", render_table(&m, m.models(), &questions))?;
            Ok(EXIT_OK)
        }
    }
}
