mod config;

use std::collections::{HashMap, HashSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use drnn::corpus::{
    annotate, build_vocab, load_interchange, load_parses, load_semeval, parse_semeval, split_validation,
    write_interchange, AnnotatedSentence, Channel, HypernymLexicon, Vocabulary, WordVectors,
};
use drnn::eval::{parse_predictions, pooling_trace, score, surface_tokens, write_predictions};
use drnn::model::{checkpoint, ModelConfig, ModelParams};
use drnn::sdp::{augment_sentences, extract_sdp, AugmentMode, SdpSample};
use drnn::train::{
    check_gradients, mix_seed, predict, select_hyperparams, train_with_progress, Dataset, DecodeStrategy,
};
use drnn::{synth, ErrorKind, RelationLabel};
use serde::Serialize;

use config::{parse_decode, Inputs, RunConfig};

const GRADCHECK_THRESHOLD: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "drnn", version, about = "Relation classification with deep recurrent networks over dependency paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align sentences with parses and hypernyms; write the interchange format
    Ingest(IngestArgs),
    /// Add entity-swapped copies of interchange sentences
    Augment(AugmentArgs),
    /// Train a model and write a checkpoint with its vocabulary, report and config snapshot
    Train(TrainArgs),
    /// Grid search over depth and dropout by validation macro-F1
    Gridsearch(GridArgs),
    /// Decode a test set with a checkpoint and score it
    Eval(EvalArgs),
    /// Score a predictions file against gold labels
    Score(ScoreArgs),
    /// Export pooling proportions per token and layer as JSON
    Trace(TraceArgs),
    /// Finite-difference check of the model gradients on synthetic data
    Gradcheck(GradcheckArgs),
    /// Write a deterministic synthetic corpus (sentences, parses, hypernyms)
    Synth(SynthArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Output path (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AugmentArgs {
    /// Interchange file
    #[arg(long)]
    input: PathBuf,
    /// none, all, other_only or directed_only
    #[arg(long, default_value = "directed_only")]
    mode: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    run: RunConfig,
    /// TOML file with the same keys as the flags (snake_case); flags win
    #[arg(long)]
    config: Option<PathBuf>,
    /// Checkpoint path; sidecars are written next to it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    run: RunConfig,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    depth_min: usize,
    #[arg(long, default_value_t = 6)]
    depth_max: usize,
    #[arg(long, default_value_t = 0.0)]
    dropout_min: f64,
    #[arg(long, default_value_t = 0.5)]
    dropout_max: f64,
    #[arg(long, default_value_t = 0.05)]
    dropout_step: f64,
    /// Grid report (JSON)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct EvalArgs {
    /// Checkpoint written by `train`
    #[arg(long)]
    model: PathBuf,
    /// Vocabulary JSON (default: the checkpoint's `.vocab.json` sidecar)
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_parser = parse_decode, default_value = "inverse_only")]
    decode: DecodeStrategy,
    /// Predictions output, one `id<TAB>label` line per sentence
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Score report output (JSON)
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Gold labels: `id<TAB>label` lines or a SemEval-format file
    #[arg(long)]
    gold: PathBuf,
    /// Predicted `id<TAB>label` lines
    #[arg(long)]
    pred: PathBuf,
    /// Print the report as JSON instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[command(flatten)]
    inputs: Inputs,
    /// Sentence ids to trace (default: all)
    #[arg(long, value_delimiter = ',')]
    ids: Vec<u64>,
    /// Trace every channel instead of the word channel only
    #[arg(long)]
    all_channels: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Sentences checked; the first has a single-token sub-path
    #[arg(long, default_value_t = 5)]
    sentences: usize,
    /// Parameters checked per sentence
    #[arg(long, default_value_t = 40)]
    coordinates: usize,
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 8000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    first_id: u64,
    /// Receives corpus.txt, parses.tsv and hypernyms.tsv
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug)]
pub struct CliError {
    kind: ErrorKind,
    message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Usage,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Data,
            message: message.into(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Usage => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numerical => 4,
        }
    }

    fn line(&self) -> String {
        let kind = match self.kind {
            ErrorKind::Usage => "usage",
            ErrorKind::Data => "data",
            ErrorKind::Numerical => "numerical",
        };
        let message: String = self
            .message
            .chars()
            .map(|c| if c == '\n' || c == '\t' { ' ' } else { c })
            .collect();
        format!("error\tkind={kind}\texit={}\t{}", self.exit_code(), message.trim())
    }
}

impl From<drnn::Error> for CliError {
    fn from(e: drnn::Error) -> Self {
        CliError {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(
                e.kind(),
                K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                e.exit();
            }
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            let err = CliError::usage(first.trim_start_matches("error: "));
            eprintln!("{}", err.line());
            return ExitCode::from(err.exit_code());
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Augment(a) => augment(a),
        Command::Train(a) => train(a),
        Command::Gridsearch(a) => gridsearch(a),
        Command::Eval(a) => eval(a),
        Command::Score(a) => score_cmd(a),
        Command::Trace(a) => trace(a),
        Command::Gradcheck(a) => gradcheck(a),
        Command::Synth(a) => synth_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code())
        }
    }
}

fn require_file<'a>(flag: &str, path: Option<&'a Path>) -> CliResult<&'a Path> {
    let path = path.ok_or_else(|| CliError::usage(format!("missing required flag {flag}")))?;
    if !path.is_file() {
        return Err(CliError::usage(format!("{flag}: no such file: {}", path.display())));
    }
    Ok(path)
}

fn check_inputs(inputs: &Inputs) -> CliResult {
    if inputs.interchange.is_some() {
        require_file("--interchange", inputs.interchange.as_deref())?;
        return Ok(());
    }
    if inputs.corpus.is_none() && inputs.parses.is_none() {
        return Err(CliError::usage("missing input: pass --corpus and --parses, or --interchange"));
    }
    require_file("--corpus", inputs.corpus.as_deref())?;
    require_file("--parses", inputs.parses.as_deref())?;
    if inputs.hypernyms.is_some() {
        require_file("--hypernyms", inputs.hypernyms.as_deref())?;
    }
    Ok(())
}

fn load_sentences(inputs: &Inputs) -> CliResult<Vec<AnnotatedSentence>> {
    check_inputs(inputs)?;
    if let Some(path) = &inputs.interchange {
        return Ok(load_interchange(path)?);
    }
    let examples = load_semeval(inputs.corpus.as_deref().expect("checked"))?;
    let parses = load_parses(inputs.parses.as_deref().expect("checked"))?;
    let lexicon = match &inputs.hypernyms {
        Some(path) => HypernymLexicon::load(path)?,
        None => HypernymLexicon::default(),
    };
    Ok(annotate(&examples, &parses, &lexicon)?)
}

fn create_parent(path: &Path) -> CliResult {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir)
            .map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display()))),
        _ => Ok(()),
    }
}

fn write_file(path: &Path, content: impl AsRef<[u8]>) -> CliResult {
    create_parent(path)?;
    fs::write(path, content).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, content: &str) -> CliResult {
    match out {
        Some(path) => write_file(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// `model.ckpt` → `model.ckpt.<suffix>`
fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = OsString::from(path.as_os_str());
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn to_samples(sentences: &[AnnotatedSentence], vocab: &Vocabulary) -> Vec<SdpSample> {
    sentences.iter().map(|s| extract_sdp(s, vocab)).collect()
}

fn ingest(a: IngestArgs) -> CliResult {
    let sentences = load_sentences(&a.inputs)?;
    emit(a.out.as_deref(), &write_interchange(&sentences))?;
    eprintln!("ingest: {} sentences", sentences.len());
    Ok(())
}

fn augment(a: AugmentArgs) -> CliResult {
    let mode: AugmentMode = a.mode.parse()?;
    let input = require_file("--input", Some(&a.input))?;
    let sentences = load_interchange(input)?;
    let out = augment_sentences(&sentences, mode)?;
    emit(a.out.as_deref(), &write_interchange(&out))?;
    eprintln!("augment ({}): {} -> {} sentences", mode.name(), sentences.len(), out.len());
    Ok(())
}

fn resolve_run(run: RunConfig, config: Option<&Path>) -> CliResult<RunConfig> {
    let merged = match config {
        Some(path) => run.or(RunConfig::load(path)?),
        None => run,
    };
    Ok(merged.with_defaults())
}

struct Prepared {
    dataset: Dataset,
    vocab: Vocabulary,
    vectors: Option<WordVectors>,
}

/// Validate every path, then load, split and index the data.
fn prepare(run: &RunConfig, word_dim: usize) -> CliResult<Prepared> {
    check_inputs(&run.inputs)?;
    let embeddings = match (&run.embeddings, run.random_embeddings) {
        (Some(p), _) => Some(require_file("--embeddings", Some(p))?),
        (None, true) => None,
        (None, false) => {
            return Err(CliError::usage(
                "missing required flag --embeddings (pass --random-embeddings to train without one)",
            ))
        }
    };
    if let Some(p) = &run.split_file {
        require_file("--split-file", Some(p))?;
    }

    let sentences = load_sentences(&run.inputs)?;
    let ids = match &run.split_file {
        Some(p) => Some(read_ids(p)?),
        None => None,
    };
    let validation_size = run.validation_size.expect("resolved");
    let (train_s, val_s) = split_validation(sentences, validation_size, ids.as_ref())?;
    let vectors = embeddings.map(|p| WordVectors::load(p, word_dim)).transpose()?;
    let vocab = build_vocab(&train_s, &val_s, vectors.as_ref())?;
    Ok(Prepared {
        dataset: Dataset {
            train: to_samples(&train_s, &vocab),
            validation: to_samples(&val_s, &vocab),
        },
        vocab,
        vectors,
    })
}

fn read_ids(path: &Path) -> CliResult<HashSet<u64>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| CliError::data(format!("{}:{}: bad sentence id `{}`", path.display(), i + 1, l.trim())))
        })
        .collect()
}

fn init_params(model: &ModelConfig, prepared: &Prepared, seed: u64) -> drnn::Result<ModelParams> {
    let mut params = ModelParams::init_seeded(model, prepared.vocab.sizes(), seed)?;
    if let Some(v) = &prepared.vectors {
        params.load_word_vectors(&prepared.vocab, v)?;
    }
    Ok(params)
}

fn train(a: TrainArgs) -> CliResult {
    let run = resolve_run(a.run, a.config.as_deref())?;
    let config = run.train_config()?;
    let prepared = prepare(&run, config.model.word_dim)?;
    eprintln!(
        "train: {} training / {} validation sentences, vocabulary sizes {:?}",
        prepared.dataset.train.len(),
        prepared.dataset.validation.len(),
        prepared.vocab.sizes()
    );
    let params = init_params(&config.model, &prepared, config.seed)?;
    create_parent(&a.out)?;
    println!("epoch\tloss\tval_f1");
    let outcome = train_with_progress(&prepared.dataset, &config, params, |r| {
        let f1 = r.val_f1.map_or_else(|| "-".to_string(), |f| format!("{f:.2}"));
        println!("{}\t{:.6}\t{f1}", r.epoch, r.loss);
    })?;

    checkpoint::save(&a.out, &config.model, &prepared.vocab, &outcome.params)?;
    write_file(&sidecar(&a.out, "vocab.json"), prepared.vocab.to_json()?)?;
    write_file(
        &sidecar(&a.out, "report.json"),
        serde_json::to_string_pretty(&outcome.report).expect("report serializes"),
    )?;
    write_file(&sidecar(&a.out, "run.toml"), run.to_toml())?;
    let f1 = outcome.report.best_val_f1.map_or_else(|| "-".to_string(), |f| format!("{f:.2}"));
    eprintln!(
        "train: best epoch {} (validation macro-F1 {f1}); checkpoint {}",
        outcome.report.best_epoch,
        a.out.display()
    );
    Ok(())
}

fn dropout_grid(min: f64, max: f64, step: f64) -> CliResult<Vec<f64>> {
    let steps = |x: f64, flag: &str| {
        let k = (x * 20.0).round();
        if (x * 20.0 - k).abs() > 1e-9 || !(0.0..=19.0).contains(&k) {
            Err(CliError::usage(format!("{flag} must be a multiple of 0.05 in [0, 0.95], got {x}")))
        } else {
            Ok(k as usize)
        }
    };
    let (lo, hi, by) = (
        steps(min, "--dropout-min")?,
        steps(max, "--dropout-max")?,
        steps(step, "--dropout-step")?,
    );
    if by == 0 || lo > hi {
        return Err(CliError::usage("dropout range is empty"));
    }
    Ok((lo..=hi).step_by(by).map(|k| k as f64 / 20.0).collect())
}

fn gridsearch(a: GridArgs) -> CliResult {
    if a.depth_min == 0 || a.depth_min > a.depth_max || a.depth_max > drnn::model::MAX_DEPTH {
        return Err(CliError::usage(format!(
            "depth range must satisfy 1 <= --depth-min <= --depth-max <= {}",
            drnn::model::MAX_DEPTH
        )));
    }
    let dropouts = dropout_grid(a.dropout_min, a.dropout_max, a.dropout_step)?;
    let depths: Vec<usize> = (a.depth_min..=a.depth_max).collect();
    let run = resolve_run(a.run, a.config.as_deref())?;
    let base = run.train_config()?;
    let prepared = prepare(&run, base.model.word_dim)?;
    let report = select_hyperparams(&prepared.dataset, &base, &depths, &dropouts, |m| {
        init_params(m, &prepared, base.seed)
    })?;
    println!("depth\tdropout\tval_f1\tbest_epoch");
    for p in &report.points {
        println!("{}\t{:.2}\t{:.2}\t{}", p.depth, p.dropout_rate, p.val_f1, p.best_epoch);
    }
    eprintln!("gridsearch: selected depth {} dropout {:.2}", report.depth, report.dropout_rate);
    if let Some(out) = &a.out {
        write_file(out, serde_json::to_string_pretty(&report).expect("report serializes"))?;
        write_file(&sidecar(out, "run.toml"), run.to_toml())?;
    }
    Ok(())
}

fn load_model(model: &Path, vocab: Option<&Path>) -> CliResult<(Vocabulary, ModelConfig, ModelParams)> {
    require_file("--model", Some(model))?;
    let vocab_path = vocab.map_or_else(|| sidecar(model, "vocab.json"), Path::to_path_buf);
    require_file("--vocab", Some(&vocab_path))?;
    let text = fs::read_to_string(&vocab_path)
        .map_err(|e| CliError::data(format!("{}: {e}", vocab_path.display())))?;
    let vocab = Vocabulary::from_json(&text)?;
    let (config, params) = checkpoint::load(model, &vocab, None)?;
    Ok((vocab, config, params))
}

fn eval(a: EvalArgs) -> CliResult {
    check_inputs(&a.inputs)?;
    let (vocab, config, params) = load_model(&a.model, a.vocab.as_deref())?;
    let sentences = load_sentences(&a.inputs)?;
    let samples = to_samples(&sentences, &vocab);
    let pred = predict(&samples, &params, &config, a.decode)?;
    let gold: Vec<RelationLabel> = samples.iter().map(|s| s.label).collect();
    let report = score(&gold, &pred)?;
    if let Some(path) = &a.predictions {
        let rows: Vec<_> = samples.iter().map(|s| s.id).zip(pred.iter().copied()).collect();
        write_file(path, write_predictions(&rows))?;
        write_file(&sidecar(path, "run.toml"), toml::to_string(&a).expect("arguments serialize"))?;
    }
    if let Some(path) = &a.report {
        write_file(path, serde_json::to_string_pretty(&report).expect("report serializes"))?;
    }
    print!("{}", report.to_text());
    Ok(())
}

fn read_gold(path: &Path) -> CliResult<Vec<(u64, RelationLabel)>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let origin = path.display().to_string();
    let semeval = text.lines().find(|l| !l.trim().is_empty()).is_some_and(|l| l.contains('"'));
    if semeval {
        Ok(parse_semeval(&text, &origin)?.into_iter().map(|e| (e.id, e.label)).collect())
    } else {
        Ok(parse_predictions(&text, &origin)?)
    }
}

fn score_cmd(a: ScoreArgs) -> CliResult {
    require_file("--gold", Some(&a.gold))?;
    require_file("--pred", Some(&a.pred))?;
    let gold = read_gold(&a.gold)?;
    let text = fs::read_to_string(&a.pred).map_err(|e| CliError::data(format!("{}: {e}", a.pred.display())))?;
    let pred = parse_predictions(&text, &a.pred.display().to_string())?;
    let mut by_id: HashMap<u64, RelationLabel> = HashMap::with_capacity(pred.len());
    for (id, label) in pred {
        if by_id.insert(id, label).is_some() {
            return Err(CliError::data(format!("duplicate prediction for id {id}")));
        }
    }
    if by_id.len() != gold.len() {
        return Err(CliError::data(format!("{} gold labels but {} predictions", gold.len(), by_id.len())));
    }
    let predicted = gold
        .iter()
        .map(|(id, _)| by_id.get(id).copied().ok_or_else(|| CliError::data(format!("no prediction for id {id}"))))
        .collect::<CliResult<Vec<_>>>()?;
    let labels: Vec<RelationLabel> = gold.iter().map(|(_, l)| *l).collect();
    let report = score(&labels, &predicted)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print!("{}", report.to_text());
    }
    Ok(())
}

fn trace(a: TraceArgs) -> CliResult {
    check_inputs(&a.inputs)?;
    let (vocab, config, params) = load_model(&a.model, a.vocab.as_deref())?;
    let sentences = load_sentences(&a.inputs)?;
    let wanted: HashSet<u64> = a.ids.iter().copied().collect();
    let selected: Vec<&AnnotatedSentence> = sentences
        .iter()
        .filter(|s| wanted.is_empty() || wanted.contains(&s.id))
        .collect();
    if let Some(missing) = a.ids.iter().find(|id| !selected.iter().any(|s| s.id == **id)) {
        return Err(CliError::data(format!("sentence {missing} not found in the input")));
    }
    let channels: &[Channel] = if a.all_channels { &Channel::ALL } else { &[Channel::Word] };
    let traces = selected
        .iter()
        .map(|s| {
            let mut t = pooling_trace(&extract_sdp(s, &vocab), &params, &config, &vocab, channels)?;
            (t.left_tokens, t.right_tokens) = surface_tokens(s);
            Ok(t)
        })
        .collect::<drnn::Result<Vec<_>>>()?;
    let json = serde_json::to_string_pretty(&traces).expect("traces serialize");
    emit(a.out.as_deref(), &(json + "\n"))
}

fn gradcheck(a: GradcheckArgs) -> CliResult {
    if !(1..=drnn::model::MAX_DEPTH).contains(&a.depth) {
        return Err(CliError::usage(format!("--depth must be in 1..={}", drnn::model::MAX_DEPTH)));
    }
    if a.sentences == 0 || a.coordinates == 0 {
        return Err(CliError::usage("--sentences and --coordinates must be positive"));
    }
    let corpus = synth::generate(200, a.seed, 1).annotate()?;
    let vocab = build_vocab(&corpus, &[], None)?;
    let samples = to_samples(&corpus, &vocab);
    let single = samples
        .iter()
        .position(|s| s.left.len() == 1 || s.right.len() == 1)
        .ok_or_else(|| CliError::data("no sentence with a single-token sub-path"))?;
    let mut picked = vec![samples[single].clone()];
    for k in 1..a.sentences {
        picked.push(samples[(mix_seed(a.seed, k as u64) % samples.len() as u64) as usize].clone());
    }
    let config = ModelConfig {
        depth: a.depth,
        ..ModelConfig::default()
    };
    let mut params = ModelParams::init_seeded(&config, vocab.sizes(), a.seed)?;
    let report = check_gradients(&picked, &mut params, &config, a.epsilon, a.coordinates, a.seed)?;
    println!("depth\t{}", a.depth);
    println!("checked\t{}", report.checked);
    println!("resampled\t{}", report.resampled);
    println!("max_relative_error\t{:.3e}", report.max_relative_error);
    if report.max_relative_error < GRADCHECK_THRESHOLD {
        println!("PASS");
        Ok(())
    } else {
        println!("FAIL");
        Err(CliError {
            kind: ErrorKind::Numerical,
            message: format!(
                "max relative error {:.3e} is not below {GRADCHECK_THRESHOLD:e}",
                report.max_relative_error
            ),
        })
    }
}

fn synth_cmd(a: SynthArgs) -> CliResult {
    fs::create_dir_all(&a.out_dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", a.out_dir.display())))?;
    let corpus = synth::generate(a.n, a.seed, a.first_id);
    write_file(&a.out_dir.join("corpus.txt"), corpus.semeval_text())?;
    write_file(&a.out_dir.join("parses.tsv"), corpus.parses_text())?;
    write_file(&a.out_dir.join("hypernyms.tsv"), corpus.hypernyms_text())?;
    eprintln!("synth: {} sentences in {}", a.n, a.out_dir.display());
    Ok(())
}
