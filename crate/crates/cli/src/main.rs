//! Command-line front end: train and run parsers and taggers, score
//! predictions, verify the oracle, and generate synthetic corpora.
//!
//! Every knob that affects training is a flag here; all randomness is
//! derived from `--seed`, so identical invocations write byte-identical
//! model files. Log verbosity is controlled by `RUST_LOG` (default info).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use l2s::parser::check_random_trees;
use l2s::{
    datagen, load_parser, load_tagger, read_file, read_tagged, save_parser, save_tagger, score,
    train, write_sentences, write_tagged, DepParser, FeatureSet, LearnerConfig,
    LearnerKind, ParserSettings, PassReport, PolicyModel, PosColumn, RollMode, SeqTagger,
    TrainSettings,
};

#[derive(Parser)]
#[command(name = "l2s", version, about = "Learning-to-search dependency parser and tagger")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a dependency parser on a CoNLL-X treebank
    Train(TrainArgs),
    /// Parse a CoNLL-X file with a trained model
    Parse(ParseArgs),
    /// Score predicted trees against gold trees (UAS/LAS)
    Eval(EvalArgs),
    /// Verify the dynamic oracle against brute-force search
    OracleCheck(OracleCheckArgs),
    /// Train a sequence tagger on two-column data
    TagTrain(TagTrainArgs),
    /// Tag a two-column file with a trained model
    TagPredict(TagPredictArgs),
    /// Print a summary of a model file
    Inspect(InspectArgs),
    /// Write a synthetic corpus for experiments
    GenData(GenDataArgs),
}

/// Knobs consumed by the search engine; shared by both trainers.
#[derive(Args)]
struct EngineArgs {
    /// Training passes over the data
    #[arg(long, default_value_t = 5)]
    passes: usize,
    /// Rollin mixture decay rate, in (0, 1)
    #[arg(long, default_value_t = 1e-5)]
    alpha: f64,
    /// Rollin policy: reference, learned, or mixture
    #[arg(long, default_value = "mixture", value_parser = parse_roll)]
    rollin: RollMode,
    /// Rollout policy: reference, learned, or mixture
    #[arg(long, default_value = "reference", value_parser = parse_roll)]
    rollout: RollMode,
    /// Start the mixture at the learned policy and anneal toward reference
    #[arg(long)]
    flip_schedule: bool,
    /// Deviate at every k-th rollin step
    #[arg(long, default_value_t = 1)]
    deviation_stride: usize,
    /// Price deviations by re-executing rollouts even when a closed form exists
    #[arg(long)]
    exact_rollouts: bool,
    /// Past actions fed back as features
    #[arg(long, default_value_t = 1)]
    history: usize,
    /// Master random seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl EngineArgs {
    fn settings(&self) -> Result<TrainSettings> {
        if self.passes == 0 {
            bail!("--passes must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            bail!("--alpha must lie strictly between 0 and 1, got {}", self.alpha);
        }
        if self.deviation_stride == 0 {
            bail!("--deviation-stride must be at least 1");
        }
        Ok(TrainSettings {
            passes: self.passes,
            rollin: self.rollin,
            rollout: self.rollout,
            alpha: self.alpha,
            flip_schedule: self.flip_schedule,
            deviation_stride: self.deviation_stride,
            exact_rollouts: self.exact_rollouts,
            history: self.history,
            seed: self.seed,
        })
    }
}

/// Base-learner configuration; shared by both trainers.
#[derive(Args)]
struct LearnerArgs {
    /// Base learner: sgd, sgd+, nn, nn+ftrl, or multiclass
    #[arg(long, default_value = "nn+ftrl", value_parser = parse_learner)]
    learner: LearnerKind,
    /// Hidden units for the neural learners
    #[arg(long, default_value_t = 5)]
    hidden: usize,
    /// Weight-table width: 2^bits entries per class
    #[arg(long, default_value_t = 18)]
    bits: u8,
    /// Step size for sgd, sgd+, and nn
    #[arg(long, default_value_t = 0.5)]
    learning_rate: f32,
    /// FTRL per-coordinate step scale
    #[arg(long, default_value_t = 0.1)]
    ftrl_alpha: f32,
    /// FTRL step-size smoothing
    #[arg(long, default_value_t = 1.0)]
    ftrl_beta: f32,
    /// FTRL L1 penalty
    #[arg(long, default_value_t = 0.0)]
    ftrl_l1: f32,
    /// FTRL L2 penalty
    #[arg(long, default_value_t = 0.0)]
    ftrl_l2: f32,
}

impl LearnerArgs {
    fn config(&self, seed: u64) -> LearnerConfig {
        LearnerConfig {
            kind: self.learner,
            bits: self.bits,
            hidden: self.hidden,
            learning_rate: self.learning_rate,
            ftrl_alpha: self.ftrl_alpha,
            ftrl_beta: self.ftrl_beta,
            ftrl_l1: self.ftrl_l1,
            ftrl_l2: self.ftrl_l2,
            seed,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Training treebank (CoNLL-X)
    #[arg(long)]
    data: PathBuf,
    /// Where to write the model
    #[arg(long)]
    model: PathBuf,
    /// Feature tier: uni, uni+bi, or full
    #[arg(long, default_value = "full", value_parser = parse_feature_set)]
    feature_set: FeatureSet,
    /// Predict heads only, no dependency labels
    #[arg(long)]
    unlabeled: bool,
    /// Part-of-speech column: fine or coarse
    #[arg(long, default_value = "fine", value_parser = parse_pos_column)]
    pos_column: PosColumn,
    /// Dependency label reserved for root attachments (default: most frequent)
    #[arg(long)]
    root_label: Option<String>,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    learner: LearnerArgs,
}

#[derive(Args)]
struct ParseArgs {
    /// Trained parser model
    #[arg(long)]
    model: PathBuf,
    /// Input treebank (CoNLL-X; heads and labels are ignored)
    #[arg(long)]
    data: PathBuf,
    /// Output path (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Assert the model's feature tier; decoding is refused on mismatch
    #[arg(long, value_parser = parse_feature_set)]
    feature_set: Option<FeatureSet>,
}

#[derive(Args)]
struct EvalArgs {
    /// Gold treebank
    #[arg(long)]
    gold: PathBuf,
    /// Predicted trees for the same sentences
    #[arg(long)]
    pred: PathBuf,
    /// Count punctuation tokens too (excluded by default)
    #[arg(long)]
    include_punct: bool,
    /// Print one machine-readable line instead of the table
    #[arg(long)]
    machine: bool,
}

#[derive(Args)]
struct OracleCheckArgs {
    /// Random gold trees to sweep
    #[arg(long, default_value_t = 500)]
    cases: usize,
    /// Longest sentence to generate
    #[arg(long, default_value_t = 6)]
    max_len: usize,
    /// Random seed for tree generation
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct TagTrainArgs {
    /// Training data (token TAB tag, blank line between sentences)
    #[arg(long)]
    data: PathBuf,
    /// Where to write the model
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    learner: LearnerArgs,
}

#[derive(Args)]
struct TagPredictArgs {
    /// Trained tagger model
    #[arg(long)]
    model: PathBuf,
    /// Input file (token TAB tag; tags are ignored)
    #[arg(long)]
    data: PathBuf,
    /// Output path (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    /// Model file to describe
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct GenDataArgs {
    /// Corpus family: treebank (CoNLL-X) or tagging (two-column)
    #[arg(long, default_value = "treebank")]
    kind: String,
    /// Sentences to generate
    #[arg(long, default_value_t = 100)]
    sentences: usize,
    /// Random seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_roll(s: &str) -> l2s::Result<RollMode> {
    s.parse()
}

fn parse_learner(s: &str) -> l2s::Result<LearnerKind> {
    s.parse()
}

fn parse_feature_set(s: &str) -> l2s::Result<FeatureSet> {
    s.parse()
}

fn parse_pos_column(s: &str) -> l2s::Result<PosColumn> {
    match s {
        "fine" => Ok(PosColumn::Fine),
        "coarse" => Ok(PosColumn::Coarse),
        other => Err(l2s::Error::Config(format!(
            "unknown pos column {other:?}; expected fine or coarse"
        ))),
    }
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        bail!("{what} file not found: {}", path.display());
    }
    Ok(())
}

/// The directory a new file will land in must already exist; catching
/// this before training starts beats catching it hours later.
fn require_writable_dir(path: &Path, what: &str) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        bail!(
            "{what} path {} points into a missing directory",
            path.display()
        );
    }
    Ok(())
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            require_writable_dir(p, "output")?;
            let file = File::create(p)
                .with_context(|| format!("cannot create output file {}", p.display()))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn print_pass(report: &PassReport, total: usize) {
    println!(
        "pass {:>3}/{}  mean rollin loss {:9.4}  p(reference) {:.4}  updates {}",
        report.pass + 1,
        total,
        report.mean_rollin_loss,
        report.reference_probability,
        report.updates
    );
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    require_file(&args.data, "data")?;
    require_writable_dir(&args.model, "model")?;
    let settings = args.engine.settings()?;

    let sentences = read_file(&args.data)?;
    let parser = DepParser::from_corpus(
        ParserSettings {
            bits: args.learner.bits,
            feature_set: args.feature_set,
            labeled: !args.unlabeled,
            pos_column: args.pos_column,
            root_label: args.root_label.clone(),
        },
        &sentences,
    )?;

    let mut instances = Vec::with_capacity(sentences.len());
    let mut skipped = 0usize;
    for sentence in &sentences {
        let inst = parser.instance(sentence, true)?;
        if inst.is_projective() {
            instances.push(inst);
        } else {
            skipped += 1;
        }
    }
    if instances.is_empty() {
        bail!(
            "no projective sentences in {} ({} skipped)",
            args.data.display(),
            skipped
        );
    }
    println!(
        "training on {} sentences ({} non-projective skipped), {} labels",
        instances.len(),
        skipped,
        parser.labels().len()
    );

    let mut policy = PolicyModel::new(args.learner.config(settings.seed), &parser.role_classes());
    train(&parser, &mut instances, &mut policy, &settings, |report| {
        print_pass(report, settings.passes);
    })?;

    save_parser(&args.model, &parser, &policy, settings.history)?;
    let bytes = std::fs::metadata(&args.model).map(|m| m.len()).unwrap_or(0);
    println!("wrote model to {} ({} bytes)", args.model.display(), bytes);
    Ok(())
}

fn cmd_parse(args: &ParseArgs) -> Result<()> {
    require_file(&args.model, "model")?;
    require_file(&args.data, "data")?;
    let model = load_parser(&args.model)?;

    let trained_set = model.parser.settings().feature_set;
    if let Some(requested) = args.feature_set {
        if requested != trained_set {
            bail!(
                "model {} was trained with feature set '{}'; refusing to decode as '{}'",
                args.model.display(),
                trained_set,
                requested
            );
        }
    }

    let sentences = read_file(&args.data)?;
    let mut parsed = Vec::with_capacity(sentences.len());
    for sentence in &sentences {
        parsed.push(model.parser.parse(&model.policy, sentence, model.history)?);
    }

    let mut out = open_output(args.output.as_deref())?;
    write_sentences(&mut out, &parsed)?;
    out.flush()?;
    log::info!("parsed {} sentences", parsed.len());
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    require_file(&args.gold, "gold")?;
    require_file(&args.pred, "pred")?;
    let gold = read_file(&args.gold)?;
    let pred = read_file(&args.pred)?;
    let report = score(&gold, &pred, !args.include_punct)?;
    if args.machine {
        println!("{}", report.machine_readable());
    } else {
        print!("{}", report.human_readable());
    }
    Ok(())
}

fn cmd_oracle_check(args: &OracleCheckArgs) -> Result<()> {
    if args.max_len == 0 {
        bail!("--max-len must be at least 1");
    }
    let report = check_random_trees(args.cases, args.max_len, args.seed)?;
    println!(
        "checked {} trees ({} configurations): oracle matches brute force everywhere",
        report.trees, report.configs
    );
    Ok(())
}

fn cmd_tag_train(args: &TagTrainArgs) -> Result<()> {
    require_file(&args.data, "data")?;
    require_writable_dir(&args.model, "model")?;
    let settings = args.engine.settings()?;

    let file = File::open(&args.data)
        .with_context(|| format!("cannot open data file {}", args.data.display()))?;
    let corpus = read_tagged(io::BufReader::new(file))?;
    if corpus.is_empty() {
        bail!("no sentences in {}", args.data.display());
    }

    let tagger = SeqTagger::from_corpus(args.learner.bits, &corpus)?;
    let mut instances = Vec::with_capacity(corpus.len());
    for sentence in &corpus {
        instances.push(tagger.instance(sentence, true)?);
    }
    println!(
        "training on {} sentences, {} tags",
        instances.len(),
        tagger.tags().len()
    );

    let mut policy = PolicyModel::new(args.learner.config(settings.seed), &tagger.role_classes());
    train(&tagger, &mut instances, &mut policy, &settings, |report| {
        print_pass(report, settings.passes);
    })?;

    save_tagger(&args.model, &tagger, &policy, settings.history)?;
    let bytes = std::fs::metadata(&args.model).map(|m| m.len()).unwrap_or(0);
    println!("wrote model to {} ({} bytes)", args.model.display(), bytes);
    Ok(())
}

fn cmd_tag_predict(args: &TagPredictArgs) -> Result<()> {
    require_file(&args.model, "model")?;
    require_file(&args.data, "data")?;
    let model = load_tagger(&args.model)?;

    let file = File::open(&args.data)
        .with_context(|| format!("cannot open data file {}", args.data.display()))?;
    let corpus = read_tagged(io::BufReader::new(file))?;

    let mut tagged = Vec::with_capacity(corpus.len());
    for sentence in &corpus {
        tagged.push(model.tagger.tag(&model.policy, sentence, model.history)?);
    }

    let mut out = open_output(args.output.as_deref())?;
    write_tagged(&mut out, &tagged)?;
    out.flush()?;
    log::info!("tagged {} sentences", tagged.len());
    Ok(())
}

fn describe_learner(config: &LearnerConfig) -> String {
    let mut s = config.kind.name().to_string();
    if matches!(config.kind, LearnerKind::Nn | LearnerKind::NnFtrl) {
        s.push_str(&format!(", {} hidden units", config.hidden));
    }
    s
}

fn cmd_inspect(args: &InspectArgs) -> Result<()> {
    require_file(&args.model, "model")?;

    match load_parser(&args.model) {
        Ok(model) => {
            let settings = model.parser.settings();
            println!("dependency parser model: {}", args.model.display());
            println!("  hash bits     {} ({} slots per class)", settings.bits, 1u64 << settings.bits);
            println!("  feature set   {}", settings.feature_set);
            if settings.labeled {
                println!("  labels        {} (root label {:?})",
                    model.parser.labels().len(),
                    model.parser.labels().name(model.parser.root_label()));
            } else {
                println!("  labels        none (heads only)");
            }
            println!("  pos column    {}", match settings.pos_column {
                PosColumn::Fine => "fine",
                PosColumn::Coarse => "coarse",
            });
            println!("  history       {}", model.history);
            println!("  learner       {}", describe_learner(model.policy.config()));
            println!("  roles         {}", model.parser.role_classes().len());
            return Ok(());
        }
        Err(l2s::Error::Model(msg)) if msg.contains("sequence tagger") => {}
        Err(e) => return Err(e.into()),
    }

    let model = load_tagger(&args.model)?;
    println!("sequence tagger model: {}", args.model.display());
    println!("  hash bits     {} ({} slots per class)", model.tagger.bits(), 1u64 << model.tagger.bits());
    println!("  tags          {}", model.tagger.tags().len());
    println!("  history       {}", model.history);
    println!("  learner       {}", describe_learner(model.policy.config()));
    Ok(())
}

fn cmd_gen_data(args: &GenDataArgs) -> Result<()> {
    if args.sentences == 0 {
        bail!("--sentences must be at least 1");
    }
    let mut out = open_output(args.output.as_deref())?;
    match args.kind.as_str() {
        "treebank" => {
            let bank = datagen::treebank(args.sentences, args.seed);
            write_sentences(&mut out, &bank)?;
        }
        "tagging" => {
            let corpus = datagen::tagging_corpus(args.sentences, args.seed);
            write_tagged(&mut out, &corpus)?;
        }
        other => bail!("unknown corpus kind {other:?}; expected treebank or tagging"),
    }
    out.flush()?;
    if let Some(path) = &args.output {
        log::info!("wrote {} sentences to {}", args.sentences, path.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Parse(args) => cmd_parse(args),
        Command::Eval(args) => cmd_eval(args),
        Command::OracleCheck(args) => cmd_oracle_check(args),
        Command::TagTrain(args) => cmd_tag_train(args),
        Command::TagPredict(args) => cmd_tag_predict(args),
        Command::Inspect(args) => cmd_inspect(args),
        Command::GenData(args) => cmd_gen_data(args),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        // `:#` prints the whole context chain on one line.
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
