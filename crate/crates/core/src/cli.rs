//! The `heritage-kg` command line.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::clean::{apply_cleaning, profile_relations, profiles_csv, split_dataset, CardinalitySummary, CleaningPlan, DatasetSplit};
use crate::error::{Error, Result};
use crate::eval::{evaluate_split, metrics_csv, metrics_table, EvalReport};
use crate::extend::{
    audit_csv, default_subjects, find_relation, merge_extension, novelty_violations, read_audit, run_extension, Clients,
    ExtensionConfig, HttpClient, MatchScope, ReplayClient, WordVectorStore,
};
use crate::models::{read_checkpoint, train, write_checkpoint, write_loss_log, EmbeddingConfig, ModelKind};
use crate::report::{
    comparison_table, compute_precision, read_annotations, recover_ground_truth, recovery_csv, recovery_table,
    relation_mentions, taxonomy_distribution, RecoveryConfig, TaxonomyMap,
};
use crate::store::{
    compute_stats, parse_triples, resolve_entity, write_triples, CsvDialect, EntityId, Language, Lexicon, LexiconPaths,
    ParseSummary, RelationId, TripleSet,
};

pub const ENV_TEXT_ENDPOINT: &str = "HERITAGE_KG_TEXT_ENDPOINT";
pub const ENV_VISION_ENDPOINT: &str = "HERITAGE_KG_VISION_ENDPOINT";
pub const ENV_API_TOKEN: &str = "HERITAGE_KG_API_TOKEN";

#[derive(Debug, Parser)]
#[command(name = "heritage-kg", version, about = "Cultural-heritage knowledge graph toolkit")]
pub struct Cli {
    /// Run configuration (TOML). Relative paths inside it resolve against its directory.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: out]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for ranking and training-side parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = "info")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a triple file and its sidecars; write the collapsed triples.
    Ingest(DataArgs),
    /// Dataset characteristics and relation cardinalities.
    Stats(DataArgs),
    /// Remove duplicate, inverse, pattern-matched, listed and rare relations.
    Clean(CleanArgs),
    /// Seeded train/valid/test split.
    Split(SplitArgs),
    /// Train embedding models on a split.
    Train(TrainArgs),
    /// Raw and filtered link-prediction metrics.
    Eval(EvalArgs),
    /// Propose new objects for a relation with text and vision models.
    Extend(ExtendArgs),
    /// Ground-truth recovery and novelty re-check of an audit log.
    Validate(ValidateArgs),
    /// Annotation precision and taxonomy distributions.
    Report(ReportArgs),
}

#[derive(Debug, Args, Default)]
pub struct DataArgs {
    /// Triple CSV (from,rel,to).
    #[arg(long)]
    pub triples: Option<PathBuf>,
    /// Distribution root with text_data/ and images/.
    #[arg(long)]
    pub dataset_dir: Option<PathBuf>,
    #[arg(long)]
    pub entity_labels: Option<PathBuf>,
    #[arg(long)]
    pub relation_labels: Option<PathBuf>,
    #[arg(long)]
    pub descriptions_en: Option<PathBuf>,
    #[arg(long)]
    pub descriptions_fr: Option<PathBuf>,
    #[arg(long)]
    pub images: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Cleaning plan (TOML); defaults apply when absent.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Extra relations to remove, one per line.
    #[arg(long)]
    pub manual_list: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// train,valid,test fractions.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub ratios: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory holding train.csv, valid.csv and test.csv.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Model configuration files (TOML), one run each.
    #[arg(long = "model-config")]
    pub model_configs: Vec<PathBuf>,
    /// Models to train with their default settings.
    #[arg(long = "model")]
    pub models: Vec<ModelKind>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long = "checkpoint", required = true)]
    pub checkpoints: Vec<PathBuf>,
    /// Dataset name for the metrics table.
    #[arg(long)]
    pub dataset: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct EndpointArgs {
    #[arg(long)]
    pub text_endpoint: Option<String>,
    #[arg(long)]
    pub vision_endpoint: Option<String>,
    /// Directory of recorded responses (*.jsonl); no network is used.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    #[arg(long)]
    pub max_inflight: Option<usize>,
    #[arg(long)]
    pub lang: Option<Language>,
}

#[derive(Debug, Args)]
pub struct ExtendArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub endpoints: EndpointArgs,
    /// Target relation: IRI, property id or label.
    #[arg(long)]
    pub relation: Option<String>,
    /// Word vectors (word2vec text format).
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, value_parser = parse_scope)]
    pub scope: Option<MatchScope>,
    #[arg(long)]
    pub run_id: Option<String>,
    /// Subjects to process, one IRI per line; default all subjects of the relation.
    #[arg(long)]
    pub subjects: Option<PathBuf>,
    /// Process at most this many subjects.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub endpoints: EndpointArgs,
    #[arg(long)]
    pub relation: Option<String>,
    #[arg(long)]
    pub subjects: Option<PathBuf>,
    #[arg(long)]
    pub limit: Option<usize>,
    /// Audit log to re-check for novelty instead of querying models.
    #[arg(long)]
    pub audit: Option<PathBuf>,
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    #[arg(long)]
    pub tau: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Annotation CSVs (candidate,subject,relation,annotator,label).
    #[arg(long = "annotations")]
    pub annotations: Vec<PathBuf>,
    /// Taxonomy rules (category,keyword-or-IRI); the bundled rules otherwise.
    #[arg(long)]
    pub taxonomy_rules: Option<PathBuf>,
    #[arg(long)]
    pub relation: Option<String>,
    /// Audit log whose accepted candidates form the added-entity column.
    #[arg(long)]
    pub audit: Option<PathBuf>,
}

fn parse_scope(s: &str) -> std::result::Result<MatchScope, String> {
    match s {
        "relation" => Ok(MatchScope::Relation),
        "subject" => Ok(MatchScope::Subject),
        _ => Err(format!("expected relation or subject, got {s:?}")),
    }
}

/// Keys of the `--config` file. Command-line flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub triples: Option<PathBuf>,
    pub dataset_dir: Option<PathBuf>,
    pub entity_labels: Option<PathBuf>,
    pub relation_labels: Option<PathBuf>,
    pub descriptions_en: Option<PathBuf>,
    pub descriptions_fr: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub plan: Option<PathBuf>,
    pub ratios: Option<[f64; 3]>,
    pub split_dir: Option<PathBuf>,
    pub dataset_name: Option<String>,
    #[serde(default)]
    pub model_configs: Vec<PathBuf>,
    pub relation: Option<String>,
    pub tau: Option<f64>,
    pub lang: Option<Language>,
    pub vectors: Option<PathBuf>,
    pub text_endpoint: Option<String>,
    pub vision_endpoint: Option<String>,
    pub replay: Option<PathBuf>,
    pub max_inflight: Option<usize>,
    pub timeout_secs: Option<u64>,
    pub run_id: Option<String>,
    pub visual_relations: Option<Vec<String>>,
    pub taxonomy_rules: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        for p in [
            &mut cfg.out,
            &mut cfg.triples,
            &mut cfg.dataset_dir,
            &mut cfg.entity_labels,
            &mut cfg.relation_labels,
            &mut cfg.descriptions_en,
            &mut cfg.descriptions_fr,
            &mut cfg.images,
            &mut cfg.plan,
            &mut cfg.split_dir,
            &mut cfg.vectors,
            &mut cfg.replay,
            &mut cfg.taxonomy_rules,
        ] {
            fix(p);
        }
        for p in &mut cfg.model_configs {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    seed: u64,
}

impl Ctx {
    fn header(&self, command: &str) -> String {
        format!("# heritage-kg {command} seed={}\n", self.seed)
    }

    fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    fn write_set(&self, name: &str, set: &TripleSet) -> Result<PathBuf> {
        let path = self.out.join(name);
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_triples(set, std::io::BufWriter::new(file))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    fn load_data(&self, a: &DataArgs) -> Result<(TripleSet, ParseSummary, Lexicon)> {
        let c = &self.cfg;
        let dataset_dir = a.dataset_dir.clone().or_else(|| c.dataset_dir.clone());
        let triples = a
            .triples
            .clone()
            .or_else(|| c.triples.clone())
            .or_else(|| dataset_dir.as_ref().map(|d| d.join("triples.csv")))
            .ok_or_else(|| Error::Config("no triple file: pass --triples or set `triples`".into()))?;
        let (set, summary) = parse_triples(&triples, &CsvDialect::default())?;
        let mut paths = dataset_dir
            .as_deref()
            .map(LexiconPaths::from_distribution_dir)
            .unwrap_or_default();
        let pick = |flag: &Option<PathBuf>, key: &Option<PathBuf>| flag.clone().or_else(|| key.clone());
        if let Some(p) = pick(&a.entity_labels, &c.entity_labels) {
            paths.entity_labels = Some(p);
        }
        if let Some(p) = pick(&a.relation_labels, &c.relation_labels) {
            paths.relation_labels = Some(p);
        }
        for (lang, flag, key) in [
            (Language::En, &a.descriptions_en, &c.descriptions_en),
            (Language::Fr, &a.descriptions_fr, &c.descriptions_fr),
        ] {
            if let Some(p) = pick(flag, key) {
                paths.descriptions.retain(|(l, _)| *l != lang);
                paths.descriptions.push((lang, p));
            }
        }
        if let Some(p) = pick(&a.images, &c.images) {
            paths.image_dir = Some(p);
        }
        let lexicon = Lexicon::load(&set, &paths)?;
        for o in lexicon.orphans().iter().take(5) {
            log::warn!("{}: key {} not in the triple set", o.source.display(), o.key);
        }
        if lexicon.orphans().len() > 5 {
            log::warn!("{} orphan keys in total", lexicon.orphans().len());
        }
        Ok((set, summary, lexicon))
    }

    fn relation(&self, set: &TripleSet, lexicon: &Lexicon, flag: &Option<String>) -> Result<RelationId> {
        let key = flag
            .clone()
            .or_else(|| self.cfg.relation.clone())
            .ok_or_else(|| Error::Config("no relation: pass --relation".into()))?;
        find_relation(set, lexicon, &key).ok_or_else(|| Error::InvalidArgument(format!("unknown relation {key:?}")))
    }

    fn split_dir(&self, flag: &Option<PathBuf>) -> PathBuf {
        flag.clone().or_else(|| self.cfg.split_dir.clone()).unwrap_or_else(|| self.out.clone())
    }

    fn subjects(
        &self,
        set: &TripleSet,
        relation: RelationId,
        file: &Option<PathBuf>,
        limit: Option<usize>,
    ) -> Result<Vec<EntityId>> {
        let mut subjects = match file {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let mut out = Vec::new();
                for (i, line) in text.lines().enumerate() {
                    let key = line.trim();
                    if key.is_empty() || key.starts_with('#') {
                        continue;
                    }
                    out.push(
                        resolve_entity(set, key)
                            .ok_or_else(|| Error::parse(path, i as u64 + 1, format!("unknown entity {key}")))?,
                    );
                }
                out
            }
            None => default_subjects(set, relation),
        };
        if let Some(n) = limit {
            subjects.truncate(n);
        }
        Ok(subjects)
    }
}

/// Model clients for one run: recorded answers, or live endpoints.
pub struct ClientSet {
    replay: Option<ReplayClient>,
    text: Option<HttpClient>,
    vision: Option<HttpClient>,
}

impl ClientSet {
    pub fn clients(&self) -> Clients<'_> {
        match &self.replay {
            Some(r) => Clients {
                text: Some(r),
                vision: Some(r),
            },
            None => Clients {
                text: self.text.as_ref().map(|c| c as _),
                vision: self.vision.as_ref().map(|c| c as _),
            },
        }
    }

    /// Replay wins over live endpoints; passing both explicitly is an error.
    /// Endpoint flags fall back to the config file, then the environment.
    fn build(a: &EndpointArgs, cfg: &RunConfig) -> Result<Self> {
        let replay = a.replay.clone().or_else(|| cfg.replay.clone());
        let flag_endpoints = a.text_endpoint.is_some() || a.vision_endpoint.is_some();
        if let Some(dir) = replay {
            if flag_endpoints {
                return Err(Error::Config("--replay and live endpoints are mutually exclusive".into()));
            }
            let r = ReplayClient::from_dir(&dir)?;
            log::info!("replaying {} recorded answers from {}", r.len(), dir.display());
            return Ok(Self {
                replay: Some(r),
                text: None,
                vision: None,
            });
        }
        let env = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let token = env(ENV_API_TOKEN);
        let timeout = Duration::from_secs(cfg.timeout_secs.unwrap_or(120));
        let endpoint = |flag: &Option<String>, key: &Option<String>, var: &str| {
            flag.clone().or_else(|| key.clone()).or_else(|| env(var))
        };
        let make = |url: Option<String>| -> Result<Option<HttpClient>> {
            url.map(|u| HttpClient::new(u, token.clone(), timeout)).transpose()
        };
        let text = make(endpoint(&a.text_endpoint, &cfg.text_endpoint, ENV_TEXT_ENDPOINT))?;
        let vision = make(endpoint(&a.vision_endpoint, &cfg.vision_endpoint, ENV_VISION_ENDPOINT))?;
        if text.is_none() && vision.is_none() {
            return Err(Error::Config(format!(
                "no model endpoints: pass --replay, --text-endpoint/--vision-endpoint, or set {ENV_TEXT_ENDPOINT}/{ENV_VISION_ENDPOINT}"
            )));
        }
        Ok(Self {
            replay: None,
            text,
            vision,
        })
    }
}

/// Process exit code for an error category.
pub fn exit_code(err: &Error) -> i32 {
    match err.category() {
        "config" => 2,
        "io" => 3,
        "parse" => 4,
        "data" => 5,
        "model" => 6,
        "client" => 7,
        _ => 1,
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let _ = env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    if let Some(n) = cli.threads.or(cfg.threads) {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("global thread pool already initialised");
        }
    }
    let ctx = Ctx { cfg, out, seed };
    match &cli.command {
        Command::Ingest(a) => ingest(&ctx, a),
        Command::Stats(a) => stats(&ctx, a),
        Command::Clean(a) => clean(&ctx, a),
        Command::Split(a) => split(&ctx, a),
        Command::Train(a) => train_cmd(&ctx, a),
        Command::Eval(a) => eval_cmd(&ctx, a),
        Command::Extend(a) => extend(&ctx, a),
        Command::Validate(a) => validate(&ctx, a),
        Command::Report(a) => report(&ctx, a),
    }
}

fn ingest(ctx: &Ctx, a: &DataArgs) -> Result<()> {
    let (set, summary, lexicon) = ctx.load_data(a)?;
    ctx.write_set("triples.csv", &set)?;
    let mut text = ctx.header("ingest");
    text.push_str(&format!(
        "records                {}\ndistinct triples       {}\nheader row             {}\n\
         orphan sidecar keys    {}\nmultimodal (en)        {}\nmultimodal (fr)        {}\n",
        summary.records,
        summary.collapsed,
        summary.had_header,
        lexicon.orphans().len(),
        lexicon.multimodal_entities(&set, Language::En).len(),
        lexicon.multimodal_entities(&set, Language::Fr).len(),
    ));
    ctx.write("ingest.txt", text)?;
    Ok(())
}

fn stats(ctx: &Ctx, a: &DataArgs) -> Result<()> {
    let (set, _, _) = ctx.load_data(a)?;
    let stats = compute_stats(&set);
    let profiles = profile_relations(&set);
    let card = CardinalitySummary::from_profiles(&profiles);
    let mut text = ctx.header("stats");
    text.push_str(&stats.to_text());
    text.push_str(&format!(
        "{:<42}{:>12}\n{:<42}{:>12}\n{:<42}{:>12}\n{:<42}{:>12}\n",
        "1-1 relations", card.one_to_one, "1-n relations", card.one_to_many, "n-1 relations", card.many_to_one,
        "n-n relations", card.many_to_many
    ));
    print!("{text}");
    ctx.write("stats.txt", text)?;
    ctx.write("stats.csv", stats.to_csv())?;
    ctx.write("relation_frequencies.csv", stats.frequencies_csv())?;
    ctx.write("cardinality.csv", profiles_csv(&profiles))?;
    Ok(())
}

fn clean(ctx: &Ctx, a: &CleanArgs) -> Result<()> {
    let (set, _, lexicon) = ctx.load_data(&a.data)?;
    let mut plan = match a.plan.clone().or_else(|| ctx.cfg.plan.clone()) {
        Some(p) => CleaningPlan::from_file(&p)?,
        None => CleaningPlan::default(),
    };
    if let Some(list) = &a.manual_list {
        plan.manual_removals.extend(crate::clean::read_relation_list(list)?);
    }
    let (cleaned, report) = apply_cleaning(&set, &lexicon, &plan)?;
    ctx.write_set("cleaned.csv", &cleaned)?;
    let text = format!("{}{}", ctx.header("clean"), report.to_text());
    print!("{text}");
    ctx.write("cleaning_report.txt", text)?;
    ctx.write("cleaning_report.csv", report.to_csv())?;
    Ok(())
}

fn split(ctx: &Ctx, a: &SplitArgs) -> Result<()> {
    let (set, _, _) = ctx.load_data(&a.data)?;
    let ratios = match &a.ratios {
        Some(r) => [r[0], r[1], r[2]],
        None => ctx.cfg.ratios.unwrap_or([0.8, 0.1, 0.1]),
    };
    let s = split_dataset(&set, ratios, ctx.seed)?;
    s.write_dir(&ctx.out)?;
    let text = format!(
        "{}ratios {:?}\ntrain {}\nvalid {}\ntest {}\n",
        ctx.header("split"),
        ratios,
        s.train.len(),
        s.valid.len(),
        s.test.len()
    );
    ctx.write("split.txt", text)?;
    Ok(())
}

fn train_cmd(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    let split = DatasetSplit::load_dir(&ctx.split_dir(&a.split))?;
    let mut configs = Vec::new();
    for p in a.model_configs.iter().chain(&ctx.cfg.model_configs) {
        configs.push(EmbeddingConfig::from_file(p)?);
    }
    configs.extend(a.models.iter().map(|&k| EmbeddingConfig::defaults_for(k)));
    if configs.is_empty() {
        return Err(Error::Config("nothing to train: pass --model or --model-config".into()));
    }
    let mut summary = ctx.header("train");
    for mut cfg in configs {
        cfg.seed = ctx.seed;
        if let Some(e) = a.epochs {
            cfg.epochs = e;
        }
        cfg.validate()?;
        log::info!("training {} for {} epochs", cfg.model, cfg.epochs);
        let outcome = train(&split.train, &cfg)?;
        let name = cfg.model.name().to_lowercase();
        let path = ctx.out.join(format!("{name}.ckpt"));
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_checkpoint(&outcome.params, std::io::BufWriter::new(file))?;
        let mut log = Vec::new();
        write_loss_log(&outcome.losses, &mut log)?;
        ctx.write(&format!("{name}_loss.csv"), log)?;
        let last = outcome.losses.last().map_or(f64::NAN, |l| l.loss);
        summary.push_str(&format!("{name} epochs={} final_loss={last:.6}\n", cfg.epochs));
    }
    ctx.write("train.txt", summary)?;
    Ok(())
}

fn eval_cmd(ctx: &Ctx, a: &EvalArgs) -> Result<()> {
    let split = DatasetSplit::load_dir(&ctx.split_dir(&a.split))?;
    let dataset = a
        .dataset
        .clone()
        .or_else(|| ctx.cfg.dataset_name.clone())
        .unwrap_or_else(|| "dataset".into());
    let mut rows: Vec<(String, EvalReport)> = Vec::new();
    for p in &a.checkpoints {
        let file = fs::File::open(p).map_err(|e| Error::io(p, e))?;
        let params = read_checkpoint(std::io::BufReader::new(file))?;
        rows.push((params.kind.name().to_owned(), evaluate_split(&params, &split)?));
    }
    ctx.write("metrics.csv", metrics_csv(&dataset, &rows))?;
    let text = format!("{}{}", ctx.header("eval"), metrics_table(&rows));
    print!("{text}");
    ctx.write("metrics.txt", text)?;
    Ok(())
}

fn load_vectors(flag: &Option<PathBuf>, cfg: &RunConfig) -> Result<WordVectorStore> {
    let path = flag
        .clone()
        .or_else(|| cfg.vectors.clone())
        .ok_or_else(|| Error::Config("no word vectors: pass --vectors".into()))?;
    WordVectorStore::load(&path)
}

fn extend(ctx: &Ctx, a: &ExtendArgs) -> Result<()> {
    let (set, _, lexicon) = ctx.load_data(&a.data)?;
    let relation = ctx.relation(&set, &lexicon, &a.relation)?;
    let store = load_vectors(&a.vectors, &ctx.cfg)?;
    let clients = ClientSet::build(&a.endpoints, &ctx.cfg)?;
    let defaults = ExtensionConfig::default();
    let config = ExtensionConfig {
        tau: a.tau.or(ctx.cfg.tau).unwrap_or(defaults.tau),
        scope: a.scope.unwrap_or_default(),
        visual_relations: ctx.cfg.visual_relations.clone().unwrap_or(defaults.visual_relations.clone()),
        lang: a.endpoints.lang.or(ctx.cfg.lang).unwrap_or(Language::En),
        max_inflight: a.endpoints.max_inflight.or(ctx.cfg.max_inflight).unwrap_or(defaults.max_inflight),
        run_id: a
            .run_id
            .clone()
            .or_else(|| ctx.cfg.run_id.clone())
            .unwrap_or_else(|| format!("run{}", ctx.seed)),
        ..defaults
    };
    let subjects = ctx.subjects(&set, relation, &a.subjects, a.limit)?;
    let run = run_extension(&set, &lexicon, relation, &subjects, clients.clients(), &store, &config)?;
    ctx.write("audit.csv", audit_csv(&set, &run)?)?;
    let (merged, merged_lex, merge) = merge_extension(&set, &lexicon, &run.candidates, &config.namespace, &config.run_id)?;
    ctx.write_set("extended.csv", &merged)?;
    let mut labels = String::from("entity,label\n");
    for e in merged.entities() {
        if set.entity_id(merged.entity_iri(e)).is_none() {
            labels.push_str(&format!("{},{}\n", merged.entity_iri(e), csv_field(merged_lex.entity_label(e).unwrap_or(""))));
        }
    }
    ctx.write("extended_labels.csv", labels)?;
    let text = format!(
        "{}{}triples {} -> {}\nentities {} -> {}\nrelations {} -> {}\n",
        ctx.header("extend"),
        run.stats.to_text(&config.run_id),
        merge.triples_before,
        merge.triples_after,
        merge.entities_before,
        merge.entities_after,
        merge.relations_before,
        merge.relations_after,
    );
    print!("{text}");
    ctx.write("extension.txt", text)?;
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn validate(ctx: &Ctx, a: &ValidateArgs) -> Result<()> {
    let (set, _, lexicon) = ctx.load_data(&a.data)?;
    if let Some(audit) = &a.audit {
        let store = load_vectors(&a.vectors, &ctx.cfg)?;
        let tau = a.tau.or(ctx.cfg.tau).unwrap_or(0.4);
        let text = fs::read_to_string(audit).map_err(|e| Error::io(audit, e))?;
        let candidates = read_audit(&text, audit, &set)?;
        let bad = novelty_violations(&candidates, &set, &lexicon, &store, tau);
        let accepted = candidates.iter().filter(|c| c.status == crate::extend::CandidateStatus::Accepted).count();
        let mut report = format!("{}accepted {accepted}\nviolations {}\n", ctx.header("validate"), bad.len());
        for (c, n) in &bad {
            report.push_str(&format!("{} ~ {} ({:.6})\n", c.surface, n.surface, n.similarity));
        }
        print!("{report}");
        ctx.write("novelty.txt", report)?;
        if !bad.is_empty() {
            return Err(Error::InvalidArgument(format!("{} accepted candidates are not novel", bad.len())));
        }
        return Ok(());
    }
    let relation = ctx.relation(&set, &lexicon, &a.relation)?;
    let clients = ClientSet::build(&a.endpoints, &ctx.cfg)?;
    let subjects = ctx.subjects(&set, relation, &a.subjects, a.limit)?;
    let config = RecoveryConfig {
        lang: a.endpoints.lang.or(ctx.cfg.lang).unwrap_or(Language::En),
        max_inflight: a.endpoints.max_inflight.or(ctx.cfg.max_inflight).unwrap_or(4),
        ..RecoveryConfig::default()
    };
    let rep = recover_ground_truth(&set, &lexicon, relation, &subjects, clients.clients(), &config)?;
    ctx.write("recovery.csv", recovery_csv(&rep.results))?;
    let text = format!("{}{}", ctx.header("validate"), recovery_table(&rep.results));
    print!("{text}");
    ctx.write("recovery.txt", text)?;
    Ok(())
}

fn report(ctx: &Ctx, a: &ReportArgs) -> Result<()> {
    let mut wrote = false;
    if !a.annotations.is_empty() {
        let mut records = Vec::new();
        for p in &a.annotations {
            records.extend(read_annotations(p)?);
        }
        let rep = compute_precision(&records)?;
        ctx.write("precision.csv", rep.to_csv())?;
        let text = format!("{}precision {:.3}\n", ctx.header("report"), rep.average());
        print!("{text}");
        ctx.write("precision.txt", text)?;
        wrote = true;
    }
    let has_data = a.data.triples.is_some() || a.data.dataset_dir.is_some() || ctx.cfg.triples.is_some();
    if has_data {
        let (set, _, lexicon) = ctx.load_data(&a.data)?;
        let map = match a.taxonomy_rules.clone().or_else(|| ctx.cfg.taxonomy_rules.clone()) {
            Some(p) => TaxonomyMap::load(&p)?,
            None => TaxonomyMap::starter(),
        };
        let relation = ctx.relation(&set, &lexicon, &a.relation)?;
        let original = taxonomy_distribution(relation_mentions(&set, &lexicon, relation), &map);
        ctx.write("taxonomy_original.csv", original.to_csv())?;
        let added = match &a.audit {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let accepted: Vec<String> = read_audit(&text, path, &set)?
                    .into_iter()
                    .filter(|c| c.status == crate::extend::CandidateStatus::Accepted)
                    .map(|c| c.surface)
                    .collect();
                let d = taxonomy_distribution(accepted.iter().map(|s| (s.as_str(), None)), &map);
                ctx.write("taxonomy_added.csv", d.to_csv())?;
                Some(d)
            }
            None => None,
        };
        let table = match &added {
            Some(d) => comparison_table("original (%)", &original, "added (%)", d),
            None => comparison_table("original (%)", &original, "original (%)", &original),
        };
        let text = format!("{}{table}", ctx.header("report"));
        print!("{text}");
        ctx.write("taxonomy.txt", text)?;
        wrote = true;
    }
    if !wrote {
        return Err(Error::Config("nothing to report: pass --annotations and/or --triples with --relation".into()));
    }
    Ok(())
}
