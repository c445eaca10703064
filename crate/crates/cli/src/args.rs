use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use eventcause::annotation::{DEFAULT_ANNOTATORS_PER_PAIR, DEFAULT_ANNOTATORS_PER_TASK};

#[derive(Debug, Parser)]
#[command(
    name = "eventcause",
    version,
    about = "Event abstraction, causal graphs and abstract causal discovery"
)]
pub struct Cli {
    /// Write the run manifest here instead of next to the primary output.
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus with embeddings, paraphrase scores and latent types.
    Synth(SynthArgs),
    /// Cluster event mentions into abstract events.
    Cluster(ClusterArgs),
    /// Cluster, lift the causal graph and build the co-occurrence matrix.
    Pipeline(PipelineArgs),
    /// Cluster quality report.
    Metrics(MetricsArgs),
    /// Check clusters and graph against the mechanical quality criteria.
    Validate(ValidateArgs),
    /// Cluster-level graph: lifting, motif census, co-occurrence, frequent subgraphs.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// PC discovery over a co-occurrence file.
    Discover(DiscoverArgs),
    /// Human annotation queues, HTTP service and aggregation.
    #[command(subcommand)]
    Annotate(AnnotateCmd),
    /// Language-model QA and relation judgments.
    #[command(subcommand)]
    Qa(QaCmd),
    /// Re-run a recorded command and compare output digests.
    Replay(ReplayArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SimilarityInputs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// `d=<dim>` header, then `mention_id<TAB>values`.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// `id_a<TAB>id_b<TAB>prob` lines.
    #[arg(long)]
    pub paraphrases: Option<PathBuf>,
    /// Paraphrase probability for pairs missing from the file [default: 0.50 when no file is given].
    #[arg(long, value_name = "P")]
    pub phr_default: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterParams {
    #[arg(long, default_value = "0")]
    pub seed: u64,
    /// Similarity needed to join a pivot.
    #[arg(long, default_value = "0.70")]
    pub threshold: f64,
    /// Clusters smaller than this may be pruned.
    #[arg(long, default_value = "10")]
    pub min_size: usize,
    /// Small clusters whose best pairwise similarity is below this are pruned.
    #[arg(long, default_value = "0.50")]
    pub sim_floor: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value = "0")]
    pub seed: u64,
    #[arg(long, default_value = "8")]
    pub types: usize,
    #[arg(long, default_value = "30")]
    pub stories: usize,
    #[arg(long, default_value = "2")]
    pub pairs_per_story: usize,
    #[arg(long, default_value = "16")]
    pub dim: usize,
    #[arg(long, default_value = "0.15")]
    pub noise: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub inputs: SimilarityInputs,
    #[command(flatten)]
    pub params: ClusterParams,
    #[arg(long, default_value = "clusters.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub inputs: SimilarityInputs,
    #[command(flatten)]
    pub params: ClusterParams,
    /// Receives clusters.json, graph.tsv, cooccur.csv and the manifest.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricsArgs {
    #[arg(long)]
    pub clusters: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Enables silhouette and homogeneity.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub paraphrases: Option<PathBuf>,
    /// Paraphrase probability for pairs missing from the file [default: 0.50 when no file is given].
    #[arg(long, value_name = "P")]
    pub phr_default: Option<f64>,
    /// `mention_id<TAB>label` lines; enables ARI and NMI.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// `candidate<TAB>reference[<TAB>reference...]` lines; enables mean BLEU.
    #[arg(long)]
    pub bleu: Option<PathBuf>,
    /// `-` for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub clusters: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    /// Adds partition and lifting checks against the annotated relations.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum GraphCmd {
    /// Lift mention relations to a cluster edge list.
    Lift(LiftArgs),
    /// Count confounders, mediators and colliders.
    Census(CensusArgs),
    /// Stories x clusters co-occurrence matrix.
    Cooccur(CooccurArgs),
    /// Keep frequent clusters that still have an edge.
    Subgraph(SubgraphArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct LiftArgs {
    #[arg(long)]
    pub clusters: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "graph.tsv")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConventionArg {
    Standard,
    Unrestricted,
    Ordered,
    Unshielded,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct CensusArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub convention: ConventionArg,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CooccurArgs {
    #[arg(long)]
    pub clusters: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// 0/1 indicators instead of mention counts.
    #[arg(long)]
    pub binary: bool,
    #[arg(long, default_value = "cooccur.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SubgraphArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub cooccur: PathBuf,
    /// Clusters must appear in more than this many stories.
    #[arg(long)]
    pub min_df: usize,
    #[arg(long, default_value = "subgraph.tsv")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestArg {
    G2,
    Chi2,
}

#[derive(Debug, Args, Serialize)]
pub struct DiscoverArgs {
    /// Co-occurrence CSV; counts are binarized.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "g2")]
    pub test: TestArg,
    #[arg(long, default_value = "0.01")]
    pub alpha: f64,
    /// Largest conditioning set.
    #[arg(long, default_value = "3")]
    pub max_cond: usize,
    /// True edge list; enables the score report.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Score report destination when --truth is given.
    #[arg(long, default_value = "-")]
    pub report: PathBuf,
    #[arg(long, default_value = "cpdag.tsv")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum AnnotateCmd {
    /// Queue sub-clustering tasks for every cluster.
    Init(InitArgs),
    /// Queue three-way causal judgments for cluster pairs.
    Pairs(PairsArgs),
    /// Queue topic matching for outliers.
    Outliers(OutliersArgs),
    /// Serve the annotation HTTP API.
    Serve(ServeArgs),
    /// Fold the record log into agreement, decisions and unified sub-clusters.
    Aggregate(AggregateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct InitArgs {
    #[arg(long)]
    pub clusters: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub state_dir: PathBuf,
    /// Comma-separated annotator ids.
    #[arg(long, value_delimiter = ',', required = true)]
    pub annotators: Vec<String>,
    /// Clusters per batch.
    #[arg(long, default_value = "60")]
    pub batch_size: usize,
    #[arg(long, default_value_t = DEFAULT_ANNOTATORS_PER_TASK)]
    pub per_task: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PairsArgs {
    #[arg(long)]
    pub clusters: PathBuf,
    /// Candidate pairs taken from this edge list (e.g. a PC output or a lifted graph).
    #[arg(long)]
    pub graph: PathBuf,
    /// Enables context re-evaluation for split votes.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub state_dir: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub annotators: Vec<String>,
    #[arg(long, default_value = "60")]
    pub batch_size: usize,
    #[arg(long, default_value_t = DEFAULT_ANNOTATORS_PER_PAIR)]
    pub per_pair: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct OutliersArgs {
    #[arg(long)]
    pub clusters: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub state_dir: PathBuf,
    #[arg(long)]
    pub reviewer: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long)]
    pub state_dir: PathBuf,
    #[arg(long, default_value = "8080")]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
}

#[derive(Debug, Args, Serialize)]
pub struct AggregateArgs {
    #[arg(long)]
    pub state_dir: PathBuf,
    /// Seeds centroid selection when unifying sub-clusterings.
    #[arg(long, default_value = "0")]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum QaCmd {
    /// Multiple-choice cause/effect questions from a corpus.
    Build(QaBuildArgs),
    /// Positive and negative cluster pairs for relation judgments.
    Pairs(QaPairsArgs),
    /// Query a model for every item.
    Run(QaRunArgs),
    /// Score outcomes or a baseline.
    Score(QaScoreArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KindArg {
    Specific,
    Abstract,
}

#[derive(Debug, Args, Serialize)]
pub struct QaBuildArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value = "abstract")]
    pub kind: KindArg,
    /// `story_id<TAB>text` lines; replaces the story text, not the choices.
    #[arg(long)]
    pub story_paraphrases: Option<PathBuf>,
    /// `question_id<TAB>i,j,...` extra gold answers.
    #[arg(long)]
    pub extras: Option<PathBuf>,
    /// With --graph, attaches graph hints to questions.
    #[arg(long, requires = "graph")]
    pub clusters: Option<PathBuf>,
    #[arg(long, requires = "clusters")]
    pub graph: Option<PathBuf>,
    #[arg(long, default_value = "qa.jsonl")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct QaPairsArgs {
    #[arg(long)]
    pub clusters: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    /// Excludes negatives that share a story.
    #[arg(long)]
    pub cooccur: Option<PathBuf>,
    #[arg(long, default_value = "1000")]
    pub negatives: usize,
    #[arg(long, default_value = "0")]
    pub seed: u64,
    #[arg(long, default_value = "pairs.jsonl")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct QaRunArgs {
    #[arg(long)]
    pub items: PathBuf,
    #[arg(long, default_value = "abstract_cot")]
    pub template: String,
    /// Insert the graph hint line.
    #[arg(long)]
    pub with_cg: bool,
    /// Chat-completions base URL.
    #[arg(long, conflicts_with = "mock", required_unless_present = "mock")]
    pub endpoint: Option<String>,
    /// JSONL `{prompt, response}` table served instead of a live model.
    #[arg(long)]
    pub mock: Option<PathBuf>,
    /// Mock response for prompts missing from the table.
    #[arg(long, requires = "mock")]
    pub mock_default: Option<String>,
    #[arg(long, default_value = "gpt-4")]
    pub model: String,
    #[arg(long, default_value = "0")]
    pub temperature: f64,
    #[arg(long, default_value = "1024")]
    pub max_tokens: u32,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "EVENTCAUSE_API_KEY")]
    pub api_key_env: String,
    /// Requests in flight.
    #[arg(long, default_value = "4")]
    pub concurrency: usize,
    #[arg(long, default_value = "3")]
    pub retries: u32,
    #[arg(long, default_value = "outcomes.jsonl")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineArg {
    Random,
    Majority,
}

#[derive(Debug, Args, Serialize)]
pub struct QaScoreArgs {
    #[arg(long)]
    pub items: PathBuf,
    #[arg(long, required_unless_present = "baseline", conflicts_with = "baseline")]
    pub outcomes: Option<PathBuf>,
    /// Score a baseline on relation items instead of model outcomes.
    #[arg(long, value_enum)]
    pub baseline: Option<BaselineArg>,
    #[arg(long, default_value = "0")]
    pub seed: u64,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    pub manifest_file: PathBuf,
}
