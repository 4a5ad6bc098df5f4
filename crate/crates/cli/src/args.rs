use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use xppg_core::fusion::FusionMode;
use xppg_core::noise::SyntheticNoise;

#[derive(Debug, Parser)]
#[command(name = "xppg", version, about = "Reference-free speech severity scoring and evaluation")]
pub struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat `key = value` file supplying defaults for flags not given on the command line.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fuse per-utterance features into one vector per utterance.
    Fuse(FuseArgs),
    /// Fit the severity model on a corpus.
    Fit(FitArgs),
    /// Score a corpus with a fitted model.
    Score(ScoreArgs),
    /// Handcrafted acoustic measures from audio.
    Baseline(BaselineArgs),
    /// Phoneme error rates against reference transcriptions.
    Refmetric(RefmetricArgs),
    /// Mix every utterance with noise at one SNR.
    NoiseMix(NoiseMixArgs),
    /// Correlate score tables with ratings at speaker-timepoint level.
    Evaluate(EvaluateArgs),
    /// Correlation as a function of utterances per speaker.
    Subsample(SubsampleArgs),
    /// Train on each corpus and test on every corpus.
    CrossMatrix(CrossMatrixArgs),
    /// Generate the synthetic corpus with planted severity.
    SynthCorpus(SynthArgs),
    /// Rescore a corpus at several SNRs and compare with clean audio.
    NoiseSweep(NoiseSweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Args)]
pub struct Out {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Features {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory holding `<id>.xvec.xpgf` and `<id>.ppg.xpgf`.
    #[arg(long)]
    pub features: PathBuf,
}

#[derive(Debug, Args)]
pub struct Fusion {
    #[arg(long, default_value = "both")]
    pub mode: FusionMode,
    /// Highest PPG moment order (1..=5).
    #[arg(long, default_value_t = 1)]
    pub moments: usize,
}

#[derive(Debug, Args)]
pub struct Centering {
    #[arg(long, value_enum, default_value = "on")]
    pub centering: Switch,
}

#[derive(Debug, Args)]
pub struct Acoustic {
    #[arg(long)]
    pub frame_ms: Option<f64>,
    #[arg(long)]
    pub hop_ms: Option<f64>,
    #[arg(long)]
    pub f0_min: Option<f64>,
    #[arg(long)]
    pub f0_max: Option<f64>,
    #[arg(long)]
    pub voicing_threshold: Option<f64>,
    #[arg(long)]
    pub silence_threshold: Option<f64>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Noise {
    /// Directory of noise recordings.
    #[arg(long)]
    pub noise_dir: Option<PathBuf>,
    /// Generated noise instead of recordings.
    #[arg(long)]
    pub synthetic: Option<SyntheticNoise>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[command(flatten)]
    pub features: Features,
    #[command(flatten)]
    pub fusion: Fusion,
    #[command(flatten)]
    pub out: Out,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub features: Features,
    #[command(flatten)]
    pub fusion: Fusion,
    #[command(flatten)]
    pub centering: Centering,
    #[command(flatten)]
    pub out: Out,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub features: Features,
    #[command(flatten)]
    pub out: Out,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Comma-separated measure ids (default: all).
    #[arg(long, value_delimiter = ',')]
    pub measures: Vec<String>,
    #[command(flatten)]
    pub acoustic: Acoustic,
    #[command(flatten)]
    pub out: Out,
}

#[derive(Debug, Args)]
pub struct RefmetricArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Recognized phoneme sequences, one `<id>\t<symbols>` line per utterance.
    #[arg(long)]
    pub hyp: PathBuf,
    /// Symbol list for the consonant error rate.
    #[arg(long)]
    pub consonants: Option<PathBuf>,
    /// Symbol list for the /s/,/k/,/t/ error rate.
    #[arg(long)]
    pub skt: Option<PathBuf>,
    #[command(flatten)]
    pub out: Out,
}

#[derive(Debug, Args)]
pub struct NoiseMixArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub snr: f64,
    #[command(flatten)]
    pub noise: Noise,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub out: Out,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Score CSV files; columns are merged by utterance id.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub scores: Vec<PathBuf>,
    /// Optional subjects x raters CSV for inter-rater reliability.
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    #[command(flatten)]
    pub out: Out,
}

#[derive(Debug, Args)]
pub struct SubsampleArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, default_value = "xppg-pca")]
    pub method: String,
    /// Comma-separated utterance counts per group.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub out: Out,
}

#[derive(Debug, Args)]
pub struct CrossMatrixArgs {
    /// `NAME,MANIFEST,FEATURES`; repeat for each corpus.
    #[arg(long, required = true)]
    pub corpus: Vec<String>,
    /// Training corpus names (default: all).
    #[arg(long, value_delimiter = ',')]
    pub train: Vec<String>,
    /// Test corpus names (default: all).
    #[arg(long, value_delimiter = ',')]
    pub test: Vec<String>,
    #[command(flatten)]
    pub fusion: Fusion,
    #[command(flatten)]
    pub centering: Centering,
    #[command(flatten)]
    pub out: Out,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub speakers: usize,
    #[arg(long, default_value_t = 40)]
    pub utterances: usize,
    #[arg(long, default_value_t = 1)]
    pub timepoints: usize,
    #[command(flatten)]
    pub out: Out,
}

#[derive(Debug, Args)]
pub struct NoiseSweepArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-20,-10,0,10,20,40")]
    pub snr_grid: Vec<f64>,
    #[command(flatten)]
    pub noise: Noise,
    #[arg(long)]
    pub seed: u64,
    /// `xppg-pca` and/or acoustic measure ids.
    #[arg(long, value_delimiter = ',', default_value = "xppg-pca,wada-snr,hnr,cpp")]
    pub methods: Vec<String>,
    #[command(flatten)]
    pub fusion: Fusion,
    #[command(flatten)]
    pub centering: Centering,
    #[command(flatten)]
    pub acoustic: Acoustic,
    #[command(flatten)]
    pub out: Out,
}
