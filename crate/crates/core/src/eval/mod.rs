//! Statistics and experiment drivers.

mod cross;
mod report;
mod scorers;
mod stats;
mod subsample;
mod sweep;
mod table;

pub use cross::{run_cross_matrix, CorpusSpec, CrossCell};
pub use report::{
    evaluate_methods, summary_text, write_cross_csv, write_evaluation_csv, write_subsample_csv,
    write_sweep_csv, MethodResult,
};
pub use scorers::{
    acoustic_measures, undefined_as_missing, AcousticMeasure, AcousticScorer, AudioScorer,
    FusionSettings, PhonemeRecognizer, RecognizerScorer, RefMetric, XppgScorer, XPPG_METHOD,
};
pub use stats::{icc_2k, mean_squares, pearson, r_p_value, rmse, stars, Correlation, RatingsMatrix};
pub use subsample::{run_subsample_curve, SubsampleRow};
pub use sweep::{run_noise_sweep, SweepConfig, SweepRow};
pub use table::{
    aggregate, correlate_groups, format_score, read_scores_csv, write_scores_csv, GroupScore,
    ScoreRow, ScoreTable, UtteranceScores,
};
