//! Performance and language analyses over interaction logs.

pub mod accuracy;
pub mod divergence;
pub mod eval;
pub mod language;
pub mod logfile;
pub mod report;
pub mod table;

pub use accuracy::{marked_word_breakdown, role_accuracy, Estimate, MarkedBreakdown};
pub use eval::{regenerate_eval_utterances, sample_pairs, EvalPair, EvalRecord};
pub use logfile::{read_lines, write_lines, LogHeader, LogLine, OfflineRecord, LOG_FORMAT};
pub use report::compute_metrics;
pub use table::{MetricRow, MetricTable};

/// System name whose regenerated descriptions are the reference corpus.
pub const HUMAN_SYSTEM: &str = "human";
