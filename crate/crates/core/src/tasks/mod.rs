//! User-facing flows built on the inference engine.

pub mod detect;
pub mod impute;
pub mod phase;
pub mod pipeline;
pub mod recover;

pub use detect::{correct_errors, detect_errors, ErrorEntry, ErrorReport, DEFAULT_THRESHOLD};
pub use impute::{impute_untyped, plan_windows, ImputationResult, ImputedCall, Window, WindowSpec};
pub use phase::{phase_corpus, phase_decode, PhasedGenotype};
pub use pipeline::{run_pipeline, PipelineMode, PipelineParams, PipelineResult, StageReport};
pub use recover::{recover_missing, Fill, Recovery};
