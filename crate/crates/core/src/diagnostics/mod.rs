//! Traces of the outer loop, their CSV/JSON files, and numerical checks of
//! the convergence argument run against a finished trace.

mod checks;
mod export;
mod trace;

pub use checks::{
    check_retraction_nonexpansive, check_step2_bound, check_step3_decay, check_step4_vi,
    check_step5_convergence, detect_stall, proof_step_report, residual, ProofStepReport,
    ReportInputs, RetractionReport, Step2Report, Step3Report, Step4Report, DEFAULT_VI_TOL,
    VI_FIT_TOL,
};
pub use export::{export_trace, from_json, load_trace, read_csv, to_json, write_csv, TraceFormat};
pub use trace::{ConvergenceTrace, StepRecord, TraceMetadata, TRACE_SCHEMA};
