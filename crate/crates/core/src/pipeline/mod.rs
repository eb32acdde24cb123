//! End-to-end runs: ingest or generate a trace, sample a cohort, and for each
//! nested window build profiles, similarities, graphs, communities, metrics
//! and a dendrogram, then write the report files.

mod config;
mod report;
mod run;

pub use config::{AnalysisConfig, InputSource, OutputConfig, PipelineConfig, Preset};
pub use report::{compare, generate, write_generated, write_reports, Comparison};
pub use run::{
    run_pipeline, CutSummary, GraphReport, GraphSummary, ReportBundle, RunMetadata, WindowReport,
    WindowSummary, METRICS_HEADER,
};
