//! Validation-gate engine for software products checked against the
//! quality-criteria catalogue.

pub mod context;
pub mod deploy;
pub mod error;
pub mod exec;
pub mod functest;
pub mod infomodel;
pub mod pipeline;
pub mod product;
pub mod qc;
pub mod report;
pub mod repo;
pub mod security;

pub use context::RunContext;
pub use error::{Error, Result};
pub use qc::{
    aggregate_verdict, builtin_qc_registry, find_check, Category, CheckResult, CheckStatus, Mode, QcCheckDescriptor,
    ValidationReport, Verdict,
};
pub use pipeline::run_validation;
pub use product::{load_product_spec, ProductSpec};
pub use report::{exit_code, render_report, ReportFormat};
