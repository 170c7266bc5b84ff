//! Instance files, generators, the verification suite and reports behind the
//! `lipext` command.

pub mod error;
pub mod generate;
pub mod instance;
pub mod report;
pub mod suite;

pub use error::HarnessError;
pub use generate::{generate_instance, Family, Params, SubspaceRule};
pub use instance::{load_instance, FieldFile, Instance, InstanceFile};
pub use report::{emit_report, write_report, ReportFormat, ReportRow};
pub use suite::{run_verification_suite, CheckOutcome, SuiteConfig, SuiteOutcome};
