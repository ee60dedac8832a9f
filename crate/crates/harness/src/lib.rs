//! Catalog of worked bi-symplectic bialgebra examples, the verification
//! runner that checks each one end to end, and report rendering.

pub mod catalog;
pub mod report;
pub mod verify;

pub use catalog::{load_entry, parse_entry, CatalogEntry, LoadError, Side};
pub use report::{emit_report, emit_summary, Format, Status, Summary, VerificationReport};
pub use verify::{verify_all, verify_entry, Mutation, VerifyConfig};

/// Environment variable overriding the catalog directory.
pub const CATALOG_ENV: &str = "BISYM_CATALOG";
