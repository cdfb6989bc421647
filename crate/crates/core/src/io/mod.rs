//! Catalog files, run configuration and result files.

pub mod catalog;
pub mod config;
pub mod results;

pub use catalog::{
    catalog_to_csv, decimal_year, ingest_catalog, CatalogSource, IngestOptions, IngestedCatalog,
};
pub use config::{RunArgs, OUT_DIR_ENV};
pub use results::{
    config_hash, emit_results, grid_rows, histogram_rows, metadata_comment, render_results,
    GridRow, HistogramRow, OutputFormat, RunMetadata,
};
