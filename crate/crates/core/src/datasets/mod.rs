//! Formula dataset generators, preprocessing and CSV ingestion.

mod csv_io;
mod formulas;
mod preprocess;
mod table;

pub use csv_io::{csv_read, csv_write, read_csv, write_csv, CsvSchema, TargetKind};
pub use formulas::{
    arrhenius, black_scholes_call, black_scholes_put, gaussian_pdf, gen_ar, gen_bs, gen_gs, gen_ns,
    vortex_speed, Formula, GAS_CONSTANT,
};
pub use preprocess::{
    bin_index, make_classification, mean_std, quantile_edges, split_and_fit, FeatureTransform,
    Preprocessor, TargetScaler, DEFAULT_BINS,
};
pub use table::{Column, ColumnData, Provenance, TabularDataset, Task};
