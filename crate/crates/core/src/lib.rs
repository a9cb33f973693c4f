//! Mixed per-dimension activations (CombU), a dense MLP trainer, a compiler
//! from symbolic expressions to exact networks, and the formula benchmarks.

pub mod activation;
pub mod combu;
pub mod compiler;
pub mod datasets;
pub mod dist;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod mlp;
pub mod rng;

pub use activation::ActivationKind;
pub use combu::{assign_dims, default_combu, dim_counts, CombUSpec, Ratios};
pub use compiler::{compile, parse_expr, verify, Bounds, ExprAst};
pub use datasets::{Formula, TabularDataset, Task};
pub use dist::Dist;
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, RunReport};
pub use linalg::Matrix;
pub use metrics::Metric;
pub use mlp::{ActivationScheme, Head, LayeredNetwork, ModelSize, TrainConfig};
pub use rng::Rng;
