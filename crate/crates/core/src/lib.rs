//! Software module clustering by Modularization Quality maximization.
//!
//! - [`mdg`]: dependency graphs, the MQ fitness and an exhaustive optimum
//!   for small graphs.
//! - [`fuzzy`]: a config-driven Mamdani inference engine.
//! - [`optimizer`]: TLBO and its fuzzy-adaptive variant ATLBO under a strict
//!   fitness-evaluation budget.
//! - [`bench`]: repeated seeded experiments with CSV/JSON reports.

pub mod bench;
pub mod fuzzy;
pub mod mdg;
pub mod optimizer;

pub use fuzzy::{load_fis_config, FuzzySystem};
pub use mdg::{brute_force_optimum, canonicalize, mq, parse_mdg, ClusterLabels, ModuleGraph};
pub use optimizer::{Algorithm, RunResult, SearchConfig};
