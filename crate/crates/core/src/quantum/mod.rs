//! Exact state-vector engine for amplitude amplification with diagonal
//! phase oracles.

mod diffusion;
mod measure;
mod oracle;
mod state;
mod table;

pub use diffusion::{apply_diffusion, grover_pair, invert_about_mean, walsh_hadamard, Diffusion, DiffusionKind, DiffusionSpec};
pub use measure::{success_probability, sz_histogram, NormalizedHistogram, SzHistogram};
pub use oracle::{apply_ideal_oracle, apply_oracle, offset_mod, phase_factor, OracleSpec, PhaseOracle};
pub use state::{init_uniform, init_uniform_capped, StateVector};
pub use table::{all_ones_table, build_imbalance_table, Coupling, ImbalanceTable, RealImbalanceTable};
