//! Statevector VQE laboratory for the long-range transverse-field XY chain.

pub mod ansatz;
pub mod error;
pub mod exact;
pub mod format;
pub mod lbfgs;
pub mod pauli;
pub mod seed;
pub mod squeezing;
pub mod state;
pub mod sweep;
pub mod vqe;

pub use error::{Error, Result};
pub use pauli::{
    build_collective_spin, build_hamiltonian, build_parity_operator, Axis, ModelParams, Pauli,
    PauliString, PauliSum,
};
pub use state::{CompiledOperator, EntropyBase, StateVector, C64};
pub use ansatz::{parse_spec, CircuitSpec, EntanglerOrder, ParameterVector};
pub use exact::{model_ground_state, GroundState, Parity};
pub use lbfgs::OptimizerOptions;
pub use squeezing::{SqueezingReport, VariationalSqueezing};
pub use sweep::SweepConfig;
pub use vqe::{EnergyPenalty, TrainingMode, VqeProblem, VqeResult};
