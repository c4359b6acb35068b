//! Stochastic Cramér-Rao bounds for array direction-of-arrival models.

pub mod circular;
pub mod noncircular;
pub mod projector;
pub mod steering;

pub use circular::{build_projector_bundle, scrb_circular, scrb_from_general};
pub use noncircular::{build_nc_projector_bundle, scrb_noncircular, scrb_noncircular_from_general};
pub use projector::{
    hermitian_basis_matrix, symmetric_duplication, symmetrizer, t_matrix, t_matrix_sqrt,
    ProjectorBundle,
};
pub use steering::{ula_steering, DoaModel, NcDoaModel};
