//! Datasets and problem instances: LIBSVM files, correlation graphs, CT
//! phantoms and sinograms, quadratic toys with certified references, and
//! synthetic classification data.

mod ct;
mod graph;
mod libsvm;
mod quad;
mod synthetic;

pub use ct::{generate_phantom, simulate_sinogram, CtInstance, CtSpec};
pub use graph::{build_graph_matrix, read_triplets, write_triplets};
pub use libsvm::{parse_libsvm, parse_libsvm_str, split_train_test, write_libsvm, Dataset};
pub use quad::{fixed_point_residual, make_quadratic_toy, QuadSpec, QuadraticToy, REFERENCE_TOL};
pub use synthetic::synthetic_classification;
