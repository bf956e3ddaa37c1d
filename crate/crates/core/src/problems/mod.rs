//! Concrete objectives.

pub mod nls;
pub mod synthetic;

pub use nls::{sigmoid, synthetic_dataset, NlsProblem};
pub use synthetic::{
    make_confined_saddle, make_quadratic, make_rosenbrock, make_saddle_problem, SyntheticProblem,
    TheoryConstants,
};
