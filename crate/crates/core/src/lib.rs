pub mod density;
pub mod ebin;
pub mod error;
pub mod grid;
pub mod io;
pub mod kahler;
pub mod krf;
pub mod report;
pub mod sampling;
pub mod solver;
pub mod suite;
mod spectral;
pub mod tensor;
