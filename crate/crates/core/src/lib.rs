pub mod bits;
pub mod circuit;
pub mod error;
pub mod gate;
pub mod haar;
pub mod harness;
pub mod kak;
pub mod metrics;
pub mod noise;
pub mod optimizer;
pub mod profile;
pub mod qasm;
pub mod report;
pub mod sim;
pub mod suite;

pub use bits::BitString;
pub use circuit::{Circuit, CircuitDocument};
pub use error::{Error, Result};
pub use gate::GateParams;
pub use harness::{BenchConfig, BenchmarkMatrix};
pub use noise::NoiseSpec;
pub use profile::PeakProfile;
