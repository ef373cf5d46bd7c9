//! Monte Carlo and exact tools for critical Bernoulli bond percolation on `Z^d`.

pub mod capacity;
pub mod error;
pub mod exec;
pub mod flow;
pub mod keys;
pub mod lattice;
pub mod montecarlo;
pub mod oracle;
pub mod percolation;
pub mod regularity;
pub mod runner;
pub mod stats;
pub mod walker;

pub use error::{Error, Result};
pub use exec::Exec;
pub use lattice::{Connectivity, Edge, GraphSpec, Point, Region};
pub use percolation::{Cluster, Configuration, ConnectivityVerdict, Lattice};
pub use stats::{Estimate, RatioEstimate};
