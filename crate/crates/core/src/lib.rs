//! Spectral simulation of a Dirac particle confined to a one-dimensional box
//! whose right wall moves.

pub mod basis;
pub mod config;
pub mod error;
pub mod evolution;
pub mod init;
pub mod observables;
pub mod pde;
pub mod quadrature;
pub mod runner;
pub mod schrodinger;
pub mod spline;
pub mod wall;

pub use config::SimConfig;
pub use error::{Error, Result};
pub use evolution::{evolve, Trajectory};
pub use init::{project_initial, ModeState, SpinorPacket};
pub use observables::{Convention, ObservableRecord};
pub use wall::{WallLaw, WallMotion};
