//! Sieve tables, local root counts, Dirichlet characters and singular series.

pub mod characters;
pub mod euler;
pub mod rho;
pub mod sieve;

pub use characters::{characters_mod, DirichletCharacter};
pub use euler::{h_fq, h_q, EulerProduct};
pub use rho::{rho, rho_ab};
pub use sieve::SieveTables;
