//! Service, command line and parallel Monte Carlo driver around `powerkit-core`.

pub mod api;
pub mod cli;
pub mod corpus;
pub mod driver;
pub mod model;
pub mod openapi;
pub mod server;
pub mod store;
