pub mod cli;
pub mod fields;
pub mod geometry;
pub mod growth;
pub mod inequality;
pub mod liouville;
pub mod quadrature;
