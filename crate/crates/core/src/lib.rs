//! Exact Nielsen and Reidemeister number computations for self-maps of
//! infra-solvmanifolds given by canonical-type polynomial actions.

pub mod exactla;
pub mod qpoly;
pub mod canonical;
pub mod group;
pub mod models;
pub mod spectra;
pub mod reidemeister;
pub mod nielsen;
pub mod fixedpoints;
