//! Straight lines on the intersection of three quadrics in six variables.

pub mod certify;
pub mod cli;
pub mod cx;
pub mod numerics;
pub mod line;
pub mod quadrics;
pub mod scan;
pub mod smoothness;
pub mod tolerances;
