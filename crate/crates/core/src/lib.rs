pub mod lp;
pub mod measure;
pub mod rational;
pub mod risk;
pub mod pasting;
pub mod classify;
pub mod extensions;
pub mod simplex_export;
pub mod scenario;
pub mod random;
pub mod cli;
