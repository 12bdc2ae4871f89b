//! Load-once batch classification of image folders, with an emulated
//! benchmark of RPA-style and singleton pipeline variants.

pub mod bench;
pub mod classifier;
pub mod cli;
pub mod dataprep;
pub mod pipeline;
