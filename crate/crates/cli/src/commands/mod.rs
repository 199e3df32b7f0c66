pub mod analyze;
pub mod corpus_stats;
pub mod decode;
pub mod sweep;
pub mod synth;
pub mod train;
