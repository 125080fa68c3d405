pub mod acoustic;
pub mod corpus;
pub mod eval;
pub mod experiment;
pub mod features;
pub mod fusion;
pub mod matrix;
pub mod models;
pub mod report;
pub mod synth;
pub mod textfeat;
