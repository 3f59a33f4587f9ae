pub mod completion;
pub mod diagram;
pub mod embed;
pub mod moments;
pub mod oriented;
pub mod partition;
pub mod rewrite;
pub mod suite;
pub mod word;
