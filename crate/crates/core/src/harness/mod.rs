//! Training, evaluation, checkpoints and corpus handling.

pub mod binio;
pub mod checkpoint;
pub mod config;
pub mod corpus;
pub mod evaluate;
pub mod model;
pub mod synthetic;
pub mod train;

pub use checkpoint::Checkpoint;
pub use config::{RunConfig, Task};
pub use corpus::{load_corpus, write_corpus, CorpusRecord};
pub use evaluate::{evaluate, evaluate_with, Evaluation, Prediction};
pub use model::{ChangeModel, Head, Sample};
pub use train::{train, train_with, EpochLog, TrainOutcome};
