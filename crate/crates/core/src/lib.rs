//! Copyright-takedown evaluation toolkit.
//!
//! Scores regurgitation with eight similarity metrics, applies takedown
//! interventions to a deterministic n-gram language model, and aggregates
//! results into win rates, utility and efficiency reports.
//!
//! Everything real-valued is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix `f64`.

pub mod corpus;
pub mod eval;
pub mod hashing;
pub mod interventions;
pub mod membership;
pub mod metrics;
pub mod retrieval;
pub mod scalar;
pub mod testbed;
pub mod toylm;
pub mod unlearning;

pub use scalar::Real;

pub type Logits = toylm::LogitVector<f64>;
pub type NGramModel = toylm::NGramLM<f64>;
pub type Model = toylm::ToyModel<f64>;
pub type Scores = metrics::RiskScores<f64>;
pub type Store = retrieval::VectorStore<f64>;
pub type Config = interventions::InterventionConfig<f64>;
