//! Driven versus passive evolutionary trends in the neural complexity of
//! simulated agents: an agent ecology with genome-encoded neural networks,
//! a lockstep null model that replays a run's births and deaths without
//! selection, and the statistics that compare the two.

pub mod analysis;
pub mod artifact;
pub mod brain;
pub mod complexity;
pub mod config;
pub mod error;
pub mod genome;
pub mod lockstep;
pub mod pairset;
pub mod report;
pub mod rng;
pub mod run;
pub mod world;

pub use complexity::{ComplexityReport, ComplexitySettings, NeuronFilter};
pub use config::{Mode, RunConfig, Tails};
pub use error::{Error, Result};
pub use genome::{GeneMap, Genome};
pub use lockstep::LockstepSchedule;
pub use pairset::{run_pairset, Manifest};
pub use report::{analyze_set, AnalysisOptions};
pub use run::{run, run_driven, run_fitness, run_lockstep, ArtifactDir, Collector, RunSummary};
pub use world::{ArtifactHeader, EventLog, World, WorldConfig};
