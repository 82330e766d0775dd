//! Interactive data wrangling assistants.
//!
//! Every assistant recommends a best cleaning expression for the analyst's
//! current constraints, previews its output and offers a ranked list of
//! one-constraint refinements. See [`assistant::Assistant`].

pub mod assistant;
pub mod cli;
pub mod datadiff;
pub mod dialect;
pub mod error;
pub mod eval;
pub mod grammar;
pub mod outlier;
pub mod protocol;
pub mod registry;
pub mod semantic;
pub mod service;
pub mod session;
pub mod table;
pub mod typeinfer;

pub use assistant::{Assistant, Choice, ChoiceView, Descriptor, DynAssistant, InteractionSet, Recommendation};
pub use error::{Error, Result};
pub use registry::Options;
pub use session::{FinalResult, ReplayScript, Session, Settings, Status};
