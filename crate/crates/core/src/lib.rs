//! Lifecycle governance for machine-learning technologies: readiness
//! levels, versioned report cards, graduation reviews, a risk register and
//! analytics over the transition history, backed by an append-only event
//! log.

pub mod analytics;
pub mod card;
pub mod clock;
pub mod demo;
pub mod engine;
pub mod error;
pub mod gates;
pub mod ids;
pub mod level;
pub mod lifecycle;
pub mod policy;
pub mod risk;
pub mod semver;
pub mod store;
pub mod technology;
pub mod transition;
pub mod views;
pub mod workspace;

pub use engine::{Engine, ForkRequest, NewTechnology, ReviewResult, Transitioned};
pub use views::RiskView;
pub use error::{Error, ErrorCode, ErrorKind, Result};
pub use ids::{ProposalId, RequirementId, ReviewId, RiskId, ScorecardId, TechId};
pub use level::TrlLevel;
pub use lifecycle::Portfolio;
pub use policy::LevelPolicy;
pub use technology::{TechKind, Technology};
pub use transition::{TransitionCause, TransitionEvent};
