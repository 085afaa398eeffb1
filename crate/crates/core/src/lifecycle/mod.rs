//! Command-side workflow: registration, proposals, reviews, regressions and
//! forks, all expressed as events applied to a [`Portfolio`].

mod events;
mod state;

pub use events::{
    AttachedTask, DomainEvent, GraduationProposal, ProposalStatus, ReviewOutcome, ReviewRecord,
    TaskItem,
};
pub use state::Portfolio;
