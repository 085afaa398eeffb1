use std::path::PathBuf;

use thiserror::Error;

use crate::ids::{ProposalId, RequirementId, ReviewId, RiskId, TechId};
use crate::transition::IllegalReason;

/// Coarse classification of a failure, used by adapters to pick an HTTP
/// status or exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Invalid,
    NotFound,
    Conflict,
    Unprocessable,
    Storage,
}

/// Machine-readable identity of an error.
pub trait ErrorCode {
    fn code(&self) -> &'static str;
    fn kind(&self) -> ErrorKind;
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("level {0} is outside 0-9")]
    InvalidLevel(i64),
    #[error("'{0}' is not a level")]
    InvalidLevelText(String),
    #[error("'{0}' is not a M.m.p version")]
    MalformedVersion(String),
    #[error("unknown technology kind '{0}'")]
    UnknownKind(String),
    #[error("component {0} does not resolve")]
    UnresolvedComponent(TechId),
    #[error("composition cycle through {0}")]
    CyclicComposition(TechId),
    #[error("composition {0} has no active components")]
    NoActiveComponents(TechId),
}

impl ErrorCode for ModelError {
    fn code(&self) -> &'static str {
        match self {
            ModelError::InvalidLevel(_) | ModelError::InvalidLevelText(_) => "InvalidLevel",
            ModelError::MalformedVersion(_) => "MalformedVersion",
            ModelError::UnknownKind(_) => "UnknownKind",
            ModelError::UnresolvedComponent(_) => "UnresolvedComponent",
            ModelError::CyclicComposition(_) => "CyclicComposition",
            ModelError::NoActiveComponents(_) => "NoActiveComponents",
        }
    }

    fn kind(&self) -> ErrorKind {
        match self {
            ModelError::UnresolvedComponent(_) => ErrorKind::NotFound,
            ModelError::CyclicComposition(_) | ModelError::NoActiveComponents(_) => {
                ErrorKind::Unprocessable
            }
            _ => ErrorKind::Invalid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("value {0} is outside 1-10")]
    ValueOutOfRange(i64),
    #[error("item '{item}' scored {score}, allowed 0-{max}")]
    ScoreOutOfBounds { item: String, score: i64, max: u32 },
    #[error("requirement needs a non-empty verification step")]
    MissingVerification,
    #[error("requirement needs a non-empty validation step")]
    MissingValidation,
    #[error("requirement {0} not found")]
    RequirementNotFound(RequirementId),
    #[error("risk {0} not found")]
    RiskNotFound(RiskId),
}

impl ErrorCode for RiskError {
    fn code(&self) -> &'static str {
        match self {
            RiskError::ProbabilityOutOfRange(_) => "ProbabilityOutOfRange",
            RiskError::ValueOutOfRange(_) => "ValueOutOfRange",
            RiskError::ScoreOutOfBounds { .. } => "ScoreOutOfBounds",
            RiskError::MissingVerification => "MissingVerification",
            RiskError::MissingValidation => "MissingValidation",
            RiskError::RequirementNotFound(_) => "RequirementNotFound",
            RiskError::RiskNotFound(_) => "RiskNotFound",
        }
    }

    fn kind(&self) -> ErrorKind {
        match self {
            RiskError::RequirementNotFound(_) | RiskError::RiskNotFound(_) => ErrorKind::NotFound,
            _ => ErrorKind::Invalid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("event log is not sorted at seq {0}")]
    UnsortedLog(u64),
    #[error("event log does not start with an initiation")]
    MissingInitiation,
    #[error("n-gram length {0} is below 2")]
    InvalidNGramLength(usize),
    #[error("portfolio has no technologies")]
    EmptyPortfolio,
    #[error("technology {0} not found")]
    TechnologyNotFound(TechId),
    #[error("now is earlier than the event at seq {0}")]
    NowBeforeLastEvent(u64),
    #[error("unknown report '{0}'")]
    UnknownReport(String),
    #[error("report parameter '{0}' is missing or invalid")]
    InvalidParameter(String),
}

impl ErrorCode for AnalyticsError {
    fn code(&self) -> &'static str {
        match self {
            AnalyticsError::UnsortedLog(_) => "UnsortedLog",
            AnalyticsError::MissingInitiation => "MissingInitiation",
            AnalyticsError::InvalidNGramLength(_) => "InvalidNGramLength",
            AnalyticsError::EmptyPortfolio => "EmptyPortfolio",
            AnalyticsError::TechnologyNotFound(_) => "TechnologyNotFound",
            AnalyticsError::NowBeforeLastEvent(_) => "NowBeforeLastEvent",
            AnalyticsError::UnknownReport(_) => "UnknownReport",
            AnalyticsError::InvalidParameter(_) => "InvalidParameter",
        }
    }

    fn kind(&self) -> ErrorKind {
        match self {
            AnalyticsError::TechnologyNotFound(_) | AnalyticsError::UnknownReport(_) => {
                ErrorKind::NotFound
            }
            AnalyticsError::EmptyPortfolio
            | AnalyticsError::UnsortedLog(_)
            | AnalyticsError::MissingInitiation => ErrorKind::Unprocessable,
            _ => ErrorKind::Invalid,
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization failure: {0}")]
    Serialization(String),
    #[error("sequence conflict: expected to write seq {expected}, log is at seq {actual}")]
    SequenceConflict { expected: u64, actual: u64 },
    #[error("corrupt log at seq {seq}: {detail}")]
    CorruptLog { seq: u64, detail: String },
    #[error("card version gap for {tech}: expected v{expected}, got v{got}")]
    VersionGap { tech: TechId, expected: u32, got: u32 },
    #[error("no card stored for {0}")]
    CardNotFound(TechId),
    #[error("malformed policy: {0}")]
    MalformedPolicy(String),
    #[error("no workspace at {0}")]
    WorkspaceNotFound(PathBuf),
    #[error("workspace already initialized at {0}")]
    WorkspaceExists(PathBuf),
}

impl StoreError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        StoreError::Io {
            path: path.into(),
            source,
        }
    }
}

impl ErrorCode for StoreError {
    fn code(&self) -> &'static str {
        match self {
            StoreError::Io { .. } | StoreError::Serialization(_) => "StorageFailure",
            StoreError::SequenceConflict { .. } => "SequenceConflict",
            StoreError::CorruptLog { .. } => "CorruptLog",
            StoreError::VersionGap { .. } => "VersionGap",
            StoreError::CardNotFound(_) => "CardNotFound",
            StoreError::MalformedPolicy(_) => "MalformedPolicy",
            StoreError::WorkspaceNotFound(_) => "WorkspaceNotFound",
            StoreError::WorkspaceExists(_) => "WorkspaceExists",
        }
    }

    fn kind(&self) -> ErrorKind {
        match self {
            StoreError::SequenceConflict { .. } | StoreError::WorkspaceExists(_) => {
                ErrorKind::Conflict
            }
            StoreError::VersionGap { .. } => ErrorKind::Conflict,
            StoreError::CardNotFound(_) | StoreError::WorkspaceNotFound(_) => ErrorKind::NotFound,
            StoreError::MalformedPolicy(_) => ErrorKind::Invalid,
            _ => ErrorKind::Storage,
        }
    }
}

/// Rejections of lifecycle commands.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LifecycleError {
    #[error("technology {0} not found")]
    TechnologyNotFound(TechId),
    #[error("{tech} has no card version {version}")]
    CardVersionNotFound { tech: TechId, version: u32 },
    #[error("parent technology {0} not found")]
    ParentNotFound(TechId),
    #[error("proposal {0} not found")]
    ProposalNotFound(ProposalId),
    #[error("review {0} not found")]
    ReviewNotFound(ReviewId),
    #[error("technology id {0} is already taken")]
    DuplicateTechnology(TechId),
    #[error("starting above level 0 needs a justification")]
    MissingJustification,
    #[error("a rationale is required")]
    MissingRationale,
    #[error("a level is required for non-composition technologies")]
    MissingLevel,
    #[error("invalid component list: {0}")]
    InvalidComponents(String),
    #[error("composition level is derived from its components (currently {expected})")]
    CompositionLevelMismatch { expected: crate::TrlLevel },
    #[error("{0} is a composition; its level follows its components")]
    CompositionLevelDerived(TechId),
    #[error("technology {0} is archived")]
    TechnologyArchived(TechId),
    #[error("illegal transition: {0}")]
    IllegalTransition(IllegalReason),
    #[error("technology is already at level 9")]
    TopLevelReached,
    #[error("a pending proposal {0} already exists")]
    PendingProposalExists(ProposalId),
    #[error("card is missing sections: {}", .0.join(", "))]
    CardIncomplete(Vec<String>),
    #[error("gate {gate} unsatisfied: {detail}")]
    GateUnsatisfied { gate: String, detail: String },
    #[error("flagged risks without mitigation: {0:?}")]
    UnmitigatedFlaggedRisk(Vec<RiskId>),
    #[error("proposal {0} is not pending")]
    ProposalNotPending(ProposalId),
    #[error("proposal {0} no longer matches the technology's level")]
    StaleProposal(ProposalId),
    #[error("panel lacks required roles: {}", .0.join(", "))]
    PanelRolesInsufficient(Vec<String>),
    #[error("a return outcome needs at least one task")]
    EmptyTaskListOnReturn,
    #[error("post-mortem already recorded on review {0}")]
    PostmortemAlreadyRecorded(ReviewId),
    #[error("review {0} did not graduate the technology")]
    NotAGraduation(ReviewId),
    #[error("child level {child} is above parent level {parent}")]
    ChildLevelAboveParent {
        child: crate::TrlLevel,
        parent: crate::TrlLevel,
    },
    #[error("invalid card amendment: {0}")]
    InvalidAmendment(String),
    #[error("a name is required")]
    MissingName,
    #[error("notes are required")]
    MissingNotes,
    #[error("event does not match current state: {0}")]
    InconsistentEvent(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Risk(#[from] RiskError),
}

impl ErrorCode for LifecycleError {
    fn code(&self) -> &'static str {
        use LifecycleError::*;
        match self {
            TechnologyNotFound(_) => "TechnologyNotFound",
            ParentNotFound(_) => "ParentNotFound",
            CardVersionNotFound { .. } => "CardVersionNotFound",
            ProposalNotFound(_) => "ProposalNotFound",
            ReviewNotFound(_) => "ReviewNotFound",
            DuplicateTechnology(_) => "DuplicateTechnology",
            MissingJustification => "MissingJustification",
            MissingRationale => "MissingRationale",
            MissingLevel => "MissingLevel",
            InvalidComponents(_) => "InvalidComponents",
            CompositionLevelMismatch { .. } => "CompositionLevelMismatch",
            CompositionLevelDerived(_) => "CompositionLevelDerived",
            TechnologyArchived(_) => "TechnologyArchived",
            IllegalTransition(reason) => reason.code(),
            TopLevelReached => "TopLevelReached",
            PendingProposalExists(_) => "PendingProposalExists",
            CardIncomplete(_) => "CardIncomplete",
            GateUnsatisfied { .. } => "GateUnsatisfied",
            UnmitigatedFlaggedRisk(_) => "UnmitigatedFlaggedRisk",
            ProposalNotPending(_) => "ProposalNotPending",
            StaleProposal(_) => "StaleProposal",
            PanelRolesInsufficient(_) => "PanelRolesInsufficient",
            EmptyTaskListOnReturn => "EmptyTaskListOnReturn",
            PostmortemAlreadyRecorded(_) => "PostmortemAlreadyRecorded",
            NotAGraduation(_) => "NotAGraduation",
            ChildLevelAboveParent { .. } => "ChildLevelAboveParent",
            InvalidAmendment(_) => "InvalidAmendment",
            MissingName => "MissingName",
            MissingNotes => "MissingNotes",
            InconsistentEvent(_) => "InconsistentEvent",
            Model(e) => e.code(),
            Risk(e) => e.code(),
        }
    }

    fn kind(&self) -> ErrorKind {
        use LifecycleError::*;
        match self {
            TechnologyNotFound(_)
            | ParentNotFound(_)
            | CardVersionNotFound { .. }
            | ProposalNotFound(_)
            | ReviewNotFound(_) => {
                ErrorKind::NotFound
            }
            PendingProposalExists(_)
            | DuplicateTechnology(_)
            | ProposalNotPending(_)
            | StaleProposal(_)
            | PostmortemAlreadyRecorded(_)
            | InconsistentEvent(_) => ErrorKind::Conflict,
            CardIncomplete(_)
            | GateUnsatisfied { .. }
            | UnmitigatedFlaggedRisk(_)
            | PanelRolesInsufficient(_)
            | TopLevelReached
            | CompositionLevelDerived(_)
            | TechnologyArchived(_) => ErrorKind::Unprocessable,
            Model(e) => e.kind(),
            Risk(e) => e.kind(),
            _ => ErrorKind::Invalid,
        }
    }
}

/// Any failure surfaced by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Lifecycle(#[from] LifecycleError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl From<ModelError> for Error {
    fn from(e: ModelError) -> Self {
        Error::Lifecycle(e.into())
    }
}

impl From<RiskError> for Error {
    fn from(e: RiskError) -> Self {
        Error::Lifecycle(e.into())
    }
}

impl ErrorCode for Error {
    fn code(&self) -> &'static str {
        match self {
            Error::Lifecycle(e) => e.code(),
            Error::Analytics(e) => e.code(),
            Error::Store(e) => e.code(),
        }
    }

    fn kind(&self) -> ErrorKind {
        match self {
            Error::Lifecycle(e) => e.kind(),
            Error::Analytics(e) => e.kind(),
            Error::Store(e) => e.kind(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
