use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "trl", version, about = "Track ML technologies through readiness levels 0-9")]
pub struct Cli {
    /// Workspace directory.
    #[arg(long, short = 'w', global = true, env = "TRL_WORKSPACE", default_value = ".")]
    pub workspace: PathBuf,

    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a workspace with the default policy.
    Init {
        dir: PathBuf,
        /// Seed the Bayesian optimization example.
        #[arg(long)]
        demo: bool,
    },
    #[command(subcommand)]
    Tech(TechCommand),
    #[command(subcommand)]
    Card(CardCommand),
    /// Propose graduating to the next level.
    Propose {
        tech: String,
        /// Explicit target level; must be the next one.
        #[arg(long)]
        to: Option<i64>,
    },
    /// List pending proposals.
    Proposals,
    /// Record the review panel's decision on a proposal.
    Review(ReviewArgs),
    /// Attach post-mortem notes to a graduation review.
    Postmortem {
        review: String,
        #[arg(long)]
        notes: String,
    },
    /// Move a technology down to a lower level.
    Regress {
        tech: String,
        #[arg(long)]
        to: i64,
        #[arg(long)]
        why: String,
        /// Review that prompted the regression.
        #[arg(long)]
        review: Option<String>,
    },
    #[command(subcommand)]
    Req(ReqCommand),
    #[command(subcommand)]
    Risk(RiskCommand),
    /// Record a production-readiness scorecard.
    Scorecard {
        tech: String,
        /// `item=score`, repeatable. Without items the default checklist is
        /// shown.
        #[arg(long = "item")]
        items: Vec<String>,
    },
    #[command(subcommand)]
    Report(ReportCommand),
    /// Serve the HTTP API and dashboard.
    Serve {
        #[arg(long, env = "TRL_ADDR", default_value = trl_api::DEFAULT_ADDR)]
        addr: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum TechCommand {
    /// Register a technology.
    Add {
        #[arg(long)]
        name: String,
        /// model, algorithm, data-pipeline, software-module or composition
        #[arg(long)]
        kind: String,
        /// Entry level. Derived for compositions.
        #[arg(long)]
        level: Option<i64>,
        #[arg(long, default_value = "")]
        why: String,
        #[arg(long)]
        id: Option<String>,
        /// Component id of a composition, repeatable.
        #[arg(long = "component")]
        components: Vec<String>,
    },
    /// List technologies with current and system levels.
    List {
        #[arg(long)]
        level: Option<i64>,
        #[arg(long)]
        kind: Option<String>,
    },
    /// Show one technology with its path, gates and pending proposal.
    Show { tech: String },
    /// Create a child technology from an existing one.
    Fork {
        parent: String,
        #[arg(long)]
        name: String,
        #[arg(long)]
        level: i64,
        #[arg(long)]
        why: String,
        #[arg(long)]
        id: Option<String>,
    },
    /// Archive a technology.
    Archive {
        tech: String,
        #[arg(long)]
        why: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum CardCommand {
    /// Render the card.
    Show {
        tech: String,
        #[arg(long)]
        version: Option<u32>,
    },
    /// Amend or add a section; creates a new card version.
    Set {
        tech: String,
        #[arg(long)]
        section: String,
        #[arg(long)]
        text: String,
        /// Level a deliverable belongs to; defaults to the current level.
        #[arg(long)]
        level: Option<i64>,
        #[arg(long)]
        title: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct ReviewArgs {
    pub proposal: String,
    #[arg(long, conflicts_with = "return_", required_unless_present = "return_")]
    pub graduate: bool,
    #[arg(long = "return")]
    pub return_: bool,
    /// Task for a returned proposal, repeatable. `description :: remark`
    /// adds a quantitative remark.
    #[arg(long = "task")]
    pub tasks: Vec<String>,
    /// Panel member as `role=person`, repeatable.
    #[arg(long = "panel")]
    pub panel: Vec<String>,
    #[arg(long, default_value = "")]
    pub notes: String,
}

#[derive(Debug, Subcommand)]
pub enum ReqCommand {
    /// Add a requirement with its verification and validation steps.
    Add {
        tech: String,
        #[arg(long)]
        description: String,
        #[arg(long, default_value = "")]
        verification: String,
        #[arg(long, default_value = "")]
        validation: String,
    },
    List { tech: String },
}

#[derive(Debug, Subcommand)]
pub enum RiskCommand {
    /// Add a risk entry against a requirement.
    Add {
        tech: String,
        #[arg(long)]
        req: String,
        /// Probability of failure in [0, 1].
        #[arg(short = 'p', allow_negative_numbers = true)]
        p: f64,
        /// Value of the requirement, 1-10.
        #[arg(short = 'v', allow_negative_numbers = true)]
        value: i64,
        #[arg(long)]
        sim_to_real: bool,
        #[arg(long)]
        mitigation: Option<String>,
        #[arg(long)]
        test_strategy: Option<String>,
    },
    List {
        tech: String,
        #[arg(long)]
        flagged: bool,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Record a mitigation for a risk entry.
    Mitigate {
        risk: String,
        #[arg(long)]
        mitigation: String,
        #[arg(long)]
        test_strategy: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    TimePerLevel {
        #[arg(long)]
        tech: Option<String>,
        #[command(flatten)]
        at: AsOf,
    },
    Paths {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long)]
        tech: Option<String>,
    },
    Bottlenecks {
        #[command(flatten)]
        at: AsOf,
    },
    Okr {
        tech: String,
        #[arg(long)]
        target: i64,
        /// Deadline, RFC 3339 or YYYY-MM-DD.
        #[arg(long)]
        by: String,
        #[command(flatten)]
        at: AsOf,
    },
}

#[derive(Debug, Args)]
pub struct AsOf {
    /// Evaluation time; defaults to the newest event in the log.
    #[arg(long)]
    pub now: Option<String>,
}
