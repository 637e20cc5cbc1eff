//! Skill-oriented volunteer task assignment with potential-aware retention:
//! potential levels, participation dividends, satisfaction-based drop
//! decisions and a round-based simulation harness to compare incentive
//! policies.

// `!(x >= 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod domain;
pub mod error;
pub mod incentive;
pub mod metrics;
pub mod potential;
pub mod sim;
pub mod vrave;

pub use assignment::{assign_round, candidate_utility, remuneration, PolicyKind, RemunerationPolicy, UtilityWeights};
pub use domain::{
    validate_world, ActiveVolunteer, AllocationMap, Assignment, ContingencyLedger, SkillCatalog, SkillSet, Task,
    Violation, Volunteer, VolunteerLedger,
};
pub use error::{Result, WcbError};
pub use metrics::aggregate::{BandCheck, Pairwise, PolicyAggregate};
pub use metrics::calibrate::{calibrate_threshold, threshold_from_pool, Calibration};
pub use metrics::compare::{compare_policies, Comparison};
pub use metrics::output::emit_outputs;
pub use metrics::report::RoundReport;
pub use sim::config::{PolicyName, SimulationConfig};
pub use sim::experiment::{run_experiment, ExperimentBundle};
pub use vrave::{run_vrave, DividendEligibility, RetentionConfig, RetentionOutcome};
