//! Experiment orchestration: the offline curriculum, the mixed test, the
//! flat baselines, metrics and reports.

mod baseline;
mod config;
mod log;
mod metrics;
mod report;
mod run;
pub mod verify;

pub use baseline::{baseline, run_baseline, TabularQ};
pub use config::{scale_count, DecisionSchedule, PhaseKind, PhaseSpec, RunConfig, TabularConfig};
pub use log::{load_episodes, read_episodes, save_episodes, write_episodes, EpisodeLog, EPISODES_FILE, EPISODES_HEADER};
pub use metrics::{ema, success_rates, SuccessRates, SuccessTable, SUCCESS_ROWS};
pub use report::{report, ReportOptions, ReportOutput, LEARNING_CURVE_FILE, SUCCESS_TABLE_FILE, SVG_FILE};
pub use run::{
    goal_set, restore_decision, run_offline, run_test, train, HierarchyStats, Method, OfflineRun, RunSummary, TestRun, LIBRARY_DIR,
    SUMMARY_FILE,
};
