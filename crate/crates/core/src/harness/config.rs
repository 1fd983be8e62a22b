use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decision::DecisionConfig;
use crate::error::{Error, Result};
use crate::execution::DdpgConfig;
use crate::sim::{ScenarioConfig, Subtask, SubtaskToggles};
use crate::skill::ChainParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    ConstantSpeed,
    LaneChange,
    LeftTurnOncoming,
    TurnAround,
    MixedTest,
}

impl PhaseKind {
    pub fn name(self) -> &'static str {
        match self {
            PhaseKind::ConstantSpeed => "constant_speed",
            PhaseKind::LaneChange => "lane_change",
            PhaseKind::LeftTurnOncoming => "left_turn_oncoming",
            PhaseKind::TurnAround => "turn_around",
            PhaseKind::MixedTest => "mixed_test",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Self::ConstantSpeed, Self::LaneChange, Self::LeftTurnOncoming, Self::TurnAround, Self::MixedTest]
            .into_iter()
            .find(|k| k.name() == name)
    }

    /// The subtask a training phase is about; `None` for the base phase and the test.
    pub fn subtask(self) -> Option<Subtask> {
        match self {
            PhaseKind::LaneChange => Some(Subtask::LaneChange),
            PhaseKind::LeftTurnOncoming => Some(Subtask::LeftTurn),
            PhaseKind::TurnAround => Some(Subtask::TurnAround),
            PhaseKind::ConstantSpeed | PhaseKind::MixedTest => None,
        }
    }

    /// Other vehicles present during a training phase.
    pub fn toggles(self) -> SubtaskToggles {
        self.subtask().map(SubtaskToggles::only).unwrap_or_else(SubtaskToggles::none)
    }

    pub fn is_test(self) -> bool {
        self == PhaseKind::MixedTest
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub kind: PhaseKind,
    pub epochs: usize,
    /// Chance that each subtask vehicle appears; read by the mixed test only.
    #[serde(default = "default_presence")]
    pub presence_probability: f64,
}

fn default_presence() -> f64 {
    0.5
}

impl PhaseSpec {
    pub fn new(kind: PhaseKind, epochs: usize) -> Self {
        Self { kind, epochs, presence_probability: default_presence() }
    }
}

/// When the decision layer learns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecisionSchedule {
    /// Update after every option during the offline phases.
    pub during_offline: bool,
    /// Updates on the collected option transitions once the offline phases are over
    /// (multiplied by the scale factor).
    pub consolidation_updates: usize,
    /// Keep updating after every option during the test.
    pub during_test: bool,
}

impl Default for DecisionSchedule {
    fn default() -> Self {
        Self { during_offline: false, consolidation_updates: 5000, during_test: true }
    }
}

/// The tabular Q-learning baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TabularConfig {
    pub alpha: f64,
    pub gamma: f64,
    /// Bins of the other vehicle's position relative to the host, per axis.
    pub position_bins: usize,
    /// Half-width of the relative-position grid (m).
    pub position_range: f64,
    pub speed_bins: usize,
    pub max_speed: f64,
    pub yaw_bins: usize,
    /// Longitudinal commands; brake < 0 < throttle.
    pub actions: Vec<f64>,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_fraction: f64,
}

impl Default for TabularConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.99,
            position_bins: 7,
            position_range: 30.0,
            speed_bins: 5,
            max_speed: 10.0,
            yaw_bins: 8,
            actions: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.25,
        }
    }
}

/// Everything one experiment needs. Read from JSON; absent fields take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub phases: Vec<PhaseSpec>,
    pub seeds: Vec<u64>,
    /// Every DDPG agent: the option policies and the flat baseline.
    pub ddpg: DdpgConfig,
    pub decision: DecisionConfig,
    pub decision_schedule: DecisionSchedule,
    /// Chain construction. Its `ddpg` block is replaced by the top-level one
    /// and its per-link budget is scaled, but not below `min_link_budget`.
    pub chain: ChainParams,
    pub min_link_budget: usize,
    pub tabular: TabularConfig,
    /// Keep training an option's policy while the decision layer runs it offline.
    pub fine_tune_options: bool,
    pub output_dir: PathBuf,
    /// Epoch multiplier for short runs, in `(0, 1]`.
    pub scale: f64,
    /// Final test episodes over which success rates are computed.
    pub success_window: usize,
    /// Weight of the exponential moving average in reports.
    pub ema_weight: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            phases: vec![
                PhaseSpec::new(PhaseKind::ConstantSpeed, 400),
                PhaseSpec::new(PhaseKind::LaneChange, 400),
                PhaseSpec::new(PhaseKind::LeftTurnOncoming, 400),
                PhaseSpec::new(PhaseKind::TurnAround, 400),
                PhaseSpec::new(PhaseKind::MixedTest, 1000),
            ],
            seeds: vec![0, 1, 2],
            ddpg: DdpgConfig::default(),
            decision: DecisionConfig::default(),
            decision_schedule: DecisionSchedule::default(),
            chain: ChainParams {
                // Host pose and the other vehicle; host speed is left out so
                // that a link's region can be entered at any speed.
                features: vec![0, 1, 2, 4, 5, 6, 7],
                ..ChainParams::default()
            },
            min_link_budget: 30,
            tabular: TabularConfig::default(),
            fine_tune_options: true,
            output_dir: PathBuf::from("runs"),
            scale: 0.1,
            success_window: 200,
            ema_weight: 0.95,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::MissingFile(path.to_path_buf())),
            Err(e) => return Err(e.into()),
        };
        let config: Self = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.phases.is_empty() {
            return Err(Error::InvalidConfig("at least one phase is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(Error::InvalidConfig(format!("scale {} outside (0, 1]", self.scale)));
        }
        if let Some(p) = self.phases.iter().find(|p| p.epochs == 0) {
            return Err(Error::InvalidConfig(format!("phase {} has no epochs", p.kind.name())));
        }
        if let Some(p) = self.phases.iter().find(|p| !(0.0..=1.0).contains(&p.presence_probability)) {
            return Err(Error::InvalidConfig(format!("presence probability {} outside [0, 1]", p.presence_probability)));
        }
        if !(0.0..1.0).contains(&self.ema_weight) {
            return Err(Error::InvalidConfig(format!("EMA weight {} outside [0, 1)", self.ema_weight)));
        }
        if self.scenario.goal.is_none() {
            return Err(Error::InvalidConfig("the scenario needs a goal region".into()));
        }
        if self.success_window == 0 {
            return Err(Error::InvalidConfig("the success window must be positive".into()));
        }
        let t = &self.tabular;
        if !(t.alpha > 0.0 && t.alpha <= 1.0) || t.actions.is_empty() || t.position_bins == 0 || t.speed_bins == 0 || t.yaw_bins == 0 {
            return Err(Error::InvalidConfig("tabular baseline needs alpha in (0, 1], actions and bins".into()));
        }
        self.scenario.validate()?;
        self.ddpg.validate()?;
        self.decision.validate()?;
        self.chain_params().validate()
    }

    /// Episodes actually run for `phase`: `max(1, round(epochs × scale))`.
    pub fn scaled_epochs(&self, phase: &PhaseSpec) -> usize {
        scale_count(phase.epochs, self.scale)
    }

    /// Chain parameters with the shared DDPG block and the scaled per-link budget.
    pub fn chain_params(&self) -> ChainParams {
        let budget = scale_count(self.chain.budget, self.scale).max(self.min_link_budget.min(self.chain.budget));
        ChainParams { ddpg: self.ddpg.clone(), budget, ..self.chain.clone() }
    }

    pub fn offline_phases(&self) -> impl Iterator<Item = &PhaseSpec> {
        self.phases.iter().filter(|p| !p.kind.is_test())
    }

    pub fn test_phases(&self) -> impl Iterator<Item = &PhaseSpec> {
        self.phases.iter().filter(|p| p.kind.is_test())
    }
}

/// `max(1, round(n × scale))`, rounding half away from zero.
pub fn scale_count(n: usize, scale: f64) -> usize {
    ((n as f64 * scale).round() as usize).max(1)
}
