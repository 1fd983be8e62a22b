use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::env::Step;
use crate::error::{Error, Result};
use crate::sim::{RewardBreakdown, SimInfo};

pub const EPISODES_FILE: &str = "episodes.csv";
pub const EPISODES_HEADER: [&str; 14] = [
    "phase",
    "epoch",
    "steps",
    "return",
    "r_vel",
    "r_living",
    "r_col",
    "r_goal",
    "success_lane_change",
    "success_left_turn",
    "success_turn_around",
    "goal",
    "collision",
    "seed",
];

/// Outcome of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub phase: String,
    /// Position in the whole run, counted across phases from 0.
    pub epoch: usize,
    pub steps: usize,
    pub episode_return: f64,
    pub reward: RewardBreakdown,
    /// Per subtask (lane change, left turn, turn around): `None` when that
    /// vehicle was absent, else whether the host got past it without a crash.
    pub success: [Option<bool>; 3],
    pub goal: bool,
    pub collision: bool,
    /// Seconds; not written to the CSV, which must be reproducible.
    pub wall_time: f64,
    pub seed: u64,
}

impl EpisodeLog {
    pub fn new(phase: &str, epoch: usize, seed: u64) -> Self {
        Self {
            phase: phase.to_string(),
            epoch,
            steps: 0,
            episode_return: 0.0,
            reward: RewardBreakdown::default(),
            success: [None; 3],
            goal: false,
            collision: false,
            wall_time: 0.0,
            seed,
        }
    }

    /// Folds in one environment step.
    pub fn record(&mut self, step: &Step<SimInfo>) {
        self.steps += 1;
        self.episode_return += step.reward;
        self.reward.accumulate(&step.info.reward);
        self.goal |= step.info.events.goal;
        self.collision |= step.info.events.collision;
        for k in 0..3 {
            self.success[k] = step.info.present[k].then_some(step.info.zones_passed[k]);
        }
    }

    fn to_record(&self) -> Vec<String> {
        let flag = |b: bool| if b { "1" } else { "0" }.to_string();
        let success = |s: Option<bool>| s.map_or_else(|| "NA".to_string(), flag);
        vec![
            self.phase.clone(),
            self.epoch.to_string(),
            self.steps.to_string(),
            self.episode_return.to_string(),
            self.reward.velocity.to_string(),
            self.reward.living.to_string(),
            self.reward.collision.to_string(),
            self.reward.goal.to_string(),
            success(self.success[0]),
            success(self.success[1]),
            success(self.success[2]),
            flag(self.goal),
            flag(self.collision),
            self.seed.to_string(),
        ]
    }

    fn from_record(r: &csv::StringRecord, line: usize) -> Result<Self> {
        let bad = |what: &str| Error::Contract(format!("episodes.csv line {line}: bad {what}"));
        let field = |i: usize| r.get(i).ok_or_else(|| bad(EPISODES_HEADER[i]));
        let num = |i: usize| field(i)?.parse::<f64>().map_err(|_| bad(EPISODES_HEADER[i]));
        let int = |i: usize| field(i)?.parse::<u64>().map_err(|_| bad(EPISODES_HEADER[i]));
        let flag = |i: usize| match field(i)? {
            "1" => Ok(true),
            "0" => Ok(false),
            _ => Err(bad(EPISODES_HEADER[i])),
        };
        let success = |i: usize| match field(i)? {
            "NA" => Ok(None),
            _ => flag(i).map(Some),
        };
        Ok(Self {
            phase: field(0)?.to_string(),
            epoch: int(1)? as usize,
            steps: int(2)? as usize,
            episode_return: num(3)?,
            reward: RewardBreakdown { velocity: num(4)?, living: num(5)?, collision: num(6)?, goal: num(7)? },
            success: [success(8)?, success(9)?, success(10)?],
            goal: flag(11)?,
            collision: flag(12)?,
            wall_time: 0.0,
            seed: int(13)?,
        })
    }
}

pub fn write_episodes<W: Write>(logs: &[EpisodeLog], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(EPISODES_HEADER)?;
    for l in logs {
        out.write_record(l.to_record())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_episodes<R: Read>(r: R) -> Result<Vec<EpisodeLog>> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.clone();
    if header.iter().ne(EPISODES_HEADER) {
        return Err(Error::Contract(format!("episodes.csv header mismatch: {:?}", header.iter().collect::<Vec<_>>())));
    }
    reader.records().enumerate().map(|(i, rec)| EpisodeLog::from_record(&rec?, i + 2)).collect()
}

pub fn save_episodes(logs: &[EpisodeLog], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    write_episodes(logs, File::create(path)?)
}

pub fn load_episodes(path: &Path) -> Result<Vec<EpisodeLog>> {
    match File::open(path) {
        Ok(f) => read_episodes(f),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingFile(path.to_path_buf())),
        Err(e) => Err(e.into()),
    }
}
