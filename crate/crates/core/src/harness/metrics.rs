use std::io::Write;

use super::log::EpisodeLog;
use crate::error::{Error, Result};

/// Exponential moving average: `y₀ = x₀`, `yₜ = w·yₜ₋₁ + (1−w)·xₜ`.
pub fn ema(series: &[f64], w: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&w) {
        return Err(Error::Contract(format!("EMA weight {w} outside [0, 1)")));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut prev: Option<f64> = None;
    for &x in series {
        let y = match prev {
            None => x,
            Some(p) => w * p + (1.0 - w) * x,
        };
        out.push(y);
        prev = Some(y);
    }
    Ok(out)
}

/// Success rates over the final episodes of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessRates {
    /// Per subtask; `None` when the subtask never appeared in the window.
    pub subtasks: [Option<f64>; 3],
    pub goal: f64,
    pub window: usize,
}

/// Rates over the last `window` entries of `logs`: a subtask's rate counts
/// only the episodes in which it was present; the goal rate counts all.
pub fn success_rates(logs: &[EpisodeLog], window: usize) -> Result<SuccessRates> {
    if window == 0 || window > logs.len() {
        return Err(Error::Contract(format!("success window {window} but {} episodes are available", logs.len())));
    }
    let tail = &logs[logs.len() - window..];
    let mut subtasks = [None; 3];
    for (k, rate) in subtasks.iter_mut().enumerate() {
        let present: Vec<bool> = tail.iter().filter_map(|l| l.success[k]).collect();
        if !present.is_empty() {
            *rate = Some(present.iter().filter(|&&s| s).count() as f64 / present.len() as f64);
        }
    }
    let goal = tail.iter().filter(|l| l.goal).count() as f64 / window as f64;
    Ok(SuccessRates { subtasks, goal, window })
}

pub const SUCCESS_ROWS: [&str; 4] = ["lane_change", "left_turn", "turn_around", "goal"];

/// One column per method, one row per subtask plus the goal row.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessTable {
    pub methods: Vec<(String, SuccessRates)>,
    pub window: usize,
}

impl SuccessTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["subtask".to_string()];
        header.extend(self.methods.iter().map(|(m, _)| m.clone()));
        out.write_record(&header)?;
        for (row, name) in SUCCESS_ROWS.iter().enumerate() {
            let mut record = vec![name.to_string()];
            for (_, rates) in &self.methods {
                let value = if row < 3 { rates.subtasks[row] } else { Some(rates.goal) };
                record.push(value.map_or_else(|| "NA".to_string(), |v| v.to_string()));
            }
            out.write_record(&record)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(success: [Option<bool>; 3], goal: bool) -> EpisodeLog {
        EpisodeLog { success, goal, ..EpisodeLog::new("mixed_test", 0, 0) }
    }

    #[test]
    fn ema_hand_recurrence() {
        let y = ema(&[0.0, 10.0, 10.0], 0.95).unwrap();
        assert_eq!(y[0], 0.0);
        assert!((y[1] - 0.5).abs() < 1e-12);
        assert!((y[2] - 0.975).abs() < 1e-12);
        assert_eq!(ema(&[1.0, 2.0, 3.0], 0.0).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(ema(&[], 0.5).unwrap(), Vec::<f64>::new());
        assert!(ema(&[1.0], 1.0).is_err());
    }

    #[test]
    fn counting_rates() {
        let mut logs: Vec<EpisodeLog> = (0..10).map(|i| log([Some(i < 7), None, None], i % 2 == 0)).collect();
        let r = success_rates(&logs, 10).unwrap();
        assert_eq!(r.subtasks, [Some(0.7), None, None]);
        assert_eq!(r.goal, 0.5);
        logs.insert(0, log([Some(false); 3], false));
        assert_eq!(success_rates(&logs, 10).unwrap(), r, "only the final window counts");
        assert!(matches!(success_rates(&logs, 12), Err(Error::Contract(_))));
    }

    #[test]
    fn all_success_is_one() {
        let logs: Vec<EpisodeLog> = (0..5).map(|_| log([Some(true); 3], true)).collect();
        let r = success_rates(&logs, 5).unwrap();
        assert_eq!(r.subtasks, [Some(1.0); 3]);
        assert_eq!(r.goal, 1.0);
    }

    #[test]
    fn table_layout() {
        let r = SuccessRates { subtasks: [Some(0.7), None, Some(0.25)], goal: 0.5, window: 10 };
        let t = SuccessTable { methods: vec![("mp".into(), r), ("flat_ddpg".into(), r)], window: 10 };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "subtask,mp,flat_ddpg\nlane_change,0.7,0.7\nleft_turn,NA,NA\nturn_around,0.25,0.25\ngoal,0.5,0.5\n"
        );
    }
}
