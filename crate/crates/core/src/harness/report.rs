use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};

use super::config::PhaseKind;
use super::log::{load_episodes, EpisodeLog, EPISODES_FILE};
use super::metrics::{ema, success_rates, SuccessTable};
use super::run::RunSummary;
use crate::error::{Error, Result};

pub const LEARNING_CURVE_FILE: &str = "learning_curve.csv";
pub const SUCCESS_TABLE_FILE: &str = "success_table.csv";
pub const SVG_FILE: &str = "curves.svg";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub ema_weight: f64,
    /// Final test episodes per run that enter the success table.
    pub window: usize,
    pub svg: bool,
    /// Where the success table and the plot go.
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutput {
    /// One per run directory, written inside it.
    pub learning_curves: Vec<PathBuf>,
    pub success_table: PathBuf,
    pub svg: Option<PathBuf>,
    pub table: SuccessTable,
}

struct Run {
    label: String,
    logs: Vec<EpisodeLog>,
    returns_ema: Vec<f64>,
}

fn run_label(dir: &Path) -> Result<(String, u64)> {
    match RunSummary::load(dir) {
        Ok(s) => Ok((s.method.name().to_string(), s.seed)),
        Err(Error::MissingFile(_)) => {
            let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
            Ok((name, 0))
        }
        Err(e) => Err(e),
    }
}

fn write_learning_curve(path: &Path, logs: &[EpisodeLog], returns_ema: &[f64], goal_ema: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(["epoch", "phase", "return", "return_ema", "goal", "goal_ema"])?;
    for ((l, r), g) in logs.iter().zip(returns_ema).zip(goal_ema) {
        w.write_record([
            l.epoch.to_string(),
            l.phase.clone(),
            l.episode_return.to_string(),
            r.to_string(),
            u8::from(l.goal).to_string(),
            g.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `episodes.csv` from every run directory and writes the learning
/// curves (into each run directory), the success table and optionally the
/// plot (into `options.out`). Output depends only on the logs and options.
pub fn report(run_dirs: &[PathBuf], options: &ReportOptions) -> Result<ReportOutput> {
    if run_dirs.is_empty() {
        return Err(Error::Contract("no run directories given".into()));
    }
    let mut runs = Vec::new();
    let mut curves = Vec::new();
    for dir in run_dirs {
        let logs = load_episodes(&dir.join(EPISODES_FILE))?;
        let (method, seed) = run_label(dir)?;
        let returns: Vec<f64> = logs.iter().map(|l| l.episode_return).collect();
        let goals: Vec<f64> = logs.iter().map(|l| f64::from(u8::from(l.goal))).collect();
        let returns_ema = ema(&returns, options.ema_weight)?;
        let path = dir.join(LEARNING_CURVE_FILE);
        write_learning_curve(&path, &logs, &returns_ema, &ema(&goals, options.ema_weight)?)?;
        curves.push(path);
        runs.push((method, seed, logs, returns_ema));
    }
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for (m, ..) in &runs {
        *seen.entry(m.as_str()).or_default() += 1;
    }
    let runs: Vec<Run> = runs
        .iter()
        .map(|(m, seed, logs, returns_ema)| Run {
            label: if seen[m.as_str()] > 1 { format!("{m}_s{seed}") } else { m.clone() },
            logs: logs.clone(),
            returns_ema: returns_ema.clone(),
        })
        .collect();

    let mut methods = Vec::new();
    for run in &runs {
        let test: Vec<EpisodeLog> = run.logs.iter().filter(|l| l.phase == PhaseKind::MixedTest.name()).cloned().collect();
        let rates = success_rates(&test, options.window).map_err(|e| {
            Error::Contract(format!("{}: {e} (test episodes only)", run.label))
        })?;
        methods.push((run.label.clone(), rates));
    }
    let table = SuccessTable { methods, window: options.window };
    std::fs::create_dir_all(&options.out)?;
    let success_table = options.out.join(SUCCESS_TABLE_FILE);
    table.write_csv(File::create(&success_table)?)?;
    let svg = if options.svg {
        let path = options.out.join(SVG_FILE);
        std::fs::write(&path, render_svg(&runs))?;
        Some(path)
    } else {
        None
    };
    Ok(ReportOutput { learning_curves: curves, success_table, svg, table })
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// EMA return against epoch, one polyline per run.
fn render_svg(runs: &[Run]) -> String {
    let (w, h, left, right, top, bottom) = (800.0, 480.0, 70.0, 160.0, 20.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let max_epoch = runs.iter().flat_map(|r| r.logs.iter().map(|l| l.epoch)).max().unwrap_or(0).max(1) as f64;
    let values = runs.iter().flat_map(|r| r.returns_ema.iter().copied());
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        (lo, hi) = (lo - 1.0, hi + 1.0);
    }
    let x = |e: f64| left + e / max_epoch * pw;
    let y = |v: f64| top + (hi - v) / (hi - lo) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M {left} {top} L {left} {} L {} {}" fill="none" stroke="black"/>"#,
        top + ph,
        left + pw,
        top + ph
    );
    for (label, v) in [(format!("{hi:.1}"), hi), (format!("{lo:.1}"), lo)] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">{label}</text>"#, left - 6.0, y(v) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{left}" y="{}" font-size="11" text-anchor="middle">0</text>"#, top + ph + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{max_epoch}</text>"#, left + pw, top + ph + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">epoch</text>"#, left + pw / 2.0, h - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">return (EMA)</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, run) in runs.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> =
            run.logs.iter().zip(&run.returns_ema).map(|(l, v)| format!("{:.2},{:.2}", x(l.epoch as f64), y(*v))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, points.join(" "));
        let ly = top + 16.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">{}</text>"#, lx + 26.0, ly + 4.0, escape(&run.label));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::log::save_episodes;
    use crate::harness::run::Method;

    fn fake_run(dir: &Path, method: Method, seed: u64) {
        let logs: Vec<EpisodeLog> = (0..30)
            .map(|i| EpisodeLog {
                episode_return: (i as f64 * 0.37).sin() * 10.0,
                goal: i % 3 == 0,
                success: [Some(i % 2 == 0), None, Some(i % 5 == 0)],
                ..EpisodeLog::new(if i < 20 { "lane_change" } else { "mixed_test" }, i, seed)
            })
            .collect();
        save_episodes(&logs, &dir.join(EPISODES_FILE)).unwrap();
        RunSummary::new(method, seed, logs.len()).save(dir).unwrap();
    }

    #[test]
    fn report_is_deterministic_and_complete() {
        let tmp = tempfile::tempdir().unwrap();
        let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
        fake_run(&a, Method::Mp, 0);
        fake_run(&b, Method::FlatDdpg, 0);
        let opts = ReportOptions { ema_weight: 0.95, window: 10, svg: true, out: tmp.path().join("out") };
        let first = report(&[a.clone(), b.clone()], &opts).unwrap();
        let table1 = std::fs::read(&first.success_table).unwrap();
        let svg1 = std::fs::read_to_string(first.svg.as_ref().unwrap()).unwrap();
        let second = report(&[a.clone(), b], &opts).unwrap();
        assert_eq!(table1, std::fs::read(&second.success_table).unwrap());
        assert_eq!(svg1, std::fs::read_to_string(second.svg.unwrap()).unwrap());
        assert_eq!(svg1.matches("<polyline").count(), 2);
        let text = String::from_utf8(table1).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("subtask,mp,flat_ddpg\n"));
        // Window = last 10 test episodes (epochs 20..30): lane change on even epochs.
        assert!(text.contains("lane_change,0.5,0.5\nleft_turn,NA,NA\nturn_around,0.2,0.2\n"));
    }

    #[test]
    fn missing_logs_name_the_file() {
        let tmp = tempfile::tempdir().unwrap();
        let opts = ReportOptions { ema_weight: 0.95, window: 10, svg: false, out: tmp.path().to_path_buf() };
        match report(&[tmp.path().join("nope")], &opts) {
            Err(Error::MissingFile(p)) => assert!(p.ends_with("nope/episodes.csv")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn window_larger_than_test_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        fake_run(tmp.path(), Method::TabularQ, 1);
        let opts = ReportOptions { ema_weight: 0.95, window: 11, svg: false, out: tmp.path().to_path_buf() };
        assert!(matches!(report(&[tmp.path().to_path_buf()], &opts), Err(Error::Contract(_))));
    }
}
