//! Angle histograms and per-session distribution reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::SessionAnalysis;
use crate::commands::{CommandCategory, DogStatusCategory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width_deg: f64,
    pub range: (f64, f64),
    /// Half-open bins `[lo + k·w, lo + (k+1)·w)`. Out-of-range samples are
    /// clamped into the edge bins and also tallied in `underflow`/`overflow`.
    pub counts: Vec<u64>,
    pub n: u64,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn bin_count(bin_width: f64, range: (f64, f64)) -> usize {
        ((range.1 - range.0) / bin_width).ceil() as usize
    }

    pub fn bin_edges(&self, k: usize) -> (f64, f64) {
        let lo = self.range.0 + k as f64 * self.bin_width_deg;
        (lo, lo + self.bin_width_deg)
    }
}

/// Bins the finite values of `values`; non-finite values are ignored.
///
/// Panics if `bin_width <= 0` or `range.1 <= range.0`.
pub fn histogram(values: &[f64], bin_width: f64, range: (f64, f64)) -> Histogram {
    assert!(bin_width > 0.0, "bin width must be positive");
    assert!(range.1 > range.0, "histogram range must be non-empty");
    let bins = Histogram::bin_count(bin_width, range);
    let mut h = Histogram {
        bin_width_deg: bin_width,
        range,
        counts: vec![0; bins],
        n: 0,
        underflow: 0,
        overflow: 0,
    };
    for &v in values.iter().filter(|v| v.is_finite()) {
        let k = ((v - range.0) / bin_width).floor();
        let idx = if v < range.0 {
            h.underflow += 1;
            0
        } else if v >= range.1 || k as usize >= bins {
            h.overflow += 1;
            bins - 1
        } else {
            k as usize
        };
        h.counts[idx] += 1;
        h.n += 1;
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsConfig {
    pub angle_bin_width_deg: f64,
    pub angle_range: (f64, f64),
    pub velocity_bin_width: f64,
    pub velocity_range: (f64, f64),
}

impl Default for AnalyticsConfig {
    fn default() -> Self {
        Self {
            angle_bin_width_deg: 3.0,
            angle_range: (0.0, 180.0),
            velocity_bin_width: 20.0,
            velocity_range: (0.0, 600.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub dataset_name: String,
    pub command_count: u64,
    pub head_angle_hist: Histogram,
    pub body_angle_hist: Histogram,
    pub yaw_hist: Histogram,
    pub pitch_hist: Histogram,
    pub velocity_hist: Histogram,
    pub category_counts: BTreeMap<CommandCategory, u64>,
    pub status_counts: BTreeMap<DogStatusCategory, u64>,
}

/// Builds the report from raw (unsmoothed) angles at each epoch's peak
/// frame and from |velocity| on every in-epoch frame.
pub fn session_report(dataset_name: &str, analysis: &SessionAnalysis, cfg: &AnalyticsConfig) -> SessionReport {
    let epochs = &analysis.epochs;
    let peaks: Vec<u64> = epochs.iter().map(|e| e.peak_frame).collect();
    let at_peaks = |series: &crate::kinematics::AngleSeries| -> Vec<f64> {
        peaks.iter().filter_map(|&f| series.get(f)).collect()
    };
    let angle_hist = |values: &[f64]| histogram(values, cfg.angle_bin_width_deg, cfg.angle_range);

    let yaw: Vec<f64> = epochs.iter().map(|e| e.peak_yaw_deg).collect();
    let pitch: Vec<f64> = epochs.iter().map(|e| e.peak_pitch_deg).collect();
    let speeds: Vec<f64> = epochs
        .iter()
        .flat_map(|e| e.start_frame..=e.end_frame)
        .filter_map(|f| analysis.right_velocity.get(f))
        .map(f64::abs)
        .collect();

    let mut category_counts: BTreeMap<CommandCategory, u64> =
        CommandCategory::ALL.iter().map(|c| (*c, 0)).collect();
    let mut status_counts: BTreeMap<DogStatusCategory, u64> =
        DogStatusCategory::ALL.iter().map(|c| (*c, 0)).collect();
    for e in epochs {
        *category_counts.entry(e.category).or_default() += 1;
        if let Some(s) = e.dog_status {
            *status_counts.entry(s).or_default() += 1;
        }
    }

    SessionReport {
        dataset_name: dataset_name.to_string(),
        command_count: epochs.len() as u64,
        head_angle_hist: angle_hist(&at_peaks(&analysis.dog_head)),
        body_angle_hist: angle_hist(&at_peaks(&analysis.dog_back)),
        yaw_hist: angle_hist(&yaw),
        pitch_hist: angle_hist(&pitch),
        velocity_hist: histogram(&speeds, cfg.velocity_bin_width, cfg.velocity_range),
        category_counts,
        status_counts,
    }
}

fn render_histogram(out: &mut String, title: &str, h: &Histogram) {
    let _ = writeln!(out, "{title} (n={}, bin={}):", h.n, h.bin_width_deg);
    if h.n == 0 {
        let _ = writeln!(out, "  (empty)");
        return;
    }
    let max = *h.counts.iter().max().unwrap_or(&1);
    for (k, &c) in h.counts.iter().enumerate().filter(|(_, c)| **c > 0) {
        let (lo, hi) = h.bin_edges(k);
        let bar = "#".repeat(((c as f64 / max as f64) * 40.0).ceil() as usize);
        let _ = writeln!(out, "  [{lo:>6.1}, {hi:>6.1})  {c:>5}  {bar}");
    }
    if h.underflow + h.overflow > 0 {
        let _ = writeln!(out, "  out of range: {} below, {} above", h.underflow, h.overflow);
    }
}

/// Plain-text rendering for terminals.
pub fn render_report(report: &SessionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dataset: {}", report.dataset_name);
    let _ = writeln!(out, "command_count: {}", report.command_count);
    let _ = writeln!(out, "categories:");
    for (c, n) in &report.category_counts {
        let _ = writeln!(out, "  {:<22} {n}", c.name());
    }
    let _ = writeln!(out, "dog status at command:");
    for (s, n) in &report.status_counts {
        let _ = writeln!(out, "  {:<22} {n}", s.name());
    }
    render_histogram(&mut out, "head angle", &report.head_angle_hist);
    render_histogram(&mut out, "body angle", &report.body_angle_hist);
    render_histogram(&mut out, "command yaw", &report.yaw_hist);
    render_histogram(&mut out, "command pitch", &report.pitch_hist);
    render_histogram(&mut out, "angular velocity", &report.velocity_hist);
    out
}
