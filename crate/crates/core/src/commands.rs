//! Right-hand command epochs and dog head-status analysis.
//!
//! Epochs are found on the smoothed right-arm yaw series with a small
//! hysteresis state machine ([`EpochTracker`]) that is shared by batch
//! analysis and the live practice pipeline, so both agree by construction
//! on identical input.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{AngleSeries, PoseAngles, PoseSeries, VelocitySeries};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CommandError {
    #[error("series has no present values")]
    EmptySeries,
    #[error("every value in the span is absent")]
    AllAbsent,
    #[error("need at least 3 samples to fit three status bands, got {0}")]
    TooFewSamples(usize),
    #[error("samples do not separate into three distinct clusters")]
    DegenerateClusters,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CommandCategory {
    AttentionOrRightTurn,
    MovementControl,
    LeftFrontDirectional,
    Unclassified,
}

impl CommandCategory {
    pub const ALL: [CommandCategory; 4] = [
        CommandCategory::AttentionOrRightTurn,
        CommandCategory::MovementControl,
        CommandCategory::LeftFrontDirectional,
        CommandCategory::Unclassified,
    ];

    /// The yaw range (degrees) that defines the category.
    pub fn yaw_band(self) -> Option<(f64, f64)> {
        match self {
            CommandCategory::AttentionOrRightTurn => Some((90.0, 110.0)),
            CommandCategory::MovementControl => Some((110.0, 130.0)),
            CommandCategory::LeftFrontDirectional => Some((130.0, 150.0)),
            CommandCategory::Unclassified => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CommandCategory::AttentionOrRightTurn => "AttentionOrRightTurn",
            CommandCategory::MovementControl => "MovementControl",
            CommandCategory::LeftFrontDirectional => "LeftFrontDirectional",
            CommandCategory::Unclassified => "Unclassified",
        }
    }
}

/// Bands are closed below and open above, except that 150° still belongs
/// to the top band.
pub fn classify_command(peak_yaw_deg: f64) -> CommandCategory {
    if (90.0..110.0).contains(&peak_yaw_deg) {
        CommandCategory::AttentionOrRightTurn
    } else if (110.0..130.0).contains(&peak_yaw_deg) {
        CommandCategory::MovementControl
    } else if (130.0..=150.0).contains(&peak_yaw_deg) {
        CommandCategory::LeftFrontDirectional
    } else {
        CommandCategory::Unclassified
    }
}

/// Dog posture at the moment a command is issued, ordered by head angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DogStatusCategory {
    WaitingUpright,
    WaitingTilted,
    WalkingAdjust,
}

impl DogStatusCategory {
    pub const ALL: [DogStatusCategory; 3] = [
        DogStatusCategory::WaitingUpright,
        DogStatusCategory::WaitingTilted,
        DogStatusCategory::WalkingAdjust,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DogStatusCategory::WaitingUpright => "WaitingUpright",
            DogStatusCategory::WaitingTilted => "WaitingTilted",
            DogStatusCategory::WalkingAdjust => "WalkingAdjust",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatusThresholds {
    pub low_high_split: f64,
    pub mid_high_split: f64,
}

impl StatusThresholds {
    pub fn new(low_high_split: f64, mid_high_split: f64) -> Result<Self, CommandError> {
        if 0.0 < low_high_split && low_high_split < mid_high_split && mid_high_split < 180.0 {
            Ok(Self { low_high_split, mid_high_split })
        } else {
            Err(CommandError::DegenerateClusters)
        }
    }

    /// Head-angle range covered by `status`.
    pub fn band(&self, status: DogStatusCategory) -> (f64, f64) {
        match status {
            DogStatusCategory::WaitingUpright => (0.0, self.low_high_split),
            DogStatusCategory::WaitingTilted => (self.low_high_split, self.mid_high_split),
            DogStatusCategory::WalkingAdjust => (self.mid_high_split, 180.0),
        }
    }
}

pub fn classify_dog_status(head_angle_deg: f64, thresholds: &StatusThresholds) -> DogStatusCategory {
    if head_angle_deg < thresholds.low_high_split {
        DogStatusCategory::WaitingUpright
    } else if head_angle_deg < thresholds.mid_high_split {
        DogStatusCategory::WaitingTilted
    } else {
        DogStatusCategory::WalkingAdjust
    }
}

const KMEANS_TOLERANCE: f64 = 1e-6;
const KMEANS_MAX_ITER: usize = 1000;

/// Fits the two status splits with 1-D 3-means: centroids start at the
/// 10th/50th/90th percentiles and Lloyd iterations run until no centroid
/// moves more than 1e-6. Splits are the midpoints between adjacent centroids.
pub fn fit_status_thresholds(head_angles: &[f64]) -> Result<StatusThresholds, CommandError> {
    let data = stats::sorted(head_angles.iter().copied());
    if data.len() < 3 {
        return Err(CommandError::TooFewSamples(data.len()));
    }
    let mut centroids = [10.0, 50.0, 90.0].map(|q| stats::percentile_sorted(&data, q).expect("non-empty"));
    for _ in 0..KMEANS_MAX_ITER {
        let mut sums = [0.0; 3];
        let mut counts = [0usize; 3];
        for &x in &data {
            let mut best = 0;
            for k in 1..3 {
                if (x - centroids[k]).abs() < (x - centroids[best]).abs() {
                    best = k;
                }
            }
            sums[best] += x;
            counts[best] += 1;
        }
        let mut shift: f64 = 0.0;
        for k in 0..3 {
            if counts[k] > 0 {
                let next = sums[k] / counts[k] as f64;
                shift = shift.max((next - centroids[k]).abs());
                centroids[k] = next;
            }
        }
        if shift < KMEANS_TOLERANCE {
            break;
        }
    }
    centroids.sort_by(f64::total_cmp);
    if !(centroids[0] < centroids[1] && centroids[1] < centroids[2]) {
        return Err(CommandError::DegenerateClusters);
    }
    StatusThresholds::new((centroids[0] + centroids[1]) / 2.0, (centroids[1] + centroids[2]) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    /// Percentile of the yaw series taken as the resting arm level.
    pub rest_percentile: f64,
    /// Fixed rest level; overrides the percentile estimate when set.
    pub rest_override_deg: Option<f64>,
    pub enter_hysteresis_deg: f64,
    pub retract_drop_deg: f64,
    pub min_epoch_frames: u64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            rest_percentile: 20.0,
            rest_override_deg: None,
            enter_hysteresis_deg: 10.0,
            retract_drop_deg: 15.0,
            min_epoch_frames: 6,
        }
    }
}

/// Frame span of one detected command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochSpan {
    pub start_frame: u64,
    pub peak_frame: u64,
    pub end_frame: u64,
}

impl EpochSpan {
    pub fn contains(&self, frame: u64) -> bool {
        (self.start_frame..=self.end_frame).contains(&frame)
    }

    pub fn frame_count(&self) -> u64 {
        self.end_frame - self.start_frame + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TrackerState {
    Idle,
    Active { start: u64, peak: u64, peak_value: f64, last: u64 },
    Retracted { trough: f64 },
}

/// Streaming epoch detector over a smoothed yaw signal.
///
/// An epoch opens when yaw rises more than `enter_hysteresis_deg` above the
/// rest level (or above the trough after a retraction) and closes on the
/// frame before yaw drops `retract_drop_deg` below the running peak or
/// falls back into the rest band.
#[derive(Debug, Clone)]
pub struct EpochTracker {
    cfg: SegmentationConfig,
    state: TrackerState,
}

impl EpochTracker {
    pub fn new(cfg: SegmentationConfig) -> Self {
        Self { cfg, state: TrackerState::Idle }
    }

    pub fn is_active(&self) -> bool {
        matches!(self.state, TrackerState::Active { .. })
    }

    /// Peak frame of the epoch currently open, if any.
    pub fn open_peak(&self) -> Option<u64> {
        match self.state {
            TrackerState::Active { peak, .. } => Some(peak),
            _ => None,
        }
    }

    fn close(&self, start: u64, peak: u64, end: u64) -> Option<EpochSpan> {
        (end - start + 1 >= self.cfg.min_epoch_frames).then_some(EpochSpan {
            start_frame: start,
            peak_frame: peak,
            end_frame: end,
        })
    }

    /// Feeds one frame; `rest` is the current rest-level estimate.
    pub fn push(&mut self, frame: u64, value: Option<f64>, rest: f64) -> Option<EpochSpan> {
        let v = value?;
        let enter = rest + self.cfg.enter_hysteresis_deg;
        match self.state {
            TrackerState::Idle => {
                if v > enter {
                    self.state = TrackerState::Active { start: frame, peak: frame, peak_value: v, last: frame };
                }
                None
            }
            TrackerState::Active { start, peak, peak_value, last } => {
                if v > peak_value {
                    self.state = TrackerState::Active { start, peak: frame, peak_value: v, last: frame };
                    None
                } else if v < peak_value - self.cfg.retract_drop_deg || v <= enter {
                    self.state = if v <= enter { TrackerState::Idle } else { TrackerState::Retracted { trough: v } };
                    self.close(start, peak, last)
                } else {
                    self.state = TrackerState::Active { start, peak, peak_value, last: frame };
                    None
                }
            }
            TrackerState::Retracted { trough } => {
                if v <= enter {
                    self.state = TrackerState::Idle;
                } else if v > trough + self.cfg.enter_hysteresis_deg {
                    self.state = TrackerState::Active { start: frame, peak: frame, peak_value: v, last: frame };
                } else {
                    self.state = TrackerState::Retracted { trough: trough.min(v) };
                }
                None
            }
        }
    }

    /// Closes an epoch still open at the end of the stream.
    pub fn finish(&mut self) -> Option<EpochSpan> {
        let out = match self.state {
            TrackerState::Active { start, peak, last, .. } => self.close(start, peak, last),
            _ => None,
        };
        self.state = TrackerState::Idle;
        out
    }
}

pub fn rest_level(yaw: &AngleSeries, cfg: &SegmentationConfig) -> Option<f64> {
    cfg.rest_override_deg.or_else(|| stats::percentile(yaw.present(), cfg.rest_percentile))
}

/// Segments command epochs from a smoothed right-arm yaw series.
pub fn segment_commands(yaw: &AngleSeries, cfg: &SegmentationConfig) -> Result<Vec<EpochSpan>, CommandError> {
    let rest = rest_level(yaw, cfg).ok_or(CommandError::EmptySeries)?;
    let mut tracker = EpochTracker::new(cfg.clone());
    let mut out: Vec<EpochSpan> = yaw
        .values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| tracker.push(i as u64, *v, rest))
        .collect();
    out.extend(tracker.finish());
    Ok(out)
}

/// Frame of maximum yaw within `[start, end]`; ties resolve to the earliest.
pub fn max_extension_frame(start: u64, end: u64, yaw: &AngleSeries) -> Result<u64, CommandError> {
    let mut best: Option<(u64, f64)> = None;
    for frame in start..=end {
        if let Some(v) = yaw.get(frame) {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((frame, v));
            }
        }
    }
    best.map(|(f, _)| f).ok_or(CommandError::AllAbsent)
}

/// A classified right-hand command; this is also the `epochs.jsonl` line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandEpoch {
    pub start_frame: u64,
    pub peak_frame: u64,
    pub end_frame: u64,
    pub peak_yaw_deg: f64,
    pub peak_pitch_deg: f64,
    pub peak_velocity_deg_s: f64,
    pub category: CommandCategory,
    pub dog_status: Option<DogStatusCategory>,
}

impl CommandEpoch {
    pub fn span(&self) -> EpochSpan {
        EpochSpan { start_frame: self.start_frame, peak_frame: self.peak_frame, end_frame: self.end_frame }
    }

    pub fn peak_angles(&self) -> PoseAngles {
        PoseAngles { yaw_deg: self.peak_yaw_deg, pitch_deg: self.peak_pitch_deg }
    }

    pub fn contains(&self, frame: u64) -> bool {
        self.span().contains(frame)
    }
}

/// Fills in peak angles (raw, at the peak frame), peak |velocity| over the
/// span and the yaw category. Dog status is left unset.
pub fn describe_epoch(span: EpochSpan, raw: &PoseSeries, velocity: &VelocitySeries) -> CommandEpoch {
    let peak = raw.get(span.peak_frame).unwrap_or(PoseAngles { yaw_deg: f64::NAN, pitch_deg: f64::NAN });
    let peak_velocity = (span.start_frame..=span.end_frame)
        .filter_map(|f| velocity.get(f))
        .map(f64::abs)
        .fold(0.0, f64::max);
    CommandEpoch {
        start_frame: span.start_frame,
        peak_frame: span.peak_frame,
        end_frame: span.end_frame,
        peak_yaw_deg: peak.yaw_deg,
        peak_pitch_deg: peak.pitch_deg,
        peak_velocity_deg_s: peak_velocity,
        category: classify_command(peak.yaw_deg),
        dog_status: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TriggerConfig {
    /// Head angles below this mean the dog is turned toward the trainer.
    pub turn_threshold_deg: f64,
    pub sustain_frames: u64,
    /// The detector re-arms once the angle exceeds threshold + hysteresis.
    pub rearm_hysteresis_deg: f64,
}

impl Default for TriggerConfig {
    fn default() -> Self {
        Self { turn_threshold_deg: 40.0, sustain_frames: 5, rearm_hysteresis_deg: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerEvent {
    /// Frame on which the dip became sustained.
    pub frame: u64,
    pub head_angle_deg: f64,
    /// Length of the whole dip below the threshold.
    pub sustained_frames: u64,
}

pub fn detect_head_turn_triggers(head: &AngleSeries, cfg: &TriggerConfig) -> Vec<TriggerEvent> {
    let mut events: Vec<TriggerEvent> = Vec::new();
    let mut armed = true;
    let mut run = 0u64;
    let mut current: Option<usize> = None;
    for (i, v) in head.values.iter().enumerate() {
        let Some(v) = *v else {
            run = 0;
            current = None;
            continue;
        };
        if v < cfg.turn_threshold_deg {
            run += 1;
            if let Some(idx) = current {
                events[idx].sustained_frames = run;
            } else if armed && run >= cfg.sustain_frames {
                events.push(TriggerEvent { frame: i as u64, head_angle_deg: v, sustained_frames: run });
                current = Some(events.len() - 1);
                armed = false;
            }
        } else {
            run = 0;
            current = None;
            if v > cfg.turn_threshold_deg + cfg.rearm_hysteresis_deg {
                armed = true;
            }
        }
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::Subject;

    fn series(values: impl IntoIterator<Item = f64>) -> AngleSeries {
        AngleSeries { subject: Subject::RightArm, fps: 30.0, values: values.into_iter().map(Some).collect() }
    }

    /// Symmetric linear bump from `rest` to `peak` over `half` frames each side.
    fn bump(rest: f64, peak: f64, half: usize) -> Vec<f64> {
        (0..=2 * half)
            .map(|i| {
                let d = (i as f64 - half as f64).abs() / half as f64;
                peak - (peak - rest) * d
            })
            .collect()
    }

    #[test]
    fn classification_table() {
        assert_eq!(classify_command(95.0), CommandCategory::AttentionOrRightTurn);
        assert_eq!(classify_command(120.0), CommandCategory::MovementControl);
        assert_eq!(classify_command(140.0), CommandCategory::LeftFrontDirectional);
        assert_eq!(classify_command(60.0), CommandCategory::Unclassified);
        assert_eq!(classify_command(110.0), CommandCategory::MovementControl);
        assert_eq!(classify_command(130.0), CommandCategory::LeftFrontDirectional);
        assert_eq!(classify_command(150.0), CommandCategory::LeftFrontDirectional);
        assert_eq!(classify_command(89.9), CommandCategory::Unclassified);
        assert_eq!(classify_command(150.1), CommandCategory::Unclassified);
    }

    #[test]
    fn flat_series_has_no_epochs() {
        assert!(segment_commands(&series(vec![60.0; 100]), &SegmentationConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn empty_series_is_an_error() {
        let s = AngleSeries { subject: Subject::RightArm, fps: 30.0, values: vec![None; 4] };
        assert_eq!(segment_commands(&s, &SegmentationConfig::default()), Err(CommandError::EmptySeries));
    }

    #[test]
    fn single_bump() {
        let mut v = vec![60.0; 40];
        v.extend(bump(60.0, 120.0, 10));
        v.extend(vec![60.0; 40]);
        let epochs = segment_commands(&series(v), &SegmentationConfig::default()).unwrap();
        assert_eq!(epochs.len(), 1);
        // Apex of the bump sits at 40 + 10; enters above 70 at 40 + 2,
        // retracts below 105 at 40 + 13.
        assert_eq!(epochs[0], EpochSpan { start_frame: 42, peak_frame: 50, end_frame: 52 });
    }

    #[test]
    fn two_bumps_are_disjoint() {
        let mut v = vec![60.0; 40];
        v.extend(bump(60.0, 120.0, 10));
        v.extend(vec![60.0; 30]);
        v.extend(bump(60.0, 100.0, 10));
        v.extend(vec![60.0; 40]);
        let epochs = segment_commands(&series(v), &SegmentationConfig::default()).unwrap();
        assert_eq!(epochs.len(), 2);
        assert!(epochs[0].end_frame < epochs[1].start_frame);
        assert_eq!(epochs[0].peak_frame, 50);
        assert_eq!(epochs[1].peak_frame, 40 + 21 + 30 + 10);
    }

    #[test]
    fn transition_without_rest_splits_epochs() {
        // 60 -> 120, drop to 95, rise to 140, back to 60.
        let mut v = vec![60.0; 30];
        v.extend((0..=10).map(|i| 60.0 + 6.0 * i as f64));
        v.extend((1..=5).map(|i| 120.0 - 5.0 * i as f64));
        v.extend((1..=9).map(|i| 95.0 + 5.0 * i as f64));
        v.extend((1..=8).map(|i| 140.0 - 10.0 * i as f64));
        v.extend(vec![60.0; 30]);
        let epochs = segment_commands(&series(v), &SegmentationConfig::default()).unwrap();
        assert_eq!(epochs.len(), 2);
        assert_eq!(epochs[0].peak_frame, 40);
        assert_eq!(epochs[1].peak_frame, 54);
    }

    #[test]
    fn short_blip_is_dropped() {
        let mut v = vec![60.0; 30];
        v.extend([75.0, 90.0, 75.0]);
        v.extend(vec![60.0; 30]);
        assert!(segment_commands(&series(v), &SegmentationConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn max_extension_examples() {
        let s = series([1.0, 3.0, 5.0, 4.0, 2.0]);
        assert_eq!(max_extension_frame(0, 4, &s), Ok(2));
        let plateau = series([1.0, 5.0, 5.0, 5.0, 2.0]);
        assert_eq!(max_extension_frame(0, 4, &plateau), Ok(1));
        let absent = AngleSeries { subject: Subject::RightArm, fps: 30.0, values: vec![None; 3] };
        assert_eq!(max_extension_frame(0, 2, &absent), Err(CommandError::AllAbsent));
    }

    /// Brute force over every split of the sorted data into three contiguous groups.
    fn brute_force_splits(samples: &[f64]) -> (f64, f64) {
        let d = stats::sorted(samples.iter().copied());
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let sse = |s: &[f64]| {
            let m = mean(s);
            s.iter().map(|x| (x - m).powi(2)).sum::<f64>()
        };
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 1..d.len() - 1 {
            for j in i + 1..d.len() {
                let cost = sse(&d[..i]) + sse(&d[i..j]) + sse(&d[j..]);
                if cost < best.0 {
                    let (a, b, c) = (mean(&d[..i]), mean(&d[i..j]), mean(&d[j..]));
                    best = (cost, (a + b) / 2.0, (b + c) / 2.0);
                }
            }
        }
        (best.1, best.2)
    }

    #[test]
    fn three_tight_clusters() {
        let samples = [10.0, 11.0, 12.0, 50.0, 51.0, 52.0, 90.0, 91.0, 92.0];
        let t = fit_status_thresholds(&samples).unwrap();
        let (a, b) = brute_force_splits(&samples);
        assert!((a - 31.0).abs() < 1e-9 && (b - 71.0).abs() < 1e-9);
        assert!((t.low_high_split - a).abs() < 1e-9);
        assert!((t.mid_high_split - b).abs() < 1e-9);
    }

    #[test]
    fn singleton_gets_own_centroid() {
        let samples = [10.0, 11.0, 12.0, 50.0, 51.0, 52.0, 150.0];
        let t = fit_status_thresholds(&samples).unwrap();
        let (a, b) = brute_force_splits(&samples);
        assert!((t.low_high_split - a).abs() < 1e-9);
        assert!((t.mid_high_split - b).abs() < 1e-9);
        assert!((t.mid_high_split - 100.5).abs() < 1e-9);
    }

    #[test]
    fn degenerate_samples() {
        assert_eq!(fit_status_thresholds(&[40.0; 6]), Err(CommandError::DegenerateClusters));
        assert_eq!(fit_status_thresholds(&[1.0, 2.0]), Err(CommandError::TooFewSamples(2)));
    }

    #[test]
    fn dog_status_bands() {
        let t = StatusThresholds::new(31.0, 71.0).unwrap();
        assert_eq!(classify_dog_status(10.0, &t), DogStatusCategory::WaitingUpright);
        assert_eq!(classify_dog_status(50.0, &t), DogStatusCategory::WaitingTilted);
        assert_eq!(classify_dog_status(100.0, &t), DogStatusCategory::WalkingAdjust);
        assert_eq!(classify_dog_status(31.0, &t), DogStatusCategory::WaitingTilted);
    }

    fn head(values: Vec<f64>) -> AngleSeries {
        AngleSeries { subject: Subject::DogHead, fps: 30.0, values: values.into_iter().map(Some).collect() }
    }

    #[test]
    fn triggers_never_below() {
        assert!(detect_head_turn_triggers(&head(vec![90.0; 50]), &TriggerConfig::default()).is_empty());
    }

    #[test]
    fn sustained_dip_triggers_on_fifth_frame() {
        let mut v = vec![90.0; 20];
        v.extend(vec![25.0; 10]);
        v.extend(vec![90.0; 20]);
        let events = detect_head_turn_triggers(&head(v), &TriggerConfig::default());
        assert_eq!(events, vec![TriggerEvent { frame: 24, head_angle_deg: 25.0, sustained_frames: 10 }]);
    }

    #[test]
    fn short_dip_does_not_trigger() {
        let mut v = vec![90.0; 20];
        v.extend(vec![25.0; 3]);
        v.extend(vec![90.0; 20]);
        assert!(detect_head_turn_triggers(&head(v), &TriggerConfig::default()).is_empty());
    }

    #[test]
    fn rearm_requires_hysteresis() {
        let mut v = vec![90.0; 10];
        v.extend(vec![25.0; 8]);
        v.extend(vec![42.0; 5]); // above threshold, below threshold + hysteresis
        v.extend(vec![25.0; 8]);
        v.extend(vec![90.0; 5]);
        v.extend(vec![25.0; 8]);
        let events = detect_head_turn_triggers(&head(v), &TriggerConfig::default());
        assert_eq!(events.len(), 2);
        assert_eq!(events[1].frame, 10 + 8 + 5 + 8 + 5 + 4);
    }
}
