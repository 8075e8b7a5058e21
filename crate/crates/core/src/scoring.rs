//! Practice poses against the expert session: epoch matching, per-epoch
//! deviation scores, and the incremental pipeline used during live replay.
//!
//! Practice poses are measured against the expert recording's marker axes
//! at the same frame.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::SessionAnalysis;
use crate::commands::{describe_epoch, segment_commands, CommandEpoch, EpochTracker, SegmentationConfig};
use crate::cues::{practice_overlay, OverlaySpec};
use crate::geometry::AxesFrame;
use crate::kinematics::{
    angular_velocity, arm_vector, pose_angles, smooth_series, AngleSeries, KinematicsConfig, PoseAngles, PoseSeries,
    Subject,
};
use crate::session::{ArmKeypoints, Keypoint};
use crate::stats::RunningPercentile;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ScoringError {
    #[error("score weights must be non-negative and sum to 1, got {0}")]
    InvalidWeights(f64),
    #[error("normalization constants must be positive")]
    InvalidNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LiveError {
    #[error("pose seq {seq} arrived after seq {last}")]
    OutOfOrderPose { seq: u64, last: u64 },
    #[error("pose frame {0} is outside the session")]
    FrameOutOfRange(u64),
}

/// One learner pose tied to a frame of the replay timeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PracticePose {
    pub frame_index: u64,
    pub right_arm: ArmKeypoints,
    pub received_seq: u64,
}

/// Serialized practice pose; the line format of practice files and the body
/// of the `practice_pose` wire message.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PracticePoseLine {
    pub frame: u64,
    pub seq: u64,
    /// (finger, wrist, elbow)
    pub right_arm: [Keypoint; 3],
}

impl From<PracticePoseLine> for PracticePose {
    fn from(l: PracticePoseLine) -> Self {
        let [f, w, e] = l.right_arm;
        PracticePose { frame_index: l.frame, right_arm: ArmKeypoints::right(f, w, e), received_seq: l.seq }
    }
}

impl From<&PracticePose> for PracticePoseLine {
    fn from(p: &PracticePose) -> Self {
        PracticePoseLine { frame: p.frame_index, seq: p.received_seq, right_arm: p.right_arm.points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PracticeScore {
    /// Index of the expert epoch in the session's epoch list.
    pub epoch_id: usize,
    pub expert_peak_frame: u64,
    /// Practice peak minus expert peak; absent on a miss.
    pub timing_offset_ms: Option<f64>,
    pub yaw_error_deg: Option<f64>,
    pub pitch_error_deg: Option<f64>,
    pub velocity_error_deg_s: Option<f64>,
    pub category_match: bool,
    pub composite: f64,
}

impl PracticeScore {
    pub fn is_miss(&self) -> bool {
        self.timing_offset_ms.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreWeights {
    pub yaw: f64,
    pub pitch: f64,
    pub timing: f64,
    pub velocity: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self { yaw: 0.4, pitch: 0.2, timing: 0.2, velocity: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringConfig {
    pub match_window_frames: u64,
    pub weights: ScoreWeights,
    pub yaw_norm_deg: f64,
    pub pitch_norm_deg: f64,
    pub timing_norm_ms: f64,
    /// Defaults to the expert session's haptic `v_max`.
    pub velocity_norm_deg_s: Option<f64>,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            match_window_frames: 45,
            weights: ScoreWeights::default(),
            yaw_norm_deg: 30.0,
            pitch_norm_deg: 30.0,
            timing_norm_ms: 1000.0,
            velocity_norm_deg_s: None,
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<(), ScoringError> {
        let w = self.weights;
        let sum = w.yaw + w.pitch + w.timing + w.velocity;
        if [w.yaw, w.pitch, w.timing, w.velocity].iter().any(|x| *x < 0.0 || !x.is_finite()) || (sum - 1.0).abs() > 1e-9 {
            return Err(ScoringError::InvalidWeights(sum));
        }
        let norms = [self.yaw_norm_deg, self.pitch_norm_deg, self.timing_norm_ms];
        if norms.iter().chain(self.velocity_norm_deg_s.iter()).any(|n| !(n.is_finite() && *n > 0.0)) {
            return Err(ScoringError::InvalidNorm);
        }
        Ok(())
    }
}

/// Greedy nearest-peak matching within `±window_frames`: candidate pairs are
/// taken in order of increasing peak distance (ties by expert, then practice
/// index). Returns one entry per expert epoch, in order.
pub fn match_epochs(expert: &[CommandEpoch], practice: &[CommandEpoch], window_frames: u64) -> Vec<(usize, Option<usize>)> {
    let mut candidates: Vec<(u64, usize, usize)> = Vec::new();
    for (i, e) in expert.iter().enumerate() {
        for (j, p) in practice.iter().enumerate() {
            let d = e.peak_frame.abs_diff(p.peak_frame);
            if d <= window_frames {
                candidates.push((d, i, j));
            }
        }
    }
    candidates.sort_unstable();
    let mut expert_match = vec![None; expert.len()];
    let mut taken = vec![false; practice.len()];
    for (_, i, j) in candidates {
        if expert_match[i].is_none() && !taken[j] {
            expert_match[i] = Some(j);
            taken[j] = true;
        }
    }
    expert_match.into_iter().enumerate().collect()
}

/// Scores one expert epoch against its matched practice epoch; a miss
/// scores 0. Errors are signed (practice minus expert); the composite uses
/// their magnitudes.
pub fn score_practice(
    epoch_id: usize,
    expert: &CommandEpoch,
    practice: Option<&CommandEpoch>,
    fps: f64,
    velocity_norm: f64,
    cfg: &ScoringConfig,
) -> PracticeScore {
    let Some(p) = practice else {
        return PracticeScore {
            epoch_id,
            expert_peak_frame: expert.peak_frame,
            timing_offset_ms: None,
            yaw_error_deg: None,
            pitch_error_deg: None,
            velocity_error_deg_s: None,
            category_match: false,
            composite: 0.0,
        };
    };
    let timing = (p.peak_frame as f64 - expert.peak_frame as f64) / fps * 1000.0;
    let yaw = p.peak_yaw_deg - expert.peak_yaw_deg;
    let pitch = p.peak_pitch_deg - expert.peak_pitch_deg;
    let velocity = p.peak_velocity_deg_s - expert.peak_velocity_deg_s;
    let w = cfg.weights;
    let penalty = w.yaw * yaw.abs() / cfg.yaw_norm_deg
        + w.pitch * pitch.abs() / cfg.pitch_norm_deg
        + w.timing * timing.abs() / cfg.timing_norm_ms
        + w.velocity * velocity.abs() / velocity_norm;
    let composite = if penalty.is_nan() { 0.0 } else { (1.0 - penalty).clamp(0.0, 1.0) };
    PracticeScore {
        epoch_id,
        expert_peak_frame: expert.peak_frame,
        timing_offset_ms: Some(timing),
        yaw_error_deg: Some(yaw),
        pitch_error_deg: Some(pitch),
        velocity_error_deg_s: Some(velocity),
        category_match: p.category == expert.category,
        composite,
    }
}

fn practice_angles(pose: &PracticePose, axes: Option<AxesFrame>, kin: &KinematicsConfig) -> Option<PoseAngles> {
    if pose.right_arm.min_confidence() < kin.confidence_floor {
        return None;
    }
    let vec = arm_vector(&pose.right_arm, kin.right_arm_endpoint).ok()?;
    pose_angles(vec, &axes?).ok()
}

fn velocity_norm(expert: &SessionAnalysis, cfg: &ScoringConfig) -> f64 {
    cfg.velocity_norm_deg_s.unwrap_or(expert.calibration.v_max)
}

/// Practice epochs from a complete pose stream, segmented in one pass like
/// the expert session. When several poses share a frame the highest seq wins.
pub fn batch_practice_epochs(
    expert: &SessionAnalysis,
    poses: &[PracticePose],
    kin: &KinematicsConfig,
    seg: &SegmentationConfig,
) -> Vec<CommandEpoch> {
    let n = expert.frame_count;
    let mut latest: Vec<Option<(u64, PoseAngles)>> = vec![None; n];
    for p in poses {
        let i = p.frame_index as usize;
        if i >= n {
            continue;
        }
        let Some(angles) = practice_angles(p, expert.axes[i], kin) else { continue };
        if latest[i].is_none_or(|(seq, _)| p.received_seq >= seq) {
            latest[i] = Some((p.received_seq, angles));
        }
    }
    let raw = PoseSeries {
        subject: Subject::RightArm,
        fps: expert.fps,
        frames: latest.into_iter().map(|x| x.map(|(_, a)| a)).collect(),
    };
    let smoothed = smooth_series(&raw.yaw(), kin.smoothing_window);
    let velocity = angular_velocity(&smoothed);
    segment_commands(&smoothed, seg)
        .unwrap_or_default()
        .into_iter()
        .map(|s| describe_epoch(s, &raw, &velocity))
        .collect()
}

/// Batch scoring: one score per expert epoch, misses included.
pub fn score_session(expert: &SessionAnalysis, poses: &[PracticePose], kin: &KinematicsConfig, seg: &SegmentationConfig, cfg: &ScoringConfig) -> Vec<PracticeScore> {
    let practice = batch_practice_epochs(expert, poses, kin, seg);
    let v_norm = velocity_norm(expert, cfg);
    match_epochs(&expert.epochs, &practice, cfg.match_window_frames)
        .into_iter()
        .map(|(i, j)| score_practice(i, &expert.epochs[i], j.map(|j| &practice[j]), expert.fps, v_norm, cfg))
        .collect()
}

/// What one accepted pose produced.
#[derive(Debug, Clone, PartialEq)]
pub struct LiveUpdate {
    pub overlay: OverlaySpec,
    /// Practice epochs finalized by this pose.
    pub epochs: Vec<CommandEpoch>,
}

/// Incremental version of the expert pipeline for one practice stream.
///
/// Raw angles are smoothed with the same centered window once the frames it
/// needs have arrived, then fed to the shared [`EpochTracker`] with a
/// running rest-level estimate. Poses on an already-finalized frame are
/// ignored; a pose on a frame before the finalized frontier (after a seek
/// backwards) flushes the stream and starts over.
#[derive(Debug, Clone)]
pub struct LiveAnnotator {
    axes: Vec<Option<AxesFrame>>,
    fps: f64,
    frame_size: (f64, f64),
    kin: KinematicsConfig,
    seg: SegmentationConfig,
    raw: Vec<Option<PoseAngles>>,
    smoothed: Vec<Option<f64>>,
    /// Span of frames belonging to the current run.
    run_start: u64,
    /// Highest frame seen in the current run.
    frontier: Option<u64>,
    /// Frames `< fed` have been pushed to the tracker.
    fed: u64,
    rest: RunningPercentile,
    tracker: EpochTracker,
    last_seq: Option<u64>,
    dropped: u64,
    epochs: Vec<CommandEpoch>,
}

impl LiveAnnotator {
    pub fn new(expert: &SessionAnalysis, kin: KinematicsConfig, seg: SegmentationConfig) -> Self {
        let n = expert.frame_count;
        Self {
            axes: expert.axes.clone(),
            fps: expert.fps,
            frame_size: (expert.frame_width as f64, expert.frame_height as f64),
            tracker: EpochTracker::new(seg.clone()),
            kin,
            seg,
            raw: vec![None; n],
            smoothed: vec![None; n],
            run_start: 0,
            frontier: None,
            fed: 0,
            rest: RunningPercentile::default(),
            last_seq: None,
            dropped: 0,
            epochs: Vec::new(),
        }
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    /// Every practice epoch finalized so far.
    pub fn epochs(&self) -> &[CommandEpoch] {
        &self.epochs
    }

    /// Peak frame of a practice epoch still in progress.
    pub fn open_peak(&self) -> Option<u64> {
        self.tracker.open_peak()
    }

    /// Frames before this one are final.
    pub fn finalized_through(&self) -> u64 {
        self.fed
    }

    fn half(&self) -> u64 {
        (self.kin.smoothing_window / 2) as u64
    }

    pub fn push(&mut self, pose: &PracticePose) -> Result<LiveUpdate, LiveError> {
        if let Some(last) = self.last_seq {
            if pose.received_seq <= last {
                self.dropped += 1;
                return Err(LiveError::OutOfOrderPose { seq: pose.received_seq, last });
            }
        }
        let f = pose.frame_index;
        if f as usize >= self.raw.len() {
            self.dropped += 1;
            return Err(LiveError::FrameOutOfRange(f));
        }
        self.last_seq = Some(pose.received_seq);
        let mut finalized = Vec::new();
        if self.frontier.is_some() && f < self.fed {
            finalized.extend(self.flush());
            self.reset(f);
        } else if self.frontier.is_none() {
            self.reset(f);
        }
        self.raw[f as usize] = practice_angles(pose, self.axes[f as usize], &self.kin);
        self.frontier = Some(self.frontier.map_or(f, |x| x.max(f)));
        finalized.extend(self.feed_ready());
        Ok(LiveUpdate { overlay: practice_overlay(pose, self.frame_size), epochs: finalized })
    }

    /// Finalizes everything still pending, as at the end of a stream.
    pub fn finish(&mut self) -> Vec<CommandEpoch> {
        self.flush()
    }

    fn reset(&mut self, start: u64) {
        self.raw.iter_mut().for_each(|v| *v = None);
        self.smoothed.iter_mut().for_each(|v| *v = None);
        self.run_start = start;
        self.frontier = None;
        self.fed = start;
        self.rest = RunningPercentile::default();
        self.tracker = EpochTracker::new(self.seg.clone());
    }

    fn smooth_at(&self, i: u64, hi_limit: u64) -> Option<f64> {
        self.raw[i as usize]?;
        let half = self.half();
        let lo = i.saturating_sub(half).max(self.run_start);
        let hi = (i + half).min(hi_limit);
        let (sum, count) = (lo..=hi)
            .filter_map(|k| self.raw[k as usize].map(|a| a.yaw_deg))
            .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        Some(sum / count as f64)
    }

    /// Feeds every frame whose smoothing window (and the neighbor needed by
    /// the velocity) is complete.
    fn feed_ready(&mut self) -> Vec<CommandEpoch> {
        let Some(frontier) = self.frontier else { return Vec::new() };
        let half = self.half();
        let last_index = self.raw.len() as u64 - 1;
        let mut out = Vec::new();
        // Frame i is smoothed once i + half has arrived.
        while self.fed + half <= frontier || (frontier == last_index && self.fed <= frontier) {
            let i = self.fed;
            let s = self.smooth_at(i, frontier.min(last_index));
            self.smoothed[i as usize] = s;
            out.extend(self.track(i, s));
            self.fed += 1;
        }
        out
    }

    fn track(&mut self, i: u64, s: Option<f64>) -> Option<CommandEpoch> {
        if let Some(v) = s {
            self.rest.insert(v);
        }
        let rest = self.seg.rest_override_deg.or_else(|| self.rest.get(self.seg.rest_percentile))?;
        let span = self.tracker.push(i, s, rest)?;
        let epoch = self.describe(span);
        self.epochs.push(epoch);
        Some(epoch)
    }

    fn describe(&self, span: crate::commands::EpochSpan) -> CommandEpoch {
        let raw = PoseSeries { subject: Subject::RightArm, fps: self.fps, frames: self.raw.clone() };
        let mut smoothed = self.smoothed.clone();
        // Frames beyond the fed frontier are not smoothed yet.
        for v in smoothed.iter_mut().skip(self.fed as usize + 1) {
            *v = None;
        }
        let velocity = angular_velocity(&AngleSeries { subject: Subject::RightArm, fps: self.fps, values: smoothed });
        describe_epoch(span, &raw, &velocity)
    }

    fn flush(&mut self) -> Vec<CommandEpoch> {
        let Some(frontier) = self.frontier else { return Vec::new() };
        let mut out = Vec::new();
        while self.fed <= frontier {
            let i = self.fed;
            let s = self.smooth_at(i, frontier);
            self.smoothed[i as usize] = s;
            out.extend(self.track(i, s));
            self.fed += 1;
        }
        if let Some(span) = self.tracker.finish() {
            let epoch = self.describe(span);
            self.epochs.push(epoch);
            out.push(epoch);
        }
        out
    }
}

/// Live annotator plus matching against the expert epochs. Each expert
/// epoch receives exactly one score: on its first matching practice epoch,
/// or as a miss once no practice epoch can match it any more. Misses are
/// only reported after the stream has delivered at least one pose.
#[derive(Debug, Clone)]
pub struct LiveScorer {
    annotator: LiveAnnotator,
    expert: Vec<CommandEpoch>,
    scored: Vec<bool>,
    fps: f64,
    velocity_norm: f64,
    cfg: ScoringConfig,
    active: bool,
}

/// Frames after which an unscored expert epoch is declared missed even if
/// no further practice poses arrive.
pub const LIVE_LATENCY_FRAMES: u64 = 15;

impl LiveScorer {
    pub fn new(expert: &SessionAnalysis, kin: KinematicsConfig, seg: SegmentationConfig, cfg: ScoringConfig) -> Self {
        Self {
            annotator: LiveAnnotator::new(expert, kin, seg),
            expert: expert.epochs.clone(),
            scored: vec![false; expert.epochs.len()],
            fps: expert.fps,
            velocity_norm: velocity_norm(expert, &cfg),
            cfg,
            active: false,
        }
    }

    pub fn annotator(&self) -> &LiveAnnotator {
        &self.annotator
    }

    pub fn push_pose(&mut self, pose: &PracticePose) -> Result<(OverlaySpec, Vec<PracticeScore>), LiveError> {
        let update = self.annotator.push(pose)?;
        self.active = true;
        let mut scores = self.score_finalized(&update.epochs);
        scores.extend(self.misses(self.annotator.finalized_through()));
        Ok((update.overlay, scores))
    }

    /// Reports misses the replay cursor has moved past.
    pub fn advance(&mut self, cursor: u64) -> Vec<PracticeScore> {
        self.misses(cursor.saturating_sub(LIVE_LATENCY_FRAMES).max(self.annotator.finalized_through()))
    }

    /// Ends the stream: finalizes pending practice epochs and misses every
    /// expert epoch still unscored.
    pub fn finish(&mut self) -> Vec<PracticeScore> {
        let epochs = self.annotator.finish();
        let mut scores = self.score_finalized(&epochs);
        scores.extend(self.misses(u64::MAX));
        scores
    }

    fn score_finalized(&mut self, practice: &[CommandEpoch]) -> Vec<PracticeScore> {
        let mut out = Vec::new();
        for p in practice {
            let best = self
                .expert
                .iter()
                .enumerate()
                .filter(|(i, e)| !self.scored[*i] && e.peak_frame.abs_diff(p.peak_frame) <= self.cfg.match_window_frames)
                .min_by_key(|(i, e)| (e.peak_frame.abs_diff(p.peak_frame), *i));
            if let Some((i, e)) = best {
                self.scored[i] = true;
                out.push(score_practice(i, e, Some(p), self.fps, self.velocity_norm, &self.cfg));
            }
        }
        out
    }

    fn misses(&mut self, through: u64) -> Vec<PracticeScore> {
        if !self.active {
            return Vec::new();
        }
        let window = self.cfg.match_window_frames;
        let open = self.annotator.open_peak();
        let mut out = Vec::new();
        for (i, e) in self.expert.iter().enumerate() {
            let deadline = e.peak_frame + window;
            let pending = open.is_some_and(|p| p <= deadline);
            if !self.scored[i] && deadline < through && (!pending || through == u64::MAX) {
                self.scored[i] = true;
                out.push(score_practice(i, e, None, self.fps, self.velocity_norm, &self.cfg));
            }
        }
        out
    }
}
