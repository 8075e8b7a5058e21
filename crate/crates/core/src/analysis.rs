//! End-to-end analysis of one session and the configuration that drives it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::AnalyticsConfig;
use crate::commands::{
    classify_dog_status, describe_epoch, detect_head_turn_triggers, fit_status_thresholds, segment_commands,
    CommandEpoch, CommandError, SegmentationConfig, StatusThresholds, TriggerConfig, TriggerEvent,
};
use crate::cues::CueConfig;
use crate::geometry::AxesFrame;
use crate::haptics::{
    estimate_walking_band, left_hand_alerts, right_hand_events, synthesize_haptic_track, HapticCalibration,
    HapticEvent, HapticsConfig, WalkingBand,
};
use crate::kinematics::{
    angular_velocity, pose_series_with_axes, resolve_axes, smooth_series, AngleSeries, KinematicsConfig,
    KinematicsError, PoseSeries, Subject, VelocitySeries,
};
use crate::scoring::ScoringConfig;
use crate::session::Session;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Commands(#[from] CommandError),
}

/// Fixed dog-status splits; when either is missing they are fitted per session.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatusConfig {
    pub low_high_split: Option<f64>,
    pub mid_high_split: Option<f64>,
}

/// Every tunable threshold of the pipeline, grouped per stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub kinematics: KinematicsConfig,
    pub segmentation: SegmentationConfig,
    pub triggers: TriggerConfig,
    pub status: StatusConfig,
    pub haptics: HapticsConfig,
    pub analytics: AnalyticsConfig,
    pub cues: CueConfig,
    pub scoring: ScoringConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionAnalysis {
    pub session_id: String,
    pub fps: f64,
    pub frame_count: usize,
    pub frame_width: u32,
    pub frame_height: u32,
    pub axes: Vec<Option<AxesFrame>>,
    pub right_arm: PoseSeries,
    pub right_yaw_smoothed: AngleSeries,
    pub right_velocity: VelocitySeries,
    pub dog_head: AngleSeries,
    pub dog_head_smoothed: AngleSeries,
    pub dog_back: AngleSeries,
    pub left_forearm: PoseSeries,
    pub epochs: Vec<CommandEpoch>,
    pub triggers: Vec<TriggerEvent>,
    pub status_thresholds: Option<StatusThresholds>,
    pub calibration: HapticCalibration,
    pub walking_band: Option<WalkingBand>,
    pub haptic_track: Vec<HapticEvent>,
}

impl SessionAnalysis {
    pub fn epoch_at(&self, frame: u64) -> Option<&CommandEpoch> {
        self.epochs.iter().find(|e| e.contains(frame))
    }
}

pub fn analyze(session: &Session, cfg: &AnalysisConfig) -> Result<SessionAnalysis, AnalysisError> {
    let kin = &cfg.kinematics;
    let axes = resolve_axes(session, kin)?;
    let right_arm = pose_series_with_axes(session, &axes, Subject::RightArm, kin);
    let left_forearm = pose_series_with_axes(session, &axes, Subject::LeftForearm, kin);
    let dog_head = pose_series_with_axes(session, &axes, Subject::DogHead, kin).yaw();
    let dog_back = pose_series_with_axes(session, &axes, Subject::DogBack, kin).yaw();

    let right_yaw_smoothed = smooth_series(&right_arm.yaw(), kin.smoothing_window);
    let right_velocity = angular_velocity(&right_yaw_smoothed);
    let dog_head_smoothed = smooth_series(&dog_head, kin.smoothing_window);

    let spans = match segment_commands(&right_yaw_smoothed, &cfg.segmentation) {
        Ok(spans) => spans,
        Err(CommandError::EmptySeries) => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    let mut epochs: Vec<CommandEpoch> =
        spans.into_iter().map(|s| describe_epoch(s, &right_arm, &right_velocity)).collect();

    let status_thresholds = match (cfg.status.low_high_split, cfg.status.mid_high_split) {
        (Some(lo), Some(hi)) => Some(StatusThresholds::new(lo, hi)?),
        _ => {
            let samples: Vec<f64> = epochs.iter().filter_map(|e| dog_head.get(e.peak_frame)).collect();
            fit_status_thresholds(&samples)
                .inspect_err(|e| tracing::debug!(session = %session.manifest.session_id, "status thresholds not fitted: {e}"))
                .ok()
        }
    };
    if let Some(t) = &status_thresholds {
        for e in &mut epochs {
            e.dog_status = dog_head.get(e.peak_frame).map(|a| classify_dog_status(a, t));
        }
    }

    let triggers = detect_head_turn_triggers(&dog_head_smoothed, &cfg.triggers);

    let hcfg = &cfg.haptics;
    let calibration = hcfg.calibration(&epochs, &right_velocity);
    let window_end = ((hcfg.calibration_seconds * session.fps()).round() as u64).min(session.manifest.frame_count);
    let walking_band =
        estimate_walking_band(&left_forearm, 0..window_end, hcfg.band_margin_deg, hcfg.min_calibration_seconds)
            .inspect_err(|e| tracing::debug!(session = %session.manifest.session_id, "no walking band: {e}"))
            .ok();
    let right = right_hand_events(&epochs, &right_yaw_smoothed, &right_velocity, &calibration, hcfg);
    let left = walking_band.map(|b| left_hand_alerts(&left_forearm, &b, hcfg)).unwrap_or_default();
    let haptic_track = synthesize_haptic_track(right, left);

    Ok(SessionAnalysis {
        session_id: session.manifest.session_id.clone(),
        fps: session.fps(),
        frame_count: session.frame_count(),
        frame_width: session.manifest.frame_width,
        frame_height: session.manifest.frame_height,
        axes,
        right_arm,
        right_yaw_smoothed,
        right_velocity,
        dog_head,
        dog_head_smoothed,
        dog_back,
        left_forearm,
        epochs,
        triggers,
        status_thresholds,
        calibration,
        walking_band,
        haptic_track,
    })
}
