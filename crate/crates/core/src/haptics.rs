//! Vibration tracks for both hands.
//!
//! Right hand: frequency follows the forearm's angular speed (50–300 Hz),
//! amplitude follows the forearm yaw. Left hand: short fixed-frequency
//! alerts whenever the forearm leaves its normal walking band.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commands::CommandEpoch;
use crate::kinematics::{AngleSeries, PoseSeries, VelocitySeries};
use crate::session::ArmSide;
use crate::stats;

pub const MIN_FREQUENCY_HZ: f64 = 50.0;
pub const MAX_FREQUENCY_HZ: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum HapticsError {
    #[error("calibration window holds {present} present frames, need {required}")]
    InsufficientCalibration { present: usize, required: usize },
    #[error("invalid calibration: {0}")]
    InvalidCalibration(&'static str),
}

/// One vibration directive; also a `haptics.jsonl` line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HapticEvent {
    pub hand: ArmSide,
    pub start_frame: u64,
    pub duration_frames: u64,
    pub frequency_hz: f64,
    pub amplitude: f64,
}

impl HapticEvent {
    pub fn end_frame(&self) -> u64 {
        self.start_frame + self.duration_frames - 1
    }

    pub fn covers(&self, frame: u64) -> bool {
        (self.start_frame..self.start_frame + self.duration_frames).contains(&frame)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HapticCalibration {
    pub v_min: f64,
    pub v_max: f64,
    pub yaw_min: f64,
    pub yaw_max: f64,
    pub amp_floor: f64,
}

impl Default for HapticCalibration {
    fn default() -> Self {
        Self { v_min: 0.0, v_max: 300.0, yaw_min: 90.0, yaw_max: 150.0, amp_floor: 0.2 }
    }
}

impl HapticCalibration {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), HapticsError> {
        if !(self.v_min < self.v_max) {
            return Err(HapticsError::InvalidCalibration("v_min must be below v_max"));
        }
        if !(self.yaw_min < self.yaw_max) {
            return Err(HapticsError::InvalidCalibration("yaw_min must be below yaw_max"));
        }
        if !(0.0..1.0).contains(&self.amp_floor) {
            return Err(HapticsError::InvalidCalibration("amp_floor must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Velocity endpoints from the 5th/95th percentile of |velocity| inside
    /// the epochs. Falls back to `fallback`'s endpoints when there is too
    /// little spread to define a range.
    pub fn auto(epochs: &[CommandEpoch], velocity: &VelocitySeries, fallback: HapticCalibration) -> Self {
        let speeds = stats::sorted(
            epochs
                .iter()
                .flat_map(|e| e.start_frame..=e.end_frame)
                .filter_map(|f| velocity.get(f))
                .map(f64::abs),
        );
        match (stats::percentile_sorted(&speeds, 5.0), stats::percentile_sorted(&speeds, 95.0)) {
            (Some(lo), Some(hi)) if hi > lo => Self { v_min: lo, v_max: hi, ..fallback },
            _ => fallback,
        }
    }
}

/// Linear map of |v| from `[v_min, v_max]` onto 50–300 Hz, clamped.
pub fn frequency_from_velocity(v_deg_s: f64, calib: &HapticCalibration) -> f64 {
    let t = ((v_deg_s.abs() - calib.v_min) / (calib.v_max - calib.v_min)).clamp(0.0, 1.0);
    MIN_FREQUENCY_HZ + t * (MAX_FREQUENCY_HZ - MIN_FREQUENCY_HZ)
}

/// Linear map of yaw from `[yaw_min, yaw_max]` onto `[amp_floor, 1]`, clamped.
pub fn amplitude_from_angle(yaw_deg: f64, calib: &HapticCalibration) -> f64 {
    let t = ((yaw_deg - calib.yaw_min) / (calib.yaw_max - calib.yaw_min)).clamp(0.0, 1.0);
    calib.amp_floor + t * (1.0 - calib.amp_floor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkingBand {
    pub yaw_band: (f64, f64),
    pub pitch_band: (f64, f64),
}

impl WalkingBand {
    /// Degrees by which `(yaw, pitch)` lies outside the band; 0 inside.
    pub fn excursion(&self, yaw: f64, pitch: f64) -> f64 {
        let out = |v: f64, (lo, hi): (f64, f64)| (lo - v).max(v - hi).max(0.0);
        out(yaw, self.yaw_band).max(out(pitch, self.pitch_band))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HapticsConfig {
    pub yaw_min: f64,
    pub yaw_max: f64,
    pub amp_floor: f64,
    /// Fixed velocity endpoints; when absent they are fitted per session.
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
    /// Velocity endpoints used when a session has no usable epochs.
    pub fallback_v_min: f64,
    pub fallback_v_max: f64,
    /// Merge consecutive right-hand frames while frequency stays within
    /// this distance of the run's first frame.
    pub merge_frequency_hz: f64,
    pub merge_amplitude: f64,
    pub right_mode: RightHandMode,
    pub onset_frames: u64,
    pub calibration_seconds: f64,
    /// Minimum present frames in the calibration window, in seconds.
    pub min_calibration_seconds: f64,
    pub band_margin_deg: f64,
    pub left_sustain_frames: u64,
    pub left_frequency_hz: f64,
    /// Excursion (degrees) that maps to full left-hand amplitude.
    pub left_full_scale_deg: f64,
}

impl Default for HapticsConfig {
    fn default() -> Self {
        Self {
            yaw_min: 90.0,
            yaw_max: 150.0,
            amp_floor: 0.2,
            v_min: None,
            v_max: None,
            fallback_v_min: 0.0,
            fallback_v_max: 300.0,
            merge_frequency_hz: 10.0,
            merge_amplitude: 0.05,
            right_mode: RightHandMode::Continuous,
            onset_frames: 6,
            calibration_seconds: 10.0,
            min_calibration_seconds: 2.0,
            band_margin_deg: 5.0,
            left_sustain_frames: 3,
            left_frequency_hz: 120.0,
            left_full_scale_deg: 30.0,
        }
    }
}

/// Whether the right hand vibrates through the whole command or only at its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RightHandMode {
    #[default]
    Continuous,
    Onset,
}

impl HapticsConfig {
    /// Calibration used when a session cannot be fitted.
    pub fn calibration_fallback(&self) -> HapticCalibration {
        HapticCalibration {
            v_min: self.fallback_v_min,
            v_max: self.fallback_v_max,
            yaw_min: self.yaw_min,
            yaw_max: self.yaw_max,
            amp_floor: self.amp_floor,
        }
    }

    pub fn calibration(&self, epochs: &[CommandEpoch], velocity: &VelocitySeries) -> HapticCalibration {
        let mut calib = HapticCalibration::auto(epochs, velocity, self.calibration_fallback());
        if let Some(v) = self.v_min {
            calib.v_min = v;
        }
        if let Some(v) = self.v_max {
            calib.v_max = v;
        }
        calib
    }
}

/// Percentile band (5th–95th, widened by `margin_deg`) of left-forearm yaw
/// and pitch over `window`.
pub fn estimate_walking_band(
    left_forearm: &PoseSeries,
    window: Range<u64>,
    margin_deg: f64,
    min_seconds: f64,
) -> Result<WalkingBand, HapticsError> {
    let samples: Vec<_> = window.filter_map(|f| left_forearm.get(f)).collect();
    let required = (min_seconds * left_forearm.fps).ceil() as usize;
    if samples.len() < required.max(1) {
        return Err(HapticsError::InsufficientCalibration { present: samples.len(), required });
    }
    let band = |values: Vec<f64>| {
        let s = stats::sorted(values);
        let lo = stats::percentile_sorted(&s, 5.0).expect("non-empty");
        let hi = stats::percentile_sorted(&s, 95.0).expect("non-empty");
        (lo - margin_deg, hi + margin_deg)
    };
    Ok(WalkingBand {
        yaw_band: band(samples.iter().map(|p| p.yaw_deg).collect()),
        pitch_band: band(samples.iter().map(|p| p.pitch_deg).collect()),
    })
}

/// One left-hand event per run of at least `left_sustain_frames` frames
/// outside the walking band.
pub fn left_hand_alerts(left_forearm: &PoseSeries, band: &WalkingBand, cfg: &HapticsConfig) -> Vec<HapticEvent> {
    let mut events = Vec::new();
    let mut run: Option<(u64, u64, f64)> = None; // (start, length, max excursion)
    let flush = |run: &mut Option<(u64, u64, f64)>, events: &mut Vec<HapticEvent>| {
        if let Some((start, len, peak)) = run.take() {
            if len >= cfg.left_sustain_frames {
                events.push(HapticEvent {
                    hand: ArmSide::Left,
                    start_frame: start,
                    duration_frames: len,
                    frequency_hz: cfg.left_frequency_hz,
                    amplitude: (peak / cfg.left_full_scale_deg).clamp(0.0, 1.0),
                });
            }
        }
    };
    for (i, pose) in left_forearm.frames.iter().enumerate() {
        let excursion = pose.map_or(0.0, |p| band.excursion(p.yaw_deg, p.pitch_deg));
        if excursion > 0.0 {
            run = Some(match run {
                Some((start, len, peak)) => (start, len + 1, peak.max(excursion)),
                None => (i as u64, 1, excursion),
            });
        } else {
            flush(&mut run, &mut events);
        }
    }
    flush(&mut run, &mut events);
    events
}

/// Right-hand events inside each epoch. Consecutive frames are merged into
/// one event while frequency stays within `merge_frequency_hz` and amplitude
/// within `merge_amplitude` of the run's first frame; a merged event carries
/// the run's maximum frequency and amplitude.
pub fn right_hand_events(
    epochs: &[CommandEpoch],
    yaw: &AngleSeries,
    velocity: &VelocitySeries,
    calib: &HapticCalibration,
    cfg: &HapticsConfig,
) -> Vec<HapticEvent> {
    let mut events = Vec::new();
    for epoch in epochs {
        if cfg.right_mode == RightHandMode::Onset {
            let len = epoch.end_frame - epoch.start_frame + 1;
            events.push(HapticEvent {
                hand: ArmSide::Right,
                start_frame: epoch.start_frame,
                duration_frames: len.min(cfg.onset_frames.max(1)),
                frequency_hz: frequency_from_velocity(epoch.peak_velocity_deg_s, calib),
                amplitude: amplitude_from_angle(epoch.peak_yaw_deg, calib),
            });
            continue;
        }
        // (start, length, anchor freq, anchor amp, max freq, max amp)
        let mut run: Option<(u64, u64, f64, f64, f64, f64)> = None;
        let close = |run: &mut Option<(u64, u64, f64, f64, f64, f64)>, events: &mut Vec<HapticEvent>| {
            if let Some((start, len, _, _, f, a)) = run.take() {
                events.push(HapticEvent {
                    hand: ArmSide::Right,
                    start_frame: start,
                    duration_frames: len,
                    frequency_hz: f,
                    amplitude: a,
                });
            }
        };
        for frame in epoch.start_frame..=epoch.end_frame {
            let (Some(v), Some(y)) = (velocity.get(frame), yaw.get(frame)) else {
                close(&mut run, &mut events);
                continue;
            };
            let f = frequency_from_velocity(v, calib);
            let a = amplitude_from_angle(y, calib);
            run = match run {
                Some((start, len, f0, a0, fm, am))
                    if (f - f0).abs() < cfg.merge_frequency_hz && (a - a0).abs() < cfg.merge_amplitude =>
                {
                    Some((start, len + 1, f0, a0, fm.max(f), am.max(a)))
                }
                other => {
                    let mut other = other;
                    close(&mut other, &mut events);
                    Some((frame, 1, f, a, f, a))
                }
            };
        }
        close(&mut run, &mut events);
    }
    events
}

/// Full track: right-hand events within epochs plus left-hand alerts,
/// ordered by start frame (left before right on ties).
pub fn synthesize_haptic_track(right: Vec<HapticEvent>, left: Vec<HapticEvent>) -> Vec<HapticEvent> {
    let mut track: Vec<HapticEvent> = right.into_iter().chain(left).collect();
    track.sort_by_key(|e| (e.start_frame, e.hand == ArmSide::Right));
    track
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commands::CommandCategory;
    use crate::kinematics::{PoseAngles, Subject};

    fn calib() -> HapticCalibration {
        HapticCalibration { v_min: 20.0, v_max: 220.0, ..Default::default() }
    }

    #[test]
    fn frequency_endpoints() {
        let c = calib();
        assert_eq!(frequency_from_velocity(20.0, &c), 50.0);
        assert_eq!(frequency_from_velocity(220.0, &c), 300.0);
        assert_eq!(frequency_from_velocity(-220.0, &c), 300.0);
        assert_eq!(frequency_from_velocity(120.0, &c), 175.0);
        assert_eq!(frequency_from_velocity(440.0, &c), 300.0);
        assert_eq!(frequency_from_velocity(0.0, &c), 50.0);
    }

    #[test]
    fn amplitude_endpoints() {
        let c = calib();
        assert_eq!(amplitude_from_angle(90.0, &c), 0.2);
        assert_eq!(amplitude_from_angle(150.0, &c), 1.0);
        assert!((amplitude_from_angle(120.0, &c) - 0.6).abs() < 1e-12);
        assert_eq!(amplitude_from_angle(10.0, &c), 0.2);
    }

    #[test]
    fn calibration_validation() {
        assert!(calib().validate().is_ok());
        assert!(HapticCalibration { v_min: 5.0, v_max: 5.0, ..calib() }.validate().is_err());
        assert!(HapticCalibration { amp_floor: 1.0, ..calib() }.validate().is_err());
    }

    fn left_series(frames: Vec<Option<(f64, f64)>>) -> PoseSeries {
        PoseSeries {
            subject: Subject::LeftForearm,
            fps: 30.0,
            frames: frames.into_iter().map(|f| f.map(|(y, p)| PoseAngles { yaw_deg: y, pitch_deg: p })).collect(),
        }
    }

    #[test]
    fn constant_window_band_is_margin_only() {
        let s = left_series(vec![Some((70.0, 20.0)); 90]);
        let band = estimate_walking_band(&s, 0..90, 5.0, 2.0).unwrap();
        assert_eq!(band.yaw_band, (65.0, 75.0));
        assert_eq!(band.pitch_band, (15.0, 25.0));
    }

    #[test]
    fn sinusoid_band_matches_percentile_oracle() {
        // Many full periods: the percentile of A·sin over uniform phase is
        // A·sin(π(q − 1/2)), so the 95th percentile is 8·sin(0.45π).
        let n = 3000;
        let s = left_series((0..n).map(|i| {
            let ph = 2.0 * std::f64::consts::PI * i as f64 / 30.0;
            Some((70.0 + 8.0 * ph.sin(), 20.0 + 8.0 * ph.cos()))
        }).collect());
        let band = estimate_walking_band(&s, 0..n as u64, 5.0, 2.0).unwrap();
        let half = 8.0 * (0.45 * std::f64::consts::PI).sin() + 5.0;
        assert!((band.yaw_band.1 - (70.0 + half)).abs() < 0.1);
        assert!((band.yaw_band.0 - (70.0 - half)).abs() < 0.1);
        assert!((half - 13.0).abs() < 0.2);
    }

    #[test]
    fn short_window_rejected() {
        let s = left_series(vec![Some((70.0, 20.0)); 40]);
        assert_eq!(
            estimate_walking_band(&s, 0..40, 5.0, 2.0),
            Err(HapticsError::InsufficientCalibration { present: 40, required: 60 })
        );
    }

    fn band() -> WalkingBand {
        WalkingBand { yaw_band: (60.0, 80.0), pitch_band: (10.0, 30.0) }
    }

    #[test]
    fn alerts_inside_band() {
        let s = left_series(vec![Some((70.0, 20.0)); 100]);
        assert!(left_hand_alerts(&s, &band(), &HapticsConfig::default()).is_empty());
    }

    #[test]
    fn alert_per_sustained_excursion() {
        let mut frames = vec![Some((70.0, 20.0)); 100];
        for f in frames.iter_mut().skip(40).take(10) {
            *f = Some((95.0, 20.0));
        }
        frames[70] = Some((70.0, 40.0));
        frames[71] = Some((70.0, 40.0));
        let events = left_hand_alerts(&left_series(frames), &band(), &HapticsConfig::default());
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].start_frame, 40);
        assert_eq!(events[0].duration_frames, 10);
        assert_eq!(events[0].frequency_hz, 120.0);
        assert!((events[0].amplitude - 0.5).abs() < 1e-12);
    }

    fn epoch(start: u64, peak: u64, end: u64, v: f64) -> CommandEpoch {
        CommandEpoch {
            start_frame: start,
            peak_frame: peak,
            end_frame: end,
            peak_yaw_deg: 120.0,
            peak_pitch_deg: 30.0,
            peak_velocity_deg_s: v,
            category: CommandCategory::MovementControl,
            dog_status: None,
        }
    }

    #[test]
    fn right_events_stay_inside_epochs() {
        let n = 100;
        let yaw = AngleSeries {
            subject: Subject::RightArm,
            fps: 30.0,
            values: (0..n).map(|i| Some(60.0 + i as f64)).collect(),
        };
        let velocity = VelocitySeries { fps: 30.0, values: (0..n).map(|i| Some(3.0 * i as f64)).collect() };
        let epochs = [epoch(10, 20, 30, 90.0), epoch(60, 65, 70, 210.0)];
        let events = right_hand_events(&epochs, &yaw, &velocity, &calib(), &HapticsConfig::default());
        assert!(!events.is_empty());
        for e in &events {
            assert!(epochs.iter().any(|ep| ep.contains(e.start_frame) && ep.contains(e.end_frame())));
            assert!((50.0..=300.0).contains(&e.frequency_hz));
        }
        let covered: u64 = events.iter().map(|e| e.duration_frames).sum();
        assert_eq!(covered, 21 + 11);
        // The frame with the largest speed carries its own frequency.
        let last = events.iter().find(|e| e.covers(70)).unwrap();
        assert_eq!(last.frequency_hz, frequency_from_velocity(210.0, &calib()));
    }

    #[test]
    fn onset_mode_emits_one_event_per_epoch() {
        let yaw = AngleSeries { subject: Subject::RightArm, fps: 30.0, values: vec![Some(100.0); 50] };
        let velocity = VelocitySeries { fps: 30.0, values: vec![Some(50.0); 50] };
        let cfg = HapticsConfig { right_mode: RightHandMode::Onset, ..Default::default() };
        let events = right_hand_events(&[epoch(10, 15, 30, 120.0)], &yaw, &velocity, &calib(), &cfg);
        assert_eq!(events.len(), 1);
        assert_eq!((events[0].start_frame, events[0].duration_frames), (10, 6));
        assert_eq!(events[0].frequency_hz, 175.0);
    }

    #[test]
    fn track_is_sorted() {
        let r = vec![HapticEvent { hand: ArmSide::Right, start_frame: 50, duration_frames: 3, frequency_hz: 100.0, amplitude: 0.5 }];
        let l = vec![
            HapticEvent { hand: ArmSide::Left, start_frame: 10, duration_frames: 3, frequency_hz: 120.0, amplitude: 0.5 },
            HapticEvent { hand: ArmSide::Left, start_frame: 50, duration_frames: 3, frequency_hz: 120.0, amplitude: 0.5 },
        ];
        let t = synthesize_haptic_track(r, l);
        assert_eq!(t.iter().map(|e| (e.start_frame, e.hand)).collect::<Vec<_>>(), vec![
            (10, ArmSide::Left),
            (50, ArmSide::Left),
            (50, ArmSide::Right)
        ]);
    }
}
