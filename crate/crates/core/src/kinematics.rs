//! Skeleton vectors, per-frame pose angles against the marker axes, and
//! the smoothed angle / angular-velocity series built from them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angle_between, marker_axes, AxesFrame, GeometryError, Vec2, DEGENERATE_NORM};
use crate::session::{ArmKeypoints, ArmSide, DogKeypoints, FrameRecord, Session};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum KinematicsError {
    #[error("skeleton vector has no direction")]
    DegenerateVector,
    #[error("no frame in the session carries a usable marker")]
    NoMarkerEver,
}

impl From<GeometryError> for KinematicsError {
    fn from(_: GeometryError) -> Self {
        KinematicsError::DegenerateVector
    }
}

/// Which right-arm keypoint terminates the forearm vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RightArmEndpoint {
    #[default]
    Finger,
    Wrist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KinematicsConfig {
    pub right_arm_endpoint: RightArmEndpoint,
    /// A group with any keypoint below this confidence counts as absent.
    pub confidence_floor: f64,
    /// How many frames back a missing marker may be substituted.
    pub marker_lookback_frames: u64,
    /// Centered moving-average window used before detection.
    pub smoothing_window: usize,
}

impl Default for KinematicsConfig {
    fn default() -> Self {
        Self {
            right_arm_endpoint: RightArmEndpoint::Finger,
            confidence_floor: 0.5,
            marker_lookback_frames: 15,
            smoothing_window: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseAngles {
    pub yaw_deg: f64,
    pub pitch_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subject {
    DogHead,
    DogBack,
    RightArm,
    LeftForearm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSeries {
    pub subject: Subject,
    pub fps: f64,
    pub values: Vec<Option<f64>>,
}

impl AngleSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, frame: u64) -> Option<f64> {
        self.values.get(frame as usize).copied().flatten()
    }

    pub fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().filter_map(|v| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocitySeries {
    pub fps: f64,
    /// Signed deg/s.
    pub values: Vec<Option<f64>>,
}

impl VelocitySeries {
    pub fn get(&self, frame: u64) -> Option<f64> {
        self.values.get(frame as usize).copied().flatten()
    }
}

/// Per-frame yaw and pitch of one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseSeries {
    pub subject: Subject,
    pub fps: f64,
    pub frames: Vec<Option<PoseAngles>>,
}

impl PoseSeries {
    pub fn get(&self, frame: u64) -> Option<PoseAngles> {
        self.frames.get(frame as usize).copied().flatten()
    }

    pub fn yaw(&self) -> AngleSeries {
        AngleSeries {
            subject: self.subject,
            fps: self.fps,
            values: self.frames.iter().map(|f| f.map(|p| p.yaw_deg)).collect(),
        }
    }

    pub fn pitch(&self) -> AngleSeries {
        AngleSeries {
            subject: self.subject,
            fps: self.fps,
            values: self.frames.iter().map(|f| f.map(|p| p.pitch_deg)).collect(),
        }
    }
}

fn nondegenerate(v: Vec2) -> Result<Vec2, KinematicsError> {
    if v.norm() < DEGENERATE_NORM {
        Err(KinematicsError::DegenerateVector)
    } else {
        Ok(v)
    }
}

fn midpoint(a: Vec2, b: Vec2) -> Vec2 {
    (a + b) / 2.0
}

/// Neck to the midpoint of the ears.
pub fn dog_head_vector(dog: &DogKeypoints) -> Result<Vec2, KinematicsError> {
    nondegenerate(midpoint(dog.ears[0].position(), dog.ears[1].position()) - dog.neck.position())
}

/// Forelimb midpoint to the waist.
pub fn dog_back_vector(dog: &DogKeypoints) -> Result<Vec2, KinematicsError> {
    nondegenerate(dog.waist.position() - midpoint(dog.forelimbs[0].position(), dog.forelimbs[1].position()))
}

pub fn arm_vector(arm: &ArmKeypoints, endpoint: RightArmEndpoint) -> Result<Vec2, KinematicsError> {
    let tip = match (arm.side, endpoint) {
        (ArmSide::Right, RightArmEndpoint::Finger) => arm.points[0],
        _ => arm.wrist(),
    };
    nondegenerate(tip.position() - arm.elbow().position())
}

pub fn pose_angles(vec: Vec2, axes: &AxesFrame) -> Result<PoseAngles, KinematicsError> {
    Ok(PoseAngles {
        yaw_deg: angle_between(vec, axes.horizontal)?,
        pitch_deg: angle_between(vec, axes.gravity)?,
    })
}

/// Resolves the marker axes for every frame, substituting the most recent
/// usable marker within the lookback window when a frame has none.
pub fn resolve_axes(session: &Session, cfg: &KinematicsConfig) -> Result<Vec<Option<AxesFrame>>, KinematicsError> {
    let n = session.frame_count();
    let mut out = vec![None; n];
    let mut last: Option<(u64, AxesFrame)> = None;
    let mut any = false;
    let mut records = session.frames.iter().peekable();
    for frame in 0..n as u64 {
        let own = match records.next_if(|r| r.frame_index == frame) {
            Some(r) => frame_axes(r, cfg),
            None => None,
        };
        if let Some(axes) = own {
            any = true;
            last = Some((frame, axes));
            out[frame as usize] = Some(axes);
        } else if let Some((at, axes)) = last {
            if frame - at <= cfg.marker_lookback_frames {
                out[frame as usize] = Some(axes);
            }
        }
    }
    if !any {
        return Err(KinematicsError::NoMarkerEver);
    }
    Ok(out)
}

fn frame_axes(record: &FrameRecord, cfg: &KinematicsConfig) -> Option<AxesFrame> {
    let marker = record.marker.as_ref()?;
    if marker.min_confidence() < cfg.confidence_floor {
        return None;
    }
    marker_axes(marker).ok()
}

/// Skeleton vector of `subject` in `record`, or `None` when its keypoints
/// are missing, below the confidence floor or degenerate.
pub fn subject_vector(record: &FrameRecord, subject: Subject, cfg: &KinematicsConfig) -> Option<Vec2> {
    let floor = cfg.confidence_floor;
    match subject {
        Subject::DogHead | Subject::DogBack => {
            let dog = record.dog.as_ref().filter(|d| d.min_confidence() >= floor)?;
            if subject == Subject::DogHead {
                dog_head_vector(dog).ok()
            } else {
                dog_back_vector(dog).ok()
            }
        }
        Subject::RightArm => {
            let arm = record.right_arm.as_ref().filter(|a| a.min_confidence() >= floor)?;
            arm_vector(arm, cfg.right_arm_endpoint).ok()
        }
        Subject::LeftForearm => {
            let arm = record.left_arm.as_ref().filter(|a| a.min_confidence() >= floor)?;
            arm_vector(arm, cfg.right_arm_endpoint).ok()
        }
    }
}

/// Yaw and pitch of `subject` for every frame, given pre-resolved axes.
pub fn pose_series_with_axes(
    session: &Session,
    axes: &[Option<AxesFrame>],
    subject: Subject,
    cfg: &KinematicsConfig,
) -> PoseSeries {
    let mut frames = vec![None; session.frame_count()];
    for record in &session.frames {
        let i = record.frame_index as usize;
        if i >= frames.len() {
            continue;
        }
        let (Some(vec), Some(ax)) = (subject_vector(record, subject, cfg), axes[i]) else {
            continue;
        };
        frames[i] = pose_angles(vec, &ax).ok();
    }
    PoseSeries { subject, fps: session.fps(), frames }
}

pub fn pose_series(session: &Session, subject: Subject, cfg: &KinematicsConfig) -> Result<PoseSeries, KinematicsError> {
    let axes = resolve_axes(session, cfg)?;
    Ok(pose_series_with_axes(session, &axes, subject, cfg))
}

/// Angle of the subject's skeleton vector against the horizontal axis.
pub fn angle_series(session: &Session, subject: Subject, cfg: &KinematicsConfig) -> Result<AngleSeries, KinematicsError> {
    Ok(pose_series(session, subject, cfg)?.yaw())
}

/// Centered moving average over the present values of each window.
/// Absent samples stay absent; windows are truncated at the series ends.
/// An even `window` behaves like `window + 1`.
pub fn smooth_series(s: &AngleSeries, window: usize) -> AngleSeries {
    let half = window / 2;
    let n = s.values.len();
    let values = (0..n)
        .map(|i| {
            s.values[i]?;
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let (sum, count) = s.values[lo..=hi]
                .iter()
                .flatten()
                .fold((0.0, 0usize), |(sum, c), v| (sum + v, c + 1));
            Some(sum / count as f64)
        })
        .collect();
    AngleSeries { subject: s.subject, fps: s.fps, values }
}

/// Central-difference derivative in deg/s, one-sided at the ends. A frame
/// is absent when it or any neighbor the difference needs is absent.
pub fn angular_velocity(s: &AngleSeries) -> VelocitySeries {
    let a = &s.values;
    let n = a.len();
    let fps = s.fps;
    let values = (0..n)
        .map(|i| {
            let here = a[i]?;
            if n < 2 {
                return None;
            }
            if i == 0 {
                Some((a[1]? - here) * fps)
            } else if i == n - 1 {
                Some((here - a[i - 1]?) * fps)
            } else {
                Some((a[i + 1]? - a[i - 1]?) * fps / 2.0)
            }
        })
        .collect();
    VelocitySeries { fps, values }
}
