//! Synthetic sessions with planted ground truth.
//!
//! Keypoints are placed by inverting the angle definitions around a fixed
//! skeleton layout: every skeleton vector is built from its planted yaw
//! (and pitch branch) in the frame's marker axes, so at zero noise the
//! pipeline recovers the planted peaks exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commands::{classify_command, CommandCategory};
use crate::geometry::{rotate, Vec2};
use crate::session::{
    Annotation, ArmKeypoints, DogKeypoints, FrameRecord, Keypoint, ManifestView, MarkerFrame, Session,
    SessionManifest,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixtureError {
    #[error("planted epochs {0} and {1} overlap")]
    OverlappingEpochs(usize, usize),
    #[error("invalid fixture spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarkerMotion {
    #[default]
    Static,
    /// The marker sways a few degrees and drifts a few pixels.
    SlowDrift,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedEpoch {
    pub start: u64,
    pub peak: u64,
    pub end: u64,
    pub peak_yaw: f64,
    /// Selects the pitch branch; the nearer of `|yaw - 90|` (arm below the
    /// horizontal axis) and `180 - |yaw - 90|` (above) is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_pitch: Option<f64>,
    /// Dog head angle held around the peak.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureSpec {
    pub seed: u64,
    pub session_id: String,
    pub dataset_name: String,
    pub frame_count: u64,
    #[serde(default = "default_fps")]
    pub fps: f64,
    pub planted_epochs: Vec<PlantedEpoch>,
    /// First frame of each planted head-turn dip.
    #[serde(default)]
    pub planted_triggers: Vec<u64>,
    #[serde(default)]
    pub noise_sigma_deg: f64,
    #[serde(default)]
    pub marker_motion: MarkerMotion,
}

fn default_fps() -> f64 {
    30.0
}

pub const FRAME_WIDTH: u32 = 640;
pub const FRAME_HEIGHT: u32 = 640;
pub const REST_YAW_DEG: f64 = 60.0;
pub const HEAD_BASELINE_DEG: f64 = 100.0;
pub const HEAD_DIP_DEG: f64 = 25.0;
pub const DIP_FRAMES: u64 = 12;
const DIP_RAMP_FRAMES: u64 = 4;
const HEAD_LEVELS: [f64; 3] = [55.0, 75.0, 100.0];
const CONFIDENCE: f64 = 0.95;

const RIGHT_ELBOW: (f64, f64) = (420.0, 380.0);
const RIGHT_FOREARM: f64 = 120.0;
const LEFT_ELBOW: (f64, f64) = (200.0, 420.0);
const LEFT_FOREARM: f64 = 90.0;
const LEFT_WALK_YAW: f64 = 70.0;
const LEFT_WALK_AMPLITUDE: f64 = 4.0;
const DOG_NECK: (f64, f64) = (320.0, 250.0);
const DOG_HEAD_LEN: f64 = 40.0;
const DOG_FORELIMBS: (f64, f64) = (300.0, 300.0);
const DOG_BACK_LEN: f64 = 100.0;
const DOG_BACK_YAW: f64 = 165.0;
const MARKER_CENTER: (f64, f64) = (540.0, 560.0);
const MARKER_SIDE: f64 = 80.0;

impl FixtureSpec {
    pub fn validate(&self) -> Result<(), FixtureError> {
        let bad = |m: String| Err(FixtureError::InvalidSpec(m));
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad(format!("fps must be positive, got {}", self.fps));
        }
        if self.frame_count == 0 {
            return bad("frame_count must be at least 1".into());
        }
        if !(self.noise_sigma_deg.is_finite() && self.noise_sigma_deg >= 0.0) {
            return bad(format!("noise sigma must be non-negative, got {}", self.noise_sigma_deg));
        }
        for (i, e) in self.planted_epochs.iter().enumerate() {
            if !(e.start < e.peak && e.peak < e.end && e.end < self.frame_count) {
                return bad(format!("epoch {i} needs start < peak < end < frame_count"));
            }
            if !(e.peak_yaw > REST_YAW_DEG && e.peak_yaw <= 180.0) {
                return bad(format!("epoch {i} peak yaw {} must lie in ({REST_YAW_DEG}, 180]", e.peak_yaw));
            }
        }
        let mut order: Vec<usize> = (0..self.planted_epochs.len()).collect();
        order.sort_by_key(|&i| self.planted_epochs[i].start);
        for w in order.windows(2) {
            let (a, b) = (&self.planted_epochs[w[0]], &self.planted_epochs[w[1]]);
            if b.start <= a.end {
                return Err(FixtureError::OverlappingEpochs(w[0], w[1]));
            }
        }
        Ok(())
    }

    pub fn manifest(&self) -> SessionManifest {
        SessionManifest {
            session_id: self.session_id.clone(),
            dataset_name: self.dataset_name.clone(),
            fps: self.fps,
            frame_count: self.frame_count,
            frame_width: FRAME_WIDTH,
            frame_height: FRAME_HEIGHT,
            view: ManifestView { theta_deg: 0.0, phi_deg: 0.0, fov_deg: 90.0, pano_width: 3840, pano_height: 1920 },
            ground_truth_command_count: Some(self.planted_epochs.len()),
        }
    }

    pub fn annotations(&self) -> Vec<Annotation> {
        let mut out: Vec<Annotation> = self
            .planted_epochs
            .iter()
            .map(|e| Annotation {
                start_frame: e.start,
                peak_frame: e.peak,
                end_frame: e.end,
                category: classify_command(e.peak_yaw),
            })
            .collect();
        out.sort_by_key(|a| a.start_frame);
        out
    }
}

/// Rises from 0 at `from` to 1 at `to` along a half cosine.
fn ease(t: f64, from: f64, to: f64) -> f64 {
    if to <= from {
        return if t >= to { 1.0 } else { 0.0 };
    }
    let u = ((t - from) / (to - from)).clamp(0.0, 1.0);
    (1.0 - (std::f64::consts::PI * u).cos()) / 2.0
}

/// Weight of a bump that is 0 outside `[start, end]` and 1 at `peak`.
fn bump(t: f64, start: f64, peak: f64, end: f64) -> f64 {
    if t <= peak {
        ease(t, start, peak)
    } else {
        1.0 - ease(t, peak, end)
    }
}

/// Per-frame planted angles before noise.
struct Trajectory {
    right_yaw: f64,
    /// `true` puts the right forearm above the horizontal axis.
    right_up: bool,
    left_yaw: f64,
    head: f64,
    back: f64,
}

fn trajectory(spec: &FixtureSpec, frame: u64) -> Trajectory {
    let t = frame as f64;
    let mut right_yaw = REST_YAW_DEG;
    let mut right_up = false;
    let mut head = HEAD_BASELINE_DEG;
    for (i, e) in spec.planted_epochs.iter().enumerate() {
        if frame < e.start || frame > e.end {
            continue;
        }
        let w = bump(t, e.start as f64, e.peak as f64, e.end as f64);
        right_yaw = REST_YAW_DEG + (e.peak_yaw - REST_YAW_DEG) * w;
        if let Some(p) = e.peak_pitch {
            let down = (e.peak_yaw - 90.0).abs();
            right_up = (p - (180.0 - down)).abs() < (p - down).abs();
        }
        let level = e.head_deg.unwrap_or(HEAD_LEVELS[i % HEAD_LEVELS.len()]);
        head = HEAD_BASELINE_DEG + (level - HEAD_BASELINE_DEG) * w;
    }
    for &d in &spec.planted_triggers {
        let (lo, hi) = (d.saturating_sub(DIP_RAMP_FRAMES), d + DIP_FRAMES + DIP_RAMP_FRAMES);
        if frame >= lo && frame <= hi {
            let w = if frame < d {
                ease(t, lo as f64, d as f64)
            } else if frame < d + DIP_FRAMES {
                1.0
            } else {
                1.0 - ease(t, (d + DIP_FRAMES - 1) as f64, hi as f64)
            };
            head = head + (HEAD_DIP_DEG - head) * w;
        }
    }
    let walk_period = spec.fps * 1.2;
    let left_yaw = LEFT_WALK_YAW + LEFT_WALK_AMPLITUDE * (std::f64::consts::TAU * t / walk_period).sin();
    let back = DOG_BACK_YAW + 3.0 * (std::f64::consts::TAU * t / (spec.fps * 4.0)).sin();
    Trajectory { right_yaw, right_up, left_yaw, head, back }
}

/// Marker rotation (degrees) and translation at `frame`.
fn marker_pose(spec: &FixtureSpec, frame: u64) -> (f64, Vec2) {
    match spec.marker_motion {
        MarkerMotion::Static => (0.0, Vec2::zeros()),
        MarkerMotion::SlowDrift => {
            let phase = std::f64::consts::TAU * frame as f64 / (spec.fps * 20.0);
            (3.0 * phase.sin(), Vec2::new(4.0 * phase.cos(), 2.0 * phase.sin()))
        }
    }
}

fn kp(v: Vec2) -> Keypoint {
    Keypoint::new(v.x, v.y, CONFIDENCE)
}

fn p(xy: (f64, f64)) -> Vec2 {
    Vec2::new(xy.0, xy.1)
}

/// Unit vector at `yaw` from the horizontal axis, below it (`up == false`,
/// along gravity) or above it.
fn direction(yaw_deg: f64, up: bool, h: Vec2, g: Vec2) -> Vec2 {
    let (s, c) = yaw_deg.to_radians().sin_cos();
    if up {
        h * c - g * s
    } else {
        h * c + g * s
    }
}

pub fn generate(spec: &FixtureSpec) -> Result<Session, FixtureError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma_deg).map_err(|e| FixtureError::InvalidSpec(e.to_string()))?;
    let jitter = |rng: &mut ChaCha8Rng| if spec.noise_sigma_deg > 0.0 { noise.sample(rng) } else { 0.0 };

    let mut frames = Vec::with_capacity(spec.frame_count as usize);
    for frame in 0..spec.frame_count {
        let traj = trajectory(spec, frame);
        let (rho, shift) = marker_pose(spec, frame);
        let h = rotate(Vec2::new(1.0, 0.0), rho);
        let g = rotate(Vec2::new(0.0, 1.0), rho);

        let half = MARKER_SIDE / 2.0;
        let center = p(MARKER_CENTER) + shift;
        let corners = [(-half, -half), (half, -half), (half, half), (-half, half)]
            .map(|(x, y)| kp(center + h * x + g * y));

        let right_yaw = (traj.right_yaw + jitter(&mut rng)).clamp(0.0, 180.0);
        let right_dir = direction(right_yaw, traj.right_up, h, g);
        let r_elbow = p(RIGHT_ELBOW);
        let right = ArmKeypoints::right(
            kp(r_elbow + right_dir * RIGHT_FOREARM),
            kp(r_elbow + right_dir * (RIGHT_FOREARM * 2.0 / 3.0)),
            kp(r_elbow),
        );

        let left_yaw = (traj.left_yaw + jitter(&mut rng)).clamp(0.0, 180.0);
        let left_dir = direction(left_yaw, false, h, g);
        let l_elbow = p(LEFT_ELBOW);
        let left = ArmKeypoints::left(
            kp(l_elbow + left_dir * LEFT_FOREARM),
            kp(l_elbow),
            kp(l_elbow + direction(95.0, true, h, g) * 100.0),
        );

        let head = (traj.head + jitter(&mut rng)).clamp(0.0, 180.0);
        let head_dir = direction(head, true, h, g);
        let neck = p(DOG_NECK);
        let ear_mid = neck + head_dir * DOG_HEAD_LEN;
        let across = Vec2::new(-head_dir.y, head_dir.x) * 8.0;
        let back = (traj.back + jitter(&mut rng)).clamp(0.0, 180.0);
        let fore_mid = p(DOG_FORELIMBS);
        let dog = DogKeypoints {
            ears: [kp(ear_mid - across), kp(ear_mid + across)],
            neck: kp(neck),
            scapula: kp(neck + direction(DOG_BACK_YAW, false, h, g) * 20.0),
            forelimbs: [kp(fore_mid - h * 6.0), kp(fore_mid + h * 6.0)],
            waist: kp(fore_mid + direction(back, false, h, g) * DOG_BACK_LEN),
        };

        frames.push(FrameRecord {
            frame_index: frame,
            timestamp_s: frame as f64 / spec.fps,
            left_arm: Some(left),
            right_arm: Some(right),
            dog: Some(dog),
            marker: Some(MarkerFrame { corners }),
        });
    }
    Ok(Session { manifest: spec.manifest(), frames, annotations: Some(spec.annotations()) })
}

/// Frames between consecutive planted peaks in generated specs.
pub const EPOCH_SPACING: u64 = 90;
const FIRST_PEAK: u64 = 60;

/// A spec with `epoch_count` symmetric bumps whose yaws are drawn inside
/// the category bands, a head-turn dip in every third gap, and a random
/// marker motion. Peaks sit `EPOCH_SPACING` frames apart.
pub fn random_spec(seed: u64, epoch_count: usize, noise_sigma_deg: f64, dataset_name: &str) -> FixtureSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f1c5);
    let bands = [CommandCategory::AttentionOrRightTurn, CommandCategory::MovementControl, CommandCategory::LeftFrontDirectional];
    let mut planted_epochs = Vec::with_capacity(epoch_count);
    let mut planted_triggers = Vec::new();
    for i in 0..epoch_count {
        let peak = FIRST_PEAK + i as u64 * EPOCH_SPACING;
        let half_width = rng.random_range(10..=14u64);
        let (lo, hi) = bands[rng.random_range(0..bands.len())].yaw_band().expect("banded category");
        let peak_yaw = rng.random_range(lo + 2.0..hi - 2.0);
        let down = (peak_yaw - 90.0).abs();
        let peak_pitch = if rng.random_bool(0.25) { 180.0 - down } else { down };
        planted_epochs.push(PlantedEpoch {
            start: peak - half_width,
            peak,
            end: peak + half_width,
            peak_yaw,
            peak_pitch: Some(peak_pitch),
            head_deg: None,
        });
        if i % 3 == 2 && i + 1 < epoch_count {
            planted_triggers.push(peak + 45);
        }
    }
    let marker_motion = if rng.random_bool(0.5) { MarkerMotion::Static } else { MarkerMotion::SlowDrift };
    FixtureSpec {
        seed,
        session_id: format!("{}-{seed}", dataset_name.to_lowercase()),
        dataset_name: dataset_name.to_string(),
        frame_count: FIRST_PEAK + epoch_count as u64 * EPOCH_SPACING,
        fps: 30.0,
        planted_epochs,
        planted_triggers,
        noise_sigma_deg,
        marker_motion,
    }
}

/// Preset names and their planted epoch counts.
pub const PRESETS: [(&str, &str, usize); 4] = [
    ("hybrid1", "Hybrid1-synth", 37),
    ("hybrid2", "Hybrid2-synth", 48),
    ("room1", "Room1-synth", 31),
    ("room2", "Room2-synth", 52),
];

/// The four noise-free shipped fixtures.
pub fn preset(name: &str) -> Option<FixtureSpec> {
    PRESETS.iter().enumerate().find(|(_, (n, _, _))| *n == name).map(|(i, (n, dataset, count))| {
        let mut spec = random_spec(1000 + i as u64, *count, 0.0, dataset);
        spec.session_id = n.to_string();
        spec
    })
}
