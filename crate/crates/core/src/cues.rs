//! Per-frame overlay primitives for the four auxiliary-information modes.
//!
//! * `A`: command cues and dog cues together
//! * `B`: standard command pose, category label and yaw range
//! * `C`: dog head keypoints, status label and status range on head turns
//! * `D`: expert right arm hidden behind a mask with a relaxed arm drawn on top
//!
//! Every mode appends the learner's practice pose when one is supplied.
//! Overlays are semantic; colours and line widths belong to the client and
//! are keyed by `style_tag`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::SessionAnalysis;
use crate::commands::{classify_dog_status, CommandEpoch, TriggerEvent};
use crate::geometry::Vec2;
use crate::scoring::PracticePose;
use crate::session::{ArmKeypoints, Session};

pub const STYLE_STANDARD_POSE: &str = "standard-pose";
pub const STYLE_COMMAND_CATEGORY: &str = "command-category";
pub const STYLE_COMMAND_RANGE: &str = "command-range";
pub const STYLE_DOG_HEAD: &str = "dog-head";
pub const STYLE_DOG_STATUS: &str = "dog-status";
pub const STYLE_DOG_STATUS_RANGE: &str = "dog-status-range";
pub const STYLE_PRACTICE_POSE: &str = "practice-pose";
pub const STYLE_RELAXED_ARM_MASK: &str = "relaxed-arm-mask";
pub const STYLE_RELAXED_ARM: &str = "relaxed-arm";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CueError {
    #[error("analysis does not belong to this session: {0}")]
    AnalysisMissing(String),
    #[error("frame {0} is outside the session")]
    FrameOutOfRange(u64),
    #[error("right arm absent at frame {0}")]
    ArmAbsent(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Mode {
    #[default]
    A,
    B,
    C,
    D,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" => Ok(Mode::A),
            "B" => Ok(Mode::B),
            "C" => Ok(Mode::C),
            "D" => Ok(Mode::D),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OverlayKind {
    PointSet,
    Segment,
    AngleArc,
    MaskRegion,
    Label,
}

/// Arc geometry. `from_deg`/`to_deg` are measured from the marker's
/// horizontal axis, whose image-space direction is `axis_deg`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcParams {
    pub radius: f64,
    pub from_deg: f64,
    pub to_deg: f64,
    pub axis_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlaySpec {
    pub kind: OverlayKind,
    /// Pixel coordinates in the perspective frame. Arcs and labels carry a
    /// single anchor point.
    pub coords: Vec<[f64; 2]>,
    pub style_tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arc: Option<ArcParams>,
}

impl OverlaySpec {
    fn new(kind: OverlayKind, coords: Vec<[f64; 2]>, style: &str) -> Self {
        Self { kind, coords, style_tag: style.to_string(), text: None, arc: None }
    }

    fn clipped(mut self, width: f64, height: f64) -> Self {
        for c in &mut self.coords {
            c[0] = c[0].clamp(0.0, width);
            c[1] = c[1].clamp(0.0, height);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CueConfig {
    /// Command cues appear this many frames before an epoch starts.
    pub lead_frames: u64,
    /// Dog cues stay up this many frames after a head-turn trigger.
    pub trigger_hold_frames: u64,
    pub arc_radius_px: f64,
    pub label_offset_px: f64,
    pub mask_pad_px: f64,
    /// Relaxed right arm as (finger, wrist, elbow) offsets from the elbow.
    pub relaxed_arm: [[f64; 2]; 3],
}

impl Default for CueConfig {
    fn default() -> Self {
        Self {
            lead_frames: 15,
            trigger_hold_frames: 30,
            arc_radius_px: 60.0,
            label_offset_px: 24.0,
            mask_pad_px: 20.0,
            relaxed_arm: [[10.0, 110.0], [7.0, 80.0], [0.0, 0.0]],
        }
    }
}

fn xy(v: Vec2) -> [f64; 2] {
    [v.x, v.y]
}

fn arm_coords(arm: &ArmKeypoints) -> Vec<[f64; 2]> {
    arm.points.iter().map(|k| [k.x, k.y]).collect()
}

/// The learner's right arm as a polyline.
pub fn practice_overlay(practice: &PracticePose, frame_size: (f64, f64)) -> OverlaySpec {
    OverlaySpec::new(OverlayKind::Segment, arm_coords(&practice.right_arm), STYLE_PRACTICE_POSE)
        .clipped(frame_size.0, frame_size.1)
}

/// Convex hull (counter-clockwise, monotone chain) of `points`.
fn convex_hull(mut points: Vec<Vec2>) -> Vec<Vec2> {
    points.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    points.dedup();
    if points.len() < 3 {
        return points;
    }
    let cross = |o: Vec2, a: Vec2, b: Vec2| (a - o).perp(&(b - o));
    let mut lower: Vec<Vec2> = Vec::new();
    for &p in &points {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for &p in points.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

const DILATION_STEPS: usize = 16;

/// Mask over the expert right arm (hull of its keypoints dilated by
/// `mask_pad_px`) and the relaxed arm template anchored at its elbow.
pub fn mask_right_arm(
    frame_index: u64,
    right_arm: Option<&ArmKeypoints>,
    cfg: &CueConfig,
    frame_size: (f64, f64),
) -> Result<[OverlaySpec; 2], CueError> {
    let arm = right_arm.ok_or(CueError::ArmAbsent(frame_index))?;
    let mut ring = Vec::with_capacity(3 * DILATION_STEPS);
    for k in &arm.points {
        for s in 0..DILATION_STEPS {
            let a = s as f64 * std::f64::consts::TAU / DILATION_STEPS as f64;
            ring.push(k.position() + Vec2::new(a.cos(), a.sin()) * cfg.mask_pad_px);
        }
    }
    let hull: Vec<[f64; 2]> = convex_hull(ring).into_iter().map(xy).collect();
    let elbow = arm.elbow().position();
    let relaxed: Vec<[f64; 2]> = cfg.relaxed_arm.iter().map(|o| xy(elbow + Vec2::new(o[0], o[1]))).collect();
    let (w, h) = frame_size;
    Ok([
        OverlaySpec::new(OverlayKind::MaskRegion, hull, STYLE_RELAXED_ARM_MASK).clipped(w, h),
        OverlaySpec::new(OverlayKind::Segment, relaxed, STYLE_RELAXED_ARM).clipped(w, h),
    ])
}

/// Builds overlays for one frame; bind the session and analysis once and
/// query any frame.
pub struct CueEngine<'a> {
    session: &'a Session,
    analysis: &'a SessionAnalysis,
    cfg: &'a CueConfig,
}

impl<'a> CueEngine<'a> {
    pub fn new(session: &'a Session, analysis: &'a SessionAnalysis, cfg: &'a CueConfig) -> Result<Self, CueError> {
        if analysis.session_id != session.manifest.session_id || analysis.frame_count != session.frame_count() {
            return Err(CueError::AnalysisMissing(format!(
                "analysis for {:?} ({} frames), session {:?} ({} frames)",
                analysis.session_id,
                analysis.frame_count,
                session.manifest.session_id,
                session.frame_count()
            )));
        }
        Ok(Self { session, analysis, cfg })
    }

    fn frame_size(&self) -> (f64, f64) {
        (self.session.manifest.frame_width as f64, self.session.manifest.frame_height as f64)
    }

    fn clip(&self, o: OverlaySpec) -> OverlaySpec {
        let (w, h) = self.frame_size();
        o.clipped(w, h)
    }

    fn axis_deg(&self, frame: u64) -> f64 {
        self.analysis.axes.get(frame as usize).copied().flatten().map_or(0.0, |a| a.horizontal_deg())
    }

    fn epoch_cues(&self, epoch: &CommandEpoch, out: &mut Vec<OverlaySpec>) {
        let Some(arm) = self.session.frame(epoch.peak_frame).and_then(|r| r.right_arm) else {
            return;
        };
        let elbow = arm.elbow().position();
        out.push(OverlaySpec::new(OverlayKind::PointSet, arm_coords(&arm), STYLE_STANDARD_POSE));
        out.push(OverlaySpec::new(OverlayKind::Segment, arm_coords(&arm), STYLE_STANDARD_POSE));
        let mut label = OverlaySpec::new(
            OverlayKind::Label,
            vec![xy(elbow - Vec2::new(0.0, self.cfg.label_offset_px))],
            STYLE_COMMAND_CATEGORY,
        );
        label.text = Some(epoch.category.name().to_string());
        out.push(label);
        if let Some((from, to)) = epoch.category.yaw_band() {
            let mut arc = OverlaySpec::new(OverlayKind::AngleArc, vec![xy(elbow)], STYLE_COMMAND_RANGE);
            arc.arc = Some(ArcParams {
                radius: self.cfg.arc_radius_px,
                from_deg: from,
                to_deg: to,
                axis_deg: self.axis_deg(epoch.peak_frame),
            });
            out.push(arc);
        }
    }

    /// Command-pose cues for epochs that are active or about to start.
    pub fn command_cues(&self, frame: u64) -> Vec<OverlaySpec> {
        let mut out = Vec::new();
        for epoch in &self.analysis.epochs {
            if frame + self.cfg.lead_frames >= epoch.start_frame && frame <= epoch.end_frame {
                self.epoch_cues(epoch, &mut out);
            }
        }
        out.into_iter().map(|o| self.clip(o)).collect()
    }

    fn active_trigger(&self, frame: u64) -> Option<&TriggerEvent> {
        self.analysis
            .triggers
            .iter()
            .find(|t| frame >= t.frame && frame < t.frame + self.cfg.trigger_hold_frames)
    }

    /// Dog head cues while a head-turn trigger is active.
    pub fn dog_cues(&self, frame: u64) -> Vec<OverlaySpec> {
        let mut out = Vec::new();
        if self.active_trigger(frame).is_none() {
            return out;
        }
        let Some(dog) = self.session.frame(frame).and_then(|r| r.dog) else {
            return out;
        };
        let neck = dog.neck.position();
        out.push(OverlaySpec::new(
            OverlayKind::PointSet,
            vec![[dog.ears[0].x, dog.ears[0].y], [dog.ears[1].x, dog.ears[1].y], xy(neck)],
            STYLE_DOG_HEAD,
        ));
        if let (Some(t), Some(angle)) = (self.analysis.status_thresholds, self.analysis.dog_head.get(frame)) {
            let status = classify_dog_status(angle, &t);
            let mut label = OverlaySpec::new(
                OverlayKind::Label,
                vec![xy(neck - Vec2::new(0.0, self.cfg.label_offset_px))],
                STYLE_DOG_STATUS,
            );
            label.text = Some(status.name().to_string());
            out.push(label);
            let (from, to) = t.band(status);
            let mut arc = OverlaySpec::new(OverlayKind::AngleArc, vec![xy(neck)], STYLE_DOG_STATUS_RANGE);
            arc.arc = Some(ArcParams { radius: self.cfg.arc_radius_px, from_deg: from, to_deg: to, axis_deg: self.axis_deg(frame) });
            out.push(arc);
        }
        out.into_iter().map(|o| self.clip(o)).collect()
    }

    pub fn practice_cue(&self, practice: &PracticePose) -> OverlaySpec {
        practice_overlay(practice, self.frame_size())
    }

    pub fn mask_cues(&self, frame: u64) -> Result<[OverlaySpec; 2], CueError> {
        let arm = self.session.frame(frame).and_then(|r| r.right_arm);
        mask_right_arm(frame, arm.as_ref(), self.cfg, self.frame_size())
    }

    pub fn build_overlays(
        &self,
        frame: u64,
        mode: Mode,
        practice: Option<&PracticePose>,
    ) -> Result<Vec<OverlaySpec>, CueError> {
        if frame >= self.analysis.frame_count as u64 {
            return Err(CueError::FrameOutOfRange(frame));
        }
        let mut out = match mode {
            Mode::A => {
                let mut v = self.command_cues(frame);
                v.extend(self.dog_cues(frame));
                v
            }
            Mode::B => self.command_cues(frame),
            Mode::C => self.dog_cues(frame),
            Mode::D => match self.mask_cues(frame) {
                Ok(mask) => mask.to_vec(),
                Err(e) => {
                    tracing::debug!("frame {frame} passes through unmasked: {e}");
                    Vec::new()
                }
            },
        };
        if let Some(p) = practice {
            out.push(self.practice_cue(p));
        }
        Ok(out)
    }
}
