//! Session directories: manifest, per-frame keypoint stream, optional
//! ground-truth annotations, and the derived artifacts written next to them.
//!
//! A session directory looks like
//!
//! ```text
//! manifest.json       session metadata and virtual view
//! keypoints.jsonl     one frame per line
//! annotations.jsonl   optional ground-truth command epochs
//! ```
//!
//! Keypoint groups a detector missed are stored as absent and stay absent
//! after loading.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::SessionReport;
use crate::commands::{CommandCategory, CommandEpoch};
use crate::geometry::{Vec2, ViewParams};
use crate::haptics::HapticEvent;
use crate::scoring::PracticeScore;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const KEYPOINTS_FILE: &str = "keypoints.jsonl";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";
pub const EPOCHS_FILE: &str = "epochs.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const HAPTICS_FILE: &str = "haptics.jsonl";
pub const SCORES_FILE: &str = "scores.jsonl";

const TIMESTAMP_TOLERANCE_S: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("no {MANIFEST_FILE} in {0}")]
    MissingManifest(PathBuf),
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),
    #[error("no {KEYPOINTS_FILE} in {0}")]
    MissingKeypoints(PathBuf),
    #[error("malformed record at line {line}: {detail}")]
    MalformedRecord { line: usize, detail: String },
    #[error("frame_index {found} at line {line} does not follow {previous}")]
    NonMonotonicFrameIndex { line: usize, previous: u64, found: u64 },
    #[error("keypoint outside frame bounds at line {line}: {detail}")]
    DimensionMismatch { line: usize, detail: String },
    #[error("ground_truth_command_count is {expected} but {ANNOTATIONS_FILE} has {found} entries")]
    AnnotationCountMismatch { expected: usize, found: usize },
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SessionError + '_ {
    move |source| SessionError::Io { path: path.to_path_buf(), source }
}

/// A detected 2D keypoint; serialized as `[x, y, confidence]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

impl Keypoint {
    pub fn new(x: f64, y: f64, confidence: f64) -> Self {
        Self { x, y, confidence }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

impl From<[f64; 3]> for Keypoint {
    fn from([x, y, confidence]: [f64; 3]) -> Self {
        Self { x, y, confidence }
    }
}

impl From<Keypoint> for [f64; 3] {
    fn from(k: Keypoint) -> Self {
        [k.x, k.y, k.confidence]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArmSide {
    Left,
    Right,
}

/// Three arm keypoints. Left arms are ordered (wrist, elbow, shoulder),
/// right arms (finger, wrist, elbow).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmKeypoints {
    pub side: ArmSide,
    pub points: [Keypoint; 3],
}

impl ArmKeypoints {
    pub fn left(wrist: Keypoint, elbow: Keypoint, shoulder: Keypoint) -> Self {
        Self { side: ArmSide::Left, points: [wrist, elbow, shoulder] }
    }

    pub fn right(finger: Keypoint, wrist: Keypoint, elbow: Keypoint) -> Self {
        Self { side: ArmSide::Right, points: [finger, wrist, elbow] }
    }

    pub fn wrist(&self) -> Keypoint {
        match self.side {
            ArmSide::Left => self.points[0],
            ArmSide::Right => self.points[1],
        }
    }

    pub fn elbow(&self) -> Keypoint {
        match self.side {
            ArmSide::Left => self.points[1],
            ArmSide::Right => self.points[2],
        }
    }

    /// Fingertip of a right arm; `None` for a left arm.
    pub fn finger(&self) -> Option<Keypoint> {
        (self.side == ArmSide::Right).then_some(self.points[0])
    }

    pub fn shoulder(&self) -> Option<Keypoint> {
        (self.side == ArmSide::Left).then_some(self.points[2])
    }

    pub fn min_confidence(&self) -> f64 {
        self.points.iter().map(|k| k.confidence).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DogKeypoints {
    /// (left, right)
    pub ears: [Keypoint; 2],
    pub neck: Keypoint,
    pub scapula: Keypoint,
    /// (left, right)
    pub forelimbs: [Keypoint; 2],
    pub waist: Keypoint,
}

impl DogKeypoints {
    pub fn all(&self) -> [Keypoint; 7] {
        [
            self.ears[0],
            self.ears[1],
            self.neck,
            self.scapula,
            self.forelimbs[0],
            self.forelimbs[1],
            self.waist,
        ]
    }

    pub fn min_confidence(&self) -> f64 {
        self.all().iter().map(|k| k.confidence).fold(f64::INFINITY, f64::min)
    }
}

/// Reference marker corners: top-left, top-right, bottom-right, bottom-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MarkerFrame {
    pub corners: [Keypoint; 4],
}

impl MarkerFrame {
    pub fn min_confidence(&self) -> f64 {
        self.corners.iter().map(|k| k.confidence).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_index: u64,
    pub timestamp_s: f64,
    pub left_arm: Option<ArmKeypoints>,
    pub right_arm: Option<ArmKeypoints>,
    pub dog: Option<DogKeypoints>,
    pub marker: Option<MarkerFrame>,
}

impl FrameRecord {
    pub fn empty(frame_index: u64, fps: f64) -> Self {
        Self {
            frame_index,
            timestamp_s: frame_index as f64 / fps,
            left_arm: None,
            right_arm: None,
            dog: None,
            marker: None,
        }
    }

    pub fn to_line(&self) -> RecordLine {
        RecordLine {
            frame_index: self.frame_index,
            left_arm: self.left_arm.map(|a| a.points),
            right_arm: self.right_arm.map(|a| a.points),
            dog: self.dog,
            marker: self.marker,
        }
    }
}

/// One line of `keypoints.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordLine {
    pub frame_index: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_arm: Option<[Keypoint; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_arm: Option<[Keypoint; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dog: Option<DogKeypoints>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marker: Option<MarkerFrame>,
}

impl RecordLine {
    pub fn into_record(self, fps: f64) -> FrameRecord {
        FrameRecord {
            frame_index: self.frame_index,
            timestamp_s: self.frame_index as f64 / fps,
            left_arm: self.left_arm.map(|[w, e, s]| ArmKeypoints::left(w, e, s)),
            right_arm: self.right_arm.map(|[f, w, e]| ArmKeypoints::right(f, w, e)),
            dog: self.dog,
            marker: self.marker,
        }
    }
}

/// The `view` object of a manifest; output size comes from the frame size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestView {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub fov_deg: f64,
    pub pano_width: u32,
    pub pano_height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionManifest {
    pub session_id: String,
    pub dataset_name: String,
    pub fps: f64,
    pub frame_count: u64,
    pub frame_width: u32,
    pub frame_height: u32,
    pub view: ManifestView,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_command_count: Option<usize>,
}

impl SessionManifest {
    pub fn view_params(&self) -> ViewParams {
        ViewParams {
            theta_deg: self.view.theta_deg,
            phi_deg: self.view.phi_deg,
            fov_deg: self.view.fov_deg,
            out_width: self.frame_width,
            out_height: self.frame_height,
            pano_width: self.view.pano_width,
            pano_height: self.view.pano_height,
        }
    }

    fn check(&self) -> Result<(), SessionError> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(SessionError::MalformedManifest(format!("fps must be positive, got {}", self.fps)));
        }
        if self.frame_count < 1 {
            return Err(SessionError::MalformedManifest("frame_count must be at least 1".into()));
        }
        if self.frame_width == 0 || self.frame_height == 0 {
            return Err(SessionError::MalformedManifest("frame dimensions must be non-zero".into()));
        }
        self.view_params()
            .validate()
            .map_err(|e| SessionError::MalformedManifest(e.to_string()))
    }
}

/// Ground-truth command epoch from `annotations.jsonl`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    pub start_frame: u64,
    pub peak_frame: u64,
    pub end_frame: u64,
    pub category: CommandCategory,
}

/// A loaded session. Immutable once loaded; share it behind an `Arc`.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub manifest: SessionManifest,
    /// Sorted by strictly increasing `frame_index`; frames without any
    /// detection may be missing entirely.
    pub frames: Vec<FrameRecord>,
    pub annotations: Option<Vec<Annotation>>,
}

impl Session {
    pub fn frame(&self, frame_index: u64) -> Option<&FrameRecord> {
        self.frames
            .binary_search_by_key(&frame_index, |f| f.frame_index)
            .ok()
            .map(|i| &self.frames[i])
    }

    pub fn frame_count(&self) -> usize {
        self.manifest.frame_count as usize
    }

    pub fn fps(&self) -> f64 {
        self.manifest.fps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    OutOfBounds,
    Confidence,
    NonFinite,
    FrameIndex,
    Timestamp,
    Marker,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Field path such as `right_arm[1].x` or `dog.ears[0].confidence`.
    pub path: String,
    pub kind: ViolationKind,
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.detail)
    }
}

fn check_keypoint(out: &mut Vec<Violation>, path: String, k: &Keypoint, manifest: &SessionManifest) {
    let (w, h) = (manifest.frame_width as f64, manifest.frame_height as f64);
    for (axis, value, bound) in [("x", k.x, w), ("y", k.y, h)] {
        if !value.is_finite() {
            out.push(Violation {
                path: format!("{path}.{axis}"),
                kind: ViolationKind::NonFinite,
                detail: format!("non-finite coordinate {value}"),
            });
        } else if !(0.0..=bound).contains(&value) {
            out.push(Violation {
                path: format!("{path}.{axis}"),
                kind: ViolationKind::OutOfBounds,
                detail: format!("{value} outside [0, {bound}]"),
            });
        }
    }
    if !(0.0..=1.0).contains(&k.confidence) {
        out.push(Violation {
            path: format!("{path}.confidence"),
            kind: ViolationKind::Confidence,
            detail: format!("{} outside [0, 1]", k.confidence),
        });
    }
}

fn cross(o: Vec2, a: Vec2, b: Vec2) -> f64 {
    (a - o).perp(&(b - o))
}

fn segments_cross(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn check_marker(out: &mut Vec<Violation>, marker: &MarkerFrame) {
    let p = marker.corners.map(|k| k.position());
    for i in 0..4 {
        for j in (i + 1)..4 {
            if (p[i] - p[j]).norm() < crate::geometry::DEGENERATE_EDGE {
                out.push(Violation {
                    path: format!("marker[{j}]"),
                    kind: ViolationKind::Marker,
                    detail: format!("corner coincides with corner {i}"),
                });
            }
        }
    }
    if segments_cross(p[0], p[1], p[2], p[3]) || segments_cross(p[1], p[2], p[3], p[0]) {
        out.push(Violation {
            path: "marker".into(),
            kind: ViolationKind::Marker,
            detail: "quadrilateral is self-intersecting".into(),
        });
    }
}

/// Lists every invariant violation of `record`; empty iff the record is valid.
pub fn validate_frame(record: &FrameRecord, manifest: &SessionManifest) -> Vec<Violation> {
    let mut out = Vec::new();
    if record.frame_index >= manifest.frame_count {
        out.push(Violation {
            path: "frame_index".into(),
            kind: ViolationKind::FrameIndex,
            detail: format!("{} not below frame_count {}", record.frame_index, manifest.frame_count),
        });
    }
    let expected_ts = record.frame_index as f64 / manifest.fps;
    if (record.timestamp_s - expected_ts).abs() > TIMESTAMP_TOLERANCE_S {
        out.push(Violation {
            path: "timestamp_s".into(),
            kind: ViolationKind::Timestamp,
            detail: format!("{} != frame_index / fps = {expected_ts}", record.timestamp_s),
        });
    }
    for (name, arm) in [("left_arm", &record.left_arm), ("right_arm", &record.right_arm)] {
        if let Some(arm) = arm {
            for (i, k) in arm.points.iter().enumerate() {
                check_keypoint(&mut out, format!("{name}[{i}]"), k, manifest);
            }
        }
    }
    if let Some(dog) = &record.dog {
        let named = [
            ("dog.ears[0]", dog.ears[0]),
            ("dog.ears[1]", dog.ears[1]),
            ("dog.neck", dog.neck),
            ("dog.scapula", dog.scapula),
            ("dog.forelimbs[0]", dog.forelimbs[0]),
            ("dog.forelimbs[1]", dog.forelimbs[1]),
            ("dog.waist", dog.waist),
        ];
        for (path, k) in named {
            check_keypoint(&mut out, path.to_string(), &k, manifest);
        }
    }
    if let Some(marker) = &record.marker {
        for (i, k) in marker.corners.iter().enumerate() {
            check_keypoint(&mut out, format!("marker[{i}]"), k, manifest);
        }
        check_marker(&mut out, marker);
    }
    out
}

pub fn load_manifest(dir: &Path) -> Result<SessionManifest, SessionError> {
    let path = dir.join(MANIFEST_FILE);
    if !path.is_file() {
        return Err(SessionError::MissingManifest(dir.to_path_buf()));
    }
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: SessionManifest =
        serde_json::from_str(&text).map_err(|e| SessionError::MalformedManifest(e.to_string()))?;
    manifest.check()?;
    Ok(manifest)
}

/// Per-line outcome of scanning a keypoint stream without stopping at the
/// first problem; used by `validate`.
#[derive(Debug)]
pub enum LineReport {
    Malformed { line: usize, detail: String },
    NonMonotonic { line: usize, previous: u64, found: u64 },
    Invalid { line: usize, frame_index: u64, violations: Vec<Violation> },
}

/// Scans every line of the keypoint stream and reports all problems.
pub fn scan_keypoints(dir: &Path, manifest: &SessionManifest) -> Result<Vec<LineReport>, SessionError> {
    let path = dir.join(KEYPOINTS_FILE);
    if !path.is_file() {
        return Err(SessionError::MissingKeypoints(dir.to_path_buf()));
    }
    let reader = BufReader::new(File::open(&path).map_err(io_err(&path))?);
    let mut reports = Vec::new();
    let mut previous: Option<u64> = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line.map_err(io_err(&path))?;
        if text.trim().is_empty() {
            continue;
        }
        let record = match serde_json::from_str::<RecordLine>(&text) {
            Ok(r) => r.into_record(manifest.fps),
            Err(e) => {
                reports.push(LineReport::Malformed { line: line_no, detail: e.to_string() });
                continue;
            }
        };
        if let Some(prev) = previous {
            if record.frame_index <= prev {
                reports.push(LineReport::NonMonotonic { line: line_no, previous: prev, found: record.frame_index });
            }
        }
        previous = Some(record.frame_index);
        let violations = validate_frame(&record, manifest);
        if !violations.is_empty() {
            reports.push(LineReport::Invalid { line: line_no, frame_index: record.frame_index, violations });
        }
    }
    Ok(reports)
}

pub fn load_session(dir: &Path) -> Result<Session, SessionError> {
    let manifest = load_manifest(dir)?;
    let path = dir.join(KEYPOINTS_FILE);
    if !path.is_file() {
        return Err(SessionError::MissingKeypoints(dir.to_path_buf()));
    }
    let reader = BufReader::new(File::open(&path).map_err(io_err(&path))?);
    let mut frames: Vec<FrameRecord> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line.map_err(io_err(&path))?;
        if text.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str::<RecordLine>(&text)
            .map_err(|e| SessionError::MalformedRecord { line: line_no, detail: e.to_string() })?
            .into_record(manifest.fps);
        if let Some(prev) = frames.last() {
            if record.frame_index <= prev.frame_index {
                return Err(SessionError::NonMonotonicFrameIndex {
                    line: line_no,
                    previous: prev.frame_index,
                    found: record.frame_index,
                });
            }
        }
        let violations = validate_frame(&record, &manifest);
        if let Some(v) = violations.iter().find(|v| v.kind == ViolationKind::OutOfBounds) {
            return Err(SessionError::DimensionMismatch { line: line_no, detail: v.to_string() });
        }
        if let Some(v) = violations.first() {
            return Err(SessionError::MalformedRecord { line: line_no, detail: v.to_string() });
        }
        frames.push(record);
    }

    let ann_path = dir.join(ANNOTATIONS_FILE);
    let annotations = if ann_path.is_file() {
        let list: Vec<Annotation> = read_jsonl(&ann_path)?;
        if let Some(expected) = manifest.ground_truth_command_count {
            if expected != list.len() {
                return Err(SessionError::AnnotationCountMismatch { expected, found: list.len() });
            }
        }
        Some(list)
    } else {
        None
    };
    Ok(Session { manifest, frames, annotations })
}

/// Writes a complete session directory.
pub fn write_session(dir: &Path, session: &Session) -> Result<(), SessionError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&session.manifest).expect("manifest serializes");
    fs::write(&manifest_path, text + "\n").map_err(io_err(&manifest_path))?;
    let lines: Vec<RecordLine> = session.frames.iter().map(FrameRecord::to_line).collect();
    write_jsonl(&dir.join(KEYPOINTS_FILE), &lines)?;
    if let Some(annotations) = &session.annotations {
        write_jsonl(&dir.join(ANNOTATIONS_FILE), annotations)?;
    }
    Ok(())
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), SessionError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| io_err(path)(e.into()))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, SessionError> {
    let reader = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let text = line.map_err(io_err(path))?;
        if text.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&text)
                .map_err(|e| SessionError::MalformedRecord { line: i + 1, detail: e.to_string() })?,
        );
    }
    Ok(out)
}

/// A derived artifact that can be persisted next to a session.
#[derive(Debug, Clone, Copy)]
pub enum Artifact<'a> {
    Epochs(&'a [CommandEpoch]),
    Report(&'a SessionReport),
    Haptics(&'a [HapticEvent]),
    Scores(&'a [PracticeScore]),
}

impl Artifact<'_> {
    pub fn file_name(&self) -> &'static str {
        match self {
            Artifact::Epochs(_) => EPOCHS_FILE,
            Artifact::Report(_) => REPORT_FILE,
            Artifact::Haptics(_) => HAPTICS_FILE,
            Artifact::Scores(_) => SCORES_FILE,
        }
    }
}

/// Writes `artifact` into `dir` under its conventional file name.
pub fn save_derived(dir: &Path, artifact: Artifact<'_>) -> Result<PathBuf, SessionError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(artifact.file_name());
    match artifact {
        Artifact::Epochs(items) => write_jsonl(&path, items)?,
        Artifact::Haptics(items) => write_jsonl(&path, items)?,
        Artifact::Scores(items) => write_jsonl(&path, items)?,
        Artifact::Report(report) => {
            let text = serde_json::to_string_pretty(report).expect("report serializes");
            fs::write(&path, text + "\n").map_err(io_err(&path))?;
        }
    }
    Ok(path)
}

pub fn load_epochs(dir: &Path) -> Result<Vec<CommandEpoch>, SessionError> {
    read_jsonl(&dir.join(EPOCHS_FILE))
}

pub fn load_haptics(dir: &Path) -> Result<Vec<HapticEvent>, SessionError> {
    read_jsonl(&dir.join(HAPTICS_FILE))
}

pub fn load_scores(dir: &Path) -> Result<Vec<PracticeScore>, SessionError> {
    read_jsonl(&dir.join(SCORES_FILE))
}

pub fn load_report(dir: &Path) -> Result<SessionReport, SessionError> {
    let path = dir.join(REPORT_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|e| SessionError::MalformedRecord { line: 1, detail: e.to_string() })
}
