//! Wire messages. Every message is one JSON object in a text frame, tagged
//! by its `type` field.

use guidecue_core::cues::{Mode, OverlaySpec};
use guidecue_core::haptics::HapticEvent;
use guidecue_core::scoring::{PracticePoseLine, PracticeScore};
use guidecue_core::session::{DogKeypoints, FrameRecord, Keypoint, MarkerFrame, SessionManifest};
use serde::{Deserialize, Serialize};

/// Playback multipliers a client may request; 0 pauses.
pub const RATES: [f64; 5] = [0.0, 0.25, 0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Subscribe { session_id: String, mode: Mode },
    SetMode { mode: Mode },
    Seek { frame: u64 },
    SetRate { rate: f64 },
    PracticePose(PracticePoseLine),
}

/// Keypoints of one frame; groups that are absent (or hidden by the mode)
/// are omitted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameKeypoints {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_arm: Option<[Keypoint; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_arm: Option<[Keypoint; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dog: Option<DogKeypoints>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marker: Option<MarkerFrame>,
}

impl FrameKeypoints {
    pub fn from_record(record: &FrameRecord, mode: Mode) -> Self {
        Self {
            left_arm: record.left_arm.map(|a| a.points),
            right_arm: if mode == Mode::D { None } else { record.right_arm.map(|a| a.points) },
            dog: record.dog,
            marker: record.marker,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    UnknownSession,
    MalformedMessage,
    NotSubscribed,
    SeekOutOfRange,
    InvalidRate,
    OutOfOrderPose,
    FrameOutOfRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum ServerMessage {
    Hello {
        manifest: SessionManifest,
    },
    Frame {
        frame: u64,
        keypoints: FrameKeypoints,
        overlays: Vec<OverlaySpec>,
        /// Haptic events active on this frame.
        haptics: Vec<HapticEvent>,
    },
    Score(PracticeScore),
    Error {
        code: ErrorCode,
        detail: String,
    },
    /// Sent before the first frame after a seek.
    SeekAck {
        frame: u64,
    },
}

impl ServerMessage {
    pub fn error(code: ErrorCode, detail: impl Into<String>) -> Self {
        ServerMessage::Error { code, detail: detail.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}
