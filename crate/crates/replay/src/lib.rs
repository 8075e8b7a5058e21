//! Replay service: streams a session frame by frame over WebSocket with
//! overlays and haptic events for the chosen mode, and scores the practice
//! poses clients send back.

pub mod protocol;
pub mod server;
pub mod store;

use thiserror::Error;

pub use protocol::{ClientMessage, ErrorCode, FrameKeypoints, ServerMessage};
pub use server::{frame_message, ReplayServer, ReplayState};
pub use store::{SessionEntry, SessionStore};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("no sessions to serve")]
    NoSessions,
    #[error(transparent)]
    Session(#[from] guidecue_core::session::SessionError),
    #[error(transparent)]
    Analysis(#[from] guidecue_core::analysis::AnalysisError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    WebSocket(#[from] tokio_tungstenite::tungstenite::Error),
}
