//! Guide-dog handling analysis: trainer and dog keypoint sessions, command
//! segmentation and classification, haptic cue synthesis, overlay cues,
//! practice scoring and synthetic fixtures.

pub mod analysis;
pub mod analytics;
pub mod commands;
pub mod cues;
pub mod fixture;
pub mod geometry;
pub mod haptics;
pub mod kinematics;
pub mod scoring;
pub mod session;
pub mod stats;

pub use analysis::{analyze, AnalysisConfig, AnalysisError, SessionAnalysis};
pub use session::{load_session, Session, SessionError};
