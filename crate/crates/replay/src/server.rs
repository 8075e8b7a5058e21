//! Accept loop and the per-connection replay state machine.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use guidecue_core::cues::{CueConfig, CueEngine, Mode};
use guidecue_core::scoring::{LiveError, LiveScorer, PracticePose};
use tokio::net::{TcpListener, TcpStream, ToSocketAddrs};
use tokio::time::{sleep_until, Instant};
use tokio_tungstenite::tungstenite::Message;

use crate::protocol::{ClientMessage, ErrorCode, FrameKeypoints, ServerMessage, RATES};
use crate::store::{SessionEntry, SessionStore};
use crate::ReplayError;

/// A practice pose stays on screen for this many frames around its own.
pub const PRACTICE_HOLD_FRAMES: u64 = 30;

/// Builds the `frame` message for one frame of `entry`.
pub fn frame_message(
    entry: &SessionEntry,
    cues: &CueConfig,
    frame: u64,
    mode: Mode,
    practice: Option<&PracticePose>,
) -> ServerMessage {
    let keypoints = entry
        .session
        .frame(frame)
        .map(|r| FrameKeypoints::from_record(r, mode))
        .unwrap_or_default();
    let practice = practice.filter(|p| p.frame_index.abs_diff(frame) <= PRACTICE_HOLD_FRAMES);
    let overlays = CueEngine::new(&entry.session, &entry.analysis, cues)
        .and_then(|engine| engine.build_overlays(frame, mode, practice))
        .unwrap_or_else(|e| {
            tracing::warn!(session = %entry.analysis.session_id, frame, "no overlays: {e}");
            Vec::new()
        });
    let haptics = entry.analysis.haptic_track.iter().filter(|e| e.covers(frame)).copied().collect();
    ServerMessage::Frame { frame, keypoints, overlays, haptics }
}

/// Replay state of one subscribed connection.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayState {
    pub session_id: String,
    pub mode: Mode,
    pub cursor: u64,
    /// Playback multiplier; 0 pauses.
    pub rate: f64,
    pub client_id: u64,
}

struct Replay {
    entry: Arc<SessionEntry>,
    cues: CueConfig,
    state: ReplayState,
    scorer: LiveScorer,
    practice: Option<PracticePose>,
    finished: bool,
    next_tick: Instant,
}

impl Replay {
    fn new(entry: Arc<SessionEntry>, store: &SessionStore, mode: Mode, client_id: u64) -> Self {
        let cfg = store.config();
        let scorer = LiveScorer::new(&entry.analysis, cfg.kinematics.clone(), cfg.segmentation.clone(), cfg.scoring.clone());
        let state = ReplayState { session_id: entry.analysis.session_id.clone(), mode, cursor: 0, rate: 1.0, client_id };
        let mut replay =
            Self { entry, cues: cfg.cues.clone(), state, scorer, practice: None, finished: false, next_tick: Instant::now() };
        replay.reschedule();
        replay
    }

    fn last_frame(&self) -> u64 {
        self.entry.analysis.frame_count.saturating_sub(1) as u64
    }

    /// Tick period at the current rate; only meaningful while playing.
    fn period(&self) -> Duration {
        Duration::from_secs_f64(1.0 / (self.entry.analysis.fps * self.state.rate))
    }

    fn reschedule(&mut self) {
        if self.playing() {
            self.next_tick = Instant::now() + self.period();
        }
    }

    fn playing(&self) -> bool {
        self.state.rate > 0.0
    }

    fn frame(&self) -> ServerMessage {
        frame_message(&self.entry, &self.cues, self.state.cursor, self.state.mode, self.practice.as_ref())
    }

    /// Re-sends the current frame behind a seek barrier, for changes made
    /// while paused.
    fn rerender(&self) -> Vec<ServerMessage> {
        vec![ServerMessage::SeekAck { frame: self.state.cursor }, self.frame()]
    }

    fn finish(&mut self) -> Vec<ServerMessage> {
        if self.finished {
            return Vec::new();
        }
        self.finished = true;
        self.scorer.finish().into_iter().map(ServerMessage::Score).collect()
    }

    fn tick(&mut self) -> Vec<ServerMessage> {
        let period = self.period();
        self.next_tick += period;
        let now = Instant::now();
        if self.next_tick < now {
            // Fell more than a period behind; resynchronize instead of bursting.
            self.next_tick = now + period;
        }
        if self.state.cursor >= self.last_frame() {
            self.state.rate = 0.0;
            return self.finish();
        }
        self.state.cursor += 1;
        let mut out = vec![self.frame()];
        out.extend(self.scorer.advance(self.state.cursor).into_iter().map(ServerMessage::Score));
        if self.state.cursor == self.last_frame() {
            self.state.rate = 0.0;
            out.extend(self.finish());
        }
        out
    }

    fn apply(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        match msg {
            ClientMessage::Subscribe { .. } => unreachable!("handled by the connection"),
            ClientMessage::SetMode { mode } => {
                self.state.mode = mode;
                if self.playing() {
                    Vec::new()
                } else {
                    self.rerender()
                }
            }
            ClientMessage::Seek { frame } => {
                if frame > self.last_frame() {
                    return vec![ServerMessage::error(
                        ErrorCode::SeekOutOfRange,
                        format!("frame {frame} is past the last frame {}", self.last_frame()),
                    )];
                }
                self.state.cursor = frame;
                self.reschedule();
                vec![ServerMessage::SeekAck { frame }, self.frame()]
            }
            ClientMessage::SetRate { rate } => {
                if !RATES.contains(&rate) {
                    return vec![ServerMessage::error(ErrorCode::InvalidRate, format!("rate {rate} is not one of {RATES:?}"))];
                }
                self.state.rate = rate;
                self.reschedule();
                Vec::new()
            }
            ClientMessage::PracticePose(line) => {
                let mut pose = PracticePose::from(line);
                if !self.playing() {
                    pose.frame_index = self.state.cursor;
                }
                match self.scorer.push_pose(&pose) {
                    Ok((_, scores)) => {
                        self.practice = Some(pose);
                        let mut out: Vec<ServerMessage> = scores.into_iter().map(ServerMessage::Score).collect();
                        if !self.playing() {
                            out.extend(self.rerender());
                        }
                        out
                    }
                    Err(e @ LiveError::OutOfOrderPose { .. }) => {
                        vec![ServerMessage::error(ErrorCode::OutOfOrderPose, e.to_string())]
                    }
                    Err(e @ LiveError::FrameOutOfRange(_)) => {
                        vec![ServerMessage::error(ErrorCode::FrameOutOfRange, e.to_string())]
                    }
                }
            }
        }
    }
}

struct Connection {
    store: Arc<SessionStore>,
    client_id: u64,
    replay: Option<Replay>,
}

impl Connection {
    fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        let msg: ClientMessage = match serde_json::from_str(text) {
            Ok(m) => m,
            Err(e) => return vec![ServerMessage::error(ErrorCode::MalformedMessage, e.to_string())],
        };
        match msg {
            ClientMessage::Subscribe { session_id, mode } => {
                let Some(entry) = self.store.get(&session_id) else {
                    return vec![ServerMessage::error(ErrorCode::UnknownSession, format!("no session {session_id:?}"))];
                };
                let replay = Replay::new(entry, &self.store, mode, self.client_id);
                let out = vec![ServerMessage::Hello { manifest: replay.entry.session.manifest.clone() }, replay.frame()];
                tracing::info!(client = self.client_id, session = %session_id, "subscribed");
                self.replay = Some(replay);
                out
            }
            other => match self.replay.as_mut() {
                Some(replay) => replay.apply(other),
                None => vec![ServerMessage::error(ErrorCode::NotSubscribed, "subscribe before sending replay commands")],
            },
        }
    }

    fn next_tick(&self) -> Option<Instant> {
        self.replay.as_ref().filter(|r| r.playing()).map(|r| r.next_tick)
    }
}

async fn serve_connection(stream: TcpStream, store: Arc<SessionStore>, client_id: u64) -> Result<(), ReplayError> {
    let ws = tokio_tungstenite::accept_async(stream).await?;
    let (mut tx, mut rx) = ws.split();
    let mut conn = Connection { store, client_id, replay: None };
    loop {
        let tick = conn.next_tick();
        let out = tokio::select! {
            incoming = rx.next() => match incoming {
                None => break,
                Some(Err(e)) => return Err(e.into()),
                Some(Ok(Message::Text(text))) => conn.handle_text(text.as_str()),
                Some(Ok(Message::Binary(_))) => {
                    vec![ServerMessage::error(ErrorCode::MalformedMessage, "binary messages are not supported")]
                }
                Some(Ok(Message::Close(_))) => break,
                Some(Ok(_)) => continue,
            },
            _ = sleep_until(tick.unwrap_or_else(Instant::now)), if tick.is_some() => {
                conn.replay.as_mut().map(Replay::tick).unwrap_or_default()
            }
        };
        for msg in out {
            tx.feed(Message::text(msg.to_json())).await?;
        }
        tx.flush().await?;
    }
    tracing::info!(client = client_id, "disconnected");
    Ok(())
}

/// A bound replay service.
pub struct ReplayServer {
    listener: TcpListener,
    store: Arc<SessionStore>,
}

impl ReplayServer {
    pub async fn bind(store: SessionStore, addr: impl ToSocketAddrs) -> Result<Self, ReplayError> {
        if store.is_empty() {
            return Err(ReplayError::NoSessions);
        }
        let listener = TcpListener::bind(addr).await?;
        Ok(Self { listener, store: Arc::new(store) })
    }

    pub fn local_addr(&self) -> Result<SocketAddr, ReplayError> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts connections until the task is dropped; each connection runs
    /// its own replay loop.
    pub async fn run(self) -> Result<(), ReplayError> {
        let next_id = AtomicU64::new(1);
        loop {
            let (stream, peer) = self.listener.accept().await?;
            let _ = stream.set_nodelay(true);
            let client_id = next_id.fetch_add(1, Ordering::Relaxed);
            let store = Arc::clone(&self.store);
            tracing::debug!(client = client_id, %peer, "connection");
            tokio::spawn(async move {
                if let Err(e) = serve_connection(stream, store, client_id).await {
                    tracing::warn!(client = client_id, "connection ended: {e}");
                }
            });
        }
    }
}
