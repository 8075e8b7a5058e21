//! Sessions preloaded and analyzed once, shared read-only by all connections.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use guidecue_core::analysis::{analyze, AnalysisConfig, SessionAnalysis};
use guidecue_core::session::{load_session, Session};

use crate::ReplayError;

#[derive(Debug)]
pub struct SessionEntry {
    pub session: Session,
    pub analysis: SessionAnalysis,
}

#[derive(Debug, Default)]
pub struct SessionStore {
    config: AnalysisConfig,
    entries: BTreeMap<String, Arc<SessionEntry>>,
}

impl SessionStore {
    pub fn new(config: AnalysisConfig) -> Self {
        Self { config, entries: BTreeMap::new() }
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.config
    }

    /// Analyzes `session` and registers it under its session id.
    pub fn insert(&mut self, session: Session) -> Result<(), ReplayError> {
        let analysis = analyze(&session, &self.config)?;
        let id = session.manifest.session_id.clone();
        self.entries.insert(id, Arc::new(SessionEntry { session, analysis }));
        Ok(())
    }

    pub fn load_dir(&mut self, dir: &Path) -> Result<(), ReplayError> {
        let session = load_session(dir)?;
        self.insert(session)
    }

    pub fn get(&self, session_id: &str) -> Option<Arc<SessionEntry>> {
        self.entries.get(session_id).cloned()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
