use chrono::{DateTime, Utc};
use inoculate_core::engine::{scene_view, FeedbackEvent, SceneView};
use serde::{Deserialize, Serialize};

use crate::store::Session;

/// What the client renders. Built only from the game state and its pack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEnvelope {
    pub session_id: String,
    pub pack_id: String,
    pub created_at: DateTime<Utc>,
    pub seed: u64,
    pub snapshot: SceneView,
}

impl SessionEnvelope {
    pub fn of(session: &Session) -> Self {
        SessionEnvelope {
            session_id: session.header.session_id.clone(),
            pack_id: session.header.pack_id.clone(),
            created_at: session.header.created_at,
            seed: session.header.seed,
            snapshot: scene_view(&session.state, &session.pack.pack),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionResponse {
    pub envelope: SessionEnvelope,
    pub feedback: FeedbackEvent,
}
