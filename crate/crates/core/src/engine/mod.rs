//! Session state machine.
//!
//! A session is a [`GameState`] plus the pack it plays. Every mutation goes
//! through [`apply_action`], which checks the action against the current
//! state, produces a new state and a [`FeedbackEvent`], and appends the
//! action to the event log. Narrative progression uses no randomness; the
//! seed only feeds assessment shuffles, so `replay(pack, seed, log)`
//! reproduces a session exactly.

mod step;
mod view;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assessment::{AssessmentError, AssessmentRecord, Phase};
use crate::pack::{validate_pack, Issue, SceneKind, ScenarioPack};

pub use step::{
    apply_action, apply_choice, available_choices, go_back, legal_actions, pick_headline,
    place_tag, replay, replay_session, resume,
};
pub use view::{
    scene_view, AssessmentView, ChoiceView, HeadlineView, QuestionView, Resources, SceneView, TagView,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub session_id: String,
    pub scene_id: String,
    pub money: u64,
    pub support: i64,
    pub max_support: i64,
    pub apathy_multiplier: f64,
    pub flags: BTreeSet<String>,
    pub completed_scenes: Vec<String>,
    pub pending_tags: Vec<String>,
    pub pending_headlines: Vec<String>,
    pub rng_seed: u64,
    pub event_log: Vec<PlayerEvent>,
    /// Set while the player is reviewing a completed scene.
    pub review_scene: Option<String>,
    pub assessments: BTreeMap<Phase, AssessmentRecord>,
}

impl GameState {
    /// The ordinal the next logged event will carry.
    pub fn next_ordinal(&self) -> u64 {
        self.event_log.len() as u64
    }

    /// The scene whose content is on screen (the review scene if reviewing).
    pub fn shown_scene(&self) -> &str {
        self.review_scene.as_deref().unwrap_or(&self.scene_id)
    }

    pub fn in_review(&self) -> bool {
        self.review_scene.is_some()
    }

    /// Everything except the event log, for "same state modulo log" checks.
    pub fn without_log(&self) -> GameState {
        GameState {
            event_log: Vec::new(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerEvent {
    pub ordinal: u64,
    #[serde(flatten)]
    pub action: Action,
    /// Wall clock at submission; informational, ignored by replay.
    #[serde(default)]
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Action {
    Choice {
        choice_id: String,
    },
    TagPlacement {
        tag_id: String,
        voter_id: String,
    },
    HeadlinePick {
        headline_id: String,
    },
    /// `scene_id: None` resumes the live scene.
    BackNav {
        #[serde(default)]
        scene_id: Option<String>,
    },
    SandboxRun {
        preset: String,
    },
    AssessmentSubmit {
        phase: Phase,
        #[serde(default)]
        answers: BTreeMap<String, usize>,
    },
}

impl Action {
    pub fn kind(&self) -> &'static str {
        match self {
            Action::Choice { .. } => "choice",
            Action::TagPlacement { .. } => "tag_placement",
            Action::HeadlinePick { .. } => "headline_pick",
            Action::BackNav { .. } => "back_nav",
            Action::SandboxRun { .. } => "sandbox_run",
            Action::AssessmentSubmit { .. } => "assessment_submit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Incorrect,
    Suboptimal,
    Info,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub verdict: Verdict,
    pub explanation: String,
    pub support_delta_applied: i64,
    pub money_delta_applied: i64,
    pub max_support_after: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DisabledReason {
    InsufficientFunds,
    FlagMissing,
    FlagForbidden,
    ReviewOnly,
}

impl DisabledReason {
    pub const fn as_str(self) -> &'static str {
        match self {
            Self::InsufficientFunds => "INSUFFICIENT_FUNDS",
            Self::FlagMissing => "FLAG_MISSING",
            Self::FlagForbidden => "FLAG_FORBIDDEN",
            Self::ReviewOnly => "REVIEW_ONLY",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("choice `{choice_id}` is disabled ({})", reason.as_str())]
    DisabledChoice {
        choice_id: String,
        reason: DisabledReason,
    },
    #[error("no choice `{0}` in the current scene")]
    UnknownChoice(String),
    #[error("money would drop to {0}")]
    WouldBankrupt(i128),
    #[error("tag `{0}` is not pending")]
    TagNotPending(String),
    #[error("unknown voter `{0}`")]
    UnknownVoter(String),
    #[error("expected a {expected} scene, current scene is {actual}")]
    WrongSceneKind {
        expected: SceneKind,
        actual: SceneKind,
    },
    #[error("headline `{0}` is not offered here")]
    UnknownHeadline(String),
    #[error("scene `{0}` has not been completed")]
    SceneNotCompleted(String),
    #[error("review mode: only back navigation is allowed")]
    ReviewOnly,
    #[error("not in review mode")]
    NotInReview,
    #[error("scene `{0}` has no choices")]
    NoChoices(String),
    #[error("event {ordinal}: {cause}")]
    IllegalEvent {
        ordinal: u64,
        cause: Box<EngineError>,
    },
    #[error("expected ordinal {expected}, found {found}")]
    OrdinalMismatch { expected: u64, found: u64 },
    #[error("pack is not playable ({} errors)", .0.len())]
    InvalidPack(Vec<Issue>),
    #[error("the {0} assessment is not available here")]
    AssessmentUnavailable(Phase),
    #[error("the {0} assessment was already submitted")]
    AssessmentAlreadySubmitted(Phase),
    #[error(transparent)]
    Assessment(#[from] AssessmentError),
    #[error("unknown simulation preset `{0}`")]
    UnknownPreset(String),
}

impl EngineError {
    /// Stable machine-readable code. Disabled choices report their reason.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::DisabledChoice { reason, .. } => reason.as_str(),
            EngineError::UnknownChoice(_) => "UNKNOWN_CHOICE",
            EngineError::WouldBankrupt(_) => "WOULD_BANKRUPT",
            EngineError::TagNotPending(_) => "TAG_NOT_PENDING",
            EngineError::UnknownVoter(_) => "UNKNOWN_VOTER",
            EngineError::WrongSceneKind { .. } => "WRONG_SCENE_KIND",
            EngineError::UnknownHeadline(_) => "UNKNOWN_HEADLINE",
            EngineError::SceneNotCompleted(_) => "SCENE_NOT_COMPLETED",
            EngineError::ReviewOnly => "REVIEW_ONLY",
            EngineError::NotInReview => "NOT_IN_REVIEW",
            EngineError::NoChoices(_) => "NO_CHOICES",
            EngineError::IllegalEvent { .. } => "ILLEGAL_EVENT",
            EngineError::OrdinalMismatch { .. } => "ORDINAL_MISMATCH",
            EngineError::InvalidPack(_) => "INVALID_PACK",
            EngineError::AssessmentUnavailable(_) => "ASSESSMENT_UNAVAILABLE",
            EngineError::AssessmentAlreadySubmitted(_) => "ASSESSMENT_ALREADY_SUBMITTED",
            EngineError::Assessment(e) => e.code(),
            EngineError::UnknownPreset(_) => "UNKNOWN_PRESET",
        }
    }
}

/// Default session id: the seed in hex.
pub fn default_session_id(seed: u64) -> String {
    format!("{seed:016x}")
}

pub fn new_session(pack: &ScenarioPack, seed: u64) -> Result<GameState, EngineError> {
    new_session_with_id(pack, seed, default_session_id(seed))
}

/// Starts a session at the pack's start scene with the pack's initial
/// resources. The pack must validate without errors.
pub fn new_session_with_id(
    pack: &ScenarioPack,
    seed: u64,
    session_id: String,
) -> Result<GameState, EngineError> {
    let report = validate_pack(pack);
    if !report.is_playable() {
        return Err(EngineError::InvalidPack(report.errors));
    }
    let mut state = GameState {
        session_id,
        scene_id: pack.start_scene.clone(),
        money: pack.initial_money,
        support: pack.initial_support,
        max_support: pack.initial_max_support as i64,
        apathy_multiplier: 1.0,
        flags: BTreeSet::new(),
        completed_scenes: Vec::new(),
        pending_tags: Vec::new(),
        pending_headlines: Vec::new(),
        rng_seed: seed,
        event_log: Vec::new(),
        review_scene: None,
        assessments: BTreeMap::new(),
    };
    step::enter_scene(&mut state, pack, &pack.start_scene)?;
    Ok(state)
}
