//! Scenario packs: the declarative document that encodes the whole game.
//!
//! A pack holds the voters, scenes, choices and their effects, the minigame
//! content (interest tags and headlines), tooltips, lecture blurbs, sandbox
//! simulation presets and the assessment question bank. Packs are immutable
//! once parsed and can be shared freely between sessions.

mod default;
mod parse;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};

use crate::assessment::Question;
use crate::sim::{GraphSpec, ProfitParams, PropagationParams};

pub use default::{default_pack, DEFAULT_PACK_JSON};
pub use parse::{parse_pack, serialize_pack, PackParseError};
pub use validate::{validate_pack, ValidationReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioPack {
    pub pack_id: String,
    pub version: String,
    pub voters: Vec<VoterProfile>,
    pub scenes: Vec<Scene>,
    #[serde(default)]
    pub tags: Vec<InterestTag>,
    #[serde(default)]
    pub headlines: Vec<HeadlineOption>,
    #[serde(default)]
    pub tooltips: Vec<Tooltip>,
    #[serde(default)]
    pub lectures: Vec<LectureBlurb>,
    #[serde(default)]
    pub sim_presets: Vec<SimPreset>,
    #[serde(default)]
    pub assessment: Vec<Question>,
    pub start_scene: String,
    #[serde(deserialize_with = "non_negative")]
    pub initial_money: u64,
    pub initial_support: i64,
    #[serde(deserialize_with = "positive")]
    pub initial_max_support: u64,
}

impl ScenarioPack {
    pub fn scene(&self, scene_id: &str) -> Option<&Scene> {
        self.scenes.iter().find(|s| s.scene_id == scene_id)
    }

    pub fn voter(&self, voter_id: &str) -> Option<&VoterProfile> {
        self.voters.iter().find(|v| v.voter_id == voter_id)
    }

    pub fn tag(&self, tag_id: &str) -> Option<&InterestTag> {
        self.tags.iter().find(|t| t.tag_id == tag_id)
    }

    pub fn headline(&self, headline_id: &str) -> Option<&HeadlineOption> {
        self.headlines.iter().find(|h| h.headline_id == headline_id)
    }

    pub fn lecture(&self, lecture_id: &str) -> Option<&LectureBlurb> {
        self.lectures.iter().find(|l| l.lecture_id == lecture_id)
    }

    pub fn preset(&self, name: &str) -> Option<&SimPreset> {
        self.sim_presets.iter().find(|p| p.name == name)
    }

    pub fn question(&self, question_id: &str) -> Option<&Question> {
        self.assessment.iter().find(|q| q.question_id == question_id)
    }

    /// Finds a choice anywhere in the pack, together with the scene that owns it.
    pub fn choice(&self, choice_id: &str) -> Option<(&Scene, &Choice)> {
        self.scenes.iter().find_map(|scene| {
            scene
                .choices
                .iter()
                .find(|c| c.choice_id == choice_id)
                .map(|c| (scene, c))
        })
    }

    /// Tooltips whose term occurs (case-insensitively) in `text`.
    pub fn tooltips_for(&self, text: &str) -> Vec<&Tooltip> {
        let haystack = text.to_lowercase();
        self.tooltips
            .iter()
            .filter(|t| haystack.contains(&t.term.to_lowercase()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoterProfile {
    pub voter_id: String,
    pub name: String,
    pub biography: String,
    pub interest_buckets: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Act {
    One,
    Two,
    Three,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    Dialogue,
    TagSort,
    HeadlinePick,
    ChoiceHub,
    Sandbox,
    Lecture,
    Assessment,
    Terminal,
}

impl SceneKind {
    pub const ALL: [SceneKind; 8] = [
        SceneKind::Dialogue,
        SceneKind::TagSort,
        SceneKind::HeadlinePick,
        SceneKind::ChoiceHub,
        SceneKind::Sandbox,
        SceneKind::Lecture,
        SceneKind::Assessment,
        SceneKind::Terminal,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            Self::Dialogue => "dialogue",
            Self::TagSort => "tag_sort",
            Self::HeadlinePick => "headline_pick",
            Self::ChoiceHub => "choice_hub",
            Self::Sandbox => "sandbox",
            Self::Lecture => "lecture",
            Self::Assessment => "assessment",
            Self::Terminal => "terminal",
        }
    }

    /// Minigame scenes have no choices; they advance to `next_scene` once
    /// their pending items are resolved.
    pub const fn is_minigame(self) -> bool {
        matches!(self, Self::TagSort | Self::HeadlinePick)
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub scene_id: String,
    pub act: Act,
    pub kind: SceneKind,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub title: String,
    pub body: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub choices: Vec<Choice>,
    #[serde(default, skip_serializing_if = "Effect::is_identity")]
    pub on_enter: Effect,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tag_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub headline_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lecture_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim_preset: Option<String>,
    /// Where a minigame scene goes once all its items are resolved.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_scene: Option<String>,
}

impl Scene {
    pub fn choice(&self, choice_id: &str) -> Option<&Choice> {
        self.choices.iter().find(|c| c.choice_id == choice_id)
    }

    /// Every scene id this scene can lead to directly.
    pub fn successors(&self) -> impl Iterator<Item = &str> {
        self.choices
            .iter()
            .map(|c| c.target_scene.as_str())
            .chain(self.next_scene.as_deref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Choice {
    pub choice_id: String,
    pub label: String,
    #[serde(default, deserialize_with = "non_negative_cost")]
    pub money_cost: u64,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub requires_flags: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub forbids_flags: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Effect::is_identity")]
    pub effect: Effect,
    pub target_scene: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub feedback: String,
}

/// Resource changes attached to a choice or to entering a scene.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Effect {
    #[serde(default, skip_serializing_if = "is_zero")]
    pub support_delta: i64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub money_delta: i64,
    #[serde(default, skip_serializing_if = "Multiplier::is_one")]
    pub max_support_multiplier: Multiplier,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub set_flags: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Multiplier::is_one")]
    pub apathy_multiplier: Multiplier,
    /// Donation ads: adds floor(support / 2) money, using support as it was
    /// before this effect.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub donation: bool,
}

impl Effect {
    pub fn is_identity(&self) -> bool {
        *self == Effect::default()
    }
}

/// A scale factor in (0, 1]. The identity is 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Multiplier(f64);

impl Multiplier {
    pub const ONE: Multiplier = Multiplier(1.0);

    pub fn new(value: f64) -> Option<Self> {
        (value > 0.0 && value <= 1.0).then_some(Multiplier(value))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_one(&self) -> bool {
        self.0 == 1.0
    }
}

impl Default for Multiplier {
    fn default() -> Self {
        Self::ONE
    }
}

impl<'de> Deserialize<'de> for Multiplier {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = f64::deserialize(deserializer)?;
        Multiplier::new(value).ok_or_else(|| {
            coded_error::<D::Error>(
                IssueCode::InvalidMultiplier,
                format!("multiplier must lie in (0, 1], got {value}"),
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterestTag {
    pub tag_id: String,
    pub label: String,
    pub correct_voter: String,
    pub bucket: String,
    pub explanation: String,
    /// Support granted for a correct placement (scaled by apathy).
    #[serde(default, skip_serializing_if = "is_zero")]
    pub support_reward: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadlineQuality {
    Optimal,
    Suboptimal,
    Poor,
}

/// One candidate headline. Headlines in a scene that target the same voter
/// form one decision point: the player picks exactly one of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadlineOption {
    pub headline_id: String,
    pub text: String,
    pub voter: String,
    pub quality: HeadlineQuality,
    pub support_value: i64,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tooltip {
    pub term: String,
    pub definition: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LectureBlurb {
    pub lecture_id: String,
    pub title: String,
    pub body: String,
}

/// A named sandbox configuration: how to build the graph and how to run the
/// spread (and optionally the profit) model on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimPreset {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub graph: GraphSpec,
    pub propagation: PropagationParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profit: Option<ProfitParams>,
    #[serde(default = "one")]
    pub runs: u32,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> u32 {
    1
}

fn is_zero(v: &i64) -> bool {
    *v == 0
}

/// One finding from parsing or validation, anchored at a document path such
/// as `scenes[3].choices[1].target_scene`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub path: String,
    pub code: IssueCode,
    pub message: String,
}

impl Issue {
    pub fn new(path: impl Into<String>, code: IssueCode, message: impl Into<String>) -> Self {
        Issue {
            path: path.into(),
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.path, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    // parse
    Malformed,
    MissingField,
    UnknownField,
    WrongType,
    UnknownVariant,
    NegativeCost,
    NegativeValue,
    InvalidValue,
    InvalidMultiplier,
    DuplicateId,
    NoInterestBuckets,
    InvalidQuestion,
    // validate: errors
    MissingStart,
    DanglingTarget,
    NoReachableTerminal,
    UnknownVoter,
    UnknownBucket,
    UnknownTag,
    UnknownHeadline,
    UnknownLecture,
    UnknownPreset,
    InvalidPreset,
    SupportOutOfRange,
    TerminalHasChoices,
    DeadEnd,
    MissingNextScene,
    EmptyTagSort,
    HeadlineCount,
    OptimalCount,
    HeadlineOrder,
    // validate: warnings
    UnreachableScene,
    UnaffordableDecision,
}

impl IssueCode {
    pub const fn as_str(self) -> &'static str {
        match self {
            Self::Malformed => "MALFORMED",
            Self::MissingField => "MISSING_FIELD",
            Self::UnknownField => "UNKNOWN_FIELD",
            Self::WrongType => "WRONG_TYPE",
            Self::UnknownVariant => "UNKNOWN_VARIANT",
            Self::NegativeCost => "NEGATIVE_COST",
            Self::NegativeValue => "NEGATIVE_VALUE",
            Self::InvalidValue => "INVALID_VALUE",
            Self::InvalidMultiplier => "INVALID_MULTIPLIER",
            Self::DuplicateId => "DUPLICATE_ID",
            Self::NoInterestBuckets => "NO_INTEREST_BUCKETS",
            Self::InvalidQuestion => "INVALID_QUESTION",
            Self::MissingStart => "MISSING_START",
            Self::DanglingTarget => "DANGLING_TARGET",
            Self::NoReachableTerminal => "NO_REACHABLE_TERMINAL",
            Self::UnknownVoter => "UNKNOWN_VOTER",
            Self::UnknownBucket => "UNKNOWN_BUCKET",
            Self::UnknownTag => "UNKNOWN_TAG",
            Self::UnknownHeadline => "UNKNOWN_HEADLINE",
            Self::UnknownLecture => "UNKNOWN_LECTURE",
            Self::UnknownPreset => "UNKNOWN_PRESET",
            Self::InvalidPreset => "INVALID_PRESET",
            Self::SupportOutOfRange => "SUPPORT_OUT_OF_RANGE",
            Self::TerminalHasChoices => "TERMINAL_HAS_CHOICES",
            Self::DeadEnd => "DEAD_END",
            Self::MissingNextScene => "MISSING_NEXT_SCENE",
            Self::EmptyTagSort => "EMPTY_TAG_SORT",
            Self::HeadlineCount => "HEADLINE_COUNT",
            Self::OptimalCount => "OPTIMAL_COUNT",
            Self::HeadlineOrder => "HEADLINE_ORDER",
            Self::UnreachableScene => "UNREACHABLE_SCENE",
            Self::UnaffordableDecision => "UNAFFORDABLE_DECISION",
        }
    }

    pub fn from_str_code(code: &str) -> Option<Self> {
        serde_json::from_value(serde_json::Value::String(code.to_owned())).ok()
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

// Custom deserializers smuggle an issue code through serde's string-only
// error channel as "CODE|message"; the parser splits it back out.
const CODE_SEPARATOR: char = '|';

fn coded_error<E: serde::de::Error>(code: IssueCode, message: String) -> E {
    E::custom(format!("{}{CODE_SEPARATOR}{message}", code.as_str()))
}

fn non_negative_cost<'de, D: Deserializer<'de>>(deserializer: D) -> Result<u64, D::Error> {
    let value = i64::deserialize(deserializer)?;
    u64::try_from(value).map_err(|_| {
        coded_error::<D::Error>(
            IssueCode::NegativeCost,
            format!("money_cost must be non-negative, got {value}"),
        )
    })
}

fn non_negative<'de, D: Deserializer<'de>>(deserializer: D) -> Result<u64, D::Error> {
    let value = i64::deserialize(deserializer)?;
    u64::try_from(value).map_err(|_| {
        coded_error::<D::Error>(
            IssueCode::NegativeValue,
            format!("value must be non-negative, got {value}"),
        )
    })
}

fn positive<'de, D: Deserializer<'de>>(deserializer: D) -> Result<u64, D::Error> {
    let value = i64::deserialize(deserializer)?;
    if value <= 0 {
        return Err(coded_error::<D::Error>(
            IssueCode::InvalidValue,
            format!("value must be positive, got {value}"),
        ));
    }
    Ok(value as u64)
}
