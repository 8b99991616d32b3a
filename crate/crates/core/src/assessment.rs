//! Pre/post knowledge assessment: seeded question ordering, grading with
//! per-topic tallies, and the knowledge delta between the two phases.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pack::ScenarioPack;
use crate::rng::{derive_seed, rng_from, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topic {
    Techniques,
    Deepfakes,
    AiChatbots,
    PlatformEconomics,
    Regulation,
}

impl Topic {
    pub const ALL: [Topic; 5] = [
        Topic::Techniques,
        Topic::Deepfakes,
        Topic::AiChatbots,
        Topic::PlatformEconomics,
        Topic::Regulation,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            Topic::Techniques => "techniques",
            Topic::Deepfakes => "deepfakes",
            Topic::AiChatbots => "ai_chatbots",
            Topic::PlatformEconomics => "platform_economics",
            Topic::Regulation => "regulation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Question {
    pub question_id: String,
    pub prompt: String,
    pub options: Vec<String>,
    pub correct_index: usize,
    pub topic: Topic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Pre,
    Post,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Pre => "pre",
            Phase::Post => "post",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicTally {
    pub correct: u32,
    pub total: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentRecord {
    pub phase: Phase,
    pub question_order: Vec<String>,
    pub answers: BTreeMap<String, usize>,
    pub score: u32,
    pub per_topic: BTreeMap<Topic, TopicTally>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub pre_score: u32,
    pub post_score: u32,
    pub overall_delta: i64,
    pub per_topic_delta: BTreeMap<Topic, i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssessmentError {
    #[error("the pack has no assessment questions")]
    NoQuestions,
    #[error("unknown question id `{0}`")]
    UnknownQuestionId(String),
    #[error("expected a pre record and a post record")]
    PhaseMismatch,
}

impl AssessmentError {
    pub fn code(&self) -> &'static str {
        match self {
            AssessmentError::NoQuestions => "NO_QUESTIONS",
            AssessmentError::UnknownQuestionId(_) => "UNKNOWN_QUESTION_ID",
            AssessmentError::PhaseMismatch => "PHASE_MISMATCH",
        }
    }
}

fn phase_stream(phase: Phase) -> u64 {
    match phase {
        Phase::Pre => stream::ASSESSMENT_PRE,
        Phase::Post => stream::ASSESSMENT_POST,
    }
}

/// Seeded shuffle of the whole question bank. Each phase draws from its own
/// derived seed, so pre and post orders differ while the content is the same.
pub fn start_assessment(
    pack: &ScenarioPack,
    phase: Phase,
    seed: u64,
) -> Result<Vec<String>, AssessmentError> {
    if pack.assessment.is_empty() {
        return Err(AssessmentError::NoQuestions);
    }
    let mut order: Vec<String> = pack.assessment.iter().map(|q| q.question_id.clone()).collect();
    let mut rng = rng_from(derive_seed(seed, phase_stream(phase)));
    order.shuffle(&mut rng);
    Ok(order)
}

/// Grades a set of answers. Unanswered questions (and out-of-range option
/// indices) count as incorrect. The record lists questions in pack order.
pub fn grade(
    pack: &ScenarioPack,
    phase: Phase,
    answers: &BTreeMap<String, usize>,
) -> Result<AssessmentRecord, AssessmentError> {
    if let Some(unknown) = answers.keys().find(|id| pack.question(id).is_none()) {
        return Err(AssessmentError::UnknownQuestionId(unknown.clone()));
    }

    let mut per_topic: BTreeMap<Topic, TopicTally> = BTreeMap::new();
    for q in &pack.assessment {
        let tally = per_topic.entry(q.topic).or_default();
        tally.total += 1;
        if answers.get(&q.question_id) == Some(&q.correct_index) {
            tally.correct += 1;
        }
    }
    let score = per_topic.values().map(|t| t.correct).sum();

    Ok(AssessmentRecord {
        phase,
        question_order: pack.assessment.iter().map(|q| q.question_id.clone()).collect(),
        answers: answers.clone(),
        score,
        per_topic,
    })
}

pub fn delta(pre: &AssessmentRecord, post: &AssessmentRecord) -> Result<DeltaReport, AssessmentError> {
    if pre.phase != Phase::Pre || post.phase != Phase::Post {
        return Err(AssessmentError::PhaseMismatch);
    }
    Ok(delta_unchecked(pre, post))
}

/// Arithmetic delta without the phase check; `delta_unchecked(r, r)` is all zero.
pub fn delta_unchecked(pre: &AssessmentRecord, post: &AssessmentRecord) -> DeltaReport {
    let correct = |r: &AssessmentRecord, t: &Topic| r.per_topic.get(t).map_or(0, |x| x.correct) as i64;
    let per_topic_delta = pre
        .per_topic
        .keys()
        .chain(post.per_topic.keys())
        .map(|t| (*t, correct(post, t) - correct(pre, t)))
        .collect();
    DeltaReport {
        pre_score: pre.score,
        post_score: post.score,
        overall_delta: post.score as i64 - pre.score as i64,
        per_topic_delta,
    }
}

/// Writes `session_id,pre_score,post_score,delta,<one column per topic>`.
pub fn write_delta_csv<W: Write>(out: W, rows: &[(String, DeltaReport)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["session_id", "pre_score", "post_score", "delta"];
    header.extend(Topic::ALL.iter().map(|t| t.as_str()));
    w.write_record(&header)?;
    for (session_id, report) in rows {
        let mut row = vec![
            session_id.clone(),
            report.pre_score.to_string(),
            report.post_score.to_string(),
            report.overall_delta.to_string(),
        ];
        row.extend(
            Topic::ALL
                .iter()
                .map(|t| report.per_topic_delta.get(t).copied().unwrap_or(0).to_string()),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
