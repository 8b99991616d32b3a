use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assessment::{delta, start_assessment, AssessmentRecord, DeltaReport, Phase, Topic};
use crate::pack::{Act, LectureBlurb, SceneKind, ScenarioPack, SimPreset, Tooltip, VoterProfile};

use super::step::{assessment_available, available_choices};
use super::{DisabledReason, GameState};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceView {
    pub choice_id: String,
    pub label: String,
    pub money_cost: u64,
    pub enabled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disabled_reason: Option<DisabledReason>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagView {
    pub tag_id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadlineView {
    pub headline_id: String,
    pub text: String,
    pub voter: String,
}

/// A question as shown to the player (no answer key).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionView {
    pub question_id: String,
    pub prompt: String,
    pub options: Vec<String>,
    pub topic: Topic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resources {
    pub money: u64,
    pub support: i64,
    pub max_support: i64,
    pub apathy_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentView {
    pub phase: Phase,
    pub questions: Vec<QuestionView>,
}

/// Everything the client needs to draw the current screen. A pure function
/// of the state and the pack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneView {
    pub scene_id: String,
    pub live_scene_id: String,
    pub review: bool,
    pub act: Act,
    pub kind: SceneKind,
    pub title: String,
    pub body: String,
    pub choices: Vec<ChoiceView>,
    pub voters: Vec<VoterProfile>,
    pub pending_tags: Vec<TagView>,
    pub pending_headlines: Vec<HeadlineView>,
    pub lectures: Vec<LectureBlurb>,
    pub sim_preset: Option<SimPreset>,
    pub resources: Resources,
    pub tooltips: Vec<Tooltip>,
    pub completed_scenes: Vec<String>,
    pub next_ordinal: u64,
    pub assessment: Option<AssessmentView>,
    pub assessment_results: BTreeMap<Phase, AssessmentRecord>,
    pub assessment_delta: Option<DeltaReport>,
}

pub fn scene_view(state: &GameState, pack: &ScenarioPack) -> SceneView {
    let scene = pack
        .scene(state.shown_scene())
        .unwrap_or_else(|| panic!("session refers to scene `{}` missing from its pack", state.shown_scene()));

    // A reviewed minigame shows all of its items; the live one shows what is left.
    let (tag_ids, headline_ids) = if state.in_review() {
        (scene.tag_ids.clone(), scene.headline_ids.clone())
    } else {
        (state.pending_tags.clone(), state.pending_headlines.clone())
    };
    let pending_tags: Vec<TagView> = tag_ids
        .iter()
        .filter_map(|id| pack.tag(id))
        .map(|t| TagView {
            tag_id: t.tag_id.clone(),
            label: t.label.clone(),
        })
        .collect();
    let pending_headlines: Vec<HeadlineView> = headline_ids
        .iter()
        .filter_map(|id| pack.headline(id))
        .map(|h| HeadlineView {
            headline_id: h.headline_id.clone(),
            text: h.text.clone(),
            voter: h.voter.clone(),
        })
        .collect();
    let lectures: Vec<LectureBlurb> = scene
        .lecture_ids
        .iter()
        .filter_map(|id| pack.lecture(id).cloned())
        .collect();
    let choices = available_choices(state, pack).unwrap_or_default();

    let mut text = format!("{}\n{}\n", scene.title, scene.body);
    for c in &choices {
        text.push_str(&c.label);
        text.push('\n');
    }
    for t in &pending_tags {
        text.push_str(&t.label);
        text.push('\n');
    }
    for h in &pending_headlines {
        text.push_str(&h.text);
        text.push('\n');
    }
    for l in &lectures {
        text.push_str(&l.body);
        text.push('\n');
    }
    let tooltips = pack.tooltips_for(&text).into_iter().cloned().collect();

    let assessment = if state.in_review() {
        None
    } else {
        [Phase::Pre, Phase::Post]
            .into_iter()
            .find(|&p| assessment_available(state, pack, p))
            .and_then(|phase| {
                let order = start_assessment(pack, phase, state.rng_seed).ok()?;
                let questions = order
                    .iter()
                    .filter_map(|id| pack.question(id))
                    .map(|q| QuestionView {
                        question_id: q.question_id.clone(),
                        prompt: q.prompt.clone(),
                        options: q.options.clone(),
                        topic: q.topic,
                    })
                    .collect();
                Some(AssessmentView { phase, questions })
            })
    };
    let assessment_delta = match (state.assessments.get(&Phase::Pre), state.assessments.get(&Phase::Post)) {
        (Some(pre), Some(post)) => delta(pre, post).ok(),
        _ => None,
    };

    SceneView {
        scene_id: scene.scene_id.clone(),
        live_scene_id: state.scene_id.clone(),
        review: state.in_review(),
        act: scene.act,
        kind: scene.kind,
        title: scene.title.clone(),
        body: scene.body.clone(),
        choices,
        voters: if scene.kind == SceneKind::TagSort {
            pack.voters.clone()
        } else {
            Vec::new()
        },
        pending_tags,
        pending_headlines,
        lectures,
        sim_preset: scene.sim_preset.as_deref().and_then(|p| pack.preset(p)).cloned(),
        resources: Resources {
            money: state.money,
            support: state.support,
            max_support: state.max_support,
            apathy_multiplier: state.apathy_multiplier,
        },
        tooltips,
        completed_scenes: state.completed_scenes.clone(),
        next_ordinal: state.next_ordinal(),
        assessment,
        assessment_results: state.assessments.clone(),
        assessment_delta,
    }
}
