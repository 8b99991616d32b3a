use crate::assessment::{grade, start_assessment, Phase};
use crate::pack::{Choice, Effect, HeadlineQuality, Scene, SceneKind, ScenarioPack};

use super::view::ChoiceView;
use super::{
    new_session_with_id, default_session_id, Action, DisabledReason, EngineError, FeedbackEvent,
    GameState, PlayerEvent, Verdict,
};

fn scene_of<'p>(pack: &'p ScenarioPack, scene_id: &str) -> &'p Scene {
    pack.scene(scene_id)
        .unwrap_or_else(|| panic!("session refers to scene `{scene_id}` missing from its pack"))
}

fn require_kind(scene: &Scene, expected: SceneKind) -> Result<(), EngineError> {
    if scene.kind == expected {
        Ok(())
    } else {
        Err(EngineError::WrongSceneKind {
            expected,
            actual: scene.kind,
        })
    }
}

pub(crate) fn disabled_reason(state: &GameState, choice: &Choice) -> Option<DisabledReason> {
    if choice.money_cost > state.money {
        Some(DisabledReason::InsufficientFunds)
    } else if !choice.requires_flags.is_subset(&state.flags) {
        Some(DisabledReason::FlagMissing)
    } else if !choice.forbids_flags.is_disjoint(&state.flags) {
        Some(DisabledReason::FlagForbidden)
    } else {
        None
    }
}

/// Choices of the scene on screen with their enabled status. In review mode
/// every choice is reported disabled.
pub fn available_choices(state: &GameState, pack: &ScenarioPack) -> Result<Vec<ChoiceView>, EngineError> {
    let scene = scene_of(pack, state.shown_scene());
    if scene.choices.is_empty() {
        return Err(EngineError::NoChoices(scene.scene_id.clone()));
    }
    Ok(scene
        .choices
        .iter()
        .map(|c| {
            let reason = if state.in_review() {
                Some(DisabledReason::ReviewOnly)
            } else {
                disabled_reason(state, c)
            };
            ChoiceView {
                choice_id: c.choice_id.clone(),
                label: c.label.clone(),
                money_cost: c.money_cost,
                enabled: reason.is_none(),
                disabled_reason: reason,
            }
        })
        .collect())
}

/// Applies an effect (and an optional up-front cost). Returns the support and
/// money changes actually applied. Nothing is mutated on error.
fn apply_effect(state: &mut GameState, effect: &Effect, cost: u64) -> Result<(i64, i64), EngineError> {
    let donation = if effect.donation {
        state.support.max(0) / 2
    } else {
        0
    };
    let money = state.money as i128 - cost as i128 + effect.money_delta as i128 + donation as i128;
    if money < 0 {
        return Err(EngineError::WouldBankrupt(money));
    }
    let money = u64::try_from(money).map_err(|_| EngineError::WouldBankrupt(money))?;

    let mult = effect.max_support_multiplier.get();
    let max_support = if mult == 1.0 {
        state.max_support
    } else {
        ((state.max_support as f64 * mult).floor() as i64).max(1)
    };
    let scaled = (effect.support_delta as f64 * state.apathy_multiplier).round() as i64;
    let support = state.support.saturating_add(scaled).clamp(0, max_support);

    let applied = (support - state.support, money as i64 - state.money as i64);
    state.money = money;
    state.max_support = max_support;
    state.support = support;
    state.apathy_multiplier *= effect.apathy_multiplier.get();
    state.flags.extend(effect.set_flags.iter().cloned());
    Ok(applied)
}

fn mark_completed(state: &mut GameState, scene_id: &str) {
    if !state.completed_scenes.iter().any(|s| s == scene_id) {
        state.completed_scenes.push(scene_id.to_owned());
    }
}

/// Moves to `scene_id`, applies its entry effect and loads minigame items.
/// A minigame with nothing to do is completed on the spot.
pub(crate) fn enter_scene(
    state: &mut GameState,
    pack: &ScenarioPack,
    scene_id: &str,
) -> Result<(i64, i64), EngineError> {
    let mut total = (0, 0);
    let mut next = scene_id.to_owned();
    // Bounded: each hop completes a distinct minigame scene.
    for _ in 0..=pack.scenes.len() {
        let scene = scene_of(pack, &next);
        state.scene_id = scene.scene_id.clone();
        let (s, m) = apply_effect(state, &scene.on_enter, 0)?;
        total.0 += s;
        total.1 += m;
        state.pending_tags.clear();
        state.pending_headlines.clear();
        match scene.kind {
            SceneKind::TagSort => state.pending_tags = scene.tag_ids.clone(),
            SceneKind::HeadlinePick => state.pending_headlines = scene.headline_ids.clone(),
            _ => return Ok(total),
        }
        if !state.pending_tags.is_empty() || !state.pending_headlines.is_empty() {
            return Ok(total);
        }
        mark_completed(state, &scene.scene_id);
        match &scene.next_scene {
            Some(n) => next = n.clone(),
            None => return Ok(total),
        }
    }
    Ok(total)
}

fn finish_minigame_if_done(state: &mut GameState, pack: &ScenarioPack) -> Result<(i64, i64), EngineError> {
    if !state.pending_tags.is_empty() || !state.pending_headlines.is_empty() {
        return Ok((0, 0));
    }
    let scene = scene_of(pack, &state.scene_id);
    mark_completed(state, &scene.scene_id);
    match &scene.next_scene {
        Some(next) => enter_scene(state, pack, next),
        None => Ok((0, 0)),
    }
}

fn feedback(state: &GameState, verdict: Verdict, explanation: String, applied: (i64, i64)) -> FeedbackEvent {
    FeedbackEvent {
        verdict,
        explanation,
        support_delta_applied: applied.0,
        money_delta_applied: applied.1,
        max_support_after: state.max_support,
    }
}

fn do_choice(state: &mut GameState, pack: &ScenarioPack, choice_id: &str) -> Result<FeedbackEvent, EngineError> {
    let scene = scene_of(pack, &state.scene_id);
    if scene.choices.is_empty() {
        return Err(EngineError::NoChoices(scene.scene_id.clone()));
    }
    let choice = scene
        .choice(choice_id)
        .ok_or_else(|| EngineError::UnknownChoice(choice_id.to_owned()))?;
    if let Some(reason) = disabled_reason(state, choice) {
        return Err(EngineError::DisabledChoice {
            choice_id: choice_id.to_owned(),
            reason,
        });
    }
    let (s1, m1) = apply_effect(state, &choice.effect, choice.money_cost)?;
    mark_completed(state, &scene.scene_id);
    let (s2, m2) = enter_scene(state, pack, &choice.target_scene)?;
    Ok(feedback(state, Verdict::Info, choice.feedback.clone(), (s1 + s2, m1 + m2)))
}

fn do_tag(state: &mut GameState, pack: &ScenarioPack, tag_id: &str, voter_id: &str) -> Result<FeedbackEvent, EngineError> {
    require_kind(scene_of(pack, &state.scene_id), SceneKind::TagSort)?;
    let Some(pos) = state.pending_tags.iter().position(|t| t == tag_id) else {
        return Err(EngineError::TagNotPending(tag_id.to_owned()));
    };
    if pack.voter(voter_id).is_none() {
        return Err(EngineError::UnknownVoter(voter_id.to_owned()));
    }
    let tag = pack
        .tag(tag_id)
        .unwrap_or_else(|| panic!("pending tag `{tag_id}` missing from pack"));
    if tag.correct_voter != voter_id {
        return Ok(feedback(state, Verdict::Incorrect, tag.explanation.clone(), (0, 0)));
    }
    let reward = Effect {
        support_delta: tag.support_reward,
        ..Effect::default()
    };
    let (s1, m1) = apply_effect(state, &reward, 0)?;
    state.pending_tags.remove(pos);
    let (s2, m2) = finish_minigame_if_done(state, pack)?;
    Ok(feedback(state, Verdict::Correct, tag.explanation.clone(), (s1 + s2, m1 + m2)))
}

fn do_headline(state: &mut GameState, pack: &ScenarioPack, headline_id: &str) -> Result<FeedbackEvent, EngineError> {
    require_kind(scene_of(pack, &state.scene_id), SceneKind::HeadlinePick)?;
    if !state.pending_headlines.iter().any(|h| h == headline_id) {
        return Err(EngineError::UnknownHeadline(headline_id.to_owned()));
    }
    let headline = pack
        .headline(headline_id)
        .unwrap_or_else(|| panic!("pending headline `{headline_id}` missing from pack"));
    let value = Effect {
        support_delta: headline.support_value,
        ..Effect::default()
    };
    let (s1, m1) = apply_effect(state, &value, 0)?;
    // The pick consumes the whole decision point (all headlines for this voter).
    state
        .pending_headlines
        .retain(|h| pack.headline(h).is_none_or(|other| other.voter != headline.voter));
    let (s2, m2) = finish_minigame_if_done(state, pack)?;
    let verdict = match headline.quality {
        HeadlineQuality::Optimal => Verdict::Correct,
        HeadlineQuality::Suboptimal | HeadlineQuality::Poor => Verdict::Suboptimal,
    };
    Ok(feedback(state, verdict, headline.explanation.clone(), (s1 + s2, m1 + m2)))
}

fn do_back_nav(state: &mut GameState, pack: &ScenarioPack, target: Option<&str>) -> Result<FeedbackEvent, EngineError> {
    match target {
        Some(scene_id) => {
            if !state.completed_scenes.iter().any(|s| s == scene_id) {
                return Err(EngineError::SceneNotCompleted(scene_id.to_owned()));
            }
            state.review_scene = Some(scene_id.to_owned());
            let title = &scene_of(pack, scene_id).title;
            Ok(feedback(state, Verdict::Info, format!("Reviewing {title}. Choices are disabled."), (0, 0)))
        }
        None => {
            if state.review_scene.take().is_none() {
                return Err(EngineError::NotInReview);
            }
            Ok(feedback(state, Verdict::Info, String::new(), (0, 0)))
        }
    }
}

fn do_sandbox(state: &mut GameState, pack: &ScenarioPack, preset: &str) -> Result<FeedbackEvent, EngineError> {
    require_kind(scene_of(pack, &state.scene_id), SceneKind::Sandbox)?;
    let preset = pack
        .preset(preset)
        .ok_or_else(|| EngineError::UnknownPreset(preset.to_owned()))?;
    Ok(feedback(state, Verdict::Info, preset.description.clone(), (0, 0)))
}

/// Pre-test: before any scene is completed. Post-test: at an assessment or
/// terminal scene. Each phase can be submitted once.
pub(crate) fn assessment_available(state: &GameState, pack: &ScenarioPack, phase: Phase) -> bool {
    if pack.assessment.is_empty() || state.assessments.contains_key(&phase) {
        return false;
    }
    match phase {
        Phase::Pre => state.completed_scenes.is_empty(),
        Phase::Post => matches!(
            scene_of(pack, &state.scene_id).kind,
            SceneKind::Assessment | SceneKind::Terminal
        ),
    }
}

fn do_assessment(
    state: &mut GameState,
    pack: &ScenarioPack,
    phase: Phase,
    answers: &std::collections::BTreeMap<String, usize>,
) -> Result<FeedbackEvent, EngineError> {
    if state.assessments.contains_key(&phase) {
        return Err(EngineError::AssessmentAlreadySubmitted(phase));
    }
    if !assessment_available(state, pack, phase) {
        return Err(EngineError::AssessmentUnavailable(phase));
    }
    let order = start_assessment(pack, phase, state.rng_seed)?;
    let mut record = grade(pack, phase, answers)?;
    record.question_order = order;
    let text = format!("{} of {} correct", record.score, pack.assessment.len());
    state.assessments.insert(phase, record);
    Ok(feedback(state, Verdict::Info, text, (0, 0)))
}

/// Applies one player action. On success returns the new state (with the
/// action appended to its log) and the feedback to show; on error the input
/// state is untouched.
pub fn apply_action(
    state: &GameState,
    pack: &ScenarioPack,
    action: Action,
    timestamp_ms: u64,
) -> Result<(GameState, FeedbackEvent), EngineError> {
    let mut next = state.clone();
    let fb = match &action {
        Action::BackNav { scene_id } => do_back_nav(&mut next, pack, scene_id.as_deref())?,
        _ if state.in_review() => return Err(EngineError::ReviewOnly),
        Action::Choice { choice_id } => do_choice(&mut next, pack, choice_id)?,
        Action::TagPlacement { tag_id, voter_id } => do_tag(&mut next, pack, tag_id, voter_id)?,
        Action::HeadlinePick { headline_id } => do_headline(&mut next, pack, headline_id)?,
        Action::SandboxRun { preset } => do_sandbox(&mut next, pack, preset)?,
        Action::AssessmentSubmit { phase, answers } => do_assessment(&mut next, pack, *phase, answers)?,
    };
    next.event_log.push(PlayerEvent {
        ordinal: state.next_ordinal(),
        action,
        timestamp_ms,
    });
    Ok((next, fb))
}

pub fn apply_choice(
    state: &GameState,
    pack: &ScenarioPack,
    choice_id: &str,
) -> Result<(GameState, FeedbackEvent), EngineError> {
    apply_action(state, pack, Action::Choice { choice_id: choice_id.to_owned() }, 0)
}

pub fn place_tag(
    state: &GameState,
    pack: &ScenarioPack,
    tag_id: &str,
    voter_id: &str,
) -> Result<(GameState, FeedbackEvent), EngineError> {
    let action = Action::TagPlacement {
        tag_id: tag_id.to_owned(),
        voter_id: voter_id.to_owned(),
    };
    apply_action(state, pack, action, 0)
}

pub fn pick_headline(
    state: &GameState,
    pack: &ScenarioPack,
    headline_id: &str,
) -> Result<(GameState, FeedbackEvent), EngineError> {
    let action = Action::HeadlinePick {
        headline_id: headline_id.to_owned(),
    };
    apply_action(state, pack, action, 0)
}

pub fn go_back(state: &GameState, pack: &ScenarioPack, scene_id: &str) -> Result<GameState, EngineError> {
    let action = Action::BackNav {
        scene_id: Some(scene_id.to_owned()),
    };
    apply_action(state, pack, action, 0).map(|(s, _)| s)
}

pub fn resume(state: &GameState, pack: &ScenarioPack) -> Result<GameState, EngineError> {
    apply_action(state, pack, Action::BackNav { scene_id: None }, 0).map(|(s, _)| s)
}

pub fn replay(pack: &ScenarioPack, seed: u64, events: &[PlayerEvent]) -> Result<GameState, EngineError> {
    replay_session(pack, seed, default_session_id(seed), events)
}

/// Rebuilds a session from its log. The first event that the engine rejects
/// (or whose ordinal is out of sequence) is reported as `ILLEGAL_EVENT`.
pub fn replay_session(
    pack: &ScenarioPack,
    seed: u64,
    session_id: String,
    events: &[PlayerEvent],
) -> Result<GameState, EngineError> {
    let mut state = new_session_with_id(pack, seed, session_id)?;
    for (i, event) in events.iter().enumerate() {
        let expected = i as u64;
        if event.ordinal != expected {
            return Err(EngineError::IllegalEvent {
                ordinal: event.ordinal,
                cause: Box::new(EngineError::OrdinalMismatch {
                    expected,
                    found: event.ordinal,
                }),
            });
        }
        state = apply_action(&state, pack, event.action.clone(), event.timestamp_ms)
            .map_err(|cause| EngineError::IllegalEvent {
                ordinal: expected,
                cause: Box::new(cause),
            })?
            .0;
    }
    Ok(state)
}

/// Every action the engine would accept right now. Assessment submissions
/// are listed with empty answers.
pub fn legal_actions(state: &GameState, pack: &ScenarioPack) -> Vec<Action> {
    let mut candidates = Vec::new();
    if state.in_review() {
        candidates.push(Action::BackNav { scene_id: None });
    }
    for scene_id in &state.completed_scenes {
        candidates.push(Action::BackNav {
            scene_id: Some(scene_id.clone()),
        });
    }
    if !state.in_review() {
        let scene = scene_of(pack, &state.scene_id);
        for c in &scene.choices {
            candidates.push(Action::Choice {
                choice_id: c.choice_id.clone(),
            });
        }
        for tag_id in &state.pending_tags {
            for voter in &pack.voters {
                candidates.push(Action::TagPlacement {
                    tag_id: tag_id.clone(),
                    voter_id: voter.voter_id.clone(),
                });
            }
        }
        for headline_id in &state.pending_headlines {
            candidates.push(Action::HeadlinePick {
                headline_id: headline_id.clone(),
            });
        }
        if let Some(preset) = &scene.sim_preset {
            candidates.push(Action::SandboxRun { preset: preset.clone() });
        }
        for phase in [Phase::Pre, Phase::Post] {
            candidates.push(Action::AssessmentSubmit {
                phase,
                answers: Default::default(),
            });
        }
    }
    candidates
        .into_iter()
        .filter(|a| apply_action(state, pack, a.clone(), 0).is_ok())
        .collect()
}
