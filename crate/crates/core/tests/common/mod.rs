//! Helpers shared by the integration tests and the acceptance target.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use inoculate_core::engine::{
    apply_action, available_choices, legal_actions, new_session, Action, GameState, PlayerEvent,
};
use inoculate_core::pack::{parse_pack, validate_pack, ScenarioPack};
use inoculate_core::sim::{PropagationParams, SocialGraph};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("..")
        .join("core")
        .join("tests")
        .join("fixtures")
}

#[derive(Debug, Deserialize)]
pub struct StoryboardLog {
    pub pack_id: String,
    pub seed: u64,
    pub events: Vec<PlayerEvent>,
}

pub fn storyboard() -> StoryboardLog {
    let text = std::fs::read_to_string(fixtures_dir().join("storyboard_log.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[derive(Debug, Deserialize)]
pub struct MalformedCase {
    pub code: String,
    pub path: String,
}

pub fn malformed_cases() -> BTreeMap<String, MalformedCase> {
    let dir = fixtures_dir().join("malformed");
    let text = std::fs::read_to_string(dir.join("expected.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Parses and validates a malformed fixture, returning every (code, path)
/// reported.
pub fn malformed_issues(file: &str) -> Vec<(String, String)> {
    let raw = std::fs::read(fixtures_dir().join("malformed").join(file)).unwrap();
    match parse_pack(&raw) {
        Err(e) => e
            .issues
            .iter()
            .map(|i| (i.code.as_str().to_owned(), i.path.clone()))
            .collect(),
        Ok(pack) => {
            let report = validate_pack(&pack);
            report
                .errors
                .iter()
                .chain(&report.warnings)
                .map(|i| (i.code.as_str().to_owned(), i.path.clone()))
                .collect()
        }
    }
}

const FLAGS: [&str; 3] = ["a", "b", "c"];

fn random_flags(rng: &mut ChaCha8Rng, p: f64) -> Vec<&'static str> {
    FLAGS.iter().copied().filter(|_| rng.random_bool(p)).collect()
}

fn random_multiplier(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.8) {
        1.0
    } else {
        [0.25, 0.5, 0.75, 0.9][rng.random_range(0..4)]
    }
}

/// A random playable pack: a chain of scenes where every non-terminal scene
/// has at least one forward choice, mixed with tag-sort and headline scenes,
/// random costs, flag gates and effects.
pub fn random_pack(seed: u64) -> ScenarioPack {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_scenes = rng.random_range(3..9);
    let voters = ["v1", "v2"];
    let mut scenes = Vec::new();
    let mut tags = Vec::new();
    let mut headlines = Vec::new();

    for i in 0..n_scenes {
        let id = format!("s{i}");
        if i == n_scenes - 1 {
            scenes.push(json!({"scene_id": id, "act": "three", "kind": "terminal", "body": "end"}));
            continue;
        }
        let forward = |rng: &mut ChaCha8Rng| format!("s{}", rng.random_range(i + 1..n_scenes));
        let roll = rng.random_range(0..10);
        if roll == 0 && i > 0 {
            let count = rng.random_range(1..4);
            let ids: Vec<String> = (0..count).map(|k| format!("t{i}_{k}")).collect();
            for tag_id in &ids {
                tags.push(json!({
                    "tag_id": tag_id, "label": tag_id,
                    "correct_voter": voters[rng.random_range(0..2)], "bucket": "x",
                    "explanation": "why", "support_reward": rng.random_range(-3..6)
                }));
            }
            scenes.push(json!({
                "scene_id": id, "act": "one", "kind": "tag_sort", "body": "sort",
                "tag_ids": ids, "next_scene": forward(&mut rng)
            }));
        } else if roll == 1 && i > 0 {
            let mut ids = Vec::new();
            for voter in voters.iter().take(rng.random_range(1..3)) {
                let top = rng.random_range(3..15);
                for (k, quality) in ["optimal", "suboptimal", "poor"].iter().enumerate() {
                    let hid = format!("h{i}_{voter}_{k}");
                    headlines.push(json!({
                        "headline_id": hid, "text": hid, "voter": voter,
                        "quality": quality, "support_value": top - 3 * k as i64,
                        "explanation": "because"
                    }));
                    ids.push(hid);
                }
            }
            scenes.push(json!({
                "scene_id": id, "act": "one", "kind": "headline_pick", "body": "pick",
                "headline_ids": ids, "next_scene": forward(&mut rng)
            }));
        } else {
            let n_choices = rng.random_range(1..5);
            let mut choices = Vec::new();
            for j in 0..n_choices {
                let target = if j == 0 || rng.random_bool(0.7) {
                    forward(&mut rng)
                } else {
                    format!("s{}", rng.random_range(0..n_scenes))
                };
                let mut choice = json!({
                    "choice_id": format!("c{i}_{j}"), "label": "pick me",
                    "money_cost": if rng.random_bool(0.5) { rng.random_range(0..80) } else { 0 },
                    "requires_flags": if j == 0 { vec![] } else { random_flags(&mut rng, 0.2) },
                    "forbids_flags": if j == 0 { vec![] } else { random_flags(&mut rng, 0.2) },
                    "target_scene": target,
                    "effect": {
                        "support_delta": rng.random_range(-30..31),
                        "money_delta": rng.random_range(-40..41),
                        "max_support_multiplier": random_multiplier(&mut rng),
                        "apathy_multiplier": random_multiplier(&mut rng),
                        "set_flags": random_flags(&mut rng, 0.3),
                        "donation": rng.random_bool(0.15)
                    }
                });
                if j == 0 {
                    choice["money_cost"] = json!(0);
                }
                choices.push(choice);
            }
            let mut scene = json!({
                "scene_id": id, "act": "two", "kind": "choice_hub", "body": "choose",
                "choices": choices
            });
            if rng.random_bool(0.2) {
                scene["on_enter"] = json!({
                    "support_delta": rng.random_range(-20..21),
                    "money_delta": rng.random_range(0..20),
                    "max_support_multiplier": random_multiplier(&mut rng)
                });
            }
            scenes.push(scene);
        }
    }

    let max = rng.random_range(1..120);
    let doc = json!({
        "pack_id": format!("random-{seed}"), "version": "1",
        "voters": [
            {"voter_id": "v1", "name": "One", "biography": "", "interest_buckets": ["x"]},
            {"voter_id": "v2", "name": "Two", "biography": "", "interest_buckets": ["x"]}
        ],
        "scenes": scenes, "tags": tags, "headlines": headlines,
        "assessment": [
            {"question_id": "qa", "prompt": "?", "options": ["a", "b"], "correct_index": 0, "topic": "techniques"},
            {"question_id": "qb", "prompt": "?", "options": ["a", "b", "c"], "correct_index": 2, "topic": "regulation"}
        ],
        "start_scene": "s0",
        "initial_money": rng.random_range(0..150),
        "initial_support": rng.random_range(0..=max),
        "initial_max_support": max
    });
    let pack = parse_pack(doc.to_string().as_bytes()).expect("generated pack parses");
    let report = validate_pack(&pack);
    assert!(report.is_playable(), "generated pack invalid: {:#?}", report.errors);
    pack
}

/// Replaces the empty answer sheet that `legal_actions` lists with random answers.
fn with_random_answers(action: Action, pack: &ScenarioPack, rng: &mut ChaCha8Rng) -> Action {
    match action {
        Action::AssessmentSubmit { phase, .. } => {
            let mut answers = BTreeMap::new();
            for q in &pack.assessment {
                if rng.random_bool(0.8) {
                    answers.insert(q.question_id.clone(), rng.random_range(0..q.options.len() + 1));
                }
            }
            Action::AssessmentSubmit { phase, answers }
        }
        other => other,
    }
}

/// Plays up to `steps` uniformly random legal actions.
pub fn random_legal_session(pack: &ScenarioPack, seed: u64, steps: usize) -> GameState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut state = new_session(pack, seed).unwrap();
    for t in 0..steps {
        let options = legal_actions(&state, pack);
        let Some(action) = options.choose(&mut rng).cloned() else {
            break;
        };
        let action = with_random_answers(action, pack, &mut rng);
        state = apply_action(&state, pack, action, 1_000 + t as u64).unwrap().0;
    }
    state
}

/// Any action at all, legal or not, drawn from ids in the pack.
fn random_action(state: &GameState, pack: &ScenarioPack, rng: &mut ChaCha8Rng) -> Action {
    let all_choices: Vec<&str> = pack
        .scenes
        .iter()
        .flat_map(|s| s.choices.iter().map(|c| c.choice_id.as_str()))
        .collect();
    let pick = |rng: &mut ChaCha8Rng, ids: &[&str]| {
        ids.choose(rng).map_or("none".to_owned(), |s| s.to_string())
    };
    match rng.random_range(0..8) {
        0..=2 => {
            // Bias towards the current scene's choices, enabled or not.
            let here: Vec<&str> = pack
                .scene(&state.scene_id)
                .map(|s| s.choices.iter().map(|c| c.choice_id.as_str()).collect())
                .unwrap_or_default();
            let ids = if here.is_empty() || rng.random_bool(0.3) { &all_choices } else { &here };
            Action::Choice { choice_id: pick(rng, ids) }
        }
        3 => {
            let tags: Vec<&str> = pack.tags.iter().map(|t| t.tag_id.as_str()).collect();
            Action::TagPlacement {
                tag_id: pick(rng, &tags),
                voter_id: ["v1", "v2", "nobody"][rng.random_range(0..3)].to_owned(),
            }
        }
        4 => {
            let hs: Vec<&str> = pack.headlines.iter().map(|h| h.headline_id.as_str()).collect();
            Action::HeadlinePick { headline_id: pick(rng, &hs) }
        }
        5 => {
            let scenes: Vec<&str> = pack.scenes.iter().map(|s| s.scene_id.as_str()).collect();
            let target = rng.random_bool(0.7).then(|| pick(rng, &scenes));
            Action::BackNav { scene_id: target }
        }
        _ => {
            let options = legal_actions(state, pack);
            options
                .choose(rng)
                .cloned()
                .unwrap_or(Action::BackNav { scene_id: None })
        }
    }
}

#[derive(Debug, Default)]
pub struct FuzzStats {
    pub attempted: usize,
    pub applied: usize,
    pub rejected: usize,
}

/// Fires `actions` random actions at sessions of `pack` and checks the
/// resource invariants after every accepted one. Returns a description of
/// the first violation.
pub fn fuzz_pack(pack: &ScenarioPack, seed: u64, actions: usize) -> Result<FuzzStats, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = new_session(pack, seed).unwrap();
    let mut stats = FuzzStats::default();
    check_state(&state, None)?;
    for _ in 0..actions {
        let action = random_action(&state, pack, &mut rng);
        let action = with_random_answers(action, pack, &mut rng);
        stats.attempted += 1;

        let disabled = match &action {
            Action::Choice { choice_id } => available_choices(&state, pack)
                .ok()
                .and_then(|cs| cs.into_iter().find(|c| &c.choice_id == choice_id))
                .filter(|c| !c.enabled),
            _ => None,
        };
        match apply_action(&state, pack, action.clone(), 0) {
            Ok((next, _)) => {
                if let Some(c) = disabled {
                    return Err(format!("disabled choice {} ({:?}) was applied", c.choice_id, c.disabled_reason));
                }
                check_state(&next, Some(&state))?;
                stats.applied += 1;
                state = next;
            }
            Err(_) => stats.rejected += 1,
        }
        let at_end = pack
            .scene(&state.scene_id)
            .is_some_and(|s| s.choices.is_empty() && !s.kind.is_minigame());
        if (at_end && rng.random_bool(0.1)) || rng.random_bool(0.01) {
            state = new_session(pack, rng.random()).unwrap();
        }
    }
    Ok(stats)
}

pub fn check_state(state: &GameState, prev: Option<&GameState>) -> Result<(), String> {
    if state.max_support < 1 {
        return Err(format!("max_support {} < 1", state.max_support));
    }
    if state.support < 0 || state.support > state.max_support {
        return Err(format!("support {} outside [0, {}]", state.support, state.max_support));
    }
    if !(state.apathy_multiplier > 0.0 && state.apathy_multiplier <= 1.0) {
        return Err(format!("apathy {} outside (0, 1]", state.apathy_multiplier));
    }
    if let Some(prev) = prev {
        if state.apathy_multiplier > prev.apathy_multiplier {
            return Err("apathy multiplier increased".into());
        }
        if !state.completed_scenes.starts_with(&prev.completed_scenes) {
            return Err("completed_scenes shrank".into());
        }
        if state.event_log.len() != prev.event_log.len() + 1 {
            return Err("event log did not grow by one".into());
        }
    }
    Ok(())
}

/// The fixed family of small graphs used by the oracle checks.
pub fn oracle_family() -> Vec<(&'static str, SocialGraph)> {
    vec![
        ("path", SocialGraph::uniform(4, 0.0, vec![(0, 1), (1, 2), (2, 3)]).unwrap()),
        ("star", SocialGraph::uniform(5, 0.0, vec![(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap()),
        (
            "triangle_tail",
            SocialGraph::uniform(5, 0.0, vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]).unwrap(),
        ),
    ]
}

pub fn uniform_params(base_share: f64, moderation_rate: f64, ticks: u32) -> PropagationParams {
    PropagationParams {
        base_share,
        affinity_weight: 0.0,
        bot_share: base_share,
        moderation_rate,
        ticks,
        seeds: BTreeSet::from([0]),
    }
}
