use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{HeadlineQuality, Issue, IssueCode, ScenarioPack, SceneKind};

/// Result of static validation. A pack is playable iff `errors` is empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_playable(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has_error(&self, code: IssueCode) -> bool {
        self.errors.iter().any(|i| i.code == code)
    }

    pub fn has_warning(&self, code: IssueCode) -> bool {
        self.warnings.iter().any(|i| i.code == code)
    }
}

/// Checks cross references, reachability, minigame shape and a conservative
/// affordability heuristic. Pure: the same pack always yields the same report.
pub fn validate_pack(pack: &ScenarioPack) -> ValidationReport {
    let mut v = Validator {
        pack,
        report: ValidationReport::default(),
    };
    v.resources();
    v.scenes();
    v.tags_and_headlines();
    v.presets();
    v.reachability();
    v.report
}

struct Validator<'a> {
    pack: &'a ScenarioPack,
    report: ValidationReport,
}

impl Validator<'_> {
    fn error(&mut self, path: String, code: IssueCode, message: String) {
        self.report.errors.push(Issue::new(path, code, message));
    }

    fn warn(&mut self, path: String, code: IssueCode, message: String) {
        self.report.warnings.push(Issue::new(path, code, message));
    }

    fn resources(&mut self) {
        let pack = self.pack;
        let max = i64::try_from(pack.initial_max_support).unwrap_or(i64::MAX);
        if pack.initial_support < 0 || pack.initial_support > max {
            self.error(
                "initial_support".into(),
                IssueCode::SupportOutOfRange,
                format!(
                    "initial_support {} must lie in [0, {}]",
                    pack.initial_support, pack.initial_max_support
                ),
            );
        }
        if pack.scene(&pack.start_scene).is_none() {
            self.error(
                "start_scene".into(),
                IssueCode::MissingStart,
                format!("start scene `{}` is not declared", pack.start_scene),
            );
        }
    }

    fn scenes(&mut self) {
        let pack = self.pack;
        for (i, scene) in pack.scenes.iter().enumerate() {
            for (j, choice) in scene.choices.iter().enumerate() {
                if pack.scene(&choice.target_scene).is_none() {
                    self.error(
                        format!("scenes[{i}].choices[{j}].target_scene"),
                        IssueCode::DanglingTarget,
                        format!("choice targets unknown scene `{}`", choice.target_scene),
                    );
                }
            }
            if let Some(next) = &scene.next_scene {
                if pack.scene(next).is_none() {
                    self.error(
                        format!("scenes[{i}].next_scene"),
                        IssueCode::DanglingTarget,
                        format!("next_scene targets unknown scene `{next}`"),
                    );
                }
            }

            match scene.kind {
                SceneKind::Terminal => {
                    if !scene.choices.is_empty() {
                        self.error(
                            format!("scenes[{i}].choices"),
                            IssueCode::TerminalHasChoices,
                            "terminal scenes must not offer choices".into(),
                        );
                    }
                }
                SceneKind::TagSort | SceneKind::HeadlinePick => {
                    if scene.next_scene.is_none() {
                        self.error(
                            format!("scenes[{i}].next_scene"),
                            IssueCode::MissingNextScene,
                            format!("{} scenes need a next_scene", scene.kind),
                        );
                    }
                    if !scene.choices.is_empty() {
                        self.error(
                            format!("scenes[{i}].choices"),
                            IssueCode::InvalidValue,
                            "minigame scenes do not take choices".into(),
                        );
                    }
                    if scene.kind == SceneKind::TagSort {
                        self.tag_sort(i);
                    } else {
                        self.headline_pick(i);
                    }
                }
                _ => {
                    if scene.choices.is_empty() {
                        self.error(
                            format!("scenes[{i}].choices"),
                            IssueCode::DeadEnd,
                            format!("{} scene `{}` has no way forward", scene.kind, scene.scene_id),
                        );
                    }
                }
            }

            for (k, lecture_id) in scene.lecture_ids.iter().enumerate() {
                if pack.lecture(lecture_id).is_none() {
                    self.error(
                        format!("scenes[{i}].lecture_ids[{k}]"),
                        IssueCode::UnknownLecture,
                        format!("unknown lecture `{lecture_id}`"),
                    );
                }
            }
            if scene.kind == SceneKind::Sandbox {
                match &scene.sim_preset {
                    Some(name) if pack.preset(name).is_some() => {}
                    Some(name) => self.error(
                        format!("scenes[{i}].sim_preset"),
                        IssueCode::UnknownPreset,
                        format!("unknown sim preset `{name}`"),
                    ),
                    None => self.error(
                        format!("scenes[{i}].sim_preset"),
                        IssueCode::UnknownPreset,
                        "sandbox scenes must name a sim preset".into(),
                    ),
                }
            }
        }
    }

    fn tag_sort(&mut self, i: usize) {
        let scene = &self.pack.scenes[i];
        if scene.tag_ids.is_empty() {
            self.error(
                format!("scenes[{i}].tag_ids"),
                IssueCode::EmptyTagSort,
                "tag_sort scenes need at least one tag".into(),
            );
        }
        for (k, tag_id) in scene.tag_ids.iter().enumerate() {
            if self.pack.tag(tag_id).is_none() {
                self.error(
                    format!("scenes[{i}].tag_ids[{k}]"),
                    IssueCode::UnknownTag,
                    format!("unknown tag `{tag_id}`"),
                );
            }
        }
    }

    fn headline_pick(&mut self, i: usize) {
        let scene = &self.pack.scenes[i];
        let path = format!("scenes[{i}].headline_ids");
        if scene.headline_ids.len() < 2 {
            self.error(
                path.clone(),
                IssueCode::HeadlineCount,
                "headline_pick scenes need at least two headlines".into(),
            );
        }

        // Decision points: the headlines of this scene grouped by voter.
        let mut groups: Vec<(&str, Vec<_>)> = Vec::new();
        for (k, headline_id) in scene.headline_ids.iter().enumerate() {
            let Some(headline) = self.pack.headline(headline_id) else {
                self.error(
                    format!("{path}[{k}]"),
                    IssueCode::UnknownHeadline,
                    format!("unknown headline `{headline_id}`"),
                );
                continue;
            };
            match groups.iter_mut().find(|(voter, _)| *voter == headline.voter) {
                Some((_, members)) => members.push(headline),
                None => groups.push((headline.voter.as_str(), vec![headline])),
            }
        }

        for (voter, members) in groups {
            if members.len() < 2 {
                self.error(
                    path.clone(),
                    IssueCode::HeadlineCount,
                    format!("decision point for voter `{voter}` needs at least two headlines"),
                );
            }
            let optimal = members
                .iter()
                .filter(|h| h.quality == HeadlineQuality::Optimal)
                .count();
            if optimal != 1 {
                self.error(
                    path.clone(),
                    IssueCode::OptimalCount,
                    format!("decision point for voter `{voter}` has {optimal} optimal headlines, expected 1"),
                );
            }
            let values = |q: HeadlineQuality| {
                members
                    .iter()
                    .filter(move |h| h.quality == q)
                    .map(|h| h.support_value)
            };
            let ordered = |upper: HeadlineQuality, lower: HeadlineQuality| {
                values(upper).all(|a| values(lower).all(|b| a > b))
            };
            if !(ordered(HeadlineQuality::Optimal, HeadlineQuality::Suboptimal)
                && ordered(HeadlineQuality::Optimal, HeadlineQuality::Poor)
                && ordered(HeadlineQuality::Suboptimal, HeadlineQuality::Poor))
            {
                self.error(
                    path.clone(),
                    IssueCode::HeadlineOrder,
                    format!(
                        "decision point for voter `{voter}` must value optimal > suboptimal > poor"
                    ),
                );
            }
        }
    }

    fn tags_and_headlines(&mut self) {
        let pack = self.pack;
        for (i, tag) in pack.tags.iter().enumerate() {
            match pack.voter(&tag.correct_voter) {
                None => self.error(
                    format!("tags[{i}].correct_voter"),
                    IssueCode::UnknownVoter,
                    format!("unknown voter `{}`", tag.correct_voter),
                ),
                Some(voter) if !voter.interest_buckets.contains(&tag.bucket) => self.error(
                    format!("tags[{i}].bucket"),
                    IssueCode::UnknownBucket,
                    format!(
                        "voter `{}` has no interest bucket `{}`",
                        voter.voter_id, tag.bucket
                    ),
                ),
                Some(_) => {}
            }
        }
        for (i, headline) in pack.headlines.iter().enumerate() {
            if pack.voter(&headline.voter).is_none() {
                self.error(
                    format!("headlines[{i}].voter"),
                    IssueCode::UnknownVoter,
                    format!("unknown voter `{}`", headline.voter),
                );
            }
        }
    }

    fn presets(&mut self) {
        for (i, preset) in self.pack.sim_presets.iter().enumerate() {
            let problem = preset
                .graph
                .validate()
                .map_err(|e| ("graph", e))
                .and_then(|()| {
                    preset
                        .propagation
                        .validate(preset.graph.n)
                        .map_err(|e| ("propagation", e))
                })
                .and_then(|()| match &preset.profit {
                    Some(profit) => profit.validate().map_err(|e| ("profit", e)),
                    None => Ok(()),
                })
                .err();
            if let Some((section, err)) = problem {
                self.error(
                    format!("sim_presets[{i}].{section}.{}", err.field()),
                    IssueCode::InvalidPreset,
                    err.to_string(),
                );
            }
            if preset.runs == 0 {
                self.error(
                    format!("sim_presets[{i}].runs"),
                    IssueCode::InvalidPreset,
                    "runs must be at least 1".into(),
                );
            }
        }
    }

    fn reachability(&mut self) {
        let pack = self.pack;
        if pack.scene(&pack.start_scene).is_none() {
            return;
        }
        let index: HashMap<&str, usize> = pack
            .scenes
            .iter()
            .enumerate()
            .map(|(i, s)| (s.scene_id.as_str(), i))
            .collect();
        let successors: Vec<Vec<usize>> = pack
            .scenes
            .iter()
            .map(|s| s.successors().filter_map(|id| index.get(id).copied()).collect())
            .collect();

        let reachable = bfs(&successors, index[pack.start_scene.as_str()]);

        for (i, scene) in pack.scenes.iter().enumerate() {
            if !reachable.contains(&i) {
                self.warn(
                    format!("scenes[{i}]"),
                    IssueCode::UnreachableScene,
                    format!("scene `{}` cannot be reached from the start", scene.scene_id),
                );
            }
        }
        if !reachable
            .iter()
            .any(|&i| pack.scenes[i].kind == SceneKind::Terminal)
        {
            self.error(
                "start_scene".into(),
                IssueCode::NoReachableTerminal,
                "no terminal scene is reachable from the start scene".into(),
            );
        }

        self.affordability(&successors, &reachable);
    }

    /// Warns about decision points where every choice costs more than the
    /// starting money and no money-raising effect lies on any path leading
    /// there. Path-insensitive, so it can only produce false warnings.
    fn affordability(&mut self, successors: &[Vec<usize>], reachable: &HashSet<usize>) {
        let pack = self.pack;
        let index: HashMap<&str, usize> = pack
            .scenes
            .iter()
            .enumerate()
            .map(|(i, s)| (s.scene_id.as_str(), i))
            .collect();
        let mut predecessors = vec![Vec::new(); successors.len()];
        for (from, tos) in successors.iter().enumerate() {
            for &to in tos {
                predecessors[to].push(from);
            }
        }
        let raises = |e: &super::Effect| e.money_delta > 0 || e.donation;

        for (i, scene) in pack.scenes.iter().enumerate() {
            if scene.choices.is_empty() || !reachable.contains(&i) {
                continue;
            }
            if scene.choices.iter().any(|c| c.money_cost <= pack.initial_money) {
                continue;
            }
            // Scenes from which this one can be reached (including itself).
            let leads_here = bfs(&predecessors, i);
            let funded = pack.scenes.iter().enumerate().any(|(x, other)| {
                reachable.contains(&x)
                    && ((leads_here.contains(&x) && raises(&other.on_enter))
                        || other.choices.iter().any(|c| {
                            raises(&c.effect)
                                && index
                                    .get(c.target_scene.as_str())
                                    .is_some_and(|t| leads_here.contains(t))
                        }))
            });
            if !funded {
                self.warn(
                    format!("scenes[{i}].choices"),
                    IssueCode::UnaffordableDecision,
                    format!(
                        "every choice in `{}` costs more than the starting money and nothing earlier raises money",
                        scene.scene_id
                    ),
                );
            }
        }
    }
}

fn bfs(adjacency: &[Vec<usize>], start: usize) -> HashSet<usize> {
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(at) = queue.pop_front() {
        for &next in &adjacency[at] {
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    seen
}
