use std::collections::HashMap;
use std::fmt;

use serde_path_to_error::{Path, Segment};

use super::{Issue, IssueCode, ScenarioPack, CODE_SEPARATOR};

/// Parsing failed; every issue carries the document path it was found at.
#[derive(Debug, Clone, PartialEq)]
pub struct PackParseError {
    pub issues: Vec<Issue>,
}

impl fmt::Display for PackParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pack failed to parse")?;
        for issue in &self.issues {
            write!(f, "\n  {issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for PackParseError {}

impl PackParseError {
    pub fn codes(&self) -> Vec<IssueCode> {
        self.issues.iter().map(|i| i.code).collect()
    }
}

/// Parses a JSON pack document in strict mode (unknown keys are errors) and
/// checks the per-item invariants that do not need cross references.
pub fn parse_pack(raw: &[u8]) -> Result<ScenarioPack, PackParseError> {
    let value: serde_json::Value = serde_json::from_slice(raw).map_err(|e| PackParseError {
        issues: vec![Issue::new("$", IssueCode::Malformed, e.to_string())],
    })?;

    let pack: ScenarioPack = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().clone();
        let issue = classify(&path, &e.into_inner().to_string());
        PackParseError {
            issues: vec![issue],
        }
    })?;

    let issues = structural_issues(&pack);
    if issues.is_empty() {
        Ok(pack)
    } else {
        Err(PackParseError { issues })
    }
}

/// Serializes a pack back into the external format.
pub fn serialize_pack(pack: &ScenarioPack) -> String {
    serde_json::to_string_pretty(pack).expect("pack serialization is infallible")
}

fn render_path(path: &Path) -> String {
    let mut out = String::new();
    for segment in path.iter() {
        match segment {
            Segment::Seq { index } => out.push_str(&format!("[{index}]")),
            Segment::Map { key } | Segment::Enum { variant: key } => {
                if !out.is_empty() {
                    out.push('.');
                }
                out.push_str(key);
            }
            Segment::Unknown => {
                if !out.is_empty() {
                    out.push('.');
                }
                out.push('?');
            }
        }
    }
    if out.is_empty() {
        "$".to_owned()
    } else {
        out
    }
}

fn join(base: &str, field: &str) -> String {
    if base == "$" {
        field.to_owned()
    } else {
        format!("{base}.{field}")
    }
}

fn backticked(message: &str) -> Option<&str> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(&message[start..start + len])
}

fn classify(path: &Path, message: &str) -> Issue {
    let at = render_path(path);

    if let Some((code, rest)) = message.split_once(CODE_SEPARATOR) {
        if let Some(code) = IssueCode::from_str_code(code) {
            return Issue::new(at, code, rest);
        }
    }

    if message.starts_with("missing field") {
        let field = backticked(message).unwrap_or("?");
        return Issue::new(join(&at, field), IssueCode::MissingField, message);
    }
    if message.starts_with("unknown field") {
        // The path already points at the offending key.
        return Issue::new(at, IssueCode::UnknownField, message);
    }
    if message.starts_with("unknown variant") {
        return Issue::new(at, IssueCode::UnknownVariant, message);
    }
    if message.starts_with("invalid type") || message.starts_with("invalid length") {
        return Issue::new(at, IssueCode::WrongType, message);
    }
    Issue::new(at, IssueCode::InvalidValue, message)
}

fn duplicates<'a>(
    issues: &mut Vec<Issue>,
    namespace: &str,
    ids: impl Iterator<Item = (String, &'a str)>,
) {
    let mut seen: HashMap<&str, String> = HashMap::new();
    for (path, id) in ids {
        if let Some(first) = seen.get(id) {
            issues.push(Issue::new(
                path,
                IssueCode::DuplicateId,
                format!("duplicate {namespace} id `{id}` (first declared at {first})"),
            ));
        } else {
            seen.insert(id, path);
        }
    }
}

fn structural_issues(pack: &ScenarioPack) -> Vec<Issue> {
    let mut issues = Vec::new();

    duplicates(
        &mut issues,
        "voter",
        pack.voters
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("voters[{i}].voter_id"), v.voter_id.as_str())),
    );
    duplicates(
        &mut issues,
        "scene",
        pack.scenes
            .iter()
            .enumerate()
            .map(|(i, s)| (format!("scenes[{i}].scene_id"), s.scene_id.as_str())),
    );
    duplicates(
        &mut issues,
        "choice",
        pack.scenes.iter().enumerate().flat_map(|(i, s)| {
            s.choices.iter().enumerate().map(move |(j, c)| {
                (
                    format!("scenes[{i}].choices[{j}].choice_id"),
                    c.choice_id.as_str(),
                )
            })
        }),
    );
    duplicates(
        &mut issues,
        "tag",
        pack.tags
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("tags[{i}].tag_id"), t.tag_id.as_str())),
    );
    duplicates(
        &mut issues,
        "headline",
        pack.headlines
            .iter()
            .enumerate()
            .map(|(i, h)| (format!("headlines[{i}].headline_id"), h.headline_id.as_str())),
    );
    duplicates(
        &mut issues,
        "tooltip",
        pack.tooltips
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("tooltips[{i}].term"), t.term.as_str())),
    );
    duplicates(
        &mut issues,
        "lecture",
        pack.lectures
            .iter()
            .enumerate()
            .map(|(i, l)| (format!("lectures[{i}].lecture_id"), l.lecture_id.as_str())),
    );
    duplicates(
        &mut issues,
        "sim preset",
        pack.sim_presets
            .iter()
            .enumerate()
            .map(|(i, p)| (format!("sim_presets[{i}].name"), p.name.as_str())),
    );
    duplicates(
        &mut issues,
        "question",
        pack.assessment
            .iter()
            .enumerate()
            .map(|(i, q)| (format!("assessment[{i}].question_id"), q.question_id.as_str())),
    );

    for (i, voter) in pack.voters.iter().enumerate() {
        if voter.interest_buckets.is_empty() {
            issues.push(Issue::new(
                format!("voters[{i}].interest_buckets"),
                IssueCode::NoInterestBuckets,
                format!("voter `{}` needs at least one interest bucket", voter.voter_id),
            ));
        }
    }

    for (i, question) in pack.assessment.iter().enumerate() {
        if question.options.len() < 2 {
            issues.push(Issue::new(
                format!("assessment[{i}].options"),
                IssueCode::InvalidQuestion,
                "a question needs at least two options",
            ));
        }
        if question.correct_index >= question.options.len() {
            issues.push(Issue::new(
                format!("assessment[{i}].correct_index"),
                IssueCode::InvalidQuestion,
                format!(
                    "correct_index {} is out of range for {} options",
                    question.correct_index,
                    question.options.len()
                ),
            ));
        }
    }

    issues
}
