//! Line-oriented policy files.
//!
//! ```text
//! format dlg/1
//! universe 06/01/25 10/01/25
//! locations classroom lab
//! attributes tenured
//! interval professor-absence [06/01/25-08/01/25]
//! dominates dean professor
//! priority p2 < p3
//! nd present course 2
//! rule2: (req, negative, assistant, present, course)
//! (req, positive, professor, present, course, DURING professor-absence)
//! ```
//!
//! Directives may appear in any order after the header. Rules take an
//! optional `id [@label]:` prefix; unnamed rules are numbered `r1`, `r2`, ...
//! Text after `#` is a comment.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use dlg_core::constraint::{
    is_identifier, is_keyword, parse_constraint_with, ConstraintError, ContextUniverse, Date, Interval,
    DEFAULT_MAX_CONTEXTS,
};
use dlg_core::policy::{
    is_token, EventSpec, GrantorHierarchy, Modality, PermissionKey, PolicyRule, PriorityLabel, SecurityPolicy, Subject,
};

pub const FORMAT_TAG: &str = "dlg/1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DocumentError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: {message}")]
    Semantic { line: usize, message: String },
}

/// A loaded policy file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyDocument {
    pub policy: SecurityPolicy,
    pub hierarchy: GrantorHierarchy,
}

pub fn load_policy(path: &Path) -> Result<PolicyDocument, DocumentError> {
    let text = std::fs::read_to_string(path).map_err(|e| DocumentError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_policy(&text)
}

pub fn save_policy(doc: &PolicyDocument, path: &Path) -> Result<(), DocumentError> {
    std::fs::write(path, render_policy(doc)).map_err(|e| DocumentError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// One non-blank line with its number and the column of its first byte.
#[derive(Debug, Clone, Copy)]
struct Line<'a> {
    number: usize,
    text: &'a str,
    offset: usize,
}

impl<'a> Line<'a> {
    fn parse_err(&self, at: &str, message: impl Into<String>) -> DocumentError {
        DocumentError::Parse {
            line: self.number,
            column: self.column_of(at),
            message: message.into(),
        }
    }

    fn semantic(&self, message: impl ToString) -> DocumentError {
        DocumentError::Semantic {
            line: self.number,
            message: message.to_string(),
        }
    }

    /// 1-based column of `part`, which must be a slice of this line.
    fn column_of(&self, part: &str) -> usize {
        let start = (part.as_ptr() as usize).saturating_sub(self.text.as_ptr() as usize);
        self.text[..start.min(self.text.len())].chars().count() + self.offset + 1
    }

    fn words(&self) -> Vec<&'a str> {
        self.text.split_whitespace().collect()
    }
}

fn content_lines(text: &str) -> Vec<Line<'_>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let code = raw.split('#').next().unwrap_or("");
            let trimmed = code.trim_start();
            let offset = code.len() - trimmed.len();
            let trimmed = trimmed.trim_end();
            (!trimmed.is_empty()).then_some(Line {
                number: i + 1,
                text: trimmed,
                offset,
            })
        })
        .collect()
}

fn date_at(line: &Line<'_>, word: &str) -> Result<Date, DocumentError> {
    word.parse().map_err(|e: ConstraintError| line.semantic(e))
}

fn token_at<'a>(line: &Line<'_>, word: &'a str, what: &str) -> Result<&'a str, DocumentError> {
    if is_token(word) {
        Ok(word)
    } else {
        Err(line.parse_err(word, format!("invalid {what} `{word}`")))
    }
}

fn arity(line: &Line<'_>, words: &[&str], min: usize, max: usize, usage: &str) -> Result<(), DocumentError> {
    if words.len() < min || words.len() > max {
        let at = words.get(max).or(words.last()).copied().unwrap_or(line.text);
        return Err(line.parse_err(at, format!("expected `{usage}`")));
    }
    Ok(())
}

pub fn parse_policy(text: &str) -> Result<PolicyDocument, DocumentError> {
    let lines = content_lines(text);
    let Some((header, body)) = lines.split_first() else {
        return Err(DocumentError::Parse {
            line: 1,
            column: 1,
            message: format!("missing `format {FORMAT_TAG}` header"),
        });
    };
    match header.words().as_slice() {
        ["format", tag] if *tag == FORMAT_TAG => {}
        ["format", tag] => return Err(header.parse_err(tag, format!("unsupported format version `{tag}`"))),
        _ => return Err(header.parse_err(header.text, format!("expected `format {FORMAT_TAG}` header"))),
    }

    // Universe directives first, wherever they appear.
    let mut range: Option<(Date, Date, u64, Line<'_>)> = None;
    let mut locations = Vec::new();
    let mut attributes = Vec::new();
    let mut intervals: Vec<(String, Interval, Line<'_>)> = Vec::new();
    let mut rest = Vec::new();
    for line in body {
        let words = line.words();
        match words[0] {
            "universe" => {
                if let Some((.., first)) = &range {
                    return Err(line.semantic(format!("universe already declared on line {}", first.number)));
                }
                arity(line, &words, 3, 5, "universe <first> <last> [limit <n>]")?;
                let first = date_at(line, words[1])?;
                let last = date_at(line, words[2])?;
                let limit = match &words[3..] {
                    [] => DEFAULT_MAX_CONTEXTS,
                    ["limit", n] => n
                        .parse()
                        .map_err(|_| line.parse_err(n, format!("invalid context limit `{n}`")))?,
                    [w, ..] => return Err(line.parse_err(w, "expected `limit <n>`")),
                };
                range = Some((first, last, limit, *line));
            }
            "locations" => locations.extend(words[1..].iter().map(|w| (w.to_string(), *line, *w))),
            "attributes" => attributes.extend(words[1..].iter().map(|w| (w.to_string(), *line, *w))),
            "interval" => {
                arity(line, &words, 3, 3, "interval <name> [<first>-<last>]")?;
                let spec = words[2];
                let inner = spec
                    .strip_prefix('[')
                    .and_then(|s| s.strip_suffix(']'))
                    .ok_or_else(|| line.parse_err(spec, "expected `[<first>-<last>]`"))?;
                let (a, b) = inner
                    .split_once('-')
                    .ok_or_else(|| line.parse_err(spec, "expected `[<first>-<last>]`"))?;
                let iv = Interval::new(date_at(line, a)?, date_at(line, b)?).map_err(|e| line.semantic(e))?;
                intervals.push((words[1].to_string(), iv, *line));
            }
            _ => rest.push(*line),
        }
    }
    let Some((first, last, limit, range_line)) = range else {
        return Err(DocumentError::Semantic {
            line: header.number,
            message: "missing `universe` directive".into(),
        });
    };
    for (name, line, word) in locations.iter().chain(&attributes) {
        if !is_identifier(name) {
            return Err(line.parse_err(word, format!("invalid identifier `{name}`")));
        }
    }
    let mut universe = ContextUniverse::with_max_contexts(
        first,
        last,
        locations.into_iter().map(|(n, ..)| n),
        attributes.into_iter().map(|(n, ..)| n),
        limit,
    )
    .map_err(|e| range_line.semantic(e))?;
    for (name, iv, line) in intervals {
        universe.add_interval(&name, iv).map_err(|e| line.semantic(e))?;
    }

    let mut policy = SecurityPolicy::new(universe);
    let mut hierarchy = GrantorHierarchy::new();
    let mut pending_rules = Vec::new();
    for line in rest {
        let words = line.words();
        match words[0] {
            "dominates" => {
                arity(&line, &words, 3, 3, "dominates <superior> <inferior>")?;
                let sup = subject_at(&line, words[1])?;
                let inf = subject_at(&line, words[2])?;
                hierarchy.add_dominance(sup, inf).map_err(|e| line.semantic(e))?;
            }
            "priority" => match words.as_slice() {
                [_, label] => {
                    policy.declare_label(label_at(&line, label)?);
                }
                [_, lower, "<", higher] => {
                    let (lower, higher) = (label_at(&line, lower)?, label_at(&line, higher)?);
                    policy.declare_priority(lower, higher).map_err(|e| line.semantic(e))?;
                }
                _ => return Err(line.parse_err(line.text, "expected `priority <label> [< <label>]`")),
            },
            "nd" => {
                arity(&line, &words, 4, 4, "nd <action> <object> <n>")?;
                let key = PermissionKey::new(
                    token_at(&line, words[1], "action")?,
                    token_at(&line, words[2], "object")?,
                );
                let n: u32 = words[3]
                    .parse()
                    .map_err(|_| line.parse_err(words[3], format!("invalid Nd `{}`", words[3])))?;
                policy.set_nd(key, n).map_err(|e| line.semantic(e))?;
            }
            _ if line.text.contains('(') => pending_rules.push(line),
            other => return Err(line.parse_err(other, format!("unknown directive `{other}`"))),
        }
    }

    // Explicit ids are reserved before unnamed rules are numbered.
    let mut parsed = Vec::new();
    for line in &pending_rules {
        parsed.push((parse_rule_line(line, &policy)?, *line));
    }
    let mut taken: BTreeSet<String> = parsed.iter().filter_map(|(r, _)| r.id.clone()).collect();
    let mut counter = 0;
    for (rule, line) in parsed {
        let id = match rule.id {
            Some(id) => id,
            None => loop {
                counter += 1;
                let candidate = format!("r{counter}");
                if taken.insert(candidate.clone()) {
                    break candidate;
                }
            },
        };
        let mut r = PolicyRule::base(id, rule.modality, rule.subject, rule.action, rule.object);
        r.rtype = rule.rtype;
        r.constraint = rule.constraint;
        r.event = rule.event;
        r.priority = rule.priority;
        policy.insert_rule(r).map_err(|e| line.semantic(e))?;
    }
    Ok(PolicyDocument { policy, hierarchy })
}

fn subject_at(line: &Line<'_>, word: &str) -> Result<Subject, DocumentError> {
    Subject::new(word).map_err(|_| line.parse_err(word, format!("invalid subject `{word}`")))
}

fn label_at(line: &Line<'_>, word: &str) -> Result<PriorityLabel, DocumentError> {
    token_at(line, word, "priority label").map(PriorityLabel::new)
}

struct RuleLine {
    id: Option<String>,
    priority: Option<PriorityLabel>,
    rtype: String,
    modality: Modality,
    subject: Subject,
    action: String,
    object: String,
    constraint: Option<dlg_core::constraint::Constraint>,
    event: Option<EventSpec>,
}

fn parse_rule_line(line: &Line<'_>, policy: &SecurityPolicy) -> Result<RuleLine, DocumentError> {
    let text = line.text;
    let open = text.find('(').expect("caller checked for `(`");
    let prefix = text[..open].trim();
    let (id, priority) = if prefix.is_empty() {
        (None, None)
    } else {
        let head = prefix
            .strip_suffix(':')
            .ok_or_else(|| line.parse_err(&text[open..], "expected `:` after the rule id"))?;
        let words: Vec<&str> = head.split_whitespace().collect();
        match words.as_slice() {
            [id] => (Some(token_at(line, id, "rule id")?.to_string()), None),
            [id, label] => {
                let label = label
                    .strip_prefix('@')
                    .ok_or_else(|| line.parse_err(label, "expected `@<label>`"))?;
                (
                    Some(token_at(line, id, "rule id")?.to_string()),
                    Some(label_at(line, label)?),
                )
            }
            _ => return Err(line.parse_err(prefix, "expected `<id> [@<label>]:`")),
        }
    };
    let body = &text[open + 1..];
    let body = body
        .strip_suffix(')')
        .ok_or_else(|| line.parse_err(&text[text.len()..], "expected `)` at end of rule"))?;
    let fields: Vec<&str> = body.split(',').map(str::trim).collect();
    if fields.len() < 5 || fields.len() > 7 {
        return Err(line.parse_err(
            body,
            "expected `(type, modality, subject, action, object[, constraint][, event])`",
        ));
    }
    let rtype = token_at(line, fields[0], "rule type")?.to_string();
    let modality: Modality = fields[1]
        .parse()
        .map_err(|_| line.parse_err(fields[1], format!("invalid modality `{}`", fields[1])))?;
    let subject = subject_at(line, fields[2])?;
    let action = token_at(line, fields[3], "action")?.to_string();
    let object = token_at(line, fields[4], "object")?.to_string();
    let constraint_at = |field: &str| {
        parse_constraint_with(field, policy.universe().intervals()).map_err(|e| match e {
            ConstraintError::Syntax { position, .. } => DocumentError::Parse {
                line: line.number,
                column: line.column_of(field) + field[..position.min(field.len())].chars().count(),
                message: e.to_string(),
            },
            other => line.semantic(other),
        })
    };
    let event_at =
        |field: &str| EventSpec::new(field).map_err(|_| line.parse_err(field, format!("invalid event name `{field}`")));
    let (constraint, event) = match &fields[5..] {
        [] => (None, None),
        // A bare token cannot be a constraint, so it names an event.
        [one] if is_token(one) && !is_keyword(one) => (None, Some(event_at(one)?)),
        [one] => (Some(constraint_at(one)?), None),
        [c, e] => {
            let constraint = if *c == "-" { None } else { Some(constraint_at(c)?) };
            (constraint, Some(event_at(e)?))
        }
        _ => unreachable!("field count checked"),
    };
    Ok(RuleLine {
        id,
        priority,
        rtype,
        modality,
        subject,
        action,
        object,
        constraint,
        event,
    })
}

/// Canonical text; `parse_policy` reads it back to an equal document.
///
/// Rules are written as base rules: delegation provenance and transfer
/// history live in the engine, not in policy files.
pub fn render_policy(doc: &PolicyDocument) -> String {
    let sp = &doc.policy;
    let u = sp.universe();
    let mut out = format!("format {FORMAT_TAG}\n");
    let _ = write!(out, "universe {} {}", u.first_day(), u.last_day());
    if u.max_contexts() != DEFAULT_MAX_CONTEXTS {
        let _ = write!(out, " limit {}", u.max_contexts());
    }
    out.push('\n');
    let join = |items: &BTreeSet<String>| items.iter().cloned().collect::<Vec<_>>().join(" ");
    if !u.locations().is_empty() {
        let _ = writeln!(out, "locations {}", join(u.locations()));
    }
    if !u.attributes().is_empty() {
        let _ = writeln!(out, "attributes {}", join(u.attributes()));
    }
    for (name, iv) in u.intervals() {
        let _ = writeln!(out, "interval {name} {iv}");
    }
    for (sup, inf) in doc.hierarchy.declared() {
        let _ = writeln!(out, "dominates {sup} {inf}");
    }
    let mut related = BTreeSet::new();
    for (lower, higher) in sp.priorities().pairs() {
        let _ = writeln!(out, "priority {lower} < {higher}");
        related.insert(lower);
        related.insert(higher);
    }
    for label in sp.priorities().labels() {
        if !related.contains(label) {
            let _ = writeln!(out, "priority {label}");
        }
    }
    for (key, n) in sp.nd_list() {
        let _ = writeln!(out, "nd {} {} {n}", key.action, key.object);
    }
    for r in sp.rules() {
        let _ = write!(out, "{}", r.id);
        if let Some(label) = &r.priority {
            let _ = write!(out, " @{label}");
        }
        let _ = write!(
            out,
            ": ({}, {}, {}, {}, {}",
            r.rtype, r.modality, r.subject, r.action, r.object
        );
        match (&r.constraint, &r.event) {
            (Some(c), Some(e)) => {
                let _ = write!(out, ", {c}, {e}");
            }
            (Some(c), None) => {
                let _ = write!(out, ", {c}");
            }
            (None, Some(e)) => {
                let _ = write!(out, ", {e}");
            }
            (None, None) => {}
        }
        out.push_str(")\n");
    }
    out
}
