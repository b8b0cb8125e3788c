//! Request scripts: one command per line, executed in order.
//!
//! ```text
//! DELEGATE professor assistant present course WHEN MULTI-LEVEL DELEGATION
//! TRANSFER professor assistant present course
//! OBLIGATE professor assistant grade paper EVENT exams-marked
//! CLAIM grantee-initiated professor assistant present course
//! APPROVE 1            # or APPROVE 1 NO
//! DELEGATE SESSION 1   # TRANSFER SESSION 1, OBLIGATE SESSION 1 EVENT e
//! REVOKE weak-local-single-delete professor present course TARGET assistant
//! TICK 09/01/25
//! LOSE professor present course
//! QUERY assistant present course AT 07/01/25 IN classroom WITH tenured
//! FIRE exams-marked
//! ```
//!
//! Keywords are case-insensitive; `#` starts a comment.

use std::path::Path;

use dlg_core::constraint::{parse_constraint_with, Constraint, ContextUniverse, Date, EvalContext};
use dlg_core::engine::{AgreementMode, Engine, EngineConfig, EngineError, Notification};
use dlg_core::policy::{Decision, DelegationRule, EventSpec, Permission, PermissionKey, RuleType, Subject};
use dlg_core::revocation::RevocationScheme;

use crate::document::PolicyDocument;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScriptError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("script line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    /// Spontaneous grant, transfer or obligation.
    Delegate {
        t: RuleType,
        gr: Subject,
        gt: Subject,
        p: Permission,
        event: Option<EventSpec>,
        dc: Option<Constraint>,
    },
    /// Submits an approved session.
    Submit {
        t: RuleType,
        session: usize,
        event: Option<EventSpec>,
    },
    Claim {
        mode: AgreementMode,
        gr: Subject,
        gt: Subject,
        p: Permission,
        dc: Option<Constraint>,
    },
    Approve {
        session: usize,
        approve: bool,
    },
    Revoke {
        scheme: RevocationScheme,
        revoker: Subject,
        key: PermissionKey,
        target: Option<Subject>,
    },
    Tick(Date),
    Lose {
        subject: Subject,
        key: PermissionKey,
    },
    Query {
        subject: Subject,
        key: PermissionKey,
        at: Option<Date>,
        locations: Vec<String>,
        attributes: Vec<String>,
    },
    Fire(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptLine {
    pub line: usize,
    pub text: String,
    pub command: Command,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Script {
    pub lines: Vec<ScriptLine>,
}

pub fn load_script(path: &Path, universe: &ContextUniverse) -> Result<Script, ScriptError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScriptError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_script(&text, universe)
}

/// Parses every line; constraints resolve named intervals of `universe`.
pub fn parse_script(text: &str, universe: &ContextUniverse) -> Result<Script, ScriptError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let code = raw.split('#').next().unwrap_or("").trim();
        if code.is_empty() {
            continue;
        }
        let command = parse_command(code, universe).map_err(|message| ScriptError::Parse { line: i + 1, message })?;
        lines.push(ScriptLine {
            line: i + 1,
            text: code.to_string(),
            command,
        });
    }
    Ok(Script { lines })
}

/// Words of a command with the text that follows each.
struct Words<'a> {
    items: Vec<(&'a str, &'a str)>,
    pos: usize,
}

impl<'a> Words<'a> {
    fn new(text: &'a str) -> Self {
        let mut items = Vec::new();
        let mut rest = text;
        loop {
            rest = rest.trim_start();
            if rest.is_empty() {
                break;
            }
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            items.push((&rest[..end], &rest[end..]));
            rest = &rest[end..];
        }
        Words { items, pos: 0 }
    }

    fn next(&mut self, what: &str) -> Result<&'a str, String> {
        let word = self
            .items
            .get(self.pos)
            .map(|(w, _)| *w)
            .ok_or(format!("missing {what}"))?;
        self.pos += 1;
        Ok(word)
    }

    fn peek_keyword(&self, keyword: &str) -> bool {
        self.items
            .get(self.pos)
            .is_some_and(|(w, _)| w.eq_ignore_ascii_case(keyword))
    }

    fn eat_keyword(&mut self, keyword: &str) -> bool {
        let hit = self.peek_keyword(keyword);
        if hit {
            self.pos += 1;
        }
        hit
    }

    /// Text after the word just consumed.
    fn remainder(&mut self) -> &'a str {
        let rest = self.pos.checked_sub(1).map_or("", |i| self.items[i].1.trim());
        self.pos = self.items.len();
        rest
    }

    fn finish(&self) -> Result<(), String> {
        match self.items.get(self.pos) {
            None => Ok(()),
            Some((w, _)) => Err(format!("unexpected `{w}`")),
        }
    }

    fn subject(&mut self, what: &str) -> Result<Subject, String> {
        let word = self.next(what)?;
        Subject::new(word).map_err(|e| e.to_string())
    }

    fn permission(&mut self) -> Result<Permission, String> {
        Ok(Permission::new(self.next("action")?, self.next("object")?))
    }

    fn number(&mut self, what: &str) -> Result<usize, String> {
        let word = self.next(what)?;
        word.parse().map_err(|_| format!("invalid {what} `{word}`"))
    }

    fn date(&mut self) -> Result<Date, String> {
        let word = self.next("date")?;
        word.parse()
            .map_err(|e: dlg_core::constraint::ConstraintError| e.to_string())
    }

    fn event(&mut self) -> Result<Option<EventSpec>, String> {
        if self.eat_keyword("EVENT") {
            let name = self.next("event name")?;
            EventSpec::new(name).map(Some).map_err(|e| e.to_string())
        } else {
            Ok(None)
        }
    }

    fn when(&mut self, universe: &ContextUniverse) -> Result<Option<Constraint>, String> {
        if self.eat_keyword("WHEN") {
            let text = self.remainder();
            parse_constraint_with(text, universe.intervals())
                .map(Some)
                .map_err(|e| format!("constraint `{text}`: {e}"))
        } else {
            Ok(None)
        }
    }

    fn list(&mut self, keyword: &str) -> Result<Vec<String>, String> {
        if !self.eat_keyword(keyword) {
            return Ok(Vec::new());
        }
        let word = self.next(&format!("{keyword} list"))?;
        Ok(word.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect())
    }
}

fn parse_command(text: &str, universe: &ContextUniverse) -> Result<Command, String> {
    let mut w = Words::new(text);
    let verb = w.next("command")?.to_ascii_uppercase();
    let command = match verb.as_str() {
        "DELEGATE" | "TRANSFER" | "OBLIGATE" => {
            let t = match verb.as_str() {
                "DELEGATE" => RuleType::GrtReq,
                "TRANSFER" => RuleType::TsfReq,
                _ => RuleType::TsfOb,
            };
            if w.eat_keyword("SESSION") {
                let session = w.number("session number")?;
                let event = w.event()?;
                Command::Submit { t, session, event }
            } else {
                let gr = w.subject("grantor")?;
                let gt = w.subject("grantee")?;
                let p = w.permission()?;
                let event = w.event()?;
                let dc = w.when(universe)?;
                Command::Delegate {
                    t,
                    gr,
                    gt,
                    p,
                    event,
                    dc,
                }
            }
        }
        "CLAIM" => {
            let mode_word = w.next("agreement mode")?;
            let mode: AgreementMode = mode_word.to_ascii_lowercase().parse()?;
            let gr = w.subject("grantor")?;
            let gt = w.subject("grantee")?;
            let p = w.permission()?;
            let dc = w.when(universe)?;
            Command::Claim { mode, gr, gt, p, dc }
        }
        "APPROVE" => {
            let session = w.number("session number")?;
            let approve = !w.eat_keyword("NO");
            Command::Approve { session, approve }
        }
        "REVOKE" => {
            let name = w.next("scheme")?;
            let scheme: RevocationScheme = name.to_ascii_lowercase().parse().map_err(|e| format!("{e}"))?;
            let revoker = w.subject("revoker")?;
            let key = w.permission()?.key();
            let target = if w.eat_keyword("TARGET") {
                Some(w.subject("target")?)
            } else {
                None
            };
            Command::Revoke {
                scheme,
                revoker,
                key,
                target,
            }
        }
        "TICK" => Command::Tick(w.date()?),
        "LOSE" => {
            let subject = w.subject("subject")?;
            let key = w.permission()?.key();
            Command::Lose { subject, key }
        }
        "QUERY" => {
            let subject = w.subject("subject")?;
            let key = w.permission()?.key();
            let at = if w.eat_keyword("AT") { Some(w.date()?) } else { None };
            let locations = w.list("IN")?;
            let attributes = w.list("WITH")?;
            Command::Query {
                subject,
                key,
                at,
                locations,
                attributes,
            }
        }
        "FIRE" => Command::Fire(w.next("event name")?.to_string()),
        other => return Err(format!("unknown command `{other}`")),
    };
    w.finish()?;
    Ok(command)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Continue after a failing command instead of halting.
    pub keep_going: bool,
    pub config: EngineConfig,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    /// One line per executed command.
    pub transcript: Vec<String>,
    pub engine: Engine,
    /// `(command index, message)` of each failed command.
    pub failures: Vec<(usize, String)>,
}

impl RunReport {
    pub fn render_transcript(&self) -> String {
        let mut out = String::new();
        for line in &self.transcript {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

/// Executes `script` against a fresh engine over `doc`.
pub fn run_script(doc: &PolicyDocument, script: &Script, options: &RunOptions) -> RunReport {
    let mut engine = Engine::with_config(doc.policy.clone(), doc.hierarchy.clone(), options.config);
    let mut sessions: Vec<usize> = Vec::new();
    let mut transcript = Vec::new();
    let mut failures = Vec::new();
    for (i, line) in script.lines.iter().enumerate() {
        let index = i + 1;
        match execute(&mut engine, &mut sessions, &line.command) {
            Ok(result) => transcript.push(format!("{index}: {} -> {result}", line.text)),
            Err(message) => {
                transcript.push(format!("{index}: {} -> error: {message}", line.text));
                failures.push((index, message));
                if !options.keep_going {
                    break;
                }
            }
        }
    }
    RunReport {
        transcript,
        engine,
        failures,
    }
}

fn notification_text(n: &Notification) -> String {
    match (&n.reason, &n.rule, &n.edge) {
        (Some(reason), ..) => format!("denied {reason}"),
        (None, Some(rule), Some(edge)) => format!("accepted rule {rule} edge {edge}"),
        _ => n.verdict.to_string(),
    }
}

fn session_id(sessions: &[usize], n: usize) -> Result<usize, String> {
    n.checked_sub(1)
        .and_then(|i| sessions.get(i).copied())
        .ok_or_else(|| format!("unknown session {n}"))
}

fn report_text(report: &dlg_core::engine::RevocationReport, none: &str) -> String {
    if report.revoked.is_empty() {
        return none.to_string();
    }
    let ids: Vec<String> = report.revoked.iter().map(ToString::to_string).collect();
    let mut out = format!("revoked {}", ids.join(","));
    for r in &report.reparented {
        out.push_str(&format!("; {} reparented {}->{}", r.edge, r.from, r.to));
    }
    out
}

fn execute(engine: &mut Engine, sessions: &mut Vec<usize>, command: &Command) -> Result<String, String> {
    let err = |e: EngineError| e.to_string();
    match command {
        Command::Delegate {
            t,
            gr,
            gt,
            p,
            event,
            dc,
        } => {
            let mut rule = DelegationRule::new(*t, gr.clone(), gt.clone(), p.clone());
            rule.dc = dc.clone();
            rule.de = event.clone();
            engine.delegate(rule).map(|n| notification_text(&n)).map_err(err)
        }
        Command::Submit { t, session, event } => {
            let id = session_id(sessions, *session)?;
            engine
                .submit_session(id, *t, event.clone())
                .map(|n| notification_text(&n))
                .map_err(err)
        }
        Command::Claim { mode, gr, gt, p, dc } => {
            let id = engine.open_session(*mode, gr.clone(), gt.clone(), p.clone(), dc.clone());
            sessions.push(id);
            engine.claim(id).map_err(err)?;
            Ok(format!("session {} claimed", sessions.len()))
        }
        Command::Approve { session, approve } => {
            let id = session_id(sessions, *session)?;
            engine.approve(id, *approve).map_err(err)?;
            Ok(format!(
                "session {session} {}",
                if *approve { "approved" } else { "refused" }
            ))
        }
        Command::Revoke {
            scheme,
            revoker,
            key,
            target,
        } => engine
            .revoke(revoker, key, target.as_ref(), scheme)
            .map(|r| report_text(&r, "nothing revoked"))
            .map_err(err),
        Command::Tick(date) => {
            let report = engine.tick(*date).map_err(err)?;
            Ok(format!("clock {date}; {}", report_text(&report, "nothing expired")))
        }
        Command::Lose { subject, key } => engine
            .lose(subject, key)
            .map(|r| report_text(&r, "nothing revoked"))
            .map_err(err),
        Command::Query {
            subject,
            key,
            at,
            locations,
            attributes,
        } => {
            let ctx = EvalContext {
                now: at.unwrap_or(engine.clock()),
                locations: locations.iter().cloned().collect(),
                attributes: attributes.iter().cloned().collect(),
            };
            Ok(decision_text(engine.policy().decide(subject, &key.action, &key.object, &ctx)).to_string())
        }
        Command::Fire(name) => engine
            .fire_event(name)
            .map(|r| report_text(&r, "nothing revoked"))
            .map_err(err),
    }
}

/// Queries with no applicable rule are denied.
pub fn decision_text(decision: Decision) -> &'static str {
    match decision {
        Decision::Permit => "permit",
        Decision::Deny | Decision::NotApplicable => "deny",
        Decision::Undecidable => "undecidable",
    }
}
