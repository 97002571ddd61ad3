//! Proof-state traces recorded outside the kernel.
//!
//! A trace lists, per proof, every sentence together with the focused goals
//! after it. The first step of a proof is its statement. Hypothesis types
//! and conclusions are kept as text; a type of `_` marks a term variable.
//!
//! ```json
//! {"psv_trace_version":1,"source_file":"a.v","proofs":[{"kind":"Lemma",
//!  "name":"l","statement":"A -> A","completion":"Qed","steps":[
//!  {"sentence":"Lemma l : A -> A.","goals":[{"hyps":[],"concl":"A -> A"}]},
//!  {"sentence":"intros H.","goals":[{"hyps":[{"name":"H","type":"A"}],"concl":"A"}]},
//!  {"sentence":"exact H.","goals":[]}]}]}
//! ```

use serde::{Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::analyze::analyze;
use crate::focus::{GoalEffect, ProofState, Structural};
use crate::forest::{
    header_text, Assertion, Diagnostic, GoalView, HypView, ProofLabel, ProofTree, TreeBuilder,
};
use crate::formula::Formula;
use crate::script::{classify, Completion, Sentence, SentenceKind, Span, TheoremKind};
use crate::tactic::{parse_tactic, Fresh, Goal, GoalId, Tactic, TacticOutcome};

pub const TRACE_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceDocument {
    pub psv_trace_version: u64,
    pub source_file: String,
    pub proofs: Vec<TraceProof>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceProof {
    #[serde(serialize_with = "keyword_kind")]
    pub kind: TheoremKind,
    pub name: String,
    pub statement: String,
    #[serde(serialize_with = "keyword_completion")]
    pub completion: Completion,
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub sentence: String,
    pub goals: Vec<TraceGoal>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceGoal {
    pub hyps: Vec<TraceHyp>,
    pub concl: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceHyp {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

fn keyword_kind<S: Serializer>(k: &TheoremKind, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(k.keyword())
}

fn keyword_completion<S: Serializer>(c: &Completion, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(c.keyword())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported trace version {0}, expected {TRACE_VERSION}")]
    VersionMismatch(String),
}

impl TraceError {
    pub fn code(&self) -> &'static str {
        match self {
            TraceError::Json(_) => "TraceJson",
            TraceError::Schema { .. } => "SchemaError",
            TraceError::VersionMismatch(_) => "VersionMismatch",
        }
    }
}

fn schema(path: &str, message: impl Into<String>) -> TraceError {
    TraceError::Schema {
        path: if path.is_empty() {
            "/".into()
        } else {
            path.into()
        },
        message: message.into(),
    }
}

fn object<'v>(
    v: &'v Value,
    path: &str,
    fields: &[&str],
) -> Result<&'v Map<String, Value>, TraceError> {
    let map = v
        .as_object()
        .ok_or_else(|| schema(path, "expected an object"))?;
    for key in map.keys() {
        if !fields.contains(&key.as_str()) {
            return Err(schema(&format!("{path}/{key}"), "unknown field"));
        }
    }
    for f in fields {
        if !map.contains_key(*f) {
            return Err(schema(&format!("{path}/{f}"), "missing field"));
        }
    }
    Ok(map)
}

fn string(map: &Map<String, Value>, path: &str, key: &str) -> Result<String, TraceError> {
    map[key]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| schema(&format!("{path}/{key}"), "expected a string"))
}

fn array<'v>(
    map: &'v Map<String, Value>,
    path: &str,
    key: &str,
) -> Result<&'v Vec<Value>, TraceError> {
    map[key]
        .as_array()
        .ok_or_else(|| schema(&format!("{path}/{key}"), "expected an array"))
}

/// Parses and validates a trace document.
pub fn parse_trace(bytes: &[u8]) -> Result<TraceDocument, TraceError> {
    let v: Value = serde_json::from_slice(bytes).map_err(|e| TraceError::Json(e.to_string()))?;
    let top = v
        .as_object()
        .ok_or_else(|| schema("", "expected an object"))?;
    match top.get("psv_trace_version") {
        Some(n) if n.as_u64() == Some(TRACE_VERSION) => {}
        Some(other) => return Err(TraceError::VersionMismatch(other.to_string())),
        None => return Err(schema("/psv_trace_version", "missing field")),
    }
    let top = object(&v, "", &["psv_trace_version", "source_file", "proofs"])?;
    let source_file = string(top, "", "source_file")?;
    let mut proofs = Vec::new();
    for (i, p) in array(top, "", "proofs")?.iter().enumerate() {
        proofs.push(parse_proof(p, &format!("/proofs/{i}"))?);
    }
    Ok(TraceDocument {
        psv_trace_version: TRACE_VERSION,
        source_file,
        proofs,
    })
}

fn parse_proof(v: &Value, path: &str) -> Result<TraceProof, TraceError> {
    let m = object(
        v,
        path,
        &["kind", "name", "statement", "completion", "steps"],
    )?;
    let kind_text = string(m, path, "kind")?;
    let kind = TheoremKind::from_keyword(&kind_text).ok_or_else(|| {
        schema(
            &format!("{path}/kind"),
            format!("unknown kind `{kind_text}`"),
        )
    })?;
    let name = string(m, path, "name")?;
    if name.is_empty() {
        return Err(schema(&format!("{path}/name"), "empty name"));
    }
    let statement = string(m, path, "statement")?;
    let completion_text = string(m, path, "completion")?;
    let completion = Completion::from_keyword(&completion_text).ok_or_else(|| {
        schema(
            &format!("{path}/completion"),
            "expected \"Qed\", \"Admitted\" or \"Defined\"",
        )
    })?;
    let raw_steps = array(m, path, "steps")?;
    if raw_steps.is_empty() {
        return Err(schema(
            &format!("{path}/steps"),
            "a proof needs at least one step",
        ));
    }
    let mut steps = Vec::new();
    for (i, s) in raw_steps.iter().enumerate() {
        let sp = format!("{path}/steps/{i}");
        let sm = object(s, &sp, &["sentence", "goals"])?;
        let sentence = string(sm, &sp, "sentence")?;
        let mut goals = Vec::new();
        for (j, g) in array(sm, &sp, "goals")?.iter().enumerate() {
            let gp = format!("{sp}/goals/{j}");
            let gm = object(g, &gp, &["hyps", "concl"])?;
            let mut hyps = Vec::new();
            for (k, h) in array(gm, &gp, "hyps")?.iter().enumerate() {
                let hp = format!("{gp}/hyps/{k}");
                let hm = object(h, &hp, &["name", "type"])?;
                let name = string(hm, &hp, "name")?;
                if name.is_empty() {
                    return Err(schema(&format!("{hp}/name"), "empty name"));
                }
                hyps.push(TraceHyp {
                    name,
                    ty: string(hm, &hp, "type")?,
                });
            }
            goals.push(TraceGoal {
                hyps,
                concl: string(gm, &gp, "concl")?,
            });
        }
        steps.push(TraceStep { sentence, goals });
    }
    Ok(TraceProof {
        kind,
        name,
        statement,
        completion,
        steps,
    })
}

/// Pretty-printed JSON in schema field order.
pub fn serialize_trace(doc: &TraceDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("trace documents always serialize");
    s.push('\n');
    s
}

/// Exports kernel trees as a trace. Steps stop at the first error node; an
/// unfinished proof is exported as `Admitted`.
pub fn from_trees(source_file: &str, trees: &[ProofTree]) -> TraceDocument {
    let goal = |g: &GoalView| TraceGoal {
        hyps: g
            .hyps
            .iter()
            .map(|h| TraceHyp {
                name: h.name.clone(),
                ty: h.assertion.to_text(),
            })
            .collect(),
        concl: g.concl.to_text(),
    };
    let proofs = trees
        .iter()
        .map(|t| TraceProof {
            kind: t.label.kind,
            name: t.label.name.clone(),
            statement: t.label.statement_text.clone(),
            completion: t.label.completion.unwrap_or(Completion::Admitted),
            steps: t
                .nodes
                .iter()
                .take_while(|n| n.error.is_none())
                .map(|n| TraceStep {
                    sentence: if n.is_root() {
                        header_text(&t.label)
                    } else {
                        n.sentence.text.clone()
                    },
                    goals: n.post_focused.iter().map(goal).collect(),
                })
                .collect(),
        })
        .collect();
    TraceDocument {
        psv_trace_version: TRACE_VERSION,
        source_file: source_file.to_string(),
        proofs,
    }
}

fn placeholder(id: GoalId) -> Goal {
    Goal::new(id, Vec::new(), Formula::True)
}

/// Focus-engine replay with stand-in goals: only goal counts matter.
struct Replay {
    state: ProofState,
    fresh: Fresh,
}

impl Replay {
    fn view(&mut self, goals: &[TraceGoal]) -> (Vec<GoalView>, usize) {
        let views = goals
            .iter()
            .zip(self.state.focused.iter().map(|g| g.id))
            .map(|(g, id)| GoalView {
                id,
                hyps: g
                    .hyps
                    .iter()
                    .map(|h| HypView {
                        name: h.name.clone(),
                        assertion: Assertion::from_text(&h.ty),
                    })
                    .collect(),
                concl: Assertion::Opaque(g.concl.clone()),
            })
            .collect();
        (views, self.state.unfocused_count())
    }

    /// Makes the focused goals match the trace's count, keeping known ids.
    fn resync(&mut self, n: usize, span: Span, diags: &mut Vec<Diagnostic>) {
        let have = self.state.focused.len();
        if have == n {
            return;
        }
        diags.push(inconsistent(
            span,
            format!("trace shows {n} focused goal(s), structure implies {have}"),
        ));
        self.state.focused.truncate(n);
        while self.state.focused.len() < n {
            let id = self.fresh.goal_id();
            self.state.focused.push(placeholder(id));
        }
    }
}

fn inconsistent(span: Span, message: impl Into<String>) -> Diagnostic {
    Diagnostic::error("InconsistentTrace", span, message)
}

fn step_span(line: usize, text: &str) -> Span {
    Span {
        start_line: line,
        start_col: 1,
        end_line: line,
        end_col: text.chars().count().max(1),
    }
}

/// Builds one tree per traced proof. Spans refer to step numbers counted
/// across the whole document, starting at 1.
pub fn trace_to_trees(doc: &TraceDocument) -> Vec<ProofTree> {
    let mut line = 0;
    doc.proofs
        .iter()
        .map(|p| {
            let tree = trace_tree(p, line);
            line += p.steps.len();
            tree
        })
        .collect()
}

fn trace_tree(p: &TraceProof, first_line: usize) -> ProofTree {
    let label = ProofLabel {
        kind: p.kind,
        name: p.name.clone(),
        statement_text: p.statement.clone(),
        statement: None,
        completion: Some(p.completion),
    };
    let mut diagnostics = Vec::new();
    let mut warnings = Vec::new();
    let header_text = header_text(&label);
    let header = Sentence {
        span: step_span(first_line + 1, &header_text),
        text: header_text,
        range: 0..0,
        kind: SentenceKind::StatementHeader {
            kind: p.kind,
            name: p.name.clone(),
            statement_text: p.statement.clone(),
        },
    };

    let mut fresh = Fresh::new();
    let goals: Vec<Goal> = p.steps[0]
        .goals
        .iter()
        .map(|_| placeholder(fresh.goal_id()))
        .collect();
    let mut r = Replay {
        state: ProofState::from_goals(goals),
        fresh,
    };
    let mut builder = TreeBuilder::new(&header, r.view(&p.steps[0].goals));

    for (i, step) in p.steps.iter().enumerate().skip(1) {
        let span = step_span(first_line + i + 1, &step.sentence);
        let kind = classify(&step.sentence).unwrap_or_else(|e| {
            diagnostics.push(inconsistent(span, e.to_string()));
            SentenceKind::Tactic(step.sentence.clone())
        });
        let sentence = Sentence {
            text: step.sentence.clone(),
            span,
            range: 0..0,
            kind: kind.clone(),
        };
        match kind {
            SentenceKind::ProofOpen | SentenceKind::ProofEnd(_) => continue,
            SentenceKind::Tactic(body) | SentenceKind::OtherVernacular(body) => {
                let Some(target) = r.state.focused.first().map(|g| g.id) else {
                    let diag = inconsistent(span, "tactic step without a focused goal");
                    diagnostics.push(diag.clone());
                    r.resync(step.goals.len(), span, &mut Vec::new());
                    builder.error(&sentence, r.view(&step.goals), diag);
                    continue;
                };
                let before = r.state.focused.len();
                let after = step.goals.len();
                let outcome = if after < before {
                    if after + 1 < before {
                        diagnostics.push(inconsistent(
                            span,
                            format!("goals drop from {before} to {after} in one step"),
                        ));
                    }
                    if parse_tactic(&body) == Ok(Tactic::AdmitGoal) {
                        TacticOutcome::ClosedAdmitted
                    } else {
                        TacticOutcome::Closed
                    }
                } else {
                    let k = after + 1 - before;
                    let goals = (0..k)
                        .map(|j| placeholder(if j == 0 { target } else { r.fresh.goal_id() }))
                        .collect();
                    TacticOutcome::Subgoals(goals)
                };
                let (next, effect): (ProofState, GoalEffect) = r.state.apply_outcome(outcome);
                r.state = next;
                r.resync(after, span, &mut diagnostics);
                builder.tactic(&sentence, r.view(&step.goals), &effect);
            }
            SentenceKind::StatementHeader { .. } => {
                diagnostics.push(inconsistent(span, "statement inside a proof"));
            }
            kind => {
                let token = Structural::from_kind(&kind).expect("remaining kinds are structural");
                match r.state.step_structural(token, span) {
                    Ok((next, w)) => {
                        r.state = next;
                        warnings.extend(w);
                        r.resync(step.goals.len(), span, &mut diagnostics);
                        let post = r.state.clone();
                        builder.structural(&sentence, token, &post, r.view(&step.goals));
                    }
                    Err(e) => {
                        let diag = inconsistent(span, e.to_string());
                        diagnostics.push(diag.clone());
                        r.resync(step.goals.len(), span, &mut Vec::new());
                        builder.error(&sentence, r.view(&step.goals), diag);
                    }
                }
            }
        }
    }
    if let Err(e) = r.state.finalize(p.completion) {
        let last = first_line + p.steps.len();
        diagnostics.push(inconsistent(
            step_span(last, ""),
            format!("{} does not hold: {e}", p.completion.keyword()),
        ));
    }
    let mut tree = ProofTree {
        label,
        nodes: builder.finish(),
        diagnostics,
        warnings,
    };
    analyze(&mut tree);
    tree
}
