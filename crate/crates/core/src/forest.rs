//! Proof trees: one per proof in a file, built by replaying the script
//! through the kernel, and their linearization into table rows.
//!
//! Nodes live in an arena in script order, so the arena index is also the
//! pre-order position. Node 0 is the synthetic statement node.
//!
//! Branching follows the structure of the script: a bullet, `{` or `Focus`
//! hangs below the tactic that created the goals it selects; the tactics
//! that follow hang below it. Closing a brace or `Unfocus` adds a node next
//! to the matching opener.

use std::fmt;

use crate::analyze::{analyze, Annotation, Warning};
use crate::focus::{FocusError, GoalEffect, ProofState, Structural};
use crate::formula::{alpha_equal, format_formula, parse_formula, Formula, Style};
use crate::latex::RenderOptions;
use crate::script::{Completion, Sentence, SentenceKind, Span, TheoremKind};
use crate::tactic::{parse_tactic, Fresh, Goal, GoalId, HypType, Lemmas};

pub type NodeId = usize;

/// The content of a hypothesis or conclusion as displayed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Assertion {
    Formula(Formula),
    /// A term variable with no printed type.
    Variable,
    /// Text supplied by a trace.
    Opaque(String),
}

impl Assertion {
    /// Alpha-equality for formulas, string equality for opaque text.
    pub fn same(&self, other: &Assertion) -> bool {
        match (self, other) {
            (Assertion::Formula(a), Assertion::Formula(b)) => alpha_equal(a, b),
            (Assertion::Variable, Assertion::Variable) => true,
            (Assertion::Opaque(a), Assertion::Opaque(b)) => a == b,
            _ => false,
        }
    }

    /// Plain-text form; variables print as `_`.
    pub fn to_text(&self) -> String {
        match self {
            Assertion::Formula(f) => format_formula(f, Style::Ascii),
            Assertion::Variable => "_".to_string(),
            Assertion::Opaque(s) => s.clone(),
        }
    }

    /// Reads trace text: `_` is a variable, anything else stays opaque.
    pub fn from_text(text: &str) -> Assertion {
        if text.trim() == "_" {
            Assertion::Variable
        } else {
            Assertion::Opaque(text.to_string())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypView {
    pub name: String,
    pub assertion: Assertion,
}

/// A goal as it appears in a snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalView {
    pub id: GoalId,
    pub hyps: Vec<HypView>,
    pub concl: Assertion,
}

impl From<&Goal> for GoalView {
    fn from(g: &Goal) -> GoalView {
        GoalView {
            id: g.id,
            hyps: g
                .hyps
                .iter()
                .map(|h| HypView {
                    name: h.name.clone(),
                    assertion: match &h.ty {
                        HypType::Var => Assertion::Variable,
                        HypType::Prop(f) => Assertion::Formula(f.clone()),
                    },
                })
                .collect(),
            concl: Assertion::Formula(g.concl.clone()),
        }
    }
}

impl GoalView {
    pub fn hyp(&self, name: &str) -> Option<&HypView> {
        self.hyps.iter().find(|h| h.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Note,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: &str, span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            code: code.to_string(),
            span,
            message: message.into(),
        }
    }

    pub fn note(code: &str, span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Note,
            code: code.to_string(),
            span,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: [{}] {}", self.span, self.code, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofLabel {
    pub kind: TheoremKind,
    pub name: String,
    pub statement_text: String,
    /// Absent for trace input.
    pub statement: Option<Formula>,
    /// Set once the proof ends successfully.
    pub completion: Option<Completion>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofNode {
    pub sentence: Sentence,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub depth: usize,
    /// Goal acted on by a tactic, or selected by a focusing token.
    pub target_goal: Option<GoalId>,
    pub post_focused: Vec<GoalView>,
    pub unfocused_count: usize,
    /// Filled when a tactic splits a goal into two or more.
    pub produced_goal_ids: Vec<GoalId>,
    pub closed_goal: bool,
    pub annotations: Vec<Annotation>,
    pub error: Option<Diagnostic>,
}

impl ProofNode {
    pub fn is_root(&self) -> bool {
        self.parent.is_none()
    }

    pub fn goal_count(&self) -> usize {
        self.post_focused.len() + self.unfocused_count
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofTree {
    pub label: ProofLabel,
    /// Script order; index 0 is the statement node.
    pub nodes: Vec<ProofNode>,
    pub diagnostics: Vec<Diagnostic>,
    /// Structural warnings from the focus engine.
    pub warnings: Vec<Warning>,
}

impl ProofTree {
    pub fn root(&self) -> &ProofNode {
        &self.nodes[0]
    }

    /// Node ids in pre-order.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }

    pub fn has_errors(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.severity == Severity::Error)
    }
}

/// What the right-hand column shows for a row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateView {
    Goals {
        goals: Vec<GoalView>,
        unfocused: usize,
    },
    /// Only the number of goals created.
    Hidden(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Statement,
    Tactic,
    Structural,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub kind: RowKind,
    pub depth: usize,
    pub sentence_text: String,
    pub state_view: StateView,
    pub annotations: Vec<Annotation>,
    pub goal_count: usize,
    pub closed_goal: bool,
    pub error: Option<String>,
}

struct Branch {
    node: NodeId,
    anchor: NodeId,
    last_tactic: Option<NodeId>,
}

/// Arena builder keeping one branch per focus frame.
pub(crate) struct TreeBuilder {
    nodes: Vec<ProofNode>,
    branches: Vec<Branch>,
}

pub(crate) fn snapshot(state: &ProofState) -> (Vec<GoalView>, usize) {
    (
        state.focused.iter().map(GoalView::from).collect(),
        state.unfocused_count(),
    )
}

fn bare_node(sentence: &Sentence, depth: usize, view: (Vec<GoalView>, usize)) -> ProofNode {
    ProofNode {
        sentence: sentence.clone(),
        parent: None,
        children: Vec::new(),
        depth,
        target_goal: None,
        post_focused: view.0,
        unfocused_count: view.1,
        produced_goal_ids: Vec::new(),
        closed_goal: false,
        annotations: Vec::new(),
        error: None,
    }
}

impl TreeBuilder {
    pub(crate) fn new(header: &Sentence, view: (Vec<GoalView>, usize)) -> TreeBuilder {
        let mut root = bare_node(header, 0, view);
        root.target_goal = root.post_focused.first().map(|g| g.id);
        TreeBuilder {
            nodes: vec![root],
            branches: vec![Branch {
                node: 0,
                anchor: 0,
                last_tactic: None,
            }],
        }
    }

    fn attach(&mut self, parent: NodeId, mut node: ProofNode) -> NodeId {
        let id = self.nodes.len();
        node.parent = Some(parent);
        self.nodes[parent].children.push(id);
        self.nodes.push(node);
        id
    }

    fn top(&self) -> &Branch {
        self.branches.last().expect("root branch")
    }

    pub(crate) fn tactic(
        &mut self,
        sentence: &Sentence,
        view: (Vec<GoalView>, usize),
        effect: &GoalEffect,
    ) -> NodeId {
        let mut node = bare_node(sentence, self.branches.len() - 1, view);
        node.target_goal = Some(effect.target);
        node.produced_goal_ids = effect.produced.clone();
        node.closed_goal = effect.closed;
        let parent = self.top().node;
        let id = self.attach(parent, node);
        self.branches.last_mut().unwrap().last_tactic = Some(id);
        id
    }

    /// Adds a structural node; `post` is the state after the step.
    pub(crate) fn structural(
        &mut self,
        sentence: &Sentence,
        token: Structural,
        post: &ProofState,
        view: (Vec<GoalView>, usize),
    ) -> NodeId {
        let target = view.0.first().map(|g| g.id);
        let frames = post.stack.len();
        let pushed = !matches!(token, Structural::BraceClose | Structural::Unfocus)
            && post.stack.last().map(|f| f.opened_at) == Some(post.step_index);
        match token {
            Structural::BraceClose | Structural::Unfocus => {
                let j = frames;
                self.branches.truncate(j + 1);
                let closed = self.branches.pop().expect("closed frame branch");
                let node = bare_node(sentence, j, view);
                self.attach(closed.anchor, node)
            }
            _ if pushed => {
                let top = self.top();
                let anchor = top.last_tactic.unwrap_or(top.node);
                let mut node = bare_node(sentence, frames - 1, view);
                node.target_goal = target;
                let id = self.attach(anchor, node);
                self.branches.truncate(frames - 1);
                self.branches.push(Branch {
                    node: id,
                    anchor,
                    last_tactic: None,
                });
                id
            }
            _ => {
                let i = frames - 1;
                self.branches.truncate(i + 1);
                let anchor = self.branches[i].anchor;
                let mut node = bare_node(sentence, i, view);
                node.target_goal = target;
                let id = self.attach(anchor, node);
                let b = &mut self.branches[i];
                b.node = id;
                b.last_tactic = None;
                id
            }
        }
    }

    pub(crate) fn error(
        &mut self,
        sentence: &Sentence,
        view: (Vec<GoalView>, usize),
        diag: Diagnostic,
    ) -> NodeId {
        let mut node = bare_node(sentence, self.branches.len() - 1, view);
        node.error = Some(diag);
        let parent = self.top().node;
        self.attach(parent, node)
    }

    pub(crate) fn finish(self) -> Vec<ProofNode> {
        self.nodes
    }
}

/// Proof trees of one file plus diagnostics outside any proof.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Forest {
    pub trees: Vec<ProofTree>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Forest {
    /// Every diagnostic, file-level first, then per proof.
    pub fn all_diagnostics(&self) -> Vec<&Diagnostic> {
        let mut all: Vec<&Diagnostic> = self.diagnostics.iter().collect();
        for t in &self.trees {
            all.extend(t.diagnostics.iter());
        }
        all
    }
}

fn focus_diag(e: &FocusError, span: Span) -> Diagnostic {
    Diagnostic::error(e.code(), span, e.to_string())
}

/// Replays every proof of a file through the kernel.
///
/// Completed proofs become available to `apply` and `exact` in later
/// proofs. Trees come back analyzed.
pub fn build_proof_trees(sentences: &[Sentence]) -> Forest {
    let mut forest = Forest::default();
    let mut lemmas = Lemmas::default();
    let mut i = 0;
    while i < sentences.len() {
        let s = &sentences[i];
        match &s.kind {
            SentenceKind::StatementHeader { .. } => {
                let end = sentences[i + 1..]
                    .iter()
                    .position(|t| {
                        matches!(
                            t.kind,
                            SentenceKind::ProofEnd(_) | SentenceKind::StatementHeader { .. }
                        )
                    })
                    .map(|p| i + 1 + p);
                let stop = match end {
                    Some(e) if matches!(sentences[e].kind, SentenceKind::ProofEnd(_)) => e + 1,
                    Some(e) => e,
                    None => sentences.len(),
                };
                let mut tree = build_one(&sentences[i..stop], &lemmas);
                analyze(&mut tree);
                if let (Some(_), Some(stmt)) = (tree.label.completion, &tree.label.statement) {
                    lemmas.insert(&tree.label.name, stmt.clone());
                }
                forest.trees.push(tree);
                i = stop;
            }
            SentenceKind::OtherVernacular(text) => {
                forest.diagnostics.push(Diagnostic::note(
                    "SkippedVernacular",
                    s.span,
                    format!("skipped `{}`", first_words(text)),
                ));
                i += 1;
            }
            _ => {
                forest.diagnostics.push(Diagnostic::error(
                    "OutsideProof",
                    s.span,
                    format!("`{}` outside of a proof", first_words(&s.text)),
                ));
                i += 1;
            }
        }
    }
    forest
}

fn first_words(text: &str) -> String {
    let flat = crate::script::strip_comments(text);
    let mut words: Vec<&str> = flat.split_whitespace().take(4).collect();
    if flat.split_whitespace().count() > 4 {
        words.push("...");
    }
    words.join(" ")
}

/// Builds the tree of one header..end region.
fn build_one(region: &[Sentence], lemmas: &Lemmas) -> ProofTree {
    let header = &region[0];
    let SentenceKind::StatementHeader {
        kind,
        name,
        statement_text,
    } = &header.kind
    else {
        unreachable!("region starts with a header")
    };
    let mut label = ProofLabel {
        kind: *kind,
        name: name.clone(),
        statement_text: statement_text.clone(),
        statement: None,
        completion: None,
    };
    let mut diagnostics = Vec::new();
    let mut warnings = Vec::new();

    let statement = match parse_formula(statement_text) {
        Ok(f) => f,
        Err(e) => {
            let diag = Diagnostic::error("StatementParse", header.span, e.to_string());
            let mut root = bare_node(header, 0, (Vec::new(), 0));
            root.error = Some(diag.clone());
            diagnostics.push(diag);
            return ProofTree {
                label,
                nodes: vec![root],
                diagnostics,
                warnings,
            };
        }
    };
    label.statement = Some(statement.clone());

    let mut fresh = Fresh::new();
    let mut state = ProofState::init(Goal::new(fresh.goal_id(), Vec::new(), statement));
    let mut builder = TreeBuilder::new(header, snapshot(&state));
    let mut ended = false;

    for s in &region[1..] {
        match &s.kind {
            SentenceKind::ProofOpen => {}
            SentenceKind::ProofEnd(c) => {
                ended = true;
                match state.finalize(*c) {
                    Ok(c) => label.completion = Some(c),
                    Err(e) => diagnostics.push(focus_diag(&e, s.span)),
                }
            }
            SentenceKind::Tactic(body) => {
                let step = parse_tactic(body)
                    .map_err(FocusError::from)
                    .and_then(|t| state.step_tactic(&t, lemmas, &mut fresh));
                match step {
                    Ok((next, effect)) => {
                        state = next;
                        builder.tactic(s, snapshot(&state), &effect);
                    }
                    Err(e) => {
                        let diag = focus_diag(&e, s.span);
                        builder.error(s, snapshot(&state), diag.clone());
                        diagnostics.push(diag);
                        ended = true;
                        break;
                    }
                }
            }
            kind => {
                let token =
                    Structural::from_kind(kind).expect("structural or tactic inside a proof");
                match state.step_structural(token, s.span) {
                    Ok((next, w)) => {
                        state = next;
                        warnings.extend(w);
                        builder.structural(s, token, &state, snapshot(&state));
                    }
                    Err(e) => {
                        let diag = focus_diag(&e, s.span);
                        builder.error(s, snapshot(&state), diag.clone());
                        diagnostics.push(diag);
                        ended = true;
                        break;
                    }
                }
            }
        }
    }
    if !ended {
        let last = region.last().unwrap_or(header);
        diagnostics.push(Diagnostic::error(
            "UnterminatedProof",
            last.span,
            format!("proof of `{}` has no Qed, Admitted or Defined", label.name),
        ));
    }
    ProofTree {
        label,
        nodes: builder.finish(),
        diagnostics,
        warnings,
    }
}

/// Flattens a tree into rows in script order, applying the hiding options.
pub fn linearize(tree: &ProofTree, opts: &RenderOptions) -> Vec<Row> {
    tree.preorder()
        .into_iter()
        .map(|id| {
            let node = &tree.nodes[id];
            let kind = if node.error.is_some() {
                RowKind::Error
            } else if node.is_root() {
                RowKind::Statement
            } else if node.sentence.kind.is_structural() {
                RowKind::Structural
            } else {
                RowKind::Tactic
            };
            let hidden_created = node.annotations.iter().find_map(|a| match a {
                Annotation::HiddenCreatedGoals(k) => Some(*k),
                _ => None,
            });
            let state_view = match hidden_created {
                Some(k) if opts.hide_bullet_created => StateView::Hidden(k),
                _ => {
                    let goals = node
                        .post_focused
                        .iter()
                        .map(|g| {
                            let mut g = g.clone();
                            if opts.hide_invariant {
                                g.hyps.retain(|h| {
                                    !node.annotations.contains(&Annotation::HiddenInvariantHyp(
                                        g.id,
                                        h.name.clone(),
                                    ))
                                });
                            }
                            g
                        })
                        .collect();
                    StateView::Goals {
                        goals,
                        unfocused: node.unfocused_count,
                    }
                }
            };
            Row {
                kind,
                depth: node.depth,
                sentence_text: if node.is_root() {
                    header_text(&tree.label)
                } else {
                    node.sentence.text.clone()
                },
                state_view,
                annotations: node.annotations.clone(),
                goal_count: node.goal_count(),
                closed_goal: node.closed_goal,
                error: node.error.as_ref().map(|d| d.message.clone()),
            }
        })
        .collect()
}

/// `Lemma name : statement.` with whitespace collapsed.
pub fn header_text(label: &ProofLabel) -> String {
    format!(
        "{} {} : {}.",
        label.kind.keyword(),
        label.name,
        label.statement_text
    )
}
