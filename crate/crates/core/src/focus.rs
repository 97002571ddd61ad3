//! Proof-wide state and the branching rules of bullets, braces and
//! `Focus`/`Unfocus`.
//!
//! A [`ProofState`] is the list of focused goals plus a stack of frames.
//! Each non-root frame remembers the goals it set aside when it was opened.
//! Tactics only ever touch the first focused goal; structural tokens move
//! goals between the focused list and the frames.
//!
//! Bullets are scoped by the nearest enclosing brace or `Focus` frame: a
//! bullet symbol may be reused inside a brace even if an outer bullet with
//! the same symbol is still open.

use thiserror::Error;

use crate::analyze::{Warning, WarningCode};
use crate::script::{BulletSymbol, Completion, SentenceKind, Span};
use crate::tactic::{
    apply_tactic_with, Fresh, Goal, GoalId, Lemmas, Tactic, TacticError, TacticOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Root,
    Bullet(BulletSymbol, usize),
    Brace,
    Focus(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FocusFrame {
    pub kind: FrameKind,
    /// Goals set aside at this level, in order.
    pub pending: Vec<Goal>,
    /// Step index of the opening token.
    pub opened_at: usize,
}

/// A structural token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structural {
    Bullet(BulletSymbol, usize),
    BraceOpen,
    BraceClose,
    Focus(usize),
    Unfocus,
}

impl Structural {
    pub fn from_kind(kind: &SentenceKind) -> Option<Structural> {
        Some(match *kind {
            SentenceKind::Bullet { symbol, depth } => Structural::Bullet(symbol, depth),
            SentenceKind::BraceOpen => Structural::BraceOpen,
            SentenceKind::BraceClose => Structural::BraceClose,
            SentenceKind::Focus(n) => Structural::Focus(n),
            SentenceKind::Unfocus => Structural::Unfocus,
            _ => return None,
        })
    }
}

fn bullet_text(sym: BulletSymbol, depth: usize) -> String {
    std::iter::repeat_n(sym.as_char(), depth).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FocusError {
    #[error("no more goals")]
    NoFocusedGoal,
    #[error("the previous bullet `{bullet}` is not finished")]
    PreviousBulletUnfinished { bullet: String, opened_at: usize },
    #[error("no goal left for bullet `{0}`")]
    NoGoalForBullet(String),
    #[error("wrong bullet `{found}`: expected `{expected}`")]
    WrongBullet { found: String, expected: String },
    #[error("unfinished goals remain ({0} left)")]
    BraceNotClosed(usize),
    #[error("`}}` does not close a brace")]
    MismatchedBrace,
    #[error("Focus {n} out of range: {available} goal(s) focused")]
    FocusOutOfRange { n: usize, available: usize },
    #[error("`Unfocus` without a matching `Focus`")]
    MismatchedUnfocus,
    #[error("cannot unfocus: {0} goal(s) remain")]
    UnfocusUnfinished(usize),
    #[error("proof ends with {0} open goal(s)")]
    OpenGoalsAtQed(usize),
    #[error("admit used but proof ends with Qed")]
    AdmittedGoalAtQed,
    #[error("brace opened at step {0} is never closed")]
    UnclosedBrace(usize),
    #[error("Focus opened at step {0} is never unfocused")]
    UnclosedFocus(usize),
    #[error(transparent)]
    Tactic(#[from] TacticError),
}

impl FocusError {
    pub fn code(&self) -> &'static str {
        match self {
            FocusError::NoFocusedGoal => "NoFocusedGoal",
            FocusError::PreviousBulletUnfinished { .. } => "PreviousBulletUnfinished",
            FocusError::NoGoalForBullet(_) => "NoGoalForBullet",
            FocusError::WrongBullet { .. } => "WrongBullet",
            FocusError::BraceNotClosed(_) => "BraceNotClosed",
            FocusError::MismatchedBrace => "MismatchedBrace",
            FocusError::FocusOutOfRange { .. } => "FocusOutOfRange",
            FocusError::MismatchedUnfocus => "MismatchedUnfocus",
            FocusError::UnfocusUnfinished(_) => "UnfocusUnfinished",
            FocusError::OpenGoalsAtQed(_) => "OpenGoalsAtQed",
            FocusError::AdmittedGoalAtQed => "AdmittedGoalAtQed",
            FocusError::UnclosedBrace(_) => "UnclosedBrace",
            FocusError::UnclosedFocus(_) => "UnclosedFocus",
            FocusError::Tactic(e) => e.code(),
        }
    }
}

/// How a tactic step changed the goals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalEffect {
    /// The goal the tactic ran on.
    pub target: GoalId,
    /// Goals resulting from a split into two or more.
    pub produced: Vec<GoalId>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofState {
    pub focused: Vec<Goal>,
    /// Bottom is always the root frame.
    pub stack: Vec<FocusFrame>,
    pub admitted_any: bool,
    pub step_index: usize,
}

impl ProofState {
    pub fn init(root_goal: Goal) -> ProofState {
        ProofState::from_goals(vec![root_goal])
    }

    /// A fresh state with all `goals` focused.
    pub fn from_goals(goals: Vec<Goal>) -> ProofState {
        ProofState {
            focused: goals,
            stack: vec![FocusFrame {
                kind: FrameKind::Root,
                pending: Vec::new(),
                opened_at: 0,
            }],
            admitted_any: false,
            step_index: 0,
        }
    }

    /// Goals set aside in frames.
    pub fn unfocused_count(&self) -> usize {
        self.stack.iter().map(|f| f.pending.len()).sum()
    }

    pub fn total_goals(&self) -> usize {
        self.focused.len() + self.unfocused_count()
    }

    /// Non-root frames.
    pub fn depth(&self) -> usize {
        self.stack.len() - 1
    }

    fn top(&self) -> &FocusFrame {
        self.stack.last().expect("root frame")
    }

    /// Index of the nearest brace, focus or root frame.
    fn scope_start(&self) -> usize {
        self.stack
            .iter()
            .rposition(|f| !matches!(f.kind, FrameKind::Bullet(..)))
            .expect("root frame")
    }

    /// Runs a tactic on the first focused goal.
    pub fn step_tactic(
        &self,
        tactic: &Tactic,
        lemmas: &Lemmas,
        fresh: &mut Fresh,
    ) -> Result<(ProofState, GoalEffect), FocusError> {
        let first = self.focused.first().ok_or(FocusError::NoFocusedGoal)?;
        fresh.step = self.step_index + 1;
        let outcome = apply_tactic_with(lemmas, first, tactic, fresh)?;
        Ok(self.apply_outcome(outcome))
    }

    /// Replaces the first focused goal according to `outcome`.
    ///
    /// Panics if nothing is focused.
    pub fn apply_outcome(&self, outcome: TacticOutcome) -> (ProofState, GoalEffect) {
        let mut next = self.clone();
        next.step_index += 1;
        let old = next.focused.remove(0);
        let effect = match outcome {
            TacticOutcome::Closed | TacticOutcome::ClosedAdmitted => {
                if outcome == TacticOutcome::ClosedAdmitted {
                    next.admitted_any = true;
                }
                GoalEffect {
                    target: old.id,
                    produced: Vec::new(),
                    closed: true,
                }
            }
            TacticOutcome::Subgoals(goals) => {
                let produced = if goals.len() >= 2 {
                    goals.iter().map(|g| g.id).collect()
                } else {
                    Vec::new()
                };
                next.focused.splice(0..0, goals);
                GoalEffect {
                    target: old.id,
                    produced,
                    closed: false,
                }
            }
        };
        (next, effect)
    }

    /// Applies a bullet, brace or focus command.
    pub fn step_structural(
        &self,
        token: Structural,
        span: Span,
    ) -> Result<(ProofState, Vec<Warning>), FocusError> {
        let mut next = self.clone();
        next.step_index += 1;
        let at = next.step_index;
        let mut warnings = Vec::new();
        match token {
            Structural::Bullet(sym, depth) => {
                let text = bullet_text(sym, depth);
                let scope = next.scope_start();
                let found = (scope + 1..next.stack.len())
                    .rev()
                    .find(|&i| next.stack[i].kind == FrameKind::Bullet(sym, depth));
                match found {
                    None => {
                        if next.focused.is_empty() {
                            let top = next.top();
                            if let (FrameKind::Bullet(s, d), false) =
                                (top.kind, top.pending.is_empty())
                            {
                                return Err(FocusError::WrongBullet {
                                    found: text,
                                    expected: bullet_text(s, d),
                                });
                            }
                            return Err(FocusError::NoGoalForBullet(text));
                        }
                        if next.focused.len() == 1 {
                            warnings.push(Warning::new(
                                WarningCode::SuperfluousBullet,
                                span,
                                format!("bullet `{text}` focuses the only remaining goal"),
                            ));
                        }
                        next.push_frame(FrameKind::Bullet(sym, depth), 0, at);
                    }
                    Some(i) => {
                        let top = next.stack.len() - 1;
                        if !next.focused.is_empty() {
                            return Err(if i == top {
                                FocusError::PreviousBulletUnfinished {
                                    bullet: text,
                                    opened_at: next.stack[i].opened_at,
                                }
                            } else {
                                let FrameKind::Bullet(s, d) = next.stack[top].kind else {
                                    unreachable!("bullets only above the scope start")
                                };
                                FocusError::WrongBullet {
                                    found: text,
                                    expected: bullet_text(s, d),
                                }
                            });
                        }
                        if let Some(open) =
                            next.stack[i + 1..].iter().find(|f| !f.pending.is_empty())
                        {
                            let FrameKind::Bullet(s, d) = open.kind else {
                                unreachable!("bullets only above the scope start")
                            };
                            return Err(FocusError::WrongBullet {
                                found: text,
                                expected: bullet_text(s, d),
                            });
                        }
                        next.stack.truncate(i + 1);
                        let frame = next.stack.last_mut().unwrap();
                        if frame.pending.is_empty() {
                            return Err(FocusError::NoGoalForBullet(text));
                        }
                        let goal = frame.pending.remove(0);
                        next.focused.push(goal);
                    }
                }
            }
            Structural::BraceOpen => {
                if next.focused.is_empty() {
                    return Err(FocusError::NoFocusedGoal);
                }
                if next.focused.len() == 1 && next.top().kind != FrameKind::Root {
                    warnings.push(Warning::new(
                        WarningCode::SuperfluousBrace,
                        span,
                        "brace isolates a goal that is already isolated".to_string(),
                    ));
                }
                next.push_frame(FrameKind::Brace, 0, at);
            }
            Structural::BraceClose => {
                if !next.focused.is_empty() {
                    return Err(FocusError::BraceNotClosed(next.focused.len()));
                }
                let scope = next.scope_start();
                if next.stack[scope].kind != FrameKind::Brace {
                    return Err(FocusError::MismatchedBrace);
                }
                next.close_scope(scope, FocusError::BraceNotClosed)?;
            }
            Structural::Focus(n) => {
                if n == 0 || n > next.focused.len() {
                    return Err(FocusError::FocusOutOfRange {
                        n,
                        available: next.focused.len(),
                    });
                }
                warnings.push(Warning::new(
                    WarningCode::DeprecatedFocus,
                    span,
                    "`Focus` is deprecated, use bullets or braces".to_string(),
                ));
                if next.focused.len() == 1 {
                    warnings.push(Warning::new(
                        WarningCode::SuperfluousFocus,
                        span,
                        "`Focus` on the only remaining goal".to_string(),
                    ));
                }
                next.push_frame(FrameKind::Focus(n), n - 1, at);
            }
            Structural::Unfocus => {
                let scope = next.scope_start();
                if !matches!(next.stack[scope].kind, FrameKind::Focus(_)) {
                    return Err(FocusError::MismatchedUnfocus);
                }
                if !next.focused.is_empty() {
                    return Err(FocusError::UnfocusUnfinished(next.focused.len()));
                }
                next.close_scope(scope, FocusError::UnfocusUnfinished)?;
            }
        }
        Ok((next, warnings))
    }

    /// Opens a frame focusing `focused[idx]`; the rest become pending.
    fn push_frame(&mut self, kind: FrameKind, idx: usize, at: usize) {
        let goal = self.focused.remove(idx);
        let pending = std::mem::replace(&mut self.focused, vec![goal]);
        self.stack.push(FocusFrame {
            kind,
            pending,
            opened_at: at,
        });
    }

    /// Pops every frame down to and including `scope`, restoring its pending
    /// goals. Exhausted bullet frames above it close silently.
    fn close_scope(
        &mut self,
        scope: usize,
        unfinished: fn(usize) -> FocusError,
    ) -> Result<(), FocusError> {
        let left: usize = self.stack[scope + 1..]
            .iter()
            .map(|f| f.pending.len())
            .sum();
        if left > 0 {
            return Err(unfinished(left));
        }
        self.stack.truncate(scope + 1);
        let frame = self.stack.pop().expect("scope frame");
        self.focused = frame.pending;
        Ok(())
    }

    /// Checks the state at the end of a proof.
    pub fn finalize(&self, completion: Completion) -> Result<Completion, FocusError> {
        if completion == Completion::Admitted {
            return Ok(completion);
        }
        let open = self.total_goals();
        if open > 0 {
            return Err(FocusError::OpenGoalsAtQed(open));
        }
        for frame in &self.stack {
            match frame.kind {
                FrameKind::Brace => return Err(FocusError::UnclosedBrace(frame.opened_at)),
                FrameKind::Focus(_) => return Err(FocusError::UnclosedFocus(frame.opened_at)),
                _ => {}
            }
        }
        if self.admitted_any {
            return Err(FocusError::AdmittedGoalAtQed);
        }
        Ok(completion)
    }

    /// Checks the structural invariants: one root frame at the bottom,
    /// distinct goal ids, unique bullets within a brace scope.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.stack.first().map(|f| f.kind) != Some(FrameKind::Root)
            || self.stack[1..].iter().any(|f| f.kind == FrameKind::Root)
        {
            return Err("root frame must be unique and at the bottom".into());
        }
        let mut ids: Vec<GoalId> = self
            .focused
            .iter()
            .chain(self.stack.iter().flat_map(|f| f.pending.iter()))
            .map(|g| g.id)
            .collect();
        let n = ids.len();
        ids.sort();
        ids.dedup();
        if ids.len() != n {
            return Err("duplicate goal ids".into());
        }
        let mut scope: Vec<FrameKind> = Vec::new();
        for f in &self.stack {
            match f.kind {
                FrameKind::Bullet(..) => {
                    if scope.contains(&f.kind) {
                        return Err("bullet nested inside itself".into());
                    }
                    scope.push(f.kind);
                }
                _ => scope.clear(),
            }
        }
        Ok(())
    }
}
