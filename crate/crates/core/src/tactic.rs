//! Goals, hypotheses and the semantics of the supported tactics.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::formula::{
    alpha_equal, match_formula, parse_term, substitute, substitute_all, Formula, Term,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GoalId(pub u32);

impl fmt::Display for GoalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// What a context entry declares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HypType {
    /// A term variable (`x : _`).
    Var,
    Prop(Formula),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypothesis {
    pub name: String,
    pub ty: HypType,
    /// Step at which the entry entered the context.
    pub intro_step: usize,
}

impl Hypothesis {
    pub fn prop(name: &str, f: Formula) -> Hypothesis {
        Hypothesis {
            name: name.to_string(),
            ty: HypType::Prop(f),
            intro_step: 0,
        }
    }

    pub fn var(name: &str) -> Hypothesis {
        Hypothesis {
            name: name.to_string(),
            ty: HypType::Var,
            intro_step: 0,
        }
    }

    pub fn formula(&self) -> Option<&Formula> {
        match &self.ty {
            HypType::Prop(f) => Some(f),
            HypType::Var => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Goal {
    pub id: GoalId,
    pub hyps: Vec<Hypothesis>,
    pub concl: Formula,
}

impl Goal {
    pub fn new(id: GoalId, hyps: Vec<Hypothesis>, concl: Formula) -> Goal {
        Goal { id, hyps, concl }
    }

    pub fn hyp(&self, name: &str) -> Option<&Hypothesis> {
        self.hyps.iter().find(|h| h.name == name)
    }

    fn position(&self, name: &str) -> Result<usize, TacticError> {
        self.hyps
            .iter()
            .position(|h| h.name == name)
            .ok_or_else(|| TacticError::Failure(format!("no hypothesis named `{name}`")))
    }

    /// Names that a fresh identifier must avoid.
    fn used_names(&self) -> BTreeSet<String> {
        let mut used: BTreeSet<String> = self.hyps.iter().map(|h| h.name.clone()).collect();
        for h in &self.hyps {
            if let Some(f) = h.formula() {
                used.extend(f.free_vars());
            }
        }
        used.extend(self.concl.free_vars());
        used
    }
}

/// Goal-id allocation and step counter for one proof.
#[derive(Debug, Clone, Default)]
pub struct Fresh {
    next_goal: u32,
    pub step: usize,
}

impl Fresh {
    pub fn new() -> Fresh {
        Fresh::default()
    }

    pub fn goal_id(&mut self) -> GoalId {
        let id = GoalId(self.next_goal);
        self.next_goal += 1;
        id
    }
}

/// `base`, `base0`, `base1`, ... : the first one not in `used`.
pub fn fresh_name(base: &str, used: &BTreeSet<String>) -> String {
    if !used.contains(base) {
        return base.to_string();
    }
    (0..)
        .map(|i| format!("{base}{i}"))
        .find(|n| !used.contains(n))
        .unwrap()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntroPattern {
    /// `[a b]`
    Conj(Vec<String>),
    /// `[a | b]`
    Disj(Vec<Option<String>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MovePosition {
    Before,
    After,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tactic {
    Intro(Option<String>),
    Intros(Vec<String>),
    Exact(String),
    Assumption,
    Apply(String),
    Split,
    Left,
    Right,
    ExistsWitness(Term),
    Destruct(String, Option<IntroPattern>),
    Reflexivity,
    Exfalso,
    Contradiction,
    Clear(Vec<String>),
    Rename(String, String),
    Move(String, MovePosition, String),
    AdmitGoal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TacticOutcome {
    Closed,
    /// Never empty; premise order.
    Subgoals(Vec<Goal>),
    ClosedAdmitted,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TacticError {
    #[error("unsupported tactic `{0}`")]
    UnknownTactic(String),
    #[error("malformed tactic: {0}")]
    MalformedTactic(String),
    #[error("{0}")]
    Failure(String),
    #[error("cannot infer an instance for `{0}`")]
    UnresolvedInstance(String),
}

impl TacticError {
    pub fn code(&self) -> &'static str {
        match self {
            TacticError::UnknownTactic(_) => "UnknownTactic",
            TacticError::MalformedTactic(_) => "MalformedTactic",
            TacticError::Failure(_) => "TacticFailure",
            TacticError::UnresolvedInstance(_) => "UnresolvedInstance",
        }
    }
}

fn fail<T>(msg: impl Into<String>) -> Result<T, TacticError> {
    Err(TacticError::Failure(msg.into()))
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

fn ident(word: &str, tactic: &str) -> Result<String, TacticError> {
    if is_ident(word) {
        Ok(word.to_string())
    } else {
        Err(TacticError::MalformedTactic(format!(
            "`{tactic}` expects an identifier, found `{word}`"
        )))
    }
}

fn parse_pattern(text: &str) -> Result<IntroPattern, TacticError> {
    let malformed = || TacticError::MalformedTactic(format!("bad intro pattern `{text}`"));
    let inner = text
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(malformed)?;
    if inner.contains('[') || inner.contains(']') {
        return Err(malformed());
    }
    if inner.contains('|') {
        inner
            .split('|')
            .map(|part| match part.trim() {
                "" => Ok(None),
                w if is_ident(w) => Ok(Some(w.to_string())),
                _ => Err(malformed()),
            })
            .collect::<Result<_, _>>()
            .map(IntroPattern::Disj)
    } else {
        inner
            .split_whitespace()
            .map(|w| {
                if is_ident(w) {
                    Ok(w.to_string())
                } else {
                    Err(malformed())
                }
            })
            .collect::<Result<_, _>>()
            .map(IntroPattern::Conj)
    }
}

/// Parses the body of a tactic sentence (without the final period).
pub fn parse_tactic(body: &str) -> Result<Tactic, TacticError> {
    let body = body.trim();
    let (head, rest) = match body.split_once(char::is_whitespace) {
        Some((h, r)) => (h, r.trim()),
        None => (body, ""),
    };
    let words: Vec<&str> = rest.split_whitespace().collect();
    let no_args = |t: Tactic| {
        if words.is_empty() {
            Ok(t)
        } else {
            Err(TacticError::MalformedTactic(format!(
                "`{head}` takes no arguments"
            )))
        }
    };
    let one = |name: &str| -> Result<String, TacticError> {
        match words.as_slice() {
            [w] => ident(w, name),
            _ => Err(TacticError::MalformedTactic(format!(
                "`{name}` expects one identifier"
            ))),
        }
    };
    match head {
        "intro" => match words.as_slice() {
            [] => Ok(Tactic::Intro(None)),
            [w] => Ok(Tactic::Intro(Some(ident(w, head)?))),
            _ => Err(TacticError::MalformedTactic(
                "`intro` takes at most one name".into(),
            )),
        },
        "intros" => words
            .iter()
            .map(|w| ident(w, head))
            .collect::<Result<_, _>>()
            .map(Tactic::Intros),
        "exact" => one(head).map(Tactic::Exact),
        "apply" => one(head).map(Tactic::Apply),
        "assumption" => no_args(Tactic::Assumption),
        "split" => no_args(Tactic::Split),
        "left" => no_args(Tactic::Left),
        "right" => no_args(Tactic::Right),
        "reflexivity" => no_args(Tactic::Reflexivity),
        "exfalso" => no_args(Tactic::Exfalso),
        "contradiction" => no_args(Tactic::Contradiction),
        "admit" => no_args(Tactic::AdmitGoal),
        "exists" => parse_term(rest)
            .map(Tactic::ExistsWitness)
            .map_err(|e| TacticError::MalformedTactic(format!("bad witness: {e}"))),
        "destruct" => {
            let (target, pattern) = match rest.split_once(" as ") {
                Some((t, p)) => (t.trim(), Some(parse_pattern(p.trim())?)),
                None => (rest, None),
            };
            Ok(Tactic::Destruct(ident(target, head)?, pattern))
        }
        "clear" if !words.is_empty() => words
            .iter()
            .map(|w| ident(w, head))
            .collect::<Result<_, _>>()
            .map(Tactic::Clear),
        "rename" => match words.as_slice() {
            [old, "into", new] => Ok(Tactic::Rename(ident(old, head)?, ident(new, head)?)),
            _ => Err(TacticError::MalformedTactic(
                "expected `rename H into H'`".into(),
            )),
        },
        "move" => match words.as_slice() {
            [h, pos @ ("after" | "before"), anchor] => Ok(Tactic::Move(
                ident(h, head)?,
                if *pos == "after" {
                    MovePosition::After
                } else {
                    MovePosition::Before
                },
                ident(anchor, head)?,
            )),
            _ => Err(TacticError::MalformedTactic(
                "expected `move H after H'` or `move H before H'`".into(),
            )),
        },
        "clear" => Err(TacticError::MalformedTactic(
            "`clear` needs at least one name".into(),
        )),
        other => Err(TacticError::UnknownTactic(other.to_string())),
    }
}

/// Statements of previously completed proofs, usable by `apply`/`exact`.
#[derive(Debug, Clone, Default)]
pub struct Lemmas {
    statements: HashMap<String, Formula>,
}

impl Lemmas {
    pub fn insert(&mut self, name: &str, statement: Formula) {
        self.statements.insert(name.to_string(), statement);
    }

    pub fn get(&self, name: &str) -> Option<&Formula> {
        self.statements.get(name)
    }
}

/// Runs `t` on `g` with no lemmas in scope.
pub fn apply_tactic(g: &Goal, t: &Tactic, fresh: &mut Fresh) -> Result<TacticOutcome, TacticError> {
    apply_tactic_with(&Lemmas::default(), g, t, fresh)
}

/// Runs `t` on `g`. Single results keep the goal id; with several results
/// the first keeps it and the rest receive new ids.
pub fn apply_tactic_with(
    lemmas: &Lemmas,
    g: &Goal,
    t: &Tactic,
    fresh: &mut Fresh,
) -> Result<TacticOutcome, TacticError> {
    let step = fresh.step;
    let goals = match t {
        Tactic::Intro(name) => vec![intro(g, name.as_deref(), step)?],
        Tactic::Intros(names) if names.is_empty() => {
            let mut cur = g.clone();
            while matches!(cur.concl, Formula::Implies(..) | Formula::Forall(..)) {
                cur = intro(&cur, None, step)?;
            }
            vec![cur]
        }
        Tactic::Intros(names) => {
            let mut cur = g.clone();
            for n in names {
                cur = intro(&cur, Some(n), step)?;
            }
            vec![cur]
        }
        Tactic::Exact(name) => {
            let stmt = match g.hyp(name) {
                Some(h) => h.formula(),
                None => lemmas.get(name),
            };
            return match stmt {
                Some(f) if alpha_equal(f, &g.concl) => Ok(TacticOutcome::Closed),
                None if name == "I" && g.concl == Formula::True => Ok(TacticOutcome::Closed),
                Some(_) => fail(format!("`{name}` does not prove the goal")),
                None => fail(format!("no hypothesis named `{name}`")),
            };
        }
        Tactic::Assumption => {
            return if g
                .hyps
                .iter()
                .any(|h| h.formula().is_some_and(|f| alpha_equal(f, &g.concl)))
            {
                Ok(TacticOutcome::Closed)
            } else {
                fail("no matching hypothesis")
            };
        }
        Tactic::Apply(name) => {
            let stmt = match g.hyp(name) {
                Some(h) => h
                    .formula()
                    .ok_or_else(|| TacticError::Failure(format!("`{name}` is not a proof")))?,
                None => lemmas
                    .get(name)
                    .ok_or_else(|| TacticError::Failure(format!("no hypothesis named `{name}`")))?,
            };
            let premises = apply_premises(stmt, &g.concl)?;
            if premises.is_empty() {
                return Ok(TacticOutcome::Closed);
            }
            premises.into_iter().map(|p| g.with_concl(p)).collect()
        }
        Tactic::Split => match &g.concl {
            Formula::And(a, b) => vec![g.with_concl((**a).clone()), g.with_concl((**b).clone())],
            Formula::Iff(a, b) => vec![
                g.with_concl(Formula::implies((**a).clone(), (**b).clone())),
                g.with_concl(Formula::implies((**b).clone(), (**a).clone())),
            ],
            _ => return fail("goal is not a conjunction or equivalence"),
        },
        Tactic::Left | Tactic::Right => match &g.concl {
            Formula::Or(a, b) => {
                let side = if *t == Tactic::Left { a } else { b };
                vec![g.with_concl((**side).clone())]
            }
            _ => return fail("goal is not a disjunction"),
        },
        Tactic::ExistsWitness(w) => match &g.concl {
            Formula::Exists(x, body) => vec![g.with_concl(substitute(body, x, w))],
            _ => return fail("goal is not an existential"),
        },
        Tactic::Destruct(name, pattern) => return destruct(g, name, pattern.as_ref(), fresh),
        Tactic::Reflexivity => {
            return match &g.concl {
                Formula::Equal(a, b) if a == b => Ok(TacticOutcome::Closed),
                Formula::Iff(a, b) if alpha_equal(a, b) => Ok(TacticOutcome::Closed),
                _ => fail("goal is not a reflexive equation"),
            };
        }
        Tactic::Exfalso => vec![g.with_concl(Formula::False)],
        Tactic::Contradiction => {
            return if has_contradiction(g) {
                Ok(TacticOutcome::Closed)
            } else {
                fail("no contradiction in the context")
            };
        }
        Tactic::Clear(names) => {
            let mut out = g.clone();
            for n in names {
                let i = out.position(n)?;
                out.hyps.remove(i);
            }
            vec![out]
        }
        Tactic::Rename(old, new) => vec![rename(g, old, new)?],
        Tactic::Move(name, pos, anchor) => {
            let mut out = g.clone();
            let i = out.position(name)?;
            out.position(anchor)?;
            if name == anchor {
                return fail("cannot move a hypothesis relative to itself");
            }
            let h = out.hyps.remove(i);
            let j = out.position(anchor)?;
            let at = match pos {
                MovePosition::Before => j,
                MovePosition::After => j + 1,
            };
            out.hyps.insert(at, h);
            vec![out]
        }
        Tactic::AdmitGoal => return Ok(TacticOutcome::ClosedAdmitted),
    };
    Ok(TacticOutcome::Subgoals(assign_ids(g.id, goals, fresh)))
}

fn assign_ids(parent: GoalId, mut goals: Vec<Goal>, fresh: &mut Fresh) -> Vec<Goal> {
    for (i, goal) in goals.iter_mut().enumerate() {
        goal.id = if i == 0 { parent } else { fresh.goal_id() };
    }
    goals
}

impl Goal {
    fn with_concl(&self, concl: Formula) -> Goal {
        Goal {
            id: self.id,
            hyps: self.hyps.clone(),
            concl,
        }
    }
}

fn check_unused(g: &Goal, name: &str) -> Result<(), TacticError> {
    if g.hyp(name).is_some() {
        fail(format!("`{name}` is already used"))
    } else {
        Ok(())
    }
}

fn intro(g: &Goal, name: Option<&str>, step: usize) -> Result<Goal, TacticError> {
    let used = g.used_names();
    let mut out = g.clone();
    match &g.concl {
        Formula::Implies(a, b) => {
            let n = match name {
                Some(n) => {
                    check_unused(g, n)?;
                    n.to_string()
                }
                None => fresh_name("H", &used),
            };
            out.hyps.push(Hypothesis {
                name: n,
                ty: HypType::Prop((**a).clone()),
                intro_step: step,
            });
            out.concl = (**b).clone();
        }
        Formula::Not(a) => {
            let n = match name {
                Some(n) => {
                    check_unused(g, n)?;
                    n.to_string()
                }
                None => fresh_name("H", &used),
            };
            out.hyps.push(Hypothesis {
                name: n,
                ty: HypType::Prop((**a).clone()),
                intro_step: step,
            });
            out.concl = Formula::False;
        }
        Formula::Forall(x, body) => {
            let n = match name {
                Some(n) => {
                    check_unused(g, n)?;
                    if g.concl.free_vars().contains(n) {
                        return fail(format!("`{n}` is already used"));
                    }
                    n.to_string()
                }
                None => fresh_name(x, &used),
            };
            out.concl = substitute(body, x, &Term::Var(n.clone()));
            out.hyps.push(Hypothesis {
                name: n,
                ty: HypType::Var,
                intro_step: step,
            });
        }
        _ => return fail("no product to introduce"),
    }
    Ok(out)
}

/// Premises left to prove when applying `stmt` to `concl`.
fn apply_premises(stmt: &Formula, concl: &Formula) -> Result<Vec<Formula>, TacticError> {
    let mut vars = Vec::new();
    let mut body = stmt;
    while let Formula::Forall(x, b) = body {
        vars.push(x.clone());
        body = b;
    }
    // tails[n] is the conclusion left after peeling n premises.
    let mut premises = Vec::new();
    let mut tails = vec![body.clone()];
    let mut cur = body;
    loop {
        match cur {
            Formula::Implies(a, b) => {
                premises.push((**a).clone());
                tails.push((**b).clone());
                cur = b;
            }
            Formula::Not(a) => {
                premises.push((**a).clone());
                tails.push(Formula::False);
                break;
            }
            _ => break,
        }
    }
    for n in (0..tails.len()).rev() {
        let Some(sigma) = match_formula(&tails[n], concl, &vars) else {
            continue;
        };
        let used = &premises[..n];
        for v in &vars {
            if !sigma.contains_key(v) && used.iter().any(|p| p.free_vars().contains(v)) {
                return Err(TacticError::UnresolvedInstance(v.clone()));
            }
        }
        return Ok(used.iter().map(|p| substitute_all(p, &sigma)).collect());
    }
    fail("unable to unify the hypothesis with the goal")
}

fn has_contradiction(g: &Goal) -> bool {
    let props: Vec<&Formula> = g.hyps.iter().filter_map(|h| h.formula()).collect();
    if props.iter().any(|f| **f == Formula::False) {
        return true;
    }
    props.iter().any(|neg| {
        let negated = match neg {
            Formula::Not(a) => a,
            Formula::Implies(a, b) if **b == Formula::False => a,
            _ => return false,
        };
        props.iter().any(|p| alpha_equal(p, negated))
    })
}

fn rename(g: &Goal, old: &str, new: &str) -> Result<Goal, TacticError> {
    let i = g.position(old)?;
    if old != new && g.used_names().contains(new) {
        return fail(format!("`{new}` is already used"));
    }
    let mut out = g.clone();
    out.hyps[i].name = new.to_string();
    if out.hyps[i].ty == HypType::Var {
        let var = Term::Var(new.to_string());
        for h in &mut out.hyps {
            if let HypType::Prop(f) = &h.ty {
                h.ty = HypType::Prop(substitute(f, old, &var));
            }
        }
        out.concl = substitute(&g.concl, old, &var);
    }
    Ok(out)
}

fn pattern_name(pattern: Option<&IntroPattern>, i: usize) -> Option<String> {
    match pattern {
        Some(IntroPattern::Conj(names)) => names.get(i).cloned(),
        Some(IntroPattern::Disj(names)) => names.get(i).cloned().flatten(),
        None => None,
    }
}

fn destruct(
    g: &Goal,
    name: &str,
    pattern: Option<&IntroPattern>,
    fresh: &mut Fresh,
) -> Result<TacticOutcome, TacticError> {
    let i = g.position(name)?;
    let Some(f) = g.hyps[i].formula().cloned() else {
        return fail(format!("`{name}` is a variable"));
    };
    let step = fresh.step;
    let mut used = g.used_names();
    let take = |given: Option<String>, base: &str, used: &mut BTreeSet<String>| {
        let n = match given {
            Some(n) => {
                if used.contains(&n) && n != name {
                    return fail(format!("`{n}` is already used"));
                }
                n
            }
            None => fresh_name(base, used),
        };
        used.insert(n.clone());
        Ok(n)
    };
    let replace = |entries: Vec<Hypothesis>| {
        let mut out = g.clone();
        out.hyps.splice(i..=i, entries);
        out
    };
    let prop = |n: String, f: Formula| Hypothesis {
        name: n,
        ty: HypType::Prop(f),
        intro_step: step,
    };
    let check_conj = |arity: usize| match pattern {
        Some(IntroPattern::Disj(_)) => Err(TacticError::MalformedTactic(
            "disjunctive pattern on a non-disjunction".into(),
        )),
        Some(IntroPattern::Conj(ns)) if ns.len() > arity => Err(TacticError::MalformedTactic(
            "too many names in pattern".into(),
        )),
        _ => Ok(()),
    };
    let goals = match f {
        Formula::False => return Ok(TacticOutcome::Closed),
        Formula::And(a, b) | Formula::Iff(a, b) => {
            check_conj(2)?;
            let (a, b) = if matches!(g.hyps[i].formula(), Some(Formula::Iff(..))) {
                (
                    Formula::implies((*a).clone(), (*b).clone()),
                    Formula::implies(*b, *a),
                )
            } else {
                (*a, *b)
            };
            let n1 = take(pattern_name(pattern, 0), "H", &mut used)?;
            let n2 = take(pattern_name(pattern, 1), "H", &mut used)?;
            vec![replace(vec![prop(n1, a), prop(n2, b)])]
        }
        Formula::Or(a, b) => {
            if matches!(pattern, Some(IntroPattern::Conj(ns)) if !ns.is_empty()) {
                return Err(TacticError::MalformedTactic(
                    "conjunctive pattern on a disjunction".into(),
                ));
            }
            let mut left_used = used.clone();
            let n1 = take(pattern_name(pattern, 0), "H", &mut left_used)?;
            let n2 = take(pattern_name(pattern, 1), "H", &mut used)?;
            vec![replace(vec![prop(n1, *a)]), replace(vec![prop(n2, *b)])]
        }
        Formula::Exists(x, body) => {
            check_conj(2)?;
            let w = take(pattern_name(pattern, 0), &x, &mut used)?;
            let body = substitute(&body, &x, &Term::Var(w.clone()));
            let n = take(pattern_name(pattern, 1), "H", &mut used)?;
            let var = Hypothesis {
                name: w,
                ty: HypType::Var,
                intro_step: step,
            };
            vec![replace(vec![var, prop(n, body)])]
        }
        _ => return fail(format!("`{name}` cannot be destructed")),
    };
    Ok(TacticOutcome::Subgoals(assign_ids(g.id, goals, fresh)))
}
