//! Row annotations: invariant hypotheses, goals whose creation can be
//! hidden because bullets handle them, and structural warnings.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::forest::{Assertion, GoalView, NodeId, ProofTree};
use crate::script::{SentenceKind, Span};
use crate::tactic::GoalId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WarningCode {
    SuperfluousBullet,
    SuperfluousBrace,
    SuperfluousFocus,
    DeprecatedFocus,
}

impl WarningCode {
    pub fn as_str(self) -> &'static str {
        match self {
            WarningCode::SuperfluousBullet => "SuperfluousBullet",
            WarningCode::SuperfluousBrace => "SuperfluousBrace",
            WarningCode::SuperfluousFocus => "SuperfluousFocus",
            WarningCode::DeprecatedFocus => "DeprecatedFocus",
        }
    }
}

impl fmt::Display for WarningCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub code: WarningCode,
    pub span: Span,
    pub message: String,
}

impl Warning {
    pub fn new(code: WarningCode, span: Span, message: String) -> Warning {
        Warning {
            code,
            span,
            message,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Annotation {
    /// The hypothesis is introduced here and never changes afterwards.
    InvariantHyp(GoalId, String),
    /// An invariant hypothesis that may be left out of this row.
    HiddenInvariantHyp(GoalId, String),
    /// The goals created here are all picked up by bullets or braces.
    HiddenCreatedGoals(usize),
    Warn(Warning),
}

/// Computes all annotations and stores them on the nodes.
pub fn analyze(tree: &mut ProofTree) {
    let mut per_node: Vec<Vec<Annotation>> = vec![Vec::new(); tree.nodes.len()];
    for (n, a) in detect_invariants(tree)
        .into_iter()
        .chain(detect_bullet_handled(tree))
    {
        per_node[n].push(a);
    }
    for w in collect_warnings(tree) {
        if let Some(n) = tree
            .nodes
            .iter()
            .position(|node| node.sentence.span == w.span)
        {
            per_node[n].push(Annotation::Warn(w));
        }
    }
    for (node, anns) in tree.nodes.iter_mut().zip(per_node) {
        node.annotations = anns;
    }
}

/// Maps every goal id to the goal it was split from.
fn parents(tree: &ProofTree) -> HashMap<GoalId, GoalId> {
    let mut map = HashMap::new();
    for node in &tree.nodes {
        if let Some(t) = node.target_goal {
            for &p in &node.produced_goal_ids {
                if p != t {
                    map.insert(p, t);
                }
            }
        }
    }
    map
}

fn descends(mut g: GoalId, ancestor: GoalId, parents: &HashMap<GoalId, GoalId>) -> bool {
    loop {
        if g == ancestor {
            return true;
        }
        match parents.get(&g) {
            Some(&p) => g = p,
            None => return false,
        }
    }
}

/// Finds hypotheses that stay unchanged from their introduction until every
/// goal descending from their goal is closed.
///
/// A hypothesis counts as introduced at a node if a goal in its snapshot
/// carries it while the goal's previous snapshot did not (same name, equal
/// content). Hypotheses of the initial goal are introduced at the root.
pub fn detect_invariants(tree: &ProofTree) -> Vec<(NodeId, Annotation)> {
    let parents = parents(tree);
    let mut last: HashMap<GoalId, &GoalView> = HashMap::new();
    let mut introduced: Vec<(NodeId, GoalId, String, Assertion)> = Vec::new();
    for (n, node) in tree.nodes.iter().enumerate() {
        for g in &node.post_focused {
            let before = last.get(&g.id).copied().or_else(|| {
                // A fresh goal is compared with the goal it was split from.
                parents.get(&g.id).and_then(|p| last.get(p).copied())
            });
            for h in &g.hyps {
                let known = before
                    .and_then(|b| b.hyp(&h.name))
                    .is_some_and(|old| old.assertion.same(&h.assertion));
                if !known {
                    introduced.push((n, g.id, h.name.clone(), h.assertion.clone()));
                }
            }
        }
        for g in &node.post_focused {
            last.insert(g.id, g);
        }
    }

    let mut out = Vec::new();
    for (n, goal, name, assertion) in introduced {
        let mut later = Vec::new();
        let mut invariant = true;
        for (m, node) in tree.nodes.iter().enumerate().skip(n + 1) {
            for g in &node.post_focused {
                if !descends(g.id, goal, &parents) {
                    continue;
                }
                match g.hyp(&name) {
                    Some(h) if h.assertion.same(&assertion) => later.push((m, g.id)),
                    _ => invariant = false,
                }
            }
            if !invariant {
                break;
            }
        }
        if invariant {
            out.push((n, Annotation::InvariantHyp(goal, name.clone())));
            out.extend(
                later
                    .into_iter()
                    .map(|(m, g)| (m, Annotation::HiddenInvariantHyp(g, name.clone()))),
            );
        }
    }
    out
}

/// Marks nodes that split a goal into `k >= 2` goals when each of them is
/// first picked up by a bullet or an opening brace.
pub fn detect_bullet_handled(tree: &ProofTree) -> Vec<(NodeId, Annotation)> {
    let mut out = Vec::new();
    for (n, node) in tree.nodes.iter().enumerate() {
        let k = node.produced_goal_ids.len();
        if k < 2 {
            continue;
        }
        let handled = node.produced_goal_ids.iter().all(|&g| {
            tree.nodes[n + 1..]
                .iter()
                .find(|m| m.target_goal == Some(g) && m.error.is_none())
                .is_some_and(|m| {
                    matches!(
                        m.sentence.kind,
                        SentenceKind::Bullet { .. } | SentenceKind::BraceOpen
                    )
                })
        });
        if handled {
            out.push((n, Annotation::HiddenCreatedGoals(k)));
        }
    }
    out
}

/// Structural warnings, deduplicated by code and span, sorted by span.
pub fn collect_warnings(tree: &ProofTree) -> Vec<Warning> {
    let mut seen = BTreeSet::new();
    let mut out: Vec<Warning> = tree
        .warnings
        .iter()
        .filter(|w| seen.insert((w.span, w.code)))
        .cloned()
        .collect();
    out.sort_by_key(|w| w.span);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::build_proof_trees;
    use crate::script::tokenize_sentences;

    fn tree(src: &str) -> ProofTree {
        let mut f = build_proof_trees(&tokenize_sentences(src).unwrap());
        let t = f.trees.remove(0);
        assert!(t.diagnostics.is_empty(), "{:?}", t.diagnostics);
        t
    }

    fn invariant_names(t: &ProofTree) -> Vec<(NodeId, String)> {
        detect_invariants(t)
            .into_iter()
            .filter_map(|(n, a)| match a {
                Annotation::InvariantHyp(_, h) => Some((n, h)),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn intro_then_split() {
        let t = tree(
            "Lemma l : A -> B -> A /\\ B. Proof. intros H1 H2. split. - exact H1. - exact H2. Qed.",
        );
        assert_eq!(
            invariant_names(&t),
            vec![(1, "H1".to_string()), (1, "H2".to_string())]
        );
        let hidden: Vec<NodeId> = detect_invariants(&t)
            .into_iter()
            .filter(|(_, a)| matches!(a, Annotation::HiddenInvariantHyp(_, h) if h == "H1"))
            .map(|(n, _)| n)
            .collect();
        // both goals after split, then each bullet
        assert_eq!(hidden, vec![2, 2, 3, 5]);
    }

    #[test]
    fn destructed_hypothesis_not_invariant() {
        let t =
            tree("Lemma l : A /\\ B -> B. Proof. intros H. destruct H as [Ha Hb]. exact Hb. Qed.");
        let names = invariant_names(&t);
        assert!(!names.iter().any(|(_, h)| h == "H"));
        assert!(names.contains(&(2, "Hb".to_string())));
    }

    #[test]
    fn renamed_hypothesis_not_invariant() {
        let t = tree("Lemma l : A -> A. Proof. intros H. rename H into K. exact K. Qed.");
        let names = invariant_names(&t);
        assert_eq!(names, vec![(2, "K".to_string())]);
    }

    #[test]
    fn bullet_handled_split() {
        let t =
            tree("Lemma l : A -> B -> A /\\ B. Proof. intros. split. - exact H. - exact H0. Qed.");
        assert_eq!(
            detect_bullet_handled(&t),
            vec![(2, Annotation::HiddenCreatedGoals(2))]
        );
        let t = tree("Lemma l : A -> B -> A /\\ B. Proof. intros. split. exact H. exact H0. Qed.");
        assert!(detect_bullet_handled(&t).is_empty());
    }

    #[test]
    fn apply_three_braced() {
        let t = tree("Lemma l : (A -> B -> C -> D) -> A -> B -> C -> D. Proof. intros f a b c. apply f. { exact a. } { exact b. } { exact c. } Qed.");
        assert_eq!(
            detect_bullet_handled(&t),
            vec![(2, Annotation::HiddenCreatedGoals(3))]
        );
    }

    #[test]
    fn warnings_sorted_and_deduplicated() {
        let t = tree("Lemma l : A -> A. Proof. intros H. Focus 1. - exact H. Unfocus. Qed.");
        let codes: Vec<_> = collect_warnings(&t).iter().map(|w| w.code).collect();
        assert_eq!(
            codes,
            vec![
                WarningCode::DeprecatedFocus,
                WarningCode::SuperfluousFocus,
                WarningCode::SuperfluousBullet
            ]
        );
        let clean = tree("Lemma l : A -> A. Proof. intros H. exact H. Qed.");
        assert!(collect_warnings(&clean).is_empty());
    }
}
