//! LaTeX output: one `longtable` per proof, tactic on the left, proof state
//! on the right.
//!
//! Every command emitted into a table body is either a macro carrying the
//! configured prefix or a plain LaTeX command from [`ALLOWED_COMMANDS`].
//! The prefix macros are declared with `\providecommand`, so definitions
//! made before `\input`-ing a fragment win.

use std::collections::HashSet;
use std::fmt::Write;

use thiserror::Error;

use crate::analyze::Annotation;
use crate::forest::{Assertion, GoalView, ProofLabel, Row, RowKind, StateView};
use crate::formula::{format_formula, latex_ident, parse_formula, Formula, Style};
use crate::script::collapse_ws;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Layout {
    /// Hypotheses above a rule, conclusion below.
    #[default]
    CoqIde,
    /// One `H : A, ... |- C` line per goal.
    Sequent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DocMode {
    #[default]
    Standalone,
    Fragment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitMode {
    #[default]
    SingleFile,
    PerProof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderOptions {
    pub layout: Layout,
    pub doc_mode: DocMode,
    pub split_mode: SplitMode,
    pub hide_bullet_created: bool,
    pub hide_invariant: bool,
    pub show_warnings: bool,
    pub macro_prefix: String,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            layout: Layout::CoqIde,
            doc_mode: DocMode::Standalone,
            split_mode: SplitMode::SingleFile,
            hide_bullet_created: false,
            hide_invariant: false,
            show_warnings: true,
            macro_prefix: "psv".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatexError {
    #[error("macro prefix `{0}` must consist of ASCII letters only")]
    BadPrefix(String),
}

impl RenderOptions {
    pub fn validate(&self) -> Result<(), LatexError> {
        let p = &self.macro_prefix;
        if p.is_empty() || !p.bytes().all(|b| b.is_ascii_alphabetic()) {
            return Err(LatexError::BadPrefix(p.clone()));
        }
        Ok(())
    }
}

/// Plain LaTeX commands that may appear in generated table bodies besides
/// the prefixed macros.
pub const ALLOWED_COMMANDS: &[&str] = &[
    "begin",
    "end",
    "input",
    "mathit",
    "mathsf",
    "mbox",
    "forall",
    "exists",
    "neg",
    "wedge",
    "vee",
    "rightarrow",
    "leftrightarrow",
    "textasciitilde",
    "textasciicircum",
    "textbackslash",
    "#",
    "$",
    "%",
    "&",
    "_",
    "{",
    "}",
    ",",
    ";",
    "\\",
];

/// Escapes LaTeX special characters for use in text.
///
/// Not idempotent: escaping twice escapes the backslashes of the first pass.
pub fn escape_latex(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '#' | '$' | '%' | '&' | '_' | '{' | '}' => {
                out.push('\\');
                out.push(c);
            }
            '~' => out.push_str("\\textasciitilde{}"),
            '^' => out.push_str("\\textasciicircum{}"),
            '\\' => out.push_str("\\textbackslash{}"),
            _ => out.push(c),
        }
    }
    out
}

/// Replaces everything but ASCII letters and digits with `_`.
pub fn sanitize_filename(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

/// The `\providecommand` block defining every prefixed macro.
pub fn macro_defaults(prefix: &str) -> String {
    let defs: &[(&str, usize, &str)] = &[
        ("TacticWidth", 0, "0.3\\linewidth"),
        ("StateWidth", 0, "0.65\\linewidth"),
        ("TableBegin", 0, ""),
        ("TableEnd", 0, ""),
        ("ProofTitle", 2, "\\par\\noindent\\textbf{#1 #2}\\par"),
        ("Completion", 1, "\\par\\noindent\\textit{#1}\\par"),
        ("RowSep", 0, "\\hline"),
        ("Statement", 1, "\\textbf{#1}"),
        ("Tactic", 1, "\\texttt{#1}"),
        ("Indent", 1, "\\hspace*{#1em}"),
        ("Hyp", 2, "#1 : #2\\par"),
        ("Var", 1, "#1\\par"),
        ("Sep", 0, "\\noindent\\rule[0.5ex]{\\linewidth}{0.4pt}\\par"),
        ("Concl", 1, "#1\\par"),
        ("GoalHeader", 2, "\\textit{goal #1 of #2}\\par"),
        ("Sequent", 1, "#1\\par"),
        ("Turnstile", 0, "\\vdash"),
        ("GoalsHidden", 1, "\\textit{$\\langle$#1 goals$\\rangle$}"),
        ("NoGoals", 0, "\\textit{no more goals}"),
        ("Unfocused", 1, "\\par\\textit{(#1 unfocused)}"),
        ("Invariant", 0, "\\ensuremath{{}^{\\dagger}}"),
        ("Warn", 1, "\\par{\\footnotesize\\textit{warning: #1}}"),
        ("Error", 1, "\\textbf{error:} #1"),
    ];
    let mut out = String::new();
    for (name, args, body) in defs {
        if *args == 0 {
            writeln!(out, "\\providecommand{{\\{prefix}{name}}}{{{body}}}").unwrap();
        } else {
            writeln!(
                out,
                "\\providecommand{{\\{prefix}{name}}}[{args}]{{{body}}}"
            )
            .unwrap();
        }
    }
    out
}

/// Parses trace text as a formula when possible so both input modes print
/// the same.
fn formula_of(a: &Assertion) -> Option<Formula> {
    match a {
        Assertion::Formula(f) => Some(f.clone()),
        Assertion::Opaque(s) => parse_formula(s).ok(),
        Assertion::Variable => None,
    }
}

/// Math-mode body for an assertion.
fn math(a: &Assertion) -> String {
    match (formula_of(a), a) {
        (Some(f), _) => format_formula(&f, Style::LatexMath),
        (None, Assertion::Opaque(s)) => format!("\\mbox{{{}}}", escape_latex(s)),
        (None, _) => String::new(),
    }
}

/// Text-mode cell content for an assertion.
fn text(a: &Assertion) -> String {
    match (formula_of(a), a) {
        (Some(f), _) => format!("${}$", format_formula(&f, Style::LatexMath)),
        (None, Assertion::Opaque(s)) => escape_latex(s),
        (None, _) => String::new(),
    }
}

struct Cells<'a> {
    p: &'a str,
    opts: &'a RenderOptions,
}

impl Cells<'_> {
    fn invariant(&self, row: &Row, g: &GoalView, name: &str) -> bool {
        self.opts.hide_invariant
            && row
                .annotations
                .contains(&Annotation::InvariantHyp(g.id, name.to_string()))
    }

    fn coqide_goal(&self, row: &Row, g: &GoalView, out: &mut String) {
        let p = self.p;
        for h in &g.hyps {
            let mark = if self.invariant(row, g, &h.name) {
                format!("\\{p}Invariant")
            } else {
                String::new()
            };
            let name = escape_latex(&h.name);
            match h.assertion {
                Assertion::Variable => write!(out, "\\{p}Var{{{name}}}{mark}").unwrap(),
                _ => write!(out, "\\{p}Hyp{{{name}}}{{{}{mark}}}", text(&h.assertion)).unwrap(),
            }
        }
        write!(out, "\\{p}Sep\\{p}Concl{{{}}}", text(&g.concl)).unwrap();
    }

    fn sequent_goal(&self, row: &Row, g: &GoalView, out: &mut String) {
        let p = self.p;
        let hyps: Vec<String> = g
            .hyps
            .iter()
            .map(|h| {
                let mut s = latex_ident(&h.name);
                if !matches!(h.assertion, Assertion::Variable) {
                    s.push_str(" : ");
                    s.push_str(&math(&h.assertion));
                }
                if self.invariant(row, g, &h.name) {
                    write!(s, "\\{p}Invariant").unwrap();
                }
                s
            })
            .collect();
        let lhs = if hyps.is_empty() {
            String::new()
        } else {
            format!("{} ", hyps.join(",\\; "))
        };
        write!(
            out,
            "\\{p}Sequent{{${lhs}\\{p}Turnstile {}$}}",
            math(&g.concl)
        )
        .unwrap();
    }

    fn state(&self, row: &Row) -> String {
        let p = self.p;
        let mut out = String::new();
        if let Some(msg) = &row.error {
            write!(out, "\\{p}Error{{{}}}", escape_latex(msg)).unwrap();
            return out;
        }
        match &row.state_view {
            StateView::Hidden(k) => write!(out, "\\{p}GoalsHidden{{{k}}}").unwrap(),
            StateView::Goals { goals, unfocused } => {
                if goals.is_empty() {
                    write!(out, "\\{p}NoGoals").unwrap();
                }
                let k = goals.len();
                for (i, g) in goals.iter().enumerate() {
                    if k >= 2 {
                        write!(out, "\\{p}GoalHeader{{{}}}{{{k}}}", i + 1).unwrap();
                    }
                    match self.opts.layout {
                        Layout::CoqIde => self.coqide_goal(row, g, &mut out),
                        Layout::Sequent => self.sequent_goal(row, g, &mut out),
                    }
                }
                if *unfocused > 0 {
                    write!(out, "\\{p}Unfocused{{{unfocused}}}").unwrap();
                }
            }
        }
        out
    }

    fn command(&self, row: &Row) -> String {
        let p = self.p;
        let body = escape_latex(&collapse_ws(&row.sentence_text));
        let mut out = format!("\\{p}Indent{{{}}}", row.depth);
        match row.kind {
            RowKind::Statement => write!(out, "\\{p}Statement{{{body}}}").unwrap(),
            _ => write!(out, "\\{p}Tactic{{{body}}}").unwrap(),
        }
        if self.opts.show_warnings {
            for a in &row.annotations {
                if let Annotation::Warn(w) = a {
                    write!(out, "\\{p}Warn{{{}}}", escape_latex(&w.message)).unwrap();
                }
            }
        }
        out
    }
}

/// Renders the rows of one proof as a table fragment, without macro
/// definitions.
pub fn render_rows(label: &ProofLabel, rows: &[Row], opts: &RenderOptions) -> String {
    let p = opts.macro_prefix.as_str();
    let cells = Cells { p, opts };
    let mut out = String::new();
    writeln!(
        out,
        "\\{p}ProofTitle{{{}}}{{{}}}",
        label.kind.keyword(),
        escape_latex(&label.name)
    )
    .unwrap();
    writeln!(out, "\\{p}TableBegin").unwrap();
    writeln!(
        out,
        "\\begin{{longtable}}{{@{{}}p{{\\{p}TacticWidth}}p{{\\{p}StateWidth}}@{{}}}}"
    )
    .unwrap();
    for row in rows {
        writeln!(
            out,
            "{} & {} \\\\\\{p}RowSep",
            cells.command(row),
            cells.state(row)
        )
        .unwrap();
    }
    writeln!(out, "\\end{{longtable}}").unwrap();
    writeln!(out, "\\{p}TableEnd").unwrap();
    let done = label.completion.map_or("incomplete", |c| c.keyword());
    writeln!(out, "\\{p}Completion{{{done}}}").unwrap();
    out
}

/// A proof whose file name collided with an earlier one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateProofName {
    /// Position of the proof in the input list.
    pub index: usize,
    pub name: String,
    pub file: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Rendered {
    /// File name and content, in output order.
    pub files: Vec<(String, String)>,
    pub duplicates: Vec<DuplicateProofName>,
}

const PREAMBLE: &str = "\\documentclass{article}\n\\usepackage[T1]{fontenc}\n\\usepackage{longtable}\n\\usepackage{amssymb}\n";

fn document(defaults: &str, body: &str) -> String {
    format!("{PREAMBLE}{defaults}\\begin{{document}}\n{body}\\end{{document}}\n")
}

/// Assembles the output files for the proofs of one source file.
///
/// Per-proof files are always fragments; in standalone mode the index file
/// is a complete document that inputs them.
pub fn render_document(
    basename: &str,
    fragments: &[(ProofLabel, String)],
    opts: &RenderOptions,
) -> Rendered {
    let defaults = macro_defaults(&opts.macro_prefix);
    let mut rendered = Rendered::default();
    match opts.split_mode {
        SplitMode::SingleFile => {
            let body: String = fragments.iter().map(|(_, f)| f.as_str()).collect();
            let content = match opts.doc_mode {
                DocMode::Standalone => document(&defaults, &body),
                DocMode::Fragment => format!("{defaults}{body}"),
            };
            rendered.files.push((format!("{basename}.tex"), content));
        }
        SplitMode::PerProof => {
            let mut used = HashSet::new();
            let mut inputs = String::new();
            for (index, (label, fragment)) in fragments.iter().enumerate() {
                let stem = format!("{basename}__{}", sanitize_filename(&label.name));
                let mut name = stem.clone();
                let mut n = 1;
                while !used.insert(name.clone()) {
                    n += 1;
                    name = format!("{stem}_{n}");
                }
                if n > 1 {
                    rendered.duplicates.push(DuplicateProofName {
                        index,
                        name: label.name.clone(),
                        file: format!("{name}.tex"),
                    });
                }
                writeln!(inputs, "\\input{{{name}}}").unwrap();
                rendered
                    .files
                    .push((format!("{name}.tex"), format!("{defaults}{fragment}")));
            }
            let index = match opts.doc_mode {
                DocMode::Standalone => document(&defaults, &inputs),
                DocMode::Fragment => inputs,
            };
            rendered
                .files
                .push((format!("{basename}__index.tex"), index));
        }
    }
    rendered
}
