//! The `psv-forge` command line.
//!
//! Exit codes: 0 on success, 1 when a proof fails (or a warning is reported
//! under `--fail-on-warning`), 2 for usage, I/O and trace schema errors.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use crate::analyze::collect_warnings;
use crate::forest::{build_proof_trees, linearize, ProofTree, Severity};
use crate::latex::{
    render_document, render_rows, sanitize_filename, DocMode, Layout, RenderOptions, SplitMode,
};
use crate::script::tokenize_sentences;
use crate::trace::{parse_trace, trace_to_trees};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LayoutArg {
    Coqide,
    Sequent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Single,
    PerProof,
}

#[derive(Debug, Parser)]
#[command(
    name = "psv-forge",
    version,
    about = "Render proof scripts with their proof states as LaTeX tables"
)]
struct Args {
    /// Vernacular files, or directories with --project.
    inputs: Vec<PathBuf>,
    /// Table layout.
    #[arg(long, value_enum, default_value = "coqide")]
    layout: LayoutArg,
    /// Emit complete documents (default).
    #[arg(long, overrides_with = "fragment")]
    standalone: bool,
    /// Emit table fragments only.
    #[arg(long, overrides_with = "standalone")]
    fragment: bool,
    /// One output file per source file, or one per proof plus an index.
    #[arg(long, value_enum, default_value = "single")]
    split: SplitArg,
    /// Show only the goal count where all created goals are picked up by bullets.
    #[arg(long)]
    hide_bullet_created: bool,
    /// Mark unchanged hypotheses where introduced and leave them out afterwards.
    #[arg(long)]
    hide_invariant: bool,
    /// Leave structural warnings out of the tables.
    #[arg(long)]
    no_warnings: bool,
    /// Prefix of the generated LaTeX macros.
    #[arg(long, value_name = "NAME", default_value = "psv")]
    macro_prefix: String,
    /// Take proof states from a JSON trace instead of the kernel.
    #[arg(long, value_name = "FILE.json")]
    trace: Option<PathBuf>,
    /// Treat inputs as project directories and process every `.v` file.
    #[arg(long)]
    project: bool,
    /// Output directory.
    #[arg(
        short = 'o',
        long = "out",
        value_name = "DIR",
        default_value = "./psv-out"
    )]
    out: PathBuf,
    /// Exit with status 1 if any warning is reported.
    #[arg(long)]
    fail_on_warning: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub project_mode: bool,
    pub trace_path: Option<PathBuf>,
    pub render: RenderOptions,
    pub out_dir: PathBuf,
    pub fail_on_warning: bool,
}

impl RunConfig {
    fn from_args(a: Args) -> Result<RunConfig, String> {
        match (&a.trace, a.inputs.is_empty()) {
            (Some(_), false) => return Err("--trace cannot be combined with input files".into()),
            (None, true) => return Err("no input files given".into()),
            _ => {}
        }
        if a.trace.is_some() && a.project {
            return Err("--trace cannot be combined with --project".into());
        }
        let render = RenderOptions {
            layout: match a.layout {
                LayoutArg::Coqide => Layout::CoqIde,
                LayoutArg::Sequent => Layout::Sequent,
            },
            doc_mode: if a.fragment {
                DocMode::Fragment
            } else {
                DocMode::Standalone
            },
            split_mode: match a.split {
                SplitArg::Single => SplitMode::SingleFile,
                SplitArg::PerProof => SplitMode::PerProof,
            },
            hide_bullet_created: a.hide_bullet_created,
            hide_invariant: a.hide_invariant,
            show_warnings: !a.no_warnings,
            macro_prefix: a.macro_prefix,
        };
        render.validate().map_err(|e| e.to_string())?;
        Ok(RunConfig {
            inputs: a.inputs,
            project_mode: a.project,
            trace_path: a.trace,
            render,
            out_dir: a.out,
            fail_on_warning: a.fail_on_warning,
        })
    }
}

#[derive(Debug, Error)]
pub enum DiscoverError {
    #[error("{0}: not a directory")]
    NotADirectory(PathBuf),
    #[error("{0}: {1}")]
    Io(PathBuf, io::Error),
}

/// Every `.v` file below `dir`, sorted. Symbolic links are followed; each
/// directory and file is visited once even if links form a cycle.
pub fn discover_project(dir: &Path) -> Result<Vec<PathBuf>, DiscoverError> {
    if !dir.is_dir() {
        return Err(DiscoverError::NotADirectory(dir.to_path_buf()));
    }
    let mut seen = HashSet::new();
    let mut files = Vec::new();
    let mut pending = vec![dir.to_path_buf()];
    while let Some(d) = pending.pop() {
        let canon = fs::canonicalize(&d).map_err(|e| DiscoverError::Io(d.clone(), e))?;
        if !seen.insert(canon) {
            continue;
        }
        let entries = fs::read_dir(&d).map_err(|e| DiscoverError::Io(d.clone(), e))?;
        for entry in entries {
            let path = entry.map_err(|e| DiscoverError::Io(d.clone(), e))?.path();
            if path.is_dir() {
                pending.push(path);
            } else if path.is_file() && path.extension().is_some_and(|x| x == "v") {
                if let Ok(canon) = fs::canonicalize(&path) {
                    if seen.insert(canon) {
                        files.push(path);
                    }
                }
            }
        }
    }
    files.sort();
    Ok(files)
}

/// Work for one output group: a source file or a trace.
struct Job {
    /// Name used in diagnostics.
    display: String,
    source: Source,
    basename: String,
}

enum Source {
    Script(PathBuf),
    Trace(PathBuf),
}

#[derive(Default)]
struct Outcome {
    messages: Vec<String>,
    files: Vec<(String, String)>,
    errors: bool,
    fatal: bool,
    warnings: bool,
}

fn trees_for(job: &Job, out: &mut Outcome) -> Option<Vec<ProofTree>> {
    match &job.source {
        Source::Script(path) => {
            let text = match fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    out.messages.push(format!("{}: [IoError] {e}", job.display));
                    out.fatal = true;
                    return None;
                }
            };
            let sentences = match tokenize_sentences(&text) {
                Ok(s) => s,
                Err(e) => {
                    out.messages
                        .push(format!("{}:{}: [{}] {e}", job.display, e.span(), e.code()));
                    out.errors = true;
                    return None;
                }
            };
            let forest = build_proof_trees(&sentences);
            for d in &forest.diagnostics {
                out.errors |= d.severity == Severity::Error;
                out.messages.push(format!("{}:{d}", job.display));
            }
            Some(forest.trees)
        }
        Source::Trace(path) => {
            let parsed = fs::read(path)
                .map_err(|e| format!("[IoError] {e}"))
                .and_then(|b| parse_trace(&b).map_err(|e| format!("[{}] {e}", e.code())));
            match parsed {
                Ok(doc) => Some(trace_to_trees(&doc)),
                Err(msg) => {
                    out.messages.push(format!("{}: {msg}", path.display()));
                    out.fatal = true;
                    None
                }
            }
        }
    }
}

fn process(job: &Job, opts: &RenderOptions) -> Outcome {
    let mut out = Outcome::default();
    let Some(trees) = trees_for(job, &mut out) else {
        return out;
    };
    let mut fragments = Vec::new();
    for tree in &trees {
        for d in &tree.diagnostics {
            out.errors |= d.severity == Severity::Error;
            out.messages.push(format!("{}:{d}", job.display));
        }
        for w in collect_warnings(tree) {
            out.warnings = true;
            out.messages.push(format!(
                "{}:{}: [{}] {}",
                job.display, w.span, w.code, w.message
            ));
        }
        let rows = linearize(tree, opts);
        fragments.push((tree.label.clone(), render_rows(&tree.label, &rows, opts)));
    }
    let rendered = render_document(&job.basename, &fragments, opts);
    for dup in &rendered.duplicates {
        out.warnings = true;
        let span = trees[dup.index].root().sentence.span;
        out.messages.push(format!(
            "{}:{span}: [DuplicateProofName] `{}` written to {}",
            job.display, dup.name, dup.file
        ));
    }
    out.files = rendered.files;
    out
}

fn jobs(cfg: &RunConfig) -> Result<Vec<Job>, String> {
    if let Some(trace) = &cfg.trace_path {
        let basename = fs::read(trace)
            .ok()
            .and_then(|b| parse_trace(&b).ok())
            .map(|doc| stem(Path::new(&doc.source_file)))
            .unwrap_or_else(|| stem(trace));
        return Ok(vec![Job {
            display: trace.display().to_string(),
            source: Source::Trace(trace.clone()),
            basename,
        }]);
    }
    let mut jobs = Vec::new();
    for input in &cfg.inputs {
        if cfg.project_mode {
            let files = discover_project(input).map_err(|e| e.to_string())?;
            for f in files {
                let rel = f.strip_prefix(input).unwrap_or(&f).with_extension("");
                jobs.push(Job {
                    display: f.display().to_string(),
                    basename: sanitize_filename(&rel.to_string_lossy()),
                    source: Source::Script(f),
                });
            }
        } else {
            jobs.push(Job {
                display: input.display().to_string(),
                basename: stem(input),
                source: Source::Script(input.clone()),
            });
        }
    }
    Ok(jobs)
}

fn stem(path: &Path) -> String {
    sanitize_filename(
        &path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".to_string()),
    )
}

fn write_atomic(dir: &Path, name: &str, content: &str) -> io::Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(content.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}

/// Runs the program with the given arguments (including the program name),
/// writing diagnostics to `err`. Returns the exit status.
pub fn run_with<I, T>(argv: I, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
            } else {
                print!("{}", e.render());
            }
            return code;
        }
    };
    let cfg = match RunConfig::from_args(args) {
        Ok(c) => c,
        Err(msg) => {
            let _ = writeln!(err, "psv-forge: {msg}");
            return 2;
        }
    };
    let jobs = match jobs(&cfg) {
        Ok(j) => j,
        Err(msg) => {
            let _ = writeln!(err, "psv-forge: {msg}");
            return 2;
        }
    };

    let outcomes: Vec<Outcome> = jobs.par_iter().map(|j| process(j, &cfg.render)).collect();

    let mut status = 0;
    let mut names = HashSet::new();
    for o in &outcomes {
        for m in &o.messages {
            let _ = writeln!(err, "{m}");
        }
        if o.fatal {
            status = 2;
        } else if o.errors || (cfg.fail_on_warning && o.warnings) {
            status = status.max(1);
        }
        for (name, _) in &o.files {
            if !names.insert(name.clone()) {
                let _ = writeln!(err, "psv-forge: two inputs both produce `{name}`");
                return 2;
            }
        }
    }

    if let Err(e) = fs::create_dir_all(&cfg.out_dir) {
        let _ = writeln!(err, "{}: [IoError] {e}", cfg.out_dir.display());
        return 2;
    }
    for (name, content) in outcomes.iter().flat_map(|o| o.files.iter()) {
        if let Err(e) = write_atomic(&cfg.out_dir, name, content) {
            let _ = writeln!(err, "{}: [IoError] {e}", cfg.out_dir.join(name).display());
            return 2;
        }
    }
    status
}

/// [`run_with`] reporting to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut io::stderr())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_in(dir: &Path, args: &[&str]) -> (i32, String) {
        let mut err = Vec::new();
        let mut argv = vec!["psv-forge".to_string()];
        argv.extend(
            args.iter()
                .map(|a| a.replace("$D", &dir.display().to_string())),
        );
        let code = run_with(argv, &mut err);
        (code, String::from_utf8(err).unwrap())
    }

    #[test]
    fn single_file_sequent() {
        let d = tempfile::tempdir().unwrap();
        fs::write(
            d.path().join("file.v"),
            "Lemma l : A -> A. Proof. intros H. exact H. Qed.\n",
        )
        .unwrap();
        let (code, err) = run_in(
            d.path(),
            &["$D/file.v", "--layout", "sequent", "-o", "$D/out"],
        );
        assert_eq!(code, 0, "{err}");
        assert!(d.path().join("out/file.tex").exists());
    }

    #[test]
    fn missing_file() {
        let d = tempfile::tempdir().unwrap();
        let (code, err) = run_in(d.path(), &["$D/missing.v", "-o", "$D/out"]);
        assert_eq!(code, 2);
        assert!(err.contains("missing.v"));
    }

    #[test]
    fn usage_errors() {
        let d = tempfile::tempdir().unwrap();
        assert_eq!(run_in(d.path(), &[]).0, 2);
        assert_eq!(run_in(d.path(), &["x.v", "--layout", "tree"]).0, 2);
        assert_eq!(run_in(d.path(), &["x.v", "--macro-prefix", "p1"]).0, 2);
        assert_eq!(run_in(d.path(), &["x.v", "--trace", "t.json"]).0, 2);
    }

    #[test]
    fn proof_error_exit_one() {
        let d = tempfile::tempdir().unwrap();
        fs::write(
            d.path().join("bad.v"),
            "Lemma l : A /\\ B.\nProof.\n  split.\nQed.\n",
        )
        .unwrap();
        let (code, err) = run_in(d.path(), &["$D/bad.v", "-o", "$D/out"]);
        assert_eq!(code, 1);
        assert!(err.contains("bad.v:4:1: [OpenGoalsAtQed]"), "{err}");
        assert!(d.path().join("out/bad.tex").exists());
    }

    #[test]
    fn warnings_and_fail_flag() {
        let d = tempfile::tempdir().unwrap();
        fs::write(
            d.path().join("w.v"),
            "Lemma l : A -> A. Proof. intros H. - exact H. Qed.",
        )
        .unwrap();
        let (code, err) = run_in(d.path(), &["$D/w.v", "-o", "$D/out"]);
        assert_eq!(code, 0);
        assert!(err.contains("[SuperfluousBullet]"));
        let (code, _) = run_in(d.path(), &["$D/w.v", "-o", "$D/out", "--fail-on-warning"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn project_discovery() {
        let d = tempfile::tempdir().unwrap();
        let src = d.path().join("src");
        fs::create_dir_all(src.join("b/c")).unwrap();
        fs::create_dir_all(src.join("empty")).unwrap();
        for f in ["a.v", "b/x.v", "b/c/y.v", "b/notes.txt"] {
            fs::write(src.join(f), "Lemma l : True. Proof. exact I. Qed.").unwrap();
        }
        #[cfg(unix)]
        std::os::unix::fs::symlink(&src, src.join("b/loop")).unwrap();
        let found = discover_project(&src).unwrap();
        let rel: Vec<_> = found
            .iter()
            .map(|p| p.strip_prefix(&src).unwrap().to_path_buf())
            .collect();
        assert_eq!(
            rel,
            vec![
                PathBuf::from("a.v"),
                PathBuf::from("b/c/y.v"),
                PathBuf::from("b/x.v")
            ]
        );
        assert!(discover_project(&src.join("empty")).unwrap().is_empty());
        assert!(matches!(
            discover_project(&src.join("a.v")),
            Err(DiscoverError::NotADirectory(_))
        ));

        let (code, err) = run_in(
            d.path(),
            &[
                "--project",
                "$D/src",
                "--split",
                "per-proof",
                "-o",
                "$D/out",
            ],
        );
        assert_eq!(code, 0, "{err}");
        for f in ["a__l.tex", "a__index.tex", "b_x__l.tex", "b_c_y__l.tex"] {
            assert!(d.path().join("out").join(f).exists(), "{f}");
        }
    }
}
