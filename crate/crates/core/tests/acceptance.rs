//! The acceptance criteria, one line each.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the report.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use common::*;
use psv_forge::analyze::{collect_warnings, Annotation};
use psv_forge::cli::run_with;
use psv_forge::forest::{linearize, ProofTree};
use psv_forge::latex::{render_rows, DocMode, Layout, RenderOptions, SplitMode};
use psv_forge::script::{strip_comments, tokenize_sentences, Completion, SentenceKind};
use psv_forge::trace::{from_trees, serialize_trace};

type Check = Result<String, String>;

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before[before.rfind('\n').map_or(0, |p| p + 1)..]
        .chars()
        .count()
        + 1;
    (line, col)
}

fn c1_lossless() -> Check {
    let files = files("lexing", "v");
    if files.len() < 25 {
        return Err(format!("only {} lexing files", files.len()));
    }
    let sources: Vec<String> = files
        .iter()
        .map(|f| fs::read_to_string(f).unwrap())
        .collect();
    let start = Instant::now();
    for (path, src) in files.iter().zip(&sources) {
        let sentences = tokenize_sentences(src).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut rebuilt = String::new();
        let mut at = 0;
        for s in &sentences {
            let gap = &src[at..s.range.start];
            if !strip_comments(gap).trim().is_empty() {
                return Err(format!(
                    "{}: text lost between sentences: {gap:?}",
                    path.display()
                ));
            }
            if src[s.range.clone()] != s.text {
                return Err(format!("{}: range and text disagree", path.display()));
            }
            let (l, c) = line_col(src, s.range.start);
            if (s.span.start_line, s.span.start_col) != (l, c) {
                return Err(format!(
                    "{}: span {} but offset is at {l}:{c}",
                    path.display(),
                    s.span
                ));
            }
            rebuilt.push_str(gap);
            rebuilt.push_str(&s.text);
            at = s.range.end;
        }
        rebuilt.push_str(&src[at..]);
        if !strip_comments(&src[at..]).trim().is_empty() {
            return Err(format!("{}: trailing text lost", path.display()));
        }
        if rebuilt.as_bytes() != src.as_bytes() {
            return Err(format!("{}: reassembly differs", path.display()));
        }
    }
    let took = start.elapsed();
    if took > Duration::from_secs(1) {
        return Err(format!("took {took:?}"));
    }
    Ok(format!(
        "{} files reassembled byte-for-byte in {took:?}",
        files.len()
    ))
}

fn c2_kernel() -> Check {
    let mut proofs = 0;
    for path in files("proofs", "v") {
        for t in forest(&path).trees {
            let last = t.nodes.last().unwrap();
            let ok = matches!(
                t.label.completion,
                Some(Completion::Qed | Completion::Defined)
            ) && !t.has_errors()
                && last.goal_count() == 0;
            if !ok {
                return Err(format!(
                    "{}: `{}` did not close: {:?}",
                    path.display(),
                    t.label.name,
                    t.diagnostics
                ));
            }
            proofs += 1;
        }
    }
    if proofs < 30 {
        return Err(format!("only {proofs} positive proofs"));
    }
    let negatives = files("negative", "v");
    for path in &negatives {
        let want = expected_code(path);
        let f = forest(path);
        let got: Vec<String> = f.all_diagnostics().iter().map(|d| d.code.clone()).collect();
        if got.first() != Some(&want) {
            return Err(format!("{}: expected {want}, got {got:?}", path.display()));
        }
        if f.trees
            .iter()
            .any(|t| t.label.completion == Some(Completion::Qed))
        {
            return Err(format!("{}: accepted at Qed", path.display()));
        }
    }
    if negatives.len() < 10 {
        return Err(format!("only {} negative scripts", negatives.len()));
    }
    Ok(format!(
        "{proofs} proofs close, {} negative scripts report their code",
        negatives.len()
    ))
}

fn c3_golden() -> Check {
    let goldens = files("golden", "rows");
    for rows_path in &goldens {
        let want = golden_rows(rows_path);
        let t = &forest(&rows_path.with_extension("v")).trees[0];
        let got: Vec<(usize, usize, bool)> = linearize(t, &RenderOptions::default())
            .iter()
            .map(|r| (r.depth, r.goal_count, r.closed_goal))
            .collect();
        if got != want {
            return Err(format!("{}: got {got:?}", rows_path.display()));
        }
    }
    if goldens.len() < 10 {
        return Err(format!("only {} golden files", goldens.len()));
    }
    Ok(format!("{} golden row files match", goldens.len()))
}

fn all_trees() -> Vec<ProofTree> {
    all_scripts().iter().flat_map(|p| forest(p).trees).collect()
}

fn c4_invariant_hiding(trees: &[ProofTree]) -> Check {
    let mut checked = 0;
    for t in trees {
        for (m, node) in t.nodes.iter().enumerate() {
            for a in &node.annotations {
                let Annotation::HiddenInvariantHyp(g, h) = a else {
                    continue;
                };
                let here = node
                    .post_focused
                    .iter()
                    .find(|v| v.id == *g)
                    .and_then(|v| v.hyp(h))
                    .ok_or_else(|| format!("`{}` row {m}: {h} missing", t.label.name))?;
                let introduced = t.nodes[..m].iter().any(|n| {
                    n.annotations.iter().any(|b| match b {
                        Annotation::InvariantHyp(g0, h0) if h0 == h => n
                            .post_focused
                            .iter()
                            .find(|v| v.id == *g0)
                            .and_then(|v| v.hyp(h))
                            .is_some_and(|first| first.assertion.same(&here.assertion)),
                        _ => false,
                    })
                });
                if !introduced {
                    return Err(format!(
                        "`{}` row {m}: {h} changed or never introduced",
                        t.label.name
                    ));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} hidden hypotheses checked, 0 violations"))
}

fn c5_bullet_hiding(trees: &[ProofTree]) -> Check {
    let mut checked = 0;
    for t in trees {
        for (n, node) in t.nodes.iter().enumerate() {
            for a in &node.annotations {
                let Annotation::HiddenCreatedGoals(k) = a else {
                    continue;
                };
                if *k < 2 || *k != node.produced_goal_ids.len() {
                    return Err(format!("`{}` row {n}: bad count {k}", t.label.name));
                }
                for g in &node.produced_goal_ids {
                    let next = t.nodes[n + 1..].iter().find(|m| m.target_goal == Some(*g));
                    let focusing = next.is_some_and(|m| {
                        matches!(
                            m.sentence.kind,
                            SentenceKind::Bullet { .. } | SentenceKind::BraceOpen
                        )
                    });
                    if !focusing {
                        return Err(format!(
                            "`{}` row {n}: goal {g} not picked up by a bullet",
                            t.label.name
                        ));
                    }
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} hidden creations checked, 0 violations"))
}

fn option_grid() -> Vec<RenderOptions> {
    let mut v = Vec::new();
    for layout in [Layout::CoqIde, Layout::Sequent] {
        for hide in [false, true] {
            v.push(RenderOptions {
                layout,
                hide_bullet_created: hide,
                hide_invariant: hide,
                show_warnings: true,
                macro_prefix: if hide { "zz".into() } else { "psv".into() },
                ..Default::default()
            });
        }
    }
    v
}

fn c6_renderer(trees: &[ProofTree]) -> Check {
    let mut fragments = 0;
    for opts in option_grid() {
        let p = opts.macro_prefix.clone();
        for t in trees {
            let frag = render_rows(&t.label, &linearize(t, &opts), &opts);
            let ctx = |e: String| format!("`{}` ({:?}): {e}", t.label.name, opts.layout);
            balanced(&frag).map_err(ctx)?;
            macro_discipline(&frag, &p).map_err(ctx)?;
            for name in [
                "Tactic",
                "Statement",
                "Warn",
                "Error",
                "Hyp",
                "Var",
                "ProofTitle",
            ] {
                for cell in macro_args(&frag, &p, name) {
                    escaped_text(&cell).map_err(ctx)?;
                }
            }
            fragments += 1;
        }
    }
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("out");
    let status = run_with(
        [
            "psv-forge".to_string(),
            "--project".into(),
            corpus("").display().to_string(),
            "-o".into(),
            out.display().to_string(),
        ],
        &mut Vec::new(),
    );
    if status == 2 {
        return Err("corpus run failed".into());
    }
    let mut docs = 0;
    for e in fs::read_dir(&out).unwrap() {
        let path = e.unwrap().path();
        let tex = fs::read_to_string(&path).unwrap();
        balanced(&tex).map_err(|e| format!("{}: {e}", path.display()))?;
        docs += 1;
    }
    let compiled = match Command::new("pdflatex").arg("--version").output() {
        Ok(_) => compile_all(&out)?,
        Err(_) => "no LaTeX toolchain, compilation skipped".to_string(),
    };
    Ok(format!(
        "{fragments} fragments and {docs} documents structurally sound; {compiled}"
    ))
}

fn compile_all(dir: &Path) -> Result<String, String> {
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        let ok = Command::new("pdflatex")
            .args([
                "-interaction=nonstopmode",
                "-halt-on-error",
                "-output-directory",
            ])
            .arg(dir)
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?
            .status
            .success();
        if !ok {
            return Err(format!("{} does not compile", path.display()));
        }
        n += 1;
    }
    Ok(format!("{n} documents compiled"))
}

fn run_cli(args: &[String]) -> i32 {
    let mut argv = vec!["psv-forge".to_string()];
    argv.extend_from_slice(args);
    run_with(argv, &mut Vec::new())
}

fn c7_trace_agreement() -> Check {
    let scripts = [
        "and_comm",
        "distrib",
        "focus",
        "apply_three",
        "brace_bullets",
    ];
    let d = tempfile::tempdir().unwrap();
    let mut compared = 0;
    for name in scripts {
        let src = corpus("proofs").join(format!("{name}.v"));
        let f = forest(&src);
        let trace = d.path().join(format!("{name}.json"));
        fs::write(
            &trace,
            serialize_trace(&from_trees(&format!("{name}.v"), &f.trees)),
        )
        .unwrap();
        for (i, flags) in [
            vec![],
            vec![
                "--layout",
                "sequent",
                "--hide-bullet-created",
                "--hide-invariant",
            ],
            vec![
                "--fragment",
                "--split",
                "per-proof",
                "--macro-prefix",
                "doc",
            ],
        ]
        .iter()
        .enumerate()
        {
            let flags: Vec<String> = flags.iter().map(|s| s.to_string()).collect();
            let kdir = d.path().join(format!("k{name}{i}"));
            let tdir = d.path().join(format!("t{name}{i}"));
            let mut a = vec![
                src.display().to_string(),
                "-o".into(),
                kdir.display().to_string(),
            ];
            a.extend(flags.clone());
            let mut b = vec![
                "--trace".into(),
                trace.display().to_string(),
                "-o".into(),
                tdir.display().to_string(),
            ];
            b.extend(flags);
            if run_cli(&a) != 0 || run_cli(&b) != 0 {
                return Err(format!("{name}: a run failed"));
            }
            let ka = hash_dir(&kdir);
            if ka.is_empty() || ka != hash_dir(&tdir) {
                return Err(format!("{name}: outputs differ"));
            }
            compared += ka.len();
        }
    }
    Ok(format!(
        "{} scripts, {compared} output files identical",
        scripts.len()
    ))
}

fn hash_dir(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        let digest = Sha256::digest(fs::read(&path).unwrap());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        out.insert(
            path.file_name().unwrap().to_string_lossy().into_owned(),
            hex,
        );
    }
    out
}

fn c8_determinism() -> Check {
    let d = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for run in 0..2 {
        let out = d.path().join(format!("run{run}"));
        for (sub, split) in [("a", "single"), ("b", "per-proof")] {
            run_cli(&[
                "--project".into(),
                corpus("").display().to_string(),
                "--split".into(),
                split.into(),
                "--hide-invariant".into(),
                "-o".into(),
                out.join(sub).display().to_string(),
            ]);
        }
        let mut all = hash_dir(&out.join("a"));
        all.extend(
            hash_dir(&out.join("b"))
                .into_iter()
                .map(|(k, v)| (format!("b/{k}"), v)),
        );
        hashes.push(all);
    }
    if hashes[0].is_empty() || hashes[0] != hashes[1] {
        return Err("two runs differ".into());
    }
    Ok(format!(
        "{} files hash-identical across runs",
        hashes[0].len()
    ))
}

fn c9_warnings() -> Check {
    let mut n = 0;
    for path in files("warnings", "v") {
        let want = fs::read_to_string(path.with_extension("expected")).unwrap();
        let mut want: Vec<&str> = want.lines().filter(|l| !l.is_empty()).collect();
        want.sort();
        let mut got: Vec<String> = forest(&path)
            .trees
            .iter()
            .flat_map(collect_warnings)
            .map(|w| format!("{} {}", w.span, w.code))
            .collect();
        got.sort();
        if got != want {
            return Err(format!("{}: got {got:?}, want {want:?}", path.display()));
        }
        n += 1;
    }
    Ok(format!("{n} scripts produce exactly the expected warnings"))
}

#[test]
fn acceptance() {
    let start = Instant::now();
    let trees = all_trees();
    let mut results: Vec<(&str, Check)> = vec![
        ("criterion 1 parser losslessness", c1_lossless()),
        ("criterion 2 kernel soundness", c2_kernel()),
        ("criterion 3 golden trees", c3_golden()),
        (
            "criterion 4 invariant-hiding soundness",
            c4_invariant_hiding(&trees),
        ),
        (
            "criterion 5 bullet-hiding correctness",
            c5_bullet_hiding(&trees),
        ),
        ("criterion 6 renderer structure", c6_renderer(&trees)),
        ("criterion 7 kernel/trace agreement", c7_trace_agreement()),
        ("criterion 8 determinism", c8_determinism()),
        ("criterion 9 warning suite", c9_warnings()),
    ];
    let took = start.elapsed();
    results.push((
        "suite runtime",
        if took < Duration::from_secs(30) {
            Ok(format!("{took:?}"))
        } else {
            Err(format!("{took:?}"))
        },
    ));
    let mut report = std::io::stderr().lock();
    let mut failed = HashMap::new();
    for (name, r) in &results {
        match r {
            Ok(msg) => writeln!(report, "PASS  {name}: {msg}").unwrap(),
            Err(msg) => {
                writeln!(report, "FAIL  {name}: {msg}").unwrap();
                failed.insert(*name, msg.clone());
            }
        }
    }
    assert!(failed.is_empty(), "{failed:?}");
}

#[test]
fn all_modes_render() {
    for doc_mode in [DocMode::Standalone, DocMode::Fragment] {
        for split_mode in [SplitMode::SingleFile, SplitMode::PerProof] {
            let opts = RenderOptions {
                doc_mode,
                split_mode,
                ..Default::default()
            };
            let trees = forest(&corpus("proofs").join("reuse.v")).trees;
            let frags: Vec<_> = trees
                .iter()
                .map(|t| {
                    (
                        t.label.clone(),
                        render_rows(&t.label, &linearize(t, &opts), &opts),
                    )
                })
                .collect();
            for (_, content) in psv_forge::latex::render_document("reuse", &frags, &opts).files {
                balanced(&content).unwrap();
            }
        }
    }
}
