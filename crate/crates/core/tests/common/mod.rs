#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use psv_forge::forest::{build_proof_trees, Forest};
use psv_forge::latex::ALLOWED_COMMANDS;
use psv_forge::script::tokenize_sentences;

pub fn corpus(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/corpus")
        .join(sub)
}

/// Files with the given extension in a corpus folder, sorted.
pub fn files(sub: &str, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(corpus(sub))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    v.sort();
    v
}

pub fn all_scripts() -> Vec<PathBuf> {
    ["lexing", "proofs", "negative", "golden", "warnings"]
        .iter()
        .flat_map(|d| files(d, "v"))
        .collect()
}

pub fn forest(path: &Path) -> Forest {
    let src = fs::read_to_string(path).unwrap();
    build_proof_trees(&tokenize_sentences(&src).unwrap())
}

/// `(* expect: Code *)` on the first line.
pub fn expected_code(path: &Path) -> String {
    let src = fs::read_to_string(path).unwrap();
    let first = src.lines().next().unwrap();
    first
        .trim_start_matches("(* expect:")
        .trim_end_matches("*)")
        .trim()
        .to_string()
}

/// Rows of a golden file: `(depth, goals, closed)`.
pub fn golden_rows(path: &Path) -> Vec<(usize, usize, bool)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let mut w = l.split_whitespace();
            let mut n = || w.next().unwrap().parse::<usize>().unwrap();
            (n(), n(), n() == 1)
        })
        .collect()
}

/// Commands (`\name` or `\<symbol>`) in order of appearance.
pub fn commands(tex: &str) -> Vec<String> {
    let b = tex.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        if b[i] == b'\\' && i + 1 < b.len() {
            let start = i + 1;
            let mut j = start;
            while j < b.len() && b[j].is_ascii_alphabetic() {
                j += 1;
            }
            if j == start {
                j = start + 1;
            }
            out.push(tex[start..j].to_string());
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

/// Unescaped `{`/`}` balance and matching `\begin{x}`/`\end{x}` pairs.
pub fn balanced(tex: &str) -> Result<(), String> {
    let b = tex.as_bytes();
    let mut depth: i64 = 0;
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'\\' => i += 1,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth < 0 {
                    return Err(format!("unmatched `}}` at byte {i}"));
                }
            }
            _ => {}
        }
        i += 1;
    }
    if depth != 0 {
        return Err(format!("{depth} unclosed `{{`"));
    }
    let mut envs = Vec::new();
    for (pos, _) in tex.match_indices("\\begin{") {
        let name = &tex[pos + 7..pos + 7 + tex[pos + 7..].find('}').unwrap()];
        envs.push((pos, true, name.to_string()));
    }
    for (pos, _) in tex.match_indices("\\end{") {
        let name = &tex[pos + 5..pos + 5 + tex[pos + 5..].find('}').unwrap()];
        envs.push((pos, false, name.to_string()));
    }
    envs.sort();
    let mut stack = Vec::new();
    for (_, open, name) in envs {
        if open {
            stack.push(name);
        } else if stack.pop().as_deref() != Some(name.as_str()) {
            return Err(format!("`\\end{{{name}}}` does not match"));
        }
    }
    if !stack.is_empty() {
        return Err(format!("unclosed environments {stack:?}"));
    }
    Ok(())
}

/// Every command is prefixed or a listed LaTeX command.
pub fn macro_discipline(fragment: &str, prefix: &str) -> Result<(), String> {
    for c in commands(fragment) {
        if !(c.starts_with(prefix) || ALLOWED_COMMANDS.contains(&c.as_str())) {
            return Err(format!("command `\\{c}` outside the allowlist"));
        }
    }
    Ok(())
}

/// The arguments of every `\<prefix><name>{...}` occurrence.
pub fn macro_args(tex: &str, prefix: &str, name: &str) -> Vec<String> {
    let needle = format!("\\{prefix}{name}{{");
    let mut out = Vec::new();
    for (pos, _) in tex.match_indices(&needle) {
        let start = pos + needle.len();
        let b = tex.as_bytes();
        let mut depth = 1;
        let mut j = start;
        while j < b.len() {
            match b[j] {
                b'\\' => j += 1,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                _ => {}
            }
            j += 1;
        }
        out.push(tex[start..j].to_string());
    }
    out
}

/// A text cell may contain the nine specials only in escaped form.
pub fn escaped_text(cell: &str) -> Result<(), String> {
    const WORDS: [&str; 3] = ["textasciitilde{}", "textasciicircum{}", "textbackslash{}"];
    let mut rest = cell;
    while let Some(c) = rest.chars().next() {
        if c == '\\' {
            let tail = &rest[1..];
            if let Some(w) = WORDS.iter().find(|w| tail.starts_with(*w)) {
                rest = &tail[w.len()..];
                continue;
            }
            match tail.chars().next() {
                Some(s @ ('#' | '$' | '%' | '&' | '_' | '{' | '}')) => {
                    rest = &tail[s.len_utf8()..];
                    continue;
                }
                _ => return Err(format!("stray backslash in `{cell}`")),
            }
        }
        if "#$%&_{}~^".contains(c) {
            return Err(format!("unescaped `{c}` in `{cell}`"));
        }
        rest = &rest[c.len_utf8()..];
    }
    Ok(())
}
