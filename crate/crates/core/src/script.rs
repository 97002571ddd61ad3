//! Vernacular sentence splitting and classification.
//!
//! A source file is cut into [`Sentence`]s. Ordinary sentences end at a `.`
//! followed by whitespace or end of input; bullets (`-`, `+`, `*` runs) and
//! braces are standalone tokens recognised only where a new sentence may
//! begin. Comments `(* ... *)` nest, and neither comments nor string literals
//! can terminate a sentence.

use std::fmt;
use std::ops::Range;

use thiserror::Error;

/// Deepest bullet run accepted (`---`).
pub const MAX_BULLET_DEPTH: usize = 3;

/// 1-based, inclusive source position of a sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Span {
    pub start_line: usize,
    pub start_col: usize,
    pub end_line: usize,
    pub end_col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start_line, self.start_col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TheoremKind {
    Theorem,
    Lemma,
    Fact,
    Example,
    Corollary,
    Proposition,
    Remark,
}

impl TheoremKind {
    pub const ALL: [TheoremKind; 7] = [
        TheoremKind::Theorem,
        TheoremKind::Lemma,
        TheoremKind::Fact,
        TheoremKind::Example,
        TheoremKind::Corollary,
        TheoremKind::Proposition,
        TheoremKind::Remark,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            TheoremKind::Theorem => "Theorem",
            TheoremKind::Lemma => "Lemma",
            TheoremKind::Fact => "Fact",
            TheoremKind::Example => "Example",
            TheoremKind::Corollary => "Corollary",
            TheoremKind::Proposition => "Proposition",
            TheoremKind::Remark => "Remark",
        }
    }

    pub fn from_keyword(word: &str) -> Option<TheoremKind> {
        Self::ALL.into_iter().find(|k| k.keyword() == word)
    }
}

impl fmt::Display for TheoremKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// How a proof was closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Completion {
    Qed,
    Admitted,
    Defined,
}

impl Completion {
    pub fn keyword(self) -> &'static str {
        match self {
            Completion::Qed => "Qed",
            Completion::Admitted => "Admitted",
            Completion::Defined => "Defined",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Completion> {
        match word {
            "Qed" => Some(Completion::Qed),
            "Admitted" => Some(Completion::Admitted),
            "Defined" => Some(Completion::Defined),
            _ => None,
        }
    }
}

impl fmt::Display for Completion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BulletSymbol {
    Dash,
    Plus,
    Star,
}

impl BulletSymbol {
    pub fn from_char(c: char) -> Option<BulletSymbol> {
        match c {
            '-' => Some(BulletSymbol::Dash),
            '+' => Some(BulletSymbol::Plus),
            '*' => Some(BulletSymbol::Star),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            BulletSymbol::Dash => '-',
            BulletSymbol::Plus => '+',
            BulletSymbol::Star => '*',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SentenceKind {
    StatementHeader {
        kind: TheoremKind,
        name: String,
        statement_text: String,
    },
    ProofOpen,
    Tactic(String),
    Bullet {
        symbol: BulletSymbol,
        depth: usize,
    },
    BraceOpen,
    BraceClose,
    Focus(usize),
    Unfocus,
    ProofEnd(Completion),
    OtherVernacular(String),
}

impl SentenceKind {
    /// Bullets, braces and the focus commands.
    pub fn is_structural(&self) -> bool {
        matches!(
            self,
            SentenceKind::Bullet { .. }
                | SentenceKind::BraceOpen
                | SentenceKind::BraceClose
                | SentenceKind::Focus(_)
                | SentenceKind::Unfocus
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    /// Verbatim source slice, including the terminating period.
    pub text: String,
    pub span: Span,
    /// Byte range of `text` in the source.
    pub range: Range<usize>,
    pub kind: SentenceKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("{at}: unterminated comment")]
    UnterminatedComment { at: Span },
    #[error("{at}: unterminated string literal")]
    UnterminatedString { at: Span },
    #[error("{at}: `*)` without an open comment")]
    StrayClosingComment { at: Span },
    #[error("{at}: bullet `{run}` is deeper than {MAX_BULLET_DEPTH}")]
    DepthExceeded { at: Span, run: String },
    #[error("{at}: sentence is not terminated by a period")]
    UnterminatedSentence { at: Span },
    #[error("{at}: malformed statement header `{text}`, expected `name : statement`")]
    MalformedHeader { at: Span, text: String },
    #[error("{at}: bad Focus argument `{arg}`")]
    BadFocusArg { at: Span, arg: String },
}

impl LexError {
    pub fn code(&self) -> &'static str {
        match self {
            LexError::UnterminatedComment { .. } => "UnterminatedComment",
            LexError::UnterminatedString { .. } => "UnterminatedString",
            LexError::StrayClosingComment { .. } => "StrayClosingComment",
            LexError::DepthExceeded { .. } => "DepthExceeded",
            LexError::UnterminatedSentence { .. } => "UnterminatedSentence",
            LexError::MalformedHeader { .. } => "MalformedHeader",
            LexError::BadFocusArg { .. } => "BadFocusArg",
        }
    }

    pub fn span(&self) -> Span {
        match self {
            LexError::UnterminatedComment { at }
            | LexError::UnterminatedString { at }
            | LexError::StrayClosingComment { at }
            | LexError::DepthExceeded { at, .. }
            | LexError::UnterminatedSentence { at }
            | LexError::MalformedHeader { at, .. }
            | LexError::BadFocusArg { at, .. } => *at,
        }
    }
}

/// Classification failures, without a position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("malformed statement header `{0}`")]
    MalformedHeader(String),
    #[error("bad Focus argument `{0}`")]
    BadFocusArg(String),
    #[error("bullet `{0}` too deep")]
    DepthExceeded(String),
}

/// Maps byte offsets to 1-based line/column (columns count chars).
struct LineIndex<'a> {
    src: &'a str,
    line_starts: Vec<usize>,
}

impl<'a> LineIndex<'a> {
    fn new(src: &'a str) -> Self {
        let mut line_starts = vec![0];
        line_starts.extend(src.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex { src, line_starts }
    }

    fn position(&self, offset: usize) -> (usize, usize) {
        let line = match self.line_starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let col = self.src[self.line_starts[line]..offset].chars().count() + 1;
        (line + 1, col)
    }

    /// Span of the inclusive-exclusive byte range `start..end` (non-empty).
    fn span(&self, start: usize, end: usize) -> Span {
        let (start_line, start_col) = self.position(start);
        let last = self.src[..end]
            .char_indices()
            .next_back()
            .map(|(i, _)| i)
            .unwrap_or(start);
        let (end_line, end_col) = self.position(last.max(start));
        Span {
            start_line,
            start_col,
            end_line,
            end_col,
        }
    }

    fn point(&self, offset: usize) -> Span {
        let (l, c) = self.position(offset);
        Span {
            start_line: l,
            start_col: c,
            end_line: l,
            end_col: c,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Region {
    Outside,
    AfterHeader,
    InProof,
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    index: LineIndex<'a>,
}

impl<'a> Lexer<'a> {
    fn peek(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn at(&self, s: &str) -> bool {
        self.bytes[self.pos..].starts_with(s.as_bytes())
    }

    /// Skips a comment starting at `self.pos` (which must be at `(*`).
    fn skip_comment(&mut self) -> Result<(), LexError> {
        let open = self.pos;
        let mut depth = 0usize;
        while self.pos < self.bytes.len() {
            if self.at("(*") {
                depth += 1;
                self.pos += 2;
            } else if self.at("*)") {
                depth -= 1;
                self.pos += 2;
                if depth == 0 {
                    return Ok(());
                }
            } else if self.bytes[self.pos] == b'"' {
                self.skip_string()?;
            } else {
                self.pos += 1;
            }
        }
        Err(LexError::UnterminatedComment {
            at: self.index.point(open),
        })
    }

    /// Skips a string literal starting at `self.pos` (at `"`); `""` escapes a quote.
    fn skip_string(&mut self) -> Result<(), LexError> {
        let open = self.pos;
        self.pos += 1;
        while self.pos < self.bytes.len() {
            if self.bytes[self.pos] == b'"' {
                if self.peek(1) == Some(b'"') {
                    self.pos += 2;
                    continue;
                }
                self.pos += 1;
                return Ok(());
            }
            self.pos += 1;
        }
        Err(LexError::UnterminatedString {
            at: self.index.point(open),
        })
    }

    /// Skips whitespace and comments between sentences.
    fn skip_gap(&mut self) -> Result<(), LexError> {
        loop {
            match self.peek(0) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'(') if self.peek(1) == Some(b'*') => self.skip_comment()?,
                _ => return Ok(()),
            }
        }
    }

    /// Scans an ordinary sentence; returns the end offset (past the period).
    fn scan_sentence(&mut self) -> Result<usize, LexError> {
        let start = self.pos;
        while self.pos < self.bytes.len() {
            if self.at("(*") {
                self.skip_comment()?;
            } else if self.at("*)") {
                return Err(LexError::StrayClosingComment {
                    at: self.index.point(self.pos),
                });
            } else if self.bytes[self.pos] == b'"' {
                self.skip_string()?;
            } else if self.bytes[self.pos] == b'.'
                && self.peek(1).is_none_or(|b| b.is_ascii_whitespace())
            {
                self.pos += 1;
                return Ok(self.pos);
            } else {
                self.pos += 1;
            }
        }
        Err(LexError::UnterminatedSentence {
            at: self.index.point(start),
        })
    }
}

/// Splits `source` into classified sentences.
pub fn tokenize_sentences(source: &str) -> Result<Vec<Sentence>, LexError> {
    let mut lx = Lexer {
        src: source,
        bytes: source.as_bytes(),
        pos: 0,
        index: LineIndex::new(source),
    };
    let mut out = Vec::new();
    let mut region = Region::Outside;
    loop {
        lx.skip_gap()?;
        let Some(b) = lx.peek(0) else { break };
        let start = lx.pos;
        let kind = if b == b'*' && lx.peek(1) == Some(b')') {
            return Err(LexError::StrayClosingComment {
                at: lx.index.point(start),
            });
        } else if let Some(symbol) = BulletSymbol::from_char(b as char) {
            let mut depth = 0;
            while lx.peek(0) == Some(b) && !(b == b'*' && lx.peek(1) == Some(b')')) {
                depth += 1;
                lx.pos += 1;
            }
            if depth > MAX_BULLET_DEPTH {
                return Err(LexError::DepthExceeded {
                    at: lx.index.span(start, lx.pos),
                    run: lx.src[start..lx.pos].to_string(),
                });
            }
            SentenceKind::Bullet { symbol, depth }
        } else if b == b'{' {
            lx.pos += 1;
            SentenceKind::BraceOpen
        } else if b == b'}' {
            lx.pos += 1;
            SentenceKind::BraceClose
        } else {
            let end = lx.scan_sentence()?;
            let raw = &source[start..end];
            classify(raw).map_err(|e| {
                let at = lx.index.span(start, end);
                match e {
                    ClassifyError::MalformedHeader(text) => LexError::MalformedHeader { at, text },
                    ClassifyError::BadFocusArg(arg) => LexError::BadFocusArg { at, arg },
                    ClassifyError::DepthExceeded(run) => LexError::DepthExceeded { at, run },
                }
            })?
        };
        let end = lx.pos;
        let kind = match kind {
            SentenceKind::Tactic(body) if region == Region::Outside => {
                SentenceKind::OtherVernacular(body)
            }
            k => k,
        };
        region = match (&kind, region) {
            (SentenceKind::StatementHeader { .. }, _) => Region::AfterHeader,
            (SentenceKind::ProofEnd(_), _) => Region::Outside,
            (SentenceKind::ProofOpen, _) => Region::InProof,
            (SentenceKind::OtherVernacular(_), r) => r,
            (_, Region::AfterHeader) => Region::InProof,
            (_, r) => r,
        };
        out.push(Sentence {
            text: source[start..end].to_string(),
            span: lx.index.span(start, end),
            range: start..end,
            kind,
        });
    }
    Ok(out)
}

/// Removes comments from a sentence and collapses whitespace runs.
pub fn strip_comments(raw: &str) -> String {
    let bytes = raw.as_bytes();
    let mut out = String::with_capacity(raw.len());
    let mut i = 0;
    let mut depth = 0usize;
    let mut seg_start = 0;
    let mut in_string = false;
    while i < bytes.len() {
        if in_string {
            if bytes[i] == b'"' {
                if bytes.get(i + 1) == Some(&b'"') {
                    i += 2;
                    continue;
                }
                in_string = false;
            }
            i += 1;
        } else if bytes[i..].starts_with(b"(*") {
            if depth == 0 {
                out.push_str(&raw[seg_start..i]);
                out.push(' ');
            }
            depth += 1;
            i += 2;
        } else if depth > 0 && bytes[i..].starts_with(b"*)") {
            depth -= 1;
            i += 2;
            if depth == 0 {
                seg_start = i;
            }
        } else {
            if bytes[i] == b'"' {
                in_string = true;
            }
            i += 1;
        }
    }
    if depth == 0 {
        out.push_str(&raw[seg_start..]);
    }
    collapse_ws(&out)
}

pub(crate) fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

/// Classifies one raw sentence by its leading keyword.
///
/// Unknown sentences come back as [`SentenceKind::Tactic`]; the tokenizer
/// turns those into [`SentenceKind::OtherVernacular`] outside of proofs.
pub fn classify(raw_sentence: &str) -> Result<SentenceKind, ClassifyError> {
    let body = strip_comments(raw_sentence);
    let body = body.strip_suffix('.').unwrap_or(&body).trim_end();

    if !body.is_empty() && body.chars().all(|c| c == body.chars().next().unwrap()) {
        if let Some(symbol) = BulletSymbol::from_char(body.chars().next().unwrap()) {
            let depth = body.len();
            if depth > MAX_BULLET_DEPTH {
                return Err(ClassifyError::DepthExceeded(body.to_string()));
            }
            return Ok(SentenceKind::Bullet { symbol, depth });
        }
    }
    match body {
        "{" => return Ok(SentenceKind::BraceOpen),
        "}" => return Ok(SentenceKind::BraceClose),
        "Proof" => return Ok(SentenceKind::ProofOpen),
        "Unfocus" => return Ok(SentenceKind::Unfocus),
        "Focus" => return Ok(SentenceKind::Focus(1)),
        _ => {}
    }
    let (head, rest) = match body.split_once(char::is_whitespace) {
        Some((h, r)) => (h, r.trim()),
        None => (body, ""),
    };
    if let Some(completion) = Completion::from_keyword(body) {
        return Ok(SentenceKind::ProofEnd(completion));
    }
    if head == "Focus" {
        return match rest.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(SentenceKind::Focus(n)),
            _ => Err(ClassifyError::BadFocusArg(rest.to_string())),
        };
    }
    if let Some(kind) = TheoremKind::from_keyword(head) {
        let malformed = || ClassifyError::MalformedHeader(body.to_string());
        let (name, statement) = rest.split_once(':').ok_or_else(malformed)?;
        let name = name.trim();
        let statement = statement.trim();
        if !is_ident(name) || statement.is_empty() {
            return Err(malformed());
        }
        return Ok(SentenceKind::StatementHeader {
            kind,
            name: name.to_string(),
            statement_text: statement.to_string(),
        });
    }
    Ok(SentenceKind::Tactic(body.to_string()))
}
