use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{lex_lines, CommentStyle, LineKind};
use super::profile::{CallMarker, FrameworkProfile};
use super::{FileStats, LineClass};

fn is_ident(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Collapses whitespace runs to one space and drops whitespace after a
/// leading `#`, so `#  pragma   omp` compares equal to `#pragma omp`.
fn normalize_directive(text: &[u8]) -> Vec<u8> {
    let text = text.trim_ascii_start();
    let mut out = Vec::with_capacity(text.len());
    let mut rest = text;
    if let Some(tail) = rest.strip_prefix(b"#") {
        out.push(b'#');
        rest = tail.trim_ascii_start();
    }
    let mut in_space = false;
    for &b in rest {
        if b.is_ascii_whitespace() {
            in_space = true;
        } else {
            if in_space {
                out.push(b' ');
                in_space = false;
            }
            out.push(b);
        }
    }
    out
}

#[derive(Debug, Clone)]
struct CompiledProfile {
    name: String,
    directives: Vec<Vec<u8>>,
    calls: Vec<CallMarker>,
    syntax: Vec<Vec<u8>>,
}

impl CompiledProfile {
    fn new(p: &FrameworkProfile) -> Self {
        CompiledProfile {
            name: p.name.clone(),
            directives: p
                .directive_markers
                .iter()
                .map(|m| normalize_directive(m.as_bytes()))
                .collect(),
            calls: p.call_markers.iter().map(|m| CallMarker::parse(m)).collect(),
            syntax: p.syntax_markers.iter().map(|m| m.as_bytes().to_vec()).collect(),
        }
    }

    fn directive_match(&self, normalized: &[u8]) -> bool {
        self.directives.iter().any(|d| {
            normalized.starts_with(d)
                && normalized
                    .get(d.len())
                    .is_none_or(|&b| !is_ident(b) || !d.last().copied().is_some_and(is_ident))
        })
    }

    fn call_match(&self, line: &[u8]) -> bool {
        self.calls.iter().any(|m| call_marker_occurs(m, line))
    }

    fn syntax_match(&self, line: &[u8]) -> bool {
        self.syntax.iter().any(|s| contains(line, s))
    }
}

fn contains(hay: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && hay.windows(needle.len()).any(|w| w == needle)
}

fn call_marker_occurs(marker: &CallMarker, line: &[u8]) -> bool {
    let stem = marker.stem();
    if stem.is_empty() || stem.len() > line.len() {
        return false;
    }
    (0..=line.len() - stem.len()).any(|at| {
        if &line[at..at + stem.len()] != stem {
            return false;
        }
        if at > 0 && is_ident(line[at - 1]) {
            return false;
        }
        let after = line.get(at + stem.len()).copied();
        match marker {
            CallMarker::Exact(_) => after.is_none_or(|b| !is_ident(b)),
            CallMarker::Prefix(_) => true,
            CallMarker::PrefixThenUpper(_) => after.is_some_and(|b| b.is_ascii_uppercase()),
        }
    })
}

/// Framework matches for one line, split by how they matched.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct LineMatches {
    pub all: BTreeSet<String>,
    /// Frameworks matched by a directive marker; these carry over
    /// backslash-continued lines.
    pub directive: BTreeSet<String>,
}

/// Profiles compiled for repeated matching.
#[derive(Debug, Clone)]
pub struct Classifier {
    profiles: Vec<FrameworkProfile>,
    compiled: Vec<CompiledProfile>,
}

impl Classifier {
    pub fn new(profiles: &[FrameworkProfile]) -> Self {
        Classifier {
            profiles: profiles.to_vec(),
            compiled: profiles.iter().map(CompiledProfile::new).collect(),
        }
    }

    pub fn profiles(&self) -> &[FrameworkProfile] {
        &self.profiles
    }

    /// True when some profile scans or wholly attributes files with `ext`.
    pub fn handles_extension(&self, ext: &str) -> bool {
        self.profiles.iter().any(|p| p.all_extensions().any(|e| e == ext))
    }

    pub fn line_matches(&self, code: &[u8], only: Option<&[usize]>) -> LineMatches {
        let normalized = normalize_directive(code);
        let mut m = LineMatches::default();
        let mut check = |cp: &CompiledProfile| {
            if cp.directive_match(&normalized) {
                m.directive.insert(cp.name.clone());
                m.all.insert(cp.name.clone());
            } else if cp.call_match(code) || cp.syntax_match(code) {
                m.all.insert(cp.name.clone());
            }
        };
        match only {
            Some(idx) => idx.iter().for_each(|&i| check(&self.compiled[i])),
            None => self.compiled.iter().for_each(check),
        }
        m
    }

    pub fn classify_line(&self, code: &[u8]) -> BTreeSet<String> {
        self.line_matches(code, None).all
    }

    /// Classifies a whole file's text. `ext` is the dot-prefixed lowercase
    /// extension and decides which profiles apply.
    pub fn classify_text(&self, path: &str, ext: &str, text: &[u8]) -> (FileStats, Vec<LineClass>) {
        let scanned: Vec<usize> = self
            .profiles
            .iter()
            .enumerate()
            .filter(|(_, p)| p.extensions.contains(ext))
            .map(|(i, _)| i)
            .collect();
        let whole: Vec<&str> = self
            .profiles
            .iter()
            .filter(|p| p.whole_file_extensions.contains(ext))
            .map(|p| p.name.as_str())
            .collect();

        let mut classes = Vec::new();
        let mut carried: BTreeSet<String> = BTreeSet::new();
        for (i, line) in lex_lines(text, CommentStyle::CFamily).into_iter().enumerate() {
            let mut frameworks = BTreeSet::new();
            if line.kind == LineKind::Code {
                let m = self.line_matches(&line.masked, Some(&scanned));
                frameworks.extend(m.all);
                frameworks.extend(carried.iter().cloned());
                frameworks.extend(whole.iter().map(|s| s.to_string()));
                if line.continues() {
                    carried.extend(m.directive);
                } else {
                    carried.clear();
                }
            } else {
                carried.clear();
            }
            classes.push(LineClass {
                line_no: i + 1,
                kind: line.kind,
                frameworks,
            });
        }

        let mut loc_par: BTreeMap<String, u64> = self.profiles.iter().map(|p| (p.name.clone(), 0)).collect();
        let mut loc_total = 0;
        for c in classes.iter().filter(|c| c.kind == LineKind::Code) {
            loc_total += 1;
            for f in &c.frameworks {
                *loc_par.entry(f.clone()).or_default() += 1;
            }
        }
        (
            FileStats {
                path: path.to_string(),
                loc_total,
                loc_par,
            },
            classes,
        )
    }
}

/// Frameworks attributed to one masked code line.
pub fn classify_line(code: &[u8], profiles: &[FrameworkProfile]) -> BTreeSet<String> {
    Classifier::new(profiles).classify_line(code)
}
