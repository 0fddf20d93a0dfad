use std::path::{Path, PathBuf};

use globset::{Glob, GlobSet, GlobSetBuilder};
use rayon::prelude::*;
use walkdir::WalkDir;

use super::{Classifier, CodeStats, CodestatError, FileStats, FrameworkProfile, ScanWarning, WarningKind};

/// Include/exclude filters applied to paths relative to the scan root.
#[derive(Debug, Clone, Default)]
pub struct ScanOptions {
    pub include: Vec<String>,
    pub exclude: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FileOutcome {
    Counted(FileStats),
    /// Binary content; the file contributes nothing.
    Skipped(ScanWarning),
}

/// Lowercase, dot-prefixed extension of `path`, if any.
pub fn extension_of(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| format!(".{}", e.to_ascii_lowercase()))
}

fn classify_bytes(classifier: &Classifier, label: &str, ext: &str, bytes: &[u8]) -> FileOutcome {
    if bytes.contains(&0) {
        log::warn!("{label}: binary content, skipped");
        return FileOutcome::Skipped(ScanWarning {
            path: label.to_string(),
            kind: WarningKind::Binary,
            message: "binary content (NUL byte), skipped".into(),
        });
    }
    FileOutcome::Counted(classifier.classify_text(label, ext, bytes).0)
}

pub fn classify_file(path: &Path, profiles: &[FrameworkProfile]) -> Result<FileOutcome, CodestatError> {
    let bytes = std::fs::read(path).map_err(|source| CodestatError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let ext = extension_of(path).unwrap_or_default();
    let label = path.to_string_lossy();
    Ok(classify_bytes(&Classifier::new(profiles), &label, &ext, &bytes))
}

fn build_globs(patterns: &[String]) -> Result<Option<GlobSet>, CodestatError> {
    if patterns.is_empty() {
        return Ok(None);
    }
    let mut b = GlobSetBuilder::new();
    for p in patterns {
        let glob = Glob::new(p).map_err(|e| CodestatError::Glob {
            pattern: p.clone(),
            message: e.to_string(),
        })?;
        b.add(glob);
    }
    b.build().map(Some).map_err(|e| CodestatError::Glob {
        pattern: patterns.join(","),
        message: e.to_string(),
    })
}

fn relative_label(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Recursively scans `root`. Per-file paths are reported relative to `root`
/// with `/` separators, sorted lexicographically.
pub fn scan_tree(
    root: &Path,
    profiles: &[FrameworkProfile],
    options: &ScanOptions,
) -> Result<CodeStats, CodestatError> {
    if !root.exists() {
        return Err(CodestatError::MissingRoot(root.to_path_buf()));
    }
    let include = build_globs(&options.include)?;
    let exclude = build_globs(&options.exclude)?;
    let classifier = Classifier::new(profiles);

    let mut stats = CodeStats::empty(profiles);
    let mut files: Vec<(String, PathBuf, String)> = Vec::new();
    for entry in WalkDir::new(root).follow_links(false) {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                let path = e.path().map(|p| relative_label(root, p)).unwrap_or_default();
                log::warn!("{path}: {e}");
                stats.warnings.push(ScanWarning {
                    path,
                    kind: WarningKind::Unreadable,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let Some(ext) = extension_of(entry.path()) else {
            continue;
        };
        if !classifier.handles_extension(&ext) {
            continue;
        }
        let label = if entry.path() == root {
            entry.file_name().to_string_lossy().into_owned()
        } else {
            relative_label(root, entry.path())
        };
        if include.as_ref().is_some_and(|g| !g.is_match(&label)) {
            continue;
        }
        if exclude.as_ref().is_some_and(|g| g.is_match(&label)) {
            continue;
        }
        files.push((label, entry.into_path(), ext));
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));

    let outcomes: Vec<Result<FileOutcome, ScanWarning>> = files
        .par_iter()
        .map(|(label, path, ext)| match std::fs::read(path) {
            Ok(bytes) => Ok(classify_bytes(&classifier, label, ext, &bytes)),
            Err(e) => {
                log::warn!("{label}: {e}");
                Err(ScanWarning {
                    path: label.clone(),
                    kind: WarningKind::Unreadable,
                    message: e.to_string(),
                })
            }
        })
        .collect();

    for outcome in outcomes {
        match outcome {
            Ok(FileOutcome::Counted(f)) => stats.add_file(f),
            Ok(FileOutcome::Skipped(w)) | Err(w) => stats.warnings.push(w),
        }
    }
    Ok(stats)
}
