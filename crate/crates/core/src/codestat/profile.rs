//! Framework profiles: the marker sets that attribute source lines to a
//! parallel programming framework.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::CodestatError;

/// Profiles shipped with the crate (OpenMP, OpenACC, OpenCL, CUDA).
pub const DEFAULT_PROFILES_JSON: &str = include_str!("../../data/profiles.json");

/// The configurable marker set that defines one parallel framework.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameworkProfile {
    pub name: String,
    /// Extensions whose files are scanned for this framework's markers.
    #[serde(default)]
    pub extensions: BTreeSet<String>,
    /// Extensions whose files belong to this framework in their entirety.
    #[serde(default)]
    pub whole_file_extensions: BTreeSet<String>,
    /// Statement prefixes matched after leading whitespace, e.g. `#pragma omp`.
    #[serde(default)]
    pub directive_markers: Vec<String>,
    /// Identifier markers matched at identifier boundaries. `name*` is a
    /// prefix match and `name[A-Z]*` requires an uppercase letter right
    /// after the prefix.
    #[serde(default)]
    pub call_markers: Vec<String>,
    /// Literal tokens matched anywhere in code text.
    #[serde(default)]
    pub syntax_markers: Vec<String>,
}

/// A parsed call marker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum CallMarker {
    Exact(Vec<u8>),
    Prefix(Vec<u8>),
    PrefixThenUpper(Vec<u8>),
}

impl CallMarker {
    pub(crate) fn parse(marker: &str) -> CallMarker {
        if let Some(stem) = marker.strip_suffix("[A-Z]*") {
            CallMarker::PrefixThenUpper(stem.as_bytes().to_vec())
        } else if let Some(stem) = marker.strip_suffix('*') {
            CallMarker::Prefix(stem.as_bytes().to_vec())
        } else {
            CallMarker::Exact(marker.as_bytes().to_vec())
        }
    }

    pub(crate) fn stem(&self) -> &[u8] {
        match self {
            CallMarker::Exact(s) | CallMarker::Prefix(s) | CallMarker::PrefixThenUpper(s) => s,
        }
    }
}

impl FrameworkProfile {
    /// Every extension this profile cares about.
    pub fn all_extensions(&self) -> impl Iterator<Item = &str> {
        self.extensions
            .iter()
            .chain(self.whole_file_extensions.iter())
            .map(String::as_str)
    }

    fn validate(&self) -> Result<(), CodestatError> {
        if self.name.trim().is_empty() {
            return Err(CodestatError::InvalidProfile {
                name: self.name.clone(),
                reason: "framework name is empty".into(),
            });
        }
        let markers = self
            .directive_markers
            .iter()
            .chain(&self.call_markers)
            .chain(&self.syntax_markers);
        for m in markers {
            if m.trim().is_empty() {
                return Err(CodestatError::EmptyMarker {
                    name: self.name.clone(),
                });
            }
        }
        for m in &self.call_markers {
            if CallMarker::parse(m).stem().is_empty() {
                return Err(CodestatError::EmptyMarker {
                    name: self.name.clone(),
                });
            }
        }
        if let Some(ext) = self.extensions.intersection(&self.whole_file_extensions).next() {
            return Err(CodestatError::InvalidProfile {
                name: self.name.clone(),
                reason: format!("extension {ext} is both scanned and whole-file"),
            });
        }
        for ext in self.all_extensions() {
            if !ext.starts_with('.') || ext.len() < 2 || ext.to_ascii_lowercase() != ext {
                return Err(CodestatError::InvalidProfile {
                    name: self.name.clone(),
                    reason: format!("extension {ext:?} must be dot-prefixed lowercase"),
                });
            }
        }
        Ok(())
    }
}

/// Parses a profile config. Blank input yields the built-in profiles.
pub fn load_profiles(config: &str) -> Result<Vec<FrameworkProfile>, CodestatError> {
    if config.trim().is_empty() {
        return default_profiles();
    }
    let profiles: Vec<FrameworkProfile> = serde_json::from_str(config).map_err(|e| CodestatError::Config {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    validate_set(&profiles)?;
    Ok(profiles)
}

pub fn default_profiles() -> Result<Vec<FrameworkProfile>, CodestatError> {
    load_profiles(DEFAULT_PROFILES_JSON)
}

fn validate_set(profiles: &[FrameworkProfile]) -> Result<(), CodestatError> {
    let mut seen = BTreeSet::new();
    for p in profiles {
        p.validate()?;
        if !seen.insert(p.name.as_str()) {
            return Err(CodestatError::DuplicateFramework(p.name.clone()));
        }
    }
    Ok(())
}
