pub mod arena;
pub mod bayes;
pub mod bgame;
pub mod brute;
pub mod doc;
pub mod fixtures;
pub mod format;
pub mod maid;
pub mod nid;
pub mod reproduce;
pub mod samples;
pub mod solver;

/// Crate-wide error type. Validation problems that should be *reported* rather
/// than aborted on live in [`ValidationReport`] instead.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Model construction or use of a model that does not validate.
    #[error("{0}")]
    Model(String),
    /// Malformed document text.
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    /// Well-formed document that does not fit the schema.
    #[error("schema error at {path} (line {line}, column {col}): {msg}")]
    Schema {
        path: String,
        line: usize,
        col: usize,
        msg: String,
    },
    /// Bad query arguments or evidence with zero probability.
    #[error("{0}")]
    Query(String),
    /// Equilibrium search exhausted every configured stage.
    #[error("no equilibrium found within tolerance; best regret seen {best_regret:.3e}")]
    NoEquilibrium { best_regret: f64 },
    /// Exhaustive verification refused because the joint policy space is too big.
    #[error("joint policy space has {size} entries, over the cap of {cap}")]
    PolicySpaceTooLarge { size: u128, cap: u128 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

// ============================================================================
// Validation findings
// ============================================================================

/// One violation discovered by a `validate_*` function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    /// Stable machine-readable tag, e.g. "cycle", "row-sum", "perfect-recall".
    pub code: &'static str,
    pub message: String,
}

impl Finding {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Finding {
            code,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn push(&mut self, code: &'static str, message: impl Into<String>) {
        self.findings.push(Finding::new(code, message));
    }

    pub fn has(&self, code: &str) -> bool {
        self.findings.iter().any(|f| f.code == code)
    }

    /// Err(Model) carrying the first finding if the report is not clean.
    pub fn into_result(self) -> Result<()> {
        match self.findings.first() {
            None => Ok(()),
            Some(f) => Err(Error::Model(format!(
                "model does not validate: {} ({} finding(s) total)",
                f.message,
                self.findings.len()
            ))),
        }
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.findings.is_empty() {
            return writeln!(f, "ok: no violations");
        }
        for v in &self.findings {
            writeln!(f, "{}: {}", v.code, v.message)?;
        }
        Ok(())
    }
}

// ============================================================================
// Shared small utilities
// ============================================================================

/// Strict identifier: what users may name things in authored documents.
pub fn valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Node names as they appear in mechanically derived networks. Extends the
/// strict identifier set with the separators used when replicating nodes
/// across blocks and agents ("Steal@TL#Alice", "Mod[Alice,Steal]@TL").
pub fn valid_node_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| {
            c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '@' | '#' | '[' | ']' | ',' | '.')
        })
        && s.chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
}

/// Canonical decimal rendering used for value labels and serialized numbers:
/// round to 12 significant digits, then print the shortest string that parses
/// back to the rounded value.
pub fn canon_float(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("round-trip");
    if rounded == 0.0 {
        return "0".to_string();
    }
    let a = rounded.abs();
    if (1e-5..1e17).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idents() {
        assert!(valid_ident("Steal"));
        assert!(valid_ident("_x-2"));
        assert!(!valid_ident("2x"));
        assert!(!valid_ident(""));
        assert!(!valid_ident("a b"));
        assert!(valid_node_name("Mod[Alice,Steal]@TL"));
        assert!(valid_node_name("ThrownOut@TL#Alice"));
        assert!(!valid_node_name("@TL"));
    }

    #[test]
    fn float_rendering() {
        assert_eq!(canon_float(0.0), "0");
        assert_eq!(canon_float(-0.0), "0");
        assert_eq!(canon_float(110.0), "110");
        assert_eq!(canon_float(-15.6), "-15.6");
        assert_eq!(canon_float(0.3 + 0.4), "0.7");
        assert_eq!(canon_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(canon_float(1e20), "1e20");
        assert_eq!(canon_float(2.5e-9), "2.5e-9");
    }
}
