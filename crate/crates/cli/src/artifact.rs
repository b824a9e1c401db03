//! Solved coefficient vectors saved next to the results CSV.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tfc_core::problems::ProblemId;
use tfc_core::BasisKind;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct XiArtifact {
    pub problem: String,
    pub basis: String,
    pub n: usize,
    pub m: usize,
    pub features: Vec<Vec<u32>>,
    pub xi: Vec<f64>,
}

pub fn file_name(problem: ProblemId, basis: BasisKind, n: usize, m: usize) -> String {
    format!("xi_{problem}_{}_n{n}_m{m}.json", basis.name())
}

pub fn save(
    dir: &Path,
    a: &XiArtifact,
    problem: ProblemId,
    basis: BasisKind,
) -> Result<PathBuf, CliError> {
    let path = dir.join(file_name(problem, basis, a.n, a.m));
    let text = serde_json::to_string_pretty(a).map_err(|e| CliError::failure(e.to_string()))?;
    fs::write(&path, text).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Every artifact in `dir` for `problem`, optionally narrowed by basis, n and m.
pub fn find(
    dir: &Path,
    problem: ProblemId,
    basis: Option<BasisKind>,
    n: Option<usize>,
    m: Option<usize>,
) -> Result<Vec<XiArtifact>, CliError> {
    let entries =
        fs::read_dir(dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
    let mut found = Vec::new();
    for entry in entries.flatten() {
        let path = entry.path();
        let is_xi = path
            .file_name()
            .and_then(|s| s.to_str())
            .is_some_and(|s| s.starts_with("xi_") && s.ends_with(".json"));
        if !is_xi {
            continue;
        }
        let Ok(text) = fs::read_to_string(&path) else {
            continue;
        };
        let Ok(a) = serde_json::from_str::<XiArtifact>(&text) else {
            log::warn!("skipping unreadable artifact {}", path.display());
            continue;
        };
        let matches = a.problem == problem.name()
            && basis.is_none_or(|b| a.basis == b.name())
            && n.is_none_or(|v| a.n == v)
            && m.is_none_or(|v| a.m == v);
        if matches {
            found.push(a);
        }
    }
    found.sort_by(|a, b| (a.n, a.m, &a.basis).cmp(&(b.n, b.m, &b.basis)));
    Ok(found)
}
