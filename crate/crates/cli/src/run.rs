use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use tfc_core::pde_solver::{solve, GaussNewtonOptions, SolveOptions, SolveReport};
use tfc_core::problems::{reference_test_error, strict_threshold, ProblemId};
use tfc_core::BasisKind;

use crate::artifact::{self, XiArtifact};
use crate::CliError;

pub const CSV_HEADER: [&str; 11] = [
    "problem",
    "basis",
    "n",
    "m",
    "num_features",
    "max_train_err",
    "max_test_err",
    "ls_time_ms",
    "total_time_s",
    "converged",
    "gn_iters",
];

pub struct RunConfig {
    pub problem: ProblemId,
    pub basis: BasisKind,
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub out: PathBuf,
    pub strict: bool,
    pub repeats: usize,
    pub strict_factor: f64,
}

#[derive(Debug, Clone)]
pub struct ResultRow {
    pub problem: ProblemId,
    pub basis: BasisKind,
    pub n: usize,
    pub m: usize,
    pub num_features: usize,
    pub max_train_err: f64,
    pub max_test_err: f64,
    pub ls_time_ms: f64,
    pub total_time_s: f64,
    pub converged: bool,
    pub gn_iters: usize,
}

impl ResultRow {
    fn record(&self) -> [String; 11] {
        [
            self.problem.to_string(),
            self.basis.name().to_string(),
            self.n.to_string(),
            self.m.to_string(),
            self.num_features.to_string(),
            format!("{:.5e}", self.max_train_err),
            format!("{:.5e}", self.max_test_err),
            format!("{:.5e}", self.ls_time_ms),
            format!("{:.5e}", self.total_time_s),
            self.converged.to_string(),
            self.gn_iters.to_string(),
        ]
    }
}

/// Valid cells in (n, m) order; `m > n` cells are dropped with a notice.
pub fn cells(ns: &[usize], ms: &[usize]) -> Vec<(usize, usize)> {
    let mut ns = ns.to_vec();
    let mut ms = ms.to_vec();
    ns.sort_unstable();
    ns.dedup();
    ms.sort_unstable();
    ms.dedup();
    let mut out = Vec::new();
    for &n in &ns {
        for &m in &ms {
            if m > n {
                log::info!("skipping n={n} m={m}: degree exceeds points per axis");
            } else {
                out.push((n, m));
            }
        }
    }
    out
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn solve_cell(cfg: &RunConfig, n: usize, m: usize) -> Result<(ResultRow, SolveReport), CliError> {
    let problem = cfg.problem.build();
    let opts = SolveOptions {
        kind: cfg.basis,
        n_points: n,
        degree: m,
        gauss_newton: GaussNewtonOptions::default(),
    };
    let mut ls = Vec::with_capacity(cfg.repeats);
    let mut total = Vec::with_capacity(cfg.repeats);
    let mut first: Option<SolveReport> = None;
    for _ in 0..cfg.repeats.max(1) {
        let t = Instant::now();
        let s =
            solve(&problem, &opts).map_err(|e| CliError::failure(format!("n={n} m={m}: {e}")))?;
        total.push(t.elapsed().as_secs_f64());
        ls.push(s.report.ls_time_s * 1e3);
        first.get_or_insert(s.report);
    }
    let report = first.expect("at least one repeat");
    let errors = report
        .errors
        .expect("benchmark problems have true solutions");
    let row = ResultRow {
        problem: cfg.problem,
        basis: cfg.basis,
        n,
        m,
        num_features: report.num_features,
        max_train_err: errors.max_train_err,
        max_test_err: errors.max_test_err,
        ls_time_ms: median(ls),
        total_time_s: median(total),
        converged: report.converged,
        gn_iters: report.gn_iterations,
    };
    Ok((row, report))
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("TFC_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => builder = builder.num_threads(t),
            _ => {
                return Err(CliError::usage(format!(
                    "TFC_THREADS must be a positive integer (got '{v}')"
                )))
            }
        }
    }
    builder
        .build()
        .map_err(|e| CliError::failure(e.to_string()))
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.n.iter().chain(&cfg.m).any(|&v| v == 0) {
        return Err(CliError::usage("n and m must be positive"));
    }
    if cfg.n.iter().any(|&v| v < 2) {
        return Err(CliError::usage("n must be at least 2"));
    }
    if !(cfg.strict_factor > 0.0) {
        return Err(CliError::usage("strict factor must be positive"));
    }
    if cfg.repeats == 0 {
        return Err(CliError::usage("repeats must be at least 1"));
    }
    let cells = cells(&cfg.n, &cfg.m);
    let pool = thread_pool()?;
    let results: Vec<Result<(ResultRow, SolveReport), CliError>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(n, m)| solve_cell(cfg, n, m))
            .collect()
    });

    let dir = match cfg.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::failure(format!("{}: {e}", dir.display())))?;
    let mut writer = csv::Writer::from_path(&cfg.out)
        .map_err(|e| CliError::failure(format!("{}: {e}", cfg.out.display())))?;
    writer
        .write_record(CSV_HEADER)
        .map_err(|e| CliError::failure(e.to_string()))?;

    let mut misses = Vec::new();
    for r in results {
        let (row, report) = r?;
        writer
            .write_record(row.record())
            .map_err(|e| CliError::failure(e.to_string()))?;
        let a = XiArtifact {
            problem: cfg.problem.name().into(),
            basis: cfg.basis.name().into(),
            n: row.n,
            m: row.m,
            features: report.features,
            xi: report.xi,
        };
        artifact::save(&dir, &a, cfg.problem, cfg.basis)?;
        log::info!(
            "{} {} n={} m={}: test error {:.3e}, {} features",
            row.problem,
            row.basis,
            row.n,
            row.m,
            row.max_test_err,
            row.num_features
        );
        if cfg.strict {
            if let Some(reference) = reference_test_error(cfg.problem, cfg.basis, row.n, row.m) {
                let limit = strict_threshold(reference, cfg.strict_factor);
                if !(row.max_test_err <= limit) || !row.converged {
                    misses.push(format!(
                        "n={} m={}: test error {:.3e} exceeds {:.3e} (published {:.3e}){}",
                        row.n,
                        row.m,
                        row.max_test_err,
                        limit,
                        reference,
                        if row.converged { "" } else { ", not converged" }
                    ));
                }
            }
        }
    }
    writer
        .flush()
        .map_err(|e| CliError::failure(e.to_string()))?;

    if misses.is_empty() {
        Ok(())
    } else {
        for m in &misses {
            eprintln!("strict: {m}");
        }
        Err(CliError::failure(format!(
            "{} cell(s) missed their acceptance threshold",
            misses.len()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_are_ordered_and_filtered() {
        assert_eq!(cells(&[10, 5], &[10, 5]), vec![(5, 5), (10, 5), (10, 10)]);
        assert_eq!(cells(&[5, 5], &[5]), vec![(5, 5)]);
    }

    #[test]
    fn median_of_three() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
    }
}
