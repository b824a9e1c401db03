use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use tfc_core::pde_solver::{make_grid, uniform_grid, FreeFunction};
use tfc_core::problems::ProblemId;
use tfc_core::{build_tensor_form, BasisKind};

use crate::artifact;
use crate::CliError;

pub struct SurfaceConfig {
    pub problem: ProblemId,
    pub from: PathBuf,
    pub res: usize,
    pub out: PathBuf,
    pub basis: Option<BasisKind>,
    pub n: Option<usize>,
    pub m: Option<usize>,
}

/// Writes `x y u u_true abs_err` on a `res x res` grid. With several matching
/// artifacts the one with the largest (n, m) is used.
pub fn export(cfg: &SurfaceConfig) -> Result<(), CliError> {
    if cfg.res < 2 {
        return Err(CliError::usage("--res must be at least 2"));
    }
    let found = artifact::find(&cfg.from, cfg.problem, cfg.basis, cfg.n, cfg.m)?;
    let Some(a) = found.last() else {
        return Err(CliError::usage(format!(
            "no saved coefficients for {} in {}; run `tfc run` first",
            cfg.problem,
            cfg.from.display()
        )));
    };
    let kind: BasisKind = a
        .basis
        .parse()
        .map_err(|e| CliError::usage(format!("{e}")))?;
    let problem = cfg.problem.build();
    let ce =
        build_tensor_form(problem.axes.clone()).map_err(|e| CliError::failure(e.to_string()))?;
    let grid = make_grid(
        &problem.domains,
        &vec![a.n.saturating_sub(1).max(1); problem.dims()],
    )
    .map_err(|e| CliError::failure(e.to_string()))?;
    if a.features.len() != a.xi.len() {
        return Err(CliError::usage(
            "artifact has mismatched features and coefficients",
        ));
    }
    let mut ff = FreeFunction::new(kind, a.m, a.features.clone(), grid.maps.clone());
    ff.xi = a.xi.clone();

    let points = uniform_grid(&problem.domains, cfg.res);
    let d = vec![0; problem.dims()];
    let u = ce
        .eval_batch(&ff.oracle(), &points, &d)
        .map_err(|e| CliError::failure(e.to_string()))?;
    let truth = problem.true_solution.clone();

    let file = File::create(&cfg.out)
        .map_err(|e| CliError::failure(format!("{}: {e}", cfg.out.display())))?;
    let mut w = BufWriter::new(file);
    let io = |e: std::io::Error| CliError::failure(e.to_string());
    writeln!(w, "x y u u_true abs_err").map_err(io)?;
    for (x, ui) in points.iter().zip(u) {
        let t = truth.as_ref().map_or(f64::NAN, |f| f.value(x, &d));
        writeln!(
            w,
            "{:.17} {:.17} {:.17} {:.17} {:.17}",
            x[0],
            x[1],
            ui,
            t,
            (ui - t).abs()
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}
