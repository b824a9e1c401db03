//! Self-checks for the constrained-expression machinery.
//!
//! Runs the worked examples plus seeded random constraint sets through every
//! structural property the construction is supposed to have. Used by the
//! `check` subcommand and the acceptance suite.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraints::{
    solve_switching, Constraint, ConstraintTerm, Kappa, SupportBasis, SINGULAR_TOL,
};
use crate::error::TfcError;
use crate::expression::{
    build_multivariate_recursive, build_tensor_form, AxisConstraintSet, Embedded, Embedding, MEntry,
};
use crate::field::{Field, Separable, UniFn};
use crate::poly::Poly;
use crate::problems;

/// Absolute tolerance shared by every check.
pub const SUITE_TOL: f64 = 1e-10;

/// Deliberate defects for exercising the checks themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Perturbs one switching coefficient of the first worked example.
    CorruptSwitching,
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    pub random_cases: usize,
    /// Random free functions per case for the constraint-satisfaction check.
    pub oracles_per_case: usize,
    pub fault: Option<Fault>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 2024,
            random_cases: 50,
            oracles_per_case: 20,
            fault: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub note: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<26} cases={:<4} worst={:.3e} tol={:.0e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.worst,
            self.tolerance
        )?;
        if !self.note.is_empty() {
            write!(f, "  ({})", self.note)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// One set of constraints with a box to sample it on.
#[derive(Clone)]
pub struct Case {
    pub name: String,
    pub axes: Vec<AxisConstraintSet>,
    pub domain: Vec<(f64, f64)>,
}

/// Accumulates the worst error of one check; an evaluation error counts as infinite.
struct Tally {
    name: &'static str,
    cases: usize,
    worst: f64,
    note: String,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            cases: 0,
            worst: 0.0,
            note: String::new(),
        }
    }

    fn record(&mut self, err: crate::error::Result<f64>) {
        match err {
            Ok(e) if e.is_finite() => self.worst = self.worst.max(e),
            Ok(_) => self.worst = f64::INFINITY,
            Err(e) => {
                self.worst = f64::INFINITY;
                if self.note.is_empty() {
                    self.note = e.to_string();
                }
            }
        }
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            name: self.name,
            cases: self.cases,
            worst: self.worst,
            tolerance: SUITE_TOL,
            passed: self.worst < SUITE_TOL,
            note: self.note,
        }
    }
}

/// The four worked examples.
pub fn reference_cases(fault: Option<Fault>) -> Vec<Case> {
    let mut first = AxisConstraintSet::with_supports(
        0,
        problems::univariate_points(),
        &SupportBasis::monomials(&[0, 2, 3]),
    )
    .expect("worked example is solvable");
    if fault == Some(Fault::CorruptSwitching) {
        let bad = first
            .switching
            .as_ref()
            .expect("constrained")
            .corrupted(1, 0, 1e-3);
        first = AxisConstraintSet::with_switching(0, first.constraints.clone(), bad);
    }
    let second = AxisConstraintSet::with_supports(
        0,
        problems::univariate_linear(),
        &SupportBasis::monomials(&[0, 1]),
    )
    .expect("worked example is solvable");
    vec![
        Case {
            name: "univariate points".into(),
            axes: vec![first],
            domain: vec![(0.0, 2.0)],
        },
        Case {
            name: "univariate linear".into(),
            axes: vec![second],
            domain: vec![(0.0, 2.0)],
        },
        Case {
            name: "multivariate #1".into(),
            axes: problems::multivariate_example1(),
            domain: vec![(0.0, 1.0), (0.0, 1.0)],
        },
        Case {
            name: "multivariate #2".into(),
            axes: problems::multivariate_example2(),
            domain: vec![(0.0, 2.0), (0.0, 1.0)],
        },
    ]
}

fn random_unifn(rng: &mut impl Rng) -> UniFn {
    let deg = rng.random_range(0..=4);
    let coeffs: Vec<f64> = (0..=deg).map(|_| rng.random_range(-1.0..1.0)).collect();
    let p = UniFn::poly(coeffs);
    if rng.random_bool(0.5) {
        let trig = UniFn::Sin {
            freq: rng.random_range(0.5..3.0),
            phase: rng.random_range(0.0..PI),
        };
        p.times(trig)
    } else {
        p
    }
}

/// Sum of three random separable polynomial-times-trig products.
pub fn random_field(rng: &mut impl Rng, dims: usize) -> Separable {
    let mut s = Separable::new();
    for _ in 0..3 {
        let factors = (0..dims).map(|_| random_unifn(rng)).collect();
        s = s.term(rng.random_range(-1.0..1.0), factors);
    }
    s
}

/// `kappa(x) = C[truth]` along `axis`, so constraints on different axes agree
/// at their intersections.
fn induced_kappa(truth: &Arc<Separable>, axis: usize, terms: &[ConstraintTerm]) -> Kappa {
    let truth = Arc::clone(truth);
    let terms = terms.to_vec();
    let f = move |x: &[f64], d: &[u32]| {
        let mut p = x.to_vec();
        let mut q = d.to_vec();
        terms
            .iter()
            .map(|t| {
                p[axis] = t.location;
                q[axis] = t.deriv_order;
                t.coeff * truth.value(&p, &q)
            })
            .sum::<f64>()
    };
    Kappa::Field(Arc::new(f))
}

fn random_terms(rng: &mut impl Rng) -> Vec<ConstraintTerm> {
    let loc = |rng: &mut dyn rand::RngCore| (rng.random_range(0..=20) as f64) * 0.05;
    match rng.random_range(0..3) {
        0 => vec![ConstraintTerm::new(1.0, 0, loc(rng))],
        1 => vec![ConstraintTerm::new(1.0, rng.random_range(1..=2), loc(rng))],
        _ => {
            let a = rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            vec![
                ConstraintTerm::new(1.0, 0, loc(rng)),
                ConstraintTerm::new(a, rng.random_range(0..=1), loc(rng)),
            ]
        }
    }
}

/// Random point, derivative and linear constraints on the unit box in one to
/// three dimensions, with right-hand sides induced from a hidden smooth field.
pub fn random_case(rng: &mut impl Rng, index: usize) -> Case {
    loop {
        let dims = 1 + index % 3;
        let truth = Arc::new(random_field(rng, dims));
        let max_l = if dims == 1 { 3 } else { 2 };
        let mut axes = Vec::with_capacity(dims);
        let mut ok = true;
        for k in 0..dims {
            let l = rng.random_range(if dims == 1 { 1 } else { 0 }..=max_l);
            let mut cs = Vec::with_capacity(l);
            for _ in 0..l {
                let terms = random_terms(rng);
                let kappa = induced_kappa(&truth, k, &terms);
                match Constraint::new(terms, kappa) {
                    Ok(c) => cs.push(c),
                    Err(_) => ok = false,
                }
            }
            match AxisConstraintSet::new(k, cs) {
                Ok(a) => axes.push(a),
                Err(_) => ok = false,
            }
        }
        if ok && axes.iter().any(|a| !a.is_empty()) {
            return Case {
                name: format!("random #{index} ({dims}D)"),
                axes,
                domain: vec![(0.0, 1.0); dims],
            };
        }
    }
}

/// Deterministic sample points: a uniform grid with `per_axis` points per axis.
fn samples(domain: &[(f64, f64)], per_axis: usize) -> Vec<Vec<f64>> {
    crate::pde_solver::uniform_grid(domain, per_axis)
}

fn per_axis_for(dims: usize, two_d: usize) -> usize {
    match dims {
        1 => two_d,
        2 => two_d,
        _ => (two_d / 3).max(3),
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = flat % shape[k];
        flat /= shape[k];
    }
    idx
}

fn check_property4(cases: &[Case]) -> CheckOutcome {
    let mut t = Tally::new("switching kronecker");
    for c in cases {
        for a in &c.axes {
            if let Some(sw) = &a.switching {
                t.cases += 1;
                t.record(Ok(sw.kronecker_defect(&a.constraints)));
            }
        }
    }
    t.finish()
}

fn check_satisfaction(cases: &[Case], rng: &mut impl Rng, oracles: usize) -> CheckOutcome {
    let mut t = Tally::new("constraint satisfaction");
    for c in cases {
        let Ok(ce) = build_tensor_form(c.axes.clone()) else {
            t.record(Err(TfcError::InvalidArgument(format!(
                "{}: build failed",
                c.name
            ))));
            continue;
        };
        let dims = c.axes.len();
        for _ in 0..oracles {
            t.cases += 1;
            let g = random_field(rng, dims);
            for (axis, set) in c.axes.iter().enumerate() {
                let mut dom = c.domain.clone();
                dom[axis] = (dom[axis].0, dom[axis].0);
                for x in samples(&dom, per_axis_for(dims, 10)).iter().take(100) {
                    for j in 0..set.len() {
                        t.record(ce.constraint_residual(&g, axis, j, x).map(f64::abs));
                    }
                }
            }
        }
    }
    t.finish()
}

fn max_diff(
    a: &dyn Embedding,
    ga: &dyn Field,
    b: &dyn Embedding,
    gb: &dyn Field,
    pts: &[Vec<f64>],
    d: &[u32],
) -> crate::error::Result<f64> {
    let mut worst: f64 = 0.0;
    for x in pts {
        let va = a.eval(ga, x, d)?;
        let vb = b.eval(gb, x, d)?;
        worst = worst.max((va - vb).abs());
    }
    Ok(worst)
}

fn check_idempotence(cases: &[Case], rng: &mut impl Rng) -> CheckOutcome {
    let mut t = Tally::new("projection idempotence");
    for c in cases {
        let Ok(ce) = build_tensor_form(c.axes.clone()) else {
            continue;
        };
        let dims = c.axes.len();
        t.cases += 1;
        let g = random_field(rng, dims);
        let u = Embedded { expr: &ce, g: &g };
        let pts = samples(&c.domain, per_axis_for(dims, 20));
        t.record(max_diff(&ce, &u, &ce, &g, &pts, &vec![0; dims]));
    }
    t.finish()
}

fn check_order_independence(cases: &[Case], rng: &mut impl Rng) -> CheckOutcome {
    let mut t = Tally::new("order independence");
    for c in cases.iter().filter(|c| c.axes.len() >= 2) {
        let dims = c.axes.len();
        t.cases += 1;
        let g = random_field(rng, dims);
        let pts = samples(&c.domain, per_axis_for(dims, 8));
        let perms = permutations(dims);
        let reference = match build_multivariate_recursive(c.axes.clone(), &perms[0]) {
            Ok(r) => r,
            Err(e) => {
                t.record(Err(e));
                continue;
            }
        };
        for p in &perms[1..] {
            let other = build_multivariate_recursive(c.axes.clone(), p);
            t.record(other.and_then(|o| max_diff(&reference, &g, &o, &g, &pts, &vec![0; dims])));
        }
    }
    t.finish()
}

fn check_recursive_vs_tensor(cases: &[Case], rng: &mut impl Rng) -> CheckOutcome {
    let mut t = Tally::new("recursive == tensor");
    for c in cases {
        let dims = c.axes.len();
        let order: Vec<usize> = (0..dims).collect();
        let (Ok(ce), Ok(rec)) = (
            build_tensor_form(c.axes.clone()),
            build_multivariate_recursive(c.axes.clone(), &order),
        ) else {
            continue;
        };
        t.cases += 1;
        let g = random_field(rng, dims);
        let pts = samples(&c.domain, per_axis_for(dims, 8));
        let mut derivs = vec![vec![0; dims]];
        for k in 0..dims {
            let mut d = vec![0; dims];
            d[k] = 1;
            derivs.push(d);
        }
        for d in &derivs {
            t.record(max_diff(&ce, &g, &rec, &g, &pts, d));
        }
    }
    t.finish()
}

/// Adds `beta * s_kj(x_k) * w(x_-k)` for every support of every axis.
fn check_surjectivity(cases: &[Case], rng: &mut impl Rng) -> CheckOutcome {
    let mut t = Tally::new("surjectivity witness");
    for c in cases {
        let Ok(ce) = build_tensor_form(c.axes.clone()) else {
            continue;
        };
        let dims = c.axes.len();
        t.cases += 1;
        let g = random_field(rng, dims);
        let mut perturbed = g.clone();
        for set in &c.axes {
            let Some(sb) = set.supports() else { continue };
            for s in &sb.functions {
                let factors = (0..dims)
                    .map(|k| {
                        if k == set.axis {
                            UniFn::Poly(s.clone())
                        } else {
                            random_unifn(rng)
                        }
                    })
                    .collect();
                perturbed = perturbed.term(rng.random_range(-1.0..1.0), factors);
            }
        }
        // one support from every constrained axis at once
        let product: Vec<UniFn> = c
            .axes
            .iter()
            .map(|a| match a.supports() {
                Some(sb) => UniFn::Poly(sb.functions[rng.random_range(0..sb.len())].clone()),
                None => random_unifn(rng),
            })
            .collect();
        perturbed = perturbed.term(rng.random_range(-1.0..1.0), product);
        let pts = samples(&c.domain, per_axis_for(dims, 10));
        t.record(max_diff(&ce, &g, &ce, &perturbed, &pts, &vec![0; dims]));
    }
    t.finish()
}

fn check_clairaut(cases: &[Case], rng: &mut impl Rng) -> CheckOutcome {
    let mut t = Tally::new("operator permutation");
    for c in cases {
        let Ok(ce) = build_tensor_form(c.axes.clone()) else {
            continue;
        };
        let dims = c.axes.len();
        let g = random_field(rng, dims);
        let pts = samples(&c.domain, per_axis_for(dims, 5));
        let recipe = ce.recipe();
        for (flat, entry) in recipe.entries.iter().enumerate() {
            let MEntry::Intersection { rho, .. } = entry else {
                continue;
            };
            t.cases += 1;
            let idx = unflatten(flat, &recipe.shape);
            for k in (0..dims).filter(|&k| idx[k] > 0 && k != rho.0) {
                for x in &pts {
                    let d = vec![0; dims];
                    let a = ce.m_entry(&idx, &g, x, &d);
                    let b = ce.m_entry_with_rho_axis(&idx, k, &g, x, &d);
                    t.record(a.and_then(|a| b.map(|b| (a - b).abs())));
                }
            }
        }
    }
    t.finish()
}

fn coeff_error(p: &Poly, expected: &[f64]) -> f64 {
    let c = p.coeffs();
    (0..c.len().max(expected.len()))
        .map(|k| (c.get(k).copied().unwrap_or(0.0) - expected.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

/// Published switching functions, `alpha`, `Phi` vectors and `M` elements.
fn check_worked_values(cases: &[Case]) -> CheckOutcome {
    let mut t = Tally::new("worked-example values");
    t.cases = 4;
    let sw = cases[0].axes[0].switching.as_ref().expect("constrained");
    let expected = [
        [1.0, 0.0, 0.75, -0.5],
        [0.0, 0.0, 2.0, -1.0],
        [0.0, 0.0, -0.75, 0.5],
    ];
    for (j, e) in expected.iter().enumerate() {
        t.record(Ok(coeff_error(sw.phi(j), e)));
    }

    let sw = cases[1].axes[0].switching.as_ref().expect("constrained");
    let alpha = [[-2.0, 0.5], [1.0, 0.0]];
    for (i, row) in alpha.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            t.record(Ok((sw.alpha[(i, j)] - v).abs()));
        }
    }

    let g1 = problems::example1_free_function();
    let g2 = problems::example2_free_function();
    let ce1 = build_tensor_form(cases[2].axes.clone());
    let ce2 = build_tensor_form(cases[3].axes.clone());
    match (ce1, ce2) {
        (Ok(ce1), Ok(ce2)) => {
            let gv = |g: &Arc<dyn Field>, x: f64, y: f64| g.value(&[x, y], &[0, 0]);
            for x in samples(&[(0.0, 1.0), (0.0, 1.0)], 5) {
                t.record(
                    ce1.m_entry(&[1, 1], g1.as_ref(), &x, &[0, 0])
                        .map(|v| (v - gv(&g1, 0.0, 0.0)).abs()),
                );
                let m33 =
                    gv(&g2, 1.0, 0.0) - gv(&g2, 1.0, 1.0) + gv(&g2, 2.0, 0.0) - gv(&g2, 2.0, 1.0);
                t.record(
                    ce2.m_entry(&[2, 2], g2.as_ref(), &x, &[0, 0])
                        .map(|v| (v - m33).abs()),
                );
                let (xv, yv) = (x[0], x[1]);
                let phis = [
                    (0, 1, (3.0 - 2.0 * xv) / 3.0, xv),
                    (0, 2, xv / 3.0, xv),
                    (1, 1, yv - yv * yv, yv),
                    (1, 2, -yv * yv, yv),
                ];
                for (axis, i, want, at) in phis {
                    t.record(Ok((ce2.phi_vector_entry(axis, i, at, 0) - want).abs()));
                }
            }
        }
        (Err(e), _) | (_, Err(e)) => t.record(Err(e)),
    }
    t.finish()
}

/// `{1, x, x^2}` must be rejected for the point example and `{1, x^2, x^3}` accepted.
fn check_singular_detection() -> CheckOutcome {
    let cs = problems::univariate_points();
    let singular = solve_switching(&cs, &SupportBasis::monomials(&[0, 1, 2]), SINGULAR_TOL);
    let regular = solve_switching(&cs, &SupportBasis::monomials(&[0, 2, 3]), SINGULAR_TOL);
    let passed = matches!(singular, Err(TfcError::SingularSupport { .. })) && regular.is_ok();
    CheckOutcome {
        name: "singular support detection",
        cases: 2,
        worst: if passed { 0.0 } else { f64::INFINITY },
        tolerance: SUITE_TOL,
        passed,
        note: "{1, x, x^2} expected singular".into(),
    }
}

/// Runs every check on the worked examples plus `cfg.random_cases` random sets.
pub fn run_suite(cfg: &SuiteConfig) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cases = reference_cases(cfg.fault);
    for i in 0..cfg.random_cases {
        cases.push(random_case(&mut rng, i));
    }
    let checks = vec![
        check_property4(&cases),
        check_worked_values(&cases),
        check_singular_detection(),
        check_satisfaction(&cases, &mut rng, cfg.oracles_per_case),
        check_idempotence(&cases, &mut rng),
        check_order_independence(&cases, &mut rng),
        check_recursive_vs_tensor(&cases, &mut rng),
        check_surjectivity(&cases, &mut rng),
        check_clairaut(&cases, &mut rng),
    ];
    SuiteReport { checks }
}

/// Default suite over the worked examples and 50 random sets.
pub fn check_examples() -> SuiteReport {
    run_suite(&SuiteConfig::default())
}
