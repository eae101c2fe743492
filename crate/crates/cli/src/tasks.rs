//! Task execution: one function per verb, each filling a [`TaskRecord`].

use std::collections::BTreeMap;
use std::time::Instant;

use ssdkit::convexfun::default_samples;
use ssdkit::qpositive::{fitzpatrick_via_defect, DEFAULT_QPOS_TOL};
use ssdkit::{
    certify_bc, certify_tbc, duality_map, fitzpatrick, fitzpatrick_op, hammerstein_solve, intrinsic_conjugate,
    is_q_positive, maximality_check, minnorm_surjectivity, nq_membership, partial_episum, posneg_decompose,
    pq_membership, sum_check, sum_surjectivity, surjectivity_solve, ConvexFunction, Error, HammersteinBranch,
    SolverConfig, SsdPoint, Verdict,
};

use crate::build::{validate, Builder};
use crate::report::{Failure, Metric, Report, Status, Summary, TaskRecord};
use crate::scenario::{BranchChoice, DecomposeExpect, ExpectVerdict, Scenario, Task, TaskKind};
use crate::CliError;

/// Command-line overrides of scenario settings.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub timings: bool,
}

struct Ctx<'a> {
    b: Builder<'a>,
    cfg: SolverConfig,
    seed: u64,
}

#[derive(Default)]
struct Rec {
    metrics: BTreeMap<String, Metric>,
    failure: Option<Failure>,
    inconclusive: Option<Failure>,
}

impl Rec {
    fn put(&mut self, key: &str, v: impl Into<Metric>) {
        self.metrics.insert(key.to_string(), v.into());
    }

    /// Records the first violated assertion.
    fn check(&mut self, ok: bool, assertion: impl Into<String>, observed: impl Into<Metric>) {
        if !ok && self.failure.is_none() {
            self.failure = Some(Failure { assertion: assertion.into(), observed: observed.into() });
        }
    }

    fn undecided(&mut self, assertion: impl Into<String>, observed: impl Into<Metric>) {
        if self.inconclusive.is_none() {
            self.inconclusive = Some(Failure { assertion: assertion.into(), observed: observed.into() });
        }
    }
}

type Res = Result<(), Error>;

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::ConsistentWithMaximal => "consistent-with-maximal",
        Verdict::Refuted => "refuted",
        Verdict::Inconclusive => "inconclusive",
    }
}

/// `|a − b|`, with equal infinities at distance 0.
fn dist(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

fn max_error(got: &[f64], want: &[f64]) -> f64 {
    if got.len() != want.len() {
        return f64::INFINITY;
    }
    got.iter().zip(want).map(|(a, b)| dist(*a, *b)).fold(0.0, f64::max)
}

fn expect_values(rec: &mut Rec, got: &[f64], want: Option<&Vec<f64>>, tol: f64, what: &str) {
    if let Some(want) = want {
        let err = max_error(got, want);
        rec.put("max_abs_error", err);
        rec.check(err <= tol, format!("max |{what} − expected| <= {tol:e}"), err);
    }
}

fn eval_all(f: &ConvexFunction, at: &[Vec<f64>]) -> Result<Vec<f64>, Error> {
    at.iter().map(|b| f.eval(b)).collect()
}

fn check_qpositive(ctx: &mut Ctx, rec: &mut Rec, set: &str, expect: bool, tol: Option<f64>) -> Res {
    let set = ctx.b.set(set)?;
    let tol = tol.unwrap_or(DEFAULT_QPOS_TOL);
    let r = is_q_positive(&set, tol);
    rec.put("points", set.len());
    rec.put("positive", r.positive);
    rec.put("min_pair_value", r.min_pair_value);
    if let Some((a, b)) = &r.witness {
        rec.put("witness_a", a.as_slice());
        rec.put("witness_b", b.as_slice());
    }
    let assertion = if expect { "min q(a − b) >= −tol" } else { "min q(a − b) < −tol" };
    rec.check(r.positive == expect, assertion, r.min_pair_value);
    Ok(())
}

fn fitzpatrick_eval(
    ctx: &mut Ctx,
    rec: &mut Rec,
    set: Option<&str>,
    operator: Option<&str>,
    at: &[Vec<f64>],
    expect: Option<&Vec<f64>>,
    tol: f64,
) -> Res {
    let values = if let Some(name) = set {
        let set = ctx.b.set(name)?;
        let phi = fitzpatrick(&set);
        let values = eval_all(&phi, at)?;
        // the same value through the pairwise defect
        let mut gap = 0.0f64;
        for (b, v) in at.iter().zip(&values) {
            gap = gap.max(dist(*v, fitzpatrick_via_defect(&set, b)?));
        }
        rec.put("eq3_gap", gap);
        rec.check(gap <= tol, format!("|Φ_A − (q − inf q(A − ·))| <= {tol:e}"), gap);
        values
    } else {
        let op = ctx.b.operator(operator.expect("validated"))?;
        eval_all(&fitzpatrick_op(&op, ctx.b.sampling())?, at)?
    };
    rec.put("values", values.clone());
    expect_values(rec, &values, expect, tol, "Φ");
    Ok(())
}

fn conjugate_eval(
    ctx: &mut Ctx,
    rec: &mut Rec,
    name: &str,
    at: &[Vec<f64>],
    intrinsic: bool,
    expect: Option<&Vec<f64>>,
    tol: f64,
) -> Res {
    let space = ctx.b.space();
    let f = ctx.b.function(name)?;
    let conj = if intrinsic { intrinsic_conjugate(&space, &f)? } else { f.conjugate()? };
    let values = eval_all(&conj, at)?;
    if intrinsic {
        // f^@ = f* ∘ ι, computed along the other route when f* is available
        if let Ok(fstar) = f.conjugate() {
            let mut gap = 0.0f64;
            for (c, v) in at.iter().zip(&values) {
                gap = gap.max(dist(*v, fstar.eval(&space.iota(c)?)?));
            }
            rec.put("iota_gap", gap);
            rec.check(gap <= tol, format!("|f^@ − f*∘ι| <= {tol:e}"), gap);
        }
    }
    // Fenchel–Young over all pairs of evaluation points
    let fvals = eval_all(&f, at)?;
    let mut fy = f64::INFINITY;
    for (b, fb) in at.iter().zip(&fvals) {
        for (c, gc) in at.iter().zip(&values) {
            let pairing = if intrinsic { space.pair(b, c)? } else { b.iter().zip(c).map(|(x, y)| x * y).sum() };
            fy = fy.min(fb + gc - pairing);
        }
    }
    rec.put("fenchel_young_min", fy);
    rec.check(fy >= -tol, format!("f(b) + conjugate(c) − pairing >= −{tol:e}"), fy);
    rec.put("values", values.clone());
    expect_values(rec, &values, expect, tol, "conjugate");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn certify(
    ctx: &mut Ctx,
    rec: &mut Rec,
    name: &str,
    samples: usize,
    radius: f64,
    tol: f64,
    expect: bool,
    twisted: bool,
) -> Res {
    let space = ctx.b.space();
    let f = ctx.b.function(name)?;
    let pts = default_samples(&space, radius, samples, ctx.seed);
    let r = if twisted { certify_tbc(&space, &f, &pts, tol)? } else { certify_bc(&space, &f, &pts, tol)? };
    let label = if twisted { "is_tbc" } else { "is_bc" };
    rec.put(label, r.is_bc);
    rec.put("samples", samples);
    rec.put("worst_gap_conj", r.worst_gap_conj);
    rec.put("worst_gap_q", r.worst_gap_q);
    if let Some(p) = &r.failing_point {
        rec.put("failing_point", p.as_slice());
    }
    rec.check(r.is_bc == expect, format!("{label} == {expect}"), r.worst_gap_conj.min(r.worst_gap_q));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn decompose(
    ctx: &mut Ctx,
    rec: &mut Rec,
    f: &str,
    g: &str,
    c: &[f64],
    expect: DecomposeExpect,
    expect_p: Option<&Vec<f64>>,
    expect_n: Option<&Vec<f64>>,
    tol: f64,
) -> Res {
    let space = ctx.b.space();
    let (f, g) = (ctx.b.function(f)?, ctx.b.function(g)?);
    match posneg_decompose(&space, &f, &g, c, &ctx.cfg) {
        Ok(r) => {
            rec.put("residual", r.residual);
            rec.put("pq_defect", r.pq_defect);
            rec.put("nq_defect", r.nq_defect);
            rec.put("iterations", r.iterations);
            rec.put("p", r.p.as_slice());
            rec.put("n", r.n.as_slice());
            rec.put("p_norm", space.norm(&r.p)?);
            rec.put("n_norm", space.norm(&r.n)?);
            let mtol = 2.0 * ctx.cfg.tol;
            let in_pq = pq_membership(&space, &f, &r.p, mtol)?;
            let in_nq = nq_membership(&space, &g, &r.n, mtol)?;
            rec.put("p_in_pq", in_pq);
            rec.put("n_in_nq", in_nq);
            if expect == DecomposeExpect::Refuted {
                rec.check(false, "BC/TBC hypothesis refuted", r.residual);
            }
            rec.check(r.residual <= ctx.cfg.tol, format!("residual <= {:e}", ctx.cfg.tol), r.residual);
            rec.check(in_pq, format!("|f(p) − q(p)| <= {mtol:e}"), r.pq_defect);
            rec.check(in_nq, format!("|g(n) + q(n)| <= {mtol:e}"), r.nq_defect);
            let mut err = 0.0f64;
            if let Some(p) = expect_p {
                err = err.max(max_error(&r.p, p));
            }
            if let Some(n) = expect_n {
                err = err.max(max_error(&r.n, n));
            }
            if expect_p.is_some() || expect_n.is_some() {
                rec.put("max_abs_error", err);
                rec.check(err <= tol, format!("max |(p, n) − expected| <= {tol:e}"), err);
            }
        }
        Err(Error::NegativeValue { value, point } | Error::PositiveMinimum { value, point }) => {
            rec.put("refuting_value", value);
            rec.put("refuting_point", point);
            rec.check(expect == DecomposeExpect::Refuted, "a split exists", value);
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

fn maximal_status(rec: &mut Rec, verdict: Verdict, expect: ExpectVerdict, observed: f64) {
    let want = match expect {
        ExpectVerdict::ConsistentWithMaximal => Verdict::ConsistentWithMaximal,
        ExpectVerdict::Refuted => Verdict::Refuted,
    };
    if verdict == Verdict::Inconclusive {
        rec.undecided(format!("verdict == {}", verdict_name(want)), observed);
    } else {
        rec.check(verdict == want, format!("verdict == {}", verdict_name(want)), verdict_name(verdict));
    }
}

#[allow(clippy::too_many_arguments)]
fn check_maximal(
    ctx: &mut Ctx,
    rec: &mut Rec,
    f: &str,
    g: Option<&str>,
    probes: usize,
    radius: f64,
    expect: ExpectVerdict,
) -> Res {
    let space = ctx.b.space();
    let f = ctx.b.function(f)?;
    let g = g.map(|g| ctx.b.function(g)).transpose()?;
    let pts = default_samples(&space, radius, probes, ctx.seed);
    let r = maximality_check(&space, &f, g.as_ref(), &pts, &ctx.cfg)?;
    rec.put("verdict", verdict_name(r.verdict));
    rec.put("samples_tested", r.samples_tested);
    rec.put("max_residual", r.max_residual);
    if let Some(p) = &r.refuting_point {
        rec.put("refuting_point", p.as_slice());
    }
    maximal_status(rec, r.verdict, expect, r.max_residual);
    Ok(())
}

fn surjectivity(ctx: &mut Ctx, rec: &mut Rec, op: &str, y: &[f64], expect_x: Option<&Vec<f64>>, tol: f64) -> Res {
    let op = ctx.b.operator(op)?;
    let r = surjectivity_solve(&op, y, ctx.cfg.tol)?;
    // y* − J(x) must lie in S(x)
    let jx = duality_map(&r.x);
    let rest: Vec<f64> = y.iter().zip(&jx).map(|(a, b)| a - b).collect();
    let defect = op.inclusion_defect(&r.x, &rest)?;
    rec.put("x", r.x.as_slice());
    rec.put("residual", r.residual);
    rec.put("inclusion_defect", defect);
    rec.check(defect <= ctx.cfg.tol, format!("dist(y* − Jx, S(x)) <= {:e}", ctx.cfg.tol), defect);
    expect_values(rec, &r.x, expect_x, tol, "x");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn minnorm(
    ctx: &mut Ctx,
    rec: &mut Rec,
    op: &str,
    radius: f64,
    points: usize,
    expect_lhs: Option<f64>,
    lhs_tol: f64,
    radicand_tol: f64,
    tol: f64,
) -> Res {
    let op = ctx.b.operator(op)?;
    let est = minnorm_surjectivity(&op, radius, points, radicand_tol, ctx.b.sampling())?;
    rec.put("lhs", est.lhs);
    rec.put("rhs", est.rhs);
    rec.put("abs_diff", est.abs_diff);
    rec.put("grid_points", points);
    if let Some(e) = expect_lhs {
        let err = dist(est.lhs, e);
        rec.check(err <= lhs_tol, format!("|lhs − {e}| <= {lhs_tol:e}"), est.lhs);
    }
    rec.check(est.abs_diff <= tol, format!("|lhs − rhs| <= {tol:e}"), est.abs_diff);
    Ok(())
}

fn sum_check_task(
    ctx: &mut Ctx,
    rec: &mut Rec,
    s: &str,
    t: &str,
    probes: usize,
    radius: f64,
    expect: ExpectVerdict,
) -> Res {
    let (s, t) = (ctx.b.operator(s)?, ctx.b.operator(t)?);
    let pts: Vec<SsdPoint> = default_samples(&s.space(), radius, probes, ctx.seed);
    let r = sum_check(&s, &t, &pts, &ctx.cfg, ctx.b.sampling())?;
    let m = &r.maximality;
    rec.put("qualification", r.qualification);
    rec.put("verdict", verdict_name(m.verdict));
    rec.put("samples_tested", m.samples_tested);
    rec.put("max_residual", m.max_residual);
    if let Some(p) = &m.refuting_point {
        rec.put("refuting_point", p.as_slice());
    }
    match expect {
        ExpectVerdict::ConsistentWithMaximal => {
            rec.check(r.qualification, "domain qualification holds", false);
            maximal_status(rec, m.verdict, expect, m.max_residual);
        }
        ExpectVerdict::Refuted => {
            if r.qualification {
                maximal_status(rec, m.verdict, expect, m.max_residual);
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sum_surjectivity_task(
    ctx: &mut Ctx,
    rec: &mut Rec,
    s: &str,
    t: &str,
    y: &[f64],
    expect_x: Option<&Vec<f64>>,
    tol: f64,
) -> Res {
    let (s, t) = (ctx.b.operator(s)?, ctx.b.operator(t)?);
    let r = sum_surjectivity(&s, &t, y, &ctx.cfg, ctx.b.sampling())?;
    rec.put("x", r.x.as_slice());
    rec.put("s_star", r.s_star.as_slice());
    rec.put("t_star", r.t_star.as_slice());
    rec.put("residual", r.residual);
    rec.put("x_mismatch", r.x_mismatch);
    rec.put("iterations", r.iterations);
    rec.check(r.residual <= ctx.cfg.tol, format!("dist(y*, (S + T)x) <= {:e}", ctx.cfg.tol), r.residual);
    expect_values(rec, &r.x, expect_x, tol, "x");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn hammerstein(
    ctx: &mut Ctx,
    rec: &mut Rec,
    s: &str,
    t: &str,
    x: &[f64],
    branch: BranchChoice,
    expect_y: Option<&Vec<f64>>,
    tol: f64,
) -> Res {
    let (s, t) = (ctx.b.operator(s)?, ctx.b.operator(t)?);
    let branches: &[(HammersteinBranch, &str)] = match branch {
        BranchChoice::Primary => &[(HammersteinBranch::Primary, "")],
        BranchChoice::Dual => &[(HammersteinBranch::Dual, "")],
        BranchChoice::Both => &[(HammersteinBranch::Primary, "primary_"), (HammersteinBranch::Dual, "dual_")],
    };
    let mut sols = Vec::new();
    for &(br, prefix) in branches {
        let sol = hammerstein_solve(&s, &t, x, &ctx.cfg, ctx.b.sampling(), br)?;
        let key = |k: &str| format!("{prefix}{k}");
        rec.put(&key("y"), sol.y.as_slice());
        rec.put(&key("y_star"), sol.y_star.as_slice());
        rec.put(&key("z"), sol.z.as_slice());
        rec.put(&key("defect_s"), sol.defects.s);
        rec.put(&key("defect_t"), sol.defects.t);
        rec.put(&key("defect_sum"), sol.defects.sum);
        rec.put(&key("iterations"), sol.iterations);
        let d = sol.defects.max();
        rec.check(d <= ctx.cfg.tol, format!("{prefix}defects <= {:e}", ctx.cfg.tol), d);
        if let Some(want) = expect_y {
            let err = max_error(&sol.y, want);
            rec.put(&key("max_abs_error"), err);
            rec.check(err <= tol, format!("max |{prefix}y − expected| <= {tol:e}"), err);
        }
        sols.push(sol);
    }
    if let [p, d] = sols.as_slice() {
        let gap = max_error(&p.y, &d.y).max(max_error(&p.y_star, &d.y_star)).max(max_error(&p.z, &d.z));
        rec.put("branch_gap", gap);
        rec.check(gap <= tol, format!("branch agreement <= {tol:e}"), gap);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn episum_eval(
    ctx: &mut Ctx,
    rec: &mut Rec,
    f: &str,
    g: &str,
    at: &[Vec<f64>],
    resolution: usize,
    radius: f64,
    expect: Option<&Vec<f64>>,
    tol: f64,
) -> Res {
    let space = ctx.b.space();
    let h = partial_episum(&space, &ctx.b.function(f)?, &ctx.b.function(g)?, resolution, radius)?;
    let values = eval_all(&h, at)?;
    rec.put("values", values.clone());
    expect_values(rec, &values, expect, tol, "episum");
    Ok(())
}

fn run_kind(ctx: &mut Ctx, rec: &mut Rec, kind: &TaskKind) -> Res {
    use TaskKind::*;
    match kind {
        CheckQpositive { set, expect, tol } => check_qpositive(ctx, rec, set, *expect, *tol),
        FitzpatrickEval { set, operator, at, expect, tol } => {
            fitzpatrick_eval(ctx, rec, set.as_deref(), operator.as_deref(), at, expect.as_ref(), *tol)
        }
        ConjugateEval { function, at, intrinsic, expect, tol } => {
            conjugate_eval(ctx, rec, function, at, *intrinsic, expect.as_ref(), *tol)
        }
        CertifyBc { function, samples, radius, tol, expect } => {
            certify(ctx, rec, function, *samples, *radius, *tol, *expect, false)
        }
        CertifyTbc { function, samples, radius, tol, expect } => {
            certify(ctx, rec, function, *samples, *radius, *tol, *expect, true)
        }
        Decompose { f, g, c, expect, expect_p, expect_n, tol } => {
            decompose(ctx, rec, f, g, c, *expect, expect_p.as_ref(), expect_n.as_ref(), *tol)
        }
        CheckMaximal { function, g, probes, radius, expect } => {
            check_maximal(ctx, rec, function, g.as_deref(), *probes, *radius, *expect)
        }
        Surjectivity { operator, y_star, expect_x, tol } => {
            surjectivity(ctx, rec, operator, y_star, expect_x.as_ref(), *tol)
        }
        Minnorm { operator, radius, points, expect_lhs, lhs_tol, radicand_tol, tol } => {
            minnorm(ctx, rec, operator, *radius, *points, *expect_lhs, *lhs_tol, *radicand_tol, *tol)
        }
        SumCheck { s, t, probes, radius, expect } => sum_check_task(ctx, rec, s, t, *probes, *radius, *expect),
        SumSurjectivity { s, t, y_star, expect_x, tol } => {
            sum_surjectivity_task(ctx, rec, s, t, y_star, expect_x.as_ref(), *tol)
        }
        Hammerstein { s, t, x, branch, expect_y, tol } => {
            hammerstein(ctx, rec, s, t, x, *branch, expect_y.as_ref(), *tol)
        }
        EpisumEval { f, g, at, resolution, radius, expect, tol } => {
            episum_eval(ctx, rec, f, g, at, *resolution, *radius, expect.as_ref(), *tol)
        }
    }
}

fn run_task(ctx: &mut Ctx, task: &Task, timings: bool) -> TaskRecord {
    let start = Instant::now();
    let mut rec = Rec::default();
    match run_kind(ctx, &mut rec, &task.kind) {
        Ok(()) => {}
        Err(Error::NonConvergence { residual, iterations }) => {
            rec.put("iterations", iterations);
            rec.undecided("solver converged", residual);
        }
        Err(e) => rec.check(false, "task ran without error", e.to_string().as_str()),
    }
    let (status, failure) = match (rec.failure, rec.inconclusive) {
        (Some(f), _) => (Status::Fail, Some(f)),
        (None, Some(f)) => (Status::Inconclusive, Some(f)),
        (None, None) => (Status::Pass, None),
    };
    TaskRecord {
        id: task.id.clone(),
        verb: task.kind.verb().to_string(),
        status,
        failure,
        metrics: rec.metrics,
        wall_ms: timings.then(|| start.elapsed().as_secs_f64() * 1e3),
    }
}

/// Runs every task in order; task failures are recorded and the run goes on.
pub fn run_scenario(sc: &Scenario, label: &str, opts: &RunOptions) -> Result<Report, CliError> {
    validate(sc)?;
    let seed = opts.seed.unwrap_or(sc.seed);
    let mut cfg = sc.solver.apply(seed);
    if let Some(t) = opts.tol {
        cfg.tol = t;
    }
    if let Some(m) = opts.max_iters {
        cfg.max_iters = m;
    }
    let mut ctx = Ctx { b: Builder::new(sc), cfg, seed };
    let tasks: Vec<TaskRecord> = sc.tasks.iter().map(|t| run_task(&mut ctx, t, opts.timings)).collect();
    let summary = Summary::of(&tasks);
    Ok(Report { scenario: sc.name.clone().unwrap_or_else(|| label.to_string()), seed, tasks, summary })
}
