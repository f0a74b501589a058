use std::path::Path;
use std::time::Instant;

use fbmbt::calculus::midpoint_taylor_table;
use fbmbt::fgn::{rho, sum_rho_cubed, DyadicLevel, HurstExponent};
use fbmbt::limitlaw::{kappa_constants, CorrectionSampler};
use fbmbt::rng::derive_seed;
use fbmbt::skeleton::{crossings_bruteforce, sample_skeleton, signed_crossings_closed_form};
use fbmbt::stats::{fit_rate, ks_two_sample, mc_run};
use fbmbt::studies::{
    identity_instance, o_tilde_draw, telescoping_sides, terminal_y_draw, third_order_variations, v3_draw,
    v_tilde_3_draw, IDENTITY_NAMES, IDENTITY_TOLERANCE,
};
use fbmbt::Field2D;

use crate::config::{Experiment, ExperimentConfig, ResolvedConfig};
use crate::error::CliResult;
use crate::report::{
    BatchSeed, CsvRow, ExperimentReport, LevelEstimate, RateEstimate, SeedLineage, SeriesConstant, TaylorEntry,
    TestOutcome,
};

/// Largest telescoping discrepancy accepted by rho-table.
pub const TELESCOPE_TOL: f64 = 1e-12;
/// Largest tail bound accepted by constants.
pub const TAIL_TOL: f64 = 1e-6;
/// Significance level of the two-sample tests in law-h-eq.
pub const KS_ALPHA: f64 = 0.01;
/// Allowed distance of the fitted grid rate from `1/2 - 3H` in diverge-h-lt.
pub const DIVERGE_SLOPE_TOL: f64 = 0.10;
/// Allowed normalized skeleton rate in diverge-h-lt.
pub const DIVERGE_LEVEL_TOL: f64 = 0.08;
/// Largest standardized variance error in skeleton-suite.
pub const SKELETON_Z_MAX: f64 = 4.0;

struct Run<'a> {
    cfg: &'a ResolvedConfig,
    workers: Option<usize>,
    report: ExperimentReport,
}

impl<'a> Run<'a> {
    /// One Monte-Carlo batch with its own master seed; returns `(seed, value)` per replication.
    fn batch<T, F>(&mut self, name: &str, n: Option<u32>, replications: usize, draw: F) -> CliResult<Vec<(u64, T)>>
    where
        T: Send,
        F: Fn(u64) -> fbmbt::Result<T> + Sync + Send,
    {
        let lineage = &mut self.report.seed_lineage;
        let index = lineage.batches.len() as u64;
        let master_seed = derive_seed(self.cfg.master_seed, index);
        lineage.batches.push(BatchSeed { batch: name.into(), n, index, master_seed, replications });
        Ok(mc_run(replications, master_seed, self.workers, |_, s| Ok((s, draw(s)?)))?)
    }

    fn rows(&mut self, statistic: &str, draws: impl IntoIterator<Item = (u64, f64)>) -> Vec<f64> {
        draws
            .into_iter()
            .enumerate()
            .map(|(replication, (seed, value))| {
                self.report.rows.push(CsvRow { replication, seed, statistic: statistic.into(), value });
                value
            })
            .collect()
    }

    /// Record a scalar batch at level `n` as raw rows plus a level estimate.
    fn level(&mut self, statistic: &str, n: u32, draws: Vec<(u64, f64)>) -> Vec<f64> {
        let xs = self.rows(&format!("{statistic}_n{n}"), draws);
        self.report.per_level.push(LevelEstimate::of(statistic, n, &xs));
        xs
    }

    fn test(&mut self, t: TestOutcome) {
        self.report.tests.push(t);
    }

    fn rate(&mut self, name: &str, ns: &[f64], values: &[f64]) -> CliResult<f64> {
        let fit = fit_rate(ns, values)?;
        self.report.rates.push(RateEstimate::of(name, &fit));
        Ok(fit.slope)
    }

    fn ns(&self) -> Vec<f64> {
        self.cfg.levels.iter().map(|l| l.n() as f64).collect()
    }
}

fn second_moment(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64
}

/// Run `config`, write `<csv>` and `<json>` under `out_dir` and return the report.
///
/// `workers` sets the degree of parallelism and never changes the numbers.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path, workers: Option<usize>) -> CliResult<ExperimentReport> {
    let report = compute(config, workers)?;
    report.write(out_dir)?;
    Ok(report)
}

/// Run `config` without touching the filesystem.
pub fn compute(config: &ExperimentConfig, workers: Option<usize>) -> CliResult<ExperimentReport> {
    let start = Instant::now();
    let cfg = config.resolve()?;
    if workers == Some(0) {
        return Err(crate::CliError::Config { key: "--workers", message: "must be at least 1".into() });
    }
    let mut run = Run {
        cfg: &cfg,
        workers,
        report: ExperimentReport {
            config: config.clone(),
            toolkit_version: env!("CARGO_PKG_VERSION").into(),
            series_constants: Vec::new(),
            per_level: Vec::new(),
            tests: Vec::new(),
            rates: Vec::new(),
            taylor_table: Vec::new(),
            runtime_seconds: 0.0,
            seed_lineage: SeedLineage::new(cfg.master_seed),
            rows: Vec::new(),
        },
    };
    match cfg.experiment {
        Experiment::RhoTable => rho_table(&mut run)?,
        Experiment::Constants => constants(&mut run)?,
        Experiment::TaylorTable => taylor_table(&mut run)?,
        Experiment::IdentitySuite => identities(&mut run)?,
        Experiment::ConvergeHGt => converge(&mut run)?,
        Experiment::LawHEq => law(&mut run)?,
        Experiment::DivergeHLt => diverge(&mut run)?,
        Experiment::SkeletonSuite => skeleton(&mut run)?,
    }
    let mut report = run.report;
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn rho_table(run: &mut Run) -> CliResult<()> {
    let h = run.cfg.hurst;
    for k in 0..=run.cfg.max_lag {
        let r = rho(k as i64, h);
        run.report.rows.push(CsvRow { replication: k as usize, seed: 0, statistic: "rho".into(), value: r });
    }
    let s = sum_rho_cubed(h, run.cfg.truncation)?;
    run.report.series_constants.push(SeriesConstant::from_series("S", s.value, &s));
    let worst = [10, 1_000, run.cfg.truncation]
        .into_iter()
        .map(|m| {
            let (l, r) = telescoping_sides(h, m);
            (l - r).abs()
        })
        .fold(0.0, f64::max);
    run.test(TestOutcome::check("telescoping", worst, worst <= TELESCOPE_TOL));
    Ok(())
}

fn constants(run: &mut Run) -> CliResult<()> {
    let h = run.cfg.hurst;
    let s = sum_rho_cubed(h, run.cfg.truncation)?;
    let mut named = vec![("S", s.value), ("sqrt_6S", (6.0 * s.value).sqrt())];
    if h.is_one_sixth() {
        let k = kappa_constants(s)?;
        named.extend([("kappa1", k.kappa1), ("kappa2", k.kappa2), ("kappa3", k.kappa3), ("kappa4", k.kappa4)]);
    }
    for (i, (name, value)) in named.into_iter().enumerate() {
        run.report.series_constants.push(SeriesConstant::from_series(name, value, &s));
        run.report.rows.push(CsvRow { replication: i, seed: 0, statistic: name.into(), value });
    }
    run.test(TestOutcome::check("series_tail", s.tail_bound, s.tail_bound < TAIL_TOL));
    Ok(())
}

fn taylor_table(run: &mut Run) -> CliResult<()> {
    let table = midpoint_taylor_table(run.cfg.max_order)?;
    for (i, (&(a1, a2), c)) in table.entries.iter().enumerate() {
        let value = table.get_f64(a1, a2);
        run.report.taylor_table.push(TaylorEntry { a1, a2, exact: c.to_string(), value });
        run.report.rows.push(CsvRow { replication: i, seed: 0, statistic: format!("C_{a1}_{a2}"), value });
    }
    let expected = [((1, 0), "1"), ((0, 1), "1"), ((3, 0), "1/24"), ((0, 3), "1/24"), ((2, 1), "1/8"), ((1, 2), "1/8")];
    let wrong = expected.iter().filter(|((a, b), v)| table.get(*a, *b).map(|c| c.to_string()).as_deref() != Some(*v)).count();
    run.test(TestOutcome::check("named_entries", wrong as f64, wrong == 0));
    let nonzero = table.entries.iter().filter(|((a, b), c)| (a + b) % 2 == 0 && c.to_string() != "0").count();
    run.test(TestOutcome::check("even_orders_zero", nonzero as f64, nonzero == 0));
    Ok(())
}

fn identities(run: &mut Run) -> CliResult<()> {
    let per = run.batch("identity", None, run.cfg.replications, identity_instance)?;
    for (k, name) in IDENTITY_NAMES.iter().enumerate() {
        let xs = run.rows(name, per.iter().map(|(s, d)| (*s, d[k])));
        let worst = xs.iter().copied().fold(0.0, f64::max);
        // crossing counts are integers and must agree exactly
        let tol = if k == 0 { 0.0 } else { IDENTITY_TOLERANCE };
        run.test(TestOutcome::check(*name, worst, worst <= tol));
    }
    Ok(())
}

fn converge(run: &mut Run) -> CliResult<()> {
    let (h, t, reps, f) = (run.cfg.hurst, run.cfg.t, run.cfg.replications, run.cfg.function.clone());
    let names = ["V30", "V21", "V12", "V03", "skeleton_residual"];
    let mut moments: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for level in run.cfg.levels.clone() {
        let n = level.n();
        let v = run.batch("third_order", Some(n), reps, |s| third_order_variations(h, level, &f, t, s))?;
        for (k, name) in names[..4].iter().enumerate() {
            let xs = run.level(name, n, v.iter().map(|(s, x)| (*s, x[k])).collect());
            moments[k].push(second_moment(&xs));
        }
        let r = run.batch("skeleton_residual", Some(n), reps, |s| Ok(o_tilde_draw(h, level, &f, t, s)?.1))?;
        let xs = run.level(names[4], n, r);
        moments[4].push(second_moment(&xs));
    }
    let ns = run.ns();
    for (name, m) in names.iter().zip(&moments) {
        let slope = run.rate(&format!("second_moment_{name}"), &ns, m)?;
        let shrinks = m[m.len() - 1] < m[0];
        run.test(TestOutcome::check(format!("decay_{name}"), slope, slope < 0.0 && shrinks));
    }
    Ok(())
}

fn law(run: &mut Run) -> CliResult<()> {
    let (t, reps, mesh, f) = (run.cfg.t, run.cfg.replications, run.cfg.mesh, run.cfg.function.clone());
    let sixth = HurstExponent::one_sixth();
    let s = sum_rho_cubed(sixth, run.cfg.truncation)?;
    let k = kappa_constants(s)?;
    for (name, value) in [("S", s.value), ("kappa1", k.kappa1), ("kappa2", k.kappa2), ("kappa3", k.kappa3), ("kappa4", k.kappa4)] {
        run.report.series_constants.push(SeriesConstant::from_series(name, value, &s));
    }
    let sampler = CorrectionSampler::with_capacity(k, ((t / mesh).ceil() as usize).min(1 << 12))?;
    let c = run.batch("correction_fbm", None, reps, |s| Ok(sampler.fbm(&f, t, mesh, s)?.value))?;
    let correction = run.rows("correction_fbm", c);
    let l = run.batch("limit_fbmbt", None, reps, |s| {
        let c = sampler.fbmbt(&f, t, None, s)?;
        Ok(f.value(c.x_end.0, c.x_end.1) - f.value(0.0, 0.0) - c.value)
    })?;
    let limit = run.rows("limit_fbmbt", l);
    for level in run.cfg.levels.clone() {
        let n = level.n();
        let v = run.batch("V3", Some(n), reps, |s| v3_draw(sixth, level, &f, t, s))?;
        let v = run.level("V3", n, v);
        let o = run.batch("O_tilde", Some(n), reps, |s| Ok(o_tilde_draw(sixth, level, &f, t, s)?.0))?;
        let o = run.level("O_tilde", n, o);
        run.test(TestOutcome::two_sample(format!("ks_V3_vs_correction_n{n}"), &ks_two_sample(&v, &correction)?, KS_ALPHA));
        run.test(TestOutcome::two_sample(format!("ks_O_tilde_vs_limit_n{n}"), &ks_two_sample(&o, &limit)?, KS_ALPHA));
    }
    Ok(())
}

fn diverge(run: &mut Run) -> CliResult<()> {
    let (h, t, reps, f) = (run.cfg.hurst, run.cfg.t, run.cfg.replications, run.cfg.function.clone());
    let mut grid = Vec::new();
    let mut skel = Vec::new();
    for level in run.cfg.levels.clone() {
        let n = level.n();
        let v = run.batch("V3", Some(n), reps, |s| v3_draw(h, level, &f, t, s))?;
        let xs = run.level("V3", n, v);
        grid.push(second_moment(&xs));
        let norm = (-(n as f64) * (1.0 - 6.0 * h.value()) / 4.0).exp2();
        let w = run.batch("Vt3_normalized", Some(n), reps, |s| Ok(norm * v_tilde_3_draw(h, level, &f, t, s)?))?;
        let xs = run.level("Vt3_normalized", n, w);
        skel.push(second_moment(&xs));
    }
    let ns = run.ns();
    let target = 0.5 - 3.0 * h.value();
    let g = run.rate("second_moment_V3", &ns, &grid)?;
    run.test(TestOutcome::check("rate_V3", g, (g - target).abs() <= DIVERGE_SLOPE_TOL));
    let s = run.rate("second_moment_Vt3_normalized", &ns, &skel)?;
    run.test(TestOutcome::check("rate_Vt3_normalized", s, s.abs() <= DIVERGE_LEVEL_TOL));
    Ok(())
}

fn crossing_mismatches(level: DyadicLevel, steps: usize, seed: u64) -> fbmbt::Result<f64> {
    let walk = sample_skeleton(level, steps, seed);
    let table = crossings_bruteforce(&walk, steps)?.net();
    let closed = signed_crossings_closed_form(&walk, steps)?;
    let bad = table.iter().filter(|&(j, v)| closed.get(j).copied().unwrap_or(0) != *v).count()
        + closed.keys().filter(|j| !table.contains_key(j)).count();
    Ok(bad as f64)
}

fn skeleton(run: &mut Run) -> CliResult<()> {
    let (t, reps) = (run.cfg.t, run.cfg.replications);
    for level in run.cfg.levels.clone() {
        let n = level.n();
        let steps = level.skeleton_steps(t);
        let y = run.batch("terminal_Y", Some(n), reps, |s| terminal_y_draw(level, t, s))?;
        let y = run.level("terminal_Y", n, y);
        // Y is Brownian at the grid time floor(2^n t) 2^-n
        let t_eff = steps as f64 * (-(n as f64)).exp2();
        let var = y.iter().map(|x| x * x).sum::<f64>() / reps as f64;
        let z = (var - t_eff) / (t_eff * (2.0 / reps as f64).sqrt());
        run.test(TestOutcome::check(format!("variance_Y_n{n}"), z, z.abs() <= SKELETON_Z_MAX));
        let c = run.batch("crossings", Some(n), reps, |s| crossing_mismatches(level, steps, s))?;
        let bad: f64 = run.rows(&format!("crossing_mismatch_n{n}"), c).iter().sum();
        run.test(TestOutcome::check(format!("crossings_closed_form_n{n}"), bad, bad == 0.0));
    }
    Ok(())
}
