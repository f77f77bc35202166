use std::f64::consts::PI;
use std::fmt::Write as _;

use super::config::Experiment;
use super::output::{format_f64, OutputDir, Table};
use super::{CliError, Command};
use crate::error::LabError;
use crate::limits::{
    chung_statistic, clt_test, fourth_moment_ratio, kefp_classify, ks_self_check, lil_chung_study,
    lil_statistic, KefpVerdict, LilChungStudy, TestReport, Verdict,
};
use crate::schedule::{block_variance_ratio, schedule_asymptotics, BlockSchedule};
use crate::variance::variance_report;
use crate::walk::{uniformity_gap, Mod1Spectrum};

pub const LIL_BAND: [f64; 2] = [0.6, 1.2];
pub const CHUNG_ORACLE_BAND: [f64; 2] = [0.5, 2.0];
pub const BLOCK_BAND: [f64; 2] = [0.9, 1.1];
pub const MOMENT_SPREAD_LIMIT: f64 = 3.0;

const DEFAULT_VARIANCE_REPS: u64 = 100_000;
const DEFAULT_DENSITY_STEP: u64 = 10;
const DEFAULT_SCHEDULE_N: u64 = 1000;
const DEFAULT_BLOCK_N: u64 = 400;
const DEFAULT_BLOCK_REPS: u64 = 10_000;
const DEFAULT_CLT_N: u64 = 4096;
const DEFAULT_CLT_REPS: u64 = 2000;
const DEFAULT_MOMENT_REPS: u64 = 10_000;
const KS_SELFCHECK_BATCH: usize = 2000;
const KS_SELFCHECK_BATCHES: u64 = 100;

/// Mutable state of one CLI invocation.
pub struct Session<'a> {
    pub exp: &'a Experiment,
    pub out: OutputDir,
    pub reports: Vec<TestReport>,
    pub stdout: String,
    study: Option<LilChungStudy>,
}

type Step = Result<(), CliError>;

impl<'a> Session<'a> {
    pub fn new(exp: &'a Experiment, out: OutputDir) -> Self {
        Self {
            exp,
            out,
            reports: Vec::new(),
            stdout: String::new(),
            study: None,
        }
    }

    pub fn run(&mut self, command: Command) -> Step {
        match command {
            Command::Variance => self.variance(),
            Command::Density => self.density(),
            Command::Decay => self.decay(),
            Command::Schedule => self.schedule(),
            Command::Blocks => self.blocks(),
            Command::Clt => self.clt(),
            Command::Lil => self.lil(),
            Command::Chung => self.chung(),
            Command::Kefp => self.kefp(),
            Command::Moment4 => self.moment4(),
            Command::Battery => self.battery(),
        }?;
        self.write_reports(command)
    }

    fn write_reports(&mut self, command: Command) -> Step {
        let stem = format!("reports-{}", command.name());
        self.out.write_json(&stem, &self.reports)?;
        for r in &self.reports {
            let _ = write!(self.stdout, "{:<22} {:<10} statistic={}", r.name, verdict_word(r.verdict), format_f64(r.statistic));
            if let Some(p) = r.p_value {
                let _ = write!(self.stdout, " p={}", format_f64(p));
            }
            if let Some([lo, hi]) = r.band {
                let _ = write!(self.stdout, " band=[{lo}, {hi}]");
            }
            self.stdout.push('\n');
        }
        Ok(())
    }

    fn battery(&mut self) -> Step {
        self.variance()?;
        self.density()?;
        self.decay()?;
        self.schedule()?;
        self.blocks()?;
        self.reports.push(ks_self_check(
            KS_SELFCHECK_BATCH,
            KS_SELFCHECK_BATCHES,
            self.exp.config.seed,
        ));
        self.clt()?;
        self.lil()?;
        self.chung()?;
        self.kefp()?;
        self.moment4()
    }

    fn variance(&mut self) -> Step {
        let (e, c) = (self.exp, &self.exp.config);
        let reps = c.reps.unwrap_or(DEFAULT_VARIANCE_REPS);
        let r = variance_report(&e.function, &e.gaps, c.x, c.k, c.grid, reps, c.seed)?;
        self.out.write_json("variance", &r)?;

        let best = r.best();
        let se = r.monte_carlo_std_err;
        let mc_diff = (r.monte_carlo - best).abs();
        let z = if se > 0.0 {
            mc_diff / se
        } else if mc_diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        let mut ok = z <= 3.0;
        let mut report = TestReport::new("variance-agreement", z, reps, Verdict::Pass)
            .with_detail("monte_carlo", r.monte_carlo)
            .with_detail("monte_carlo_std_err", se)
            .with_detail("series", r.series_truncated);
        if let Some(cf) = r.closed_form {
            let tol = r.series_tail_bound.unwrap_or(0.0).max(1e-4);
            let diff = (r.series_truncated - cf).abs();
            ok &= diff <= tol;
            report = report
                .with_detail("closed_form", cf)
                .with_detail("series_diff", diff)
                .with_detail("series_tolerance", tol);
        }
        if let Some(t) = r.series_tail_bound {
            report = report.with_detail("series_tail_bound", t);
        }
        report.verdict = Verdict::from_bool(ok);
        self.reports.push(report);

        let _ = writeln!(self.stdout, "A_x estimates at x = {}", c.x);
        let _ = writeln!(self.stdout, "  {:<14} {:<24} uncertainty", "method", "value");
        match r.closed_form {
            Some(cf) => {
                let _ = writeln!(self.stdout, "  {:<14} {:<24} exact", "closed form", format_f64(cf));
            }
            None => {
                let _ = writeln!(self.stdout, "  {:<14} {:<24} n/a", "closed form", "unsupported");
            }
        }
        let tail = r
            .series_tail_bound
            .map(|t| format!("tail <= {}", format_f64(t)))
            .unwrap_or_else(|| "tail bound unavailable".into());
        let _ = writeln!(
            self.stdout,
            "  {:<14} {:<24} {tail}",
            format!("series K={}", r.truncation_k),
            format_f64(r.series_truncated)
        );
        let _ = writeln!(
            self.stdout,
            "  {:<14} {:<24} std err {}",
            "monte carlo",
            format_f64(r.monte_carlo),
            format_f64(se)
        );
        Ok(())
    }

    fn spectrum(&self) -> Result<Mod1Spectrum, CliError> {
        let c = &self.exp.config;
        Ok(Mod1Spectrum::new(&self.exp.gaps, c.x, c.grid)?)
    }

    fn density(&mut self) -> Step {
        let step = self.exp.config.n.unwrap_or(DEFAULT_DENSITY_STEP);
        let step = u32::try_from(step).map_err(|_| LabError::invalid("density step too large"))?;
        let p = self.spectrum()?.density(step)?;
        let mut t = Table::new(&["bin", "value"]);
        for (i, v) in p.values.iter().enumerate() {
            t.push(vec![(i as u64).into(), (*v).into()]);
        }
        self.out.write_table("density", &t)?;
        self.reports.push(
            TestReport::new("uniformity-gap", uniformity_gap(&p), p.grid_size as u64, Verdict::Diagnostic)
                .with_detail("step", step as f64)
                .with_detail("mass", p.mass()),
        );
        Ok(())
    }

    fn decay(&mut self) -> Step {
        let steps = self.exp.config.decay_steps;
        let spectrum = self.spectrum()?;
        let mut t = Table::new(&["n", "gap"]);
        for n in 1..=steps {
            t.push(vec![(n as u64).into(), uniformity_gap(&spectrum.density(n)?).into()]);
        }
        self.out.write_table("decay", &t)?;
        let report = match spectrum.fit_decay(steps) {
            Ok(fit) => {
                self.out.write_json("decay-fit", &fit)?;
                TestReport::new("decay-fit", fit.w, steps as u64, Verdict::Diagnostic)
                    .with_detail("c", fit.c)
                    .with_detail("c_fit", fit.c_fit)
                    .with_detail("r_squared", fit.r_squared)
            }
            Err(LabError::DegenerateFit(_)) => {
                TestReport::new("decay-fit", f64::NAN, steps as u64, Verdict::Diagnostic)
                    .with_detail("degenerate", 1.0)
            }
            Err(e) => return Err(e.into()),
        };
        self.reports.push(report);
        Ok(())
    }

    fn schedule(&mut self) -> Step {
        let n = self.exp.config.n.unwrap_or(DEFAULT_SCHEDULE_N);
        let s = BlockSchedule::new(n);
        let mut t = Table::new(&[
            "k",
            "m_tilde",
            "m_hat",
            "m",
            "long_start",
            "long_end",
            "short_start",
            "short_end",
        ]);
        let mut next = 1;
        let mut tiled = true;
        for (i, b) in s.blocks.iter().enumerate() {
            tiled &= b.long_start == next && b.short_start == b.long_end + 1;
            next = b.short_end + 1;
            t.push(vec![
                b.k.into(),
                s.m_tilde[i].into(),
                s.m_hat[i].into(),
                s.m[i].into(),
                b.long_start.into(),
                b.long_end.into(),
                b.short_start.into(),
                b.short_end.into(),
            ]);
        }
        tiled &= s.m.last().is_none_or(|&m| m + 1 == next);
        self.out.write_table("schedule", &t)?;
        self.reports.push(TestReport::new("schedule-tiling", n as f64, n, Verdict::from_bool(tiled)));
        if n >= 10 {
            let a = schedule_asymptotics(n)?;
            self.out.write_json("schedule-asymptotics", &a)?;
            self.reports.push(
                TestReport::new("schedule-asymptotics", a.tilde_ratio, n, Verdict::Diagnostic)
                    .with_detail("hat_ratio", a.hat_ratio)
                    .with_detail("remainder_ratio", a.remainder_ratio),
            );
        }
        Ok(())
    }

    fn blocks(&mut self) -> Step {
        let (e, c) = (self.exp, &self.exp.config);
        let n = c.n.unwrap_or(DEFAULT_BLOCK_N);
        let reps = c.reps.unwrap_or(DEFAULT_BLOCK_REPS);
        let coarse = block_variance_ratio(&e.function, &e.gaps, c.x, (n / 4).max(1), reps, c.seed)?;
        let fine = block_variance_ratio(&e.function, &e.gaps, c.x, n, reps, c.seed)?;
        self.out.write_json("blocks", &[&coarse, &fine])?;
        // the ratio is only asymptotically 1, so the check is that the ratio moves toward 1
        let improving = (fine.ratio_long - 1.0).abs() < (coarse.ratio_long - 1.0).abs();
        let in_band = fine.ratio_long >= BLOCK_BAND[0] && fine.ratio_long <= BLOCK_BAND[1];
        self.reports.push(
            TestReport::new("block-variance", fine.ratio_long, reps, Verdict::from_bool(improving))
                .with_detail("n", n as f64)
                .with_detail("ratio_long_quarter_n", coarse.ratio_long)
                .with_detail("ratio_short", fine.ratio_short)
                .with_detail("in_band_0.9_1.1", if in_band { 1.0 } else { 0.0 }),
        );
        Ok(())
    }

    fn clt(&mut self) -> Step {
        let (e, c) = (self.exp, &self.exp.config);
        let n = c.n.unwrap_or(DEFAULT_CLT_N);
        let reps = c.reps.unwrap_or(DEFAULT_CLT_REPS);
        self.reports.push(clt_test(&e.function, &e.gaps, c.x, n, reps, c.seed)?);
        Ok(())
    }

    fn study(&mut self) -> Result<&LilChungStudy, CliError> {
        if self.study.is_none() {
            let (e, c) = (self.exp, &self.exp.config);
            let study = lil_chung_study(
                &e.function,
                &e.gaps,
                c.x,
                c.n_max,
                c.gamma,
                c.trajectories,
                c.oracle_paths,
                c.seed,
            )?;
            self.out.write_json("trajectory-study", &study)?;
            let mut t = Table::new(&["trajectory", "N", "partialSum", "runningMaxAbs", "lilStat", "chungStat"]);
            for (i, traj) in study.trajectories.iter().enumerate() {
                let (lil, chung) = (lil_statistic(traj), chung_statistic(traj));
                let rows = traj.checkpoints.iter().filter(|cp| cp.n >= lil.n.first().copied().unwrap_or(u64::MAX));
                for (j, cp) in rows.enumerate() {
                    t.push(vec![
                        (i as u64).into(),
                        cp.n.into(),
                        cp.partial_sum.into(),
                        cp.running_max_abs.into(),
                        lil.value[j].into(),
                        chung.value[j].into(),
                    ]);
                }
            }
            self.out.write_table("checkpoints", &t)?;
            self.study = Some(study);
        }
        Ok(self.study.as_ref().expect("just computed"))
    }

    fn lil(&mut self) -> Step {
        let s = self.study()?;
        let root = s.a_x.sqrt();
        let report = TestReport::banded("lil-band", s.lil_median / root, LIL_BAND, s.lil_finals.len() as u64)
            .with_detail("a_x", s.a_x)
            .with_detail("lower_side", s.lil_lower_median / root)
            .with_detail("brownian_oracle", s.oracle_lil_median);
        self.reports.push(report);
        Ok(())
    }

    fn chung(&mut self) -> Step {
        let s = self.study()?;
        let root = s.a_x.sqrt();
        let scaled = s.chung_median / root;
        let classical = PI / 8f64.sqrt();
        let report = TestReport::banded(
            "chung-oracle",
            scaled / s.oracle_chung_median,
            CHUNG_ORACLE_BAND,
            s.chung_finals.len() as u64,
        )
        .with_detail("a_x", s.a_x)
        .with_detail("median_over_root_a_x", scaled)
        .with_detail("brownian_oracle", s.oracle_chung_median)
        .with_detail("classical_constant", classical)
        .with_detail("ratio_to_classical", scaled / classical)
        .with_detail("printed_constant", 8.0 / (PI * PI));
        self.reports.push(report);
        Ok(())
    }

    fn kefp(&mut self) -> Step {
        let c = &self.exp.config;
        let mut t_max = c.t_max.clone();
        t_max.sort_by(f64::total_cmp);
        let mut t = Table::new(&["a", "t_max", "partial_integral", "exponent", "verdict"]);
        let mut ok = true;
        for &a in &c.a {
            let mut prev = 0.0;
            for &tm in &t_max {
                let r = kefp_classify(a, tm)?;
                ok &= r.partial_integral >= prev;
                ok &= (r.verdict == KefpVerdict::Converges) == (a > 3.0);
                prev = r.partial_integral;
                let verdict = match r.verdict {
                    KefpVerdict::Converges => "converges",
                    KefpVerdict::Diverges => "diverges",
                };
                t.push(vec![a.into(), tm.into(), r.partial_integral.into(), r.exponent.into(), verdict.into()]);
            }
        }
        self.out.write_table("kefp", &t)?;
        let cases = (c.a.len() * t_max.len()) as u64;
        self.reports.push(TestReport::new("kefp-rule", cases as f64, cases, Verdict::from_bool(ok)));
        Ok(())
    }

    fn moment4(&mut self) -> Step {
        let (e, c) = (self.exp, &self.exp.config);
        let reps = c.reps.unwrap_or(DEFAULT_MOMENT_REPS);
        if let Some(w) = &c.weights {
            let m = fourth_moment_ratio(&e.function, &e.gaps, c.x, w, reps, c.seed)?;
            self.out.write_json("moment4", &m)?;
            self.reports.push(
                TestReport::new("moment4", m.ratio, reps, Verdict::Diagnostic).with_detail("std_err", m.std_err),
            );
            return Ok(());
        }
        let mut t = Table::new(&["n", "ratio", "std_err"]);
        let mut est = Vec::new();
        for &n in &c.moment_sizes {
            let m = fourth_moment_ratio(&e.function, &e.gaps, c.x, &vec![1.0; n as usize], reps, c.seed)?;
            t.push(vec![n.into(), m.ratio.into(), m.std_err.into()]);
            est.push(m);
        }
        self.out.write_table("moment4", &t)?;
        let hi = est.iter().map(|m| m.ratio).fold(f64::NEG_INFINITY, f64::max);
        let lo = est.iter().map(|m| m.ratio).fold(f64::INFINITY, f64::min);
        let spread = hi / lo;
        let (first, last) = (est[0], est[est.len() - 1]);
        let monotone_up = est.windows(2).all(|w| w[1].ratio > w[0].ratio);
        let noise = 3.0 * (first.std_err.powi(2) + last.std_err.powi(2)).sqrt();
        let increasing = est.len() > 1 && monotone_up && last.ratio - first.ratio > noise;
        let ok = spread < MOMENT_SPREAD_LIMIT && !increasing;
        self.reports.push(
            TestReport::new("moment4-bounded", spread, reps, Verdict::from_bool(ok))
                .with_detail("min_ratio", lo)
                .with_detail("max_ratio", hi)
                .with_detail("increasing_trend", if increasing { 1.0 } else { 0.0 }),
        );
        Ok(())
    }
}

fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "FAIL",
        Verdict::Diagnostic => "diagnostic",
    }
}
