//! Subcommand implementations. Each writes one CSV, JSON or text result.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use wof_core::engine::{gaussian_work, low_excitation_work, model_for, w_max_analytic, ExactLattice, WorkMode};
use wof_core::feedforward::WorkTable;
use wof_core::montecarlo::{run_trials, simulate_trials, ValidationSuite, MAX_OUTSIDE};
use wof_core::noise::{noisy_feedforward_table, work_with_noise, NoiseCaseRegistry};
use wof_core::optimize::optimize_numeric;
use wof_core::photostatistics::{outcome_distribution_thermal, EstimateMode};
use wof_core::report::*;
use wof_core::thermo::{standard_families, EfficiencyFamily};
use wof_core::Result as CoreResult;

use crate::config::RunConfig;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// Destination of a command's result: a file or stdout.
pub struct Output {
    path: Option<PathBuf>,
}

impl Output {
    pub fn new(path: Option<PathBuf>) -> Self {
        Output { path }
    }

    fn with_writer(&self, f: impl FnOnce(&mut dyn Write) -> CoreResult<()>) -> Result<()> {
        match &self.path {
            Some(p) => {
                let mut w = BufWriter::new(File::create(p).map_err(wof_core::WofError::from)?);
                f(&mut w)?;
                w.flush().map_err(wof_core::WofError::from)?;
            }
            None => {
                let stdout = std::io::stdout();
                let mut w = BufWriter::new(stdout.lock());
                f(&mut w)?;
                w.flush().map_err(wof_core::WofError::from)?;
            }
        }
        Ok(())
    }

    pub fn write_text(&self, text: &str) -> Result<()> {
        self.with_writer(|w| Ok(w.write_all(text.as_bytes())?))
    }

    fn write_csv<T: serde::Serialize>(&self, meta: &Metadata, rows: &[T]) -> Result<()> {
        self.with_writer(|w| write_rows(w, meta, rows))
    }
}

fn metadata(command: &str, cfg: &RunConfig) -> Metadata {
    let mut meta = Metadata::new().with("command", command);
    cfg.echo(&mut meta);
    meta
}

fn estimate_mode(cfg: &RunConfig) -> Result<EstimateMode> {
    match cfg.work_mode()? {
        WorkMode::Exact => Ok(EstimateMode::Exact),
        WorkMode::Gaussian => Ok(EstimateMode::Gaussian),
        WorkMode::LowExcitation => Err(CliError::Usage("engine.mode must be `exact` or `gaussian` for lattice outputs".into())),
    }
}

pub fn optimize(cfg: &RunConfig, out: &Output) -> Result<()> {
    let mode = cfg.work_mode()?;
    let rows = cfg
        .nbar_grid()
        .par_iter()
        .map(|&nbar| {
            let p = optimize_numeric(nbar, mode, cfg.engine.unsqueeze)?;
            Ok(OptimizeRow { nbar, w_exact_opt: p.w_max, w_analytic: w_max_analytic(nbar)?.w_max, kappa: p.kappa, beta: p.beta })
        })
        .collect::<CoreResult<Vec<_>>>()?;
    out.write_csv(&metadata("optimize", cfg), &rows)
}

fn parse_family(s: &str, cfg: &RunConfig) -> Result<EfficiencyFamily> {
    let bad = || CliError::Usage(format!("family must be KAPPA_D2:T_D, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let kappa_d2 = a.trim().parse().map_err(|_| bad())?;
    let t_d = b.trim().parse().map_err(|_| bad())?;
    let f = EfficiencyFamily { kappa_d2, t_d, n_lo: cfg.noise.n_lo, n_d: cfg.noise.n_d };
    f.noise()?;
    wof_core::thermo::DetectorThermalState::new(0.0, t_d)?;
    Ok(f)
}

pub fn efficiency(cfg: &RunConfig, families: &[String], out: &Output) -> Result<()> {
    let fams: Vec<EfficiencyFamily> = if families.is_empty() {
        std::iter::once(EfficiencyFamily::IDEAL).chain(standard_families()).collect()
    } else {
        families.iter().map(|s| parse_family(s, cfg)).collect::<Result<_>>()?
    };
    let grid: Vec<f64> = cfg.nbar_grid().into_iter().filter(|&n| n > 1.0).collect();
    if grid.is_empty() {
        return Err(CliError::Usage("efficiency needs n̄ > 1 somewhere in the sweep range".into()));
    }
    if grid.len() < cfg.sweep.points {
        log::warn!("skipping {} grid points at n̄ <= 1", cfg.sweep.points - grid.len());
    }
    let mut rows = Vec::with_capacity(fams.len() * grid.len());
    for f in &fams {
        for &nbar in &grid {
            let e = f.evaluate(nbar)?;
            rows.push(EfficiencyRow {
                family: f.label(),
                kappa_d2: f.kappa_d2,
                t_d: f.t_d,
                log10_nbar: nbar.log10(),
                eta: e.budget.eta,
                eta_max1: e.eta_max1,
                q_reset_over_ein: e.budget.q_reset / nbar,
            });
        }
    }
    out.write_csv(&metadata("efficiency", cfg), &rows)
}

pub fn validate(suite: ValidationSuite, n_trials: Option<u64>, seed: u64, out: &Output) -> Result<()> {
    let reports = suite.run(n_trials, seed)?;
    let mut text = String::new();
    for r in &reports {
        text.push_str(&r.line());
        text.push('\n');
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    let n = reports.first().map_or(0, |r| r.n_trials);
    text.push_str(&format!("suite {} ({n} trials, seed {seed}): {} of {} passed\n", suite.name(), reports.len() - failed, reports.len()));
    out.write_text(&text)?;
    if failed > 0 {
        return Err(CliError::Validation(format!("{failed} of {} targets in suite {}", reports.len(), suite.name())));
    }
    Ok(())
}

pub fn distribution(cfg: &RunConfig, out: &Output) -> Result<()> {
    let dist = outcome_distribution_thermal(cfg.engine.nbar, cfg.splitter()?, estimate_mode(cfg)?)?;
    out.with_writer(|w| write_distribution(w, &metadata("distribution", cfg), &dist))
}

pub fn work_table(cfg: &RunConfig, out: &Output) -> Result<()> {
    let table = WorkTable::build(cfg.engine.nbar, cfg.splitter()?, estimate_mode(cfg)?)?;
    out.with_writer(|w| write_work_table(w, &metadata("work-table", cfg), &table))
}

pub fn sweep(cfg: &RunConfig, out: &Output) -> Result<()> {
    let c = cfg.splitter()?;
    let exact = cfg.work_mode()? == WorkMode::Exact;
    let gauss = model_for(WorkMode::Gaussian);
    let rows = cfg
        .nbar_grid()
        .par_iter()
        .map(|&nbar| {
            let (w_exact, w_us) = if exact {
                let t = ExactLattice::default().table(nbar, c)?;
                (Some(t.mean_gross(false) - c.xi()), Some(t.mean_gross(true) - t.mean_gross(false)))
            } else {
                (None, None)
            };
            Ok(SweepRow {
                nbar,
                kappa: c.kappa,
                beta: c.beta,
                w_exact,
                w_gauss: gaussian_work(nbar, c.epsilon(), c.xi()),
                w_lowex: low_excitation_work(nbar, c.epsilon(), c.xi()),
                w_us,
                e_rem: gauss.mean_work(nbar, c, false)?.e_rem,
            })
        })
        .collect::<CoreResult<Vec<_>>>()?;
    out.write_csv(&metadata("sweep", cfg), &rows)
}

pub fn noise_sweep(cfg: &RunConfig, out: &Output) -> Result<()> {
    let c = cfg.splitter()?;
    let nbar = cfg.engine.nbar;
    let reg = NoiseCaseRegistry::standard();
    let case = reg.get(&cfg.sweep.noise_case)?;
    let rows = cfg
        .param_grid()
        .into_iter()
        .map(|param| {
            Ok(NoiseSweepRow {
                case: case.name().to_string(),
                param,
                nbar,
                kappa: c.kappa,
                beta: c.beta,
                w_noise: work_with_noise(nbar, c, &case.embed(param)?),
                w_closed_form: case.closed_form(nbar, c, param),
            })
        })
        .collect::<CoreResult<Vec<_>>>()?;
    out.write_csv(&metadata("noise-sweep", cfg), &rows)
}

pub fn mc(cfg: &RunConfig, dump: Option<&Path>, out: &Output) -> Result<()> {
    let (nbar, c, noise) = (cfg.engine.nbar, cfg.splitter()?, cfg.noise()?);
    let table = match cfg.mc.feedforward.as_str() {
        "exact" => ExactLattice::default().table(nbar, c)?.feedforward_table(),
        _ => noisy_feedforward_table(nbar, c, &noise),
    };
    let summary = run_trials(nbar, c, &noise, &table, cfg.mc.trials, cfg.mc.seed)?;
    if summary.out_of_lattice_fraction() >= MAX_OUTSIDE {
        log::warn!("{} of {} outcomes fell outside the feedforward lattice", summary.out_of_lattice, summary.n_trials);
    }
    if let Some(path) = dump {
        let trials = simulate_trials(nbar, c, &noise, &table, cfg.mc.seed, 0, cfg.mc.trials);
        let mut w = BufWriter::new(File::create(path).map_err(wof_core::WofError::from)?);
        write_trials(&mut w, &metadata("mc", cfg), 0, &trials)?;
        w.flush().map_err(wof_core::WofError::from)?;
    }
    out.write_text(&(summary.to_json() + "\n"))
}
