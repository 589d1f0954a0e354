use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::Context;
use logfuture::figures::{reproduce_figure, FigureConfig, FIGURES};
use logfuture::report::fmt_f64;
use logfuture::snapshot;
use logfuture::{
    cached_value, impulse_response_analytic, predict_state, windowed_value, AssociativeTensor,
    LaplaceState, Scenario, StimulusVocabulary, Table, TaustarGrid, TemporalWindow, TrainConfig,
};
use serde::Serialize;

use crate::config::{Action, RunConfig};
use crate::error::CliError;

pub struct Invocation {
    pub config: RunConfig,
    pub workers: usize,
    /// Where to write, if different from `config.out`.
    pub destination: Option<PathBuf>,
}

impl Invocation {
    fn out(&self) -> Option<&Path> {
        self.destination.as_deref().or(self.config.out.as_deref())
    }

    fn grid(&self) -> anyhow::Result<Arc<TaustarGrid>> {
        Ok(Arc::new(TaustarGrid::new(self.config.grid)?))
    }

    fn emit(&self, table: &Table, extra: Vec<String>) -> anyhow::Result<()> {
        let mut header = vec![self.config.header_line()];
        header.extend(extra);
        match self.out() {
            Some(path) => table
                .write(path, &header)
                .with_context(|| format!("writing {}", path.display()))?,
            None => std::io::stdout().write_all(table.to_csv(&header)?.as_bytes())?,
        }
        Ok(())
    }

    fn scenario(&self) -> anyhow::Result<Scenario> {
        let path = self
            .config
            .scenario
            .as_ref()
            .ok_or_else(|| CliError::Usage("--scenario is required".into()))?;
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading scenario {}", path.display()))?;
        Scenario::parse(&text)
            .with_context(|| format!("parsing scenario {}", path.display()))
    }

    fn check_interior(&self, warnings: Vec<String>) -> anyhow::Result<Vec<String>> {
        if self.config.strict && !warnings.is_empty() {
            return Err(CliError::Strict(warnings.join("; ")).into());
        }
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        Ok(warnings.into_iter().map(|w| format!("warning: {w}")).collect())
    }

    fn load_snapshot(&self, path: &Path, vocab: Option<&StimulusVocabulary>) -> anyhow::Result<AssociativeTensor> {
        let grid = self.grid()?;
        let loaded = match vocab {
            Some(v) => snapshot::load_checked(path, &grid, v),
            None => snapshot::load(path).and_then(|t| {
                if t.grid().params() == grid.params() {
                    Ok(t)
                } else {
                    Err(logfuture::Error::SnapshotMismatch(format!(
                        "snapshot grid {:?} differs from configured grid {:?}",
                        t.grid().params(),
                        grid.params()
                    )))
                }
            }),
        };
        loaded.with_context(|| format!("loading snapshot {}", path.display()))
    }
}

pub fn run(ctx: &Invocation) -> anyhow::Result<()> {
    match &ctx.config.action {
        Action::Impulse {
            tau_probe,
            duration,
            dt,
        } => impulse(ctx, *tau_probe, *duration, *dt),
        Action::Train => train(ctx),
        Action::Predict { snapshot, probe } => predict(ctx, snapshot, probe),
        Action::Value {
            snapshot,
            probe,
            window,
        } => value(ctx, snapshot, probe, *window),
        Action::Figures { ids } => figures(ctx, ids),
    }
}

fn impulse(ctx: &Invocation, tau_probe: f64, duration: f64, dt: f64) -> anyhow::Result<()> {
    let grid = ctx.grid()?;
    if !(duration.is_finite() && duration >= 0.0) || !(dt.is_finite() && dt > 0.0) {
        return Err(CliError::Usage(format!(
            "need duration >= 0 and dt > 0, got {duration} and {dt}"
        ))
        .into());
    }
    if !(tau_probe.is_finite() && tau_probe > 0.0) {
        return Err(CliError::Usage(format!("probe lag must be positive, got {tau_probe}")).into());
    }
    let mut warnings = Vec::new();
    if !grid.is_interior(tau_probe) {
        let (lo, hi) = grid.interior_range();
        warnings.push(format!("probe {tau_probe} lies outside the grid interior [{lo:.4}, {hi:.4}]"));
    }
    let extra = ctx.check_interior(warnings)?;

    let node = grid.nearest_node(tau_probe);
    let node_tau = grid.tau(node);
    let vocab = Arc::new(StimulusVocabulary::new(["delta"])?);
    let mut state = LaplaceState::new(grid.clone(), vocab);
    state.inject_index(0, 1.0);

    let mut table = Table::new(["t", "node_tau", "discrete", "analytic"]);
    if duration > 0.0 {
        let steps = (duration / dt).round() as usize;
        for i in 0..=steps {
            let t = i as f64 * dt;
            state.advance_to(t)?;
            let discrete = state.invert().get(node, 0);
            let analytic = impulse_response_analytic(&grid, node_tau, t)?;
            table.push(vec![fmt_f64(t), fmt_f64(node_tau), fmt_f64(discrete), fmt_f64(analytic)])?;
        }
    }
    ctx.emit(&table, extra)
}

#[derive(Serialize)]
struct TrainLog<'a> {
    config: &'a RunConfig,
    episodes: u64,
    presentations: Vec<(String, u64)>,
    wall_time_s: f64,
    warnings: Vec<String>,
}

fn train(ctx: &Invocation) -> anyhow::Result<()> {
    let out = ctx
        .out()
        .ok_or_else(|| CliError::Usage("train needs --out for the snapshot".into()))?;
    let scenario = ctx.scenario()?;
    let grid = ctx.grid()?;
    let warnings = ctx.check_interior(scenario.interior_warnings(&grid))?;
    let start = Instant::now();
    let tensor = logfuture::train(
        &scenario,
        grid,
        &TrainConfig {
            episodes_per_choice: ctx.config.episodes_per_choice,
            seed: ctx.config.seed,
            workers: ctx.workers,
            learning_rate: 1.0,
        },
    )?;
    let wall = start.elapsed().as_secs_f64();
    snapshot::save(&tensor, out).with_context(|| format!("writing {}", out.display()))?;

    let log = TrainLog {
        config: &ctx.config,
        episodes: tensor.episodes_seen(),
        presentations: tensor
            .vocab()
            .names()
            .iter()
            .cloned()
            .zip(tensor.presentations().iter().copied())
            .collect(),
        wall_time_s: wall,
        warnings,
    };
    let mut log_path = out.as_os_str().to_owned();
    log_path.push(".log.json");
    fs::write(&log_path, serde_json::to_string_pretty(&log)? + "\n")?;
    eprintln!(
        "trained {} episodes in {wall:.3} s -> {}",
        tensor.episodes_seen(),
        out.display()
    );
    Ok(())
}

fn predict(ctx: &Invocation, snapshot: &Path, probe: &str) -> anyhow::Result<()> {
    let scenario = match ctx.config.scenario {
        Some(_) => Some(ctx.scenario()?),
        None => None,
    };
    let tensor = ctx.load_snapshot(snapshot, scenario.as_ref().map(|s| s.vocab().as_ref()))?;
    let view = tensor.view(ctx.config.readout, ctx.config.axis, ctx.config.epsilon)?;
    let p = predict_state(view.as_ref(), probe)?;
    let vocab = tensor.vocab();
    let mut table = Table::new(["tau_star", "stimulus", "value"]);
    for (j, &tau) in tensor.grid().taus().iter().enumerate() {
        for i in 0..vocab.len() {
            table.push(vec![fmt_f64(tau), vocab.name(i).to_string(), fmt_f64(p.get(j, i))])?;
        }
    }
    ctx.emit(&table, vec![format!("episodes: {}", tensor.episodes_seen())])
}

fn value(ctx: &Invocation, snapshot: &Path, probes: &[String], window: Option<[f64; 2]>) -> anyhow::Result<()> {
    let scenario = ctx.scenario()?;
    let tensor = ctx.load_snapshot(snapshot, Some(scenario.vocab()))?;
    let window = window
        .map(|[lo, hi]| TemporalWindow::rectangular(lo, hi))
        .transpose()?;
    let view = tensor.view(ctx.config.readout, ctx.config.axis, ctx.config.epsilon)?;
    let probes: Vec<String> = if probes.is_empty() {
        scenario.choice_labels().into_iter().map(String::from).collect()
    } else {
        probes.to_vec()
    };
    let mut table = Table::new(["probe", "cached_value", "windowed_value"]);
    for probe in &probes {
        let p = predict_state(view.as_ref(), probe)?;
        let cached = cached_value(&p, scenario.rewards())?;
        let windowed = match &window {
            Some(w) => fmt_f64(windowed_value(&p, scenario.rewards(), w)?),
            None => String::new(),
        };
        table.push(vec![probe.clone(), fmt_f64(cached), windowed])?;
    }
    ctx.emit(&table, Vec::new())
}

fn figures(ctx: &Invocation, ids: &[String]) -> anyhow::Result<()> {
    let ids: Vec<String> = if ids.is_empty() {
        FIGURES.iter().map(|s| s.to_string()).collect()
    } else {
        ids.to_vec()
    };
    if let Some(bad) = ids.iter().find(|id| !FIGURES.contains(&id.as_str())) {
        return Err(CliError::Usage(format!(
            "unknown figure `{bad}`; expected one of {}",
            FIGURES.join(", ")
        ))
        .into());
    }
    if ctx.config.scenario.is_some() {
        eprintln!("warning: --scenario is ignored; figures use their canonical scenarios");
    }
    let cfg = FigureConfig {
        grid: ctx.config.grid,
        episodes_per_choice: ctx.config.episodes_per_choice,
        seed: ctx.config.seed,
        strict: ctx.config.strict,
        readout: ctx.config.readout,
        axis: ctx.config.axis,
        epsilon: ctx.config.epsilon,
        workers: ctx.workers,
    };
    if let Some(dir) = ctx.out() {
        fs::create_dir_all(dir)?;
    }
    let mut failed = 0;
    let mut total = 0;
    for id in &ids {
        let result = reproduce_figure(id, &cfg)?;
        for w in &result.warnings {
            eprintln!("warning: {id}: {w}");
        }
        let mut extra = Vec::new();
        for c in &result.claims {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let line = format!("{tag} {id}: {} ({})", c.name, c.detail);
            println!("{line}");
            extra.push(format!("claim: {line}"));
            total += 1;
            if !c.passed {
                failed += 1;
            }
        }
        extra.extend(result.warnings.iter().map(|w| format!("warning: {w}")));
        if let Some(dir) = ctx.out() {
            let path = dir.join(format!("{id}.csv"));
            result
                .table
                .write(&path, &[vec![ctx.config.header_line()], extra].concat())
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    println!("{} of {total} claims passed", total - failed);
    if failed > 0 {
        return Err(CliError::Claims(failed).into());
    }
    Ok(())
}
