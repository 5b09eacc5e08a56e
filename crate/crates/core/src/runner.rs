//! Run orchestration and output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{DtauSpec, Outputs, ParsedConfig, SimConfig, SweepParam};
use crate::error::{Error, Result};
use crate::evolution::{evolve, field_at, Schedule, Trajectory, STEP_NORM_LIMIT};
use crate::init::{project_initial, ModeState, Projection, ProjectionOptions};
use crate::observables::{energy_terms, Convention, ObservableRecord};
use crate::pde::pde_oracle_from;

pub const TABLE_HEADER: &str = "t,tau,L,norm,energy,mean_y,mean_x,force,force_fd";
pub const SNAPSHOT_HEADER: &str = "x,re1,im1,re2,im2";

/// Tolerances checked by [`validate`] and reported in the manifest.
pub mod tolerances {
    pub const TOTAL_NORM: f64 = 1e-10;
    pub const PAIR_NORM: f64 = 1e-12;
    pub const MASSLESS_MODE_ENERGY: f64 = 1e-10;
    pub const FORCE_IDENTITY: f64 = 1e-4;
    /// `|L̇|` below which the force identity is not tested.
    pub const FORCE_RATE_FLOOR: f64 = 0.05;
    pub const TIME_REVERSAL: f64 = 1e-9;
    pub const ORACLE_ENERGY: f64 = 1e-3;
}

/// Projects the initial packet and evolves it.
pub fn simulate(cfg: &SimConfig) -> Result<(Projection, Trajectory)> {
    let opts = ProjectionOptions { renormalize: cfg.renormalize_initial, ..Default::default() };
    let projection = project_initial(&cfg.packet, &cfg.wall, cfg.n_max, &opts)?;
    let trajectory = evolve(&projection.state, cfg)?;
    Ok((projection, trajectory))
}

fn num(v: f64) -> String {
    format!("{v:.11e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Observable table; deselected outputs leave their columns empty.
pub fn format_table(records: &[ObservableRecord], outputs: &Outputs) -> String {
    let mut out = String::with_capacity(160 * (records.len() + 1));
    out.push_str(TABLE_HEADER);
    out.push('\n');
    for r in records {
        let on = |flag: bool, v: f64| if flag { num(v) } else { String::new() };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            num(r.t),
            num(r.tau),
            num(r.length),
            on(outputs.norm, r.norm),
            on(outputs.energy, r.energy),
            if outputs.position { opt(r.mean_y) } else { String::new() },
            if outputs.position { opt(r.mean_x) } else { String::new() },
            on(outputs.force, r.force),
            if outputs.force { opt(r.force_fd) } else { String::new() },
        );
    }
    out
}

/// Wavefunction samples at `points` equally spaced positions in `[0, L]`.
pub fn format_snapshot(state: &ModeState, length: f64, points: usize) -> String {
    let mut out = String::from(SNAPSHOT_HEADER);
    out.push('\n');
    let points = points.max(2);
    for i in 0..points {
        let x = length * i as f64 / (points - 1) as f64;
        let ([u, v], _) = field_at(state, length, x);
        let _ = writeln!(out, "{},{},{},{},{}", num(x), num(u.re), num(u.im), num(v.re), num(v.im));
    }
    out
}

/// Largest `|E_s − E_p| / |E_s|` over matching records.
pub fn relative_energy_discrepancy(a: &[ObservableRecord], b: &[ObservableRecord]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.energy - y.energy).abs() / x.energy.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// `max |F − F_fd| / max |F|` over records with `|L̇| > floor`; `None` if no
/// record qualifies.
pub fn force_identity_error(records: &[ObservableRecord], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.length_rate.abs() > floor)
        .filter_map(|r| r.force_fd.map(|fd| (r.force, fd)))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let scale = pts.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    let err = pts.iter().map(|p| (p.0 - p.1).abs()).fold(0.0, f64::max);
    Some(err / scale.max(f64::MIN_POSITIVE))
}

/// What a single run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub projection: Projection,
    pub trajectory: Trajectory,
    pub oracle_discrepancy: Option<f64>,
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn manifest(parsed: &ParsedConfig, summary: &RunSummary) -> Result<String> {
    let cfg = &parsed.config;
    let mut doc = toml::Table::new();
    let mut run = toml::Table::new();
    run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    run.insert("steps".into(), (summary.trajectory.steps as i64).into());
    run.insert("dtau".into(), summary.trajectory.dtau.into());
    run.insert("records".into(), (summary.trajectory.records.len() as i64).into());
    run.insert(
        "defaults_applied".into(),
        toml::Value::Array(parsed.defaults_applied.iter().map(|s| s.clone().into()).collect()),
    );
    doc.insert("run".into(), run.into());

    let p = &summary.projection;
    let mut init = toml::Table::new();
    init.insert("residual".into(), p.residual.into());
    init.insert("renormalized".into(), p.renormalized.into());
    init.insert("tail_mass".into(), p.tail_mass.into());
    init.insert("warnings".into(), toml::Value::Array(p.warnings.iter().map(|s| s.clone().into()).collect()));
    doc.insert("initial".into(), init.into());

    let mut inv = toml::Table::new();
    inv.insert("max_pair_drift".into(), summary.trajectory.max_pair_drift.into());
    inv.insert("max_norm_drift".into(), summary.trajectory.max_norm_drift.into());
    inv.insert("pair_norm_tolerance".into(), tolerances::PAIR_NORM.into());
    inv.insert("step_norm_limit".into(), STEP_NORM_LIMIT.into());
    inv.insert("total_norm_tolerance".into(), tolerances::TOTAL_NORM.into());
    if let Some(e) = force_identity_error(&summary.trajectory.records, tolerances::FORCE_RATE_FLOOR) {
        if cfg.force_convention == Convention::Corrected {
            inv.insert("force_identity_error".into(), e.into());
            inv.insert("force_identity_tolerance".into(), tolerances::FORCE_IDENTITY.into());
        }
    }
    doc.insert("invariants".into(), inv.into());

    if let Some(d) = summary.oracle_discrepancy {
        let mut o = toml::Table::new();
        o.insert("max_relative_energy_discrepancy".into(), d.into());
        o.insert("tolerance".into(), tolerances::ORACLE_ENERGY.into());
        doc.insert("oracle".into(), o.into());
    }

    let resolved: toml::Table = toml::from_str(&cfg.to_toml()).map_err(|e| Error::Config(e.to_string()))?;
    doc.insert("config".into(), resolved.into());
    toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))
}

/// Runs one configuration and writes `manifest.toml`, `observables.csv`,
/// optional `oracle.csv` and `snapshot_NNNNN.csv` files into `out_dir`.
pub fn run(parsed: &ParsedConfig, out_dir: &Path) -> Result<RunSummary> {
    let cfg = &parsed.config;
    fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    let (projection, trajectory) = simulate(cfg)?;
    write(&out_dir.join("observables.csv"), &format_table(&trajectory.records, &cfg.outputs))?;

    let oracle_discrepancy = if cfg.oracle.enabled {
        let oracle = pde_oracle_from(&projection.state, cfg)?;
        write(&out_dir.join("oracle.csv"), &format_table(&oracle.records, &cfg.outputs))?;
        Some(relative_energy_discrepancy(&trajectory.records, &oracle.records))
    } else {
        None
    };

    for (index, state) in &trajectory.snapshots {
        let length = trajectory.records[*index].length;
        write(
            &out_dir.join(format!("snapshot_{index:05}.csv")),
            &format_snapshot(state, length, cfg.snapshot_points),
        )?;
    }

    let summary = RunSummary { out_dir: out_dir.to_path_buf(), projection, trajectory, oracle_discrepancy };
    write(&out_dir.join("manifest.toml"), &manifest(parsed, &summary)?)?;
    Ok(summary)
}

/// One sweep entry.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub value: f64,
    pub dir: PathBuf,
    pub records: Vec<ObservableRecord>,
}

/// `max |ΔE(t)|` between consecutive `n_max` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStep {
    pub coarse: usize,
    pub fine: usize,
    pub max_abs_delta_energy: f64,
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub entries: Vec<SweepEntry>,
    pub convergence: Vec<ConvergenceStep>,
}

/// Runs `base` once per value of `param`, each into its own subdirectory,
/// and writes `index.toml` (plus `convergence.csv` for `n_max`).
pub fn sweep(parsed: &ParsedConfig, param: SweepParam, values: &[f64], out_dir: &Path) -> Result<SweepSummary> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    let mut base = parsed.config.clone();
    if param == SweepParam::NMax && base.dtau == DtauSpec::Auto {
        // Shared step so the record grids of all levels coincide.
        let finest = values.iter().cloned().fold(f64::MIN, f64::max);
        let fine = base.with_param(SweepParam::NMax, finest)?;
        base.dtau = DtauSpec::Fixed(fine.tau_grid()?.1);
    }
    let configs = values.iter().map(|&v| base.with_param(param, v)).collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;

    let entries = configs
        .into_par_iter()
        .enumerate()
        .map(|(i, config)| {
            let dir = out_dir.join(format!("{}_{i:03}", param.name()));
            let entry = ParsedConfig { config, defaults_applied: parsed.defaults_applied.clone() };
            let summary = run(&entry, &dir)?;
            Ok(SweepEntry { value: values[i], dir, records: summary.trajectory.records })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut convergence = Vec::new();
    if param == SweepParam::NMax {
        for pair in entries.windows(2) {
            let delta = pair[0]
                .records
                .iter()
                .zip(&pair[1].records)
                .map(|(a, b)| (a.energy - b.energy).abs())
                .fold(0.0, f64::max);
            convergence.push(ConvergenceStep {
                coarse: pair[0].value as usize,
                fine: pair[1].value as usize,
                max_abs_delta_energy: delta,
            });
        }
        let mut csv = String::from("n_max_coarse,n_max_fine,max_abs_delta_energy\n");
        for c in &convergence {
            let _ = writeln!(csv, "{},{},{}", c.coarse, c.fine, num(c.max_abs_delta_energy));
        }
        write(&out_dir.join("convergence.csv"), &csv)?;
    }

    let mut index = toml::Table::new();
    index.insert("parameter".into(), param.name().into());
    let list = entries
        .iter()
        .map(|e| {
            let mut t = toml::Table::new();
            t.insert("value".into(), e.value.into());
            let name = e.dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            t.insert("dir".into(), name.into());
            t.into()
        })
        .collect();
    index.insert("entries".into(), toml::Value::Array(list));
    if !convergence.is_empty() {
        let list = convergence
            .iter()
            .map(|c| {
                let mut t = toml::Table::new();
                t.insert("coarse".into(), (c.coarse as i64).into());
                t.insert("fine".into(), (c.fine as i64).into());
                t.insert("max_abs_delta_energy".into(), c.max_abs_delta_energy.into());
                t.into()
            })
            .collect();
        index.insert("convergence".into(), toml::Value::Array(list));
    }
    let text = toml::to_string(&index).map_err(|e| Error::Config(e.to_string()))?;
    write(&out_dir.join("index.toml"), &text)?;
    Ok(SweepSummary { entries, convergence })
}

/// One line of a validation report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {:.3e} (limit {:.1e})", self.name, self.value, self.limit)
    }
}

fn check(name: &'static str, value: f64, limit: f64) -> Check {
    Check { name, value, limit, passed: value <= limit }
}

/// Runs the invariant checks (and the oracle when enabled) without writing
/// any tables.
pub fn validate(cfg: &SimConfig) -> Result<Vec<Check>> {
    let (projection, traj) = simulate(cfg)?;
    let mut checks = vec![
        check("pair norm drift", traj.max_pair_drift, tolerances::PAIR_NORM),
        check("total norm drift", traj.max_norm_drift, tolerances::TOTAL_NORM),
    ];

    let bound = std::f64::consts::PI * cfg.n_max as f64 / cfg.wall.min_length() + cfg.mass.abs();
    let e_max = traj.records.iter().map(|r| r.energy).fold(f64::MIN, f64::max);
    checks.push(Check { name: "energy bound", value: e_max, limit: bound, passed: e_max <= bound });

    if cfg.mass == 0.0 {
        let l0 = cfg.wall.length(0.0)?;
        let l1 = traj.records.last().map(|r| r.length).unwrap_or(l0);
        let before = energy_terms(&projection.state, 0.0, l0);
        let after = energy_terms(&traj.final_state, 0.0, l1);
        let dev = before.iter().zip(&after).map(|(a, b)| (a * l0 - b * l1).abs()).fold(0.0, f64::max);
        checks.push(check("massless E_n L constancy", dev, tolerances::MASSLESS_MODE_ENERGY));
    }

    if cfg.force_convention == Convention::Corrected {
        if let Some(err) = force_identity_error(&traj.records, tolerances::FORCE_RATE_FLOOR) {
            checks.push(check("force-energy identity", err, tolerances::FORCE_IDENTITY));
        }
    }

    let sched = Schedule::new(cfg)?;
    let mut s = projection.state.clone();
    sched.advance(&mut s, 0, sched.steps());
    sched.advance(&mut s, sched.steps(), 0);
    checks.push(check("time reversal", s.max_abs_diff(&projection.state), tolerances::TIME_REVERSAL));

    if cfg.oracle.enabled {
        let oracle = pde_oracle_from(&projection.state, cfg)?;
        let d = relative_energy_discrepancy(&traj.records, &oracle.records);
        checks.push(check("oracle energy discrepancy", d, tolerances::ORACLE_ENERGY));
    }
    Ok(checks)
}
