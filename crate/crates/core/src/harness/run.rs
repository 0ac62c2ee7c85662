use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ScenarioConfig, TrafficLevel};
use crate::domain::{compute_opex, CloudId, CloudKind, NetworkTopology, Scenario, Solution, TrafficTrace};
use crate::error::{Error, Result};
use crate::exact::{brute_force_tiny, build_milp, evaluate_objective, export_lp_file, EnumerationLimits};
use crate::heuristic::{run_baseline, run_heuristic};
use crate::supply::{read_pvwatts, synthetic_radiation, write_pvwatts, CityProfile};
use crate::traffic::{build_trace, make_ec_profiles, read_trace_csv, write_trace_csv};
use crate::validate::validate_solution;

/// Largest model (in assignment variables) re-checked with the MILP evaluator.
pub const MODEL_CHECK_LIMIT: usize = 200_000;

/// Relative tolerance between independently computed OpEx values.
pub const OPEX_REL_TOL: f64 = 1e-9;

pub enum MethodOutcome {
    Solved(Solution),
    Exported(PathBuf),
}

pub struct MethodContext<'a> {
    pub out_dir: Option<&'a Path>,
    /// Unique label of the run cell and day, usable in file names.
    pub label: &'a str,
}

/// A named strategy the harness can run on every scenario.
pub trait Method: Send + Sync {
    fn name(&self) -> &str;
    fn run(&self, scenario: &Scenario, ctx: &MethodContext) -> Result<MethodOutcome>;
}

struct Heuristic;
struct Baseline;
struct BruteForce(EnumerationLimits);
struct LpExport;

impl Method for Heuristic {
    fn name(&self) -> &str {
        "heuristic"
    }
    fn run(&self, scenario: &Scenario, _: &MethodContext) -> Result<MethodOutcome> {
        run_heuristic(scenario).map(MethodOutcome::Solved)
    }
}

impl Method for Baseline {
    fn name(&self) -> &str {
        "baseline"
    }
    fn run(&self, scenario: &Scenario, _: &MethodContext) -> Result<MethodOutcome> {
        run_baseline(scenario).map(MethodOutcome::Solved)
    }
}

impl Method for BruteForce {
    fn name(&self) -> &str {
        "brute-force"
    }
    fn run(&self, scenario: &Scenario, _: &MethodContext) -> Result<MethodOutcome> {
        brute_force_tiny(scenario, self.0).map(MethodOutcome::Solved)
    }
}

impl Method for LpExport {
    fn name(&self) -> &str {
        "lp-export"
    }
    fn run(&self, scenario: &Scenario, ctx: &MethodContext) -> Result<MethodOutcome> {
        let dir = ctx
            .out_dir
            .ok_or_else(|| Error::Config("lp-export needs an output directory".into()))?;
        let path = dir.join(format!("model_{}.lp", ctx.label));
        export_lp_file(&build_milp(scenario)?, &path)?;
        Ok(MethodOutcome::Exported(path))
    }
}

#[derive(Clone)]
pub struct MethodRegistry {
    methods: BTreeMap<String, Arc<dyn Method>>,
}

impl MethodRegistry {
    pub fn empty() -> Self {
        Self {
            methods: BTreeMap::new(),
        }
    }

    /// heuristic, baseline, brute-force and lp-export.
    pub fn standard() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(Heuristic));
        reg.register(Arc::new(Baseline));
        reg.register(Arc::new(BruteForce(EnumerationLimits::default())));
        reg.register(Arc::new(LpExport));
        reg
    }

    pub fn register(&mut self, method: Arc<dyn Method>) {
        self.methods.insert(method.name().to_string(), method);
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn Method>> {
        self.methods.get(name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.methods.keys().map(String::as_str).collect()
    }
}

/// One cloud's per-slot series for one method-day.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CloudDay {
    pub consumption: Vec<f64>,
    pub active: Vec<usize>,
    pub green: Vec<f64>,
    pub sold: Vec<f64>,
    pub battery: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodDay {
    pub opex: f64,
    /// Indexed by cloud id (CC first).
    pub clouds: Vec<CloudDay>,
    /// Human-readable failures of the independent checks; empty when valid.
    pub violations: Vec<String>,
    pub model_checked: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayReport {
    pub day: usize,
    pub methods: BTreeMap<String, MethodDay>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub city: String,
    pub level: TrafficLevel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub days: Vec<DayReport>,
    /// Sum of daily OpEx per method, accumulated in day order.
    pub totals: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    /// Solving methods in configuration order.
    pub methods: Vec<String>,
    pub cells: BTreeMap<CellKey, CellReport>,
    pub exports: Vec<PathBuf>,
}

impl RunReport {
    pub fn all_valid(&self) -> bool {
        self.violations().is_empty()
    }

    /// `(cell, day, method, message)` for every failed check.
    pub fn violations(&self) -> Vec<(CellKey, usize, String, String)> {
        let mut out = Vec::new();
        for (key, cell) in &self.cells {
            for day in &cell.days {
                for (m, md) in &day.methods {
                    for v in &md.violations {
                        out.push((key.clone(), day.day, m.clone(), v.clone()));
                    }
                }
            }
        }
        out
    }

    pub fn total(&self, city: &str, level: TrafficLevel, method: &str) -> Option<f64> {
        self.cells
            .get(&CellKey {
                city: city.to_string(),
                level,
            })
            .and_then(|c| c.totals.get(method).copied())
    }
}

/// Options that do not change results.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    /// Write the generated traffic traces and per-kW solar series so the
    /// run can be replayed with `replay_dir`.
    pub write_inputs: bool,
}

fn trace_file(dir: &Path, city: &str, level: TrafficLevel) -> PathBuf {
    dir.join(format!("trace_{city}_{level}.csv"))
}

fn pvwatts_file(dir: &Path, city: &str) -> PathBuf {
    dir.join(format!("pvwatts_{city}.csv"))
}

/// Hourly per-kW output from 1 January through the last configured day.
fn solar_per_kw(cfg: &ScenarioConfig, city: &str) -> Result<Vec<f64>> {
    let horizon = cfg.first_day + cfg.days;
    let file = match &cfg.replay_dir {
        Some(dir) => Some(pvwatts_file(dir, city)),
        None => cfg.solar.pvwatts.get(city).cloned(),
    };
    let values = match file {
        Some(path) => {
            let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
            read_pvwatts(f)?
        }
        None => {
            let profile = CityProfile::by_name(city)
                .filter(|_| cfg.solar.synthetic_fallback)
                .ok_or_else(|| Error::Config(format!("no solar data for city {city:?}")))?;
            (0..horizon).flat_map(|d| synthetic_radiation(&profile, d, cfg.seed)).collect()
        }
    };
    if values.len() < horizon * 24 {
        return Err(Error::Config(format!(
            "solar data for {city:?} covers {} days, run needs {horizon}",
            values.len() / 24
        )));
    }
    Ok(values)
}

fn cell_traffic(cfg: &ScenarioConfig, city: &str, level: TrafficLevel) -> Result<Vec<TrafficTrace>> {
    let topo = cfg.topology(level)?;
    let days = cfg.first_day..cfg.first_day + cfg.days;
    if let Some(dir) = &cfg.replay_dir {
        let path = trace_file(dir, city, level);
        let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let all = read_trace_csv(f, topo.user_count(), cfg.first_day * 24, cfg.days * 24)?;
        return Ok((0..cfg.days)
            .map(|k| TrafficTrace {
                load: all.load[k * 24..k * 24 + 24].to_vec(),
                delay: all.delay[k * 24..k * 24 + 24].to_vec(),
            })
            .collect());
    }
    let t = &cfg.traffic;
    let profiles = make_ec_profiles(cfg.seed, topo.ec_count, t.nu, t.noise_sigma, t.season);
    Ok(days
        .map(|d| build_trace(&topo, &profiles, d, cfg.seed, t.size_param, cfg.chain.len()))
        .collect())
}

fn generation_for(cfg: &ScenarioConfig, topo: &NetworkTopology, solar: &[f64], day: usize) -> Vec<Vec<f64>> {
    topo.clouds()
        .map(|c| {
            let p = if c.is_central() { &cfg.cc } else { &cfg.ec };
            solar[day * 24..day * 24 + 24]
                .iter()
                .map(|v| v * p.panel_kw * cfg.solar.scale)
                .collect()
        })
        .collect()
}

fn initial_carry(cfg: &ScenarioConfig, topo: &NetworkTopology) -> Vec<f64> {
    topo.clouds()
        .map(|c| {
            let p = if c.is_central() { &cfg.cc } else { &cfg.ec };
            cfg.initial_charge * p.battery_cap
        })
        .collect()
}

/// Scenario of one configured day, starting from the initial battery charge.
pub fn day_scenario(cfg: &ScenarioConfig, city: &str, level: TrafficLevel, day: usize) -> Result<Scenario> {
    cfg.validate()?;
    if !(cfg.first_day..cfg.first_day + cfg.days).contains(&day) {
        return Err(Error::Config(format!(
            "day {day} outside the configured range {}..{}",
            cfg.first_day,
            cfg.first_day + cfg.days
        )));
    }
    let topo = cfg.topology(level)?;
    let solar = solar_per_kw(cfg, city)?;
    let traffic = cell_traffic(cfg, city, level)?.swap_remove(day - cfg.first_day);
    let scenario = Scenario {
        chain: cfg.chain()?,
        generation: generation_for(cfg, &topo, &solar, day),
        carry: initial_carry(cfg, &topo),
        topology: topo,
        cc: cfg.cc.clone(),
        ec: cfg.ec.clone(),
        traffic,
        tariff: cfg.tariff.build()?,
    };
    scenario.validate()?;
    Ok(scenario)
}

fn check_solution(scenario: &Scenario, sol: &Solution) -> (Vec<String>, bool) {
    let mut problems: Vec<String> = validate_solution(scenario, sol).iter().map(|v| v.to_string()).collect();
    let recomputed = scenario
        .consumption_of(&sol.placement)
        .and_then(|c| compute_opex(&c, &sol.energy, &scenario.tariff));
    match recomputed {
        Ok(v) if (v - sol.opex).abs() <= OPEX_REL_TOL * v.abs().max(1.0) => {}
        Ok(v) => problems.push(format!("reported OpEx {} differs from recomputed {v}", sol.opex)),
        Err(e) => problems.push(format!("OpEx recomputation failed: {e}")),
    }
    let topo = &scenario.topology;
    let assign_vars = scenario.slots()
        * topo.user_count()
        * (topo.du_count_cc + topo.du_count_ec)
        * scenario.chain.len();
    if assign_vars > MODEL_CHECK_LIMIT {
        return (problems, false);
    }
    match build_milp(scenario).and_then(|m| evaluate_objective(&m, sol)) {
        Ok(eval) => {
            problems.extend(eval.residuals.iter().map(|r| format!("model row {} off by {}", r.name, r.excess)));
            if (eval.objective - sol.opex).abs() > OPEX_REL_TOL * sol.opex.abs().max(1.0) {
                problems.push(format!("model objective {} differs from OpEx {}", eval.objective, sol.opex));
            }
        }
        Err(e) => problems.push(format!("model evaluation failed: {e}")),
    }
    (problems, true)
}

fn method_day(scenario: &Scenario, sol: &Solution) -> MethodDay {
    let (violations, model_checked) = check_solution(scenario, sol);
    let clouds = scenario
        .topology
        .clouds()
        .map(|c| {
            let sched = sol.energy.cloud(c);
            let active: Vec<usize> = (0..scenario.slots()).map(|t| sol.placement.active_count(t, c)).collect();
            let p = scenario.params(c);
            CloudDay {
                consumption: active.iter().map(|&n| p.static_power + n as f64 * p.per_du_power).collect(),
                active,
                green: sched.green.clone(),
                sold: sched.sold.clone(),
                battery: sched.battery.clone(),
            }
        })
        .collect();
    MethodDay {
        opex: sol.opex,
        clouds,
        violations,
        model_checked,
    }
}

struct CellOutput {
    report: CellReport,
    exports: Vec<PathBuf>,
}

fn run_cell(
    cfg: &ScenarioConfig,
    registry: &MethodRegistry,
    opts: &RunOptions,
    city: &str,
    level: TrafficLevel,
    solar: &[f64],
) -> Result<CellOutput> {
    let topo = cfg.topology(level)?;
    let chain = cfg.chain()?;
    let tariff = cfg.tariff.build()?;
    let traces = cell_traffic(cfg, city, level)?;
    if opts.write_inputs {
        let dir = opts
            .out_dir
            .as_deref()
            .ok_or_else(|| Error::Config("writing inputs needs an output directory".into()))?;
        let path = trace_file(dir, city, level);
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(f));
        for (k, trace) in traces.iter().enumerate() {
            write_trace_csv(trace, (cfg.first_day + k) * 24, &mut w)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    let initial = initial_carry(cfg, &topo);
    let mut carry: BTreeMap<&str, Vec<f64>> = cfg.methods.iter().map(|m| (m.as_str(), initial.clone())).collect();
    let mut report = CellReport {
        days: Vec::with_capacity(cfg.days),
        totals: BTreeMap::new(),
    };
    let mut exports = Vec::new();
    for (k, traffic) in traces.into_iter().enumerate() {
        let day = cfg.first_day + k;
        let generation = generation_for(cfg, &topo, solar, day);
        let mut day_report = DayReport {
            day,
            methods: BTreeMap::new(),
        };
        for name in &cfg.methods {
            let method = registry
                .get(name)
                .ok_or_else(|| Error::Config(format!("unknown method {name:?}; known: {:?}", registry.names())))?;
            let scenario = Scenario {
                chain: chain.clone(),
                topology: topo.clone(),
                cc: cfg.cc.clone(),
                ec: cfg.ec.clone(),
                traffic: traffic.clone(),
                generation: generation.clone(),
                tariff: tariff.clone(),
                carry: carry[name.as_str()].clone(),
            };
            let label = format!("{city}_{level}_d{day}_{name}");
            let ctx = MethodContext {
                out_dir: opts.out_dir.as_deref(),
                label: &label,
            };
            match method.run(&scenario, &ctx)? {
                MethodOutcome::Solved(sol) => {
                    if cfg.carry_battery {
                        let next = sol.energy.clouds.iter().map(|s| s.battery.last().copied().unwrap_or(s.carry));
                        carry.insert(name.as_str(), next.collect());
                    }
                    *report.totals.entry(name.clone()).or_insert(0.0) += sol.opex;
                    day_report.methods.insert(name.clone(), method_day(&scenario, &sol));
                }
                MethodOutcome::Exported(path) => exports.push(path),
            }
        }
        report.days.push(day_report);
    }
    Ok(CellOutput { report, exports })
}

/// Run every (city, traffic level) cell of the configuration. Cells run in
/// parallel; days within a cell run in order so batteries carry over.
pub fn run_scenario(cfg: &ScenarioConfig, registry: &MethodRegistry, opts: &RunOptions) -> Result<RunReport> {
    cfg.validate()?;
    for name in &cfg.methods {
        if registry.get(name).is_none() {
            return Err(Error::Config(format!("unknown method {name:?}; known: {:?}", registry.names())));
        }
    }
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut solar = BTreeMap::new();
    for city in &cfg.cities {
        let values = solar_per_kw(cfg, city)?;
        if opts.write_inputs {
            let dir = opts
                .out_dir
                .as_deref()
                .ok_or_else(|| Error::Config("writing inputs needs an output directory".into()))?;
            let path = pvwatts_file(dir, city);
            let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_pvwatts(&values[..(cfg.first_day + cfg.days) * 24], 0, BufWriter::new(f))?;
        }
        solar.insert(city.clone(), values);
    }
    let cells: Vec<(String, TrafficLevel)> = cfg
        .cities
        .iter()
        .flat_map(|c| cfg.traffic_levels.iter().map(move |l| (c.clone(), *l)))
        .collect();
    let outputs: Vec<(CellKey, CellOutput)> = cells
        .par_iter()
        .map(|(city, level)| {
            run_cell(cfg, registry, opts, city, *level, &solar[city]).map(|out| {
                (
                    CellKey {
                        city: city.clone(),
                        level: *level,
                    },
                    out,
                )
            })
        })
        .collect::<Result<_>>()?;
    let mut report = RunReport {
        methods: cfg
            .methods
            .iter()
            .filter(|m| m.as_str() != "lp-export")
            .cloned()
            .collect(),
        ..RunReport::default()
    };
    for (key, out) in outputs {
        report.exports.extend(out.exports);
        report.cells.insert(key, out.report);
    }
    report.exports.sort();
    Ok(report)
}

#[derive(Serialize)]
struct OpexRow<'a> {
    city: &'a str,
    traffic: &'a str,
    method: &'a str,
    day: usize,
    opex: f64,
}

#[derive(Serialize)]
struct SlotRow<'a> {
    city: &'a str,
    traffic: &'a str,
    method: &'a str,
    day: usize,
    slot: usize,
    cloud: String,
    consumption: f64,
    active: usize,
    green: f64,
    sold: f64,
    battery: f64,
}

/// Write `opex.csv` (per method-day) and `slots.csv` (per cloud-slot).
pub fn write_report(report: &RunReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let open = |name: &str| -> Result<csv::Writer<BufWriter<File>>> {
        let path = dir.join(name);
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(csv::Writer::from_writer(BufWriter::new(f)))
    };
    let mut opex = open("opex.csv")?;
    let mut slots = open("slots.csv")?;
    for (key, cell) in &report.cells {
        for day in &cell.days {
            for (method, md) in &day.methods {
                opex.serialize(OpexRow {
                    city: &key.city,
                    traffic: key.level.name(),
                    method,
                    day: day.day,
                    opex: md.opex,
                })?;
                for (c, cd) in md.clouds.iter().enumerate() {
                    for t in 0..cd.active.len() {
                        slots.serialize(SlotRow {
                            city: &key.city,
                            traffic: key.level.name(),
                            method,
                            day: day.day,
                            slot: t,
                            cloud: CloudId(c).to_string(),
                            consumption: cd.consumption[t],
                            active: cd.active[t],
                            green: cd.green[t],
                            sold: cd.sold[t],
                            battery: cd.battery[t],
                        })?;
                    }
                }
            }
        }
    }
    opex.flush().map_err(|e| Error::io(dir, e))?;
    slots.flush().map_err(|e| Error::io(dir, e))?;
    Ok(())
}

/// Kind of the cloud stored at index `c` of a [`MethodDay`].
pub fn kind_of(c: usize) -> CloudKind {
    CloudId(c).kind()
}
