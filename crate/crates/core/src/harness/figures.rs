use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::run::{CellKey, RunReport};
use crate::domain::CloudKind;
use crate::error::{Error, Result};
use crate::traffic::Season;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FigureId {
    /// OpEx per city, traffic level and method.
    Fig5,
    /// Mean battery level per slot and cloud kind.
    Fig6,
    /// Mean active DUs per slot and cloud kind.
    Fig7,
    /// Daily renewable consumption.
    Fig8,
    /// Sold energy per season.
    Fig9,
}

impl FigureId {
    pub const ALL: [FigureId; 5] = [FigureId::Fig5, FigureId::Fig6, FigureId::Fig7, FigureId::Fig8, FigureId::Fig9];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::Fig7 => "fig7",
            FigureId::Fig8 => "fig8",
            FigureId::Fig9 => "fig9",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Report(format!("unknown figure {s:?}; expected fig5..fig9")))
    }
}

/// Green energy used and energy sold, Wh, per season in `Season::ALL` order.
pub fn seasonal_energy(report: &RunReport, key: &CellKey, method: &str) -> Result<[(f64, f64); 4]> {
    let cell = report
        .cells
        .get(key)
        .ok_or_else(|| Error::Report(format!("no cell {} {}", key.city, key.level)))?;
    let mut out = [(0.0, 0.0); 4];
    for day in &cell.days {
        let md = day
            .methods
            .get(method)
            .ok_or_else(|| Error::Report(format!("method {method} missing on day {}", day.day)))?;
        let k = Season::ALL
            .iter()
            .position(|s| *s == Season::of_day(day.day))
            .expect("every day has a season");
        for cd in &md.clouds {
            out[k].0 += cd.green.iter().sum::<f64>();
            out[k].1 += cd.sold.iter().sum::<f64>();
        }
    }
    Ok(out)
}

fn require_series(report: &RunReport, fig: FigureId) -> Result<()> {
    if report.methods.is_empty() || report.cells.is_empty() {
        return Err(Error::Report(format!("{fig} needs at least one solving method and one run cell")));
    }
    for (key, cell) in &report.cells {
        for day in &cell.days {
            for m in &report.methods {
                if !day.methods.contains_key(m) {
                    return Err(Error::Report(format!(
                        "{fig}: method {m} has no data for {} {} day {}",
                        key.city, key.level, day.day
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Mean over days and cells of a per-slot statistic summed over one cloud
/// kind; `per_cloud_mean` divides the EC sum by the number of ECs.
fn per_slot_table(report: &RunReport, value: impl Fn(usize, &super::run::CloudDay) -> f64, per_cloud_mean: bool) -> Vec<Vec<f64>> {
    let slots = report
        .cells
        .values()
        .flat_map(|c| c.days.first())
        .flat_map(|d| d.methods.values().next())
        .map(|md| md.clouds[0].active.len())
        .max()
        .unwrap_or(0);
    let mut rows = vec![Vec::new(); slots];
    for m in &report.methods {
        for kind in [CloudKind::Central, CloudKind::Edge] {
            let mut sums = vec![0.0; slots];
            let mut samples = 0usize;
            for cell in report.cells.values() {
                for day in &cell.days {
                    let md = &day.methods[m];
                    let clouds: Vec<_> = md
                        .clouds
                        .iter()
                        .enumerate()
                        .filter(|(c, _)| super::run::kind_of(*c) == kind)
                        .collect();
                    let div = if per_cloud_mean { clouds.len().max(1) as f64 } else { 1.0 };
                    for (t, sum) in sums.iter_mut().enumerate() {
                        *sum += clouds.iter().map(|(_, cd)| value(t, cd)).sum::<f64>() / div;
                    }
                    samples += 1;
                }
            }
            for (t, row) in rows.iter_mut().enumerate() {
                row.push(sums[t] / samples.max(1) as f64);
            }
        }
    }
    rows
}

fn kind_header(report: &RunReport) -> Vec<String> {
    let mut header = vec!["slot".to_string()];
    for m in &report.methods {
        header.push(format!("{m}_cc"));
        header.push(format!("{m}_ec"));
    }
    header
}

/// CSV text of one figure's data.
pub fn emit_figure_data(report: &RunReport, fig: FigureId) -> Result<String> {
    require_series(report, fig)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    match fig {
        FigureId::Fig5 => {
            w.write_record(["city", "traffic", "method", "opex"])?;
            for (key, cell) in &report.cells {
                for m in &report.methods {
                    let total = cell.totals.get(m).copied().unwrap_or(0.0);
                    w.write_record([key.city.clone(), key.level.to_string(), m.clone(), total.to_string()])?;
                }
            }
        }
        FigureId::Fig6 | FigureId::Fig7 => {
            w.write_record(kind_header(report))?;
            let rows = if fig == FigureId::Fig6 {
                per_slot_table(report, |t, cd| cd.battery[t], true)
            } else {
                per_slot_table(report, |t, cd| cd.active[t] as f64, false)
            };
            for (t, row) in rows.iter().enumerate() {
                let mut rec = vec![t.to_string()];
                rec.extend(row.iter().map(f64::to_string));
                w.write_record(rec)?;
            }
        }
        FigureId::Fig8 => {
            w.write_record(["city", "traffic", "method", "day", "renewable_wh"])?;
            for (key, cell) in &report.cells {
                for m in &report.methods {
                    for day in &cell.days {
                        let green: f64 = day.methods[m].clouds.iter().flat_map(|c| &c.green).sum();
                        w.write_record([
                            key.city.clone(),
                            key.level.to_string(),
                            m.clone(),
                            day.day.to_string(),
                            green.to_string(),
                        ])?;
                    }
                }
            }
        }
        FigureId::Fig9 => {
            w.write_record(["city", "traffic", "method", "season", "sold_wh"])?;
            for key in report.cells.keys() {
                for m in &report.methods {
                    let seasons = seasonal_energy(report, key, m)?;
                    for (s, (_, sold)) in Season::ALL.iter().zip(seasons) {
                        w.write_record([
                            key.city.clone(),
                            key.level.to_string(),
                            m.clone(),
                            s.name().to_string(),
                            sold.to_string(),
                        ])?;
                    }
                }
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

/// Write `<fig>.csv` into `dir` and return its path.
pub fn write_figure(report: &RunReport, fig: FigureId, dir: &Path) -> Result<PathBuf> {
    let text = emit_figure_data(report, fig)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!("{fig}.csv"));
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_names_parse_back() {
        for f in FigureId::ALL {
            assert_eq!(f.name().parse::<FigureId>().unwrap(), f);
        }
        assert!("fig4".parse::<FigureId>().is_err());
    }

    #[test]
    fn empty_reports_are_rejected() {
        let report = RunReport {
            methods: vec!["heuristic".into()],
            ..RunReport::default()
        };
        for f in FigureId::ALL {
            assert!(emit_figure_data(&report, f).is_err());
        }
    }
}
