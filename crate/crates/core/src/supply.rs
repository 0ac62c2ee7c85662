//! Solar generation series (ingested or synthetic) and time-of-use tariffs.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Tariff;
use crate::error::{Error, Result};
use crate::seed::substream;

const MONTH_DAYS: [u32; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

/// Harvested energy of one panel, Wh per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationSeries {
    pub per_slot: Vec<f64>,
    pub source: String,
    pub panel_kw: f64,
}

impl GenerationSeries {
    pub fn from_per_kw(per_kw: &[f64], panel_kw: f64, source: impl Into<String>) -> Self {
        Self {
            per_slot: per_kw.iter().map(|v| v * panel_kw).collect(),
            source: source.into(),
            panel_kw,
        }
    }

    /// Slots `day * 24 .. day * 24 + 24`.
    pub fn day(&self, day: usize) -> Option<&[f64]> {
        self.per_slot.get(day * 24..day * 24 + 24)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PvRow {
    month: u32,
    day: u32,
    hour: u32,
    ac_output_wh_per_kw: f64,
}

fn next_hour(month: u32, day: u32, hour: u32) -> (u32, u32, u32) {
    if hour < 23 {
        (month, day, hour + 1)
    } else if day < MONTH_DAYS[(month - 1) as usize] {
        (month, day + 1, 0)
    } else if month < 12 {
        (month + 1, 1, 0)
    } else {
        (1, 1, 0)
    }
}

/// Parse hourly per-kW output (`month,day,hour,ac_output_wh_per_kw`).
///
/// Rows must advance one hour at a time from the first row and cover whole
/// days; the first missing hour is reported with its row index.
pub fn read_pvwatts<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut values = Vec::new();
    let mut expected: Option<(u32, u32, u32)> = None;
    for (row_idx, row) in rdr.deserialize::<PvRow>().enumerate() {
        let row = row?;
        if !(1..=12).contains(&row.month)
            || row.day == 0
            || row.day > MONTH_DAYS[(row.month - 1) as usize]
            || row.hour > 23
        {
            return Err(Error::Data {
                row: row_idx,
                message: format!("invalid timestamp {}/{} {}h", row.month, row.day, row.hour),
            });
        }
        if let Some((m, d, h)) = expected {
            if (row.month, row.day, row.hour) != (m, d, h) {
                return Err(Error::Gap {
                    row: row_idx,
                    month: m,
                    day: d,
                    hour: h,
                });
            }
        } else if row.hour != 0 {
            return Err(Error::Gap {
                row: row_idx,
                month: row.month,
                day: row.day,
                hour: 0,
            });
        }
        if !(row.ac_output_wh_per_kw >= 0.0) {
            return Err(Error::Data {
                row: row_idx,
                message: format!("negative output {}", row.ac_output_wh_per_kw),
            });
        }
        values.push(row.ac_output_wh_per_kw);
        expected = Some(next_hour(row.month, row.day, row.hour));
    }
    if values.len() % 24 != 0 {
        let (month, day, hour) = expected.unwrap_or((1, 1, 0));
        return Err(Error::Gap {
            row: values.len(),
            month,
            day,
            hour,
        });
    }
    Ok(values)
}

pub fn ingest_pvwatts_csv(path: &Path, panel_kw: f64) -> Result<GenerationSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let per_kw = read_pvwatts(file)?;
    Ok(GenerationSeries::from_per_kw(
        &per_kw,
        panel_kw,
        path.display().to_string(),
    ))
}

/// Write per-kW hourly values starting at 1 January 00:00 plus `first_day`.
pub fn write_pvwatts<W: Write>(per_kw: &[f64], first_day: usize, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let (mut month, mut day) = (1u32, 1u32);
    for _ in 0..first_day % 365 {
        let (m, d, _) = next_hour(month, day, 23);
        month = m;
        day = d;
    }
    let mut hour = 0;
    for &v in per_kw {
        wtr.serialize(PvRow {
            month,
            day,
            hour,
            ac_output_wh_per_kw: v,
        })?;
        (month, day, hour) = next_hour(month, day, hour);
    }
    wtr.flush().map_err(|e| Error::io("<pvwatts writer>", e))?;
    Ok(())
}

/// Climate class of a synthetic solar site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityProfile {
    pub name: String,
    /// Mean daily yield, Wh per kW of panel.
    pub mean_daily_wh_per_kw: f64,
    /// Relative amplitude of the annual cycle of daily yield.
    pub annual_amplitude: f64,
    /// Mean daylight duration, hours.
    pub mean_daylight_h: f64,
    /// Half the summer/winter daylight difference, hours.
    pub daylight_swing_h: f64,
}

impl CityProfile {
    pub fn stockholm() -> Self {
        Self {
            name: "stockholm".into(),
            mean_daily_wh_per_kw: 2600.0,
            annual_amplitude: 0.75,
            mean_daylight_h: 12.3,
            daylight_swing_h: 6.2,
        }
    }

    pub fn istanbul() -> Self {
        Self {
            name: "istanbul".into(),
            mean_daily_wh_per_kw: 3900.0,
            annual_amplitude: 0.45,
            mean_daylight_h: 12.2,
            daylight_swing_h: 2.9,
        }
    }

    pub fn jakarta() -> Self {
        Self {
            name: "jakarta".into(),
            mean_daily_wh_per_kw: 4300.0,
            annual_amplitude: 0.08,
            mean_daylight_h: 12.1,
            daylight_swing_h: 0.3,
        }
    }

    /// Placeholder mid-latitude site.
    pub fn temperate() -> Self {
        Self {
            name: "temperate".into(),
            mean_daily_wh_per_kw: 3400.0,
            annual_amplitude: 0.55,
            mean_daylight_h: 12.2,
            daylight_swing_h: 4.0,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "stockholm" => Some(Self::stockholm()),
            "istanbul" => Some(Self::istanbul()),
            "jakarta" => Some(Self::jakarta()),
            "temperate" => Some(Self::temperate()),
            _ => None,
        }
    }

    /// Clear-sky daily yield, Wh/kW, peaking at the June solstice (day 172).
    pub fn daily_total(&self, day_of_year: usize) -> f64 {
        let phase = 2.0 * PI * (day_of_year as f64 - 172.0) / 365.0;
        self.mean_daily_wh_per_kw * (1.0 + self.annual_amplitude * phase.cos())
    }

    pub fn daylight_hours(&self, day_of_year: usize) -> f64 {
        let phase = 2.0 * PI * (day_of_year as f64 - 172.0) / 365.0;
        (self.mean_daylight_h + self.daylight_swing_h * phase.cos()).clamp(2.0, 20.0)
    }
}

/// Lowest weather factor applied to a day's clear-sky yield.
const MIN_WEATHER: f64 = 0.85;

/// Solar noon, hours after midnight.
const SOLAR_NOON: f64 = 12.5;

/// 24 hourly Wh-per-kW values: a half-sine over the daylight window scaled
/// to the day's yield times a seeded weather factor in `[0.85, 1]`.
pub fn synthetic_radiation(city: &CityProfile, day_of_year: usize, seed: u64) -> Vec<f64> {
    let day = day_of_year % 365;
    let mut rng = substream(seed, "weather", &[day as u64]);
    let weather: f64 = rng.random_range(MIN_WEATHER..=1.0);
    let len = city.daylight_hours(day);
    let sunrise = SOLAR_NOON - len / 2.0;
    // integrate the half-sine over each hour exactly
    let shape: Vec<f64> = (0..24)
        .map(|h| {
            let a = (h as f64 - sunrise).clamp(0.0, len);
            let b = (h as f64 + 1.0 - sunrise).clamp(0.0, len);
            (len / PI) * ((PI * a / len).cos() - (PI * b / len).cos())
        })
        .collect();
    let total: f64 = shape.iter().sum();
    let target = city.daily_total(day) * weather;
    shape.into_iter().map(|v| v / total * target).collect()
}

/// Step tariff from `(start_hour, end_hour, price)` tiers; a tier with
/// `end <= start` wraps past midnight. Every hour must be covered exactly once.
pub fn tariff_schedule(tiers: &[(u32, u32, f64)], sell_ratio: f64) -> Result<Tariff> {
    let mut prices: [Option<f64>; 24] = [None; 24];
    for &(start, end, price) in tiers {
        if start > 23 || end > 24 {
            return Err(Error::Config(format!("tier {start}-{end} outside the day")));
        }
        let hours: Vec<u32> = if end > start {
            (start..end).collect()
        } else {
            (start..24).chain(0..end).collect()
        };
        for h in hours {
            if prices[h as usize].replace(price).is_some() {
                return Err(Error::Config(format!("hour {h} covered by more than one tier")));
            }
        }
    }
    let prices = prices
        .iter()
        .enumerate()
        .map(|(h, p)| p.ok_or_else(|| Error::Config(format!("hour {h} not covered by any tier"))))
        .collect::<Result<Vec<f64>>>()?;
    let tariff = Tariff { prices, sell_ratio };
    tariff.validate()?;
    Ok(tariff)
}

/// Day 06-17 at 0.46, peak 17-22 at 0.70, night 22-06 at 0.29, P = 0.5.
pub fn default_tiers() -> Vec<(u32, u32, f64)> {
    vec![(6, 17, 0.46), (17, 22, 0.70), (22, 6, 0.29)]
}

pub fn default_tariff() -> Tariff {
    tariff_schedule(&default_tiers(), 0.5).expect("default tiers partition the day")
}
