//! Diurnal per-EC traffic profiles and seeded per-user loads.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{NetworkTopology, TrafficTrace};
use crate::error::{Error, Result};
use crate::seed::substream;

/// Number of distinct temporal profiles shared out among the ECs.
pub const PROFILE_COUNT: usize = 5;

/// Upper bound on a user's load ratio; DU counts are sized against it.
pub const LOAD_CAP: f64 = 1.0;

/// Shape of the per-user jitter multiplier (gamma, mean 1).
const JITTER_SHAPE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Season {
    Winter,
    Spring,
    Summer,
    Autumn,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Winter, Season::Spring, Season::Summer, Season::Autumn];

    /// Meteorological season of a zero-based day of a non-leap year.
    pub fn of_day(day: usize) -> Self {
        match day % 365 {
            0..=58 | 334..=364 => Season::Winter,
            59..=151 => Season::Spring,
            152..=243 => Season::Summer,
            _ => Season::Autumn,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Season::Winter => "winter",
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Autumn => "autumn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeasonFactors {
    pub winter: f64,
    pub spring: f64,
    pub summer: f64,
    pub autumn: f64,
}

impl Default for SeasonFactors {
    fn default() -> Self {
        Self {
            winter: 0.9,
            spring: 1.0,
            summer: 1.1,
            autumn: 1.0,
        }
    }
}

impl SeasonFactors {
    pub fn factor(&self, day: usize) -> f64 {
        match Season::of_day(day) {
            Season::Winter => self.winter,
            Season::Spring => self.spring,
            Season::Summer => self.summer,
            Season::Autumn => self.autumn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficProfile {
    /// Slope exponent, > 0.
    pub nu: f64,
    /// Phase in radians, within `[3pi/4, 7pi/4]`.
    pub phi: f64,
    pub noise_sigma: f64,
    pub season: SeasonFactors,
}

impl TrafficProfile {
    pub fn validate(&self) -> Result<()> {
        let lo = 0.75 * PI;
        let hi = 1.75 * PI;
        if !(lo..=hi).contains(&self.phi) {
            return Err(Error::Config(format!("phase {} outside [3pi/4, 7pi/4]", self.phi)));
        }
        if self.nu <= 0.0 || self.noise_sigma < 0.0 {
            return Err(Error::Config("nu must be > 0 and noise sigma >= 0".into()));
        }
        Ok(())
    }

    /// Integer hour of the noiseless daily peak.
    pub fn peak_hour(&self) -> usize {
        (0..24)
            .max_by(|&a, &b| {
                profile_value(self, a as f64, 0.0).total_cmp(&profile_value(self, b as f64, 0.0))
            })
            .unwrap_or(0)
    }
}

/// `(1 / 2^nu) * (1 + sin(pi * t / 12 + phi))^nu + noise`, clamped at 0.
pub fn profile_value(profile: &TrafficProfile, hour: f64, noise: f64) -> f64 {
    let base = 1.0 + (PI * hour / 12.0 + profile.phi).sin();
    let shaped = base.max(0.0).powf(profile.nu) / 2f64.powf(profile.nu);
    (shaped + noise).max(0.0)
}

/// The five shared profiles plus the profile index of every EC.
#[derive(Debug, Clone, PartialEq)]
pub struct EcProfiles {
    pub profiles: Vec<TrafficProfile>,
    pub of_ec: Vec<usize>,
}

impl EcProfiles {
    pub fn for_ec(&self, r: usize) -> &TrafficProfile {
        &self.profiles[self.of_ec[r]]
    }
}

/// Five profiles with phases spread a quarter-turn apart over
/// `[3pi/4, 7pi/4]`, each jittered by at most pi/24 (half an hour), so that
/// peak hours stay distinct. EC `k` gets profile `k mod 5`.
pub fn make_ec_profiles(seed: u64, ec_count: usize, nu: f64, noise_sigma: f64, season: SeasonFactors) -> EcProfiles {
    let mut rng = substream(seed, "profiles", &[]);
    let lo = 0.75 * PI;
    let hi = 1.75 * PI;
    let profiles = (0..PROFILE_COUNT)
        .map(|k| {
            let jitter = rng.random_range(-1.0..=1.0) * PI / 24.0;
            let phi = (lo + k as f64 * PI / 4.0 + jitter).clamp(lo, hi);
            TrafficProfile {
                nu,
                phi,
                noise_sigma,
                season,
            }
        })
        .collect();
    EcProfiles {
        profiles,
        of_ec: (0..ec_count).map(|k| k % PROFILE_COUNT).collect(),
    }
}

/// Mean arrival rate and exponential size parameter of one user in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserArrival {
    pub mean_rate: f64,
    /// Data sizes are exponential with mean `1 / size_param`.
    pub size_param: f64,
}

impl UserArrival {
    /// Expected load ratio `rate / size_param`.
    pub fn load_ratio(&self) -> f64 {
        self.mean_rate / self.size_param
    }
}

/// Load ratios `[slot][user]` for the given users of one EC on one day.
///
/// The profile noise is drawn once per `(ec, day)` and shared by the EC's
/// users; each user then gets an independent mean-one gamma jitter, so
/// co-located users differ but share the same expectation.
pub fn sample_user_loads(
    profile: &TrafficProfile,
    ec: usize,
    users: &[usize],
    day: usize,
    seed: u64,
    size_param: f64,
) -> Vec<Vec<f64>> {
    let noise = sample_noise(profile, ec, day, seed);
    let jitter = Gamma::new(JITTER_SHAPE, 1.0 / JITTER_SHAPE).expect("valid gamma");
    let mut per_user: Vec<Vec<f64>> = users
        .iter()
        .map(|&u| {
            let mut rng = substream(seed, "traffic", &[u as u64, day as u64]);
            (0..24)
                .map(|t| {
                    let arrival = UserArrival {
                        mean_rate: profile_value(profile, t as f64, noise[t]) * profile.season.factor(day),
                        size_param,
                    };
                    (arrival.load_ratio() * jitter.sample(&mut rng)).min(LOAD_CAP)
                })
                .collect()
        })
        .collect();
    // transpose to [slot][user]
    (0..24)
        .map(|t| per_user.iter_mut().map(|row| row[t]).collect())
        .collect()
}

fn sample_noise(profile: &TrafficProfile, ec: usize, day: usize, seed: u64) -> Vec<f64> {
    if profile.noise_sigma == 0.0 {
        return vec![0.0; 24];
    }
    let normal = Normal::new(0.0, profile.noise_sigma).expect("valid sigma");
    let mut rng = substream(seed, "noise", &[ec as u64, day as u64]);
    (0..24).map(|_| normal.sample(&mut rng)).collect()
}

/// Integer delay thresholds, uniform on `0..=chain_len`, fixed for the day.
pub fn sample_delay_thresholds(seed: u64, user_count: usize, day: usize, chain_len: usize) -> Vec<u32> {
    (0..user_count)
        .map(|u| {
            let mut rng = substream(seed, "delay", &[u as u64, day as u64]);
            rng.random_range(0..=chain_len as u32)
        })
        .collect()
}

/// Full-network trace for one day of 24 slots.
pub fn build_trace(
    topology: &NetworkTopology,
    profiles: &EcProfiles,
    day: usize,
    seed: u64,
    size_param: f64,
    chain_len: usize,
) -> TrafficTrace {
    let users = topology.user_count();
    let mut load = vec![vec![0.0; users]; 24];
    for r in 0..topology.ec_count {
        let ids: Vec<usize> = topology.users_of_ec(r).collect();
        let ec_loads = sample_user_loads(profiles.for_ec(r), r, &ids, day, seed, size_param);
        for (t, row) in ec_loads.into_iter().enumerate() {
            for (k, v) in row.into_iter().enumerate() {
                load[t][ids[k]] = v;
            }
        }
    }
    let delays = sample_delay_thresholds(seed, users, day, chain_len);
    TrafficTrace {
        load,
        delay: vec![delays; 24],
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    user: usize,
    slot: usize,
    rho: f64,
    delay_threshold: u32,
}

/// Write `(user, slot, rho, delay_threshold)` rows; `slot_offset` shifts
/// slot numbers so several days can share one file.
pub fn write_trace_csv<W: Write>(trace: &TrafficTrace, slot_offset: usize, writer: &mut csv::Writer<W>) -> Result<()> {
    for (t, (loads, delays)) in trace.load.iter().zip(&trace.delay).enumerate() {
        for (user, (&rho, &delay_threshold)) in loads.iter().zip(delays).enumerate() {
            writer.serialize(TraceRow {
                user,
                slot: slot_offset + t,
                rho,
                delay_threshold,
            })?;
        }
    }
    Ok(())
}

/// Read a trace file back, keeping slots `first_slot .. first_slot + slots`.
pub fn read_trace_csv<R: Read>(reader: R, users: usize, first_slot: usize, slots: usize) -> Result<TrafficTrace> {
    let mut load = vec![vec![f64::NAN; users]; slots];
    let mut delay = vec![vec![0u32; users]; slots];
    let mut rdr = csv::Reader::from_reader(reader);
    for (row_idx, row) in rdr.deserialize::<TraceRow>().enumerate() {
        let row = row?;
        if row.slot < first_slot || row.slot >= first_slot + slots {
            continue;
        }
        if row.user >= users {
            return Err(Error::Data {
                row: row_idx,
                message: format!("user {} outside 0..{users}", row.user),
            });
        }
        if !(row.rho >= 0.0) {
            return Err(Error::Data {
                row: row_idx,
                message: "negative load".into(),
            });
        }
        load[row.slot - first_slot][row.user] = row.rho;
        delay[row.slot - first_slot][row.user] = row.delay_threshold;
    }
    for (t, row) in load.iter().enumerate() {
        if let Some(u) = row.iter().position(|v| v.is_nan()) {
            return Err(Error::Config(format!("trace lacks user {u} at slot {}", first_slot + t)));
        }
    }
    Ok(TrafficTrace { load, delay })
}
