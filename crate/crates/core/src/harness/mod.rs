//! Scenario configuration, seeded multi-day runs, reports and figure data.

mod config;
mod figures;
mod run;

pub use config::{ScenarioConfig, SolarConfig, TariffConfig, TrafficConfig, TrafficLevel, DAYS_PER_YEAR};
pub use figures::{emit_figure_data, seasonal_energy, write_figure, FigureId};
pub use run::{
    day_scenario, kind_of, run_scenario, write_report, CellKey, CellReport, CloudDay, DayReport, Method, MethodContext,
    MethodDay, MethodOutcome, MethodRegistry, RunOptions, RunReport, MODEL_CHECK_LIMIT, OPEX_REL_TOL,
};
