//! Daily and seasonal integration of intercepted PAR, and scenario sweeps.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::{build_field, FieldLayout, OrientationMode, SceneField};
use crate::radiation::{
    compute_flux, default_sensors, per_plant_interception, read_sensors, FluxMap, RadiationConfig, SensorReading,
    SensorSpec,
};
use crate::solar::{solar_state, GeoLocation, SkyModelParams, SolarState, TimePoint};

/// Local clock time with minute resolution, written `HH:MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClockTime(pub u32);

impl ClockTime {
    pub fn hm(hour: u32, minute: u32) -> Self {
        ClockTime(hour * 60 + minute)
    }

    pub fn minutes(self) -> u32 {
        self.0
    }
}

impl fmt::Display for ClockTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

impl FromStr for ClockTime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSchedule(format!("expected HH:MM, got {s:?}"));
        let (h, m) = s.split_once(':').ok_or_else(bad)?;
        let h: u32 = h.parse().map_err(|_| bad())?;
        let m: u32 = m.parse().map_err(|_| bad())?;
        if m >= 60 || h * 60 + m > 24 * 60 {
            return Err(bad());
        }
        Ok(ClockTime::hm(h, m))
    }
}

impl Serialize for ClockTime {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClockTime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    pub start_time: ClockTime,
    pub end_time: ClockTime,
    pub time_step_minutes: u32,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Simulate every k-th date and scale; 1 simulates every date.
    pub day_stride: u32,
    pub location: GeoLocation,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            start_time: ClockTime::hm(7, 0),
            end_time: ClockTime::hm(20, 0),
            time_step_minutes: 60,
            start_date: NaiveDate::from_ymd_opt(2020, 7, 15).unwrap(),
            end_date: NaiveDate::from_ymd_opt(2020, 8, 15).unwrap(),
            day_stride: 1,
            location: GeoLocation::AMES,
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSchedule(m));
        if self.start_time >= self.end_time {
            return bad(format!("start {} must precede end {}", self.start_time, self.end_time));
        }
        if self.time_step_minutes == 0 {
            return bad("time step must be positive".into());
        }
        if self.start_date > self.end_date {
            return bad(format!("start date {} is after end date {}", self.start_date, self.end_date));
        }
        if self.day_stride == 0 {
            return bad("day stride must be at least 1".into());
        }
        self.location.validate()
    }

    /// Clock times of one day: every step from the start, plus the end time
    /// when the step does not divide the window.
    pub fn times(&self) -> Vec<ClockTime> {
        let mut out: Vec<ClockTime> = (self.start_time.0..self.end_time.0)
            .step_by(self.time_step_minutes as usize)
            .map(ClockTime)
            .collect();
        out.push(self.end_time);
        out
    }

    /// Every date of the range.
    pub fn dates(&self) -> Vec<NaiveDate> {
        self.start_date
            .iter_days()
            .take_while(|d| *d <= self.end_date)
            .collect()
    }

    /// Simulated dates with the number of dates each one stands for.
    pub fn sampled_dates(&self) -> Vec<(NaiveDate, u32)> {
        let all = self.dates();
        let k = self.day_stride as usize;
        all.chunks(k).map(|c| (c[0], c.len() as u32)).collect()
    }
}

/// Integral of a power series (µmol s⁻¹) over clock times, in mol, by the
/// trapezoidal rule.
pub fn integrate_trapezoid(times: &[ClockTime], power: &[f64]) -> f64 {
    assert_eq!(times.len(), power.len());
    let mut total = 0.0;
    for k in 1..times.len() {
        let dt = (times[k].0 - times[k - 1].0) as f64 * 60.0;
        total += dt * 0.5 * (power[k] + power[k - 1]);
    }
    total / 1e6
}

#[derive(Debug, Clone)]
pub struct TimepointResult {
    pub time: TimePoint,
    pub sun: SolarState,
    pub flux: FluxMap,
    pub sensors: SensorReading,
}

/// Compact record of one timepoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimepointSummary {
    pub time: ClockTime,
    pub sun: SolarState,
    /// µmol s⁻¹ per plant.
    pub per_plant: BTreeMap<u32, f64>,
    /// µmol m⁻² s⁻¹.
    pub per_ground_area: Option<f64>,
    pub fraction_intercepted: Option<f64>,
    pub fraction_unclamped: Option<f64>,
}

pub fn run_timepoint(
    scene: &SceneField,
    loc: &GeoLocation,
    t: &TimePoint,
    sky: &SkyModelParams,
    cfg: &RadiationConfig,
    sensors: &[SensorSpec],
) -> Result<TimepointResult> {
    let sun = solar_state(loc, t, sky);
    run_with_sun(scene, t, sun, cfg, sensors)
}

/// Timepoint with explicit lighting.
pub fn run_with_sun(
    scene: &SceneField,
    t: &TimePoint,
    sun: SolarState,
    cfg: &RadiationConfig,
    sensors: &[SensorSpec],
) -> Result<TimepointResult> {
    let flux = compute_flux(scene, &sun, cfg)?;
    let sensors = read_sensors(scene, &sun, &flux, sensors, cfg)?;
    Ok(TimepointResult {
        time: *t,
        sun,
        flux,
        sensors,
    })
}

impl TimepointResult {
    pub fn summary(&self, scene: &SceneField) -> TimepointSummary {
        let pi = per_plant_interception(&self.flux, scene);
        TimepointSummary {
            time: ClockTime(self.time.minutes),
            sun: self.sun,
            per_plant: pi.per_plant,
            per_ground_area: pi.per_ground_area,
            fraction_intercepted: self.sensors.fraction_intercepted,
            fraction_unclamped: self.sensors.fraction_unclamped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailyResult {
    pub date: NaiveDate,
    pub timepoints: Vec<TimepointSummary>,
    /// mol per plant per day.
    pub per_plant_mol: BTreeMap<u32, f64>,
    /// mol m⁻² day⁻¹.
    pub per_ground_area_mol: Option<f64>,
    /// Mean of the sensor fraction over daylight timepoints.
    pub mean_fraction: Option<f64>,
}

impl DailyResult {
    /// Integrates a day of timepoint summaries.
    pub fn from_timepoints(date: NaiveDate, timepoints: Vec<TimepointSummary>) -> Self {
        let times: Vec<ClockTime> = timepoints.iter().map(|t| t.time).collect();
        let plant_ids: Vec<u32> = timepoints
            .iter()
            .flat_map(|t| t.per_plant.keys().copied())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let per_plant_mol = plant_ids
            .into_iter()
            .map(|id| {
                let series: Vec<f64> = timepoints
                    .iter()
                    .map(|t| t.per_plant.get(&id).copied().unwrap_or(0.0))
                    .collect();
                (id, integrate_trapezoid(&times, &series))
            })
            .collect();
        let per_ground_area_mol = if timepoints.iter().all(|t| t.per_ground_area.is_some()) && !timepoints.is_empty() {
            let series: Vec<f64> = timepoints.iter().map(|t| t.per_ground_area.unwrap()).collect();
            Some(integrate_trapezoid(&times, &series))
        } else {
            None
        };
        let fractions: Vec<f64> = timepoints.iter().filter_map(|t| t.fraction_intercepted).collect();
        let mean_fraction = (!fractions.is_empty()).then(|| fractions.iter().sum::<f64>() / fractions.len() as f64);
        Self {
            date,
            timepoints,
            per_plant_mol,
            per_ground_area_mol,
            mean_fraction,
        }
    }

    /// Mean over plants of the daily per-plant integral.
    pub fn mean_per_plant_mol(&self) -> f64 {
        mean(self.per_plant_mol.values().copied())
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

pub fn run_day(
    scene: &SceneField,
    schedule: &Schedule,
    date: NaiveDate,
    sky: &SkyModelParams,
    cfg: &RadiationConfig,
    sensors: &[SensorSpec],
) -> Result<DailyResult> {
    schedule.validate()?;
    let mut tps = Vec::new();
    for time in schedule.times() {
        let t = TimePoint {
            date,
            minutes: time.minutes(),
        };
        let r = run_timepoint(scene, &schedule.location, &t, sky, cfg, sensors)?;
        tps.push(r.summary(scene));
    }
    Ok(DailyResult::from_timepoints(date, tps))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeasonalResult {
    pub days: Vec<DailyResult>,
    /// Number of dates each simulated day stands for.
    pub day_weights: Vec<u32>,
    /// Season totals, mol per plant.
    pub per_plant_mol: BTreeMap<u32, f64>,
    /// Season total, mol m⁻².
    pub per_ground_area_mol: Option<f64>,
    pub mean_fraction: Option<f64>,
}

impl SeasonalResult {
    /// Weighted sum of daily totals, in date order.
    pub fn from_days(days: Vec<DailyResult>, day_weights: Vec<u32>) -> Self {
        assert_eq!(days.len(), day_weights.len());
        let mut per_plant_mol: BTreeMap<u32, f64> = BTreeMap::new();
        let mut ground: Option<f64> = Some(0.0);
        for (d, &w) in days.iter().zip(&day_weights) {
            let w = w as f64;
            for (id, v) in &d.per_plant_mol {
                *per_plant_mol.entry(*id).or_default() += w * v;
            }
            ground = match (ground, d.per_ground_area_mol) {
                (Some(g), Some(v)) => Some(g + w * v),
                _ => None,
            };
        }
        if days.is_empty() {
            ground = None;
        }
        let fractions: Vec<f64> = days.iter().filter_map(|d| d.mean_fraction).collect();
        let mean_fraction = (!fractions.is_empty()).then(|| fractions.iter().sum::<f64>() / fractions.len() as f64);
        Self {
            days,
            day_weights,
            per_plant_mol,
            per_ground_area_mol: ground,
            mean_fraction,
        }
    }

    pub fn mean_per_plant_mol(&self) -> f64 {
        mean(self.per_plant_mol.values().copied())
    }
}

/// Runs every sampled date of the schedule. With `day_stride > 1` each
/// simulated day is scaled by the number of dates it stands for, a linear
/// approximation of the skipped days.
pub fn run_season(
    scene: &SceneField,
    schedule: &Schedule,
    sky: &SkyModelParams,
    cfg: &RadiationConfig,
    sensors: &[SensorSpec],
) -> Result<SeasonalResult> {
    schedule.validate()?;
    sky.validate()?;
    cfg.validate()?;
    let sampled = schedule.sampled_dates();
    let mut days = Vec::with_capacity(sampled.len());
    for (date, _) in &sampled {
        log::debug!("simulating {date}");
        days.push(run_day(scene, schedule, *date, sky, cfg, sensors)?);
    }
    Ok(SeasonalResult::from_days(days, sampled.iter().map(|s| s.1).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedLocation {
    pub name: String,
    pub location: GeoLocation,
}

impl NamedLocation {
    pub fn new(name: impl Into<String>, location: GeoLocation) -> Self {
        Self {
            name: name.into(),
            location,
        }
    }
}

/// A grid of field scenarios. Every axis must be non-empty.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    /// Template layout: plant source, rows, plants per row, ground cell.
    pub base: FieldLayout,
    /// m.
    pub row_spacing: Vec<f64>,
    /// m.
    pub plant_spacing: Vec<f64>,
    pub orientation: Vec<OrientationMode>,
    /// Compass azimuth of the rows, radians.
    pub row_azimuth: Vec<f64>,
    pub locations: Vec<NamedLocation>,
    pub radiation: RadiationConfig,
    pub sky: SkyModelParams,
    /// The location field is replaced by each entry of `locations`.
    pub schedule: Schedule,
}

/// Axis values of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioKey {
    pub row_spacing: f64,
    pub plant_spacing: f64,
    pub orientation: OrientationMode,
    pub row_azimuth: f64,
    pub location: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub key: ScenarioKey,
    pub outcome: std::result::Result<SeasonalResult, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Indices of successful rows ordered by decreasing seasonal PAR per
    /// ground area.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<(usize, f64)> = self
            .rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.outcome.as_ref().ok().and_then(|s| s.per_ground_area_mol).map(|v| (i, v)))
            .collect();
        idx.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        idx.into_iter().map(|(i, _)| i).collect()
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("row_spacing", self.row_spacing.is_empty()),
            ("plant_spacing", self.plant_spacing.is_empty()),
            ("orientation", self.orientation.is_empty()),
            ("row_azimuth", self.row_azimuth.is_empty()),
            ("locations", self.locations.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidScenario(format!("axis {name} is empty")));
        }
        self.radiation.validate()?;
        self.sky.validate()?;
        self.schedule.validate()
    }

    pub fn len(&self) -> usize {
        self.row_spacing.len()
            * self.plant_spacing.len()
            * self.orientation.len()
            * self.row_azimuth.len()
            * self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Scenario keys in lexicographic axis order.
    pub fn keys(&self) -> Vec<ScenarioKey> {
        let mut out = Vec::with_capacity(self.len());
        for &row_spacing in &self.row_spacing {
            for &plant_spacing in &self.plant_spacing {
                for &orientation in &self.orientation {
                    for &row_azimuth in &self.row_azimuth {
                        for loc in &self.locations {
                            out.push(ScenarioKey {
                                row_spacing,
                                plant_spacing,
                                orientation,
                                row_azimuth,
                                location: loc.name.clone(),
                            });
                        }
                    }
                }
            }
        }
        out
    }

    fn run_one(&self, key: &ScenarioKey) -> Result<SeasonalResult> {
        let mut layout = self.base.clone();
        layout.row_spacing = key.row_spacing;
        layout.plant_spacing = key.plant_spacing;
        layout.orientation = key.orientation;
        layout.row_azimuth = key.row_azimuth;
        let scene = build_field(&layout)?;
        let loc = self
            .locations
            .iter()
            .find(|l| l.name == key.location)
            .expect("key built from locations");
        let schedule = Schedule {
            location: loc.location,
            ..self.schedule
        };
        let sensors = default_sensors(&scene);
        run_season(&scene, &schedule, &self.sky, &self.radiation, &sensors)
    }
}

/// Runs every scenario in order; a failing scenario is recorded in its row
/// and the sweep continues.
pub fn run_sweep(spec: &ScenarioSpec) -> Result<SweepTable> {
    spec.validate()?;
    log::info!("sweep of {} scenarios", spec.len());
    let rows = spec
        .keys()
        .into_iter()
        .map(|key| {
            let outcome = spec.run_one(&key).map_err(|e| e.to_string());
            if let Err(e) = &outcome {
                log::warn!("scenario {key:?} failed: {e}");
            }
            SweepRow { key, outcome }
        })
        .collect();
    Ok(SweepTable { rows })
}
