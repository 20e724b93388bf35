//! Sun position and clear-sky PAR.
//!
//! Position follows the NOAA general solar position equations (Meeus):
//! solar declination and the equation of time from the Julian century,
//! then the hour angle from local clock time, longitude, and a fixed UTC
//! offset. Irradiance is a simple transmittance model on the PAR band with
//! Kasten–Young air mass.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{de, Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Deserializes from either a preset name (`"ames"`) or an object with
/// the three fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeoLocation {
    /// Degrees north.
    pub latitude: f64,
    /// Degrees east.
    pub longitude: f64,
    /// Hours added to UTC to get local clock time.
    pub utc_offset: f64,
}

impl GeoLocation {
    pub fn new(latitude: f64, longitude: f64, utc_offset: f64) -> Result<Self> {
        let loc = Self {
            latitude,
            longitude,
            utc_offset,
        };
        loc.validate()?;
        Ok(loc)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.latitude.abs() <= 90.0 && self.longitude.abs() <= 180.0 && self.utc_offset.abs() <= 14.0) {
            return Err(Error::InvalidValue(format!("invalid location {self:?}")));
        }
        Ok(())
    }

    /// Ames, Iowa, on Central Daylight Time. Coordinates are configuration
    /// defaults, not survey values.
    pub const AMES: GeoLocation = GeoLocation {
        latitude: 42.03,
        longitude: -93.63,
        utc_offset: -5.0,
    };

    /// Thomas County, Kansas (Colby), Central Daylight Time.
    pub const THOMAS_COUNTY: GeoLocation = GeoLocation {
        latitude: 39.39,
        longitude: -101.05,
        utc_offset: -5.0,
    };

    /// Bismarck, North Dakota, Central Daylight Time.
    pub const BISMARCK: GeoLocation = GeoLocation {
        latitude: 46.81,
        longitude: -100.78,
        utc_offset: -5.0,
    };

    pub fn preset(name: &str) -> Option<GeoLocation> {
        match name.to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "ames" | "ames_ia" => Some(Self::AMES),
            "thomas_county" | "thomas_county_ks" | "colby" => Some(Self::THOMAS_COUNTY),
            "bismarck" | "bismarck_nd" => Some(Self::BISMARCK),
            _ => None,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeoLocationFields {
    latitude: f64,
    longitude: f64,
    utc_offset: f64,
}

impl<'de> Deserialize<'de> for GeoLocation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct Visitor;

        impl<'de> de::Visitor<'de> for Visitor {
            type Value = GeoLocation;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a location preset name or {latitude, longitude, utc_offset}")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<GeoLocation, E> {
                GeoLocation::preset(v).ok_or_else(|| E::custom(format!("unknown location preset `{v}`")))
            }

            fn visit_map<A: de::MapAccess<'de>>(self, map: A) -> std::result::Result<GeoLocation, A::Error> {
                let f = GeoLocationFields::deserialize(de::value::MapAccessDeserializer::new(map))?;
                GeoLocation::new(f.latitude, f.longitude, f.utc_offset).map_err(de::Error::custom)
            }
        }

        d.deserialize_any(Visitor)
    }
}

/// Local calendar date and clock time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimePoint {
    pub date: NaiveDate,
    /// Minutes after local midnight.
    pub minutes: u32,
}

impl TimePoint {
    pub fn new(date: NaiveDate, hour: u32, minute: u32) -> Self {
        Self {
            date,
            minutes: hour * 60 + minute,
        }
    }

    pub fn from_ymd_hm(year: i32, month: u32, day: u32, hour: u32, minute: u32) -> Result<Self> {
        let date = NaiveDate::from_ymd_opt(year, month, day)
            .ok_or_else(|| Error::InvalidValue(format!("invalid date {year}-{month}-{day}")))?;
        if hour > 24 || minute >= 60 || hour * 60 + minute > 24 * 60 {
            return Err(Error::InvalidValue(format!("invalid clock time {hour}:{minute}")));
        }
        Ok(Self::new(date, hour, minute))
    }

    pub fn hour(&self) -> u32 {
        self.minutes / 60
    }

    pub fn minute(&self) -> u32 {
        self.minutes % 60
    }

    /// ISO-8601 local timestamp without offset, e.g. `2020-08-07T13:00`.
    pub fn iso(&self) -> String {
        format!("{}T{:02}:{:02}", self.date, self.hour(), self.minute())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkyModelParams {
    /// Extraterrestrial PAR, µmol m⁻² s⁻¹.
    pub extraterrestrial_par: f64,
    /// Zenith transmittance of the atmosphere.
    pub atmospheric_transmittance: f64,
    /// Fraction of the attenuated beam that reaches the ground as diffuse sky light.
    pub diffuse_coefficient: f64,
}

impl Default for SkyModelParams {
    fn default() -> Self {
        Self {
            extraterrestrial_par: 2400.0,
            atmospheric_transmittance: 0.75,
            diffuse_coefficient: 0.3,
        }
    }
}

impl SkyModelParams {
    pub fn validate(&self) -> Result<()> {
        let t = self.atmospheric_transmittance;
        if !(self.extraterrestrial_par > 0.0 && t > 0.0 && t < 1.0 && self.diffuse_coefficient >= 0.0)
            || !self.extraterrestrial_par.is_finite()
            || !self.diffuse_coefficient.is_finite()
        {
            return Err(Error::InvalidValue(format!("invalid sky model {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolarState {
    /// Radians from the vertical.
    pub zenith: f64,
    /// Compass azimuth, radians clockwise from north.
    pub azimuth: f64,
    pub sun_up: bool,
    /// µmol m⁻² s⁻¹ on a surface facing the sun.
    pub direct_normal_par: f64,
    /// µmol m⁻² s⁻¹ on a horizontal surface.
    pub diffuse_horizontal_par: f64,
}

impl SolarState {
    pub fn new(zenith: f64, azimuth: f64, sky: &SkyModelParams) -> Self {
        let (dni, dhi) = clear_sky_par(zenith, sky);
        Self {
            zenith,
            azimuth,
            sun_up: zenith < FRAC_PI_2,
            direct_normal_par: dni,
            diffuse_horizontal_par: dhi,
        }
    }

    /// Explicit fluxes, for synthetic lighting.
    pub fn with_fluxes(zenith: f64, azimuth: f64, direct_normal: f64, diffuse_horizontal: f64) -> Self {
        Self {
            zenith,
            azimuth,
            sun_up: zenith < FRAC_PI_2,
            direct_normal_par: direct_normal,
            diffuse_horizontal_par: diffuse_horizontal,
        }
    }

    /// World unit vector pointing at the sun.
    pub fn direction(&self) -> Vec3 {
        Vec3::from_zenith_azimuth(self.zenith, self.azimuth)
    }

    /// Beam plus diffuse on a horizontal surface.
    pub fn global_horizontal_par(&self) -> f64 {
        if !self.sun_up {
            return 0.0;
        }
        self.direct_normal_par * self.zenith.cos() + self.diffuse_horizontal_par
    }
}

/// Julian day number (fractional) for a UTC instant given as a date plus
/// fractional hours (which may fall outside `[0, 24)`).
pub fn julian_day(date: NaiveDate, utc_hours: f64) -> f64 {
    // Days since 2000-01-01 plus the J2000 epoch (noon of that day).
    let epoch = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let days = (date - epoch).num_days() as f64;
    2_451_544.5 + days + utc_hours / 24.0
}

/// Solar zenith and compass azimuth, both radians.
pub fn solar_position(loc: &GeoLocation, t: &TimePoint) -> (f64, f64) {
    let local_hours = t.minutes as f64 / 60.0;
    let jd = julian_day(t.date, local_hours - loc.utc_offset);
    let jc = (jd - 2_451_545.0) / 36_525.0;

    let mean_long = (280.46646 + jc * (36_000.76983 + jc * 0.0003032)).rem_euclid(360.0);
    let mean_anom = 357.52911 + jc * (35_999.05029 - 0.0001537 * jc);
    let ecc = 0.016708634 - jc * (0.000042037 + 0.0000001267 * jc);
    let m = mean_anom.to_radians();
    let center = m.sin() * (1.914602 - jc * (0.004817 + 0.000014 * jc))
        + (2.0 * m).sin() * (0.019993 - 0.000101 * jc)
        + (3.0 * m).sin() * 0.000289;
    let true_long = mean_long + center;
    let omega = (125.04 - 1934.136 * jc).to_radians();
    let app_long = true_long - 0.00569 - 0.00478 * omega.sin();
    let mean_obliq = 23.0 + (26.0 + (21.448 - jc * (46.815 + jc * (0.00059 - jc * 0.001813))) / 60.0) / 60.0;
    let obliq = (mean_obliq + 0.00256 * omega.cos()).to_radians();
    let decl = (obliq.sin() * app_long.to_radians().sin()).asin();

    let y = (obliq / 2.0).tan().powi(2);
    let l0 = mean_long.to_radians();
    let eot_minutes = 4.0
        * (y * (2.0 * l0).sin() - 2.0 * ecc * m.sin() + 4.0 * ecc * y * m.sin() * (2.0 * l0).cos()
            - 0.5 * y * y * (4.0 * l0).sin()
            - 1.25 * ecc * ecc * (2.0 * m).sin())
        .to_degrees();

    let true_solar_minutes =
        (t.minutes as f64 + eot_minutes + 4.0 * loc.longitude - 60.0 * loc.utc_offset).rem_euclid(1440.0);
    let hour_angle = (true_solar_minutes / 4.0 - 180.0).to_radians();

    let lat = loc.latitude.to_radians();
    let cos_z = (lat.sin() * decl.sin() + lat.cos() * decl.cos() * hour_angle.cos()).clamp(-1.0, 1.0);
    let zenith = cos_z.acos();

    // Azimuth clockwise from north: atan2(east, north) of the sun vector.
    let east = -decl.cos() * hour_angle.sin();
    let north = decl.sin() * lat.cos() - decl.cos() * lat.sin() * hour_angle.cos();
    let azimuth = east.atan2(north).rem_euclid(std::f64::consts::TAU);
    (zenith, azimuth)
}

/// Kasten–Young relative air mass; infinite at or below the horizon.
pub fn air_mass(zenith: f64) -> f64 {
    let zd = zenith.to_degrees();
    if zd >= 90.0 {
        return f64::INFINITY;
    }
    1.0 / (zenith.cos() + 0.50572 * (96.07995 - zd).powf(-1.6364))
}

/// Direct-normal and diffuse-horizontal PAR (µmol m⁻² s⁻¹) for a zenith
/// angle in radians. Both are zero once the sun is at or below the horizon.
pub fn clear_sky_par(zenith: f64, params: &SkyModelParams) -> (f64, f64) {
    if !(zenith < FRAC_PI_2) {
        return (0.0, 0.0);
    }
    let m = air_mass(zenith);
    let beam = params.atmospheric_transmittance.powf(m);
    let dni = params.extraterrestrial_par * beam;
    let diffuse = params.diffuse_coefficient * params.extraterrestrial_par * (1.0 - beam) * zenith.cos();
    (dni, diffuse.max(0.0))
}

/// Sun position and fluxes at a location and time.
pub fn solar_state(loc: &GeoLocation, t: &TimePoint, sky: &SkyModelParams) -> SolarState {
    let (zenith, azimuth) = solar_position(loc, t);
    SolarState::new(zenith, azimuth, sky)
}

pub fn day_of_year(date: NaiveDate) -> u32 {
    date.ordinal()
}
