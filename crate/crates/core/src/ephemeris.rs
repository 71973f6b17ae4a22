//! Analytic planetary ephemerides from mean Keplerian elements.
//!
//! The built-in table is the J2000 column of E. M. Standish, "Keplerian
//! Elements for Approximate Positions of the Major Planets" (JPL Solar System
//! Dynamics, valid 1800-2050 AD), referenced to the mean ecliptic and equinox
//! of J2000. The Earth row is the Earth-Moon barycentre. Element rates are
//! dropped: every planet moves on a fixed two-body ellipse around the Sun.
//!
//! Gravitational parameters are the DE430 values and radii are IAU mean
//! equatorial radii.
//!
//! Epochs are MJD days on every public surface and seconds internally; one
//! day is exactly 86400 s.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const AU: f64 = 1.495_978_707e11;
pub const DAY: f64 = 86_400.0;
pub const SUN_MU: f64 = 1.327_124_400_18e20;
/// MJD of the J2000 epoch (JD 2451545.0).
pub const J2000_MJD: f64 = 51_544.5;

const EPOCH_MIN: f64 = 0.0;
const EPOCH_MAX: f64 = 200_000.0;
const KEPLER_TOL: f64 = 1e-12;
const KEPLER_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Planet {
    Mercury,
    Venus,
    Earth,
    Mars,
    Jupiter,
    Saturn,
    Uranus,
    Neptune,
}

impl Planet {
    pub const ALL: [Planet; 8] = [
        Planet::Mercury,
        Planet::Venus,
        Planet::Earth,
        Planet::Mars,
        Planet::Jupiter,
        Planet::Saturn,
        Planet::Uranus,
        Planet::Neptune,
    ];

    /// Single-letter code; Mercury is `Y` so it does not clash with Mars.
    pub fn letter(self) -> char {
        match self {
            Planet::Mercury => 'Y',
            Planet::Venus => 'V',
            Planet::Earth => 'E',
            Planet::Mars => 'M',
            Planet::Jupiter => 'J',
            Planet::Saturn => 'S',
            Planet::Uranus => 'U',
            Planet::Neptune => 'N',
        }
    }

    pub fn from_letter(c: char) -> Option<Planet> {
        Planet::ALL.into_iter().find(|p| p.letter() == c.to_ascii_uppercase())
    }

    pub fn name(self) -> &'static str {
        match self {
            Planet::Mercury => "Mercury",
            Planet::Venus => "Venus",
            Planet::Earth => "Earth",
            Planet::Mars => "Mars",
            Planet::Jupiter => "Jupiter",
            Planet::Saturn => "Saturn",
            Planet::Uranus => "Uranus",
            Planet::Neptune => "Neptune",
        }
    }
}

impl fmt::Display for Planet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Planet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.chars().count() == 1 {
            if let Some(p) = s.chars().next().and_then(Planet::from_letter) {
                return Ok(p);
            }
        }
        Planet::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Elements(format!("unknown body '{s}'")))
    }
}

/// Classical elements of a heliocentric ellipse. Angles in radians, `a` in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Elements {
    pub a: f64,
    pub e: f64,
    pub i: f64,
    pub raan: f64,
    pub argp: f64,
    /// Mean anomaly at `t0_mjd`.
    pub m0: f64,
    pub t0_mjd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub id: Planet,
    pub mu: f64,
    pub radius: f64,
    pub elements: Elements,
    pub sun_mu: f64,
}

/// Heliocentric Cartesian state, metres and metres per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelioState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub epoch: f64,
}

impl HelioState {
    pub fn new(position: Vector3<f64>, velocity: Vector3<f64>, epoch: f64) -> Self {
        Self { position, velocity, epoch }
    }
}

/// Solves `E - e sin E = M` for elliptic orbits by Newton iteration.
///
/// Returns `None` if the residual is still above 1e-12 rad after 100 steps.
pub fn solve_kepler(mean_anomaly: f64, e: f64) -> Option<f64> {
    let m = (mean_anomaly + PI).rem_euclid(TAU) - PI;
    let mut ecc_anom = if e < 0.8 { m + e * m.sin() } else { PI.copysign(m) };
    for _ in 0..KEPLER_MAX_ITER {
        let f = ecc_anom - e * ecc_anom.sin() - m;
        if f.abs() < KEPLER_TOL {
            return Some(ecc_anom);
        }
        ecc_anom -= f / (1.0 - e * ecc_anom.cos());
    }
    let f = ecc_anom - e * ecc_anom.sin() - m;
    (f.abs() < KEPLER_TOL).then_some(ecc_anom)
}

impl Body {
    /// Orbital period around the Sun in seconds.
    pub fn period(&self) -> f64 {
        TAU * (self.elements.a.powi(3) / self.sun_mu).sqrt()
    }

    pub fn mean_motion(&self) -> f64 {
        (self.sun_mu / self.elements.a.powi(3)).sqrt()
    }

    /// Two-body state at `epoch` (MJD).
    pub fn state_at(&self, epoch: f64) -> Result<HelioState> {
        if !(EPOCH_MIN..=EPOCH_MAX).contains(&epoch) || !epoch.is_finite() {
            return Err(Error::EpochOutOfRange(epoch));
        }
        let el = &self.elements;
        let n = self.mean_motion();
        let m = el.m0 + n * (epoch - el.t0_mjd) * DAY;
        let ecc_anom = solve_kepler(m, el.e).ok_or(Error::KeplerNonConvergence { body: self.id, epoch })?;

        let (sin_e, cos_e) = ecc_anom.sin_cos();
        let b = (1.0 - el.e * el.e).sqrt();
        let denom = 1.0 - el.e * cos_e;
        let r_pf = Vector3::new(el.a * (cos_e - el.e), el.a * b * sin_e, 0.0);
        let v_pf = Vector3::new(-el.a * n * sin_e / denom, el.a * n * b * cos_e / denom, 0.0);

        let rot = perifocal_to_inertial(el);
        Ok(HelioState::new(rot * r_pf, rot * v_pf, epoch))
    }
}

fn perifocal_to_inertial(el: &Elements) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), el.raan)
        * Rotation3::from_axis_angle(&Vector3::x_axis(), el.i)
        * Rotation3::from_axis_angle(&Vector3::z_axis(), el.argp)
}

/// 2π·sqrt(a³/μ☉).
pub fn period(body: &Body) -> f64 {
    body.period()
}

// Standish J2000 elements: a [AU], e, I [deg], L [deg], ϖ [deg], Ω [deg].
const STANDISH_J2000: [(Planet, [f64; 6]); 8] = [
    (Planet::Mercury, [0.387_099_27, 0.205_635_93, 7.004_979_02, 252.250_323_50, 77.457_796_28, 48.330_765_93]),
    (Planet::Venus, [0.723_335_66, 0.006_776_72, 3.394_676_05, 181.979_099_50, 131.602_467_18, 76.679_842_55]),
    (Planet::Earth, [1.000_002_61, 0.016_711_23, -0.000_015_31, 100.464_571_66, 102.937_681_93, 0.0]),
    (Planet::Mars, [1.523_710_34, 0.093_394_10, 1.849_691_42, -4.553_432_05, -23.943_629_59, 49.559_538_91]),
    (Planet::Jupiter, [5.202_887_00, 0.048_386_24, 1.304_396_95, 34.396_440_51, 14.728_479_83, 100.473_909_09]),
    (Planet::Saturn, [9.536_675_94, 0.053_861_79, 2.485_991_87, 49.954_244_23, 92.598_878_31, 113.662_424_48]),
    (Planet::Uranus, [19.189_164_64, 0.047_257_44, 0.772_637_83, 313.238_104_51, 170.954_276_30, 74.016_925_03]),
    (Planet::Neptune, [30.069_922_76, 0.008_590_48, 1.770_043_47, -55.120_029_69, 44.964_762_27, 131.784_225_74]),
];

// (μ [m³/s²], equatorial radius [m])
const PHYSICAL: [(Planet, f64, f64); 8] = [
    (Planet::Mercury, 2.203_186_8e13, 2.439_7e6),
    (Planet::Venus, 3.248_585_92e14, 6.051_8e6),
    (Planet::Earth, 3.986_004_418e14, 6.378_137e6),
    (Planet::Mars, 4.282_837_362e13, 3.396_19e6),
    (Planet::Jupiter, 1.266_865_349e17, 7.149_2e7),
    (Planet::Saturn, 3.793_120_749e16, 6.026_8e7),
    (Planet::Uranus, 5.793_951_322e15, 2.555_9e7),
    (Planet::Neptune, 6.835_099_97e15, 2.476_4e7),
];

/// Built-in body for one planet.
pub fn builtin_body(id: Planet) -> Body {
    let (_, row) = STANDISH_J2000.iter().find(|(p, _)| *p == id).copied().unwrap();
    let (_, mu, radius) = PHYSICAL.iter().find(|(p, ..)| *p == id).copied().unwrap();
    let [a, e, inc, mean_long, peri_long, node] = row;
    Body {
        id,
        mu,
        radius,
        elements: Elements {
            a: a * AU,
            e,
            i: inc.to_radians(),
            raan: node.to_radians(),
            argp: (peri_long - node).to_radians().rem_euclid(TAU),
            m0: (mean_long - peri_long).to_radians().rem_euclid(TAU),
            t0_mjd: J2000_MJD,
        },
        sun_mu: SUN_MU,
    }
}

/// The set of bodies available to a run, ordered by semi-major axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanetSet {
    bodies: Vec<Body>,
}

#[derive(Debug, Deserialize)]
struct ElementsRow {
    body: String,
    a_m: f64,
    e: f64,
    i_rad: f64,
    raan_rad: f64,
    argp_rad: f64,
    #[serde(rename = "M0_rad")]
    m0_rad: f64,
    t0_mjd: f64,
    mu: f64,
    radius_m: f64,
    #[serde(default)]
    sun_mu: Option<f64>,
}

pub const ELEMENTS_HEADER: &str = "body,a_m,e,i_rad,raan_rad,argp_rad,M0_rad,t0_mjd,mu,radius_m";
/// Optional trailing column for synthetic systems with a non-solar primary.
pub const SUN_MU_COLUMN: &str = "sun_mu";

impl PlanetSet {
    /// All eight planets with the built-in elements.
    pub fn builtin() -> Self {
        Self::from_bodies(Planet::ALL.into_iter().map(builtin_body).collect()).expect("built-in table is valid")
    }

    pub fn from_bodies(mut bodies: Vec<Body>) -> Result<Self> {
        if bodies.is_empty() {
            return Err(Error::Elements("planet set is empty".into()));
        }
        for b in &bodies {
            validate_body(b)?;
        }
        bodies.sort_by(|x, y| x.elements.a.total_cmp(&y.elements.a).then(x.id.cmp(&y.id)));
        for w in bodies.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::Elements(format!("{} listed twice", w[0].id)));
            }
        }
        Ok(Self { bodies })
    }

    /// Reads an elements override table. The resulting set holds exactly the
    /// listed bodies. A trailing `sun_mu` column overrides the central
    /// body's gravitational parameter per row.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
        if headers != ELEMENTS_HEADER && headers != format!("{ELEMENTS_HEADER},{SUN_MU_COLUMN}") {
            return Err(Error::Elements(format!(
                "unexpected header '{headers}', expected '{ELEMENTS_HEADER}' with optional ',{SUN_MU_COLUMN}'"
            )));
        }
        let mut bodies = Vec::new();
        for row in rdr.deserialize() {
            let row: ElementsRow = row?;
            bodies.push(Body {
                id: row.body.parse()?,
                mu: row.mu,
                radius: row.radius_m,
                elements: Elements {
                    a: row.a_m,
                    e: row.e,
                    i: row.i_rad,
                    raan: row.raan_rad,
                    argp: row.argp_rad,
                    m0: row.m0_rad,
                    t0_mjd: row.t0_mjd,
                },
                sun_mu: row.sun_mu.unwrap_or(SUN_MU),
            });
        }
        Self::from_bodies(bodies)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Elements(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file)
    }

    /// Writes the `sun_mu` column only when some body departs from [`SUN_MU`].
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let with_mu = self.bodies.iter().any(|b| b.sun_mu != SUN_MU);
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = ELEMENTS_HEADER.split(',').collect();
        if with_mu {
            header.push(SUN_MU_COLUMN);
        }
        w.write_record(&header)?;
        for b in &self.bodies {
            let el = &b.elements;
            let mut row = vec![
                b.id.name().to_string(),
                el.a.to_string(),
                el.e.to_string(),
                el.i.to_string(),
                el.raan.to_string(),
                el.argp.to_string(),
                el.m0.to_string(),
                el.t0_mjd.to_string(),
                b.mu.to_string(),
                b.radius.to_string(),
            ];
            if with_mu {
                row.push(b.sun_mu.to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn get(&self, id: Planet) -> Result<&Body> {
        self.bodies.iter().find(|b| b.id == id).ok_or(Error::UnknownBody(id))
    }

    pub fn contains(&self, id: Planet) -> bool {
        self.bodies.iter().any(|b| b.id == id)
    }

    /// Bodies in ascending semi-major axis.
    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn state_at(&self, id: Planet, epoch: f64) -> Result<HelioState> {
        self.get(id)?.state_at(epoch)
    }
}

fn validate_body(b: &Body) -> Result<()> {
    let el = &b.elements;
    let ok = el.a > 0.0
        && (0.0..1.0).contains(&el.e)
        && b.mu > 0.0
        && b.radius > 0.0
        && b.sun_mu > 0.0
        && [el.i, el.raan, el.argp, el.m0, el.t0_mjd].iter().all(|v| v.is_finite());
    if ok {
        Ok(())
    } else {
        Err(Error::Elements(format!("invalid elements for {}", b.id)))
    }
}
