//! Serialization of optimized trajectories.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ltto::{DecisionVector, Sequence, TrajectorySolution};
use crate::shaping::{thrust_profile, ShapedLeg};

pub const THRUST_HEADER: &str = "t_s,r_m,theta_rad,z_m,f_r,f_theta,f_z,f_mag";

/// JSON form of one optimized trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub sequence: Sequence,
    pub genes: Vec<f64>,
    pub decision: DecisionVector,
    pub leg_delta_v: Vec<f64>,
    pub total_delta_v: f64,
    pub feasible: bool,
    pub failure: Option<String>,
}

impl SolutionRecord {
    pub fn new(sequence: &Sequence, sol: &TrajectorySolution) -> Self {
        Self {
            sequence: sequence.clone(),
            genes: sol.decision.to_genes(),
            decision: sol.decision.clone(),
            leg_delta_v: sol.leg_delta_v(),
            total_delta_v: sol.total_delta_v,
            feasible: sol.feasible,
            failure: sol.failure.as_ref().map(ToString::to_string),
        }
    }
}

pub fn write_solution_json<W: Write>(record: &SolutionRecord, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, record)?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Thrust profile of one leg at the ΔV quadrature nodes.
pub fn write_thrust_csv<W: Write>(leg: &ShapedLeg, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(THRUST_HEADER.split(','))?;
    for s in thrust_profile(leg)? {
        w.write_record([s.t, s.r, s.theta, s.z, s.f[0], s.f[1], s.f[2], s.f.norm()].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
