//! Piecewise-constant pulse schedules for the driven core of each Clifford.
//!
//! Time is measured in units of a primitive π/2 pulse at full Rabi rate, so a
//! segment rotating by θ at relative rate Ω takes |θ| / Ω / (π/2).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotations::{clifford_table, CliffordElement, CliffordIndex, Core, CoreAxis, Unitary2};

/// Idle time of the primitive identity: one π-pulse duration.
pub const WAIT_DURATION: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Primitive,
    Corpse,
    Wamf,
    Bb1,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Primitive, Family::Corpse, Family::Wamf, Family::Bb1];

    pub fn name(self) -> &'static str {
        match self {
            Family::Primitive => "primitive",
            Family::Corpse => "corpse",
            Family::Wamf => "wamf",
            Family::Bb1 => "bb1",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "primitive" => Ok(Family::Primitive),
            "corpse" => Ok(Family::Corpse),
            "wamf" => Ok(Family::Wamf),
            "bb1" => Ok(Family::Bb1),
            _ => Err(Error::UnknownFamily(s.to_string())),
        }
    }
}

/// One constant-drive interval. A segment with `theta == 0` is an idle of
/// the stored `duration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    pub theta: f64,
    pub omega_rel: f64,
    pub phi: f64,
    pub duration: f64,
}

impl PulseSegment {
    pub fn driven(theta: f64, omega_rel: f64, phi: f64) -> Self {
        debug_assert!(theta >= 0.0 && omega_rel > 0.0 && omega_rel <= 1.0);
        Self { theta, omega_rel, phi, duration: theta / omega_rel / FRAC_PI_2 }
    }

    pub fn idle(duration: f64) -> Self {
        Self { theta: 0.0, omega_rel: 1.0, phi: 0.0, duration }
    }

    pub fn is_idle(&self) -> bool {
        self.theta == 0.0
    }

    /// Unit drive axis `(cos φ, sin φ, 0)`.
    pub fn axis(&self) -> [f64; 3] {
        let (s, c) = self.phi.sin_cos();
        [c, s, 0.0]
    }

    pub fn ideal_unitary(&self) -> Unitary2 {
        let [nx, ny, _] = self.axis();
        Unitary2::exp_pauli(self.theta * nx, self.theta * ny, 0.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub family: Family,
    pub target: CliffordIndex,
    pub segments: Vec<PulseSegment>,
    /// Frame shifts applied before and after the driven core; they take no time.
    pub phi_pre: f64,
    pub phi_post: f64,
}

impl PulseSchedule {
    pub fn duration(&self) -> f64 {
        schedule_duration(self)
    }
}

pub fn schedule_duration(schedule: &PulseSchedule) -> f64 {
    schedule.segments.iter().map(|s| s.duration).sum()
}

/// Noise-free product of the segments (the core only, without frame shifts).
pub fn ideal_unitary(schedule: &PulseSchedule) -> Unitary2 {
    schedule
        .segments
        .iter()
        .fold(Unitary2::IDENTITY, |acc, s| s.ideal_unitary() * acc)
}

/// WAMF outer/inner parameters `(X0, X3)` in units of π.
fn wamf_parameters(theta_t: f64) -> Result<(f64, f64)> {
    const TABLE: [(f64, f64, f64); 3] = [
        (FRAC_PI_4, 2.25, 0.36),
        (FRAC_PI_2, 2.5, 0.64),
        (PI, 3.0, 1.0),
    ];
    TABLE
        .iter()
        .find(|(t, _, _)| (t - theta_t).abs() < 1e-12)
        .map(|&(_, x0, x3)| (x0 * PI, x3 * PI))
        .ok_or(Error::UnsupportedWamfAngle(theta_t))
}

/// Segments realizing a rotation by `theta_t > 0` about the axis at phase `phi0`.
pub fn construct(family: Family, theta_t: f64, phi0: f64) -> Result<Vec<PulseSegment>> {
    let seg = |theta: f64, rate: f64, phi: f64| PulseSegment::driven(theta, rate, phi0 + phi);
    Ok(match family {
        Family::Primitive => vec![seg(theta_t, 1.0, 0.0)],
        Family::Corpse => {
            let k = ((theta_t / 2.0).sin() / 2.0).asin();
            vec![
                seg(2.0 * PI + theta_t / 2.0 - k, 1.0, 0.0),
                seg(2.0 * PI - 2.0 * k, 1.0, PI),
                seg(theta_t / 2.0 - k, 1.0, 0.0),
            ]
        }
        Family::Wamf => {
            let (x0, x3) = wamf_parameters(theta_t)?;
            vec![
                seg((x0 + x3) / 4.0, 1.0, 0.0),
                seg((x0 - x3) / 2.0, (x0 - x3) / (x0 + x3), 0.0),
                seg((x0 + x3) / 4.0, 1.0, 0.0),
            ]
        }
        Family::Bb1 => {
            let phi_k = (-theta_t / (4.0 * PI)).acos();
            vec![
                seg(theta_t, 1.0, 0.0),
                seg(PI, 1.0, phi_k),
                seg(2.0 * PI, 1.0, 3.0 * phi_k),
                seg(PI, 1.0, phi_k),
            ]
        }
    })
}

fn compile_core(core: Core, family: Family) -> Result<Vec<PulseSegment>> {
    match (core, family) {
        (Core::None, _) => Ok(Vec::new()),
        (Core::Wait, Family::Primitive) => Ok(vec![PulseSegment::idle(WAIT_DURATION)]),
        // rotary echo: X(π) followed by X(-π)
        (Core::Wait, _) => Ok(vec![
            PulseSegment::driven(PI, 1.0, 0.0),
            PulseSegment::driven(PI, 1.0, PI),
        ]),
        (core, family) => {
            let (axis, angle) = core.target().expect("driven core");
            let mut phi0 = match axis {
                CoreAxis::X => 0.0,
                CoreAxis::Y => FRAC_PI_2,
            };
            if angle < 0.0 {
                phi0 += PI;
            }
            construct(family, angle.abs(), phi0)
        }
    }
}

pub fn compile(clifford: &CliffordElement, family: Family) -> Result<PulseSchedule> {
    Ok(PulseSchedule {
        family,
        target: clifford.index,
        segments: compile_core(clifford.core, family)?,
        phi_pre: clifford.phi_pre,
        phi_post: clifford.phi_post,
    })
}

/// Precompiled schedules for all 24 Cliffords, indexed by slot.
pub fn schedule_table(family: Family) -> &'static [PulseSchedule] {
    static TABLES: [OnceLock<Vec<PulseSchedule>>; 4] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let slot = Family::ALL.iter().position(|&f| f == family).unwrap();
    TABLES[slot].get_or_init(|| {
        clifford_table()
            .elements()
            .iter()
            .map(|e| compile(e, family).expect("every Clifford core compiles"))
            .collect()
    })
}

/// Mean Clifford duration under uniform sampling.
pub fn mean_clifford_duration(family: Family) -> f64 {
    schedule_table(family).iter().map(schedule_duration).sum::<f64>() / 24.0
}
