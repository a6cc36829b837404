use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::DpParams;
use crate::strain::LsqParams;
use crate::types::NuBounds;

/// Tracking method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Soul,
    L1Soul,
    #[serde(rename = "mechsoul")]
    MechSoul,
    #[serde(rename = "l1_mechsoul")]
    L1MechSoul,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Soul, Method::L1Soul, Method::MechSoul, Method::L1MechSoul];

    pub fn is_l1(self) -> bool {
        matches!(self, Method::L1Soul | Method::L1MechSoul)
    }

    pub fn is_mechanical(self) -> bool {
        matches!(self, Method::MechSoul | Method::L1MechSoul)
    }

    /// The objective this method minimizes.
    pub fn variant(self) -> Variant {
        match self {
            Method::Soul => Variant::L2,
            Method::MechSoul => Variant::L2m,
            Method::L1Soul => Variant::L1,
            Method::L1MechSoul => Variant::L1m,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Soul => "soul",
            Method::L1Soul => "l1_soul",
            Method::MechSoul => "mechsoul",
            Method::L1MechSoul => "l1_mechsoul",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "soul" => Ok(Method::Soul),
            "l1_soul" => Ok(Method::L1Soul),
            "mechsoul" => Ok(Method::MechSoul),
            "l1_mechsoul" => Ok(Method::L1MechSoul),
            _ => Err(Error::Param(format!("unknown method '{s}'"))),
        }
    }
}

/// Objective selector: quadratic or smoothed-L1 continuity, with or
/// without the mechanical term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    L2,
    L2m,
    L1,
    L1m,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::L2, Variant::L2m, Variant::L1, Variant::L1m];

    pub fn is_l1(self) -> bool {
        matches!(self, Variant::L1 | Variant::L1m)
    }

    pub fn has_mechanical(self) -> bool {
        matches!(self, Variant::L2m | Variant::L1m)
    }
}

/// Scalar biases subtracted from the axial strain and lateral strain
/// continuity terms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BiasState {
    pub eps_a: f64,
    pub eps_l: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub w: f64,
    pub gamma: f64,
    pub alpha3: f64,

    pub alpha1s: f64,
    pub alpha2s: f64,
    pub beta1s: f64,
    pub beta2s: f64,
    pub gamma_s: f64,
    pub w_f: f64,
    pub w_s: f64,
    pub alpha3s: f64,
    pub eta_first: f64,
    pub eta_second: f64,
    pub eta_m: f64,

    pub nu_init: f64,
    pub nu_min: f64,
    pub nu_max: f64,
    /// Axial strains smaller than this do not update the EPR.
    pub s_floor: f64,
    pub epr_median_radius: usize,

    pub outer_iterations: usize,
    /// First outer iteration (1-based) at which the EPR is re-estimated.
    pub epr_update_from_iteration: usize,
    pub update_bias: bool,
    /// Stop once the accepted update is below this, in samples.
    pub step_tolerance: f64,
    /// A run whose last iteration lowered the objective by less than this
    /// fraction also counts as converged.
    pub cost_tolerance: f64,
    pub linear_solver_tolerance: f64,

    /// Strain windows used to re-estimate the EPR between iterations.
    pub internal_strain: LsqParams,
    /// Strain windows for the reported strain and EPR.
    pub report_strain: LsqParams,
    pub dp: DpParams,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            alpha1: 20.0,
            alpha2: 1.0,
            beta1: 5.0,
            beta2: 1.0,
            w: 0.1,
            gamma: 0.01,
            alpha3: 20.0,

            alpha1s: 0.4,
            alpha2s: 0.02,
            beta1s: 0.1,
            beta2s: 0.03,
            gamma_s: 0.01,
            w_f: 1.0,
            w_s: 0.1,
            alpha3s: 0.045,
            eta_first: 0.001,
            eta_second: 0.0005,
            eta_m: 0.001,

            nu_init: 0.49,
            nu_min: 0.0,
            nu_max: 0.5,
            s_floor: 1e-5,
            epr_median_radius: 2,

            outer_iterations: 10,
            epr_update_from_iteration: 2,
            update_bias: true,
            step_tolerance: 1e-4,
            cost_tolerance: 1e-4,
            linear_solver_tolerance: 1e-10,

            internal_strain: LsqParams::internal(),
            report_strain: LsqParams::default(),
            dp: DpParams::default(),
        }
    }
}

impl SolverParams {
    pub fn nu_bounds(&self) -> NuBounds {
        NuBounds {
            min: self.nu_min,
            max: self.nu_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("w", self.w),
            ("gamma", self.gamma),
            ("alpha3", self.alpha3),
            ("alpha1s", self.alpha1s),
            ("alpha2s", self.alpha2s),
            ("beta1s", self.beta1s),
            ("beta2s", self.beta2s),
            ("gamma_s", self.gamma_s),
            ("w_f", self.w_f),
            ("w_s", self.w_s),
            ("alpha3s", self.alpha3s),
        ];
        for (name, v) in weights {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Param(format!("{name} must be a non-negative number, got {v}")));
            }
        }
        for (name, v) in [("eta_first", self.eta_first), ("eta_second", self.eta_second), ("eta_m", self.eta_m)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Param(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.nu_min <= self.nu_init && self.nu_init <= self.nu_max) {
            return Err(Error::Param(format!(
                "nu_init {} outside [{}, {}]",
                self.nu_init, self.nu_min, self.nu_max
            )));
        }
        if !(self.s_floor >= 0.0) {
            return Err(Error::Param("s_floor must be non-negative".into()));
        }
        if self.outer_iterations == 0 || self.epr_update_from_iteration == 0 {
            return Err(Error::Param("iteration counts must be positive".into()));
        }
        if !(self.linear_solver_tolerance > 0.0 && self.step_tolerance >= 0.0 && self.cost_tolerance >= 0.0) {
            return Err(Error::Param("tolerances must be positive".into()));
        }
        self.internal_strain.validate()?;
        self.report_strain.validate()
    }

    /// Copy with the mechanical weights cleared for non-mechanical methods.
    pub fn for_method(&self, method: Method) -> Self {
        let mut p = self.clone();
        if !method.is_mechanical() {
            p.alpha3 = 0.0;
            p.alpha3s = 0.0;
        }
        p
    }
}
