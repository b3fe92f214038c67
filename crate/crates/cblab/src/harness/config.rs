//! Scenario configuration: one JSON document drives every study. The
//! exact schema ships in-repo at `schema/scenario.schema.json`.

use crate::lattice::{DomainDescriptor, DomainShape, InteractionStencil};
use crate::potential::{PairKind, PotentialKind, SitePotential};
use crate::reference::{ReferenceFamily, SmoothReference};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StencilSpec {
    Nearest,
    NextNearest,
    Offsets { offsets: Vec<Vec<i64>> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Harmonic,
    LennardJones {
        #[serde(default = "one")]
        well_depth: f64,
        /// Defaults to 2^{-1/6}: unit well depth with the minimum at
        /// unit bond length, so the reference lattice sits near
        /// equilibrium.
        #[serde(default = "lj_sigma_unit_min")]
        sigma: f64,
        #[serde(default = "default_r_min")]
        r_min: f64,
    },
    Morse {
        #[serde(default = "one")]
        depth: f64,
        #[serde(default = "one")]
        stiffness: f64,
        #[serde(default = "one")]
        r_eq: f64,
        #[serde(default = "default_r_min")]
        r_min: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn lj_sigma_unit_min() -> f64 {
    2.0_f64.powf(-1.0 / 6.0)
}

fn default_r_min() -> f64 {
    0.3
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IntegratorSpec {
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl_factor: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
    #[serde(default)]
    pub guard_margin: f64,
}

fn default_cfl() -> f64 {
    0.2
}

fn default_stride() -> usize {
    8
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        Self {
            dt: None,
            cfl_factor: default_cfl(),
            sample_stride: default_stride(),
            guard_margin: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeformationGrid {
    /// A = I with entry (axis, axis) swept over [from, to].
    Uniaxial { axis: usize, from: f64, to: f64, steps: usize },
    /// A = s I, s in [from, to].
    Volumetric { from: f64, to: f64, steps: usize },
    /// A = I + s e_row (x) e_col, s in [from, to].
    Shear { row: usize, col: usize, from: f64, to: f64, steps: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StabilityMapSpec {
    pub deformation: DeformationGrid,
    /// Also evaluate the finite-lattice constant at this spacing.
    #[serde(default)]
    pub eval_eps: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GardingSpec {
    /// Comparison radius of the coercivity statement (fixed across the
    /// eps ladder).
    pub r: f64,
    /// Local stability level; `None` derives 0.95x the smallest sampled
    /// wave-vector constant at the coarsest eps and keeps it fixed.
    #[serde(default)]
    pub lambda1: Option<f64>,
    /// Coefficient-field snapshot time; defaults to t0/2.
    #[serde(default)]
    pub time: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScenarioConfig {
    pub dimension: usize,
    pub domain: DomainShape,
    #[serde(default = "default_stencil")]
    pub stencil: StencilSpec,
    pub potential: PotentialSpec,
    pub reference: ReferenceFamily,
    /// Strictly decreasing lattice spacings.
    pub epsilons: Vec<f64>,
    /// Time horizon of dynamic studies.
    pub t0: f64,
    /// Target convergence rate in (d/2, 2].
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Data-perturbation amplitudes, multiplying eps^gamma-scaled
    /// profiles of the boundary, initial, and force data.
    #[serde(default)]
    pub c_g: f64,
    #[serde(default)]
    pub c_h: f64,
    #[serde(default)]
    pub c_f: f64,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default = "default_mollifier_order")]
    pub mollifier_order: usize,
    #[serde(default = "default_cell_order")]
    pub cell_quad_order: usize,
    /// Snapshot time of the residual study; defaults to t0/2.
    #[serde(default)]
    pub residual_time: Option<f64>,
    /// Time step of the dynamic boundary norm grid; defaults to eps.
    #[serde(default)]
    pub dyn_norm_dt: Option<f64>,
    #[serde(default)]
    pub stability_map: Option<StabilityMapSpec>,
    #[serde(default)]
    pub garding: Option<GardingSpec>,
    #[serde(default = "default_out")]
    pub output_dir: String,
    #[serde(default)]
    pub seed: u64,
}

fn default_stencil() -> StencilSpec {
    StencilSpec::Nearest
}

fn default_gamma() -> f64 {
    2.0
}

fn default_mollifier_order() -> usize {
    crate::reference::DEFAULT_MOLLIFIER_ORDER
}

fn default_cell_order() -> usize {
    crate::reference::DEFAULT_CELL_QUAD_ORDER
}

fn default_out() -> String {
    "out".into()
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dimension;
        if !(1..=3).contains(&d) {
            return Err(Error::Config(format!("dimension {d} not in 1..=3")));
        }
        if self.epsilons.is_empty() {
            return Err(Error::Config("epsilons must be nonempty".into()));
        }
        for w in self.epsilons.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::Config("epsilons must be strictly decreasing".into()));
            }
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Config("epsilons must be positive".into()));
        }
        if !(self.t0 > 0.0) {
            return Err(Error::Config("t0 must be positive".into()));
        }
        let lo = d as f64 / 2.0;
        if !(self.gamma > lo && self.gamma <= 2.0) {
            return Err(Error::Config(format!(
                "gamma = {} outside ({lo}, 2]",
                self.gamma
            )));
        }
        if self.c_g < 0.0 || self.c_h < 0.0 || self.c_f < 0.0 {
            return Err(Error::Config("perturbation amplitudes must be nonnegative".into()));
        }
        // try to build the pieces once so config errors surface early
        self.build_stencil()?;
        self.build_descriptor()?;
        self.build_reference()?;
        Ok(())
    }

    /// d=1 runs are cheap regression surfaces but sit outside the d in
    /// {2,3} hypothesis of the convergence theory; studies label them.
    pub fn dimension_note(&self) -> Option<&'static str> {
        (self.dimension == 1).then_some(
            "d=1 run: outside the d in {2,3} hypothesis of the convergence theory",
        )
    }

    /// The convergence theorem needs gamma > d/2 + 1/(m-1) with m the
    /// smoothness order of the data; m is not a runtime input, so a
    /// gamma within 1/(m-1) of d/2 for moderate m only earns a warning.
    pub fn gamma_slack_warning(&self) -> Option<String> {
        let lo = self.dimension as f64 / 2.0;
        let m = 4.0; // smallest order the theory admits
        if self.gamma <= lo + 1.0 / (m - 1.0) {
            return Some(format!(
                "gamma = {} is within the 1/(m-1) slack above d/2 = {lo}; the convergence \
                 guarantee requires gamma > d/2 + 1/(m-1) for the data smoothness order m",
                self.gamma
            ));
        }
        None
    }

    pub fn build_stencil(&self) -> Result<Arc<InteractionStencil>> {
        let d = self.dimension;
        let st = match &self.stencil {
            StencilSpec::Nearest => InteractionStencil::nearest(d),
            StencilSpec::NextNearest => InteractionStencil::next_nearest(d),
            StencilSpec::Offsets { offsets } => {
                let mut v = Vec::with_capacity(offsets.len());
                for o in offsets {
                    if o.len() != d {
                        return Err(Error::Config(format!(
                            "offset {o:?} must have length {d}"
                        )));
                    }
                    let mut a = [0i64; 3];
                    a[..d].copy_from_slice(o);
                    v.push(a);
                }
                InteractionStencil::new(d, v)?
            }
        };
        Ok(Arc::new(st))
    }

    pub fn build_descriptor(&self) -> Result<DomainDescriptor> {
        DomainDescriptor::new(self.dimension, self.domain.clone())
    }

    pub fn build_potential(&self) -> Result<Arc<SitePotential>> {
        let st = self.build_stencil()?;
        let (kind, r_min) = match &self.potential {
            PotentialSpec::Harmonic => (PotentialKind::Harmonic, 0.0),
            PotentialSpec::LennardJones { well_depth, sigma, r_min } => (
                PotentialKind::Pair(PairKind::LennardJones {
                    well_depth: *well_depth,
                    sigma: *sigma,
                }),
                *r_min,
            ),
            PotentialSpec::Morse { depth, stiffness, r_eq, r_min } => (
                PotentialKind::Pair(PairKind::Morse {
                    depth: *depth,
                    stiffness: *stiffness,
                    r_eq: *r_eq,
                }),
                *r_min,
            ),
        };
        Ok(Arc::new(SitePotential::new(st, kind, r_min)))
    }

    pub fn build_reference(&self) -> Result<Arc<SmoothReference>> {
        Ok(Arc::new(SmoothReference::new(self.dimension, self.reference.clone())?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE: &str = r#"{
        "dimension": 1,
        "domain": {"shape": "box", "lo": [0.0], "hi": [1.0]},
        "stencil": {"kind": "nearest"},
        "potential": {"kind": "harmonic"},
        "reference": {"family": "sinusoid", "amplitude": 0.05, "wave": [1], "omega": 3.141592653589793, "direction": [1.0]},
        "epsilons": [0.0625, 0.03125],
        "t0": 0.5,
        "seed": 7
    }"#;

    #[test]
    fn sample_config_parses_with_defaults() {
        let cfg = ScenarioConfig::from_json(SAMPLE).unwrap();
        assert_eq!(cfg.gamma, 2.0);
        assert_eq!(cfg.integrator.cfl_factor, 0.2);
        assert_eq!(cfg.mollifier_order, 32);
        assert_eq!(cfg.output_dir, "out");
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn increasing_epsilons_rejected() {
        let bad = SAMPLE.replace("[0.0625, 0.03125]", "[0.03125, 0.0625]");
        assert!(matches!(ScenarioConfig::from_json(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn gamma_out_of_range_rejected() {
        let bad = SAMPLE.replace("\"seed\": 7", "\"seed\": 7, \"gamma\": 2.5");
        assert!(ScenarioConfig::from_json(&bad).is_err());
        let bad2 = SAMPLE.replace("\"seed\": 7", "\"seed\": 7, \"gamma\": 0.5");
        assert!(ScenarioConfig::from_json(&bad2).is_err());
    }

    #[test]
    fn lj_defaults_put_minimum_at_unit_distance() {
        let cfg = ScenarioConfig::from_json(
            &SAMPLE.replace(r#"{"kind": "harmonic"}"#, r#"{"kind": "lennard_jones"}"#),
        )
        .unwrap();
        match cfg.potential {
            PotentialSpec::LennardJones { sigma, .. } => {
                assert!((sigma * 2.0_f64.powf(1.0 / 6.0) - 1.0).abs() < 1e-15);
            }
            _ => panic!(),
        }
    }
}
