//! Scenario files: flat TOML with dotted keys.

use std::path::{Path, PathBuf};

use fermisig_core::evolution::{EvolutionConfig, Integrator};
use fermisig_core::potential::{amplitude_for_l1, Envelope, PotentialKind, PotentialSpec, SpatialProfile};
use fermisig_core::signature::{QuadRule, QuadratureConfig};
use fermisig_core::spinor::build_dirac_representation;
use serde::{Deserialize, Serialize};

use crate::suites::Suite;
use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "homogeneous_3p1")]
    Homogeneous3p1,
    #[serde(rename = "lattice_1p1")]
    Lattice1p1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub regime: Regime,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub suites: Vec<String>,
    #[serde(default)]
    pub t0: f64,
    #[serde(default)]
    pub mass: MassSection,
    #[serde(default)]
    pub k_grid: KGridSection,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub lattice: LatticeSection,
    #[serde(default)]
    pub checks: ChecksSection,
}

/// A single mass, or an interval `(m_l, m_r)` with `n_nodes` Gauss nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassSection {
    #[serde(default = "one")]
    pub value: f64,
    pub m_l: Option<f64>,
    pub m_r: Option<f64>,
    #[serde(default = "default_mass_nodes")]
    pub n_nodes: usize,
}

impl Default for MassSection {
    fn default() -> Self {
        MassSection { value: 1.0, m_l: None, m_r: None, n_nodes: default_mass_nodes() }
    }
}

impl MassSection {
    /// The interval used by the family suites; defaults to `(0.8, 1.2)`.
    pub fn interval(&self) -> (f64, f64) {
        (self.m_l.unwrap_or(0.8), self.m_r.unwrap_or(1.2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGridSection {
    #[serde(default = "default_k_max")]
    pub k_max: f64,
    #[serde(default = "default_n_k")]
    pub n_k: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
    /// Direction of the momentum ray in 3+1.
    #[serde(default = "default_direction")]
    pub direction: Vec<f64>,
}

impl Default for KGridSection {
    fn default() -> Self {
        KGridSection { k_max: default_k_max(), n_k: default_n_k(), spacing: default_spacing(), direction: default_direction() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindName {
    Vacuum,
    Scalar,
    Electric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeName {
    Gaussian,
    Power,
    Bump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialSection {
    pub length: f64,
    pub cos_coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(default = "default_kind")]
    pub kind: KindName,
    #[serde(default = "default_envelope")]
    pub envelope: EnvelopeName,
    pub sigma: Option<f64>,
    pub epsilon: Option<f64>,
    pub half_width: Option<f64>,
    /// Either the amplitude `λ` or the target `∫|𝓑|_{C⁰}`; not both.
    pub amplitude: Option<f64>,
    pub l1_c0: Option<f64>,
    pub t_max: Option<f64>,
    pub spatial_profile: Option<SpatialSection>,
}

impl Default for PotentialSection {
    fn default() -> Self {
        PotentialSection {
            kind: KindName::Vacuum,
            envelope: EnvelopeName::Gaussian,
            sigma: None,
            epsilon: None,
            half_width: None,
            amplitude: None,
            l1_c0: None,
            t_max: None,
            spatial_profile: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    /// Defaults to the window just covering the potential support.
    pub t_window: Option<f64>,
    pub n_1d: Option<usize>,
    pub n_2d: Option<usize>,
    pub rule: Option<RuleName>,
    #[serde(default)]
    pub estimate_error: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleName {
    GaussLegendre,
    Simpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorName {
    Magnus4,
    Rk4Fixed,
    Magnus2Adaptive,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    pub integrator: Option<IntegratorName>,
    pub step: Option<f64>,
    pub tolerance: Option<f64>,
    pub unitarity_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    #[serde(default = "default_lattice_n")]
    pub n: usize,
    #[serde(default = "default_lattice_length")]
    pub length: f64,
}

impl Default for LatticeSection {
    fn default() -> Self {
        LatticeSection { n: default_lattice_n(), length: default_lattice_length() }
    }
}

/// Suite-specific knobs with defaults sized for a laptop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    /// Second anchor for the transport check of the signature suite.
    pub t0_alt: Option<f64>,
    #[serde(default = "default_contour_nodes")]
    pub contour_nodes: usize,
    #[serde(default = "default_mop_pairs")]
    pub mop_pairs: usize,
    #[serde(default = "default_projector_modes")]
    pub projector_modes: usize,
    #[serde(default = "default_state_modes")]
    pub state_modes: usize,
    #[serde(default = "default_dist_samples")]
    pub dist_samples: usize,
    #[serde(default = "default_mixing_order")]
    pub mixing_order: usize,
    /// Momenta checked against the mass-family oracle (slow).
    #[serde(default)]
    pub oracle_samples: usize,
}

impl Default for ChecksSection {
    fn default() -> Self {
        ChecksSection {
            t0_alt: None,
            contour_nodes: default_contour_nodes(),
            mop_pairs: default_mop_pairs(),
            projector_modes: default_projector_modes(),
            state_modes: default_state_modes(),
            dist_samples: default_dist_samples(),
            mixing_order: default_mixing_order(),
            oracle_samples: 0,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_mass_nodes() -> usize {
    48
}
fn default_k_max() -> f64 {
    10.0
}
fn default_n_k() -> usize {
    64
}
fn default_spacing() -> Spacing {
    Spacing::Linear
}
fn default_direction() -> Vec<f64> {
    vec![0.0, 0.0, 1.0]
}
fn default_kind() -> KindName {
    KindName::Vacuum
}
fn default_envelope() -> EnvelopeName {
    EnvelopeName::Gaussian
}
fn default_lattice_n() -> usize {
    64
}
fn default_lattice_length() -> f64 {
    16.0 * std::f64::consts::PI
}
fn default_contour_nodes() -> usize {
    64
}
fn default_mop_pairs() -> usize {
    20
}
fn default_projector_modes() -> usize {
    8
}
fn default_state_modes() -> usize {
    4
}
fn default_dist_samples() -> usize {
    10
}
fn default_mixing_order() -> usize {
    3
}

/// A parsed config together with the raw bytes it was read from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub raw: String,
}

pub fn load(path: &Path) -> Result<LoadedConfig, LabError> {
    let raw = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
    let config = parse(&raw)?;
    Ok(LoadedConfig { config, raw })
}

pub fn parse(raw: &str) -> Result<ScenarioConfig, LabError> {
    toml::from_str(raw).map_err(|e| LabError::Config(e.to_string()))
}

impl ScenarioConfig {
    pub fn spacetime_dim(&self) -> usize {
        match self.regime {
            Regime::Homogeneous3p1 => 4,
            Regime::Lattice1p1 => 2,
        }
    }

    pub fn potential(&self) -> Result<PotentialSpec, LabError> {
        let p = &self.potential;
        if p.kind == KindName::Vacuum {
            if p.amplitude.is_some_and(|a| a != 0.0) || p.l1_c0.is_some_and(|a| a != 0.0) {
                return Err(LabError::Config("a vacuum potential takes no amplitude".into()));
            }
            return Ok(PotentialSpec::vacuum());
        }
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| LabError::Config(format!("potential.{name} is required for this envelope")))
        };
        let envelope = match p.envelope {
            EnvelopeName::Gaussian => Envelope::Gaussian { sigma: need(p.sigma, "sigma")? },
            EnvelopeName::Power => Envelope::Power { epsilon: need(p.epsilon, "epsilon")? },
            EnvelopeName::Bump => Envelope::Bump { half_width: need(p.half_width, "half_width")? },
        };
        let kind = match p.kind {
            KindName::Scalar => PotentialKind::Scalar,
            KindName::Electric => PotentialKind::Electric,
            KindName::Vacuum => unreachable!(),
        };
        let amplitude = match (p.amplitude, p.l1_c0) {
            (Some(a), None) => a,
            (None, Some(l1)) => amplitude_for_l1(&envelope, l1),
            _ => return Err(LabError::Config("give exactly one of potential.amplitude and potential.l1_c0".into())),
        };
        let mut spec = PotentialSpec::new(kind, amplitude, envelope)?;
        if let Some(t) = p.t_max {
            if !(t > 0.0) {
                return Err(LabError::Config(format!("potential.t_max must be positive, got {t}")));
            }
            spec = spec.with_t_max(t);
        }
        if let Some(s) = &p.spatial_profile {
            if self.regime != Regime::Lattice1p1 {
                return Err(LabError::Config("a spatial profile needs regime = \"lattice_1p1\"".into()));
            }
            spec = spec.with_spatial_profile(SpatialProfile { length: s.length, cos_coeffs: s.cos_coeffs.clone() });
        }
        Ok(spec)
    }

    pub fn quadrature(&self, pot: &PotentialSpec, t0: f64) -> QuadratureConfig {
        let base = QuadratureConfig::covering(pot, t0);
        let q = &self.quadrature;
        QuadratureConfig {
            t_window: q.t_window.unwrap_or(base.t_window),
            n_1d: q.n_1d.unwrap_or(base.n_1d),
            n_2d: q.n_2d.unwrap_or(base.n_2d),
            rule: match q.rule {
                Some(RuleName::Simpson) => QuadRule::Simpson,
                _ => QuadRule::GaussLegendre,
            },
            estimate_error: q.estimate_error,
        }
    }

    pub fn evolution(&self) -> EvolutionConfig {
        let d = EvolutionConfig::default();
        let e = &self.evolution;
        EvolutionConfig {
            integrator: match e.integrator {
                Some(IntegratorName::Rk4Fixed) => Integrator::Rk4Fixed,
                Some(IntegratorName::Magnus2Adaptive) => Integrator::Magnus2Adaptive,
                _ => Integrator::Magnus4,
            },
            step: e.step.or(d.step),
            tolerance: e.tolerance.unwrap_or(d.tolerance),
            unitarity_tol: e.unitarity_tol.unwrap_or(d.unitarity_tol),
        }
    }

    /// Momentum magnitudes of the scan.
    pub fn k_values(&self) -> Vec<f64> {
        fermisig_core::signature::k_grid(self.k_grid.k_max, self.k_grid.n_k, self.k_grid.spacing == Spacing::Log)
    }

    /// Unit direction of the momentum ray for the current regime.
    pub fn direction(&self) -> Vec<f64> {
        match self.regime {
            Regime::Lattice1p1 => vec![1.0],
            Regime::Homogeneous3p1 => {
                let n = self.k_grid.direction.iter().map(|x| x * x).sum::<f64>().sqrt();
                self.k_grid.direction.iter().map(|x| x / n).collect()
            }
        }
    }

    /// Requested suites in execution order.
    pub fn suite_order(&self) -> Result<Vec<Suite>, LabError> {
        let mut out = Vec::new();
        for name in &self.suites {
            let s = Suite::from_name(name).ok_or_else(|| LabError::Config(format!("unknown suite {name:?}")))?;
            if !out.contains(&s) {
                out.push(s);
            }
        }
        out.sort();
        Ok(out)
    }

    /// Checks everything that can be checked before any computation.
    pub fn validate(&self) -> Result<(), LabError> {
        let suites = self.suite_order()?;
        let centre = match (self.mass.m_l, self.mass.m_r) {
            (Some(l), Some(r)) => {
                if !(l > 0.0 && r > l) {
                    return Err(LabError::Config(format!("mass interval ({l}, {r}) must satisfy 0 < m_l < m_r")));
                }
                if self.mass.n_nodes < 2 {
                    return Err(LabError::Config("mass.n_nodes must be at least 2".into()));
                }
                0.5 * (l + r)
            }
            (None, None) => self.mass.value,
            _ => return Err(LabError::Config("give both mass.m_l and mass.m_r or neither".into())),
        };
        if (centre - 1.0).abs() > 1e-12 || (self.mass.value - 1.0).abs() > 1e-12 {
            return Err(LabError::Config(format!("masses are in units of the central mass, which must be 1 (got {centre})")));
        }
        let k = &self.k_grid;
        if !(k.k_max > 0.0) || k.n_k == 0 {
            return Err(LabError::Config("k_grid needs k_max > 0 and n_k ≥ 1".into()));
        }
        if self.regime == Regime::Homogeneous3p1
            && (k.direction.len() != 3 || k.direction.iter().all(|&x| x == 0.0))
        {
            return Err(LabError::Config("k_grid.direction must be a nonzero 3-vector".into()));
        }
        if self.checks.contour_nodes < 3 {
            return Err(LabError::Config("checks.contour_nodes must be at least 3".into()));
        }
        let pot = self.potential()?;
        let rep = build_dirac_representation(self.spacetime_dim())?;
        if !pot.is_vacuum() {
            pot.decay_norms(&rep)?;
            let grid: Vec<f64> = (0..=200).map(|j| -pot.t_max + 2.0 * pot.t_max * j as f64 / 200.0).collect();
            let positions: Vec<f64> = match &pot.spatial_profile {
                Some(s) => (0..16).map(|j| s.length * j as f64 / 16.0).collect(),
                None => Vec::new(),
            };
            let defect = pot.symmetry_audit(&rep, &grid, &positions)?;
            if defect > 1e-12 {
                return Err(LabError::Config(format!("potential is not symmetric: defect {defect:e}")));
            }
        }
        self.evolution().validate()?;
        let qcfg = self.quadrature(&pot, self.t0);
        qcfg.validate(&pot, self.t0)?;
        if let Some(t) = self.checks.t0_alt {
            self.quadrature(&pot, t).validate(&pot, t)?;
        }
        for s in &suites {
            s.check_regime(self.regime, &pot)?;
        }
        if self.regime == Regime::Lattice1p1 && self.lattice.n < 2 {
            return Err(LabError::Config("lattice.n must be at least 2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
regime = "homogeneous_3p1"
output_dir = "out"
suites = ["gap", "vacuum_check"]
potential.kind = "scalar"
potential.envelope = "gaussian"
potential.sigma = 1.0
potential.l1_c0 = 0.3
k_grid.n_k = 4
"#;

    #[test]
    fn dotted_keys_parse_and_suites_sort() {
        let c = parse(BASE).unwrap();
        assert_eq!(c.suite_order().unwrap(), vec![Suite::VacuumCheck, Suite::Gap]);
        assert_eq!(c.k_grid.n_k, 4);
        assert_eq!(c.k_grid.k_max, 10.0);
        c.validate().unwrap();
        let rep = build_dirac_representation(4).unwrap();
        let l1 = c.potential().unwrap().decay_norms(&rep).unwrap().l1_c0;
        assert!((l1 - 0.3).abs() < 1e-9);
    }

    #[test]
    fn short_window_fails_validation() {
        let raw = format!("{BASE}quadrature.t_window = 1.0\n");
        assert!(matches!(parse(&raw).unwrap().validate(), Err(LabError::Core(_))));
    }

    #[test]
    fn unknown_suite_and_keys_rejected() {
        let raw = BASE.replace("\"gap\"", "\"nope\"");
        assert!(matches!(parse(&raw).unwrap().validate(), Err(LabError::Config(_))));
        assert!(parse(&format!("{BASE}potential.colour = 1\n")).is_err());
    }

    #[test]
    fn central_mass_must_be_one() {
        let raw = format!("{BASE}mass.m_l = 0.8\nmass.m_r = 1.4\n");
        assert!(matches!(parse(&raw).unwrap().validate(), Err(LabError::Config(_))));
    }

    #[test]
    fn amplitude_and_l1_are_exclusive() {
        let raw = format!("{BASE}potential.amplitude = 0.1\n");
        assert!(parse(&raw).unwrap().potential().is_err());
    }
}
