//! Interacting time evolution per momentum block: Hamiltonian, Magnus and
//! Runge-Kutta propagation, cached propagators at quadrature nodes, the
//! Lippmann-Schwinger iteration and the commutator identity.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{expm, expm_hermitian2, max_abs, unitarity_defect, Mat, Vector, C64, I};
use crate::potential::{PotentialKind, PotentialSpec};
use crate::quadrature::{gauss_legendre, integration_matrix};
use crate::spinor::{vacuum_evolution, vacuum_hamiltonian, MomentumMode, SpinorRep};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Fourth-order commutator-free Magnus with two Gauss nodes per step.
    Magnus4,
    Rk4Fixed,
    /// Exponential midpoint rule with step-doubling control.
    Magnus2Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub integrator: Integrator,
    /// Fixed step; `None` selects `min(0.01, 0.1/ω)`.
    pub step: Option<f64>,
    /// Local error tolerance of the adaptive integrator.
    pub tolerance: f64,
    pub unitarity_tol: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig { integrator: Integrator::Magnus4, step: None, tolerance: 1e-12, unitarity_tol: 1e-10 }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let step_ok = self.step.is_none_or(|h| h > 0.0 && h.is_finite());
        if !step_ok {
            return Err(Error::Config("evolution step must be positive".into()));
        }
        if self.integrator == Integrator::Magnus2Adaptive && !(self.tolerance > 0.0) {
            return Err(Error::Config("adaptive integration needs a positive tolerance".into()));
        }
        if !(self.unitarity_tol >= 1e-12) {
            return Err(Error::Config(format!("unitarity_tol must be at least 1e-12, got {}", self.unitarity_tol)));
        }
        Ok(())
    }

    pub fn step_for(&self, omega: f64) -> f64 {
        self.step.unwrap_or_else(|| 0.01f64.min(0.1 / omega))
    }
}

/// `H̃(t;k) = γ⁰(γ⃗·k + m) − γ⁰𝓑(t)`.
pub fn hamiltonian_block(rep: &SpinorRep, mode: &MomentumMode, pot: &PotentialSpec, t: f64) -> Result<Mat> {
    BlockHamiltonian::new(rep, mode, pot)?.at(t)
}

/// Precomputed pieces of `H̃(t;k)` for repeated evaluation.
#[derive(Debug, Clone)]
pub struct BlockHamiltonian<'a> {
    rep: &'a SpinorRep,
    pot: &'a PotentialSpec,
    pub h0: Mat,
    coupling: Option<Mat>,
}

impl<'a> BlockHamiltonian<'a> {
    pub fn new(rep: &'a SpinorRep, mode: &MomentumMode, pot: &'a PotentialSpec) -> Result<Self> {
        if !pot.is_homogeneous() {
            return Err(Error::Regime("momentum blocks need a spatially homogeneous potential".into()));
        }
        let coupling = match pot.kind {
            PotentialKind::Scalar => Some(rep.gamma0().clone()),
            PotentialKind::Electric => Some(rep.gamma0() * rep.gamma0()),
            PotentialKind::Custom(_) => None,
        };
        Ok(BlockHamiltonian { rep, pot, h0: vacuum_hamiltonian(rep, mode), coupling })
    }

    /// `𝒱(t) = −γ⁰𝓑(t)`.
    pub fn perturbation(&self, t: f64) -> Result<Mat> {
        match &self.coupling {
            Some(g) => Ok(g.scale(-self.pot.time_factor(t))),
            None => Ok(-(self.rep.gamma0() * self.pot.evaluate(self.rep, t, None)?)),
        }
    }

    pub fn at(&self, t: f64) -> Result<Mat> {
        Ok(&self.h0 + self.perturbation(t)?)
    }

    pub fn dt(&self, t: f64) -> Result<Mat> {
        Ok(-(self.rep.gamma0() * self.pot.evaluate_dt(self.rep, t, None)?))
    }
}

const CF4_A1: f64 = 0.25 + 0.288_675_134_594_812_9; // 1/4 + √3/6
const CF4_A2: f64 = 0.25 - 0.288_675_134_594_812_9;
const GAUSS2_C1: f64 = 0.5 - 0.288_675_134_594_812_9;
const GAUSS2_C2: f64 = 0.5 + 0.288_675_134_594_812_9;

fn minus_i_h(h: f64, a: &Mat) -> Mat {
    a.map(|z| z * C64::new(0.0, -h))
}

fn cf4_step(ham: &BlockHamiltonian, t: f64, h: f64) -> Result<Mat> {
    let h1 = ham.at(t + GAUSS2_C1 * h)?;
    let h2 = ham.at(t + GAUSS2_C2 * h)?;
    let (g1, g2) = (h1.scale(CF4_A1) + h2.scale(CF4_A2), h1.scale(CF4_A2) + h2.scale(CF4_A1));
    if g1.nrows() == 2 {
        return Ok(expm_hermitian2(h, &g2) * expm_hermitian2(h, &g1));
    }
    let first = expm(&minus_i_h(h, &g1));
    let second = expm(&minus_i_h(h, &g2));
    Ok(second * first)
}

fn midpoint_step(ham: &BlockHamiltonian, t: f64, h: f64) -> Result<Mat> {
    Ok(expm(&minus_i_h(h, &ham.at(t + 0.5 * h)?)))
}

fn rk4_step(ham: &BlockHamiltonian, t: f64, h: f64, u: &Mat) -> Result<Mat> {
    let f = |s: f64, y: &Mat| -> Result<Mat> { Ok((ham.at(s)? * y) * (-I)) };
    let k1 = f(t, u)?;
    let k2 = f(t + 0.5 * h, &(u + k1.scale(0.5 * h)))?;
    let k3 = f(t + 0.5 * h, &(u + k2.scale(0.5 * h)))?;
    let k4 = f(t + h, &(u + k3.scale(h)))?;
    Ok(u + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0))
}

/// Numerical propagator from `a` to `b` (either direction) for the full `H̃`.
fn integrate(ham: &BlockHamiltonian, a: f64, b: f64, omega: f64, cfg: &EvolutionConfig) -> Result<Mat> {
    let n = ham.h0.nrows();
    let span = b - a;
    let mut u = Mat::identity(n, n);
    if span == 0.0 {
        return Ok(u);
    }
    match cfg.integrator {
        Integrator::Magnus4 | Integrator::Rk4Fixed => {
            let steps = (libm::ceil(span.abs() / cfg.step_for(omega)) as usize).max(1);
            let h = span / steps as f64;
            for j in 0..steps {
                let t = a + h * j as f64;
                u = match cfg.integrator {
                    Integrator::Magnus4 => cf4_step(ham, t, h)? * u,
                    _ => rk4_step(ham, t, h, &u)?,
                };
            }
        }
        Integrator::Magnus2Adaptive => {
            let dir = span.signum();
            let mut h = cfg.step_for(omega).min(span.abs());
            let mut t = a;
            let mut guard = 0usize;
            while (b - t) * dir > 0.0 {
                guard += 1;
                if guard > 50_000_000 {
                    return Err(Error::Integration(format!("adaptive step collapsed near t = {t}")));
                }
                let hs = h.min((b - t) * dir) * dir;
                let full = midpoint_step(ham, t, hs)?;
                let half = midpoint_step(ham, t + 0.5 * hs, 0.5 * hs)? * midpoint_step(ham, t, 0.5 * hs)?;
                let err = max_abs(&(&full - &half));
                if err <= cfg.tolerance || h < 1e-12 {
                    u = half * u;
                    t += hs;
                }
                let factor = if err == 0.0 { 2.0 } else { (0.9 * libm::cbrt(cfg.tolerance / err)).clamp(0.2, 2.0) };
                h *= factor;
            }
        }
    }
    Ok(u)
}

/// `Ũ(b,a;k)`: vacuum closed form outside the support of `𝓑`, numerical inside.
pub fn propagate(
    rep: &SpinorRep,
    mode: &MomentumMode,
    ham: &BlockHamiltonian,
    pot: &PotentialSpec,
    b: f64,
    a: f64,
    cfg: &EvolutionConfig,
) -> Result<Mat> {
    let (lo, hi) = pot.support();
    let (x, y) = if a <= b { (a, b) } else { (b, a) };
    let (p, q) = (x.max(lo), y.min(hi));
    if pot.is_vacuum() || p >= q {
        return Ok(vacuum_evolution(rep, mode, b, a));
    }
    let (enter, exit) = if a <= b { (p, q) } else { (q, p) };
    let inner = integrate(ham, enter, exit, mode.omega, cfg)?;
    Ok(vacuum_evolution(rep, mode, b, exit) * inner * vacuum_evolution(rep, mode, enter, a))
}

/// `Ũ(t,t0;k)` solving `i∂_tψ = H̃(t;k)ψ`.
pub fn evolve_block(
    rep: &SpinorRep,
    mode: &MomentumMode,
    pot: &PotentialSpec,
    t: f64,
    t0: f64,
    cfg: &EvolutionConfig,
) -> Result<Mat> {
    cfg.validate()?;
    let ham = BlockHamiltonian::new(rep, mode, pot)?;
    let u = propagate(rep, mode, &ham, pot, t, t0, cfg)?;
    let defect = unitarity_defect(&u);
    if defect > cfg.unitarity_tol {
        return Err(Error::Integration(format!(
            "unitarity defect {defect:e} exceeds {:e} (step {:e}, span {})",
            cfg.unitarity_tol,
            cfg.step_for(mode.omega),
            t - t0
        )));
    }
    Ok(u)
}

/// Interacting propagators `Ũ(node, t0; k)` cached at sorted nodes.
#[derive(Debug, Clone)]
pub struct BlockPropagator {
    pub mode: MomentumMode,
    pub t0: f64,
    pub nodes: Vec<f64>,
    pub u_matrices: Vec<Mat>,
    pub max_unitarity_defect: f64,
}

impl BlockPropagator {
    pub fn build(
        rep: &SpinorRep,
        mode: &MomentumMode,
        pot: &PotentialSpec,
        t0: f64,
        nodes: &[f64],
        cfg: &EvolutionConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let ham = BlockHamiltonian::new(rep, mode, pot)?;
        let mut sorted = nodes.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = rep.spinor_dim;
        let mut u_matrices = vec![Mat::zeros(n, n); sorted.len()];
        let split = sorted.partition_point(|&t| t < t0);
        // forward sweep from t0
        let (mut t_prev, mut u_prev) = (t0, Mat::identity(n, n));
        for i in split..sorted.len() {
            u_prev = propagate(rep, mode, &ham, pot, sorted[i], t_prev, cfg)? * u_prev;
            t_prev = sorted[i];
            u_matrices[i] = u_prev.clone();
        }
        // backward sweep
        let (mut t_prev, mut u_prev) = (t0, Mat::identity(n, n));
        for i in (0..split).rev() {
            u_prev = propagate(rep, mode, &ham, pot, sorted[i], t_prev, cfg)? * u_prev;
            t_prev = sorted[i];
            u_matrices[i] = u_prev.clone();
        }
        let max_unitarity_defect = u_matrices.iter().map(unitarity_defect).fold(0.0, f64::max);
        if max_unitarity_defect > cfg.unitarity_tol {
            return Err(Error::Integration(format!(
                "unitarity defect {max_unitarity_defect:e} exceeds {:e} at step {:e}",
                cfg.unitarity_tol,
                cfg.step_for(mode.omega)
            )));
        }
        Ok(BlockPropagator { mode: mode.clone(), t0, nodes: sorted, u_matrices, max_unitarity_defect })
    }

    /// `Ũ(t_i, t0)`
    pub fn forward(&self, i: usize) -> &Mat {
        &self.u_matrices[i]
    }

    /// `Ũ(t0, t_i) = Ũ(t_i, t0)†`
    pub fn backward(&self, i: usize) -> Mat {
        self.u_matrices[i].adjoint()
    }

    /// `Ũ(t_i, t_j) = Ũ(t_i, t0) Ũ(t_j, t0)†`
    pub fn between(&self, i: usize, j: usize) -> Mat {
        &self.u_matrices[i] * self.u_matrices[j].adjoint()
    }
}

/// Gauss panels covering the segment from `a` to `b` (either order), with
/// breakpoints at the potential support edges.
pub(crate) fn signed_panels(a: f64, b: f64, breaks: &[f64], max_len: f64) -> Vec<(f64, f64)> {
    let (x, y) = if a <= b { (a, b) } else { (b, a) };
    let mut cuts = vec![x, y];
    for &c in breaks {
        if c > x && c < y {
            cuts.push(c);
        }
    }
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let pieces = (libm::ceil((w[1] - w[0]) / max_len) as usize).max(1);
        let h = (w[1] - w[0]) / pieces as f64;
        for j in 0..pieces {
            out.push((w[0] + h * j as f64, w[0] + h * (j + 1) as f64));
        }
    }
    if a > b {
        out.reverse();
        for p in out.iter_mut() {
            *p = (p.1, p.0);
        }
    }
    out
}

/// Iterates `ψ⁽ⁿ⁺¹⁾(t) = U(t,t0)ψ⁰ + i∫_{t0}^{t} U(t,τ)γ⁰𝓑(τ)ψ⁽ⁿ⁾(τ)dτ` starting
/// from the free evolution, with spectral cumulative quadrature on Gauss panels.
pub fn lippmann_schwinger(
    rep: &SpinorRep,
    mode: &MomentumMode,
    pot: &PotentialSpec,
    psi0: &Vector,
    t: f64,
    t0: f64,
    n_iter: usize,
) -> Result<Vector> {
    let free = vacuum_evolution(rep, mode, t, t0) * psi0;
    let (lo, hi) = pot.support();
    let (x, y) = if t0 <= t { (t0, t) } else { (t, t0) };
    let (p, q) = (x.max(lo), y.min(hi));
    if n_iter == 0 || pot.is_vacuum() || p >= q {
        return Ok(free);
    }
    let (enter, exit) = if t0 <= t { (p, q) } else { (q, p) };
    let order = 24;
    let max_len = (0.5f64).min(2.0 / mode.omega).max(1e-3);
    let panels = signed_panels(enter, exit, &[], max_len);
    let base = gauss_legendre(order);
    let mut nodes = Vec::new();
    let mut smats = Vec::new();
    let mut weights = Vec::new();
    for &(a, b) in &panels {
        let rule = base.mapped(a, b);
        smats.push(integration_matrix(&rule, a));
        nodes.extend_from_slice(&rule.nodes);
        weights.extend_from_slice(&rule.weights);
    }
    // interaction picture: φ(τ) = U(t0,τ) ψ(τ)
    let coupling: Vec<Mat> = nodes
        .iter()
        .map(|&tau| -> Result<Mat> {
            let b = pot.evaluate(rep, tau, None)?;
            Ok(vacuum_evolution(rep, mode, t0, tau) * rep.gamma0() * b * vacuum_evolution(rep, mode, tau, t0))
        })
        .collect::<Result<_>>()?;
    let nn = nodes.len();
    let mut phi = vec![psi0.clone(); nn];
    let mut end = psi0.clone();
    for _ in 0..n_iter {
        let integrand: Vec<Vector> = (0..nn).map(|i| &coupling[i] * &phi[i]).collect();
        let mut next = Vec::with_capacity(nn);
        let mut offset = Vector::zeros(psi0.len());
        for (pi, s) in smats.iter().enumerate() {
            let base_idx = pi * order;
            for row in s.iter() {
                let mut acc = offset.clone();
                for (j, &w) in row.iter().enumerate() {
                    acc += integrand[base_idx + j].scale(w);
                }
                next.push(psi0 + acc * I);
            }
            for j in 0..order {
                offset += integrand[base_idx + j].scale(weights[base_idx + j]);
            }
        }
        end = psi0 + offset * I;
        phi = next;
    }
    Ok(vacuum_evolution(rep, mode, t, t0) * end)
}

/// `‖H̃(t)Ũ(t,t0) − Ũ(t,t0)H̃(t0) − ∫_{t0}^{t} Ũ(t,τ) ∂_τH̃(τ) Ũ(τ,t0) dτ‖` with the
/// trapezoidal rule on `n_nodes` equispaced propagator nodes.
pub fn commutator_identity_check(
    rep: &SpinorRep,
    mode: &MomentumMode,
    pot: &PotentialSpec,
    t: f64,
    t0: f64,
    n_nodes: usize,
    cfg: &EvolutionConfig,
) -> Result<f64> {
    let n = n_nodes.max(2);
    let mut nodes: Vec<f64> = (0..n).map(|j| t0 + (t - t0) * j as f64 / (n - 1) as f64).collect();
    nodes[n - 1] = t;
    let prop = BlockPropagator::build(rep, mode, pot, t0, &nodes, cfg)?;
    let ham = BlockHamiltonian::new(rep, mode, pot)?;
    let h = (t - t0) / (n - 1) as f64;
    let idx = |tau: f64| prop.nodes.iter().position(|&s| s == tau).unwrap();
    let last = idx(t);
    let mut integral = Mat::zeros(rep.spinor_dim, rep.spinor_dim);
    for (j, &tau) in nodes.iter().enumerate() {
        let w = if j == 0 || j == n - 1 { 0.5 * h } else { h };
        let i = idx(tau);
        integral += (prop.between(last, i) * ham.dt(tau)? * prop.forward(i)).scale(w);
    }
    let u = prop.forward(last);
    let lhs = ham.at(t)? * u - u * ham.at(t0)?;
    Ok(max_abs(&(lhs - integral)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eye, hermiticity_defect, hermitian_eigen};
    use crate::potential::{gaussian_scalar_pulse, Envelope, PotentialKind};
    use crate::spinor::build_dirac_representation;
    use proptest::prelude::*;

    fn rep4() -> SpinorRep {
        build_dirac_representation(4).unwrap()
    }

    fn pulse(lam: f64) -> PotentialSpec {
        PotentialSpec::new(PotentialKind::Scalar, lam, Envelope::Gaussian { sigma: 1.0 }).unwrap()
    }

    #[test]
    fn free_hamiltonian_at_rest() {
        let rep = rep4();
        let mode = MomentumMode::new(&[0.0, 0.0, 0.0], 1.0).unwrap();
        let h = hamiltonian_block(&rep, &mode, &PotentialSpec::vacuum(), 0.0).unwrap();
        assert!(max_abs(&(&h - rep.gamma0())) < 1e-15);
        let (vals, _) = hermitian_eigen(&h);
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[3] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pulse_hamiltonian_is_hermitian() {
        let rep = rep4();
        let mode = MomentumMode::new(&[0.3, 1.0, -0.2], 1.0).unwrap();
        for kind in [PotentialKind::Scalar, PotentialKind::Electric] {
            let pot = PotentialSpec::new(kind, 0.4, Envelope::Gaussian { sigma: 1.0 }).unwrap();
            assert!(hermiticity_defect(&hamiltonian_block(&rep, &mode, &pot, 0.0).unwrap()) < 1e-14);
        }
    }

    #[test]
    fn spatially_varying_potential_is_regime_error() {
        let rep = build_dirac_representation(2).unwrap();
        let mode = MomentumMode::new(&[1.0], 1.0).unwrap();
        let pot = pulse(0.1).with_spatial_profile(crate::potential::SpatialProfile { length: 5.0, cos_coeffs: vec![1.0] });
        assert!(matches!(hamiltonian_block(&rep, &mode, &pot, 0.0), Err(Error::Regime(_))));
    }

    #[test]
    fn vacuum_matches_closed_form_numerically() {
        // force the numerical path by integrating directly
        let rep = rep4();
        let mode = MomentumMode::new(&[0.0, 2.0, 0.0], 1.0).unwrap();
        let vac = PotentialSpec::vacuum();
        let ham = BlockHamiltonian::new(&rep, &mode, &vac).unwrap();
        let exact = vacuum_evolution(&rep, &mode, 7.0, 0.0);
        for integrator in [Integrator::Magnus4, Integrator::Magnus2Adaptive] {
            let cfg = EvolutionConfig { integrator, ..Default::default() };
            let u = integrate(&ham, 0.0, 7.0, mode.omega, &cfg).unwrap();
            assert!(max_abs(&(u - &exact)) < 1e-9, "{integrator:?}");
        }
        let cfg = EvolutionConfig { integrator: Integrator::Rk4Fixed, step: Some(1e-3), ..Default::default() };
        let u = integrate(&ham, 0.0, 7.0, mode.omega, &cfg).unwrap();
        assert!(max_abs(&(u - &exact)) < 1e-9);
        assert!(max_abs(&(evolve_block(&rep, &mode, &vac, 7.0, 0.0, &EvolutionConfig::default()).unwrap() - exact)) < 1e-14);
    }

    #[test]
    fn equal_times_give_identity() {
        let rep = rep4();
        let mode = MomentumMode::new(&[0.5, 0.0, 0.0], 1.0).unwrap();
        let u = evolve_block(&rep, &mode, &pulse(0.2), 0.3, 0.3, &EvolutionConfig::default()).unwrap();
        assert!(max_abs(&(u - eye(4))) < 1e-15);
    }

    #[test]
    fn group_law_with_pulse() {
        let rep = rep4();
        let mode = MomentumMode::new(&[0.0, 0.0, 1.0], 1.0).unwrap();
        let pot = pulse(0.2);
        let cfg = EvolutionConfig::default();
        let u42 = evolve_block(&rep, &mode, &pot, 4.0, 2.0, &cfg).unwrap();
        let u20 = evolve_block(&rep, &mode, &pot, 2.0, 0.0, &cfg).unwrap();
        let u40 = evolve_block(&rep, &mode, &pot, 4.0, 0.0, &cfg).unwrap();
        assert!(max_abs(&(u42 * u20 - &u40)) < 1e-8);
        let back = evolve_block(&rep, &mode, &pot, 0.0, 4.0, &cfg).unwrap();
        assert!(max_abs(&(back - u40.adjoint())) < 1e-10);
        let half = EvolutionConfig { step: Some(0.005), ..cfg };
        let fine = evolve_block(&rep, &mode, &pot, 4.0, 0.0, &half).unwrap();
        assert!(max_abs(&(fine - u40)) < 1e-10);
    }

    #[test]
    fn factorizes_beyond_cutoff() {
        let rep = rep4();
        let mode = MomentumMode::new(&[0.0, 0.7, 0.0], 1.0).unwrap();
        let pot = pulse(0.2);
        let cfg = EvolutionConfig::default();
        let big_t = pot.t_max;
        let direct = evolve_block(&rep, &mode, &pot, 15.0, -1.0, &cfg).unwrap();
        let split = vacuum_evolution(&rep, &mode, 15.0, big_t) * evolve_block(&rep, &mode, &pot, big_t, -1.0, &cfg).unwrap();
        assert!(max_abs(&(direct - split)) < 1e-12);
    }

    #[test]
    fn rk4_unitarity_failure_is_reported() {
        let rep = rep4();
        let mode = MomentumMode::new(&[0.0, 0.0, 3.0], 1.0).unwrap();
        let cfg = EvolutionConfig { integrator: Integrator::Rk4Fixed, step: Some(0.2), ..Default::default() };
        assert!(matches!(evolve_block(&rep, &mode, &pulse(0.2), 5.0, -5.0, &cfg), Err(Error::Integration(_))));
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = EvolutionConfig { unitarity_tol: 1e-14, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = EvolutionConfig { step: Some(-1.0), ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn propagator_nodes_match_direct_evolution() {
        let rep = rep4();
        let mode = MomentumMode::new(&[1.0, 0.0, 0.0], 1.0).unwrap();
        let pot = pulse(0.2);
        let cfg = EvolutionConfig::default();
        let nodes = [2.5, -3.0, 0.1, -0.4, 8.0];
        let prop = BlockPropagator::build(&rep, &mode, &pot, 0.0, &nodes, &cfg).unwrap();
        assert!(prop.nodes.windows(2).all(|w| w[0] < w[1]));
        for (i, &t) in prop.nodes.iter().enumerate() {
            let direct = evolve_block(&rep, &mode, &pot, t, 0.0, &cfg).unwrap();
            assert!(max_abs(&(prop.forward(i) - direct)) < 1e-10);
        }
        assert!(prop.max_unitarity_defect < 1e-12);
    }

    #[test]
    fn lippmann_schwinger_vacuum_and_zeroth_iterate() {
        let rep = rep4();
        let mode = MomentumMode::new(&[0.4, 0.0, 0.3], 1.0).unwrap();
        let psi0 = Vector::from_column_slice(&[C64::new(1.0, 0.0), C64::new(0.0, 0.5), C64::new(0.2, 0.0), C64::new(0.0, 0.0)]);
        let free = vacuum_evolution(&rep, &mode, 3.0, -2.0) * &psi0;
        let v = lippmann_schwinger(&rep, &mode, &PotentialSpec::vacuum(), &psi0, 3.0, -2.0, 5).unwrap();
        assert!((v - &free).norm() < 1e-15);
        let z = lippmann_schwinger(&rep, &mode, &pulse(0.3), &psi0, 3.0, -2.0, 0).unwrap();
        assert!((z - free).norm() < 1e-15);
    }

    #[test]
    fn lippmann_schwinger_error_is_third_order() {
        let rep = rep4();
        let mode = MomentumMode::new(&[1.0, 0.0, 0.0], 1.0).unwrap();
        let psi0 = Vector::from_column_slice(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let cfg = EvolutionConfig::default();
        let err = |lam: f64| {
            let pot = pulse(lam);
            let exact = evolve_block(&rep, &mode, &pot, 8.0, -8.0, &cfg).unwrap() * &psi0;
            (lippmann_schwinger(&rep, &mode, &pot, &psi0, 8.0, -8.0, 2).unwrap() - exact).norm()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 8.0).abs() < 0.8, "ratio {ratio}");
    }

    #[test]
    fn lippmann_schwinger_converges_backward_in_time() {
        let rep = rep4();
        let mode = MomentumMode::new(&[0.0, 1.0, 0.0], 1.0).unwrap();
        let psi0 = Vector::from_column_slice(&[C64::new(0.0, 1.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        let pot = pulse(0.1);
        let exact = evolve_block(&rep, &mode, &pot, -7.0, 6.0, &EvolutionConfig::default()).unwrap() * &psi0;
        let ls = lippmann_schwinger(&rep, &mode, &pot, &psi0, -7.0, 6.0, 12).unwrap();
        assert!((ls - exact).norm() < 1e-10);
    }

    #[test]
    fn commutator_identity_vacuum_and_pulse() {
        let rep = rep4();
        let mode = MomentumMode::new(&[1.0, 0.0, 0.0], 1.0).unwrap();
        let cfg = EvolutionConfig::default();
        let vac = commutator_identity_check(&rep, &mode, &PotentialSpec::vacuum(), 2.0, -1.0, 50, &cfg).unwrap();
        assert!(vac < 1e-12);
        let pot = pulse(0.2);
        let r200 = commutator_identity_check(&rep, &mode, &pot, 1.0, 0.0, 200, &cfg).unwrap();
        let r400 = commutator_identity_check(&rep, &mode, &pot, 1.0, 0.0, 399, &cfg).unwrap();
        assert!(r200 < 1e-6, "{r200}");
        let q = r200 / r400;
        assert!((2.0..=4.5).contains(&q), "ratio {q}");
    }

    #[test]
    fn commutator_identity_accepts_any_node_count() {
        let rep = rep4();
        let mode = MomentumMode::new(&[9.9, 0.0, 0.0], 1.0).unwrap();
        let cfg = EvolutionConfig::default();
        for n in [3, 7, 1193, 1206] {
            assert!(commutator_identity_check(&rep, &mode, &pulse(0.1), 7.3, -8.1, n, &cfg).is_ok());
        }
    }

    #[test]
    fn gaussian_pulse_helper_is_scalar() {
        let pot = gaussian_scalar_pulse(1.0, 0.3);
        assert!(matches!(pot.kind, PotentialKind::Scalar));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn interacting_evolution_is_unitary_and_invertible(
            k in prop::collection::vec(-3.0f64..3.0, 3),
            lam in -0.4f64..0.4,
            t in -6.0f64..6.0,
            t0 in -6.0f64..6.0,
        ) {
            let rep = rep4();
            let mode = MomentumMode::new(&k, 1.0).unwrap();
            let pot = pulse(lam);
            let cfg = EvolutionConfig::default();
            let u = evolve_block(&rep, &mode, &pot, t, t0, &cfg).unwrap();
            prop_assert!(unitarity_defect(&u) < 1e-10);
            let back = evolve_block(&rep, &mode, &pot, t0, t, &cfg).unwrap();
            prop_assert!(max_abs(&(back - u.adjoint())) < 1e-9);
        }
    }
}
