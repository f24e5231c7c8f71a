//! Families of solutions over a mass interval, the mass integration `𝔭`,
//! space-time inner products, decay and growth scans, and the smeared
//! distributional product relations in the mass parameters.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::evolution::{BlockPropagator, EvolutionConfig};
use crate::linalg::{fro_norm, Mat, C64};
use crate::potential::{PotentialKind, PotentialSpec};
use crate::quadrature::{differentiation_matrix, gauss_legendre, loglog_slope, Rule};
use crate::signature::{time_rule, QuadRule};
use crate::spinor::{build_dirac_representation, frequency_projectors, MomentumMode, SpinorRep};

/// Gauss-Legendre nodes on `I = (m_L, m_R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassGrid {
    pub m_l: f64,
    pub m_r: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl MassGrid {
    pub fn gauss(m_l: f64, m_r: f64, n: usize) -> Result<Self> {
        if !(m_l > 0.0) || !(m_r > m_l) {
            return Err(Error::Config(format!("mass interval ({m_l}, {m_r}) must satisfy 0 < m_L < m_R")));
        }
        if n == 0 {
            return Err(Error::Config("mass grid needs at least one node".into()));
        }
        let rule = gauss_legendre(n).mapped(m_l, m_r);
        let total: f64 = rule.weights.iter().sum();
        if (total - (m_r - m_l)).abs() > 1e-12 * (m_r - m_l) {
            return Err(Error::Quadrature(format!("mass weights sum to {total}, expected {}", m_r - m_l)));
        }
        Ok(MassGrid { m_l, m_r, nodes: rule.nodes, weights: rule.weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.m_l + self.m_r)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.m_r - self.m_l)
    }

    /// Position of `m` on `[-1, 1]`.
    pub fn rescaled(&self, m: f64) -> f64 {
        (m - self.center()) / self.half_width()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&m, &w)| w * f(m)).sum()
    }

    /// Weights `c_j` with `Σ c_j F(m_j) ≈ ∂^order F(x)`.
    pub fn derivative_weights(&self, x: f64, order: usize) -> Vec<f64> {
        let n = self.len();
        let mut row: Vec<f64> = (0..n)
            .map(|j| {
                let mut l = 1.0;
                for k in 0..n {
                    if k != j {
                        l *= (x - self.nodes[k]) / (self.nodes[j] - self.nodes[k]);
                    }
                }
                l
            })
            .collect();
        let d = differentiation_matrix(&self.nodes);
        for _ in 0..order {
            row = (0..n).map(|j| (0..n).map(|i| row[i] * d[i][j]).sum()).collect();
        }
        row
    }
}

/// `exp(1 − 1/(1 − u²))` on `|u| < 1`, zero elsewhere.
pub fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        libm::exp(1.0 - 1.0 / (1.0 - u * u))
    }
}

/// A family `(ψ_m)` sampled on a mass grid for one momentum block: the
/// profile `η` and the spinor data at the anchor time (one column per
/// member when several families are handled together).
#[derive(Debug, Clone, PartialEq)]
pub struct MassFamily {
    pub grid: MassGrid,
    pub profile: Vec<f64>,
    pub initial: Vec<Mat>,
    pub derivative_order: usize,
}

impl MassFamily {
    pub fn new(
        grid: MassGrid,
        profile: impl Fn(f64) -> f64,
        initial: impl Fn(f64) -> Mat,
        derivative_order: usize,
    ) -> Result<Self> {
        let eta: Vec<f64> = grid.nodes.iter().map(|&m| profile(m)).collect();
        let peak = eta.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !eta.iter().all(|v| v.is_finite()) || peak == 0.0 {
            return Err(Error::Config("mass profile must be finite and not identically zero".into()));
        }
        // flatness at the ends stands in for vanishing derivatives
        let edge = 0.005 * (grid.m_r - grid.m_l);
        for j in 0..=4 {
            let s = edge * j as f64 / 4.0;
            for m in [grid.m_l + s, grid.m_r - s] {
                if profile(m).abs() > 1e-8 * peak {
                    return Err(Error::Config(format!("mass profile does not vanish near the endpoint (η({m}) = {})", profile(m))));
                }
            }
        }
        let data: Vec<Mat> = grid.nodes.iter().map(|&m| initial(m)).collect();
        let cols = data[0].ncols();
        if data.iter().any(|d| d.ncols() != cols || d.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(Error::Config("per-node data must be finite with a common shape".into()));
        }
        Ok(MassFamily { grid, profile: eta, initial: data, derivative_order })
    }

    /// Bump profile on the whole grid with the same data at every node.
    pub fn bump(grid: MassGrid, data: Mat) -> Self {
        let g = grid.clone();
        MassFamily::new(grid, move |m| bump(g.rescaled(m)), move |_| data.clone(), 2).expect("bump family is admissible")
    }

    pub fn columns(&self) -> usize {
        self.initial[0].ncols()
    }

    /// The operator `T`: multiplication of the family by `m`.
    pub fn times_mass(&self) -> Self {
        let mut out = self.clone();
        for (d, &m) in out.initial.iter_mut().zip(&self.grid.nodes) {
            *d = d.scale(m);
        }
        out
    }

    /// `w_i η(m_i) ψ_i`
    pub fn weighted(&self, i: usize) -> Mat {
        self.initial[i].scale(self.grid.weights[i] * self.profile[i])
    }

    /// Half the length of the node range where the profile is non-negligible.
    pub fn support_half_width(&self) -> f64 {
        let peak = self.profile.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let live: Vec<f64> =
            self.grid.nodes.iter().zip(&self.profile).filter(|(_, e)| e.abs() > 1e-12 * peak).map(|(m, _)| *m).collect();
        let spacing = self.grid.half_width() * 2.0 / self.grid.len() as f64;
        (0.5 * (live[live.len() - 1] - live[0]) + spacing).min(self.grid.half_width())
    }

    /// `∫_I ‖η ψ_m‖ dm`-type weights: `‖η(m_i) ψ_i‖` per node.
    pub fn node_norms(&self) -> Vec<f64> {
        self.initial.iter().zip(&self.profile).map(|(d, e)| e.abs() * fro_norm(d)).collect()
    }
}

fn mode_for(k: &[f64], m: f64) -> Result<MomentumMode> {
    MomentumMode::new(k, m)
}

/// `(𝔭ψ)(t) = Σ w_i η_i Ũ_{m_i}(t, t0) ψ_i` for one momentum block.
pub fn superpose(
    rep: &SpinorRep,
    k: &[f64],
    family: &MassFamily,
    pot: &PotentialSpec,
    t0: f64,
    t: f64,
    ecfg: &EvolutionConfig,
) -> Result<Mat> {
    let mut out = Mat::zeros(rep.spinor_dim, family.columns());
    for (i, &m) in family.grid.nodes.iter().enumerate() {
        let u = crate::evolution::evolve_block(rep, &mode_for(k, m)?, pot, t, t0, ecfg)?;
        out += u * family.weighted(i);
    }
    Ok(out)
}

/// Settings for the space-time inner product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig {
    /// Window length past the numerical interval, in units of
    /// `ω_max / (m_min · half_width)`.
    pub window_factor: f64,
    /// Refuse when the superposition at the window end exceeds this
    /// fraction of its peak.
    pub tail_ratio: f64,
    pub evolution: EvolutionConfig,
}

impl Default for InnerConfig {
    fn default() -> Self {
        InnerConfig { window_factor: 32.0, tail_ratio: 1e-2, evolution: EvolutionConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerProduct {
    /// `(1/2π) ∫ (𝔭ψ)† γ⁰ (𝔭φ) dt`, one entry per pair of columns.
    pub value: Mat,
    pub window: (f64, f64),
    /// Change of the value when the free windows shrink by a quarter.
    pub tail_estimate: f64,
}

/// Spectral data of `𝔭ψ` on the free region `t ≥ b`: `Σ e^{−iν(t−b)} c`.
struct FreeTail {
    terms: Vec<(f64, Mat)>,
}

impl FreeTail {
    fn at(&self, tau: f64, sign: f64) -> Mat {
        let mut out = Mat::zeros(self.terms[0].1.nrows(), self.terms[0].1.ncols());
        for (nu, c) in &self.terms {
            let ph = -sign * nu * tau;
            out += c * C64::new(libm::cos(ph), libm::sin(ph));
        }
        out
    }
}

struct Track {
    inner: Vec<Mat>,
    right: FreeTail,
    left: FreeTail,
    peak: f64,
}

fn build_track(
    rep: &SpinorRep,
    k: &[f64],
    family: &MassFamily,
    pot: &PotentialSpec,
    t0: f64,
    rule: &Rule,
    span: (f64, f64),
    ecfg: &EvolutionConfig,
) -> Result<Track> {
    let d = rep.spinor_dim;
    let cols = family.columns();
    let mut nodes = rule.nodes.clone();
    nodes.push(span.0);
    nodes.push(span.1);
    let mut inner = vec![Mat::zeros(d, cols); rule.len()];
    let mut right = Vec::with_capacity(2 * family.grid.len());
    let mut left = Vec::with_capacity(2 * family.grid.len());
    for (i, &m) in family.grid.nodes.iter().enumerate() {
        let mode = mode_for(k, m)?;
        let prop = BlockPropagator::build(rep, &mode, pot, t0, &nodes, ecfg)?;
        let weighted = family.weighted(i);
        // prop.nodes is sorted; look the inner nodes up by value
        let lookup = |t: f64| prop.nodes.iter().position(|&s| s == t).expect("node present");
        for (n, &t) in rule.nodes.iter().enumerate() {
            inner[n] += prop.forward(lookup(t)) * &weighted;
        }
        let (pp, pm) = frequency_projectors(rep, &mode);
        let at_b = prop.forward(lookup(span.1)) * &weighted;
        let at_a = prop.forward(lookup(span.0)) * &weighted;
        right.push((mode.omega, &pp * &at_b));
        right.push((-mode.omega, &pm * &at_b));
        left.push((mode.omega, &pp * &at_a));
        left.push((-mode.omega, &pm * &at_a));
    }
    let mut peak = inner.iter().map(fro_norm).fold(0.0, f64::max);
    let (r, l) = (FreeTail { terms: right }, FreeTail { terms: left });
    peak = peak.max(fro_norm(&r.at(0.0, 1.0))).max(fro_norm(&l.at(0.0, -1.0)));
    Ok(Track { inner, right: r, left: l, peak })
}

/// `∫_0^L e^{iΔτ} dτ`
fn phase_integral(delta: f64, len: f64) -> C64 {
    let x = delta * len;
    if x.abs() < 1e-8 {
        C64::new(len, 0.5 * x * len)
    } else {
        C64::new(libm::sin(x) / delta, (1.0 - libm::cos(x)) / delta)
    }
}

fn tail_pairing(a: &FreeTail, b: &FreeTail, g0: &Mat, len: f64, sign: f64) -> Mat {
    let gb: Vec<(f64, Mat)> = b.terms.iter().map(|(nu, c)| (*nu, g0 * c)).collect();
    let mut out = Mat::zeros(a.terms[0].1.ncols(), b.terms[0].1.ncols());
    for (na, ca) in &a.terms {
        let ca_h = ca.adjoint();
        for (nb, cb) in &gb {
            out += &ca_h * cb * phase_integral(sign * (na - nb), len);
        }
    }
    out
}

/// `<𝔭ψ|𝔭φ> = (1/2π) ∫ (𝔭ψ)(t)† γ⁰ (𝔭φ)(t) dt` for one momentum block.
///
/// The interval joining `t0` and the potential support is integrated on
/// Gauss panels; on both free half-lines the superpositions are finite sums
/// of plane waves and the time integrals up to the window end are exact.
pub fn spacetime_inner(
    rep: &SpinorRep,
    k: &[f64],
    a: &MassFamily,
    b: &MassFamily,
    pot: &PotentialSpec,
    t0: f64,
    cfg: &InnerConfig,
) -> Result<InnerProduct> {
    let (lo, hi) = pot.support();
    let span = if pot.is_vacuum() || lo >= hi { (t0, t0) } else { (lo.min(t0), hi.max(t0)) };
    if span.1 - span.0 > 1e4 {
        return Err(Error::Config(format!("potential support [{lo}, {hi}] is too long for the time integral")));
    }
    let omega_max = a.grid.nodes.iter().chain(&b.grid.nodes).map(|&m| mode_for(k, m).map(|md| md.omega)).try_fold(
        0.0f64,
        |acc, w| w.map(|w| acc.max(w)),
    )?;
    let m_min = a.grid.m_l.min(b.grid.m_l);
    let width = a.support_half_width().min(b.support_half_width());
    let len = cfg.window_factor * omega_max / (m_min * width);
    let rule = if span.1 > span.0 {
        time_rule(span.0, span.1, omega_max, 16, QuadRule::GaussLegendre)
    } else {
        Rule { nodes: Vec::new(), weights: Vec::new() }
    };
    let ta = build_track(rep, k, a, pot, t0, &rule, span, &cfg.evolution)?;
    let tb = build_track(rep, k, b, pot, t0, &rule, span, &cfg.evolution)?;
    let g0 = rep.gamma0();
    let mut total = Mat::zeros(a.columns(), b.columns());
    for (n, w) in rule.weights.iter().enumerate() {
        total += (ta.inner[n].adjoint() * g0 * &tb.inner[n]).scale(*w);
    }
    let mut short = total.clone();
    total += tail_pairing(&ta.right, &tb.right, g0, len, 1.0);
    total += tail_pairing(&ta.left, &tb.left, g0, len, -1.0);
    short += tail_pairing(&ta.right, &tb.right, g0, 0.75 * len, 1.0);
    short += tail_pairing(&ta.left, &tb.left, g0, 0.75 * len, -1.0);
    for track in [&ta, &tb] {
        for end in [track.right.at(len, 1.0), track.left.at(len, -1.0)] {
            if fro_norm(&end) > cfg.tail_ratio * track.peak {
                return Err(Error::Oracle(format!(
                    "superposition has not decayed at the window end: |𝔭ψ| = {:e} against peak {:e} (window {len})",
                    fro_norm(&end),
                    track.peak
                )));
            }
        }
    }
    let tail_estimate = fro_norm(&(&total - &short));
    Ok(InnerProduct {
        value: total.scale(1.0 / (2.0 * PI)),
        window: (span.0 - len, span.1 + len),
        tail_estimate: tail_estimate / (2.0 * PI),
    })
}

/// Vacuum momentum-space formula `∫ η_A η_B ψ_A† S_m ψ_B dm` on a shared grid.
pub fn vacuum_inner_oracle(rep: &SpinorRep, k: &[f64], a: &MassFamily, b: &MassFamily) -> Result<Mat> {
    if a.grid != b.grid {
        return Err(Error::Usage("the vacuum formula needs both families on one grid".into()));
    }
    let mut out = Mat::zeros(a.columns(), b.columns());
    for (i, &m) in a.grid.nodes.iter().enumerate() {
        let s = crate::spinor::vacuum_signature(rep, &mode_for(k, m)?);
        let w = a.grid.weights[i] * a.profile[i] * b.profile[i];
        out += (a.initial[i].adjoint() * s * &b.initial[i]).scale(w);
    }
    Ok(out)
}

fn scalar_of(ip: &InnerProduct) -> Result<C64> {
    if ip.value.nrows() != 1 || ip.value.ncols() != 1 {
        return Err(Error::Usage("scalar inner products need single-column families".into()));
    }
    Ok(ip.value[(0, 0)])
}

/// `|<𝔭Tψ|𝔭φ> − <𝔭ψ|𝔭Tφ>| / (|<𝔭Tψ|𝔭φ>| + |<𝔭ψ|𝔭Tφ>| + floor)`.
pub fn weak_mop_symmetry_check(
    rep: &SpinorRep,
    k: &[f64],
    a: &MassFamily,
    b: &MassFamily,
    pot: &PotentialSpec,
    t0: f64,
    cfg: &InnerConfig,
) -> Result<f64> {
    let left = scalar_of(&spacetime_inner(rep, k, &a.times_mass(), b, pot, t0, cfg)?)?;
    let right = scalar_of(&spacetime_inner(rep, k, a, &b.times_mass(), pot, t0, cfg)?)?;
    Ok((left - right).norm() / (left.norm() + right.norm() + 1e-14))
}

/// `|<𝔭ψ|𝔭φ>| / ∫_I ‖ψ_m‖ ‖φ_m‖ dm` with the norms taken at `t0`.
pub fn strong_mop_ratio(
    rep: &SpinorRep,
    k: &[f64],
    a: &MassFamily,
    b: &MassFamily,
    pot: &PotentialSpec,
    t0: f64,
    cfg: &InnerConfig,
) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::Usage("the norm integral needs both families on one grid".into()));
    }
    let num = scalar_of(&spacetime_inner(rep, k, a, b, pot, t0, cfg)?)?.norm();
    let (na, nb) = (a.node_norms(), b.node_norms());
    let den: f64 = (0..a.grid.len()).map(|i| a.grid.weights[i] * na[i] * nb[i]).sum();
    Ok(num / den)
}

/// Spatial profile of the initial data in momentum space, radial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialProfile {
    /// `(1 + k²)^{−s}`
    Sobolev { s: f64 },
    /// `exp(−k²/(2κ²))`
    Gaussian { kappa: f64 },
}

impl RadialProfile {
    pub fn value(&self, k: f64) -> f64 {
        match *self {
            RadialProfile::Sobolev { s } => libm::pow(1.0 + k * k, -s),
            RadialProfile::Gaussian { kappa } => libm::exp(-k * k / (2.0 * kappa * kappa)),
        }
    }
}

/// Trapezoid rule in `ln k` on `[k_min, k_max]` for `∫ d³k/(2π)³` of a radial function.
pub fn radial_log_rule(k_min: f64, k_max: f64, n: usize) -> Rule {
    let (u0, u1) = (libm::log(k_min), libm::log(k_max));
    let h = (u1 - u0) / (n - 1) as f64;
    let mut rule = Rule { nodes: Vec::with_capacity(n), weights: Vec::with_capacity(n) };
    for j in 0..n {
        let k = libm::exp(u0 + h * j as f64);
        let end = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        rule.nodes.push(k);
        rule.weights.push(end * h * k * k * k / (2.0 * PI * PI));
    }
    rule
}

/// Composite Gauss rule on `[0, k_max]` for `∫ d³k/(2π)³` of a radial function.
pub fn radial_gauss_rule(k_max: f64, panels: usize) -> Rule {
    let base = gauss_legendre(16);
    let h = k_max / panels as f64;
    let mut rule = Rule { nodes: Vec::new(), weights: Vec::new() };
    for p in 0..panels {
        rule.append(base.mapped(h * p as f64, h * (p + 1) as f64));
    }
    for (w, &k) in rule.weights.iter_mut().zip(&rule.nodes) {
        *w *= k * k / (2.0 * PI * PI);
    }
    rule
}

/// `‖Σ c_i Ũ_{m_i}(t,t0;k)‖_F²` for the 2×2 radial block, at each time.
///
/// A rotation-invariant potential of scalar or electric kind leaves the
/// 3+1 block at momentum `k` unitarily equivalent to two copies of the
/// 1+1 block `[[m, |k|], [|k|, −m]]` (plus the potential), so Frobenius
/// norms of the 4×4 block are twice those computed here.
fn radial_block_norms(
    rep2: &SpinorRep,
    k: f64,
    masses: &[f64],
    coeffs: &[f64],
    pot: &PotentialSpec,
    t0: f64,
    times: &[f64],
    ecfg: &EvolutionConfig,
) -> Result<Vec<f64>> {
    if pot.is_vacuum() {
        return Ok(times
            .iter()
            .map(|&t| {
                let tau = t - t0;
                let (mut al, mut b1, mut b2) = (0.0, 0.0, 0.0);
                for (&m, &c) in masses.iter().zip(coeffs) {
                    let w = libm::sqrt(m * m + k * k);
                    let (s, co) = (libm::sin(w * tau), libm::cos(w * tau));
                    al += c * co;
                    b1 += c * s * m / w;
                    b2 += c * s * k / w;
                }
                2.0 * (al * al + b1 * b1) + 2.0 * b2 * b2
            })
            .collect());
    }
    let mut acc = vec![Mat::zeros(2, 2); times.len()];
    for (&m, &c) in masses.iter().zip(coeffs) {
        let prop = BlockPropagator::build(rep2, &MomentumMode::new(&[k], m)?, pot, t0, times, ecfg)?;
        for (j, &t) in times.iter().enumerate() {
            let idx = prop.nodes.iter().position(|&s| s == t).expect("node present");
            acc[j] += prop.forward(idx).scale(c);
        }
    }
    Ok(acc.iter().map(|a| libm::pow(fro_norm(a), 2.0)).collect())
}

fn radial_kind_check(pot: &PotentialSpec) -> Result<()> {
    if !pot.is_homogeneous() || matches!(pot.kind, PotentialKind::Custom(_)) {
        return Err(Error::Regime("radial reduction needs a homogeneous scalar or electric potential".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayScan {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub window: (f64, f64),
    pub slope: f64,
}

/// `‖(𝔭ψ)|_t‖` in 3+1 for radial data `χ̂(|k|)` times a unit spinor basis,
/// superposed over `grid` with weights `η`; log-log slope over `window`.
pub fn decay_scan(
    grid: &MassGrid,
    eta: &[f64],
    profile: RadialProfile,
    radial: &Rule,
    pot: &PotentialSpec,
    t0: f64,
    times: &[f64],
    window: (f64, f64),
    ecfg: &EvolutionConfig,
) -> Result<DecayScan> {
    radial_kind_check(pot)?;
    let rep2 = build_dirac_representation(2)?;
    let coeffs: Vec<f64> = grid.weights.iter().zip(eta).map(|(w, e)| w * e).collect();
    let mut acc = vec![0.0; times.len()];
    for (&k, &wk) in radial.nodes.iter().zip(&radial.weights) {
        let chi = profile.value(k);
        let norms = radial_block_norms(&rep2, k, &grid.nodes, &coeffs, pot, t0, times, ecfg)?;
        for (a, n) in acc.iter_mut().zip(norms) {
            *a += wk * chi * chi * 2.0 * n;
        }
    }
    let norms: Vec<f64> = acc.iter().map(|v| libm::sqrt(*v)).collect();
    let slope = fit_window(times, &norms, window)?;
    Ok(DecayScan { times: times.to_vec(), norms, window, slope })
}

fn fit_window(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        times.iter().zip(values).filter(|(t, _)| **t >= window.0 && **t <= window.1).map(|(t, v)| (*t, *v)).unzip();
    if xs.len() < 2 {
        return Err(Error::Config(format!("fit window {window:?} holds fewer than two sample times")));
    }
    Ok(loglog_slope(&xs, &ys))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthFit {
    pub a: usize,
    pub b: usize,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// `Σ_{p≤b} ‖∂_m^p ψ|_{t0}‖_{W^{a,2}}`
    pub initial_sum: f64,
    pub exponent: f64,
    /// `max_t norm / ((1 + t^b) · initial_sum)`
    pub constant: f64,
}

/// `‖∂_m^b ψ_m|_t‖_{W^{a,2}}` at the grid centre for radial data, with
/// spectral mass derivatives on the grid.
pub fn sobolev_growth_check(
    grid: &MassGrid,
    profile: RadialProfile,
    radial: &Rule,
    pot: &PotentialSpec,
    t0: f64,
    a: usize,
    b: usize,
    times: &[f64],
    window: (f64, f64),
    ecfg: &EvolutionConfig,
) -> Result<GrowthFit> {
    radial_kind_check(pot)?;
    let rep2 = build_dirac_representation(2)?;
    let centre = grid.center();
    let mut with_t0 = vec![t0];
    with_t0.extend_from_slice(times);
    let orders: Vec<Vec<f64>> = (0..=b).map(|p| grid.derivative_weights(centre, p)).collect();
    let mut acc = vec![vec![0.0; with_t0.len()]; b + 1];
    for (&k, &wk) in radial.nodes.iter().zip(&radial.weights) {
        let chi = profile.value(k);
        let sob = libm::pow(1.0 + k * k, a as f64);
        for (p, coeffs) in orders.iter().enumerate() {
            // only the initial time is needed below order b
            let ts: &[f64] = if p == b { &with_t0 } else { &with_t0[..1] };
            let norms = radial_block_norms(&rep2, k, &grid.nodes, coeffs, pot, t0, ts, ecfg)?;
            for (j, n) in norms.into_iter().enumerate() {
                acc[p][j] += wk * sob * chi * chi * 2.0 * n;
            }
        }
    }
    let initial_sum: f64 = acc.iter().map(|row| libm::sqrt(row[0])).sum();
    let norms: Vec<f64> = acc[b][1..].iter().map(|v| libm::sqrt(*v)).collect();
    let exponent = fit_window(times, &norms, window)?;
    let constant = times
        .iter()
        .zip(&norms)
        .map(|(&t, &n)| n / ((1.0 + libm::pow(t.abs(), b as f64)) * initial_sum))
        .fold(0.0, f64::max);
    Ok(GrowthFit { a, b, times: times.to_vec(), norms, initial_sum, exponent, constant })
}

/// Profile on `I` for the distributional checks, vanishing outside `(lo, hi)`.
pub struct SmoothProfile<'a> {
    pub lo: f64,
    pub hi: f64,
    pub f: &'a dyn Fn(f64) -> f64,
}

impl SmoothProfile<'_> {
    fn at(&self, m: f64) -> f64 {
        if m <= self.lo || m >= self.hi {
            0.0
        } else {
            (self.f)(m)
        }
    }
}

/// `∫_{[lo,hi] ∖ (pole−δ, pole+δ)} φ(y)/(pole − y) dy` on panels graded
/// geometrically towards the excision.
fn excised(phi: &dyn Fn(f64) -> Mat, pole: f64, lo: f64, hi: f64, delta: f64, dim: usize) -> Mat {
    let base = gauss_legendre(16);
    let mut out = Mat::zeros(dim, dim);
    let panel = |a: f64, b: f64, out: &mut Mat| {
        if b <= a {
            return;
        }
        let r = base.mapped(a, b);
        for (&y, &w) in r.nodes.iter().zip(&r.weights) {
            *out += phi(y).scale(w / (pole - y));
        }
    };
    let smooth = 0.01;
    for side in [-1.0, 1.0] {
        let end = if side < 0.0 { lo } else { hi };
        let start = pole + side * delta;
        if (end - start) * side <= 0.0 {
            continue;
        }
        // geometric panels out to distance `smooth`, then uniform panels
        let mut d = delta;
        while d < smooth && (pole + side * d - end) * side < 0.0 {
            let next = (2.0 * d).min(smooth);
            let (p, q) = (pole + side * d, pole + side * next);
            let q = if (q - end) * side > 0.0 { end } else { q };
            if side < 0.0 { panel(q, p, &mut out) } else { panel(p, q, &mut out) }
            d = next;
        }
        let from = pole + side * d.max(delta);
        if (end - from) * side > 0.0 {
            let pieces = (libm::ceil((end - from).abs() / smooth) as usize).max(1);
            let h = (end - from) / pieces as f64;
            for j in 0..pieces {
                let (p, q) = (from + h * j as f64, from + h * (j + 1) as f64);
                if side < 0.0 { panel(q, p, &mut out) } else { panel(p, q, &mut out) }
            }
        }
    }
    out
}

/// One Richardson step on the `O(δ)` excision error.
fn excised_extrapolated(phi: &dyn Fn(f64) -> Mat, pole: f64, lo: f64, hi: f64, delta: f64, dim: usize) -> Mat {
    excised(phi, pole, lo, hi, 0.5 * delta, dim).scale(2.0) - excised(phi, pole, lo, hi, delta, dim)
}

/// Four-momentum sample `p = (p⁰, p⃗)`.
pub type Momentum4 = (f64, Vec<f64>);

fn p_squared(p: &Momentum4) -> f64 {
    p.0 * p.0 - p.1.iter().map(|x| x * x).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductSeries {
    pub deltas: Vec<f64>,
    /// Relative residual `‖LHS − RHS‖ / ‖RHS‖` at each excision width.
    pub residual: Vec<f64>,
    /// Log-log slope of the residual against `δ` (NaN when the residual
    /// is at rounding level throughout).
    pub fitted_order: f64,
    /// Slope of successive differences of the right side against `δ`.
    pub convergence_order: f64,
    pub lhs: Vec<Mat>,
    pub rhs: Vec<Mat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionalReport {
    pub used: Vec<Momentum4>,
    pub excluded: Vec<(Momentum4, String)>,
    /// Relative residuals of identity (i) per used sample.
    pub identity_i: Vec<f64>,
    /// Size of the left side of (i) relative to the pointwise bound, per sample.
    pub lhs_i: Vec<f64>,
    pub identity_ii: Vec<ProductSeries>,
    pub identity_iii: Vec<ProductSeries>,
}

fn gaussian_delta(x: f64, eps: f64) -> f64 {
    libm::exp(-x * x / (2.0 * eps * eps)) / (libm::sqrt(2.0 * PI) * eps)
}

/// `∫ f(m) (p̸ + m) δ_ε(p² − m²) ε(p⁰) dm` with a Gaussian nascent delta.
fn smeared_k(rep: &SpinorRep, f: &SmoothProfile, p: &Momentum4, eps: f64) -> Mat {
    let slash = rep.slash(p.0, &p.1);
    let p2 = p_squared(p);
    let mu = libm::sqrt(p2.max(0.0));
    let d = rep.spinor_dim;
    // resolve the peak: width in m is about ε/(2μ)
    let width = eps / (2.0 * mu.max(f.lo));
    let (a, b) = ((mu - 12.0 * width).max(f.lo), (mu + 12.0 * width).min(f.hi));
    let mut out = Mat::zeros(d, d);
    if b <= a {
        return out;
    }
    let rule = crate::quadrature::composite_gauss(a, b, width, 16);
    for (&m, &w) in rule.nodes.iter().zip(&rule.weights) {
        out += (&slash + Mat::identity(d, d).scale(m)).scale(w * f.at(m) * gaussian_delta(p2 - m * m, eps));
    }
    out.scale(p.0.signum())
}

/// Identity (i) at one momentum: `K_f K_g` with nascent deltas, extrapolated
/// in `ε`, against `f(μ)g(μ)(p̸+μ)/(2μ)`.
pub fn kk_identity(rep: &SpinorRep, f: &SmoothProfile, g: &SmoothProfile, p: &Momentum4, eps: f64) -> (Mat, Mat) {
    let lhs_at = |e: f64| smeared_k(rep, f, p, e) * smeared_k(rep, g, p, e);
    let lhs = (lhs_at(0.5 * eps).scale(4.0) - lhs_at(eps)).scale(1.0 / 3.0);
    let mu = libm::sqrt(p_squared(p).max(0.0));
    let d = rep.spinor_dim;
    let rhs = (rep.slash(p.0, &p.1) + Mat::identity(d, d).scale(mu)).scale(f.at(mu) * g.at(mu) / (2.0 * mu));
    (lhs, rhs)
}

/// Test function in `p⁰` for the smeared (ii) and (iii) checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeTest {
    pub centre: f64,
    pub half_width: f64,
}

impl TimeTest {
    fn value(&self, p0: f64) -> f64 {
        bump((p0 - self.centre) / self.half_width)
    }

    fn rule(&self) -> Rule {
        crate::quadrature::composite_gauss(self.centre - self.half_width, self.centre + self.half_width, self.half_width / 4.0, 16)
    }
}

fn mass_rule(f: &SmoothProfile, max_len: f64, order: usize) -> Rule {
    crate::quadrature::composite_gauss(f.lo, f.hi, max_len, order)
}

/// `PV ∫ f(m) (p̸+m)/(p²−m²) dm` with excision `δ` and one Richardson step.
fn smeared_s(rep: &SpinorRep, f: &SmoothProfile, p: &Momentum4, delta: f64) -> Mat {
    let d = rep.spinor_dim;
    let slash = rep.slash(p.0, &p.1);
    let mu = libm::sqrt(p_squared(p).max(0.0));
    let phi = |m: f64| (&slash + Mat::identity(d, d).scale(m)).scale(f.at(m) / (mu + m));
    excised_extrapolated(&phi, mu, f.lo, f.hi, delta, d)
}

fn on_shell(rep: &SpinorRep, spatial: &[f64], m: f64) -> (f64, Mat) {
    let w = libm::sqrt(m * m + spatial.iter().map(|x| x * x).sum::<f64>());
    let d = rep.spinor_dim;
    (w, rep.slash(w, spatial) + Mat::identity(d, d).scale(m))
}

/// Identity (ii) smeared with `h(p⁰)` at fixed `p⃗`.
pub fn ks_identity(
    rep: &SpinorRep,
    f: &SmoothProfile,
    g: &SmoothProfile,
    spatial: &[f64],
    h: &TimeTest,
    delta: f64,
) -> (Mat, Mat) {
    let d = rep.spinor_dim;
    let mut lhs = Mat::zeros(d, d);
    let hr = h.rule();
    for (&p0, &w) in hr.nodes.iter().zip(&hr.weights) {
        let p: Momentum4 = (p0, spatial.to_vec());
        let mu = libm::sqrt(p_squared(&p).max(0.0));
        let k = (rep.slash(p0, spatial) + Mat::identity(d, d).scale(mu)).scale(f.at(mu) / (2.0 * mu));
        lhs += (k * smeared_s(rep, g, &p, delta)).scale(w * h.value(p0));
    }
    let mut rhs = Mat::zeros(d, d);
    let mr = mass_rule(f, h.half_width / 8.0, 16);
    for (&m, &w) in mr.nodes.iter().zip(&mr.weights) {
        let (om, num) = on_shell(rep, spatial, m);
        let hg = excised_extrapolated(&|y: f64| Mat::identity(1, 1).scale(g.at(y)), m, g.lo, g.hi, delta, 1)[(0, 0)];
                // ∫dp⁰ h k_m = h(ω_m)(p̸+m)/(2ω_m)
        rhs += num.scale(w * f.at(m) * h.value(om) / (2.0 * om)) * hg;
    }
    (lhs, rhs)
}

/// Identity (iii) smeared with `h(p⁰)` at fixed `p⃗`.
pub fn ss_identity(
    rep: &SpinorRep,
    f: &SmoothProfile,
    g: &SmoothProfile,
    spatial: &[f64],
    h: &TimeTest,
    delta: f64,
) -> (Mat, Mat) {
    let d = rep.spinor_dim;
    let mut lhs = Mat::zeros(d, d);
    let hr = h.rule();
    for (&p0, &w) in hr.nodes.iter().zip(&hr.weights) {
        let p: Momentum4 = (p0, spatial.to_vec());
        lhs += (smeared_s(rep, f, &p, delta) * smeared_s(rep, g, &p, delta)).scale(w * h.value(p0));
    }
    // T_h(m) = PV ∫ h(p⁰)(p̸+m)/(p² − m²) dp⁰
    let t_h = |m: f64| {
        let (om, _) = on_shell(rep, spatial, m);
        let phi = |p0: f64| (rep.slash(p0, spatial) + Mat::identity(d, d).scale(m)).scale(-h.value(p0) / (p0 + om));
        excised_extrapolated(&phi, om, h.centre - h.half_width, h.centre + h.half_width, delta, d)
    };
    // distinct node sets keep the divided difference away from 0/0
    let rf = mass_rule(f, h.half_width / 4.0, 16);
    let rg = mass_rule(g, h.half_width / 4.0, 17);
    let tf: Vec<Mat> = rf.nodes.iter().map(|&m| t_h(m)).collect();
    let tg: Vec<Mat> = rg.nodes.iter().map(|&m| t_h(m)).collect();
    let mut rhs = Mat::zeros(d, d);
    for (i, (&m, &wm)) in rf.nodes.iter().zip(&rf.weights).enumerate() {
        let fm = f.at(m);
        if fm == 0.0 {
            continue;
        }
        for (j, (&mp, &wp)) in rg.nodes.iter().zip(&rg.weights).enumerate() {
            let gm = g.at(mp);
            if gm == 0.0 {
                continue;
            }
            rhs += (&tf[i] - &tg[j]).scale(wm * wp * fm * gm / (m - mp));
        }
    }
    let fine = mass_rule(f, h.half_width / 8.0, 16);
    for (&m, &w) in fine.nodes.iter().zip(&fine.weights) {
        let (om, num) = on_shell(rep, spatial, m);
        rhs += num.scale(PI * PI * w * f.at(m) * g.at(m) * h.value(om) / (2.0 * om));
    }
    (lhs, rhs)
}

fn series(pairs: Vec<(Mat, Mat)>, deltas: &[f64]) -> ProductSeries {
    let scale = pairs.iter().map(|(_, r)| fro_norm(r)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let residual: Vec<f64> = pairs.iter().map(|(l, r)| fro_norm(&(l - r)) / scale).collect();
    let fitted_order = if residual.iter().all(|&r| r > 1e-12) { loglog_slope(deltas, &residual) } else { f64::NAN };
    let diffs: Vec<f64> = pairs.windows(2).map(|w| fro_norm(&(&w[0].1 - &w[1].1)) / scale).collect();
    let convergence_order = if diffs.len() >= 2 && diffs.iter().all(|&x| x > 0.0) {
        loglog_slope(&deltas[..diffs.len()], &diffs)
    } else {
        f64::NAN
    };
    let (lhs, rhs) = pairs.into_iter().unzip();
    ProductSeries { deltas: deltas.to_vec(), residual, fitted_order, convergence_order, lhs, rhs }
}

/// Runs the three smeared relations. Identity (i) is checked pointwise at
/// each timelike sample; (ii) and (iii) are smeared with a bump in `p⁰`
/// centred at each sample, at the excision widths `deltas`.
pub fn distributional_products_check(
    rep: &SpinorRep,
    f: &SmoothProfile,
    g: &SmoothProfile,
    interval: (f64, f64),
    samples: &[Momentum4],
    guard: f64,
    eps: f64,
    test_half_width: f64,
    deltas: &[f64],
    smeared_samples: usize,
) -> DistributionalReport {
    let mut used = Vec::new();
    let mut excluded = Vec::new();
    for p in samples {
        let p2 = p_squared(p);
        if p2 <= 0.0 {
            excluded.push((p.clone(), String::from("not timelike")));
            continue;
        }
        let mu = libm::sqrt(p2);
        let edge = (mu - interval.0).min(interval.1 - mu);
        if edge < guard {
            excluded.push((p.clone(), format!("mass shell √p² = {mu} is within {guard} of the interval edge")));
            continue;
        }
        used.push(p.clone());
    }
    let mut identity_i = Vec::new();
    let mut lhs_i = Vec::new();
    for p in &used {
        let (l, r) = kk_identity(rep, f, g, p, eps);
        let bound = fro_norm(&r).max(f64::MIN_POSITIVE);
        identity_i.push(fro_norm(&(&l - &r)) / bound);
        lhs_i.push(fro_norm(&l));
    }
    let mut identity_ii = Vec::new();
    let mut identity_iii = Vec::new();
    for p in used.iter().take(smeared_samples) {
        let h = TimeTest { centre: p.0, half_width: test_half_width };
        identity_ii.push(series(deltas.iter().map(|&dl| ks_identity(rep, f, g, &p.1, &h, dl)).collect(), deltas));
        identity_iii.push(series(deltas.iter().map(|&dl| ss_identity(rep, f, g, &p.1, &h, dl)).collect(), deltas));
    }
    DistributionalReport { used, excluded, identity_i, lhs_i, identity_ii, identity_iii }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eye, max_abs};
    use crate::potential::{gaussian_scalar_pulse, Envelope};
    use crate::spinor::vacuum_signature;
    use proptest::prelude::*;

    fn rep4() -> SpinorRep {
        build_dirac_representation(4).unwrap()
    }

    fn column(d: usize, entries: &[C64]) -> Mat {
        Mat::from_column_slice(d, 1, entries)
    }

    #[test]
    fn grid_reproduces_interval_length_and_polynomials() {
        let g = MassGrid::gauss(0.8, 1.2, 32).unwrap();
        assert!((g.weights.iter().sum::<f64>() - 0.4).abs() < 1e-14);
        assert!(g.nodes.iter().all(|&m| m > 0.8 && m < 1.2));
        assert!((g.integrate(|m| m.powi(5)) - (1.2f64.powi(6) - 0.8f64.powi(6)) / 6.0).abs() < 1e-14);
        assert!(MassGrid::gauss(0.0, 1.0, 4).is_err());
    }

    #[test]
    fn derivative_weights_differentiate_smooth_functions() {
        let g = MassGrid::gauss(0.8, 1.2, 48).unwrap();
        for (order, exact) in [(0, libm::sin(3.0)), (1, 3.0 * libm::cos(3.0)), (2, -9.0 * libm::sin(3.0))] {
            let w = g.derivative_weights(1.0, order);
            let v: f64 = w.iter().zip(&g.nodes).map(|(c, &m)| c * libm::sin(3.0 * m)).sum();
            assert!((v - exact).abs() < 1e-9, "order {order}: {v} vs {exact}");
        }
    }

    #[test]
    fn profile_must_vanish_at_the_ends() {
        let g = MassGrid::gauss(0.8, 1.2, 16).unwrap();
        let bad = MassFamily::new(g.clone(), |_| 1.0, |_| eye(4), 2);
        assert!(matches!(bad, Err(Error::Config(_))));
        assert!(MassFamily::new(g.clone(), |m| bump(g.rescaled(m)), |_| eye(4), 2).is_ok());
    }

    #[test]
    fn superposition_at_anchor_is_the_weighted_sum() {
        let rep = rep4();
        let g = MassGrid::gauss(0.9, 1.1, 12).unwrap();
        let fam = MassFamily::bump(g, eye(4));
        let pot = gaussian_scalar_pulse(1.0, 0.3);
        let at = superpose(&rep, &[0.0, 0.0, 1.0], &fam, &pot, 0.0, 0.0, &EvolutionConfig::default()).unwrap();
        let direct: Mat = (0..fam.grid.len()).map(|i| fam.weighted(i)).fold(Mat::zeros(4, 4), |a, b| a + b);
        assert!(max_abs(&(at - direct)) < 1e-15);
    }

    #[test]
    fn vacuum_superposition_matches_closed_form() {
        let rep = rep4();
        let k = [0.0, 0.0, 0.7];
        let g = MassGrid::gauss(0.9, 1.1, 24).unwrap();
        let fam = MassFamily::bump(g.clone(), eye(4));
        let t = 3.3;
        let got = superpose(&rep, &k, &fam, &PotentialSpec::vacuum(), 0.0, t, &EvolutionConfig::default()).unwrap();
        let mut same_nodes = Mat::zeros(4, 4);
        for (i, &m) in g.nodes.iter().enumerate() {
            let mode = MomentumMode::new(&k, m).unwrap();
            same_nodes += crate::spinor::vacuum_evolution(&rep, &mode, t, 0.0) * fam.weighted(i);
        }
        assert!(max_abs(&(&got - same_nodes)) < 1e-10);
        // refined quadrature of ∫η(m)(Π₊e^{−iωt} + Π₋e^{iωt}) dm
        let fine = crate::quadrature::composite_gauss(0.9, 1.1, 0.01, 16);
        let mut oracle = Mat::zeros(4, 4);
        for (&m, &w) in fine.nodes.iter().zip(&fine.weights) {
            let mode = MomentumMode::new(&k, m).unwrap();
            oracle += crate::spinor::vacuum_evolution(&rep, &mode, t, 0.0).scale(w * bump(g.rescaled(m)));
        }
        assert!(max_abs(&(got - oracle)) < 1e-6);
    }

    #[test]
    fn vacuum_inner_product_matches_momentum_formula() {
        let rep = rep4();
        let k = [0.3, 0.0, 0.9];
        let g = MassGrid::gauss(0.8, 1.2, 48).unwrap();
        let a = MassFamily::new(g.clone(), |m| bump(g.rescaled(m)) * (1.0 + m), |m| column(4, &[C64::new(1.0, m), C64::new(0.2, 0.0), C64::new(0.0, -0.4), C64::new(m, 0.1)]), 2).unwrap();
        let b = MassFamily::new(g.clone(), |m| bump(g.rescaled(m)), |m| column(4, &[C64::new(0.5, 0.0), C64::new(0.1, m), C64::new(0.3, 0.3), C64::new(-1.0, 0.0)]), 2).unwrap();
        let cfg = InnerConfig::default();
        let ip = spacetime_inner(&rep, &k, &a, &b, &PotentialSpec::vacuum(), 0.0, &cfg).unwrap();
        let oracle = vacuum_inner_oracle(&rep, &k, &a, &b).unwrap();
        let rel = (ip.value[(0, 0)] - oracle[(0, 0)]).norm() / oracle[(0, 0)].norm();
        assert!(rel < 1e-5, "rel {rel}");
        assert!(ip.tail_estimate < 1e-5 * ip.value[(0, 0)].norm());
        assert!(rel * oracle[(0, 0)].norm() < ip.tail_estimate);
        let aa = spacetime_inner(&rep, &k, &a, &a, &PotentialSpec::vacuum(), 0.0, &cfg).unwrap();
        assert!(aa.value[(0, 0)].im.abs() < 1e-10 * aa.value[(0, 0)].norm());
    }

    #[test]
    fn narrow_family_recovers_vacuum_signature() {
        let rep = rep4();
        let k = [0.0, 0.0, 1.0];
        let g = MassGrid::gauss(0.85, 1.15, 48).unwrap();
        let fam = MassFamily::bump(g.clone(), eye(4));
        let ip = spacetime_inner(&rep, &k, &fam, &fam, &PotentialSpec::vacuum(), 0.0, &InnerConfig::default()).unwrap();
        let norm: f64 = g.integrate(|m| bump(g.rescaled(m)).powi(2));
        let s = ip.value.scale(1.0 / norm);
        let exact = vacuum_signature(&rep, &MomentumMode::new(&k, 1.0).unwrap());
        // O(width²) deviation from S_m at the centre mass
        assert!(max_abs(&(s - exact)) < 1e-2);
    }

    #[test]
    fn disjoint_supports_pair_to_nearly_zero() {
        let rep = rep4();
        let k = [0.0, 0.5, 0.0];
        let g = MassGrid::gauss(0.8, 1.2, 160).unwrap();
        let data = |_| column(4, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.3, 0.0), C64::new(0.0, 0.2)]);
        let a = MassFamily::new(g.clone(), |m| bump((m - 0.9) / 0.09), data, 2).unwrap();
        let b = MassFamily::new(g.clone(), |m| bump((m - 1.1) / 0.09), data, 2).unwrap();
        let cfg = InnerConfig::default();
        let ab = spacetime_inner(&rep, &k, &a, &b, &PotentialSpec::vacuum(), 0.0, &cfg).unwrap();
        let aa = spacetime_inner(&rep, &k, &a, &a, &PotentialSpec::vacuum(), 0.0, &cfg).unwrap();
        assert!(vacuum_inner_oracle(&rep, &k, &a, &b).unwrap()[(0, 0)].norm() < 1e-30);
        assert!(ab.value[(0, 0)].norm() < 1e-4 * aa.value[(0, 0)].norm());
    }

    #[test]
    fn weak_mop_holds_in_vacuum_and_with_pulse() {
        let rep = rep4();
        let k = [0.0, 0.0, 0.8];
        let g = MassGrid::gauss(0.8, 1.2, 40).unwrap();
        let a = MassFamily::new(g.clone(), |m| bump(g.rescaled(m)), |m| column(4, &[C64::new(1.0, 0.0), C64::new(0.0, m), C64::new(0.5, 0.0), C64::new(0.0, 0.0)]), 2).unwrap();
        let b = MassFamily::new(g.clone(), |m| bump(g.rescaled(m)) * m, |_| column(4, &[C64::new(0.0, 1.0), C64::new(0.3, 0.0), C64::new(0.0, 0.0), C64::new(0.4, 0.0)]), 2).unwrap();
        let cfg = InnerConfig::default();
        let vac = weak_mop_symmetry_check(&rep, &k, &a, &b, &PotentialSpec::vacuum(), 0.0, &cfg).unwrap();
        assert!(vac < 1e-6, "vacuum residual {vac}");
        let pot = gaussian_scalar_pulse(1.0, 0.2 * libm::sqrt(2.0 * PI));
        let with = weak_mop_symmetry_check(&rep, &k, &a, &b, &pot, 0.0, &cfg).unwrap();
        assert!(with < 1e-4, "pulse residual {with}");
    }

    #[test]
    fn strong_ratio_is_bounded_by_one_in_block_units() {
        let rep = rep4();
        let g = MassGrid::gauss(0.8, 1.2, 40).unwrap();
        let data = |m: f64| column(4, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, m), C64::new(0.0, 0.0)]);
        let a = MassFamily::new(g.clone(), |m| bump(g.rescaled(m)), data, 2).unwrap();
        let r = strong_mop_ratio(&rep, &[0.2, 0.0, 0.4], &a, &a, &PotentialSpec::vacuum(), 0.0, &InnerConfig::default()).unwrap();
        assert!(r <= 1.0 + 1e-6 && r > 0.0, "ratio {r}");
    }

    #[test]
    fn refuses_when_window_too_short() {
        let rep = rep4();
        let g = MassGrid::gauss(0.8, 1.2, 32).unwrap();
        let fam = MassFamily::bump(g, eye(4));
        let cfg = InnerConfig { window_factor: 0.5, ..InnerConfig::default() };
        let r = spacetime_inner(&rep, &[0.0, 0.0, 1.0], &fam, &fam, &PotentialSpec::vacuum(), 0.0, &cfg);
        assert!(matches!(r, Err(Error::Oracle(_))));
    }

    #[test]
    fn single_mass_family_does_not_decay() {
        let g = MassGrid::gauss(0.8, 1.2, 1).unwrap();
        let radial = radial_log_rule(1e-2, 1e2, 400);
        let times = [10.0, 20.0, 40.0];
        let scan = decay_scan(&g, &[1.0], RadialProfile::Gaussian { kappa: 1.0 }, &radial, &PotentialSpec::vacuum(), 0.0, &times, (10.0, 40.0), &EvolutionConfig::default()).unwrap();
        assert!(scan.slope.abs() < 1e-12);
    }

    #[test]
    fn radial_vacuum_norms_match_block_evolution() {
        // closed-form 2×2 path against BlockPropagator on the 1+1 block
        let rep2 = build_dirac_representation(2).unwrap();
        let masses = [0.9, 1.0, 1.13];
        let coeffs = [0.2, -0.5, 0.7];
        let times = [0.5, 4.0];
        let pot = PotentialSpec::vacuum();
        let fast = radial_block_norms(&rep2, 1.7, &masses, &coeffs, &pot, 0.0, &times, &EvolutionConfig::default()).unwrap();
        let weak = PotentialSpec::new(PotentialKind::Scalar, 1e-300, Envelope::Bump { half_width: 0.1 }).unwrap();
        let slow = radial_block_norms(&rep2, 1.7, &masses, &coeffs, &weak, 0.0, &times, &EvolutionConfig::default()).unwrap();
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn radial_reduction_matches_four_spinor_block() {
        let rep4 = rep4();
        let rep2 = build_dirac_representation(2).unwrap();
        let pot = gaussian_scalar_pulse(0.7, 0.4);
        let k = 1.3;
        let ecfg = EvolutionConfig::default();
        let times = [2.5];
        let two = radial_block_norms(&rep2, k, &[1.0], &[1.0], &pot, -3.0, &times, &ecfg).unwrap()[0];
        let u4 = crate::evolution::evolve_block(&rep4, &MomentumMode::new(&[0.6, -0.3, (k * k - 0.45f64).sqrt()], 1.0).unwrap(), &pot, 2.5, -3.0, &ecfg).unwrap();
        assert!((fro_norm(&u4).powi(2) - 2.0 * two).abs() < 1e-9);
        let u2 = crate::evolution::evolve_block(&rep2, &MomentumMode::new(&[k], 1.0).unwrap(), &pot, 2.5, -3.0, &ecfg).unwrap();
        // unitary blocks: check a non-trivial invariant, the γ⁰-expectation
        let g4 = (u4.adjoint() * rep4.gamma0() * &u4).trace().re;
        let g2 = (u2.adjoint() * rep2.gamma0() * &u2).trace().re;
        assert!((g4 - 2.0 * g2).abs() < 1e-9);
    }

    #[test]
    fn identity_i_with_nascent_deltas() {
        let rep = rep4();
        let fc = |m: f64| bump((m - 1.0) / 0.2) * libm::exp(-(m - 0.98f64).powi(2) / 0.01);
        let gc = |m: f64| bump((m - 1.0) / 0.2) * libm::exp(-(m - 1.03f64).powi(2) / 0.02);
        let f = SmoothProfile { lo: 0.8, hi: 1.2, f: &fc };
        let g = SmoothProfile { lo: 0.8, hi: 1.2, f: &gc };
        let p: Momentum4 = (1.2, vec![0.3, 0.4, 0.5]);
        let (l, r) = kk_identity(&rep, &f, &g, &p, 0.004);
        assert!(fro_norm(&(l - &r)) < 1e-5 * fro_norm(&r));
    }

    #[test]
    fn identity_iii_converges_under_excision_halving() {
        let rep = rep4();
        let fc = |m: f64| bump((m - 1.0) / 0.2);
        let gc = |m: f64| bump((m - 1.02) / 0.15) * (1.0 + m);
        let f = SmoothProfile { lo: 0.8, hi: 1.2, f: &fc };
        let g = SmoothProfile { lo: 0.87, hi: 1.17, f: &gc };
        let spatial = [0.2, 0.0, 0.3];
        let h = TimeTest { centre: libm::sqrt(1.0 + 0.13), half_width: 0.05 };
        let mut res = Vec::new();
        let deltas = [4e-3, 2e-3, 1e-3];
        for &dl in &deltas {
            let (l, r) = ss_identity(&rep, &f, &g, &spatial, &h, dl);
            res.push(fro_norm(&(l - &r)) / fro_norm(&r));
        }
        assert!(res[2] < 1e-5, "{res:?}");
        assert!(loglog_slope(&deltas, &res) >= 1.8, "{res:?}");
    }

    #[test]
    fn identity_ii_holds_at_each_excision_width() {
        let rep = rep4();
        let fc = |m: f64| bump((m - 1.0) / 0.2);
        let gc = |m: f64| bump((m - 1.02) / 0.15);
        let f = SmoothProfile { lo: 0.8, hi: 1.2, f: &fc };
        let g = SmoothProfile { lo: 0.87, hi: 1.17, f: &gc };
        let h = TimeTest { centre: libm::sqrt(1.05 + 0.04), half_width: 0.05 };
        let (l, r) = ks_identity(&rep, &f, &g, &[0.0, 0.2, 0.0], &h, 2e-3);
        assert!(fro_norm(&(l - &r)) < 1e-8 * fro_norm(&r));
    }

    #[test]
    fn vacuum_family_decays_like_inverse_square() {
        let g = MassGrid::gauss(0.5, 1.5, 32).unwrap();
        let eta: Vec<f64> = g.nodes.iter().map(|&m| bump(g.rescaled(m))).collect();
        let times: Vec<f64> = (0..=10).map(|j| 10.0 * libm::pow(10.0, j as f64 / 10.0)).collect();
        let radial = radial_log_rule(1e-3, 1e5, 8001);
        let scan = decay_scan(&g, &eta, RadialProfile::Sobolev { s: 2.5 }, &radial, &PotentialSpec::vacuum(), 0.0, &times, (10.0, 100.0), &EvolutionConfig::default()).unwrap();
        assert!(scan.slope > -2.3 && scan.slope < -1.8, "slope {}", scan.slope);
    }

    #[test]
    fn decay_scan_rejects_custom_potentials() {
        let g = MassGrid::gauss(0.5, 1.5, 4).unwrap();
        let samples = crate::potential::CustomSamples::new(vec![0.0, 1.0, 2.0], vec![eye(4); 3]).unwrap();
        let pot = PotentialSpec::new(PotentialKind::Custom(samples), 0.1, Envelope::Bump { half_width: 1.0 }).unwrap();
        let r = decay_scan(&g, &[1.0; 4], RadialProfile::Gaussian { kappa: 1.0 }, &radial_gauss_rule(1.0, 1), &pot, 0.0, &[1.0, 2.0], (1.0, 2.0), &EvolutionConfig::default());
        assert!(matches!(r, Err(Error::Regime(_))));
    }

    #[test]
    fn vacuum_growth_exponents_track_derivative_order() {
        let g = MassGrid::gauss(0.8, 1.2, 48).unwrap();
        let times: Vec<f64> = (0..=12).map(|j| 10.0 * libm::pow(4.0, j as f64 / 12.0)).collect();
        let radial = radial_gauss_rule(10.0, 20);
        for b in 0..=2 {
            let fit = sobolev_growth_check(&g, RadialProfile::Gaussian { kappa: 1.0 }, &radial, &PotentialSpec::vacuum(), 0.0, 1, b, &times, (10.0, 40.0), &EvolutionConfig::default()).unwrap();
            assert!(fit.exponent <= b as f64 + 0.1 && fit.exponent >= b as f64 - 0.1, "b={b}: {}", fit.exponent);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn times_mass_scales_node_data(m_l in 0.5f64..1.0, w in 0.1f64..0.5) {
            let g = MassGrid::gauss(m_l, m_l + w, 8).unwrap();
            let fam = MassFamily::bump(g.clone(), eye(2));
            let t = fam.times_mass();
            for i in 0..g.len() {
                prop_assert!(max_abs(&(&t.initial[i] - fam.initial[i].scale(g.nodes[i]))) < 1e-15);
            }
        }

        #[test]
        fn excision_is_exact_for_odd_integrand(pole in 0.9f64..1.1, delta in 1e-4f64..1e-2) {
            // φ ≡ 1: PV ∫ 1/(pole − y) over a symmetric interval vanishes
            let v = excised(&|_| Mat::identity(1, 1), pole, pole - 0.1, pole + 0.1, delta, 1)[(0, 0)];
            prop_assert!(v.norm() < 1e-12);
        }
    }
}
