//! Interacting signature operator `S̃_m(k)` per momentum block.
//!
//! With `X(t) = Ũ(t0,t) 𝒱(t) U(t,t0)`, `X± = ∫_{t≷t0} X dt` and
//! `D = X₊ − X₋`, the single and double time integrals factor as
//!
//! `S̃ = S_m − (i/2)(S_m D† − D S_m) + ½(X₊ S_m X₊† + X₋ S_m X₋†)`,
//!
//! because `S_m` commutes with the vacuum evolution. The tensor Gauss rule
//! over the two same-side quadrants collapses to products of the one
//! dimensional sums on the same nodes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::evolution::{evolve_block, BlockHamiltonian, BlockPropagator, EvolutionConfig};
use crate::mass::{spacetime_inner, InnerConfig, MassFamily, MassGrid};
use crate::linalg::{hermitian_eigen, hermiticity_defect, inverse, max_abs, op_norm, spectral_projector, Mat, C64, I};
use crate::potential::PotentialSpec;
use crate::quadrature::{gauss_legendre, Rule};
use crate::spinor::{frequency_projectors, vacuum_evolution, vacuum_signature, MomentumMode, SpinorRep};

/// Gauss points per panel of the composite time rule.
const PANEL_ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadRule {
    GaussLegendre,
    Simpson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Half-window `T`: integrals run over `[t0 − T, t0 + T]`.
    pub t_window: f64,
    /// Minimum node count of the single-time rule.
    pub n_1d: usize,
    /// Minimum node count per axis of the double integral; both integrals
    /// share one node set, so the larger of the two counts is used.
    pub n_2d: usize,
    pub rule: QuadRule,
    /// Re-assemble on doubled nodes and report the difference.
    pub estimate_error: bool,
}

impl QuadratureConfig {
    /// Window just covering the support of `pot` as seen from `t0`.
    pub fn covering(pot: &PotentialSpec, t0: f64) -> Self {
        let (lo, hi) = pot.support();
        QuadratureConfig {
            t_window: (hi - t0).abs().max((t0 - lo).abs()) * (1.0 + 1e-12),
            n_1d: 128,
            n_2d: 128,
            rule: QuadRule::GaussLegendre,
            estimate_error: false,
        }
    }

    pub fn validate(&self, pot: &PotentialSpec, t0: f64) -> Result<()> {
        if self.n_1d == 0 || self.n_2d == 0 {
            return Err(Error::Config("quadrature node counts must be positive".into()));
        }
        let (lo, hi) = pot.support();
        if pot.is_vacuum() || lo >= hi {
            return Ok(());
        }
        if t0 - self.t_window > lo || t0 + self.t_window < hi {
            return Err(Error::Config(format!(
                "window [{}, {}] does not cover the potential support [{lo}, {hi}]",
                t0 - self.t_window,
                t0 + self.t_window
            )));
        }
        Ok(())
    }

    fn doubled(&self) -> Self {
        QuadratureConfig { n_1d: 2 * self.n_1d, n_2d: 2 * self.n_2d, ..*self }
    }
}

/// Composite rule on `[a, b]`, `a < b`, with panels no longer than
/// `min(0.5, 1/ω)` and at least `n_min` nodes.
pub(crate) fn time_rule(a: f64, b: f64, omega: f64, n_min: usize, rule: QuadRule) -> Rule {
    let len = b - a;
    let max_len = 0.5f64.min(1.0 / omega);
    match rule {
        QuadRule::GaussLegendre => {
            let panels = (libm::ceil(len / max_len) as usize).max(n_min.div_ceil(PANEL_ORDER)).max(1);
            let base = gauss_legendre(PANEL_ORDER);
            let h = len / panels as f64;
            let mut out = Rule { nodes: Vec::new(), weights: Vec::new() };
            for p in 0..panels {
                out.append(base.mapped(a + h * p as f64, a + h * (p + 1) as f64));
            }
            out
        }
        QuadRule::Simpson => {
            let mut intervals = (libm::ceil(len / max_len * PANEL_ORDER as f64) as usize).max(n_min).max(2);
            intervals += intervals % 2;
            let h = len / intervals as f64;
            let nodes = (0..=intervals).map(|j| a + h * j as f64).collect();
            let weights = (0..=intervals)
                .map(|j| {
                    let f = if j == 0 || j == intervals {
                        1.0
                    } else if j % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    f * h / 3.0
                })
                .collect();
            Rule { nodes, weights }
        }
    }
}

/// Rules for the parts of the support after and before `t0`.
pub(crate) fn side_rules(pot: &PotentialSpec, t0: f64, omega: f64, qcfg: &QuadratureConfig) -> (Rule, Rule) {
    let (lo, hi) = pot.support();
    let n_min = qcfg.n_1d.max(qcfg.n_2d);
    let empty = || Rule { nodes: Vec::new(), weights: Vec::new() };
    if pot.is_vacuum() || lo >= hi {
        return (empty(), empty());
    }
    let total = hi - lo;
    let after = (lo.max(t0), hi.min(t0 + qcfg.t_window));
    let before = (lo.max(t0 - qcfg.t_window), hi.min(t0));
    let share = |len: f64| (libm::ceil(n_min as f64 * len / total) as usize).max(1);
    let plus = if after.1 > after.0 { time_rule(after.0, after.1, omega, share(after.1 - after.0), qcfg.rule) } else { empty() };
    let minus =
        if before.1 > before.0 { time_rule(before.0, before.1, omega, share(before.1 - before.0), qcfg.rule) } else { empty() };
    (plus, minus)
}

/// First- and second-order corrections from the factored sums.
///
/// `vacuum[n]`, `interacting[n]` and `perturbation[n]` are `U(t_n,t0)`,
/// `Ũ(t_n,t0)` and `𝒱(t_n)`; `weights[n]` carries the sign `ε(t_n − t0)`.
pub fn signature_from_factors(
    s_m: &Mat,
    vacuum: &[Mat],
    interacting: &[Mat],
    perturbation: &[Mat],
    weights: &[f64],
) -> (Mat, Mat) {
    let d = s_m.nrows();
    let mut x_plus = Mat::zeros(d, d);
    let mut x_minus = Mat::zeros(d, d);
    for n in 0..weights.len() {
        let x = interacting[n].adjoint() * &perturbation[n] * &vacuum[n];
        if weights[n] >= 0.0 {
            x_plus += x.scale(weights[n]);
        } else {
            x_minus += x.scale(-weights[n]);
        }
    }
    signature_from_sums(s_m, &x_plus, &x_minus)
}

/// Corrections from the accumulated `X₊ = Σ_{t>t0} w X(t)` and `X₋ = Σ_{t<t0} w X(t)`.
pub fn signature_from_sums(s_m: &Mat, x_plus: &Mat, x_minus: &Mat) -> (Mat, Mat) {
    let diff = x_plus - x_minus;
    let first = (s_m * diff.adjoint() - &diff * s_m) * (I * -0.5);
    let second = (x_plus * s_m * x_plus.adjoint() + x_minus * s_m * x_minus.adjoint()).scale(0.5);
    (first, second)
}

#[derive(Debug, Clone)]
pub struct SignatureBlock {
    pub mode: MomentumMode,
    pub t0: f64,
    pub s_tilde: Mat,
    /// `Π₊S̃Π₊ + Π₋S̃Π₋`
    pub s_diag: Mat,
    /// `Π₋S̃Π₊ + Π₊S̃Π₋`
    pub s_mix: Mat,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Mat,
    /// Max-entry change under node doubling, when requested.
    pub quad_error: Option<f64>,
    pub first_order: Mat,
    pub second_order: Mat,
    pub projectors: (Mat, Mat),
}

impl SignatureBlock {
    pub fn from_matrix(mode: MomentumMode, t0: f64, s_tilde: Mat, projectors: (Mat, Mat)) -> Self {
        let (p, q) = &projectors;
        let s_diag = p * &s_tilde * p + q * &s_tilde * q;
        let s_mix = &s_tilde - &s_diag;
        let (eigenvalues, eigenvectors) = hermitian_eigen(&s_tilde);
        let d = s_tilde.nrows();
        SignatureBlock {
            mode,
            t0,
            s_tilde,
            s_diag,
            s_mix,
            eigenvalues,
            eigenvectors,
            quad_error: None,
            first_order: Mat::zeros(d, d),
            second_order: Mat::zeros(d, d),
            projectors,
        }
    }

    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_defect(&self.s_tilde)
    }
}

fn assemble_once(
    rep: &SpinorRep,
    mode: &MomentumMode,
    pot: &PotentialSpec,
    t0: f64,
    qcfg: &QuadratureConfig,
    ecfg: &EvolutionConfig,
) -> Result<(Mat, Mat, Mat)> {
    let s_m = vacuum_signature(rep, mode);
    let (plus, minus) = side_rules(pot, t0, mode.omega, qcfg);
    let mut nodes = minus.nodes.clone();
    nodes.extend(&plus.nodes);
    let mut weights: Vec<f64> = minus.weights.iter().map(|w| -w).collect();
    weights.extend(&plus.weights);
    let d = rep.spinor_dim;
    if nodes.is_empty() {
        return Ok((s_m, Mat::zeros(d, d), Mat::zeros(d, d)));
    }
    let prop = BlockPropagator::build(rep, mode, pot, t0, &nodes, ecfg)?;
    let ham = BlockHamiltonian::new(rep, mode, pot)?;
    let mut vac = Vec::with_capacity(nodes.len());
    let mut pert = Vec::with_capacity(nodes.len());
    for &t in &prop.nodes {
        vac.push(vacuum_evolution(rep, mode, t, t0));
        pert.push(ham.perturbation(t)?);
    }
    let (first, second) = signature_from_factors(&s_m, &vac, &prop.u_matrices, &pert, &weights);
    Ok((s_m, first, second))
}

/// `S̃_m(k)` at anchor `t0`.
pub fn assemble_signature(
    rep: &SpinorRep,
    mode: &MomentumMode,
    pot: &PotentialSpec,
    t0: f64,
    qcfg: &QuadratureConfig,
    ecfg: &EvolutionConfig,
) -> Result<SignatureBlock> {
    qcfg.validate(pot, t0)?;
    let (s_m, first, second) = assemble_once(rep, mode, pot, t0, qcfg, ecfg)?;
    let s_tilde = &s_m + &first + &second;
    let defect = hermiticity_defect(&s_tilde);
    if defect > 1e-8 * (1.0 + max_abs(&s_tilde)) {
        return Err(Error::Quadrature(format!(
            "assembled block is not Hermitian: defect {defect:e} at k = {:?}, t0 = {t0}",
            mode.k
        )));
    }
    let quad_error = if qcfg.estimate_error {
        let (_, f2, s2) = assemble_once(rep, mode, pot, t0, &qcfg.doubled(), ecfg)?;
        Some(max_abs(&(&s_m + f2 + s2 - &s_tilde)))
    } else {
        None
    };
    let mut block = SignatureBlock::from_matrix(mode.clone(), t0, s_tilde, frequency_projectors(rep, mode));
    block.quad_error = quad_error;
    block.first_order = first;
    block.second_order = second;
    Ok(block)
}

/// `‖S̃(t0_a) − W S̃(t0_b) W†‖ / ‖S̃(t0_a)‖` with `W = Ũ(t0_a, t0_b)`.
pub fn t0_independence_check(
    rep: &SpinorRep,
    mode: &MomentumMode,
    pot: &PotentialSpec,
    t0_a: f64,
    t0_b: f64,
    qcfg_a: &QuadratureConfig,
    qcfg_b: &QuadratureConfig,
    ecfg: &EvolutionConfig,
) -> Result<f64> {
    let a = assemble_signature(rep, mode, pot, t0_a, qcfg_a, ecfg)?;
    let b = assemble_signature(rep, mode, pot, t0_b, qcfg_b, ecfg)?;
    let w = evolve_block(rep, mode, pot, t0_a, t0_b, ecfg)?;
    let moved = &w * &b.s_tilde * w.adjoint();
    Ok(max_abs(&(&a.s_tilde - moved)) / max_abs(&a.s_tilde))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapRecord {
    /// Eigenvalues of `S̃^D` on the positive-frequency subspace.
    pub eigs_plus: Vec<f64>,
    pub eigs_minus: Vec<f64>,
    pub in_gap_bands: bool,
}

/// Orthonormal basis of the range of a projector.
fn range_basis(p: &Mat) -> Mat {
    let (vals, vecs) = hermitian_eigen(p);
    let cols: Vec<usize> = (0..vals.len()).filter(|&j| vals[j] > 0.5).collect();
    let mut out = Mat::zeros(p.nrows(), cols.len());
    for (c, &j) in cols.iter().enumerate() {
        out.set_column(c, &vecs.column(j));
    }
    out
}

pub fn spectral_gap_check(block: &SignatureBlock) -> GapRecord {
    let restricted = |p: &Mat| {
        let q = range_basis(p);
        hermitian_eigen(&(q.adjoint() * &block.s_diag * &q)).0
    };
    let eigs_plus = restricted(&block.projectors.0);
    let eigs_minus = restricted(&block.projectors.1);
    let in_band = |v: f64| (0.5..=1.5).contains(&v.abs());
    let in_gap_bands = eigs_plus.iter().chain(&eigs_minus).all(|&v| in_band(v));
    GapRecord { eigs_plus, eigs_minus, in_gap_bands }
}

/// `χ⁻(S̃)`; the default guard is `1e−6 ‖S̃‖`.
pub fn negative_projector(block: &SignatureBlock, zero_guard: Option<f64>) -> Result<Mat> {
    let guard = zero_guard.unwrap_or_else(|| 1e-6 * op_norm(&block.s_tilde));
    if let Some(v) = block.eigenvalues.iter().find(|v| v.abs() <= guard) {
        return Err(Error::Degenerate(format!("eigenvalue {v:e} within {guard:e} of zero at k = {:?}", block.mode.k)));
    }
    Ok(spectral_projector(&block.eigenvalues, &block.eigenvectors, |v| v < 0.0))
}

pub fn positive_projector(block: &SignatureBlock, zero_guard: Option<f64>) -> Result<Mat> {
    let minus = negative_projector(block, zero_guard)?;
    Ok(Mat::identity(minus.nrows(), minus.nrows()) - minus)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourReport {
    /// `‖contour result − χ₊(S̃)‖`, max entry.
    pub residual_plus: f64,
    pub residual_minus: f64,
    /// Size of the contour correction term.
    pub correction: f64,
}

/// Evaluates `χ±(H) + (1/2πi)∮ (S̃−λ)⁻¹ ΔS̃ (S̃^D−λ)⁻¹ dλ` on the circles
/// `|λ ∓ 1| = 1/2` with the trapezoidal rule.
pub fn contour_projector_check(block: &SignatureBlock, n_contour: usize) -> Result<ContourReport> {
    if n_contour < 3 {
        return Err(Error::Config("contour needs at least 3 nodes".into()));
    }
    let diag_eigs = hermitian_eigen(&block.s_diag).0;
    for &v in block.eigenvalues.iter().chain(&diag_eigs) {
        for centre in [1.0f64, -1.0] {
            if ((v - centre).abs() - 0.5).abs() < 0.05 {
                return Err(Error::Contour(format!("eigenvalue {v} lies within 0.05 of the circle around {centre}")));
            }
        }
    }
    let d = block.s_tilde.nrows();
    let id = Mat::identity(d, d);
    let minus = negative_projector(block, None)?;
    let direct = [&id - &minus, minus];
    let mut residual = [0.0; 2];
    let mut correction: f64 = 0.0;
    for (slot, centre) in [1.0f64, -1.0].into_iter().enumerate() {
        let mut sum = Mat::zeros(d, d);
        for j in 0..n_contour {
            let theta = 2.0 * core::f64::consts::PI * j as f64 / n_contour as f64;
            let e = C64::new(libm::cos(theta), libm::sin(theta));
            let lambda = C64::new(centre, 0.0) + e * 0.5;
            let r_full = inverse(&(&block.s_tilde - &id * lambda))
                .ok_or_else(|| Error::Contour(format!("singular resolvent at λ = {lambda}")))?;
            let r_diag = inverse(&(&block.s_diag - &id * lambda))
                .ok_or_else(|| Error::Contour(format!("singular resolvent at λ = {lambda}")))?;
            sum += r_full * &block.s_mix * r_diag * (e * 0.5);
        }
        let term = sum.scale(1.0 / n_contour as f64);
        correction = correction.max(max_abs(&term));
        let base = if centre > 0.0 { &block.projectors.0 } else { &block.projectors.1 };
        residual[slot] = max_abs(&(base + term - &direct[slot]));
    }
    Ok(ContourReport { residual_plus: residual[0], residual_minus: residual[1], correction })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingRow {
    pub k: f64,
    pub omega: f64,
    pub norm_ds: f64,
    /// `ω^{n} ‖ΔS̃‖` for `n = p + q = 0..=2·max_order`.
    pub weighted: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingScan {
    pub rows: Vec<MixingRow>,
    /// Max over the grid of each weighted column.
    pub sup_weighted: Vec<f64>,
    /// Log-log slope of `‖ΔS̃‖` against `ω` over the upper half of the grid.
    pub fitted_exponent: f64,
}

/// `ω(k)^{p+q} ‖ΔS̃(k)‖` across momenta along `direction`.
pub fn mixing_decay_scan(
    rep: &SpinorRep,
    pot: &PotentialSpec,
    mass: f64,
    t0: f64,
    k_grid: &[f64],
    direction: &[f64],
    max_order: usize,
    qcfg: &QuadratureConfig,
    ecfg: &EvolutionConfig,
) -> Result<MixingScan> {
    let mut rows = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let kv: Vec<f64> = direction.iter().map(|d| d * k).collect();
        let mode = MomentumMode::new(&kv, mass)?;
        let block = assemble_signature(rep, &mode, pot, t0, qcfg, ecfg)?;
        let norm_ds = op_norm(&block.s_mix);
        let weighted = (0..=2 * max_order).map(|n| libm::pow(mode.omega, n as f64) * norm_ds).collect();
        rows.push(MixingRow { k, omega: mode.omega, norm_ds, weighted });
    }
    let sup_weighted =
        (0..=2 * max_order).map(|n| rows.iter().map(|r| r.weighted[n]).fold(0.0, f64::max)).collect();
    Ok(MixingScan { fitted_exponent: upper_half_slope(&rows), rows, sup_weighted })
}

pub(crate) fn upper_half_slope(rows: &[MixingRow]) -> f64 {
    let tail: Vec<&MixingRow> = rows[rows.len() / 2..].iter().filter(|r| r.norm_ds > 0.0).collect();
    if tail.len() < 2 {
        return f64::NEG_INFINITY;
    }
    let xs: Vec<f64> = tail.iter().map(|r| r.omega).collect();
    let ys: Vec<f64> = tail.iter().map(|r| r.norm_ds).collect();
    crate::quadrature::loglog_slope(&xs, &ys)
}

/// Transports a block assembled at `t0_b` to the anchor `t0_a`.
pub fn transported(block: &SignatureBlock, w: &Mat) -> Mat {
    w * &block.s_tilde * w.adjoint()
}

/// Momenta `k_j = k_max · j / (n − 1)` or log-spaced from `k_max·1e−3`.
pub fn k_grid(k_max: f64, n: usize, log: bool) -> Vec<f64> {
    if n == 1 {
        return vec![k_max];
    }
    (0..n)
        .map(|j| {
            let s = j as f64 / (n - 1) as f64;
            if log {
                k_max * libm::pow(1e-3, 1.0 - s)
            } else {
                k_max * s
            }
        })
        .collect()
}

/// Signature block recovered from space-time inner products of narrow
/// mass families centred at `mode.m`.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyOracle {
    pub widths: Vec<f64>,
    /// `<𝔭ψ|𝔭ψ> / ∫η²` per width, with the spinor basis as data.
    pub per_width: Vec<Mat>,
    /// Richardson extrapolation of the two narrowest widths.
    pub value: Mat,
    /// Relative size of the extrapolation step.
    pub correction: f64,
}

/// Independent estimate of `S̃_m(k)`: for a bump `η` of half-width `w`
/// around `m`, `<𝔭ψ|𝔭φ> / ∫η² = S̃_m + O(w²)`. Widths must be
/// decreasing; with three or more the successive differences must shrink
/// unless they are below `1e-6` of the estimate.
pub fn oracle_signature_from_families(
    rep: &SpinorRep,
    mode: &MomentumMode,
    pot: &PotentialSpec,
    t0: f64,
    widths: &[f64],
    n_nodes: usize,
    cfg: &InnerConfig,
) -> Result<FamilyOracle> {
    if widths.len() < 2 || widths.windows(2).any(|w| w[1] >= w[0]) || widths[0] >= mode.m {
        return Err(Error::Config(format!("family widths must be decreasing, at least two, below m; got {widths:?}")));
    }
    let d = rep.spinor_dim;
    let mut per_width = Vec::with_capacity(widths.len());
    for &w in widths {
        let grid = MassGrid::gauss(mode.m - w, mode.m + w, n_nodes)?;
        let fam = MassFamily::bump(grid, Mat::identity(d, d));
        let norm: f64 = (0..fam.grid.len()).map(|i| fam.grid.weights[i] * fam.profile[i] * fam.profile[i]).sum();
        let ip = spacetime_inner(rep, &mode.k, &fam, &fam, pot, t0, cfg)?;
        per_width.push(ip.value.scale(1.0 / norm));
    }
    let steps: Vec<f64> = per_width.windows(2).map(|p| max_abs(&(&p[1] - &p[0]))).collect();
    // Steps already at the quadrature noise floor need not shrink further.
    let floor = 1e-6 * max_abs(&per_width[per_width.len() - 1]);
    if steps.windows(2).any(|s| s[1] >= s[0] && s[1] > floor) {
        return Err(Error::Oracle(format!("family estimates do not settle as the width shrinks: steps {steps:?}")));
    }
    let n = widths.len();
    let r2 = libm::pow(widths[n - 2] / widths[n - 1], 2.0);
    let value = (per_width[n - 1].scale(r2) - &per_width[n - 2]).scale(1.0 / (r2 - 1.0));
    let correction = max_abs(&(&value - &per_width[n - 1])) / max_abs(&value);
    Ok(FamilyOracle { widths: widths.to_vec(), per_width, value, correction })
}
