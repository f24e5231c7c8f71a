//! The projector kernel per momentum block, the momentum-decay Hadamard
//! diagnostic, and the finite doubled test space with its quasi-free state
//! realized on an explicit fermionic Fock space.

use alloc::format;
use alloc::vec::Vec;

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::evolution::{BlockHamiltonian, BlockPropagator, EvolutionConfig};
use crate::linalg::{hermitian_eigen, max_abs, op_norm, Mat, Vector, C64, I};
use crate::mass::bump;
use crate::potential::PotentialSpec;
use crate::quadrature::{composite_gauss, loglog_slope};
use crate::signature::{
    assemble_signature, negative_projector, spectral_gap_check, QuadratureConfig, SignatureBlock,
};
use crate::spinor::{MomentumMode, SpinorRep};

/// `P̂(t,t';k) = −(1/2π) Ũ(t,t0) χ⁻(S̃) Ũ(t0,t') γ⁰`, kept in factored form.
#[derive(Debug, Clone)]
pub struct ProjectorBlock {
    pub signature: SignatureBlock,
    pub chi_minus: Mat,
    gamma0: Mat,
}

/// Kernel samples `values[i][j] = P̂(times[i], times[j])`.
#[derive(Debug, Clone)]
pub struct KernelGrid {
    pub times: Vec<f64>,
    pub values: Vec<Vec<Mat>>,
}

pub fn projector_block(
    rep: &SpinorRep,
    mode: &MomentumMode,
    pot: &PotentialSpec,
    t0: f64,
    qcfg: &QuadratureConfig,
    ecfg: &EvolutionConfig,
) -> Result<ProjectorBlock> {
    let signature = assemble_signature(rep, mode, pot, t0, qcfg, ecfg)?;
    ProjectorBlock::from_signature(rep, signature)
}

impl ProjectorBlock {
    pub fn from_signature(rep: &SpinorRep, signature: SignatureBlock) -> Result<Self> {
        let chi_minus = negative_projector(&signature, None)?;
        Ok(ProjectorBlock { signature, chi_minus, gamma0: rep.gamma0().clone() })
    }

    pub fn mode(&self) -> &MomentumMode {
        &self.signature.mode
    }

    pub fn t0(&self) -> f64 {
        self.signature.t0
    }

    fn propagator(&self, rep: &SpinorRep, pot: &PotentialSpec, times: &[f64], ecfg: &EvolutionConfig) -> Result<BlockPropagator> {
        BlockPropagator::build(rep, self.mode(), pot, self.t0(), times, ecfg)
    }

    fn assemble(&self, u_t: &Mat, u_tp: &Mat) -> Mat {
        (u_t * &self.chi_minus * u_tp.adjoint() * &self.gamma0).scale(-1.0 / (2.0 * PI))
    }

    pub fn kernel_grid(&self, rep: &SpinorRep, pot: &PotentialSpec, times: &[f64], ecfg: &EvolutionConfig) -> Result<KernelGrid> {
        let prop = self.propagator(rep, pot, times, ecfg)?;
        let idx: Vec<usize> = times.iter().map(|&t| prop.nodes.iter().position(|&s| s == t).expect("node present")).collect();
        let values = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| self.assemble(prop.forward(i), prop.forward(j))).collect())
            .collect();
        Ok(KernelGrid { times: times.to_vec(), values })
    }

    /// `max ‖P̂(t,t')* − P̂(t',t)‖ / max ‖P̂‖` with `*` the spin adjoint.
    pub fn symmetry_residual(&self, rep: &SpinorRep, grid: &KernelGrid) -> f64 {
        let n = grid.times.len();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max(max_abs(&(rep.spin_adjoint(&grid.values[i][j]) - &grid.values[j][i])));
                scale = scale.max(max_abs(&grid.values[i][j]));
            }
        }
        worst / scale
    }

    /// `max ‖(i∂_t − H̃(t)) P̂(t,t')‖ / max ‖P̂‖` on the grid, with a
    /// five-point central difference of width `h` in `t`.
    pub fn dirac_residual(
        &self,
        rep: &SpinorRep,
        pot: &PotentialSpec,
        times: &[f64],
        h: f64,
        ecfg: &EvolutionConfig,
    ) -> Result<f64> {
        let offsets = [-2.0, -1.0, 1.0, 2.0];
        let coeffs = [1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0];
        let mut nodes = times.to_vec();
        for &t in times {
            nodes.extend(offsets.iter().map(|o| t + o * h));
        }
        let prop = self.propagator(rep, pot, &nodes, ecfg)?;
        let at = |t: f64| prop.nodes.iter().position(|&s| s == t).map(|i| prop.forward(i)).expect("node present");
        let ham = BlockHamiltonian::new(rep, self.mode(), pot)?;
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for &t in times {
            let mut du = Mat::zeros(rep.spinor_dim, rep.spinor_dim);
            for (o, c) in offsets.iter().zip(coeffs) {
                du += at(t + o * h).scale(c / h);
            }
            let u = at(t);
            let ht = ham.at(t)?;
            for &tp in times {
                let up = at(tp);
                let p = self.assemble(u, up);
                let dp = self.assemble(&du, up);
                worst = worst.max(max_abs(&(dp * I - &ht * &p)));
                scale = scale.max(max_abs(&p));
            }
        }
        Ok(worst / scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HadamardRow {
    pub k: f64,
    pub omega: f64,
    /// `‖χ⁻(S̃(k)) − Π₋(k)‖`
    pub norm_diff: f64,
    /// `ω^n · norm_diff` for `n = 0 … n_max`
    pub weighted: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HadamardTable {
    pub rows: Vec<HadamardRow>,
    /// `sup_k ω^n ‖χ⁻(S̃) − Π₋‖` per `n`.
    pub sup: Vec<f64>,
    /// Log-log slope of `norm_diff` against `ω` over the upper half of the
    /// rows above the rounding floor.
    pub fitted_exponent: f64,
}

/// Momentum-decay diagnostic for `χ⁻(S̃) − χ⁻(H)` along `direction`.
pub fn hadamard_diagnostic(
    rep: &SpinorRep,
    pot: &PotentialSpec,
    mass: f64,
    t0: f64,
    k_values: &[f64],
    direction: &[f64],
    n_max: usize,
    qcfg: &QuadratureConfig,
    ecfg: &EvolutionConfig,
) -> Result<HadamardTable> {
    let norm = libm::sqrt(direction.iter().map(|x| x * x).sum::<f64>());
    if norm == 0.0 || direction.len() != rep.spatial_dim() {
        return Err(Error::Config(format!("direction {direction:?} must be a nonzero spatial vector")));
    }
    let mut rows = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let kv: Vec<f64> = direction.iter().map(|x| x * k / norm).collect();
        let mode = MomentumMode::new(&kv, mass)?;
        let block = assemble_signature(rep, &mode, pot, t0, qcfg, ecfg)?;
        if !spectral_gap_check(&block).in_gap_bands {
            return Err(Error::Regime(format!("spectral bands violated at |k| = {k}; the diagnostic needs the gap")));
        }
        let chi = negative_projector(&block, None)?;
        let norm_diff = op_norm(&(chi - &block.projectors.1));
        let weighted = (0..=n_max).map(|n| libm::pow(mode.omega, n as f64) * norm_diff).collect();
        rows.push(HadamardRow { k, omega: mode.omega, norm_diff, weighted });
    }
    let sup = (0..=n_max).map(|n| rows.iter().map(|r| r.weighted[n]).fold(0.0, f64::max)).collect();
    let live: Vec<&HadamardRow> = rows.iter().filter(|r| r.norm_diff > 1e-14).collect();
    let upper = &live[live.len() / 2..];
    let fitted_exponent = if upper.len() >= 2 {
        let xs: Vec<f64> = upper.iter().map(|r| r.omega).collect();
        let ys: Vec<f64> = upper.iter().map(|r| r.norm_diff).collect();
        loglog_slope(&xs, &ys)
    } else {
        f64::NAN
    };
    Ok(HadamardTable { rows, sup, fitted_exponent })
}

/// The doubled space `K ⊕ K*` for a finite set of momentum blocks.
///
/// `K` is the direct sum of the block Cauchy-data spaces at `t0`; an
/// element `f ⊕ g` is stored as `(k̃f, conj(k̃g*))` so that the inner
/// product is the standard one on `C^{2N}` and `Γ(u, w) = (w̄, ū)`.
#[derive(Debug, Clone)]
pub struct DoubledSpace {
    pub block_dims: Vec<usize>,
    pub chi_minus: Mat,
    pub chi_plus: Mat,
    /// `R = diag(χ⁻, conj χ⁺)`
    pub r: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubledInvariants {
    pub gamma_involution: f64,
    pub antiunitarity: f64,
    pub r_hermitian: f64,
    pub r_idempotent: f64,
    pub r_complement: f64,
    pub r_min_eigenvalue: f64,
    pub r_max_eigenvalue: f64,
}

impl DoubledInvariants {
    pub fn worst(&self) -> f64 {
        [
            self.gamma_involution,
            self.antiunitarity,
            self.r_hermitian,
            self.r_idempotent,
            self.r_complement,
            (-self.r_min_eigenvalue).max(0.0),
            (self.r_max_eigenvalue - 1.0).max(0.0),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn build_doubled_space(blocks: &[SignatureBlock], zero_guard: Option<f64>) -> Result<DoubledSpace> {
    if blocks.is_empty() {
        return Err(Error::Config("doubled space needs at least one block".into()));
    }
    let block_dims: Vec<usize> = blocks.iter().map(|b| b.s_tilde.nrows()).collect();
    let n: usize = block_dims.iter().sum();
    let mut chi_minus = Mat::zeros(n, n);
    let mut at = 0;
    for b in blocks {
        let d = b.s_tilde.nrows();
        chi_minus.view_mut((at, at), (d, d)).copy_from(&negative_projector(b, zero_guard)?);
        at += d;
    }
    let chi_plus = Mat::identity(n, n) - &chi_minus;
    let mut r = Mat::zeros(2 * n, 2 * n);
    r.view_mut((0, 0), (n, n)).copy_from(&chi_minus);
    r.view_mut((n, n), (n, n)).copy_from(&chi_plus.map(|z| z.conj()));
    Ok(DoubledSpace { block_dims, chi_minus, chi_plus, r })
}

impl DoubledSpace {
    /// `dim K`
    pub fn one_particle_dim(&self) -> usize {
        self.chi_minus.nrows()
    }

    pub fn dim(&self) -> usize {
        2 * self.one_particle_dim()
    }

    pub fn gamma(&self, h: &Vector) -> Vector {
        let n = self.one_particle_dim();
        Vector::from_fn(2 * n, |i, _| if i < n { h[n + i].conj() } else { h[i - n].conj() })
    }

    pub fn inner(&self, h: &Vector, hp: &Vector) -> C64 {
        h.dotc(hp)
    }

    /// `ΓRΓ` as a matrix: `J R̄ J` with `J` the swap of the summands.
    pub fn gamma_r_gamma(&self) -> Mat {
        let n = self.one_particle_dim();
        let rbar = self.r.map(|z| z.conj());
        let mut out = Mat::zeros(2 * n, 2 * n);
        for i in 0..2 * n {
            for j in 0..2 * n {
                out[(i, j)] = rbar[((i + n) % (2 * n), (j + n) % (2 * n))];
            }
        }
        out
    }

    /// Element `f ⊕ 0` from the Cauchy data `k̃f` (the field `Ψ*(f)`).
    pub fn field_dagger_vector(&self, kf: &Vector) -> Vector {
        let n = self.one_particle_dim();
        Vector::from_fn(2 * n, |i, _| if i < n { kf[i] } else { C64::new(0.0, 0.0) })
    }

    /// Element `0 ⊕ g` from the Cauchy data `k̃g*` (the field `Ψ(g)`).
    pub fn field_vector(&self, kg_star: &Vector) -> Vector {
        let n = self.one_particle_dim();
        Vector::from_fn(2 * n, |i, _| if i < n { C64::new(0.0, 0.0) } else { kg_star[i - n].conj() })
    }

    /// Checks the invariants, using `probes` for the anti-unitarity of `Γ`.
    pub fn invariants(&self, probes: &[Vector]) -> DoubledInvariants {
        let d = self.dim();
        let mut gamma_involution = 0.0f64;
        let mut antiunitarity = 0.0f64;
        for h in probes {
            gamma_involution = gamma_involution.max((self.gamma(&self.gamma(h)) - h).camax());
            for hp in probes {
                let lhs = self.inner(&self.gamma(h), &self.gamma(hp));
                antiunitarity = antiunitarity.max((lhs - self.inner(hp, h)).norm());
            }
        }
        let (eigs, _) = hermitian_eigen(&self.r);
        DoubledInvariants {
            gamma_involution,
            antiunitarity,
            r_hermitian: max_abs(&(&self.r - self.r.adjoint())),
            r_idempotent: max_abs(&(&self.r * &self.r - &self.r)),
            r_complement: max_abs(&(&self.r + self.gamma_r_gamma() - Mat::identity(d, d))),
            r_min_eigenvalue: eigs.iter().copied().fold(f64::INFINITY, f64::min),
            r_max_eigenvalue: eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// A test function `φ((t − centre)/half_width) · spinor` in one block.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTestFunction {
    pub block: usize,
    pub centre: f64,
    pub half_width: f64,
    pub spinor: Vector,
}

impl TimeTestFunction {
    fn rule(&self) -> crate::quadrature::Rule {
        composite_gauss(self.centre - self.half_width, self.centre + self.half_width, self.half_width / 8.0, 16)
    }
}

/// `k̃f` at `t0` in the direct sum of blocks: `(1/2π) ∫ Ũ(t0,t) γ⁰ f(t) dt`.
pub fn smeared_cauchy_data(
    rep: &SpinorRep,
    blocks: &[ProjectorBlock],
    pot: &PotentialSpec,
    f: &TimeTestFunction,
    ecfg: &EvolutionConfig,
) -> Result<Vector> {
    let b = blocks.get(f.block).ok_or_else(|| Error::Usage(format!("no block {}", f.block)))?;
    let rule = f.rule();
    let prop = b.propagator(rep, pot, &rule.nodes, ecfg)?;
    let d = rep.spinor_dim;
    let mut local = Vector::zeros(d);
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let i = prop.nodes.iter().position(|&s| s == t).expect("node present");
        let amp = w * bump((t - f.centre) / f.half_width) / (2.0 * PI);
        local += (prop.backward(i) * rep.gamma0() * &f.spinor).scale(amp);
    }
    let offset: usize = blocks[..f.block].iter().map(|b| b.chi_minus.nrows()).sum();
    let total: usize = blocks.iter().map(|b| b.chi_minus.nrows()).sum();
    let mut out = Vector::zeros(total);
    out.rows_mut(offset, d).copy_from(&local);
    Ok(out)
}

/// `−<g*|P f> = −(1/2π) ∫∫ g*(t)† γ⁰ P̂(t,t') f(t') dt dt'` from kernel samples.
pub fn projector_pairing(
    rep: &SpinorRep,
    blocks: &[ProjectorBlock],
    pot: &PotentialSpec,
    g_star: &TimeTestFunction,
    f: &TimeTestFunction,
    ecfg: &EvolutionConfig,
) -> Result<C64> {
    if g_star.block != f.block {
        // blocks of different momenta are orthogonal
        return Ok(C64::new(0.0, 0.0));
    }
    let b = blocks.get(f.block).ok_or_else(|| Error::Usage(format!("no block {}", f.block)))?;
    let (rg, rf) = (g_star.rule(), f.rule());
    let mut times = rg.nodes.clone();
    times.extend_from_slice(&rf.nodes);
    let prop = b.propagator(rep, pot, &times, ecfg)?;
    let at = |t: f64| prop.forward(prop.nodes.iter().position(|&s| s == t).expect("node present"));
    let g0 = rep.gamma0();
    let mut total = C64::new(0.0, 0.0);
    for (&t, &wt) in rg.nodes.iter().zip(&rg.weights) {
        let gv = g_star.spinor.scale(wt * bump((t - g_star.centre) / g_star.half_width));
        let row = gv.adjoint() * g0;
        for (&tp, &wp) in rf.nodes.iter().zip(&rf.weights) {
            let fv = f.spinor.scale(wp * bump((tp - f.centre) / f.half_width));
            total += (&row * b.assemble(at(t), at(tp)) * fv)[(0, 0)];
        }
    }
    Ok(-total / (2.0 * PI))
}

/// Explicit Fock realization of the quasi-free state of `R` with
/// `2^N` states for `N = dim K ≤ 8`.
#[derive(Debug, Clone)]
pub struct FockOracle {
    pub space: DoubledSpace,
    /// Orthonormal basis `φ_j` of `ran R`; `Γφ_j` spans `ran(1 − R)`.
    pub basis: Vec<Vector>,
    /// Annihilators `c_j` (Jordan-Wigner ordering).
    pub annihilators: Vec<Mat>,
    /// The state vector `Ω`, annihilated by every `c_j`.
    pub omega: Vector,
}

pub const MAX_FOCK_MODES: usize = 8;

pub fn fock_oracle(space: &DoubledSpace) -> Result<FockOracle> {
    let n = space.one_particle_dim();
    if n > MAX_FOCK_MODES {
        return Err(Error::Size(format!("Fock oracle supports at most {MAX_FOCK_MODES} modes, got {n}")));
    }
    let (vals, vecs) = hermitian_eigen(&space.r);
    let basis: Vec<Vector> = (0..2 * n).filter(|&i| vals[i] > 0.5).map(|i| vecs.column(i).into_owned()).collect();
    if basis.len() != n {
        return Err(Error::Degenerate(format!("R has rank {} on a doubled space of dimension {}", basis.len(), 2 * n)));
    }
    let dim = 1usize << n;
    let annihilators = (0..n)
        .map(|j| {
            let mut c = Mat::zeros(dim, dim);
            for s in 0..dim {
                if s & (1 << j) != 0 {
                    let parity = (s & ((1 << j) - 1)).count_ones();
                    let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
                    c[(s ^ (1 << j), s)] = C64::new(sign, 0.0);
                }
            }
            c
        })
        .collect();
    let mut omega = Vector::zeros(dim);
    omega[0] = C64::new(1.0, 0.0);
    Ok(FockOracle { space: space.clone(), basis, annihilators, omega })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockReport {
    pub car: f64,
    pub hermiticity: f64,
    /// `|ω(B(h)*B(h')) − (h|Rh')|`
    pub two_point_r: f64,
    pub odd_moments: f64,
    pub wick_four_point: f64,
    pub min_positivity: f64,
}

impl FockOracle {
    fn dim(&self) -> usize {
        self.omega.len()
    }

    /// `B(h) = Σ_j (φ_j|h) c_j† + (Γφ_j|h) c_j`
    pub fn field(&self, h: &Vector) -> Mat {
        let mut out = Mat::zeros(self.dim(), self.dim());
        for (phi, c) in self.basis.iter().zip(&self.annihilators) {
            let a = phi.dotc(h);
            let b = self.space.gamma(phi).dotc(h);
            out += c.adjoint() * a + c * b;
        }
        out
    }

    /// `⟨Ω, B(h_1) ⋯ B(h_n) Ω⟩`
    pub fn n_point(&self, hs: &[Vector]) -> C64 {
        let mut v = self.omega.clone();
        for h in hs.iter().rev() {
            v = self.field(h) * v;
        }
        self.omega.dotc(&v)
    }

    /// Sum over ordered pairings with the two-point function.
    pub fn wick(&self, hs: &[Vector]) -> C64 {
        if hs.is_empty() {
            return C64::new(1.0, 0.0);
        }
        if hs.len() % 2 == 1 {
            return C64::new(0.0, 0.0);
        }
        let mut total = C64::new(0.0, 0.0);
        for k in 1..hs.len() {
            let pair = self.n_point(&[hs[0].clone(), hs[k].clone()]);
            let rest: Vec<Vector> = hs[1..].iter().enumerate().filter(|(i, _)| i + 1 != k).map(|(_, h)| h.clone()).collect();
            let sign = if (k - 1) % 2 == 0 { 1.0 } else { -1.0 };
            total += pair * self.wick(&rest) * sign;
        }
        total
    }

    /// `ω(Ψ(g)Ψ*(f))` from the Cauchy data `k̃g*` and `k̃f`.
    pub fn two_point_fields(&self, kg_star: &Vector, kf: &Vector) -> C64 {
        self.n_point(&[self.space.field_vector(kg_star), self.space.field_dagger_vector(kf)])
    }

    /// Runs the algebraic checks on the given probe vectors (at least four).
    pub fn report(&self, probes: &[Vector]) -> Result<FockReport> {
        if probes.len() < 4 {
            return Err(Error::Usage("the Fock report needs at least four probe vectors".into()));
        }
        let dim = self.dim();
        let eye = Mat::identity(dim, dim);
        let fields: Vec<Mat> = probes.iter().map(|h| self.field(h)).collect();
        let (mut car, mut hermiticity, mut two_point_r, mut odd_moments) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (a, h) in probes.iter().enumerate() {
            hermiticity = hermiticity.max(max_abs(&(fields[a].adjoint() - self.field(&self.space.gamma(h)))));
            for (b, hp) in probes.iter().enumerate() {
                let anti = fields[a].adjoint() * &fields[b] + &fields[b] * fields[a].adjoint();
                car = car.max(max_abs(&(anti - &eye * self.space.inner(h, hp))));
                let state = self.omega.dotc(&(fields[a].adjoint() * &fields[b] * &self.omega));
                two_point_r = two_point_r.max((state - h.dotc(&(&self.space.r * hp))).norm());
                let one = self.n_point(&[h.clone()]);
                let three = self.n_point(&[h.clone(), hp.clone(), probes[(a + b) % probes.len()].clone()]);
                odd_moments = odd_moments.max(one.norm()).max(three.norm());
            }
        }
        let four = &probes[..4];
        let wick_four_point = (self.n_point(four) - self.wick(four)).norm();
        let mut min_positivity = f64::INFINITY;
        for a in 0..probes.len() {
            for b in 0..probes.len() {
                // X = B(h_a) + B(h_a)B(h_b): ω(X*X) ≥ 0
                let x = &fields[a] + &fields[a] * &fields[b];
                let v = &x * &self.omega;
                min_positivity = min_positivity.min(v.dotc(&v).re);
            }
        }
        Ok(FockReport { car, hermiticity, two_point_r, odd_moments, wick_four_point, min_positivity })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::potential::gaussian_scalar_pulse;
    use crate::spinor::{build_dirac_representation, frequency_projectors};
    use proptest::prelude::*;

    fn rep4() -> SpinorRep {
        build_dirac_representation(4).unwrap()
    }

    fn rep2() -> SpinorRep {
        build_dirac_representation(2).unwrap()
    }

    fn blocks(rep: &SpinorRep, pot: &PotentialSpec, ks: &[Vec<f64>], t0: f64) -> Vec<ProjectorBlock> {
        let qcfg = QuadratureConfig::covering(pot, t0);
        ks.iter()
            .map(|k| projector_block(rep, &MomentumMode::new(k, 1.0).unwrap(), pot, t0, &qcfg, &EvolutionConfig::default()).unwrap())
            .collect()
    }

    fn random_vector(n: usize, seed: u64) -> Vector {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        Vector::from_fn(n, |_, _| c(next(), next()))
    }

    #[test]
    fn vacuum_equal_time_kernel() {
        let rep = rep4();
        let vac = PotentialSpec::vacuum();
        let b = &blocks(&rep, &vac, &[vec![0.3, -0.2, 0.9]], 0.0)[0];
        let grid = b.kernel_grid(&rep, &vac, &[-1.0, 0.5, 2.0], &EvolutionConfig::default()).unwrap();
        let (_, pm) = frequency_projectors(&rep, b.mode());
        let expect = (pm * rep.gamma0()).scale(-1.0 / (2.0 * PI));
        for i in 0..3 {
            assert!(max_abs(&(&grid.values[i][i] - &expect)) < 1e-12);
        }
    }

    #[test]
    fn kernel_symmetry_and_dirac_equation_with_pulse() {
        let rep = rep4();
        let pot = gaussian_scalar_pulse(1.0, 0.3);
        let b = &blocks(&rep, &pot, &[vec![0.0, 0.5, 0.5]], 0.0)[0];
        let times: Vec<f64> = (0..20).map(|i| -4.0 + 8.0 * i as f64 / 19.0).collect();
        let cfg = EvolutionConfig::default();
        let grid = b.kernel_grid(&rep, &pot, &times, &cfg).unwrap();
        assert!(b.symmetry_residual(&rep, &grid) < 1e-9);
        let coarse = b.dirac_residual(&rep, &pot, &times, 2e-2, &cfg).unwrap();
        let fine = b.dirac_residual(&rep, &pot, &times, 1e-2, &cfg).unwrap();
        assert!(fine < 1e-6, "{fine}");
        assert!(fine < coarse);
    }

    #[test]
    fn vacuum_hadamard_entries_vanish() {
        let rep = rep4();
        let vac = PotentialSpec::vacuum();
        let t = hadamard_diagnostic(&rep, &vac, 1.0, 0.0, &[0.0, 1.0, 5.0], &[0.0, 0.0, 1.0], 6, &QuadratureConfig::covering(&vac, 0.0), &EvolutionConfig::default()).unwrap();
        assert!(t.rows.iter().all(|r| r.norm_diff < 1e-14));
    }

    #[test]
    fn pulse_projector_difference_decays_fast() {
        let rep = rep4();
        let pot = gaussian_scalar_pulse(1.0, 0.3);
        let t0 = pot.support().0;
        let ks = [0.0, 2.0, 4.0, 6.0, 8.0, libm::sqrt(99.0)];
        let t = hadamard_diagnostic(&rep, &pot, 1.0, t0, &ks, &[0.0, 0.0, 1.0], 6, &QuadratureConfig::covering(&pot, t0), &EvolutionConfig::default()).unwrap();
        // a homogeneous scalar pulse commutes with H at k = 0
        assert!(t.rows[0].norm_diff < 1e-14);
        let last = t.rows.last().unwrap().norm_diff;
        assert!(t.sup[0] > 1e-5 && last < 1e-6 * t.sup[0], "{:?} {last}", t.sup);
    }

    #[test]
    fn vacuum_doubled_space_is_frequency_splitting() {
        let rep = rep4();
        let vac = PotentialSpec::vacuum();
        let bs = blocks(&rep, &vac, &[vec![0.0, 0.0, 0.4], vec![0.7, 0.0, 0.0]], 0.0);
        let sigs: Vec<SignatureBlock> = bs.iter().map(|b| b.signature.clone()).collect();
        let ds = build_doubled_space(&sigs, None).unwrap();
        for (i, b) in bs.iter().enumerate() {
            let (pp, pm) = frequency_projectors(&rep, b.mode());
            let o = 4 * i;
            assert!(max_abs(&(ds.r.view((o, o), (4, 4)).into_owned() - pm)) < 1e-12);
            assert!(max_abs(&(ds.r.view((8 + o, 8 + o), (4, 4)).into_owned() - pp.map(|z| z.conj()))) < 1e-12);
        }
        let probes: Vec<Vector> = (0..5).map(|s| random_vector(16, s)).collect();
        assert!(ds.invariants(&probes).worst() < 1e-12);
    }

    #[test]
    fn one_mode_fock_space_by_hand() {
        // K = C, R = diag(1, 0): the two-point function is the full pairing
        let ds = DoubledSpace {
            block_dims: vec![1],
            chi_minus: Mat::identity(1, 1),
            chi_plus: Mat::zeros(1, 1),
            r: Mat::from_diagonal(&Vector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])),
        };
        let fock = fock_oracle(&ds).unwrap();
        assert_eq!(fock.annihilators[0], Mat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]));
        let (kg, kf) = (Vector::from_element(1, c(0.3, 0.4)), Vector::from_element(1, c(-1.0, 2.0)));
        let two = fock.two_point_fields(&kg, &kf);
        let pairing = kg.dotc(&kf);
        assert!((two - pairing).norm() < 1e-15);
        let (b1, b2) = (fock.field(&ds.field_vector(&kg)), fock.field(&ds.field_dagger_vector(&kf)));
        let anti = &b1 * &b2 + &b2 * &b1;
        assert!(max_abs(&(anti - Mat::identity(2, 2) * pairing)) < 1e-15);
    }

    #[test]
    fn state_algebra_on_four_modes_with_pulse() {
        let rep = rep2();
        let pot = gaussian_scalar_pulse(1.0, 0.3);
        let bs = blocks(&rep, &pot, &[vec![0.25], vec![-0.75]], 0.0);
        let sigs: Vec<SignatureBlock> = bs.iter().map(|b| b.signature.clone()).collect();
        let ds = build_doubled_space(&sigs, None).unwrap();
        let probes: Vec<Vector> = (0..6).map(|s| random_vector(8, 100 + s)).collect();
        let inv = ds.invariants(&probes);
        assert!(inv.worst() < 1e-10, "{inv:?}");
        let fock = fock_oracle(&ds).unwrap();
        let rep_ = fock.report(&probes).unwrap();
        assert!(rep_.car < 1e-10 && rep_.hermiticity < 1e-10 && rep_.two_point_r < 1e-10, "{rep_:?}");
        assert!(rep_.odd_moments < 1e-12 && rep_.wick_four_point < 1e-10 && rep_.min_positivity > -1e-12, "{rep_:?}");
    }

    #[test]
    fn two_point_function_is_minus_projector_pairing() {
        let rep = rep2();
        let pot = gaussian_scalar_pulse(1.0, 0.3);
        let bs = blocks(&rep, &pot, &[vec![0.5], vec![1.5]], 0.0);
        let sigs: Vec<SignatureBlock> = bs.iter().map(|b| b.signature.clone()).collect();
        let ds = build_doubled_space(&sigs, None).unwrap();
        let fock = fock_oracle(&ds).unwrap();
        let cfg = EvolutionConfig::default();
        let tf = |block, centre, s: [C64; 2]| TimeTestFunction { block, centre, half_width: 1.5, spinor: Vector::from_vec(s.to_vec()) };
        let cases = [
            (tf(0, -1.0, [c(1.0, 0.0), c(0.2, -0.3)]), tf(0, 0.5, [c(0.0, 1.0), c(0.4, 0.0)])),
            (tf(1, 2.0, [c(0.3, 0.1), c(-1.0, 0.0)]), tf(1, -2.0, [c(0.5, 0.5), c(0.0, 0.2)])),
            (tf(0, 0.0, [c(1.0, 0.0), c(0.0, 0.0)]), tf(1, 0.0, [c(1.0, 0.0), c(0.0, 0.0)])),
        ];
        for (g, f) in &cases {
            let kg = smeared_cauchy_data(&rep, &bs, &pot, g, &cfg).unwrap();
            let kf = smeared_cauchy_data(&rep, &bs, &pot, f, &cfg).unwrap();
            let state = fock.two_point_fields(&kg, &kf);
            let direct = projector_pairing(&rep, &bs, &pot, g, f, &cfg).unwrap();
            assert!((state - direct).norm() < 1e-10 * (1.0 + direct.norm()), "{state} vs {direct}");
        }
    }

    #[test]
    fn too_many_modes_rejected() {
        let n = 9;
        let ds = DoubledSpace { block_dims: vec![n], chi_minus: Mat::identity(n, n), chi_plus: Mat::zeros(n, n), r: Mat::identity(2 * n, 2 * n) };
        assert!(matches!(fock_oracle(&ds), Err(Error::Size(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn odd_moments_vanish_for_random_probes(seed in 0u64..1000) {
            let rep = rep2();
            let vac = PotentialSpec::vacuum();
            let bs = blocks(&rep, &vac, &[vec![0.3], vec![1.1]], 0.0);
            let sigs: Vec<SignatureBlock> = bs.iter().map(|b| b.signature.clone()).collect();
            let fock = fock_oracle(&build_doubled_space(&sigs, None).unwrap()).unwrap();
            let hs: Vec<Vector> = (0..3).map(|i| random_vector(8, seed * 7 + i)).collect();
            prop_assert!(fock.n_point(&hs).norm() < 1e-12);
            prop_assert!(fock.n_point(&hs[..1]).norm() < 1e-12);
        }
    }
}
