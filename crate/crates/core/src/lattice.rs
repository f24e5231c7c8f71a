//! Periodic 1+1 spatial lattice with a spectral derivative.
//!
//! States are `2N` complex vectors laid out as `ψ[s·N + j]` (spinor
//! component `s`, site `j`). The Hamiltonian is
//! `H = −iγ⁰γ¹∂_x + γ⁰m − γ⁰𝓑(t,x)`, which on a plane wave `e^{ikx}`
//! reduces to the momentum block `γ⁰(γ¹k + m)`.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::evolution::{EvolutionConfig, Integrator};
use crate::linalg::{c, Mat, C64};
use crate::potential::{PotentialKind, PotentialSpec};
use crate::signature::{side_rules, signature_from_sums, QuadratureConfig};
use crate::spinor::SpinorRep;

#[derive(Clone)]
pub struct Lattice {
    pub n: usize,
    pub length: f64,
    pub mass: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl core::fmt::Debug for Lattice {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Lattice").field("n", &self.n).field("length", &self.length).field("mass", &self.mass).finish()
    }
}

impl Lattice {
    pub fn new(n: usize, length: f64, mass: f64) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::Config(format!("lattice size must be even and at least 2, got {n}")));
        }
        if !(length > 0.0) || !(mass > 0.0) {
            return Err(Error::Config("lattice length and mass must be positive".into()));
        }
        let mut planner = FftPlanner::new();
        Ok(Lattice { n, length, mass, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) })
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.spacing() * j as f64).collect()
    }

    /// `k_j = 2π/L · (j for j < N/2, j − N otherwise)`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let q = 2.0 * core::f64::consts::PI / self.length;
        if j < self.n / 2 {
            q * j as f64
        } else {
            q * (j as f64 - self.n as f64)
        }
    }

    pub fn k_max(&self) -> f64 {
        (0..self.n).map(|j| self.wavenumber(j).abs()).fold(0.0, f64::max)
    }

    fn fft_in_place(&self, data: &mut [C64], inverse: bool) {
        let norm = 1.0 / (self.n as f64).sqrt();
        for s in 0..2 {
            let chunk = &mut data[s * self.n..(s + 1) * self.n];
            if inverse {
                self.inverse.process(chunk);
            } else {
                self.forward.process(chunk);
            }
            for z in chunk.iter_mut() {
                *z *= norm;
            }
        }
    }

    /// Unitary DFT of both components.
    pub fn to_fourier(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = psi.to_vec();
        self.fft_in_place(&mut out, false);
        out
    }

    pub fn from_fourier(&self, psi_hat: &[C64]) -> Vec<C64> {
        let mut out = psi_hat.to_vec();
        self.fft_in_place(&mut out, true);
        out
    }

    /// Dense unitary matrix of `to_fourier`.
    pub fn fourier_matrix(&self) -> Mat {
        let n = self.n;
        let mut f = Mat::zeros(2 * n, 2 * n);
        let norm = 1.0 / (n as f64).sqrt();
        for s in 0..2 {
            for j in 0..n {
                for x in 0..n {
                    let ph = -2.0 * core::f64::consts::PI * (j * x % n) as f64 / n as f64;
                    f[(s * n + j, s * n + x)] = c(ph.cos(), ph.sin()) * norm;
                }
            }
        }
        f
    }

    /// `e^{ik_j x}` times a 2-spinor, normalised in `ℓ²`.
    pub fn plane_wave(&self, j: usize, spinor: [C64; 2]) -> Vec<C64> {
        let mut hat = vec![C64::new(0.0, 0.0); 2 * self.n];
        hat[j] = spinor[0];
        hat[self.n + j] = spinor[1];
        self.from_fourier(&hat)
    }

    /// Exact free evolution by per-mode closed form.
    pub fn vacuum_evolve(&self, psi: &[C64], dt: f64) -> Vec<C64> {
        let mut hat = self.to_fourier(psi);
        let n = self.n;
        for j in 0..n {
            let k = self.wavenumber(j);
            let w = (k * k + self.mass * self.mass).sqrt();
            let (a, b) = (hat[j], hat[n + j]);
            // exp(−iHdt) with H = [[m,k],[k,−m]] = ω·(unit Hermitian)
            let (cs, sn) = ((w * dt).cos(), (w * dt).sin());
            let mi = C64::new(0.0, -sn / w);
            hat[j] = a * cs + mi * (self.mass * a + k * b);
            hat[n + j] = b * cs + mi * (k * a - self.mass * b);
        }
        self.from_fourier(&hat)
    }

    /// Matrix of the local coupling `−γ⁰M(t)` of the potential (without `λg(t)χ(x)`).
    fn local_coupling(&self, rep: &SpinorRep, pot: &PotentialSpec, t: f64) -> Mat {
        let g0 = rep.gamma0();
        match &pot.kind {
            PotentialKind::Scalar => -g0.clone(),
            PotentialKind::Electric => -(g0 * g0),
            PotentialKind::Custom(s) => -(g0 * s.value(t)),
        }
    }

    /// Per-site weights `λg(t)χ(x_j)` of the potential.
    fn site_factors(&self, pot: &PotentialSpec, t: f64) -> Vec<f64> {
        let f = pot.time_factor(t);
        match &pot.spatial_profile {
            None => vec![f; self.n],
            Some(p) => self.positions().iter().map(|&x| f * p.value(x)).collect(),
        }
    }
}

/// Linear combination `Σ a_i H(t_i)` applied to states via FFT.
struct CombinedHamiltonian {
    /// per-site 2×2 potential matrix (row-major)
    local: Vec<[C64; 4]>,
    weight: f64,
}

impl CombinedHamiltonian {
    fn new(lat: &Lattice, rep: &SpinorRep, pot: &PotentialSpec, terms: &[(f64, f64)]) -> Self {
        let mut local = vec![[C64::new(0.0, 0.0); 4]; lat.n];
        let mut weight = 0.0;
        for &(a, t) in terms {
            weight += a;
            if pot.time_factor(t) == 0.0 {
                continue;
            }
            let cpl = lat.local_coupling(rep, pot, t);
            for (site, f) in lat.site_factors(pot, t).into_iter().enumerate() {
                for r in 0..2 {
                    for col in 0..2 {
                        local[site][2 * r + col] += cpl[(r, col)] * (a * f);
                    }
                }
            }
        }
        CombinedHamiltonian { local, weight }
    }

    fn apply(&self, lat: &Lattice, psi: &[C64], out: &mut [C64]) {
        let n = lat.n;
        let mut hat = lat.to_fourier(psi);
        for j in 0..n {
            let k = lat.wavenumber(j) * self.weight;
            let m = lat.mass * self.weight;
            let (a, b) = (hat[j], hat[n + j]);
            hat[j] = a * m + b * k;
            hat[n + j] = a * k - b * m;
        }
        let kin = lat.from_fourier(&hat);
        for x in 0..n {
            let (a, b) = (psi[x], psi[n + x]);
            let l = &self.local[x];
            out[x] = kin[x] + l[0] * a + l[1] * b;
            out[n + x] = kin[n + x] + l[2] * a + l[3] * b;
        }
    }

    fn bound(&self, lat: &Lattice) -> f64 {
        let local = self.local.iter().map(|l| l.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
        self.weight.abs() * (lat.k_max() + lat.mass) + local
    }
}

/// `exp(−ihA)ψ` by a Taylor series, substepping when `‖hA‖` is not small.
fn expv(lat: &Lattice, a: &CombinedHamiltonian, h: f64, psi: &mut Vec<C64>) {
    let pieces = ((a.bound(lat) * h.abs() / 0.25).ceil() as usize).max(1);
    let hs = h / pieces as f64;
    let mut tmp = vec![C64::new(0.0, 0.0); psi.len()];
    for _ in 0..pieces {
        let mut term = psi.clone();
        let mut sum = psi.clone();
        for k in 1..40 {
            a.apply(lat, &term, &mut tmp);
            let f = C64::new(0.0, -hs / k as f64);
            let mut size: f64 = 0.0;
            for (t, x) in term.iter_mut().zip(&tmp) {
                *t = x * f;
                size = size.max(t.norm());
            }
            for (s, t) in sum.iter_mut().zip(&term) {
                *s += t;
            }
            if size < 1e-18 {
                break;
            }
        }
        *psi = sum;
    }
}

fn norm2(psi: &[C64]) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Numerical evolution from `a` to `b` with CF4 steps.
fn integrate(lat: &Lattice, rep: &SpinorRep, pot: &PotentialSpec, psi: &mut Vec<C64>, a: f64, b: f64, cfg: &EvolutionConfig) {
    const A1: f64 = 0.25 + 0.288_675_134_594_812_9;
    const A2: f64 = 0.25 - 0.288_675_134_594_812_9;
    const C1: f64 = 0.5 - 0.288_675_134_594_812_9;
    const C2: f64 = 0.5 + 0.288_675_134_594_812_9;
    let omega = (lat.k_max().powi(2) + lat.mass * lat.mass).sqrt();
    let steps = (((b - a).abs() / cfg.step_for(omega)).ceil() as usize).max(1);
    let h = (b - a) / steps as f64;
    for s in 0..steps {
        let t = a + h * s as f64;
        let (t1, t2) = (t + C1 * h, t + C2 * h);
        let first = CombinedHamiltonian::new(lat, rep, pot, &[(A1, t1), (A2, t2)]);
        let second = CombinedHamiltonian::new(lat, rep, pot, &[(A2, t1), (A1, t2)]);
        expv(lat, &first, h, psi);
        expv(lat, &second, h, psi);
    }
}

fn check_lattice_inputs(lat: &Lattice, rep: &SpinorRep, psi: &[C64], cfg: &EvolutionConfig) -> Result<()> {
    cfg.validate()?;
    if rep.spacetime_dim != 2 {
        return Err(Error::Regime("the lattice regime uses the 1+1 representation".into()));
    }
    if psi.len() != 2 * lat.n {
        return Err(Error::Size(format!("state has length {}, lattice needs {}", psi.len(), 2 * lat.n)));
    }
    if cfg.integrator != Integrator::Magnus4 {
        return Err(Error::Config("the lattice regime supports the Magnus-4 integrator only".into()));
    }
    Ok(())
}

/// Support-aware propagation of one state from `a` to `b`.
fn propagate_state(lat: &Lattice, rep: &SpinorRep, pot: &PotentialSpec, psi: Vec<C64>, b: f64, a: f64, cfg: &EvolutionConfig) -> Vec<C64> {
    let (lo, hi) = pot.support();
    let (x, y) = if a <= b { (a, b) } else { (b, a) };
    let (p, q) = (x.max(lo), y.min(hi));
    if pot.is_vacuum() || p >= q {
        return lat.vacuum_evolve(&psi, b - a);
    }
    let (enter, exit) = if a <= b { (p, q) } else { (q, p) };
    let mut state = lat.vacuum_evolve(&psi, enter - a);
    integrate(lat, rep, pot, &mut state, enter, exit, cfg);
    lat.vacuum_evolve(&state, b - exit)
}

/// Evolves a lattice state from `t0` to `t`.
pub fn lattice_evolve(
    lat: &Lattice,
    rep: &SpinorRep,
    pot: &PotentialSpec,
    psi: &[C64],
    t: f64,
    t0: f64,
    cfg: &EvolutionConfig,
) -> Result<Vec<C64>> {
    check_lattice_inputs(lat, rep, psi, cfg)?;
    let before = norm2(psi);
    let out = propagate_state(lat, rep, pot, psi.to_vec(), t, t0, cfg);
    let drift = (norm2(&out) - before).abs() / before.max(f64::MIN_POSITIVE);
    if drift > cfg.unitarity_tol {
        return Err(Error::Integration(format!(
            "lattice norm drift {drift:e} exceeds {:e} at step {:e}",
            cfg.unitarity_tol,
            cfg.step_for((lat.k_max().powi(2) + lat.mass * lat.mass).sqrt())
        )));
    }
    Ok(out)
}

/// Dense `2N × 2N` propagators `Ũ(node, t0)` at sorted nodes, built column by column.
#[derive(Debug, Clone)]
pub struct LatticePropagator {
    pub t0: f64,
    pub nodes: Vec<f64>,
    pub u_matrices: Vec<Mat>,
    pub max_unitarity_defect: f64,
}

impl LatticePropagator {
    pub fn build(lat: &Lattice, rep: &SpinorRep, pot: &PotentialSpec, t0: f64, nodes: &[f64], cfg: &EvolutionConfig) -> Result<Self> {
        let dim = 2 * lat.n;
        check_lattice_inputs(lat, rep, &vec![C64::new(0.0, 0.0); dim], cfg)?;
        let mut sorted = nodes.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let split = sorted.partition_point(|&t| t < t0);
        let mut u_matrices = vec![Mat::zeros(dim, dim); sorted.len()];
        for col in 0..dim {
            let mut e = vec![C64::new(0.0, 0.0); dim];
            e[col] = C64::new(1.0, 0.0);
            let (mut t_prev, mut state) = (t0, e.clone());
            for i in split..sorted.len() {
                state = propagate_state(lat, rep, pot, state, sorted[i], t_prev, cfg);
                t_prev = sorted[i];
                u_matrices[i].column_mut(col).copy_from_slice(&state);
            }
            let (mut t_prev, mut state) = (t0, e);
            for i in (0..split).rev() {
                state = propagate_state(lat, rep, pot, state, sorted[i], t_prev, cfg);
                t_prev = sorted[i];
                u_matrices[i].column_mut(col).copy_from_slice(&state);
            }
        }
        let max_unitarity_defect = u_matrices.iter().map(crate::linalg::unitarity_defect).fold(0.0, f64::max);
        if max_unitarity_defect > cfg.unitarity_tol {
            return Err(Error::Integration(format!(
                "lattice unitarity defect {max_unitarity_defect:e} exceeds {:e}",
                cfg.unitarity_tol
            )));
        }
        Ok(LatticePropagator { t0, nodes: sorted, u_matrices, max_unitarity_defect })
    }
}

/// Dense vacuum propagator `U(t, t0)` on the lattice.
pub fn vacuum_matrix(lat: &Lattice, dt: f64) -> Mat {
    let dim = 2 * lat.n;
    let mut u = Mat::zeros(dim, dim);
    for col in 0..dim {
        let mut e = vec![C64::new(0.0, 0.0); dim];
        e[col] = C64::new(1.0, 0.0);
        u.column_mut(col).copy_from_slice(&lat.vacuum_evolve(&e, dt));
    }
    u
}

/// Dense `𝒱(t) = −γ⁰𝓑(t,x)` on the lattice.
pub fn perturbation_matrix(lat: &Lattice, rep: &SpinorRep, pot: &PotentialSpec, t: f64) -> Mat {
    let n = lat.n;
    let mut v = Mat::zeros(2 * n, 2 * n);
    if pot.time_factor(t) == 0.0 {
        return v;
    }
    let cpl = lat.local_coupling(rep, pot, t);
    for (x, f) in lat.site_factors(pot, t).into_iter().enumerate() {
        for r in 0..2 {
            for col in 0..2 {
                v[(r * n + x, col * n + x)] = cpl[(r, col)] * f;
            }
        }
    }
    v
}

/// Vacuum signature `S_m` on the lattice: the 2×2 blocks `H(k_j)/ω_j` in Fourier space.
pub fn vacuum_signature_matrix(lat: &Lattice) -> Mat {
    let n = lat.n;
    let mut hat = Mat::zeros(2 * n, 2 * n);
    for j in 0..n {
        let k = lat.wavenumber(j);
        let w = (k * k + lat.mass * lat.mass).sqrt();
        hat[(j, j)] = c(lat.mass / w, 0.0);
        hat[(j, n + j)] = c(k / w, 0.0);
        hat[(n + j, j)] = c(k / w, 0.0);
        hat[(n + j, n + j)] = c(-lat.mass / w, 0.0);
    }
    let f = lat.fourier_matrix();
    f.adjoint() * hat * f
}

/// Signature operator of the whole lattice, with its Fourier-space form.
#[derive(Debug, Clone)]
pub struct LatticeSignature {
    pub t0: f64,
    pub s_tilde: Mat,
    /// `F S̃ F†`, ordered like the states: `(s·N + j)` for wavenumber `j`.
    pub fourier: Mat,
    pub max_unitarity_defect: f64,
}

impl LatticeSignature {
    /// The 2×2 block of wavenumber index `j`.
    pub fn block(&self, j: usize) -> Mat {
        let n = self.fourier.nrows() / 2;
        let idx = [j, n + j];
        Mat::from_fn(2, 2, |r, c| self.fourier[(idx[r], idx[c])])
    }

    /// Largest Fourier entry coupling two different wavenumbers.
    pub fn mode_coupling(&self) -> f64 {
        let n = self.fourier.nrows() / 2;
        let mut worst = 0.0f64;
        for r in 0..2 * n {
            for c in 0..2 * n {
                if r % n != c % n {
                    worst = worst.max(self.fourier[(r, c)].norm());
                }
            }
        }
        worst
    }
}

/// `S̃` on the lattice from the factored single and double time integrals,
/// sweeping `Ũ` node to node on each side of `t0` without storing it.
pub fn lattice_signature(
    lat: &Lattice,
    rep: &SpinorRep,
    pot: &PotentialSpec,
    t0: f64,
    qcfg: &QuadratureConfig,
    cfg: &EvolutionConfig,
) -> Result<LatticeSignature> {
    let dim = 2 * lat.n;
    check_lattice_inputs(lat, rep, &vec![C64::new(0.0, 0.0); dim], cfg)?;
    qcfg.validate(pot, t0)?;
    let omega = (lat.k_max().powi(2) + lat.mass * lat.mass).sqrt();
    let (plus, minus) = side_rules(pot, t0, omega, qcfg);
    let mut sums = [Mat::zeros(dim, dim), Mat::zeros(dim, dim)];
    let mut max_unitarity_defect = 0.0f64;
    for (side, rule) in [plus, minus].into_iter().enumerate() {
        let mut order: Vec<usize> = (0..rule.len()).collect();
        order.sort_by(|&a, &b| (rule.nodes[a] - t0).abs().partial_cmp(&(rule.nodes[b] - t0).abs()).unwrap());
        let mut u = Mat::identity(dim, dim);
        let mut t_prev = t0;
        for i in order {
            let t = rule.nodes[i];
            for col in 0..dim {
                let state: Vec<C64> = u.column(col).iter().copied().collect();
                let next = propagate_state(lat, rep, pot, state, t, t_prev, cfg);
                u.column_mut(col).copy_from_slice(&next);
            }
            t_prev = t;
            let x = u.adjoint() * perturbation_matrix(lat, rep, pot, t) * vacuum_matrix(lat, t - t0);
            sums[side] += x.scale(rule.weights[i]);
        }
        max_unitarity_defect = max_unitarity_defect.max(crate::linalg::unitarity_defect(&u));
    }
    if max_unitarity_defect > cfg.unitarity_tol {
        return Err(Error::Integration(format!(
            "lattice unitarity defect {max_unitarity_defect:e} exceeds {:e}",
            cfg.unitarity_tol
        )));
    }
    let s_m = vacuum_signature_matrix(lat);
    let (first, second) = signature_from_sums(&s_m, &sums[0], &sums[1]);
    let s_tilde = s_m + first + second;
    let f = lat.fourier_matrix();
    let fourier = &f * &s_tilde * f.adjoint();
    Ok(LatticeSignature { t0, s_tilde, fourier, max_unitarity_defect })
}
