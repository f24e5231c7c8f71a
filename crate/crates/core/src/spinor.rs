//! Gamma matrices, vacuum momentum-space objects and the mass-derivative
//! decompositions of the vacuum propagator.
//!
//! Conventions: metric diag(+,-,-,-), Dirac representation in 3+1, and the
//! slash `p̸ = γ⁰p⁰ − Σ γ^i p^i`. With these choices the vacuum Hamiltonian
//! `H(k) = γ⁰(γ⃗·k + m)` satisfies `Π± = (1 ± H/ω)/2`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{c, eye, from_rows, max_abs, r, Mat, C64, I, ONE, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct SpinorRep {
    pub spacetime_dim: usize,
    pub spinor_dim: usize,
    /// γ⁰ … γ^{d−1}
    pub gammas: Vec<Mat>,
    /// Signature matrix of the spin scalar product (equals γ⁰).
    pub spin_sign: Mat,
}

impl SpinorRep {
    pub fn gamma0(&self) -> &Mat {
        &self.gammas[0]
    }

    pub fn spatial_dim(&self) -> usize {
        self.spacetime_dim - 1
    }

    pub fn eye(&self) -> Mat {
        eye(self.spinor_dim)
    }

    /// `Σ γ^i k^i`
    pub fn gamma_dot(&self, k: &[f64]) -> Mat {
        let mut out = Mat::zeros(self.spinor_dim, self.spinor_dim);
        for (i, &ki) in k.iter().enumerate() {
            out += self.gammas[i + 1].scale(ki);
        }
        out
    }

    /// `p̸ = γ⁰p⁰ − Σ γ^i p^i`
    pub fn slash(&self, p0: f64, p: &[f64]) -> Mat {
        self.gamma0().scale(p0) - self.gamma_dot(p)
    }

    /// Spin scalar product `≺ψ|φ≻ = ψ†γ⁰φ`.
    pub fn spin_product(&self, psi: &crate::Vector, phi: &crate::Vector) -> C64 {
        (psi.adjoint() * &self.spin_sign * phi)[(0, 0)]
    }

    /// Spin adjoint `A* = γ⁰A†γ⁰`.
    pub fn spin_adjoint(&self, a: &Mat) -> Mat {
        self.gamma0() * a.adjoint() * self.gamma0()
    }
}

pub fn build_dirac_representation(spacetime_dim: usize) -> Result<SpinorRep> {
    let z = ZERO;
    let o = ONE;
    let gammas = match spacetime_dim {
        2 => vec![
            from_rows(2, &[o, z, z, -o]),
            from_rows(2, &[z, o, -o, z]),
        ],
        4 => {
            let sigma = [
                [z, o, o, z],
                [z, -I, I, z],
                [o, z, z, -o],
            ];
            let mut gs = vec![from_rows(4, &[o, z, z, z, z, o, z, z, z, z, -o, z, z, z, z, -o])];
            for s in sigma.iter() {
                let mut g = Mat::zeros(4, 4);
                for a in 0..2 {
                    for b in 0..2 {
                        g[(a, b + 2)] = s[2 * a + b];
                        g[(a + 2, b)] = -s[2 * a + b];
                    }
                }
                gs.push(g);
            }
            gs
        }
        d => {
            return Err(Error::Config(alloc::format!(
                "unsupported spacetime dimension {d}; expected 2 or 4"
            )))
        }
    };
    let spin_sign = gammas[0].clone();
    Ok(SpinorRep { spacetime_dim, spinor_dim: gammas[0].nrows(), gammas, spin_sign })
}

/// Largest residual of the Clifford relations `{γ^i, γ^j} = 2η^{ij}`.
pub fn clifford_residual(rep: &SpinorRep) -> f64 {
    let n = rep.spinor_dim;
    let mut worst: f64 = 0.0;
    for (i, gi) in rep.gammas.iter().enumerate() {
        for (j, gj) in rep.gammas.iter().enumerate() {
            let eta = if i != j { 0.0 } else if i == 0 { 1.0 } else { -1.0 };
            let anti = gi * gj + gj * gi - eye(n).scale(2.0 * eta);
            worst = worst.max(max_abs(&anti));
        }
    }
    worst
}

/// Largest residual of `γ⁰ (γ^j)† γ⁰ = γ^j`.
pub fn spin_adjointness_residual(rep: &SpinorRep) -> f64 {
    rep.gammas.iter().map(|g| max_abs(&(rep.spin_adjoint(g) - g))).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumMode {
    pub k: Vec<f64>,
    pub m: f64,
    pub omega: f64,
}

impl MomentumMode {
    pub fn new(k: &[f64], m: f64) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Config(alloc::format!("mass must be positive, got {m}")));
        }
        let k2: f64 = k.iter().map(|x| x * x).sum();
        Ok(MomentumMode { k: k.to_vec(), m, omega: libm::sqrt(k2 + m * m) })
    }

    pub fn k_abs(&self) -> f64 {
        libm::sqrt(self.k_sq())
    }

    pub fn k_sq(&self) -> f64 {
        self.k.iter().map(|x| x * x).sum()
    }

    pub fn with_mass(&self, m: f64) -> Result<Self> {
        MomentumMode::new(&self.k, m)
    }
}

fn check_mode(rep: &SpinorRep, mode: &MomentumMode) {
    assert_eq!(mode.k.len(), rep.spatial_dim(), "momentum dimension does not match representation");
}

/// `H(k) = γ⁰(γ⃗·k + m)`
pub fn vacuum_hamiltonian(rep: &SpinorRep, mode: &MomentumMode) -> Mat {
    check_mode(rep, mode);
    rep.gamma0() * (rep.gamma_dot(&mode.k) + rep.eye().scale(mode.m))
}

/// `Π± = ±(k̸± + m)γ⁰/(2ω)` with `k± = (±ω, k)`.
pub fn frequency_projectors(rep: &SpinorRep, mode: &MomentumMode) -> (Mat, Mat) {
    check_mode(rep, mode);
    let w = mode.omega;
    let id = rep.eye();
    let plus = (rep.slash(w, &mode.k) + id.scale(mode.m)) * rep.gamma0();
    let minus = (rep.slash(-w, &mode.k) + id.scale(mode.m)) * rep.gamma0();
    (plus.scale(0.5 / w), minus.scale(-0.5 / w))
}

/// Vacuum signature matrix `S_m(k) = (m − Σ k^i γ^i) γ⁰ / ω`, the sum of
/// `(k̸ + m)γ⁰/(2ω)` over both mass-shell points.
pub fn vacuum_signature(rep: &SpinorRep, mode: &MomentumMode) -> Mat {
    check_mode(rep, mode);
    (rep.eye().scale(mode.m) - rep.gamma_dot(&mode.k)) * rep.gamma0().scale(1.0 / mode.omega)
}

fn phase(x: f64) -> C64 {
    c(libm::cos(x), libm::sin(x))
}

/// `U(t,t0;k) = Π₊ e^{−iω(t−t0)} + Π₋ e^{+iω(t−t0)}`
pub fn vacuum_evolution(rep: &SpinorRep, mode: &MomentumMode, t: f64, t0: f64) -> Mat {
    let (p, q) = frequency_projectors(rep, mode);
    let wt = mode.omega * (t - t0);
    p * phase(-wt) + q * phase(wt)
}

/// Matrices V, W with `(t−t0) U = ∂_m V + W`.
pub fn mass_derivative_operators(rep: &SpinorRep, mode: &MomentumMode, t: f64, t0: f64) -> (Mat, Mat) {
    check_mode(rep, mode);
    let (m, w) = (mode.m, mode.omega);
    let tau = t - t0;
    let id = rep.eye();
    let g0 = rep.gamma0();
    let mut v = Mat::zeros(rep.spinor_dim, rep.spinor_dim);
    let mut wm = v.clone();
    for s in [1.0, -1.0] {
        let e = phase(-s * w * tau);
        let ks = rep.slash(s * w, &mode.k);
        v += ((&ks + id.scale(m)) * g0) * (I * (0.5 / m) * e);
        wm += ((&ks * g0).scale(1.0 / (m * m)) - id.scale(s / w)) * (I * 0.5 * e);
    }
    (v, wm)
}

/// Matrices A, B, C with `(t−t0)² U = ∂²_m A + ∂_m B + C` at fixed k.
///
/// With `E± = e^{∓iω(t−t0)}`, `a± = −(ω/m)² Π±`, `b± = (|k|²/m³) Π±`:
/// `A = Σ a± E±`, `B = Σ (b± − 2∂_m a±) E±`, `C = Σ (∂²_m a± − ∂_m b±) E±`.
pub fn second_order_decomposition(rep: &SpinorRep, mode: &MomentumMode, t: f64, t0: f64) -> (Mat, Mat, Mat) {
    check_mode(rep, mode);
    let (m, w) = (mode.m, mode.omega);
    let k2 = mode.k_sq();
    let tau = t - t0;
    let id = rep.eye();
    let g0 = rep.gamma0().clone();
    let hk = rep.gamma0() * rep.gamma_dot(&mode.k);

    let (m2, m3, m4) = (m * m, m * m * m, m * m * m * m);
    let (w2, w3) = (w * w, w * w * w);
    // ω²/m²
    let f1 = [w2 / m2, -2.0 * k2 / m3, 6.0 * k2 / m4];
    // ω/m²
    let g1 = [
        w / m2,
        1.0 / (m * w) - 2.0 * w / m3,
        -(w2 + m2) / (m2 * w3) - 2.0 / (m2 * w) + 6.0 * w / m4,
    ];
    // ω/m
    let g2 = [w / m, -k2 / (w * m2), k2 * (m2 + 2.0 * w2) / (w3 * m3)];
    // |k|²/(2m³), |k|²/(m³ω), |k|²/(m²ω)
    let h0 = [k2 / (2.0 * m3), -1.5 * k2 / m4];
    let h1 = [k2 / (m3 * w), -k2 * (3.0 * w2 + m2) / (m4 * w3)];
    let h2 = [k2 / (m2 * w), -k2 * (2.0 * w2 + m2) / (m3 * w3)];

    let n = rep.spinor_dim;
    let (mut a, mut b, mut cc) = (Mat::zeros(n, n), Mat::zeros(n, n), Mat::zeros(n, n));
    for s in [1.0, -1.0] {
        let e = phase(-s * w * tau);
        let a_d = |d: usize| id.scale(-0.5 * f1[d]) - (&hk * r(g1[d]) + &g0 * r(g2[d])) * r(0.5 * s);
        let b_d = |d: usize| id.scale(h0[d]) + (&hk * r(h1[d]) + &g0 * r(h2[d])) * r(0.5 * s);
        a += a_d(0) * e;
        b += (b_d(0) - a_d(1).scale(2.0)) * e;
        cc += (a_d(2) - b_d(1)) * e;
    }
    (a, b, cc)
}
