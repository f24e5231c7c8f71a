//! External potentials `𝓑(t[,x])`: envelopes, spatial profiles, sampled
//! matrix potentials, decay norms and audits.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{eye, max_abs, op_norm, r, Mat};
use crate::quadrature::adaptive_gauss;
use crate::spinor::SpinorRep;

/// Smallness threshold on `∫|𝓑|_{C⁰}`.
pub const SMALLNESS_THRESHOLD: f64 = core::f64::consts::SQRT_2 - 1.0;

/// Relative tail level that fixes the default cutoff time.
const DEFAULT_TAIL_LEVEL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    /// `exp(−t²/(2σ²))`
    Gaussian { sigma: f64 },
    /// `(1 + |t|^{2+ε})^{-1}`
    Power { epsilon: f64 },
    /// `exp(1 − 1/(1 − (t/w)²))` on `|t| < w`
    Bump { half_width: f64 },
}

impl Envelope {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Envelope::Gaussian { sigma } => libm::exp(-t * t / (2.0 * sigma * sigma)),
            Envelope::Power { epsilon } => 1.0 / (1.0 + libm::pow(t.abs(), 2.0 + epsilon)),
            Envelope::Bump { half_width } => {
                let u = t / half_width;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    libm::exp(1.0 - 1.0 / (1.0 - u * u))
                }
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Envelope::Gaussian { sigma } => -t / (sigma * sigma) * self.value(t),
            Envelope::Power { epsilon } => {
                let p = 2.0 + epsilon;
                let a = t.abs();
                let d = 1.0 + libm::pow(a, p);
                -p * libm::pow(a, p - 1.0) * t.signum() / (d * d)
            }
            Envelope::Bump { half_width } => {
                let u = t / half_width;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    let q = 1.0 - u * u;
                    self.value(t) * (-2.0 * u / (q * q)) / half_width
                }
            }
        }
    }

    /// `∫_{|t|>T} g(t) dt` of the untruncated envelope.
    pub fn tail(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match *self {
            Envelope::Gaussian { sigma } => {
                sigma * libm::sqrt(2.0 * PI) * libm::erfc(t / (sigma * libm::sqrt(2.0)))
            }
            Envelope::Power { epsilon } => {
                let p = 2.0 + epsilon;
                if t >= 2.0 {
                    // ∫_T^∞ t^{-p}/(1+t^{-p}) dt expanded in powers of T^{-p}
                    let mut sum = 0.0;
                    for n in 0..200 {
                        let e = p * (n as f64 + 1.0) - 1.0;
                        let term = libm::pow(t, -e) / e;
                        sum += if n % 2 == 0 { term } else { -term };
                        if term < 1e-18 * sum.abs() {
                            break;
                        }
                    }
                    2.0 * sum
                } else {
                    let inner = adaptive_gauss(&mut |s: f64| self.value(s), t, 2.0, 1e-15).0;
                    2.0 * inner + Envelope::Power { epsilon }.tail(2.0)
                }
            }
            Envelope::Bump { half_width } => {
                if t >= half_width {
                    0.0
                } else {
                    2.0 * adaptive_gauss(&mut |s: f64| self.value(s), t, half_width, 1e-15).0
                }
            }
        }
    }

    /// Recorded constants `(c, ε)` with `g(t) ≤ c/(1 + |t|^{2+ε})`.
    pub fn decay_constants(&self) -> (f64, f64) {
        match *self {
            Envelope::Gaussian { sigma } => {
                // max of (1+|t|³) e^{−t²/2σ²} is below 1 + (3σ²)^{3/2} e^{−3/2}
                (1.0 + libm::pow(3.0 * sigma * sigma, 1.5) * libm::exp(-1.5), 1.0)
            }
            Envelope::Power { epsilon } => (1.0, epsilon),
            Envelope::Bump { half_width } => (1.0 + libm::pow(half_width, 3.0), 1.0),
        }
    }
}

/// Periodic profile `χ(x) = Σ_n c_n cos(2πnx/L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialProfile {
    pub length: f64,
    pub cos_coeffs: Vec<f64>,
}

impl SpatialProfile {
    pub fn value(&self, x: f64) -> f64 {
        let q = 2.0 * PI / self.length;
        self.cos_coeffs.iter().enumerate().map(|(n, &a)| a * libm::cos(q * n as f64 * x)).sum()
    }

    /// Sampled `sup|χ|`.
    pub fn sup(&self) -> f64 {
        let n = 4096;
        (0..n).map(|j| self.value(self.length * j as f64 / n as f64).abs()).fold(0.0, f64::max)
    }

    /// Upper bound on `max_{j≤2} sup|∂^j χ|`.
    pub fn c2_bound(&self) -> f64 {
        let q = 2.0 * PI / self.length;
        (0..3)
            .map(|d| {
                self.cos_coeffs.iter().enumerate().map(|(n, &a)| a.abs() * libm::pow(q * n as f64, d as f64)).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Matrix samples interpolated by a natural cubic spline per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomSamples {
    pub times: Vec<f64>,
    pub matrices: Vec<Mat>,
    second: Vec<Mat>,
}

impl CustomSamples {
    pub fn new(times: Vec<f64>, matrices: Vec<Mat>) -> Result<Self> {
        let n = times.len();
        if n < 2 || matrices.len() != n {
            return Err(Error::Config("custom potential needs at least two matching samples".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("custom sample times must be strictly increasing".into()));
        }
        let dim = matrices[0].nrows();
        if matrices.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::Config("custom sample matrices must share one square shape".into()));
        }
        // natural spline: tridiagonal system for second derivatives (Thomas algorithm)
        let mut second = vec![Mat::zeros(dim, dim); n];
        if n > 2 {
            let mut diag = vec![0.0; n];
            let mut rhs = vec![Mat::zeros(dim, dim); n];
            let mut upper = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = times[i] - times[i - 1];
                let h1 = times[i + 1] - times[i];
                diag[i] = (h0 + h1) / 3.0;
                upper[i] = h1 / 6.0;
                rhs[i] = (&matrices[i + 1] - &matrices[i]).scale(1.0 / h1) - (&matrices[i] - &matrices[i - 1]).scale(1.0 / h0);
            }
            for i in 2..n - 1 {
                let lower = (times[i] - times[i - 1]) / 6.0;
                let f = lower / diag[i - 1];
                diag[i] -= f * upper[i - 1];
                let prev = rhs[i - 1].scale(f);
                rhs[i] -= prev;
            }
            for i in (1..n - 1).rev() {
                let mut v = rhs[i].clone();
                if i + 1 < n - 1 {
                    v -= second[i + 1].scale(upper[i]);
                }
                second[i] = v.scale(1.0 / diag[i]);
            }
        }
        Ok(CustomSamples { times, matrices, second })
    }

    fn locate(&self, t: f64) -> Option<usize> {
        let n = self.times.len();
        if t < self.times[0] || t > self.times[n - 1] {
            return None;
        }
        Some(self.times.partition_point(|&s| s <= t).clamp(1, n - 1) - 1)
    }

    pub fn value(&self, t: f64) -> Mat {
        let dim = self.matrices[0].nrows();
        let Some(i) = self.locate(t) else { return Mat::zeros(dim, dim) };
        let h = self.times[i + 1] - self.times[i];
        let a = (self.times[i + 1] - t) / h;
        let b = (t - self.times[i]) / h;
        self.matrices[i].scale(a)
            + self.matrices[i + 1].scale(b)
            + (self.second[i].scale(a * a * a - a) + self.second[i + 1].scale(b * b * b - b)).scale(h * h / 6.0)
    }

    pub fn derivative(&self, t: f64) -> Mat {
        let dim = self.matrices[0].nrows();
        let Some(i) = self.locate(t) else { return Mat::zeros(dim, dim) };
        let h = self.times[i + 1] - self.times[i];
        let a = (self.times[i + 1] - t) / h;
        let b = (t - self.times[i]) / h;
        (&self.matrices[i + 1] - &self.matrices[i]).scale(1.0 / h)
            + (self.second[i + 1].scale(3.0 * b * b - 1.0) - self.second[i].scale(3.0 * a * a - 1.0)).scale(h / 6.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// `λ g(t) χ(x) · 1`
    Scalar,
    /// `λ g(t) χ(x) · γ⁰`
    Electric,
    /// `λ g(t) χ(x) · M(t)` with `M` interpolated from samples
    Custom(CustomSamples),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub amplitude: f64,
    pub envelope: Envelope,
    pub spatial_profile: Option<SpatialProfile>,
    /// `𝓑` is zero for `|t| > t_max`.
    pub t_max: f64,
}

impl PotentialSpec {
    /// Builds a potential with the default cutoff: the smallest `T` whose
    /// untruncated tail is below `1e−10` of the total `L¹` norm.
    pub fn new(kind: PotentialKind, amplitude: f64, envelope: Envelope) -> Result<Self> {
        match envelope {
            Envelope::Gaussian { sigma } if !(sigma > 0.0) => {
                return Err(Error::Config(format!("gaussian width must be positive, got {sigma}")))
            }
            Envelope::Power { epsilon } if !(epsilon > 0.0) => {
                return Err(Error::Config(format!("power exponent ε must be positive, got {epsilon}")))
            }
            Envelope::Bump { half_width } if !(half_width > 0.0) => {
                return Err(Error::Config(format!("bump half-width must be positive, got {half_width}")))
            }
            _ => {}
        }
        let t_max = default_cutoff(&kind, &envelope);
        Ok(PotentialSpec { kind, amplitude, envelope, spatial_profile: None, t_max })
    }

    pub fn vacuum() -> Self {
        PotentialSpec {
            kind: PotentialKind::Scalar,
            amplitude: 0.0,
            envelope: Envelope::Gaussian { sigma: 1.0 },
            spatial_profile: None,
            t_max: 0.0,
        }
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn with_spatial_profile(mut self, profile: SpatialProfile) -> Self {
        self.spatial_profile = Some(profile);
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn is_vacuum(&self) -> bool {
        self.amplitude == 0.0
    }

    pub fn is_homogeneous(&self) -> bool {
        self.spatial_profile.is_none()
    }

    /// Time factor `λ g(t)` including the cutoff.
    pub fn time_factor(&self, t: f64) -> f64 {
        if t.abs() > self.t_max || self.amplitude == 0.0 {
            0.0
        } else {
            self.amplitude * self.envelope.value(t)
        }
    }

    fn time_factor_dt(&self, t: f64) -> f64 {
        if t.abs() > self.t_max || self.amplitude == 0.0 {
            0.0
        } else {
            self.amplitude * self.envelope.derivative(t)
        }
    }

    fn matrix_part(&self, rep: &SpinorRep, t: f64) -> Mat {
        match &self.kind {
            PotentialKind::Scalar => rep.eye(),
            PotentialKind::Electric => rep.gamma0().clone(),
            PotentialKind::Custom(s) => s.value(t),
        }
    }

    fn spatial_factor(&self, x: Option<f64>) -> Result<f64> {
        match (&self.spatial_profile, x) {
            (None, None) => Ok(1.0),
            (Some(p), Some(x)) => Ok(p.value(x)),
            (None, Some(_)) => Err(Error::Usage("spatial argument given for a homogeneous potential".into())),
            (Some(_), None) => Err(Error::Usage("spatially varying potential needs a position".into())),
        }
    }

    /// `𝓑(t[,x])`, exactly zero for `|t| > t_max`.
    pub fn evaluate(&self, rep: &SpinorRep, t: f64, x: Option<f64>) -> Result<Mat> {
        let s = self.spatial_factor(x)?;
        let f = self.time_factor(t) * s;
        if f == 0.0 {
            return Ok(Mat::zeros(rep.spinor_dim, rep.spinor_dim));
        }
        Ok(self.matrix_part(rep, t).scale(f))
    }

    /// `∂_t 𝓑(t[,x])`.
    pub fn evaluate_dt(&self, rep: &SpinorRep, t: f64, x: Option<f64>) -> Result<Mat> {
        let s = self.spatial_factor(x)?;
        let mut out = self.matrix_part(rep, t).scale(self.time_factor_dt(t) * s);
        if let PotentialKind::Custom(samples) = &self.kind {
            out += samples.derivative(t).scale(self.time_factor(t) * s);
        }
        Ok(out)
    }

    /// `|𝓑(t)|_{C⁰}`: spinor operator norm, sup over x.
    pub fn c0_norm(&self, rep: &SpinorRep, t: f64) -> f64 {
        let f = self.time_factor(t).abs();
        if f == 0.0 {
            return 0.0;
        }
        let s = self.spatial_profile.as_ref().map_or(1.0, |p| p.sup());
        f * s * op_norm(&self.matrix_part(rep, t))
    }

    fn matrix_sup(&self, rep: &SpinorRep) -> f64 {
        match &self.kind {
            PotentialKind::Custom(s) => s.matrices.iter().map(op_norm).fold(0.0, f64::max),
            _ => op_norm(&self.matrix_part(rep, 0.0)),
        }
    }

    /// Adaptive quadrature of `|𝓑|_{C⁰}` over `T ≤ |t| ≤ t_max`, split at
    /// envelope breakpoints and geometric panels.
    fn c0_integral(&self, rep: &SpinorRep, from: f64, tol: f64) -> f64 {
        if self.is_vacuum() || from >= self.t_max {
            return 0.0;
        }
        let mut cuts = vec![from.max(0.0)];
        if let PotentialKind::Custom(s) = &self.kind {
            for &t in &s.times {
                cuts.push(t.abs());
            }
        }
        let mut edge = 1.0;
        while edge < self.t_max {
            cuts.push(edge);
            edge *= 2.0;
        }
        cuts.push(self.t_max);
        cuts.retain(|&c| c >= from.max(0.0) && c <= self.t_max);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let mut total = 0.0;
        for w in cuts.windows(2) {
            for sign in [1.0, -1.0] {
                let f = &mut |t: f64| self.c0_norm(rep, sign * t);
                total += adaptive_gauss(f, w[0], w[1], tol).0;
            }
        }
        total
    }

    pub fn decay_norms(&self, rep: &SpinorRep) -> Result<DecayNorms> {
        self.decay_norms_with_tol(rep, 1e-13)
    }

    pub fn decay_norms_with_tol(&self, rep: &SpinorRep, tol: f64) -> Result<DecayNorms> {
        let l1 = self.c0_integral(rep, 0.0, tol);
        let spatial = self.spatial_profile.as_ref().map_or(1.0, |p| p.c2_bound());
        let (c_env, epsilon) = self.envelope.decay_constants();
        let c = self.amplitude.abs() * self.matrix_sup(rep) * spatial * c_env * 1.01;
        let untruncated = self.amplitude.abs()
            * self.spatial_profile.as_ref().map_or(1.0, |p| p.sup())
            * self.matrix_sup(rep)
            * self.envelope.tail(self.t_max);
        let norms = DecayNorms { l1_c0: l1, c, epsilon, truncation_error: untruncated };
        self.validate_decay(rep, &norms)?;
        Ok(norms)
    }

    fn validate_decay(&self, rep: &SpinorRep, norms: &DecayNorms) -> Result<()> {
        let horizon = self.t_max.min(1e4);
        let n = 4000;
        let spatial = self.spatial_profile.as_ref().map_or(1.0, |p| p.c2_bound());
        for j in 0..=n {
            let t = -horizon + 2.0 * horizon * j as f64 / n as f64;
            let f = self.time_factor(t).abs();
            if f == 0.0 {
                continue;
            }
            let v = f * spatial * op_norm(&self.matrix_part(rep, t));
            let bound = norms.c / (1.0 + libm::pow(t.abs(), 2.0 + norms.epsilon));
            if v > bound * (1.0 + 1e-12) {
                return Err(Error::Audit(format!(
                    "decay bound violated at t = {t}: |B|_C2 = {v:e} exceeds c/(1+|t|^(2+ε)) = {bound:e}"
                )));
            }
        }
        Ok(())
    }

    /// `∫_{T<|τ|<t_max} |𝓑(τ)|_{C⁰} dτ`; nonincreasing in `T`, zero at `t_max`.
    pub fn tail(&self, rep: &SpinorRep, t: f64) -> f64 {
        self.c0_integral(rep, t, 1e-13)
    }

    pub fn check_smallness(&self, rep: &SpinorRep) -> Result<SmallnessReport> {
        let value = self.decay_norms(rep)?.l1_c0;
        Ok(SmallnessReport { value, threshold: SMALLNESS_THRESHOLD, pass: value < SMALLNESS_THRESHOLD })
    }

    /// Max of `‖γ⁰𝓑†γ⁰ − 𝓑‖` over sample times (and positions when present).
    pub fn symmetry_audit(&self, rep: &SpinorRep, times: &[f64], positions: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &t in times {
            if self.spatial_profile.is_some() {
                for &x in positions {
                    let b = self.evaluate(rep, t, Some(x))?;
                    worst = worst.max(max_abs(&(rep.spin_adjoint(&b) - &b)));
                }
            } else {
                let b = self.evaluate(rep, t, None)?;
                worst = worst.max(max_abs(&(rep.spin_adjoint(&b) - &b)));
            }
        }
        Ok(worst)
    }

    /// Interval outside of which the potential vanishes.
    pub fn support(&self) -> (f64, f64) {
        let (mut lo, mut hi) = (-self.t_max, self.t_max);
        if let Envelope::Bump { half_width } = self.envelope {
            lo = lo.max(-half_width);
            hi = hi.min(half_width);
        }
        if let PotentialKind::Custom(s) = &self.kind {
            lo = lo.max(s.times[0]);
            hi = hi.min(*s.times.last().unwrap());
        }
        if self.is_vacuum() || lo >= hi {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }
}

fn default_cutoff(kind: &PotentialKind, env: &Envelope) -> f64 {
    let total = env.tail(0.0);
    let target = DEFAULT_TAIL_LEVEL * total;
    let mut hi = 1.0;
    while env.tail(hi) >= target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if env.tail(mid) < target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    match kind {
        PotentialKind::Custom(s) => hi.min(s.times[0].abs().max(s.times.last().unwrap().abs())),
        _ => hi,
    }
}

/// Amplitude giving a prescribed `∫|𝓑|_{C⁰}` for scalar or electric kind.
pub fn amplitude_for_l1(env: &Envelope, target: f64) -> f64 {
    let t_max = default_cutoff(&PotentialKind::Scalar, env);
    target / (env.tail(0.0) - env.tail(t_max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayNorms {
    pub l1_c0: f64,
    pub c: f64,
    pub epsilon: f64,
    /// Untruncated `L¹` mass discarded beyond `t_max`.
    pub truncation_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallnessReport {
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Scalar Gaussian pulse with `∫|𝓑|_{C⁰} = l1`.
pub fn gaussian_scalar_pulse(sigma: f64, l1: f64) -> PotentialSpec {
    let env = Envelope::Gaussian { sigma };
    PotentialSpec::new(PotentialKind::Scalar, amplitude_for_l1(&env, l1), env).expect("positive width")
}

/// Identity-scaled custom samples, mainly for tests and scenario files.
pub fn custom_from_scalar_samples(times: Vec<f64>, values: &[f64], dim: usize) -> Result<CustomSamples> {
    let mats = values.iter().map(|&v| eye(dim) * r(v)).collect();
    CustomSamples::new(times, mats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_rows};
    use crate::spinor::build_dirac_representation;
    use proptest::prelude::*;

    fn rep4() -> SpinorRep {
        build_dirac_representation(4).unwrap()
    }

    #[test]
    fn zero_amplitude_is_zero_everywhere() {
        let rep = rep4();
        let pot = PotentialSpec::new(PotentialKind::Scalar, 0.0, Envelope::Gaussian { sigma: 1.0 }).unwrap();
        for t in [-3.0, 0.0, 0.5, 100.0] {
            assert_eq!(max_abs(&pot.evaluate(&rep, t, None).unwrap()), 0.0);
        }
        assert_eq!(pot.decay_norms(&rep).unwrap().l1_c0, 0.0);
        let s = pot.check_smallness(&rep).unwrap();
        assert!(s.pass && s.value == 0.0);
    }

    #[test]
    fn gaussian_peak_and_cutoff() {
        let rep = rep4();
        let pot = PotentialSpec::new(PotentialKind::Scalar, 0.7, Envelope::Gaussian { sigma: 1.0 }).unwrap();
        assert!(max_abs(&(pot.evaluate(&rep, 0.0, None).unwrap() - eye(4).scale(0.7))) < 1e-15);
        assert_eq!(max_abs(&pot.evaluate(&rep, pot.t_max + 1e-9, None).unwrap()), 0.0);
        let tail_rel = Envelope::Gaussian { sigma: 1.0 }.tail(pot.t_max) / libm::sqrt(2.0 * PI);
        assert!(tail_rel < 1e-10 && tail_rel > 1e-11);
    }

    #[test]
    fn gaussian_l1_matches_closed_form() {
        let rep = rep4();
        let pot = PotentialSpec::new(PotentialKind::Scalar, 1.0, Envelope::Gaussian { sigma: 1.0 }).unwrap();
        let l1 = pot.decay_norms(&rep).unwrap().l1_c0;
        assert!((l1 - libm::sqrt(2.0 * PI)).abs() / libm::sqrt(2.0 * PI) < 1e-8);
    }

    #[test]
    fn power_l1_matches_closed_form() {
        // ∫ dt / (1+|t|^p) = 2π / (p sin(π/p))
        let rep = rep4();
        let pot = PotentialSpec::new(PotentialKind::Scalar, 1.0, Envelope::Power { epsilon: 0.5 }).unwrap();
        let p = 2.5;
        let exact = 2.0 * PI / (p * libm::sin(PI / p));
        let l1 = pot.decay_norms(&rep).unwrap().l1_c0;
        assert!((l1 - exact).abs() < 1e-6, "{l1} vs {exact}");
        let coarse = pot.decay_norms_with_tol(&rep, 1e-9).unwrap().l1_c0;
        assert!((coarse - l1).abs() / l1 < 1e-6);
    }

    #[test]
    fn smallness_threshold_examples() {
        let rep = rep4();
        let env = Envelope::Gaussian { sigma: 1.0 };
        let lam = 0.3 / libm::sqrt(2.0 * PI);
        let s = PotentialSpec::new(PotentialKind::Scalar, lam, env).unwrap().check_smallness(&rep).unwrap();
        assert!((s.value - 0.3).abs() < 1e-9 && s.pass);
        let lam = 0.5 / libm::sqrt(2.0 * PI);
        let s = PotentialSpec::new(PotentialKind::Scalar, lam, env).unwrap().check_smallness(&rep).unwrap();
        assert!((s.value - 0.5).abs() < 1e-9 && !s.pass);
        assert!((s.threshold - 0.414213562373095).abs() < 1e-12);
    }

    #[test]
    fn amplitude_for_l1_hits_target() {
        let rep = rep4();
        let pot = gaussian_scalar_pulse(1.0, 0.3);
        assert!((pot.decay_norms(&rep).unwrap().l1_c0 - 0.3).abs() < 1e-12);
    }

    #[test]
    fn spatial_argument_mismatch_is_usage_error() {
        let rep = build_dirac_representation(2).unwrap();
        let pot = PotentialSpec::new(PotentialKind::Scalar, 0.1, Envelope::Gaussian { sigma: 1.0 }).unwrap();
        assert!(matches!(pot.evaluate(&rep, 0.0, Some(1.0)), Err(Error::Usage(_))));
        let prof = SpatialProfile { length: 10.0, cos_coeffs: vec![1.0, 0.5] };
        let pot = pot.with_spatial_profile(prof);
        assert!(matches!(pot.evaluate(&rep, 0.0, None), Err(Error::Usage(_))));
        let b = pot.evaluate(&rep, 0.0, Some(0.0)).unwrap();
        assert!((b[(0, 0)].re - 0.15).abs() < 1e-15);
    }

    #[test]
    fn built_in_kinds_are_spin_symmetric() {
        let rep = rep4();
        let times: Vec<f64> = (0..41).map(|j| -4.0 + 0.2 * j as f64).collect();
        for kind in [PotentialKind::Scalar, PotentialKind::Electric] {
            let pot = PotentialSpec::new(kind, 0.4, Envelope::Gaussian { sigma: 1.3 }).unwrap();
            assert!(pot.symmetry_audit(&rep, &times, &[]).unwrap() < 1e-14);
        }
    }

    #[test]
    fn non_symmetric_custom_matrix_is_flagged() {
        let rep = build_dirac_representation(2).unwrap();
        let bad = from_rows(2, &[r(0.0), r(1.0), r(0.0), r(0.0)]);
        let samples = CustomSamples::new(vec![-1.0, 0.0, 1.0], vec![bad.clone(), bad.clone(), bad]).unwrap();
        let pot = PotentialSpec::new(PotentialKind::Custom(samples), 1.0, Envelope::Bump { half_width: 1.0 }).unwrap();
        assert!(pot.symmetry_audit(&rep, &[-0.5, 0.0, 0.5], &[]).unwrap() > 0.1);
    }

    #[test]
    fn spline_reproduces_cubic_interior_and_knots() {
        let times: Vec<f64> = (0..21).map(|j| -2.0 + 0.2 * j as f64).collect();
        let vals: Vec<f64> = times.iter().map(|&t| libm::sin(t)).collect();
        let s = custom_from_scalar_samples(times.clone(), &vals, 2).unwrap();
        for (t, v) in times.iter().zip(&vals) {
            assert!((s.value(*t)[(0, 0)].re - v).abs() < 1e-14);
        }
        assert!((s.value(0.31)[(1, 1)].re - libm::sin(0.31)).abs() < 1e-4);
        assert!((s.derivative(0.31)[(1, 1)].re - libm::cos(0.31)).abs() < 1e-3);
        assert_eq!(s.value(2.5)[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn bump_is_compactly_supported() {
        let rep = rep4();
        let pot = PotentialSpec::new(PotentialKind::Electric, 0.2, Envelope::Bump { half_width: 2.0 }).unwrap();
        assert!(pot.t_max <= 2.0);
        assert_eq!(pot.tail(&rep, pot.t_max), 0.0);
        assert_eq!(pot.support(), (-pot.t_max, pot.t_max));
    }

    #[test]
    fn envelope_derivatives_match_finite_differences() {
        let h = 1e-6;
        for env in [Envelope::Gaussian { sigma: 0.8 }, Envelope::Power { epsilon: 0.5 }, Envelope::Bump { half_width: 2.0 }] {
            for t in [-1.3, -0.2, 0.4, 1.7] {
                let fd = (env.value(t + h) - env.value(t - h)) / (2.0 * h);
                assert!((fd - env.derivative(t)).abs() < 1e-7);
            }
        }
    }

    proptest! {
        #[test]
        fn tail_is_monotone(a in 0.0f64..8.0, b in 0.0f64..8.0, sigma in 0.5f64..2.0) {
            let rep = rep4();
            let pot = PotentialSpec::new(PotentialKind::Scalar, 0.3, Envelope::Gaussian { sigma }).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(pot.tail(&rep, lo) + 1e-14 >= pot.tail(&rep, hi));
            prop_assert_eq!(pot.tail(&rep, pot.t_max), 0.0);
        }

        #[test]
        fn electric_kind_symmetric_at_any_point(t in -5.0f64..5.0, x in 0.0f64..10.0, lam in -1.0f64..1.0) {
            let rep = build_dirac_representation(2).unwrap();
            let prof = SpatialProfile { length: 10.0, cos_coeffs: vec![0.5, 0.3, -0.2] };
            let pot = PotentialSpec::new(PotentialKind::Electric, lam, Envelope::Power { epsilon: 0.5 })
                .unwrap()
                .with_spatial_profile(prof);
            prop_assert!(pot.symmetry_audit(&rep, &[t], &[x]).unwrap() < 1e-14);
        }
    }
}
