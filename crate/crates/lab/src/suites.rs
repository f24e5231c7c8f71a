//! The experiment suites. Each one turns a validated scenario into a table
//! and a list of pass/fail checks.

use std::sync::OnceLock;
use std::f64::consts::PI;

use fermisig_core::evolution::{commutator_identity_check, evolve_block, lippmann_schwinger, EvolutionConfig};
use fermisig_core::lattice::{lattice_evolve, lattice_signature, vacuum_signature_matrix, Lattice};
use fermisig_core::linalg::{c, fro_norm, hermitian_eigen, hermiticity_defect, max_abs, op_norm, unitarity_defect};
use fermisig_core::mass::{
    bump, decay_scan, distributional_products_check, radial_gauss_rule, radial_log_rule, sobolev_growth_check,
    strong_mop_ratio, weak_mop_symmetry_check, InnerConfig, MassFamily, MassGrid, Momentum4, RadialProfile,
    SmoothProfile,
};
use fermisig_core::potential::PotentialSpec;
use fermisig_core::projector::{
    build_doubled_space, fock_oracle, hadamard_diagnostic, projector_pairing, smeared_cauchy_data, ProjectorBlock,
    TimeTestFunction,
};
use fermisig_core::signature::{
    assemble_signature, contour_projector_check, k_grid, mixing_decay_scan, oracle_signature_from_families,
    spectral_gap_check, t0_independence_check, QuadratureConfig, SignatureBlock,
};
use fermisig_core::spinor::{
    build_dirac_representation, clifford_residual, frequency_projectors, spin_adjointness_residual,
    vacuum_evolution, vacuum_hamiltonian, vacuum_signature, MomentumMode, SpinorRep,
};
use fermisig_core::{Mat, Vector, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{Regime, ScenarioConfig};
use crate::output::Table;
use crate::LabError;

/// Suites in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    VacuumCheck,
    Evolve,
    MopDecay,
    StrongMop,
    DistProducts,
    Signature,
    Gap,
    Contour,
    Mixing,
    Projector,
    Hadamard,
    State,
    Sobolev,
}

impl Suite {
    pub const ALL: [Suite; 13] = [
        Suite::VacuumCheck,
        Suite::Evolve,
        Suite::MopDecay,
        Suite::StrongMop,
        Suite::DistProducts,
        Suite::Signature,
        Suite::Gap,
        Suite::Contour,
        Suite::Mixing,
        Suite::Projector,
        Suite::Hadamard,
        Suite::State,
        Suite::Sobolev,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::VacuumCheck => "vacuum_check",
            Suite::Evolve => "evolve",
            Suite::MopDecay => "mop_decay",
            Suite::StrongMop => "strong_mop",
            Suite::DistProducts => "dist_products",
            Suite::Signature => "signature",
            Suite::Gap => "gap",
            Suite::Contour => "contour",
            Suite::Mixing => "mixing",
            Suite::Projector => "projector",
            Suite::Hadamard => "hadamard",
            Suite::State => "state",
            Suite::Sobolev => "sobolev",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn description(self) -> &'static str {
        match self {
            Suite::VacuumCheck => "Clifford relations, vacuum signature and frequency projectors on the k-grid",
            Suite::Evolve => "unitarity, group law, commutator identity and Lippmann-Schwinger order",
            Suite::MopDecay => "decay of mass superpositions, vacuum and with the potential",
            Suite::StrongMop => "randomized family pairs: strong bound ratio and T-symmetry residual",
            Suite::DistProducts => "smeared products of mass-integrated propagators",
            Suite::Signature => "assembled signature blocks, transport between anchors, family oracle",
            Suite::Gap => "spectrum of the frequency-diagonal part against the gap bands",
            Suite::Contour => "contour formula for the spectral projectors",
            Suite::Mixing => "momentum decay of the frequency-mixing part",
            Suite::Projector => "projector kernel symmetry and Dirac equation on time grids",
            Suite::Hadamard => "momentum decay of the projector difference from the vacuum",
            Suite::State => "doubled-space R operator and Fock-space oracle",
            Suite::Sobolev => "growth of mass derivatives in Sobolev norms",
        }
    }

    /// Suites that need the momentum-block picture refuse the lattice, and
    /// the family suites refuse potentials outside the radial reduction.
    pub fn check_regime(self, regime: Regime, pot: &PotentialSpec) -> Result<(), LabError> {
        let lattice_ok = matches!(self, Suite::VacuumCheck | Suite::Evolve | Suite::Signature);
        if regime == Regime::Lattice1p1 && !lattice_ok {
            return Err(LabError::Config(format!("suite {} needs regime \"homogeneous_3p1\"", self.name())));
        }
        if matches!(self, Suite::MopDecay | Suite::Sobolev) && !pot.is_homogeneous() {
            return Err(LabError::Config(format!("suite {} needs a spatially homogeneous potential", self.name())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bound {
    AtMost { limit: f64 },
    AtLeast { limit: f64 },
    Within { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, bound: Bound::AtMost { limit }, pass: value <= limit }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, bound: Bound::AtLeast { limit }, pass: value >= limit }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Check { name: name.into(), value, bound: Bound::Within { lo, hi }, pass: value >= lo && value <= hi }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub suite: Suite,
    pub table: Table,
    pub checks: Vec<Check>,
    pub notes: Map<String, Value>,
}

impl SuiteResult {
    fn new(suite: Suite, table: Table) -> Self {
        SuiteResult { suite, table, checks: Vec::new(), notes: Map::new() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "suite": self.suite.name(),
            "passed": self.passed(),
            "rows": self.table.rows.len(),
            "columns": self.table.columns,
            "checks": self.checks,
            "notes": self.notes,
        })
    }
}

/// Maximum of non-negative diagnostics; any NaN poisons the result.
fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut out = 0.0f64;
    for v in values {
        if v.is_nan() {
            return f64::NAN;
        }
        out = out.max(v);
    }
    out
}

/// Smallest value; NaN if any value is NaN or there are none.
fn least(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut out = f64::NAN;
    for v in values {
        if v.is_nan() {
            return f64::NAN;
        }
        out = if out.is_nan() { v } else { out.min(v) };
    }
    out
}

/// Shared state of one run; signature blocks are built once and reused.
pub struct Context {
    pub cfg: ScenarioConfig,
    pub rep: SpinorRep,
    pub pot: PotentialSpec,
    pub qcfg: QuadratureConfig,
    pub ecfg: EvolutionConfig,
    blocks: OnceLock<Vec<SignatureBlock>>,
}

impl Context {
    pub fn new(cfg: ScenarioConfig) -> Result<Self, LabError> {
        cfg.validate()?;
        let rep = build_dirac_representation(cfg.spacetime_dim())?;
        let pot = cfg.potential()?;
        let qcfg = cfg.quadrature(&pot, cfg.t0);
        let ecfg = cfg.evolution();
        Ok(Context { cfg, rep, pot, qcfg, ecfg, blocks: OnceLock::new() })
    }

    fn rng(&self, suite: Suite) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.seed ^ ((suite as u64 + 1) << 32))
    }

    fn modes(&self) -> Result<Vec<MomentumMode>, LabError> {
        let dir = self.cfg.direction();
        self.cfg
            .k_values()
            .iter()
            .map(|&k| MomentumMode::new(&dir.iter().map(|d| d * k).collect::<Vec<_>>(), 1.0).map_err(LabError::from))
            .collect()
    }

    fn blocks(&self) -> Result<&[SignatureBlock], LabError> {
        if let Some(b) = self.blocks.get() {
            return Ok(b);
        }
        let modes = self.modes()?;
        let built = modes
            .par_iter()
            .map(|m| assemble_signature(&self.rep, m, &self.pot, self.cfg.t0, &self.qcfg, &self.ecfg))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.blocks.get_or_init(|| built))
    }

    fn lattice(&self) -> Result<Lattice, LabError> {
        Ok(Lattice::new(self.cfg.lattice.n, self.cfg.lattice.length, 1.0)?)
    }

    /// Time span past which nothing happens, seen from `t0`.
    fn horizon(&self) -> f64 {
        if self.pot.is_vacuum() {
            5.0
        } else {
            self.qcfg.t_window
        }
    }

    /// The anchor used by the momentum-decay diagnostics: the lower edge
    /// of the support, so that no sign jump cuts the potential.
    fn edge_anchor(&self) -> f64 {
        if self.pot.is_vacuum() {
            self.cfg.t0
        } else {
            self.pot.support().0
        }
    }

    pub fn run(&self, suite: Suite) -> Result<SuiteResult, LabError> {
        match (suite, self.cfg.regime) {
            (Suite::VacuumCheck, Regime::Lattice1p1) => self.lattice_vacuum_check(),
            (Suite::Evolve, Regime::Lattice1p1) => self.lattice_evolve_suite(),
            (Suite::Signature, Regime::Lattice1p1) => self.lattice_signature_suite(),
            (Suite::VacuumCheck, _) => self.vacuum_check(),
            (Suite::Evolve, _) => self.evolve(),
            (Suite::MopDecay, _) => self.mop_decay(),
            (Suite::StrongMop, _) => self.strong_mop(),
            (Suite::DistProducts, _) => self.dist_products(),
            (Suite::Signature, _) => self.signature(),
            (Suite::Gap, _) => self.gap(),
            (Suite::Contour, _) => self.contour(),
            (Suite::Mixing, _) => self.mixing(),
            (Suite::Projector, _) => self.projector(),
            (Suite::Hadamard, _) => self.hadamard(),
            (Suite::State, _) => self.state(),
            (Suite::Sobolev, _) => self.sobolev(),
        }
    }

    fn vacuum_check(&self) -> Result<SuiteResult, LabError> {
        let rep = &self.rep;
        let vac = PotentialSpec::vacuum();
        let q0 = QuadratureConfig::covering(&vac, self.cfg.t0);
        let rows = self
            .modes()?
            .par_iter()
            .map(|m| {
                let d = rep.spinor_dim;
                let s = vacuum_signature(rep, m);
                let (pp, pm) = frequency_projectors(rep, m);
                let h = vacuum_hamiltonian(rep, m);
                let eig = hermitian_eigen(&s).0.iter().map(|v| (v.abs() - 1.0).abs()).fold(0.0, f64::max);
                let h2 = max_abs(&(&h * &h - Mat::identity(d, d).scale(m.omega * m.omega)));
                let assembled = assemble_signature(rep, m, &vac, self.cfg.t0, &q0, &self.ecfg)?;
                let u = vacuum_evolution(rep, m, 1.7, 0.0);
                Ok(vec![
                    m.k_abs(),
                    m.omega,
                    max_abs(&(&s - (&pp - &pm))),
                    eig,
                    h2,
                    max_abs(&(&assembled.s_tilde - &s)),
                    max_abs(&(&pp * &pp - &pp)) + max_abs(&(&pp * &pm)),
                    unitarity_defect(&u),
                ])
            })
            .collect::<Result<Vec<_>, LabError>>()?;
        let mut table = Table::new(&[
            "k", "omega", "s_minus_projectors", "eigen_deviation", "h_squared", "assembled_minus_vacuum",
            "projector_algebra", "evolution_unitarity",
        ]);
        rows.into_iter().for_each(|r| table.push(r));
        let mut out = SuiteResult::new(Suite::VacuumCheck, table);
        out.checks.push(Check::at_most("clifford_residual", clifford_residual(rep), 1e-12));
        out.checks.push(Check::at_most("spin_adjointness", spin_adjointness_residual(rep), 1e-12));
        for (col, tol) in [
            ("s_minus_projectors", 1e-8),
            ("eigen_deviation", 1e-8),
            ("h_squared", 1e-8),
            ("assembled_minus_vacuum", 1e-8),
            ("projector_algebra", 1e-12),
            ("evolution_unitarity", 1e-12),
        ] {
            out.checks.push(Check::at_most(col, worst(out.table.column(col).unwrap()), tol));
        }
        Ok(out)
    }

    fn evolve(&self) -> Result<SuiteResult, LabError> {
        let (rep, pot, cfg) = (&self.rep, &self.pot, &self.ecfg);
        let t0 = self.cfg.t0;
        let horizon = self.horizon();
        let modes = self.modes()?;
        let n = modes.len();
        let ls_rows = [0, n / 2, n - 1];
        let rows = modes
            .par_iter()
            .enumerate()
            .map(|(i, m)| {
                let (t1, t2) = (t0 + 0.5 * horizon, t0 + horizon);
                let u20 = evolve_block(rep, m, pot, t2, t0, cfg)?;
                let u21 = evolve_block(rep, m, pot, t2, t1, cfg)?;
                let u10 = evolve_block(rep, m, pot, t1, t0, cfg)?;
                let back = evolve_block(rep, m, pot, t0, t2, cfg)?;
                let group = max_abs(&(&u21 * &u10 - &u20));
                let inverse = max_abs(&(&back - u20.adjoint()));
                let comm = commutator_identity_check(rep, m, pot, t2, t0, commutator_nodes(m.omega), cfg)?;
                let slope = if !pot.is_vacuum() && ls_rows.contains(&i) {
                    ls_slope(rep, m, pot, t2, t0, cfg)?
                } else {
                    f64::NAN
                };
                Ok(vec![m.k_abs(), m.omega, unitarity_defect(&u20), group, inverse, comm, slope])
            })
            .collect::<Result<Vec<_>, LabError>>()?;
        let mut table =
            Table::new(&["k", "omega", "unitarity_defect", "group_law", "inverse", "commutator_identity", "ls_slope"]);
        rows.into_iter().for_each(|r| table.push(r));
        let mut out = SuiteResult::new(Suite::Evolve, table);
        out.checks.push(Check::at_most("unitarity_defect", worst(out.table.column("unitarity_defect").unwrap()), cfg.unitarity_tol));
        out.checks.push(Check::at_most("group_law", worst(out.table.column("group_law").unwrap()), 1e-8));
        out.checks.push(Check::at_most("inverse", worst(out.table.column("inverse").unwrap()), 1e-8));
        out.checks.push(Check::at_most("commutator_identity", worst(out.table.column("commutator_identity").unwrap()), 1e-6));
        if !pot.is_vacuum() {
            for (j, &i) in ls_rows.iter().enumerate() {
                let s = out.table.rows[i][6];
                out.checks.push(Check::within(&format!("ls_slope_{j}"), s, 2.8, 3.2));
            }
        }
        out.notes.insert("horizon".into(), json!(horizon));
        Ok(out)
    }

    fn mop_decay(&self) -> Result<SuiteResult, LabError> {
        let (m_l, m_r) = self.cfg.mass.interval();
        let grid = MassGrid::gauss(m_l, m_r, self.cfg.mass.n_nodes)?;
        let eta: Vec<f64> = grid.nodes.iter().map(|&m| bump(grid.rescaled(m))).collect();
        let times: Vec<f64> = (0..=10).map(|j| 10.0 * 10f64.powf(j as f64 / 10.0)).collect();
        let window = (10.0, 100.0);
        let vac = decay_scan(
            &grid,
            &eta,
            RadialProfile::Sobolev { s: 2.5 },
            &radial_log_rule(1e-3, 1e5, 8001),
            &PotentialSpec::vacuum(),
            self.cfg.t0,
            &times,
            window,
            &self.ecfg,
        )?;
        let with = if self.pot.is_vacuum() {
            None
        } else {
            Some(decay_scan(
                &grid,
                &eta,
                RadialProfile::Gaussian { kappa: 1.0 },
                &radial_gauss_rule(7.0, 14),
                &self.pot,
                self.cfg.t0,
                &times,
                window,
                &self.ecfg,
            )?)
        };
        let mut table = Table::new(&["t", "vacuum_norm", "potential_norm"]);
        for (i, &t) in times.iter().enumerate() {
            table.push(vec![t, vac.norms[i], with.as_ref().map_or(f64::NAN, |w| w.norms[i])]);
        }
        let mut out = SuiteResult::new(Suite::MopDecay, table);
        out.checks.push(Check::within("vacuum_slope", vac.slope, -2.3, -1.8));
        if let Some(w) = &with {
            out.checks.push(Check::at_most("potential_slope", w.slope, -1.0));
        }
        Ok(out)
    }

    fn strong_mop(&self) -> Result<SuiteResult, LabError> {
        let (m_l, m_r) = self.cfg.mass.interval();
        let grid = MassGrid::gauss(m_l, m_r, self.cfg.mass.n_nodes)?;
        let mut rng = self.rng(Suite::StrongMop);
        let draws: Vec<PairDraw> = (0..self.cfg.checks.mop_pairs).map(|_| PairDraw::sample(&mut rng, &grid, self.cfg.k_grid.k_max)).collect();
        let icfg = InnerConfig { evolution: self.ecfg, ..InnerConfig::default() };
        let rows = draws
            .par_iter()
            .map(|d| {
                let (a, b) = d.families(&grid)?;
                let ratio = strong_mop_ratio(&self.rep, &d.k, &a, &b, &self.pot, self.cfg.t0, &icfg)?;
                let weak = weak_mop_symmetry_check(&self.rep, &d.k, &a, &b, &self.pot, self.cfg.t0, &icfg)?;
                Ok(vec![d.k.iter().map(|x| x * x).sum::<f64>().sqrt(), d.centres[0], d.centres[1], ratio, weak])
            })
            .collect::<Result<Vec<_>, LabError>>()?;
        let mut table = Table::new(&["k", "centre_a", "centre_b", "ratio", "weak_residual"]);
        rows.into_iter().for_each(|r| table.push(r));
        let mut out = SuiteResult::new(Suite::StrongMop, table);
        out.checks.push(Check::at_most("max_ratio", worst(out.table.column("ratio").unwrap()), 2.0 * PI * 1.05));
        let weak_tol = if self.pot.is_vacuum() { 1e-4 } else { 1e-3 };
        out.checks.push(Check::at_most("max_weak_residual", worst(out.table.column("weak_residual").unwrap()), weak_tol));
        Ok(out)
    }

    fn dist_products(&self) -> Result<SuiteResult, LabError> {
        let (m_l, m_r) = self.cfg.mass.interval();
        let hw = 0.5 * (m_r - m_l);
        let s = hw / 0.2;
        let fc = move |m: f64| bump((m - 1.0) / (0.2 * s));
        let gc = move |m: f64| bump((m - 1.0 - 0.02 * s) / (0.15 * s)) * (1.0 + m);
        let f = SmoothProfile { lo: m_l, hi: m_r, f: &fc };
        let g = SmoothProfile { lo: 1.0 - 0.13 * s, hi: 1.0 + 0.17 * s, f: &gc };
        let mut rng = self.rng(Suite::DistProducts);
        let samples: Vec<Momentum4> = (0..self.cfg.checks.dist_samples).map(|_| timelike_sample(&mut rng, 1.0 - 0.08 * s, 1.0 + 0.08 * s)).collect();
        let deltas = [4e-3, 2e-3, 1e-3];
        let report = distributional_products_check(&self.rep, &f, &g, (m_l, m_r), &samples, 0.05 * s, 0.004, 0.05, &deltas, 2);
        let mut table = Table::new(&["p0", "p_abs", "identity_i", "ii_residual", "ii_order", "iii_residual", "iii_order"]);
        for (j, p) in report.used.iter().enumerate() {
            let row = match (report.identity_ii.get(j), report.identity_iii.get(j)) {
                (Some(a), Some(b)) => [*a.residual.last().unwrap(), a.convergence_order, *b.residual.last().unwrap(), b.fitted_order],
                _ => [f64::NAN; 4],
            };
            let mut r = vec![p.0, p.1.iter().map(|x| x * x).sum::<f64>().sqrt(), report.identity_i[j]];
            r.extend(row);
            table.push(r);
        }
        let mut out = SuiteResult::new(Suite::DistProducts, table);
        out.checks.push(Check::at_most("identity_i", worst(report.identity_i.iter().copied()), 1e-4));
        out.checks.push(Check::at_most("identity_ii", worst(report.identity_ii.iter().flat_map(|s| s.residual.clone())), 1e-8));
        out.checks.push(Check::at_least("identity_ii_order", least(report.identity_ii.iter().map(|s| s.convergence_order)), 1.8));
        out.checks.push(Check::at_least("identity_iii_order", least(report.identity_iii.iter().map(|s| s.fitted_order)), 1.8));
        out.notes.insert("excluded".into(), json!(report.excluded.len()));
        Ok(out)
    }

    fn signature(&self) -> Result<SuiteResult, LabError> {
        let blocks = self.blocks()?;
        let t0 = self.cfg.t0;
        let transports = match self.cfg.checks.t0_alt {
            Some(alt) => {
                let qalt = self.cfg.quadrature(&self.pot, alt);
                blocks
                    .par_iter()
                    .map(|b| t0_independence_check(&self.rep, &b.mode, &self.pot, t0, alt, &self.qcfg, &qalt, &self.ecfg))
                    .collect::<Result<Vec<_>, _>>()?
            }
            None => vec![f64::NAN; blocks.len()],
        };
        let mut table = Table::new(&[
            "k", "omega", "s_max", "first_order", "second_order", "mixing", "eig_min", "eig_max", "hermiticity",
            "quad_error", "transport_diff",
        ]);
        for (b, tr) in blocks.iter().zip(&transports) {
            table.push(vec![
                b.mode.k_abs(),
                b.mode.omega,
                max_abs(&b.s_tilde),
                op_norm(&b.first_order),
                op_norm(&b.second_order),
                op_norm(&b.s_mix),
                b.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min),
                b.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                b.hermiticity_residual(),
                b.quad_error.unwrap_or(f64::NAN),
                *tr,
            ]);
        }
        let mut out = SuiteResult::new(Suite::Signature, table);
        out.checks.push(Check::at_most("hermiticity", worst(out.table.column("hermiticity").unwrap()), 1e-8));
        if self.qcfg.estimate_error {
            out.checks.push(Check::at_most("quad_error", worst(out.table.column("quad_error").unwrap()), 1e-8));
        }
        if self.cfg.checks.t0_alt.is_some() {
            out.checks.push(Check::at_most("transport_diff", worst(transports), 1e-4));
        }
        if self.pot.is_vacuum() {
            let dev = blocks.iter().map(|b| max_abs(&(&b.s_tilde - vacuum_signature(&self.rep, &b.mode)))).fold(0.0, f64::max);
            out.checks.push(Check::at_most("vacuum_reduction", dev, 1e-8));
        }
        let n_oracle = self.cfg.checks.oracle_samples.min(blocks.len());
        if n_oracle > 0 {
            let picks = spread(blocks.len(), n_oracle);
            let icfg = InnerConfig { evolution: self.ecfg, ..InnerConfig::default() };
            let rels = picks
                .par_iter()
                .map(|&i| {
                    let b = &blocks[i];
                    let o = oracle_signature_from_families(&self.rep, &b.mode, &self.pot, t0, &[0.2, 0.1, 0.05], 48, &icfg)?;
                    Ok(max_abs(&(&o.value - &b.s_tilde)) / max_abs(&b.s_tilde))
                })
                .collect::<Result<Vec<f64>, LabError>>()?;
            out.notes.insert("oracle_k".into(), json!(picks.iter().map(|&i| blocks[i].mode.k_abs()).collect::<Vec<_>>()));
            out.notes.insert("oracle_relative".into(), json!(rels));
            out.checks.push(Check::at_most("family_oracle", worst(rels), 1e-3));
        }
        Ok(out)
    }

    fn gap(&self) -> Result<SuiteResult, LabError> {
        let blocks = self.blocks()?;
        let l1 = if self.pot.is_vacuum() { 0.0 } else { self.pot.check_smallness(&self.rep)?.value };
        let small = l1 < fermisig_core::potential::SMALLNESS_THRESHOLD;
        let mut table = Table::new(&["k", "omega", "plus_min", "plus_max", "minus_min", "minus_max", "in_bands"]);
        for b in blocks {
            let g = spectral_gap_check(b);
            let lo = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            table.push(vec![
                b.mode.k_abs(),
                b.mode.omega,
                lo(&g.eigs_plus),
                hi(&g.eigs_plus),
                lo(&g.eigs_minus),
                hi(&g.eigs_minus),
                if g.in_gap_bands { 1.0 } else { 0.0 },
            ]);
        }
        let mut out = SuiteResult::new(Suite::Gap, table);
        out.notes.insert("l1_c0".into(), json!(l1));
        out.notes.insert("small".into(), json!(small));
        if small {
            let outside = out.table.column("in_bands").unwrap().iter().filter(|&&v| v == 0.0).count();
            out.checks.push(Check::at_most("blocks_outside_bands", outside as f64, 0.0));
        }
        Ok(out)
    }

    fn contour(&self) -> Result<SuiteResult, LabError> {
        let blocks = self.blocks()?;
        let n = self.cfg.checks.contour_nodes;
        let rows = blocks
            .par_iter()
            .map(|b| {
                if !spectral_gap_check(b).in_gap_bands {
                    return Ok(vec![b.mode.k_abs(), f64::NAN, f64::NAN, f64::NAN]);
                }
                let r = contour_projector_check(b, n)?;
                Ok(vec![b.mode.k_abs(), r.residual_plus, r.residual_minus, r.correction])
            })
            .collect::<Result<Vec<_>, LabError>>()?;
        let mut table = Table::new(&["k", "residual_plus", "residual_minus", "correction"]);
        rows.into_iter().for_each(|r| table.push(r));
        let live = |col: &str| table.column(col).unwrap().into_iter().filter(|v| !v.is_nan());
        let res = worst(live("residual_plus").chain(live("residual_minus")));
        let skipped = table.rows.iter().filter(|r| r[1].is_nan()).count();
        let mut out = SuiteResult::new(Suite::Contour, table);
        out.checks.push(Check::at_most("contour_residual", res, 1e-8));
        out.notes.insert("skipped_outside_gap".into(), json!(skipped));
        Ok(out)
    }

    fn mixing(&self) -> Result<SuiteResult, LabError> {
        let t0 = self.edge_anchor();
        let qcfg = self.cfg.quadrature(&self.pot, t0);
        let order = self.cfg.checks.mixing_order;
        let scan = mixing_decay_scan(&self.rep, &self.pot, 1.0, t0, &self.cfg.k_values(), &self.cfg.direction(), order, &qcfg, &self.ecfg)?;
        let mut cols = vec!["k".to_string(), "omega".to_string(), "norm_mixing".to_string()];
        cols.extend((0..=2 * order).map(|n| format!("weighted_{n}")));
        let mut table = Table { columns: cols, rows: Vec::new() };
        for r in &scan.rows {
            let mut row = vec![r.k, r.omega, r.norm_ds];
            row.extend(&r.weighted);
            table.push(row);
        }
        let mut out = SuiteResult::new(Suite::Mixing, table);
        out.notes.insert("anchor".into(), json!(t0));
        out.notes.insert("fitted_exponent".into(), json!(finite_or_null(scan.fitted_exponent)));
        out.notes.insert("sup_weighted".into(), json!(scan.sup_weighted));
        if self.pot.is_vacuum() {
            out.checks.push(Check::at_most("vacuum_mixing", worst(scan.rows.iter().map(|r| r.norm_ds)), 1e-12));
        }
        Ok(out)
    }

    fn projector(&self) -> Result<SuiteResult, LabError> {
        let blocks = self.blocks()?;
        let n = self.cfg.checks.projector_modes.min(blocks.len()).max(1);
        let picks = spread(blocks.len(), n);
        let times = projector_times(&self.pot, self.cfg.t0);
        let rows = picks
            .par_iter()
            .map(|&i| {
                let pb = ProjectorBlock::from_signature(&self.rep, blocks[i].clone())?;
                let grid = pb.kernel_grid(&self.rep, &self.pot, &times, &self.ecfg)?;
                let sym = pb.symmetry_residual(&self.rep, &grid);
                let h = dirac_step(pb.mode().omega);
                let dirac = pb.dirac_residual(&self.rep, &self.pot, &times, h, &self.ecfg)?;
                Ok(vec![pb.mode().k_abs(), pb.mode().omega, h, sym, dirac])
            })
            .collect::<Result<Vec<_>, LabError>>()?;
        let mut table = Table::new(&["k", "omega", "fd_step", "symmetry", "dirac"]);
        rows.into_iter().for_each(|r| table.push(r));
        let mut out = SuiteResult::new(Suite::Projector, table);
        out.checks.push(Check::at_most("symmetry", worst(out.table.column("symmetry").unwrap()), 1e-9));
        out.checks.push(Check::at_most("dirac", worst(out.table.column("dirac").unwrap()), 1e-6));
        Ok(out)
    }

    fn hadamard(&self) -> Result<SuiteResult, LabError> {
        let t0 = self.edge_anchor();
        let qcfg = self.cfg.quadrature(&self.pot, t0);
        let ks = self.cfg.k_values();
        let doubled = doubled_grid(&self.cfg);
        let dir = self.cfg.direction();
        let [base, wide] = [&ks, &doubled].map(|g| hadamard_diagnostic(&self.rep, &self.pot, 1.0, t0, g, &dir, 6, &qcfg, &self.ecfg));
        let (base, wide) = (base?, wide?);
        let mut cols = vec!["k".to_string(), "omega".to_string(), "norm_diff".to_string()];
        cols.extend((0..=6).map(|n| format!("weighted_{n}")));
        let mut table = Table { columns: cols, rows: Vec::new() };
        for r in &base.rows {
            let mut row = vec![r.k, r.omega, r.norm_diff];
            row.extend(&r.weighted);
            table.push(row);
        }
        let mut out = SuiteResult::new(Suite::Hadamard, table);
        out.notes.insert("anchor".into(), json!(t0));
        out.notes.insert("sup".into(), json!(base.sup));
        out.notes.insert("sup_doubled".into(), json!(wide.sup));
        out.notes.insert("fitted_exponent".into(), json!(finite_or_null(base.fitted_exponent)));
        if !self.pot.is_vacuum() {
            let last = base.rows.last().unwrap().norm_diff;
            out.checks.push(Check::at_most("last_over_sup", last / base.sup[0], 1e-6));
            let stability = (wide.sup[6] - base.sup[6]).abs() / base.sup[6];
            out.checks.push(Check::at_most("weighted_6_stability", stability, 0.1));
        } else {
            out.checks.push(Check::at_most("vacuum_difference", base.sup[0], 1e-12));
        }
        Ok(out)
    }

    fn state(&self) -> Result<SuiteResult, LabError> {
        let blocks = self.blocks()?;
        let target = self.cfg.checks.state_modes;
        let mut chosen = Vec::new();
        let mut dim = 0;
        for b in blocks.iter().filter(|b| b.mode.k_abs() > 0.0) {
            if dim + b.s_tilde.nrows() > target {
                break;
            }
            dim += b.s_tilde.nrows();
            chosen.push(b.clone());
        }
        if chosen.is_empty() {
            return Err(LabError::Config(format!("checks.state_modes = {target} is smaller than one block")));
        }
        let space = build_doubled_space(&chosen, None)?;
        let mut rng = self.rng(Suite::State);
        let probes: Vec<Vector> = (0..6).map(|_| random_vector(&mut rng, 2 * dim)).collect();
        let inv = space.invariants(&probes);
        let fock = fock_oracle(&space)?;
        let report = fock.report(&probes)?;
        let pbs = chosen.iter().map(|b| ProjectorBlock::from_signature(&self.rep, b.clone())).collect::<Result<Vec<_>, _>>()?;
        let mut pairing = 0.0f64;
        for _ in 0..3 {
            let g = random_test_function(&mut rng, pbs.len(), self.rep.spinor_dim, self.cfg.t0);
            let f = random_test_function(&mut rng, pbs.len(), self.rep.spinor_dim, self.cfg.t0);
            let kg = smeared_cauchy_data(&self.rep, &pbs, &self.pot, &g, &self.ecfg)?;
            let kf = smeared_cauchy_data(&self.rep, &pbs, &self.pot, &f, &self.ecfg)?;
            let direct = projector_pairing(&self.rep, &pbs, &self.pot, &g, &f, &self.ecfg)?;
            pairing = pairing.max((fock.two_point_fields(&kg, &kf) - direct).norm() / (1.0 + direct.norm()));
        }
        let names = [
            ("r_idempotent", inv.r_idempotent),
            ("r_hermitian", inv.r_hermitian),
            ("r_complement", inv.r_complement),
            ("r_min_eigenvalue", inv.r_min_eigenvalue),
            ("r_max_eigenvalue", inv.r_max_eigenvalue),
            ("gamma_involution", inv.gamma_involution),
            ("antiunitarity", inv.antiunitarity),
            ("car", report.car),
            ("hermiticity", report.hermiticity),
            ("two_point_r", report.two_point_r),
            ("odd_moments", report.odd_moments),
            ("wick_four_point", report.wick_four_point),
            ("min_positivity", report.min_positivity),
            ("projector_pairing", pairing),
        ];
        let mut table = Table::new(&names.map(|(n, _)| n));
        table.push(names.iter().map(|(_, v)| *v).collect());
        let mut out = SuiteResult::new(Suite::State, table);
        for (n, v) in names {
            match n {
                "r_min_eigenvalue" => out.checks.push(Check::at_least(n, v, -1e-10)),
                "r_max_eigenvalue" => out.checks.push(Check::at_most(n, v, 1.0 + 1e-10)),
                "min_positivity" => out.checks.push(Check::at_least(n, v, -1e-10)),
                _ => out.checks.push(Check::at_most(n, v, 1e-10)),
            }
        }
        out.notes.insert("modes".into(), json!(dim));
        out.notes.insert("block_k".into(), json!(chosen.iter().map(|b| b.mode.k_abs()).collect::<Vec<_>>()));
        Ok(out)
    }

    fn sobolev(&self) -> Result<SuiteResult, LabError> {
        let (m_l, m_r) = self.cfg.mass.interval();
        let grid = MassGrid::gauss(m_l, m_r, self.cfg.mass.n_nodes)?;
        let times: Vec<f64> = (0..=12).map(|j| 10.0 * 4f64.powf(j as f64 / 12.0)).collect();
        let radial = radial_gauss_rule(10.0, 20);
        let mut cases = vec![(0.0, PotentialSpec::vacuum())];
        if !self.pot.is_vacuum() {
            cases.push((1.0, self.pot.clone()));
        }
        let jobs: Vec<(f64, &PotentialSpec, usize, usize)> =
            cases.iter().flat_map(|(tag, p)| (0..=2).flat_map(move |a| (0..=2).map(move |b| (*tag, p, a, b)))).collect();
        let rows = jobs
            .par_iter()
            .map(|&(tag, p, a, b)| {
                let fit = sobolev_growth_check(&grid, RadialProfile::Gaussian { kappa: 1.0 }, &radial, p, self.cfg.t0, a, b, &times, (10.0, 40.0), &self.ecfg)?;
                Ok(vec![tag, a as f64, b as f64, fit.exponent, fit.constant, fit.initial_sum])
            })
            .collect::<Result<Vec<_>, LabError>>()?;
        let mut table = Table::new(&["with_potential", "a", "b", "exponent", "constant", "initial_sum"]);
        rows.into_iter().for_each(|r| table.push(r));
        let excess = worst(table.rows.iter().map(|r| r[3] - r[2]));
        let mut out = SuiteResult::new(Suite::Sobolev, table);
        out.checks.push(Check::at_most("exponent_minus_b", excess, 0.1));
        Ok(out)
    }

    fn lattice_vacuum_check(&self) -> Result<SuiteResult, LabError> {
        let lat = self.lattice()?;
        let s = vacuum_signature_matrix(&lat);
        let d = 2 * lat.n;
        let mut table = Table::new(&["j", "k", "closed_form_diff"]);
        for j in 0..lat.n {
            let mode = MomentumMode::new(&[lat.wavenumber(j)], 1.0)?;
            let spinor = [c(0.6, 0.0), c(0.0, 0.8)];
            let psi = lat.plane_wave(j, spinor);
            let out = lat.vacuum_evolve(&psi, 3.0);
            let u = vacuum_evolution(&self.rep, &mode, 3.0, 0.0);
            let v = &u * Vector::from_vec(spinor.to_vec());
            let expect = lat.plane_wave(j, [v[0], v[1]]);
            let diff = out.iter().zip(&expect).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            table.push(vec![j as f64, lat.wavenumber(j), diff]);
        }
        let mut out = SuiteResult::new(Suite::VacuumCheck, table);
        out.checks.push(Check::at_most("clifford_residual", clifford_residual(&self.rep), 1e-12));
        out.checks.push(Check::at_most("signature_involution", max_abs(&(&s * &s - Mat::identity(d, d))), 1e-8));
        out.checks.push(Check::at_most("signature_hermiticity", hermiticity_defect(&s), 1e-12));
        out.checks.push(Check::at_most("closed_form_diff", worst(out.table.column("closed_form_diff").unwrap()), 1e-9));
        Ok(out)
    }

    fn lattice_evolve_suite(&self) -> Result<SuiteResult, LabError> {
        let lat = self.lattice()?;
        let t0 = self.cfg.t0;
        let t = t0 + self.horizon();
        let mut rng = self.rng(Suite::Evolve);
        let psi: Vec<C64> = random_vector(&mut rng, 2 * lat.n).iter().copied().collect();
        let before: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let moved = lattice_evolve(&lat, &self.rep, &self.pot, &psi, t, t0, &self.ecfg)?;
        let after: f64 = moved.iter().map(|z| z.norm_sqr()).sum();
        let mut table = Table::new(&["j", "k", "regime_a_diff"]);
        if self.pot.is_homogeneous() {
            for j in 0..lat.n {
                let spinor = [c(1.0, 0.0), c(0.0, 0.0)];
                let out = lattice_evolve(&lat, &self.rep, &self.pot, &lat.plane_wave(j, spinor), t, t0, &self.ecfg)?;
                let mode = MomentumMode::new(&[lat.wavenumber(j)], 1.0)?;
                let u = evolve_block(&self.rep, &mode, &self.pot, t, t0, &self.ecfg)?;
                let expect = lat.plane_wave(j, [u[(0, 0)], u[(1, 0)]]);
                let diff = out.iter().zip(&expect).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                table.push(vec![j as f64, lat.wavenumber(j), diff]);
            }
        }
        let mut out = SuiteResult::new(Suite::Evolve, table);
        out.checks.push(Check::at_most("norm_drift", (after - before).abs() / before, 1e-9));
        if self.pot.is_homogeneous() {
            out.checks.push(Check::at_most("regime_a_diff", worst(out.table.column("regime_a_diff").unwrap()), 1e-8));
        }
        Ok(out)
    }

    fn lattice_signature_suite(&self) -> Result<SuiteResult, LabError> {
        let lat = self.lattice()?;
        let sig = lattice_signature(&lat, &self.rep, &self.pot, self.cfg.t0, &self.qcfg, &self.ecfg)?;
        let homogeneous = self.pot.is_homogeneous();
        let rows = (0..lat.n)
            .into_par_iter()
            .map(|j| {
                let block = sig.block(j);
                let eig = hermitian_eigen(&block).0;
                let diff = if homogeneous {
                    let mode = MomentumMode::new(&[lat.wavenumber(j)], 1.0)?;
                    let a = assemble_signature(&self.rep, &mode, &self.pot, self.cfg.t0, &self.qcfg, &self.ecfg)?;
                    max_abs(&(&block - &a.s_tilde)) / max_abs(&a.s_tilde)
                } else {
                    f64::NAN
                };
                Ok(vec![j as f64, lat.wavenumber(j), eig[0], eig[1], fro_norm(&block), diff])
            })
            .collect::<Result<Vec<_>, LabError>>()?;
        let mut table = Table::new(&["j", "k", "eig_min", "eig_max", "block_norm", "regime_a_diff"]);
        rows.into_iter().for_each(|r| table.push(r));
        let mut out = SuiteResult::new(Suite::Signature, table);
        out.notes.insert("mode_coupling".into(), json!(sig.mode_coupling()));
        out.notes.insert("max_unitarity_defect".into(), json!(sig.max_unitarity_defect));
        out.checks.push(Check::at_most("hermiticity", hermiticity_defect(&sig.s_tilde), 1e-8));
        if homogeneous {
            out.checks.push(Check::at_most("mode_coupling", sig.mode_coupling(), 1e-10));
            out.checks.push(Check::at_most("regime_a_diff", worst(out.table.column("regime_a_diff").unwrap()), 1e-6));
        }
        Ok(out)
    }
}

/// `n` indices spread evenly over `0..len`, ends included.
fn spread(len: usize, n: usize) -> Vec<usize> {
    if n <= 1 {
        return vec![0];
    }
    (0..n).map(|j| j * (len - 1) / (n - 1)).collect()
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Log-log slope of the Lippmann-Schwinger error (two iterations) against
/// the amplitude, over `λ, λ/2, λ/4`.
pub fn ls_slope(rep: &SpinorRep, mode: &MomentumMode, pot: &PotentialSpec, t: f64, t0: f64, cfg: &EvolutionConfig) -> Result<f64, LabError> {
    let d = rep.spinor_dim;
    let psi0 = Vector::from_fn(d, |i, _| c(1.0 / (1.0 + i as f64), 0.3 * i as f64));
    let mut lams = Vec::new();
    let mut errs = Vec::new();
    for j in 0..3 {
        let p = pot.clone().with_amplitude(pot.amplitude / f64::from(1u32 << j));
        let exact = evolve_block(rep, mode, &p, t, t0, cfg)? * &psi0;
        let ls = lippmann_schwinger(rep, mode, &p, &psi0, t, t0, 2)?;
        lams.push(p.amplitude.abs());
        errs.push((ls - exact).norm());
    }
    Ok(fermisig_core::quadrature::loglog_slope(&lams, &errs))
}

/// Trapezoid nodes for the commutator identity; its error grows like `(hω)²`.
pub fn commutator_nodes(omega: f64) -> usize {
    200.max((120.0 * omega).ceil() as usize)
}

/// Five-point step; the truncation error `(hω)⁴ω/30` stays near 1e-8.
pub fn dirac_step(omega: f64) -> f64 {
    1e-2f64.min(0.02 / omega.powf(1.25))
}

/// 20 times covering the potential support with a margin.
pub fn projector_times(pot: &PotentialSpec, t0: f64) -> Vec<f64> {
    let (lo, hi) = if pot.is_vacuum() { (t0 - 4.0, t0 + 4.0) } else { let (a, b) = pot.support(); (a.min(t0) - 1.0, b.max(t0) + 1.0) };
    (0..20).map(|i| lo + (hi - lo) * i as f64 / 19.0).collect()
}

/// Grid with twice the cutoff and the same spacing.
pub fn doubled_grid(cfg: &ScenarioConfig) -> Vec<f64> {
    let k = &cfg.k_grid;
    match k.spacing {
        crate::config::Spacing::Linear => k_grid(2.0 * k.k_max, 2 * k.n_k.max(2) - 1, false),
        crate::config::Spacing::Log => k_grid(2.0 * k.k_max, k.n_k, true),
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_test_function(rng: &mut ChaCha8Rng, blocks: usize, dim: usize, t0: f64) -> TimeTestFunction {
    TimeTestFunction {
        block: rng.random_range(0..blocks),
        centre: t0 + rng.random_range(-2.0..2.0),
        half_width: 1.5,
        spinor: random_vector(rng, dim),
    }
}

/// Timelike `p` with `√p²` uniform in `(lo, hi)`, `|p⃗| ≤ 0.6` and `p⁰ > 0`.
fn timelike_sample(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Momentum4 {
    let mu: f64 = rng.random_range(lo..hi);
    let p: Vec<f64> = (0..3).map(|_| rng.random_range(-0.35..0.35)).collect();
    let p0 = (mu * mu + p.iter().map(|x| x * x).sum::<f64>()).sqrt();
    (p0, p)
}

/// One randomized pair of single-column families.
struct PairDraw {
    k: Vec<f64>,
    centres: [f64; 2],
    widths: [f64; 2],
    spinors: [[Vector; 2]; 2],
}

impl PairDraw {
    fn sample(rng: &mut ChaCha8Rng, grid: &MassGrid, k_max: f64) -> Self {
        let hw = grid.half_width();
        let kr = rng.random_range(0.0..k_max.min(2.0));
        let dir: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        let k = dir.iter().map(|x| x * kr / n).collect();
        let mut draw_profile = || {
            let w = rng.random_range(0.6..1.0) * hw;
            let c = grid.center() + rng.random_range(-1.0..1.0) * (hw - w);
            (c, w)
        };
        let (a, b) = (draw_profile(), draw_profile());
        let mut spinor = || {
            let v = random_vector(rng, 4);
            let n = v.norm();
            v / C64::new(n, 0.0)
        };
        let spinors = [[spinor(), spinor()], [spinor(), spinor()]];
        PairDraw { k, centres: [a.0, b.0], widths: [a.1, b.1], spinors }
    }

    /// Data `u + (m − 1) v` with a bump profile on `[c − w, c + w]`.
    fn families(&self, grid: &MassGrid) -> Result<(MassFamily, MassFamily), LabError> {
        let make = |i: usize| {
            let (c, w) = (self.centres[i], self.widths[i]);
            let [u, v] = self.spinors[i].clone();
            MassFamily::new(grid.clone(), move |m| bump((m - c) / w), move |m| {
                let col = &u + &v * C64::new(m - 1.0, 0.0);
                Mat::from_column_slice(col.len(), 1, col.as_slice())
            }, 2)
        };
        Ok((make(0)?, make(1)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip_and_order_is_dependency_order() {
        for s in Suite::ALL {
            assert_eq!(Suite::from_name(s.name()), Some(s));
        }
        assert!(Suite::Evolve < Suite::Signature && Suite::Signature < Suite::Projector && Suite::Projector < Suite::State);
        assert_eq!(Suite::from_name("bogus"), None);
    }

    #[test]
    fn nan_never_passes() {
        assert!(!Check::at_most("x", f64::NAN, 1.0).pass);
        assert!(!Check::within("x", f64::NAN, 0.0, 1.0).pass);
        assert!(worst([1.0, f64::NAN, 0.5]).is_nan());
        assert!(worst([f64::NAN, 2.0]).is_nan());
        assert!(least([2.0, f64::NAN]).is_nan());
        assert!(least([]).is_nan());
        assert_eq!(least([3.0, 1.9, 2.5]), 1.9);
    }

    #[test]
    fn dirac_step_keeps_truncation_small() {
        for omega in [1.0, 3.0, 10.0, 30.0] {
            let h = dirac_step(omega);
            assert!((h * omega).powi(4) * omega / 30.0 < 1e-8, "omega {omega}");
        }
    }

    #[test]
    fn doubled_linear_grid_contains_the_original() {
        let cfg = crate::config::parse("regime = \"homogeneous_3p1\"\noutput_dir = \"x\"\nk_grid.n_k = 5\nk_grid.k_max = 2.0\n").unwrap();
        let d = doubled_grid(&cfg);
        assert_eq!(d.len(), 9);
        for k in cfg.k_values() {
            assert!(d.iter().any(|x| (x - k).abs() < 1e-14));
        }
    }
}
