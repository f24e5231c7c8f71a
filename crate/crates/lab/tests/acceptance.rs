//! Acceptance criteria, one line per criterion. Each scenario runs through
//! the same `run` entry point as the CLI; the thresholds below are applied
//! to the reported values independently of the suites' own bounds.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use fermisig_lab::config::{parse, LoadedConfig};
use fermisig_lab::suites::SuiteResult;
use fermisig_lab::{run, RunSummary};

const PULSE: &str = r#"
potential.kind = "scalar"
potential.envelope = "gaussian"
potential.sigma = 1.0
potential.l1_c0 = 0.3
"#;

struct Outcome {
    pass: bool,
    detail: String,
}

fn scenario(body: &str) -> RunSummary {
    let dir = tempfile::tempdir().expect("tempdir");
    let raw = format!("regime = \"homogeneous_3p1\"\noutput_dir = \"unused\"\n{body}");
    let config = parse(&raw).unwrap_or_else(|e| panic!("scenario does not parse: {e}\n{raw}"));
    config.validate().unwrap_or_else(|e| panic!("scenario does not validate: {e}\n{raw}"));
    run(&LoadedConfig { config, raw }, Some(dir.path())).unwrap_or_else(|e| panic!("run failed: {e}"))
}

fn lattice_scenario(body: &str) -> RunSummary {
    let dir = tempfile::tempdir().expect("tempdir");
    let raw = format!("regime = \"lattice_1p1\"\noutput_dir = \"unused\"\n{body}");
    let config = parse(&raw).expect("lattice scenario parses");
    run(&LoadedConfig { config, raw }, Some(dir.path())).unwrap_or_else(|e| panic!("run failed: {e}"))
}

fn result<'a>(s: &'a RunSummary, suite: &str) -> &'a SuiteResult {
    s.results.iter().find(|r| r.suite.name() == suite).unwrap_or_else(|| panic!("no {suite} result"))
}

/// Reported value of a check; NaN when the suite did not emit it.
fn value(s: &RunSummary, suite: &str, check: &str) -> f64 {
    result(s, suite).checks.iter().find(|c| c.name == check).map_or(f64::NAN, |c| c.value)
}

fn below(v: f64, tol: f64) -> bool {
    v < tol
}

/// Largest value; NaN as soon as any value is NaN.
fn max_poisoned(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut out = f64::NEG_INFINITY;
    for v in values {
        if v.is_nan() {
            return f64::NAN;
        }
        out = out.max(v);
    }
    out
}

fn c1(vac: &RunSummary) -> Outcome {
    let assembled = value(vac, "vacuum_check", "assembled_minus_vacuum");
    let eig = value(vac, "vacuum_check", "eigen_deviation");
    let rows = result(vac, "vacuum_check").table.rows.len();
    Outcome {
        pass: rows == 64 && below(assembled, 1e-8) && below(eig, 1e-8),
        detail: format!("{rows} momenta, max |S - S0| = {assembled:.2e}, max ||eig| - 1| = {eig:.2e}"),
    }
}

fn c2(pulse: &RunSummary) -> Outcome {
    let rel = value(pulse, "signature", "family_oracle");
    let n = result(pulse, "signature").notes.get("oracle_k").and_then(|v| v.as_array()).map_or(0, Vec::len);
    Outcome { pass: n == 8 && below(rel, 1e-3), detail: format!("{n} momenta, max relative difference {rel:.2e}") }
}

fn c3() -> Outcome {
    let s = scenario(
        r#"
suites = ["signature"]
t0 = -5.0
k_grid.n_k = 16
potential.kind = "scalar"
potential.envelope = "bump"
potential.half_width = 2.0
potential.amplitude = 0.2
checks.t0_alt = 3.0
"#,
    );
    let d = value(&s, "signature", "transport_diff");
    Outcome { pass: below(d, 1e-4), detail: format!("anchors -5 and 3, transported relative difference {d:.2e}") }
}

fn c4(pulse: &RunSummary) -> Outcome {
    let t = &result(pulse, "gap").table;
    let col = |n: &str| t.column(n).unwrap();
    let (pmin, pmax, mmin, mmax) = (col("plus_min"), col("plus_max"), col("minus_min"), col("minus_max"));
    let inside = (0..t.rows.len())
        .all(|i| pmin[i] >= 0.5 && pmax[i] <= 1.5 && mmin[i] >= -1.5 && mmax[i] <= -0.5);
    let l1 = result(pulse, "gap").notes["l1_c0"].as_f64().unwrap_or(f64::NAN);
    Outcome {
        pass: inside && l1 < 2f64.sqrt() - 1.0,
        detail: format!("L1 = {l1:.4}, {} blocks, spectra inside the bands: {inside}", t.rows.len()),
    }
}

fn c5(pulse: &RunSummary) -> Outcome {
    let r = value(pulse, "contour", "contour_residual");
    let skipped = result(pulse, "contour").notes["skipped_outside_gap"].as_u64().unwrap_or(u64::MAX);
    Outcome { pass: below(r, 1e-8), detail: format!("64 nodes, max residual {r:.2e}, {skipped} blocks outside the gap") }
}

fn c6(pulse: &RunSummary) -> Outcome {
    let h = result(pulse, "hadamard");
    let omega_last = *h.table.column("omega").unwrap().last().unwrap();
    let ratio = value(pulse, "hadamard", "last_over_sup");
    let stab = value(pulse, "hadamard", "weighted_6_stability");
    Outcome {
        pass: (omega_last - 10.0).abs() < 1e-9 && below(ratio, 1e-6) && below(stab, 0.1),
        detail: format!("omega = {omega_last}, diff(omega)/diff(k=0) = {ratio:.2e}, weighted_6 change {stab:.2e}"),
    }
}

fn c7() -> Outcome {
    let s = scenario(
        r#"
suites = ["mop_decay"]
mass.m_l = 0.5
mass.m_r = 1.5
mass.n_nodes = 32
k_grid.n_k = 8
potential.kind = "scalar"
potential.envelope = "power"
potential.epsilon = 0.5
potential.amplitude = 0.3
"#,
    );
    let vac = value(&s, "mop_decay", "vacuum_slope");
    let pot = value(&s, "mop_decay", "potential_slope");
    Outcome {
        pass: (-2.3..=-1.8).contains(&vac) && pot <= -1.0,
        detail: format!("vacuum slope {vac:.3}, power envelope slope {pot:.3}"),
    }
}

fn c8(vac: &RunSummary) -> Outcome {
    let pairs = result(vac, "strong_mop").table.rows.len();
    let r = value(vac, "strong_mop", "max_ratio");
    Outcome {
        pass: pairs >= 20 && r <= 2.0 * PI * 1.05,
        detail: format!("{pairs} pairs, max ratio {r:.4} against {:.4}", 2.0 * PI * 1.05),
    }
}

fn c9(vac: &RunSummary, pulse: &RunSummary) -> Outcome {
    let v = value(vac, "strong_mop", "max_weak_residual");
    let p = value(pulse, "strong_mop", "max_weak_residual");
    Outcome { pass: below(v, 1e-4) && below(p, 1e-3), detail: format!("vacuum {v:.2e}, pulse {p:.2e}") }
}

fn c10(vac: &RunSummary) -> Outcome {
    let used = result(vac, "dist_products").table.rows.len();
    let i = value(vac, "dist_products", "identity_i");
    let ii = value(vac, "dist_products", "identity_ii_order");
    let iii = value(vac, "dist_products", "identity_iii_order");
    Outcome {
        pass: used >= 10 && below(i, 1e-4) && ii >= 1.8 && iii >= 1.8,
        detail: format!("{used} samples, (i) {i:.2e}, (ii) order {ii:.2}, (iii) order {iii:.2}"),
    }
}

fn c11(pulse: &RunSummary) -> Outcome {
    let slopes: Vec<f64> = (0..3).map(|j| value(pulse, "evolve", &format!("ls_slope_{j}"))).collect();
    Outcome {
        pass: slopes.iter().all(|s| (s - 3.0).abs() <= 0.2),
        detail: format!("slopes {}", slopes.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>().join(", ")),
    }
}

fn c12(pulse: &RunSummary) -> Outcome {
    let modes = result(pulse, "projector").table.rows.len();
    let sym = value(pulse, "projector", "symmetry");
    let dirac = value(pulse, "projector", "dirac");
    Outcome {
        pass: modes == 8 && below(sym, 1e-9) && below(dirac, 1e-6),
        detail: format!("{modes} modes on 20x20 grids, symmetry {sym:.2e}, Dirac {dirac:.2e}"),
    }
}

fn c13(pulse: &RunSummary) -> Outcome {
    let st = result(pulse, "state");
    let failing: Vec<&str> = st.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let worst = max_poisoned(
        st.checks.iter().filter(|c| !c.name.ends_with("eigenvalue") && c.name != "min_positivity").map(|c| c.value),
    );
    let dim = st.notes["modes"].as_u64().unwrap_or(0);
    Outcome {
        pass: dim == 4 && st.checks.len() >= 10 && failing.is_empty() && below(worst, 1e-10),
        detail: format!("{dim} modes, {} identities, worst residual {worst:.2e}, failing {failing:?}", st.checks.len()),
    }
}

fn c14(pulse: &RunSummary) -> Outcome {
    let t = &result(pulse, "sobolev").table;
    let (b, e) = (t.column("b").unwrap(), t.column("exponent").unwrap());
    let excess = max_poisoned(b.iter().zip(&e).map(|(b, e)| e - b));
    Outcome { pass: t.rows.len() == 18 && excess <= 0.1, detail: format!("{} fits, max exponent - b = {excess:.3}", t.rows.len()) }
}

fn c15() -> Outcome {
    let s = lattice_scenario(&format!("suites = [\"signature\"]\nt0 = -6.0\nlattice.n = 64\n{PULSE}"));
    let d = value(&s, "signature", "regime_a_diff");
    let c = value(&s, "signature", "mode_coupling");
    Outcome { pass: below(d, 1e-6), detail: format!("N = 64, max block difference {d:.2e}, mode coupling {c:.2e}") }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let vac = scenario(
        r#"
seed = 1
suites = ["vacuum_check", "strong_mop", "dist_products"]
checks.mop_pairs = 20
checks.dist_samples = 10
"#,
    );
    let pulse = scenario(&format!(
        r#"
seed = 2
suites = ["evolve", "strong_mop", "signature", "gap", "contour", "projector", "hadamard", "state", "sobolev"]
k_grid.k_max = {}
checks.oracle_samples = 8
checks.projector_modes = 8
checks.state_modes = 4
checks.contour_nodes = 64
{PULSE}"#,
        99f64.sqrt()
    ));
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("vacuum reduction", Box::new(|| c1(&vac))),
        ("signature family oracle", Box::new(|| c2(&pulse))),
        ("anchor independence", Box::new(c3)),
        ("spectral gap", Box::new(|| c4(&pulse))),
        ("contour projector", Box::new(|| c5(&pulse))),
        ("hadamard diagnostic", Box::new(|| c6(&pulse))),
        ("mass oscillation decay", Box::new(c7)),
        ("strong mass oscillation constant", Box::new(|| c8(&vac))),
        ("weak mass oscillation symmetry", Box::new(|| c9(&vac, &pulse))),
        ("distributional products", Box::new(|| c10(&vac))),
        ("lippmann-schwinger order", Box::new(|| c11(&pulse))),
        ("projector identities", Box::new(|| c12(&pulse))),
        ("state algebra", Box::new(|| c13(&pulse))),
        ("sobolev growth", Box::new(|| c14(&pulse))),
        ("lattice cross-check", Box::new(c15)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria passed in {:.1}s", criteria.len() - failed, criteria.len(), started.elapsed().as_secs_f64());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
