//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p gyronet --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use gyronet::mc::{estimate_sensitivity_mc, McRun};
use gyronet::optimizer::{
    constrained_sensitivity, find_ratio_peak, optimize, optimized_ratio, solve_entangled,
};
use gyronet::pipeline::{pipeline_sensitivity, pipeline_stats};
use gyronet::qcrb::{
    closed_form_entangled_qcrb, closed_form_separable_qcrb, exact_entangled_qcrb,
    lossless_entangled_qcrb, lossless_separable_qcrb, qcrb_ordering_sweep, qfi_matrix, ParamPoint,
};
use gyronet::sensitivity::{
    amplitude_for_budget, error_propagation, joint_quadrature_stats, mean_slope, sensitivity,
    sensitivity_double_seed, sensitivity_entangled, sensitivity_separable, snl, squeezing_db,
};
use gyronet::{NetworkConfig, ProbeParams, Seeding, Topology};

const TOPOLOGIES: [Topology; 2] = [Topology::Entangled, Topology::Separable];
const SEEDINGS: [Seeding; 2] = [Seeding::Single, Seeding::Double];
/// Seed amplitude used on the pipeline and Monte Carlo grids.
const GRID_AMP: f64 = 5.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n)
        .into_iter()
        .map(f64::exp)
        .collect()
}

fn ratio_peak_lossy_095() -> Outcome {
    let p = find_ratio_peak(4, 0.95, 0.1, 100.0).expect("peak search");
    let pass = within(p.n_peak, 2.53, 0.05)
        && within(p.r_peak, 2.21, 0.02)
        && within(p.r_at_peak, 1.13, 0.02)
        && within(p.enhancement_db_vs_snl, 9.28, 0.1)
        && !p.boundary;
    outcome(
        pass,
        format!(
            "N_peak={:.4} R={:.4} r={:.4} gain={:.3} dB",
            p.n_peak, p.r_peak, p.r_at_peak, p.enhancement_db_vs_snl
        ),
    )
}

fn ratio_peak_lossy_099() -> Outcome {
    let p = find_ratio_peak(4, 0.99, 0.1, 100.0).expect("peak search");
    let pass = within(p.n_peak, 6.7, 0.1)
        && within(p.r_peak, 2.86, 0.03)
        && within(p.snl_gain, 23.22, 0.3)
        && within(p.enhancement_db_vs_snl, 13.66, 0.1)
        && !p.boundary;
    outcome(
        pass,
        format!(
            "N_peak={:.4} R={:.4} SNL/Δφ²={:.3} ({:.3} dB)",
            p.n_peak, p.r_peak, p.snl_gain, p.enhancement_db_vs_snl
        ),
    )
}

fn squeezing_consistency() -> Outcome {
    let db = squeezing_db(1.13);
    outcome(within(db, 9.8, 0.1), format!("squeezing_db(1.13)={db:.4}"))
}

fn snl_recovery() -> Outcome {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for topology in TOPOLOGIES {
        for seeding in SEEDINGS {
            let mut worst_row = 0.0f64;
            for m in 1..=10 {
                for n in [1.0, 20.0, 100.0] {
                    let cfg = NetworkConfig::new(m, 1.0, n, topology, seeding).unwrap();
                    let amp = amplitude_for_budget(&cfg, 0.0).unwrap();
                    let v = sensitivity(&cfg, &ProbeParams::new(0.0, amp).unwrap()).unwrap();
                    worst_row = worst_row.max(rel(v, snl(m, n).unwrap()));
                }
            }
            for &eta in &[0.9, 0.5] {
                let cfg = NetworkConfig::new(3, eta, 7.0, topology, seeding).unwrap();
                let amp = amplitude_for_budget(&cfg, 0.0).unwrap();
                let v = sensitivity(&cfg, &ProbeParams::new(0.0, amp).unwrap()).unwrap();
                worst_row = worst_row.max(rel(v, snl(3, 7.0).unwrap()));
            }
            if worst_row > 1e-12 {
                failures.push(format!("{topology}/{seeding} off by {worst_row:.3e}"));
            }
            worst = worst.max(worst_row);
        }
    }
    let detail = if failures.is_empty() {
        format!("worst relative gap {worst:.2e}")
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn closed_form_identities() -> Outcome {
    let mut worst_e = 0.0f64;
    let mut worst_s = 0.0f64;
    let mut worst_ds = 0.0f64;
    for r in linspace(0.0, 2.0, 41) {
        for amp in logspace(0.1, 100.0, 31) {
            worst_e = worst_e.max(rel(
                closed_form_entangled_qcrb(r, amp, 1.0).unwrap(),
                lossless_entangled_qcrb(r, amp).unwrap(),
            ));
            worst_s = worst_s.max(rel(
                closed_form_separable_qcrb(r, amp, 1.0).unwrap(),
                lossless_separable_qcrb(r, amp).unwrap(),
            ));
            for &eta in &[1.0, 0.9] {
                for m in [1, 4] {
                    for topology in TOPOLOGIES {
                        let single = match topology {
                            Topology::Entangled => sensitivity_entangled(r, amp, eta).unwrap(),
                            Topology::Separable => sensitivity_separable(r, amp, eta, m).unwrap(),
                        };
                        let ds = sensitivity_double_seed(topology, r, amp, eta, m).unwrap();
                        worst_ds = worst_ds.max(rel(4.0 * ds, single));
                    }
                }
            }
        }
    }
    outcome(
        worst_e <= 1e-12 && worst_s <= 1e-12 && worst_ds == 0.0,
        format!("ent {worst_e:.2e}, sep {worst_s:.2e}, double-seed quarter {worst_ds:.2e}"),
    )
}

fn numeric_qfi_vs_closed_form() -> Outcome {
    let mut worst = (0.0f64, 0.0, 0.0, 0.0);
    let mut worst_exact = 0.0f64;
    let mut worst_eps = 0.0f64;
    for r in linspace(0.0, 1.5, 7) {
        for alpha in [1.0, 2.0, 5.0, 10.0] {
            for eta in [0.9, 0.95, 0.99, 1.0 - 1e-9] {
                let base = ParamPoint::new(r, alpha, eta).unwrap();
                let q = qfi_matrix(&base).unwrap().qcrb_avg_phase;
                let gap = rel(q, closed_form_entangled_qcrb(r, alpha, eta).unwrap());
                if gap > worst.0 {
                    worst = (gap, r, alpha, eta);
                }
                worst_exact = worst_exact.max(rel(q, exact_entangled_qcrb(r, alpha, eta).unwrap()));
                for eps in [1e-7, 1e-5] {
                    let qe = qfi_matrix(&base.with_thermal(eps)).unwrap().qcrb_avg_phase;
                    worst_eps = worst_eps.max(rel(qe, q));
                }
            }
        }
    }
    outcome(
        worst.0 < 1e-3 && worst_eps < 1e-3,
        format!(
            "worst gap to closed form {:.3e} at r={}, α={}, η={}; ε sensitivity {:.1e}; \
             gap to exact sum-mode form {:.1e}",
            worst.0, worst.1, worst.2, worst.3, worst_eps, worst_exact
        ),
    )
}

fn ordering_sweep() -> Outcome {
    let grid = linspace(1.0, 50.0, 50);
    let mut violations = Vec::new();
    for eta in [1.0, 0.95] {
        for row in qcrb_ordering_sweep(eta, &grid).unwrap() {
            if !row.ordered {
                violations.push(format!("η={eta} N={}", row.n));
            }
        }
    }
    let e = solve_entangled(100.0, 2, 1.0).unwrap().delta_phi_sq;
    let e_cr = gyronet::optimizer::optimize_qcrb(&NetworkConfig::entangled(2, 1.0, 100.0).unwrap())
        .unwrap()
        .delta_phi_sq;
    let saturation = e / e_cr;
    let ordering = if violations.is_empty() {
        "ordering holds on 100/100 points".to_string()
    } else {
        format!("ordering violated at {}", violations.join(", "))
    };
    outcome(
        violations.is_empty() && saturation < 1.05,
        format!("{ordering}; saturation Δφ²_e/Δφ²_e,cr at N=100, η=1: {saturation:.4}"),
    )
}

fn pipeline_vs_formula() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_operating = 0.0f64;
    for topology in TOPOLOGIES {
        for m in [1, 2, 4] {
            for r in [0.0, 0.5, 1.0] {
                for eta in [1.0, 0.95] {
                    let cfg = NetworkConfig::new(m, eta, 1.0, topology, Seeding::Single).unwrap();
                    let p = ProbeParams::new(r, GRID_AMP).unwrap();
                    let closed = sensitivity(&cfg, &p).unwrap();
                    let exact = pipeline_sensitivity(&cfg, &p, 0.0, 1e-3).unwrap();
                    worst = worst.max(rel(exact, closed));
                    let op = pipeline_sensitivity(&cfg, &p, 1e-3, 1e-6).unwrap();
                    worst_operating = worst_operating.max(rel(op, closed));
                }
            }
        }
    }
    outcome(
        worst < 1e-6,
        format!(
            "worst relative gap {worst:.2e} (probe ±1e-3 about 0); \
             operating point φ=1e-3 differs by {worst_operating:.1e}"
        ),
    )
}

fn mc_report(seed: u64) -> (String, f64, usize) {
    let mut report = String::new();
    let mut worst = 0.0f64;
    let mut count = 0;
    for topology in TOPOLOGIES {
        for m in [1, 2, 4] {
            for r in [0.0, 0.5, 1.0] {
                for eta in [1.0, 0.95] {
                    let cfg = NetworkConfig::new(m, eta, 1.0, topology, Seeding::Single).unwrap();
                    let p = ProbeParams::new(r, GRID_AMP).unwrap();
                    let run = McRun::new(1_000_000, seed.wrapping_add(count as u64));
                    let est = estimate_sensitivity_mc(&cfg, &p, &run).unwrap();
                    report.push_str(&format!(
                        "{topology},{m},{r},{eta},{:.12e},{:.12e},{:.6}\n",
                        est.delta_phi_sq_hat, est.std_error, est.z_score_vs_analytic
                    ));
                    worst = worst.max(est.z_score_vs_analytic.abs());
                    count += 1;
                }
            }
        }
    }
    (report, worst, count)
}

fn monte_carlo() -> Outcome {
    let (a, worst, count) = mc_report(2024);
    let (b, _, _) = mc_report(2024);
    let reproducible = a == b;
    outcome(
        worst < 4.0 && reproducible,
        format!(
            "max |z| = {worst:.3} over {count} points; reruns {}",
            if reproducible {
                "byte-identical"
            } else {
                "DIFFER"
            }
        ),
    )
}

fn stationarity() -> Outcome {
    let mut worst_res = 0.0f64;
    let mut worst_con = 0.0f64;
    let mut worst_perturb = 0.0f64;
    for m in 1..=10 {
        for n in [0.5, 1.0, 2.53, 5.0, 6.7, 10.0, 20.0, 50.0, 100.0] {
            for eta in [1.0, 0.98, 0.95, 0.9] {
                for topology in TOPOLOGIES {
                    let cfg = NetworkConfig::new(m, eta, n, topology, Seeding::Single).unwrap();
                    let opt = optimize::<f64>(&cfg).unwrap();
                    worst_res = worst_res.max(opt.implicit_residual.unwrap().abs());
                    worst_con = worst_con.max(opt.constraint_residual.abs() / n);
                    for s in [0.99, 1.01] {
                        let v = constrained_sensitivity(&cfg, opt.r_opt * s).unwrap();
                        worst_perturb =
                            worst_perturb.max((opt.delta_phi_sq - v) / opt.delta_phi_sq);
                    }
                }
            }
        }
    }
    outcome(
        worst_res <= 1e-9 && worst_con <= 1e-9 && worst_perturb <= 1e-10,
        format!(
            "implicit residual {worst_res:.1e}, constraint {worst_con:.1e}·N, \
             best perturbation gain {worst_perturb:.1e}"
        ),
    )
}

fn structural_claims() -> Outcome {
    let mut problems = Vec::new();

    // Entangled error propagation does not depend on M; separable scales 1/M.
    for &(r, amp, eta) in &[(0.0, 1.0, 1.0), (0.7, 3.0, 0.95), (1.4, 0.5, 0.9)] {
        let p = ProbeParams::new(r, amp).unwrap();
        let prop = |cfg: &NetworkConfig<f64>| {
            let (_, var) = joint_quadrature_stats(cfg, &p, &vec![0.0; cfg.m]).unwrap();
            error_propagation(var, mean_slope(cfg, &p)).unwrap()
        };
        let e1 = prop(&NetworkConfig::entangled(1, eta, 1.0).unwrap());
        let s1 = prop(&NetworkConfig::separable(1, eta, 1.0).unwrap());
        for m in 2..=10 {
            let e = prop(&NetworkConfig::entangled(m, eta, 1.0).unwrap());
            if rel(e, e1) > 1e-12 || rel(e, sensitivity_entangled(r, amp, eta).unwrap()) > 1e-12 {
                problems.push(format!("entangled M-dependence at M={m}"));
            }
            let s = prop(&NetworkConfig::separable(m, eta, 1.0).unwrap());
            if rel(s * m as f64, s1) > 1e-12 {
                problems.push(format!("separable not ∝ 1/M at M={m}"));
            }
            let (_, v_exact) = pipeline_stats(
                &NetworkConfig::entangled(m, eta, 1.0).unwrap(),
                &p,
                &vec![0.0; m],
            )
            .unwrap();
            let (_, v_model) = joint_quadrature_stats(
                &NetworkConfig::entangled(m, eta, 1.0).unwrap(),
                &p,
                &vec![0.0; m],
            )
            .unwrap();
            if rel(v_exact, v_model) > 1e-12 {
                problems.push(format!("variance model off at M={m}"));
            }
        }
    }

    let mut min_r = f64::INFINITY;
    for m in 2..=10 {
        for n in logspace(0.1, 200.0, 25) {
            for eta in [1.0, 0.98, 0.95, 0.9] {
                min_r = min_r.min(optimized_ratio(n, m, eta).unwrap());
            }
        }
    }
    if min_r < 1.0 {
        problems.push(format!("R dips to {min_r:.6}"));
    }

    for eta in [1.0, 0.98, 0.95] {
        let rs: Vec<f64> = (2..=10)
            .map(|m| optimized_ratio(20.0, m, eta).unwrap())
            .collect();
        if rs.windows(2).any(|w| w[1] < w[0]) {
            problems.push(format!("R decreases with M at η={eta}"));
        }
    }

    let detail = if problems.is_empty() {
        format!("min R on grid {min_r:.6}")
    } else {
        problems.join("; ")
    };
    outcome(problems.is_empty(), detail)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("1  ratio peak η=0.95, M=4", ratio_peak_lossy_095),
        ("2  ratio peak η=0.99, M=4", ratio_peak_lossy_099),
        ("3  squeezing dB", squeezing_consistency),
        ("4  SNL recovery, all configurations", snl_recovery),
        ("5  closed-form identities", closed_form_identities),
        ("6  numeric QFI vs closed form", numeric_qfi_vs_closed_form),
        ("7  ordering sweep and saturation", ordering_sweep),
        ("8  pipeline vs closed forms", pipeline_vs_formula),
        ("9  Monte Carlo oracle", monte_carlo),
        ("10 stationarity", stationarity),
        ("11 structural claims", structural_claims),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let out = check();
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        if !out.pass {
            failed += 1;
        }
        println!(
            "acceptance {name:<40} {verdict}  [{:.1}s] {}",
            start.elapsed().as_secs_f64(),
            out.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
