//! One function per subcommand; each returns its table and any flags raised.

use rayon::prelude::*;

use gyronet::mc::{estimate_sensitivity_mc, McRun};
use gyronet::optimizer::{
    find_ratio_peak, optimize, optimize_qcrb, solve_entangled, solve_separable,
};
use gyronet::sensitivity::{snl, squeezing_db, to_db};
use gyronet::{NetworkConfig, ProbeParams, Seeding, Topology};

use crate::output::{Cell, Table};
use crate::spec::{CommandKind, RunSpec};

/// Z-score beyond which a Monte Carlo point fails.
const Z_LIMIT: f64 = 4.0;

/// Why a row was flagged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Flag {
    /// A verification (ordering, z-score) did not hold.
    Verification,
    /// A solver failed or returned a boundary optimum.
    Numerical,
}

pub struct Outcome {
    pub table: Table,
    pub flags: Vec<Flag>,
}

fn status(flag: Option<(Flag, String)>, flags: &mut Vec<Flag>) -> Cell {
    match flag {
        None => Cell::from("ok"),
        Some((f, why)) => {
            flags.push(f);
            Cell::from(why)
        }
    }
}

fn topo_name(t: Topology) -> &'static str {
    match t {
        Topology::Entangled => "entangled",
        Topology::Separable => "separable",
    }
}

fn seed_name(s: Seeding) -> &'static str {
    match s {
        Seeding::Single => "single",
        Seeding::Double => "double",
    }
}

/// Grid in declaration order: topology, then M, then eta, then N.
fn grid(spec: &RunSpec) -> Vec<(Topology, usize, f64, f64)> {
    let mut pts = Vec::new();
    for &t in &spec.topology {
        for &m in &spec.m {
            for &eta in &spec.eta {
                for &n in &spec.n {
                    pts.push((t.into(), m, eta, n));
                }
            }
        }
    }
    pts
}

pub fn run(spec: &RunSpec) -> Outcome {
    match spec.command {
        CommandKind::Sweep => sweep(spec, false),
        CommandKind::Optimize => sweep(spec, true),
        CommandKind::Qcrb => qcrb(spec),
        CommandKind::McVerify => mc_verify(spec),
        CommandKind::RatioPeak => ratio_peak(spec),
        CommandKind::Report => report(spec),
    }
}

fn sweep(spec: &RunSpec, detailed: bool) -> Outcome {
    let mut columns = vec![
        "M",
        "N",
        "eta",
        "topology",
        "seeding",
        "r_opt",
        "amp_opt",
        "delta_phi_sq",
        "snl",
        "enhancement_db",
    ];
    if detailed {
        columns.extend([
            "squeezing_db",
            "implicit_residual",
            "constraint_residual",
            "boundary",
        ]);
    }
    columns.push("status");
    let seeding: Seeding = spec.seeding.into();
    let results: Vec<_> = grid(spec)
        .into_par_iter()
        .map(|(t, m, eta, n)| {
            let res = NetworkConfig::new(m, eta, n, t, seeding).and_then(|cfg| optimize(&cfg));
            ((t, m, eta, n), res)
        })
        .collect();
    let mut table = Table::new(columns);
    let mut flags = Vec::new();
    for ((t, m, eta, n), res) in results {
        let base: Vec<Cell> = vec![
            m.into(),
            n.into(),
            eta.into(),
            topo_name(t).into(),
            seed_name(seeding).into(),
        ];
        let snl_v = snl(m, n).unwrap_or(f64::NAN);
        let mut row = base;
        match res {
            Ok(opt) => {
                row.extend([
                    opt.r_opt.into(),
                    opt.amp_opt.into(),
                    opt.delta_phi_sq.into(),
                    snl_v.into(),
                    to_db(snl_v / opt.delta_phi_sq).unwrap_or(f64::NAN).into(),
                ]);
                if detailed {
                    row.extend([
                        squeezing_db(opt.r_opt).into(),
                        opt.implicit_residual.into(),
                        opt.constraint_residual.into(),
                        opt.boundary.into(),
                    ]);
                }
                let flag = opt
                    .boundary
                    .then(|| (Flag::Numerical, "boundary optimum".to_string()));
                row.push(status(flag, &mut flags));
            }
            Err(e) => {
                let blanks = if detailed { 9 } else { 5 };
                row.extend((0..blanks).map(|_| Cell::from("")));
                row.push(status(
                    Some((Flag::Numerical, format!("error: {e}"))),
                    &mut flags,
                ));
            }
        }
        table.push(row);
    }
    Outcome { table, flags }
}

fn qcrb(spec: &RunSpec) -> Outcome {
    let columns = vec![
        "M",
        "N",
        "eta",
        "entangled_qcrb",
        "entangled",
        "separable_qcrb",
        "separable",
        "ordered",
        "validated",
        "status",
    ];
    let mut pts = Vec::new();
    for &m in &spec.m {
        for &eta in &spec.eta {
            for &n in &spec.n {
                pts.push((m, eta, n));
            }
        }
    }
    let results: Vec<_> = pts
        .into_par_iter()
        .map(|(m, eta, n)| {
            let res = (|| {
                let ecr = optimize_qcrb(&NetworkConfig::entangled(m, eta, n)?)?;
                let scr = optimize_qcrb(&NetworkConfig::separable(m, eta, n)?)?;
                let e = solve_entangled(n, m, eta)?;
                let s = solve_separable(n, m, eta)?;
                Ok::<_, gyronet::Error>((ecr, e, scr, s))
            })();
            ((m, eta, n), res)
        })
        .collect();
    let mut table = Table::new(columns);
    let mut flags = Vec::new();
    for ((m, eta, n), res) in results {
        let mut row: Vec<Cell> = vec![m.into(), n.into(), eta.into()];
        match res {
            Ok((ecr, e, scr, s)) => {
                let (a, b, c, d) = (
                    ecr.delta_phi_sq,
                    e.delta_phi_sq,
                    scr.delta_phi_sq,
                    s.delta_phi_sq,
                );
                let ordered = a <= b && b <= c && c <= d;
                row.extend([
                    a.into(),
                    b.into(),
                    c.into(),
                    d.into(),
                    ordered.into(),
                    (m == 2).into(),
                ]);
                let flag =
                    (!ordered).then(|| (Flag::Verification, "ordering violated".to_string()));
                row.push(status(flag, &mut flags));
            }
            Err(err) => {
                row.extend((0..6).map(|_| Cell::from("")));
                row.push(status(
                    Some((Flag::Numerical, format!("error: {err}"))),
                    &mut flags,
                ));
            }
        }
        table.push(row);
    }
    Outcome { table, flags }
}

fn mc_verify(spec: &RunSpec) -> Outcome {
    let columns = vec![
        "topology",
        "M",
        "r",
        "eta",
        "amp",
        "samples",
        "seed",
        "delta_phi_sq_hat",
        "std_error",
        "analytic",
        "z_score",
        "pass",
        "status",
    ];
    let seeding: Seeding = spec.seeding.into();
    let mut pts = Vec::new();
    for &t in &spec.topology {
        for &m in &spec.m {
            for &r in &spec.r {
                for &eta in &spec.eta {
                    pts.push((Topology::from(t), m, r, eta));
                }
            }
        }
    }
    // Every point gets its own seed derived from the run seed and its index.
    let results: Vec<_> = pts
        .into_iter()
        .enumerate()
        .map(|(i, (t, m, r, eta))| {
            let seed = spec.seed.wrapping_add(i as u64);
            let res = NetworkConfig::new(m, eta, 1.0, t, seeding).and_then(|cfg| {
                let p = ProbeParams::new(r, spec.amp)?;
                estimate_sensitivity_mc(&cfg, &p, &McRun::new(spec.samples, seed))
            });
            ((t, m, r, eta, seed), res)
        })
        .collect();
    let mut table = Table::new(columns);
    let mut flags = Vec::new();
    for ((t, m, r, eta, seed), res) in results {
        let mut row: Vec<Cell> = vec![
            topo_name(t).into(),
            m.into(),
            r.into(),
            eta.into(),
            spec.amp.into(),
            spec.samples.into(),
            seed.into(),
        ];
        match res {
            Ok(est) => {
                let pass = est.z_score_vs_analytic.abs() < Z_LIMIT;
                row.extend([
                    est.delta_phi_sq_hat.into(),
                    est.std_error.into(),
                    est.analytic.into(),
                    est.z_score_vs_analytic.into(),
                    pass.into(),
                ]);
                let flag = (!pass).then(|| (Flag::Verification, format!("|z| ≥ {Z_LIMIT}")));
                row.push(status(flag, &mut flags));
            }
            Err(e) => {
                row.extend((0..5).map(|_| Cell::from("")));
                row.push(status(
                    Some((Flag::Numerical, format!("error: {e}"))),
                    &mut flags,
                ));
            }
        }
        table.push(row);
    }
    Outcome { table, flags }
}

fn ratio_peak(spec: &RunSpec) -> Outcome {
    let columns = vec![
        "eta",
        "M",
        "N_peak",
        "R_peak",
        "r_at_peak",
        "snl_gain",
        "enhancement_db",
        "boundary",
        "status",
    ];
    let mut pts = Vec::new();
    for &eta in &spec.eta {
        for &m in &spec.m {
            pts.push((eta, m));
        }
    }
    let [lo, hi] = spec.n_range;
    let results: Vec<_> = pts
        .into_par_iter()
        .map(|(eta, m)| ((eta, m), find_ratio_peak(m, eta, lo, hi)))
        .collect();
    let mut table = Table::new(columns);
    let mut flags = Vec::new();
    for ((eta, m), res) in results {
        let mut row: Vec<Cell> = vec![eta.into(), m.into()];
        match res {
            Ok(p) => {
                row.extend([
                    p.n_peak.into(),
                    p.r_peak.into(),
                    p.r_at_peak.into(),
                    p.snl_gain.into(),
                    p.enhancement_db_vs_snl.into(),
                    p.boundary.into(),
                ]);
                let flag = p
                    .boundary
                    .then(|| (Flag::Numerical, "peak on search boundary".to_string()));
                row.push(status(flag, &mut flags));
            }
            Err(e) => {
                row.extend((0..6).map(|_| Cell::from("")));
                row.push(status(
                    Some((Flag::Numerical, format!("error: {e}"))),
                    &mut flags,
                ));
            }
        }
        table.push(row);
    }
    Outcome { table, flags }
}

fn report(spec: &RunSpec) -> Outcome {
    let columns = vec![
        "M",
        "N",
        "eta",
        "seeding",
        "snl",
        "delta_phi_sq_e",
        "r_e",
        "amp_e",
        "delta_phi_sq_s",
        "r_s",
        "amp_s",
        "ratio_R",
        "enhancement_db_e",
        "enhancement_db_s",
        "squeezing_db_e",
        "status",
    ];
    let seeding: Seeding = spec.seeding.into();
    let mut pts = Vec::new();
    for &m in &spec.m {
        for &eta in &spec.eta {
            for &n in &spec.n {
                pts.push((m, eta, n));
            }
        }
    }
    let results: Vec<_> = pts
        .into_par_iter()
        .map(|(m, eta, n)| {
            let res = (|| {
                let e = optimize(&NetworkConfig::new(
                    m,
                    eta,
                    n,
                    Topology::Entangled,
                    seeding,
                )?)?;
                let s = optimize(&NetworkConfig::new(
                    m,
                    eta,
                    n,
                    Topology::Separable,
                    seeding,
                )?)?;
                Ok::<_, gyronet::Error>((e, s, snl(m, n)?))
            })();
            ((m, eta, n), res)
        })
        .collect();
    let mut table = Table::new(columns);
    let mut flags = Vec::new();
    for ((m, eta, n), res) in results {
        let mut row: Vec<Cell> = vec![m.into(), n.into(), eta.into(), seed_name(seeding).into()];
        match res {
            Ok((e, s, snl_v)) => {
                let db = |v: f64| to_db(snl_v / v).unwrap_or(f64::NAN);
                row.extend([
                    snl_v.into(),
                    e.delta_phi_sq.into(),
                    e.r_opt.into(),
                    e.amp_opt.into(),
                    s.delta_phi_sq.into(),
                    s.r_opt.into(),
                    s.amp_opt.into(),
                    (s.delta_phi_sq / e.delta_phi_sq).into(),
                    db(e.delta_phi_sq).into(),
                    db(s.delta_phi_sq).into(),
                    squeezing_db(e.r_opt).into(),
                ]);
                let flag = (e.boundary || s.boundary)
                    .then(|| (Flag::Numerical, "boundary optimum".to_string()));
                row.push(status(flag, &mut flags));
            }
            Err(err) => {
                row.extend((0..11).map(|_| Cell::from("")));
                row.push(status(
                    Some((Flag::Numerical, format!("error: {err}"))),
                    &mut flags,
                ));
            }
        }
        table.push(row);
    }
    Outcome { table, flags }
}
