//! Acceptance checks, one line per criterion. Run with
//!
//!     cargo test --release --test acceptance
use distance_jets::evaluator::{compare_with_fd, inequality_scan, norm_ak, JetSample};
use distance_jets::flow::{mcf_compare, run, CurveEnergy, CurveState, FlowConfig, McfConfig, StopReason};
use distance_jets::geometry::{default_step, jets, sample_params, verify_prop1, DistanceField, Immersion};
use distance_jets::recursion::{chain_power_p_k2, Factor, FactorKind, Link, PolyTensor, RecursionTable, Term};
use num_rational::Rational64;
use std::process::ExitCode;
use std::time::{Duration, Instant};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn main() -> ExitCode {
    let criteria: [(&str, Option<Duration>, fn() -> Check); 10] = [
        ("golden table k <= 4", Some(Duration::from_secs(1)), golden_table),
        ("structural invariants 3 <= k <= 7", Some(Duration::from_secs(10)), structural),
        ("oracle equivalence", Some(Duration::from_secs(300)), oracle),
        ("projection identities", None, identities),
        ("derived constants", None, constants),
        ("inequality scan", Some(Duration::from_secs(120)), scan),
        ("flow fixed point", None, fixed_point),
        ("ellipse regularization", None, ellipse),
        ("curve-shortening limit", Some(Duration::from_secs(600)), mcf_limit),
        ("gradient correctness", None, gradient),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, budget) {
            if elapsed > *limit {
                outcome = Err(format!("took {:.1} s, budget {} s", elapsed.as_secs_f64(), limit.as_secs()));
            }
        }
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name} [{:.2} s]: {detail}", i + 1, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn r(n: i64) -> Rational64 {
    Rational64::from_integer(n)
}

fn golden_table() -> Check {
    use Link::{Label as J, Tangent as I};
    let b = |l: [Link; 3]| Factor::new(FactorKind::BJet(0), l.to_vec());
    let table = RecursionTable::filled_to(4).map_err(err)?;

    let p32 = PolyTensor::from_terms(3, 2, [Term::new(r(1), vec![b([I(0), I(1), J(0)])])]);
    ensure(table.entry(3, 2).map_err(err)? == &p32, "p^{3,2} differs from B")?;
    ensure(table.entry(3, 3).map_err(err)?.is_zero(), "p^{3,3} is not zero")?;

    let mut t1 = Term::new(r(1), vec![b([I(0), I(0), J(0)]), b([I(0), I(1), J(1)])]);
    t1.connect((0, 1), (1, 0));
    let mut t2 = Term::new(r(1), vec![b([I(0), I(0), J(1)]), b([I(0), I(1), J(0)])]);
    t2.connect((0, 1), (1, 0));
    ensure(table.entry(4, 2).map_err(err)? == &PolyTensor::from_terms(4, 2, [t1, t2]), "p^{4,2} differs")?;

    let db = Factor::new(FactorKind::BJet(1), vec![I(0), I(1), I(2), J(0)]);
    let p43 = PolyTensor::from_terms(4, 3, [Term::new(r(1), vec![db])]);
    ensure(table.entry(4, 3).map_err(err)? == &p43, "p^{4,3} differs from DB")?;

    let p44 = PolyTensor::from_terms(
        4,
        4,
        [[0, 1, 2, 3], [0, 2, 1, 3], [0, 3, 1, 2]].iter().map(|p| {
            let mut t = Term::new(r(-1), vec![b([I(p[0]), I(p[1]), I(0)]), b([I(p[2]), I(p[3]), I(0)])]);
            t.connect((0, 2), (1, 2));
            t
        }),
    );
    ensure(table.entry(4, 4).map_err(err)? == &p44, "p^{4,4} differs")?;
    Ok("p32, p33, p42, p43, p44 equal after canonicalization".into())
}

fn structural() -> Check {
    let table = RecursionTable::filled_to(7).map_err(err)?;
    let mut terms = 0;
    for k in 3..=7 {
        ensure(table.entry(k, 0).map_err(err)?.is_zero(), format!("p^{{{k},0}} nonzero"))?;
        ensure(table.entry(k, 1).map_err(err)?.is_zero(), format!("p^{{{k},1}} nonzero"))?;
        for s in 0..=k {
            let p = table.entry(k, s).map_err(err)?;
            terms += p.terms.len();
            ensure(p.max_order() <= k - 3, format!("p^{{{k},{s}}} has derivative order {}", p.max_order()))?;
            for i in 0..p.labels().saturating_sub(1) {
                let mut perm: Vec<usize> = (0..p.labels()).collect();
                perm.swap(i, i + 1);
                ensure(&p.permute_labels(&perm) == p, format!("p^{{{k},{s}}} not symmetric in labels {i},{}", i + 1))?;
            }
        }
        let lead = table.leading_term(k).map_err(err)?;
        let t = &lead.terms[0];
        ensure(
            lead.terms.len() == 1 && t.coeff == r(1) && t.factors.len() == 1 && t.factors[0].kind == FactorKind::BJet((k - 3) as u8),
            format!("leading term of p^{{{k},{}}} is not D^{}B", k - 1, k - 3),
        )?;
        let chain = chain_power_p_k2(k).map_err(err)?;
        ensure(table.entry(k, 2).map_err(err)?.equal_labels() == chain, format!("chain formula fails at k={k}"))?;
    }
    Ok(format!("{terms} terms checked, chain formula exact"))
}

fn oracle() -> Check {
    let table = RecursionTable::filled_to(5).map_err(err)?;
    let mut worst = Vec::new();
    for (im, samples, ks, tol) in [
        (Immersion::ellipse(2.0, 1.0), 8, vec![3, 4, 5], 1e-4),
        (Immersion::torus3(2.0, 0.5), 4, vec![3, 4], 1e-3),
    ] {
        let rep = compare_with_fd(&im, &table, samples, &ks).map_err(err)?;
        ensure(rep.failures.is_empty(), format!("{im}: {:?}", rep.failures))?;
        let e = rep.max_error();
        ensure(e < tol, format!("{im}: max relative error {e:.3e} >= {tol:e}"))?;
        worst.push(format!("{im} {e:.2e} (tol {tol:e})"));
    }
    Ok(worst.join(", "))
}

fn identities() -> Check {
    let mut out = Vec::new();
    for im in [Immersion::ellipse(2.0, 1.0), Immersion::torus3(2.0, 0.5)] {
        let rep = verify_prop1(&im, 8).map_err(err)?;
        ensure(rep.failures.is_empty(), format!("{im}: {:?}", rep.failures))?;
        let e = rep.max_error();
        ensure(e < 1e-4, format!("{im}: identity error {e:.3e} >= 1e-4"))?;
        let h = rep.eta_hessian_normal_projection;
        ensure(h < 1e-6, format!("{im}: eta Hessian error {h:.3e} >= 1e-6"))?;
        out.push(format!("{im} {e:.2e}, eta Hessian {h:.2e}"));
    }
    Ok(out.join("; "))
}

fn constants() -> Check {
    let table = RecursionTable::filled_to(4).map_err(err)?;
    let im = Immersion::circle(1.0);
    let df = DistanceField::new(im.clone());
    let data = jets(&im, &[0.4], 1).map_err(err)?;
    let sample = JetSample::from(&data);
    let mut out = Vec::new();
    for (k, exact) in [(3, 3.0), (4, 33.0)] {
        let ev = norm_ak(&sample, &table, k).map_err(err)?;
        ensure((ev - exact).abs() < 1e-6, format!("k={k}: evaluator {ev}"))?;
        let fd = df.fd_ak(&data.point, k, default_step(&data)).map_err(err)?.norm_sq();
        ensure((fd - exact).abs() < 1e-3, format!("k={k}: FD {fd}"))?;
        out.push(format!("k={k} {ev:.9} / FD {fd:.6}"));
    }
    let mut worst: f64 = 0.0;
    for im in [
        Immersion::circle(1.5),
        Immersion::ellipse(2.0, 1.0),
        Immersion::torus3(2.0, 0.5),
        Immersion::clifford4(1.0),
    ] {
        let df = DistanceField::new(im.clone());
        for u in sample_params(&im, 3) {
            let data = jets(&im, &u, 0).map_err(err)?;
            let b2 = data.b_norm_sq();
            let fd = df.fd_ak(&data.point, 3, default_step(&data)).map_err(err)?.norm_sq();
            worst = worst.max((fd - 3.0 * b2).abs() / b2);
        }
    }
    ensure(worst < 1e-4, format!("|A3|^2 = 3|B|^2 off by {worst:.3e}"))?;
    out.push(format!("|A3|^2/3|B|^2 rel err {worst:.2e}"));
    Ok(out.join(", "))
}

fn scan() -> Check {
    let table = RecursionTable::filled_to(6).map_err(err)?;
    let mut min = f64::INFINITY;
    for k in 3..=6 {
        for (n, m) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            let rep = inequality_scan(&table, k, n, m, 10_000, 42).map_err(err)?;
            ensure(rep.min_ratio > 0.0, format!("k={k} (n,m)=({n},{m}): min ratio {:e}", rep.min_ratio))?;
            if (k, n, m) == (3, 1, 1) {
                ensure(
                    (rep.min_ratio - 3.0).abs() < 1e-9 && (rep.max_ratio - 3.0).abs() < 1e-9,
                    format!("curve ratio at k=3 spans [{}, {}]", rep.min_ratio, rep.max_ratio),
                )?;
            }
            min = min.min(rep.min_ratio);
        }
    }
    Ok(format!("16 scans of 1e4 samples, smallest ratio {min:.4e}, curve k=3 ratio 3 +- 1e-9"))
}

fn fixed_point() -> Check {
    let cfg = FlowConfig { k: 3, eps: 1.0, nodes: 128, ..FlowConfig::default() };
    let traj = run(&cfg.initial_state(&Immersion::circle(3.0)).map_err(err)?, &cfg).map_err(err)?;
    ensure(traj.stop == StopReason::Converged, format!("stopped with {:?}", traj.stop))?;
    let dev = (traj.last().radius_fit() - 3f64.sqrt()).abs();
    ensure(dev < 1e-3, format!("|R - sqrt 3| = {dev:.3e}"))?;
    let inc = traj.energy_increases();
    ensure(inc == 0, format!("{inc} energy increases"))?;
    Ok(format!("|R - sqrt 3| = {dev:.2e} after {} steps, 0 energy increases", traj.steps))
}

fn ellipse() -> Check {
    let cfg = FlowConfig { k: 3, eps: 1.0, nodes: 128, ..FlowConfig::default() };
    let traj = run(&cfg.initial_state(&Immersion::ellipse(2.0, 1.0)).map_err(err)?, &cfg).map_err(err)?;
    ensure(!traj.halted(), format!("halted with {:?}", traj.stop))?;
    let kmax = traj.energy_log.iter().map(|e| e.max_abs_curvature).fold(0.0, f64::max);
    ensure(kmax < 10.0, format!("max |kappa| = {kmax}"))?;
    let iso = traj.last().isoperimetric_deviation();
    ensure(iso < 1e-2, format!("isoperimetric deviation {iso:.3e}"))?;
    Ok(format!("{:?}, max |kappa| {kmax:.3}, isoperimetric deviation {iso:.2e}", traj.stop))
}

fn mcf_limit() -> Check {
    let rep = mcf_compare(&McfConfig::new(Immersion::circle(1.0), vec![1e-1, 1e-2, 1e-3])).map_err(err)?;
    for row in &rep.rows {
        ensure(row.stop != StopReason::SelfIntersection, format!("eps={} stopped with {:?}", row.eps, row.stop))?;
        ensure(
            row.deviation < 20.0 * row.eps + 1e-3,
            format!("eps={}: deviation {:.4e} exceeds 20 eps + 1e-3", row.eps, row.deviation),
        )?;
    }
    ensure(rep.monotone, "deviation not monotone in eps")?;
    let devs: Vec<String> = rep.rows.iter().map(|r| format!("{:.3e}", r.deviation)).collect();
    Ok(format!("deviations [{}] against sqrt(1 - 2t), monotone", devs.join(", ")))
}

fn gradient() -> Check {
    let e = CurveEnergy::new(3, 1.0).map_err(err)?;
    let base = CurveState::from_immersion(&Immersion::circle(1.0), 32).map_err(err)?;
    let (mut worst_rel, mut worst_sum): (f64, f64) = (0.0, 0.0);
    for seed in 0..10 {
        let s = base.perturbed(0.03, seed);
        let mut g = vec![[0.0; 2]; s.len()];
        e.gradient(&s.nodes, &mut g).map_err(err)?;
        let scale = g.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
        let h = 1e-6;
        for i in 0..s.len() {
            for axis in 0..2 {
                let (mut p, mut m) = (s.nodes.clone(), s.nodes.clone());
                p[i][axis] += h;
                m[i][axis] -= h;
                let fd = (e.energy(&p).map_err(err)?.energy - e.energy(&m).map_err(err)?.energy) / (2.0 * h);
                worst_rel = worst_rel.max((fd - g[i][axis]).abs() / scale);
            }
        }
        let sum = g.iter().fold([0.0, 0.0], |a, v| [a[0] + v[0], a[1] + v[1]]);
        worst_sum = worst_sum.max(sum[0].hypot(sum[1]));
    }
    ensure(worst_rel < 1e-6, format!("gradient vs FD relative error {worst_rel:.3e}"))?;
    ensure(worst_sum < 1e-10, format!("gradient sum {worst_sum:.3e}"))?;

    let cfg = FlowConfig { nodes: 64, snapshot_every: 1.0, max_steps: 40, ..FlowConfig::default() };
    let traj = run(&CurveState::from_immersion(&Immersion::circle(2.0), 64).map_err(err)?, &cfg).map_err(err)?;
    let spread = traj.snapshots.iter().map(|s| s.radial_spread()).fold(0.0, f64::max);
    ensure(traj.snapshots.len() > 10 && spread < 1e-8, format!("radial spread {spread:.3e}"))?;
    Ok(format!(
        "FD rel err {worst_rel:.2e}, gradient sum {worst_sum:.2e}, radial spread {spread:.2e} over {} steps",
        traj.snapshots.len() - 1
    ))
}
