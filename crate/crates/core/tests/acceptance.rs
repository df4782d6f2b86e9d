//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curvature_verify::catalog::{catalog_names, codazzi_fields, resolve, Target, TargetKind};
use curvature_verify::chart::point_geometry;
use curvature_verify::config::SuiteConfig;
use curvature_verify::conformal::{eigenvalue_formula_residuals, lcf_reconstruction_residual, NON_LCF_FLOOR};
use curvature_verify::fd::FdSpec;
use curvature_verify::report::{CheckReport, SCALED_SCHOUTEN_NOTE};
use curvature_verify::suite::{
    laplacian_fd, random_ricci_diagonal, run_suite, sample_points, CheckId, CheckRecord, Verdict,
};
use curvature_verify::tensor::SymMatrix;
use curvature_verify::weitzenbock::{bochner_residual, okumura_gap, q2_spectral_at, q_p_at};

const SEED: u64 = 20240601;

type Criterion = (&'static str, fn() -> Finding);

struct Finding {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Finding {
    Finding {
        ok,
        detail: detail.into(),
    }
}

fn config(targets: &[&str], checks: &[CheckId], points: usize) -> SuiteConfig {
    let mut cfg = SuiteConfig::new(targets, checks).expect("catalog targets");
    cfg.sampling.points_per_target = points;
    cfg.sampling.seed = SEED;
    cfg
}

fn records(cfg: &SuiteConfig) -> Vec<CheckRecord> {
    run_suite(cfg).expect("suite runs").records
}

fn worst_abs<'a>(rs: impl Iterator<Item = &'a CheckRecord>) -> f64 {
    rs.filter_map(|r| r.value).fold(0.0, |w, v| w.max(v.abs()))
}

fn failures<'a>(rs: impl Iterator<Item = &'a CheckRecord>) -> Vec<String> {
    rs.filter(|r| r.verdict == Verdict::Fail)
        .map(|r| {
            format!(
                "{} {} #{} value {:?} {}",
                r.target, r.check, r.point_index, r.value, r.note
            )
        })
        .collect()
}

fn chart_targets() -> Vec<Target> {
    catalog_names()
        .into_iter()
        .map(|n| resolve(&n).unwrap())
        .filter(|t| matches!(t.kind, TargetKind::Chart(_)))
        .collect()
}

fn lcf_names() -> Vec<String> {
    chart_targets()
        .into_iter()
        .filter(|t| match &t.kind {
            TargetKind::Chart(c) => c.properties.conformally_flat && t.dim() >= 3,
            _ => false,
        })
        .map(|t| t.name)
        .collect()
}

fn names(ts: &[String]) -> Vec<&str> {
    ts.iter().map(String::as_str).collect()
}

fn round_sphere_pipeline() -> Finding {
    let start = Instant::now();
    let cfg = config(
        &["sphere:n=2", "sphere:n=3", "sphere:n=4"],
        &[CheckId::ConstantCurvature, CheckId::ScalarCurvature],
        100,
    );
    let rs = records(&cfg);
    let elapsed = start.elapsed();
    let complete = rs.len() == 3 * 2 * 100 && rs.iter().all(|r| r.verdict == Verdict::Pass);
    let sec_ric = worst_abs(rs.iter().filter(|r| r.check == CheckId::ConstantCurvature));
    let scalar = worst_abs(rs.iter().filter(|r| r.check == CheckId::ScalarCurvature));
    verdict(
        complete && sec_ric <= 1e-4 && scalar <= 1e-3 && elapsed < Duration::from_secs(10),
        format!(
            "sec/Ric error {sec_ric:.2e}, scalar error {scalar:.2e}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn operator_sectional_identity() -> Finding {
    let ts: Vec<String> = chart_targets().into_iter().map(|t| t.name).collect();
    let rs = records(&config(&names(&ts), &[CheckId::BridgingIdentities], 20));
    let fails = failures(rs.iter());
    let ok = fails.is_empty() && rs.iter().all(|r| r.verdict == Verdict::Pass);
    verdict(
        ok,
        format!(
            "{} charts x 20 points x 20 pairs, worst {:.2e} {}",
            ts.len(),
            worst_abs(rs.iter()),
            fails.join("; ")
        ),
    )
}

fn lcf_reconstruction() -> Finding {
    let lcf = lcf_names();
    let rs = records(&config(&names(&lcf), &[CheckId::LcfReconstruction], 30));
    let worst = worst_abs(rs.iter());
    let ok_lcf = rs.iter().all(|r| r.verdict == Verdict::Pass);

    let control = resolve("sphere_product:n=4").unwrap();
    let TargetKind::Chart(ct) = &control.kind else {
        unreachable!()
    };
    let cfg = config(&[control.name.as_str()], &[CheckId::LcfReconstruction], 30);
    let mut min_control = f64::INFINITY;
    for x in sample_points(&control, &cfg, &[]).unwrap() {
        let geom = point_geometry(&ct.chart, &x, &cfg.fd).unwrap();
        min_control = min_control.min(lcf_reconstruction_residual(&geom).unwrap());
    }
    verdict(
        ok_lcf && worst <= 1e-4 && min_control > NON_LCF_FLOOR,
        format!(
            "{} conformally flat charts worst {worst:.2e}; S2xS2 smallest residual {min_control:.3}",
            lcf.len()
        ),
    )
}

fn q_form_oracles() -> Finding {
    let mut worst = 0.0_f64;
    let mut count = 0;
    let mut errors = Vec::new();
    for t in chart_targets() {
        let TargetKind::Chart(ct) = &t.kind else { continue };
        if ct.properties.constant_curvature.is_none() {
            continue;
        }
        let cfg = config(&[t.name.as_str()], &[CheckId::QFormsAgree], 10);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        for x in sample_points(&t, &cfg, &[]).unwrap() {
            let geom = point_geometry(&ct.chart, &x, &cfg.fd).unwrap();
            for _ in 0..100 {
                let r = random_ricci_diagonal(&mut rng, &geom)
                    .and_then(|th| Ok(q_p_at(&th.to_tensor(), &geom)? - q2_spectral_at(&th, &geom)?));
                match r {
                    Ok(v) => worst = worst.max(v.abs()),
                    Err(e) => errors.push(format!("{}: {e}", t.name)),
                }
                count += 1;
            }
        }
    }
    verdict(
        errors.is_empty() && worst <= 1e-8 && count >= 1000,
        format!("{count} tensors, worst {worst:.2e} {}", errors.join("; ")),
    )
}

fn okumura() -> Finding {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut min_gap = f64::INFINITY;
    let mut worst_equality = 0.0_f64;
    for n in 3..=6 {
        for _ in 0..10_000 {
            let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = SymMatrix::symmetric_part(n, &a);
            let mean = s.trace() / n as f64;
            let t = SymMatrix::from_fn(n, |i, j| s.get(i, j) - if i == j { mean } else { 0.0 });
            min_gap = min_gap.min(okumura_gap(&t).unwrap());
        }
        let mut d = vec![1.0; n];
        d[n - 1] = -(n as f64 - 1.0);
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        d.iter_mut().for_each(|v| *v /= norm);
        worst_equality = worst_equality.max(okumura_gap(&SymMatrix::diag(&d)).unwrap().abs());
    }
    let elapsed = start.elapsed();
    verdict(
        min_gap >= -1e-12 && worst_equality <= 1e-9 && elapsed < Duration::from_secs(5),
        format!(
            "4 x 10^4 matrices, smallest gap {min_gap:.2e}, equality case {worst_equality:.2e}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn bochner() -> Finding {
    let fd = FdSpec::default();
    let mut worst = 0.0_f64;
    let mut fields = 0;
    let mut problems = Vec::new();
    for t in chart_targets() {
        let TargetKind::Chart(ct) = &t.kind else { continue };
        let cfg = config(&[t.name.as_str()], &[CheckId::Bochner], 50);
        let points = sample_points(&t, &cfg, &[]).unwrap();
        for f in codazzi_fields(ct, &fd).unwrap() {
            fields += 1;
            for x in &points {
                match bochner_residual(&f, &ct.chart, x, &laplacian_fd(&f, &fd)) {
                    Ok(b) => {
                        worst = worst.max(b.residual.abs());
                        if b.residual.abs() > 1e-4 {
                            problems.push(format!("{} {} {:.2e}", t.name, f.name(), b.residual));
                        }
                    }
                    Err(e) => problems.push(format!("{} {}: {e}", t.name, f.name())),
                }
            }
        }
    }
    let clifford = ["clifford:n=2,k=1", "clifford:n=3,k=1", "clifford:n=4,k=2"];
    let rs = records(&config(&clifford, &[CheckId::SimonsIdentity], 50));
    let simons = worst_abs(rs.iter());
    problems.extend(failures(rs.iter()));
    let ok = problems.is_empty() && rs.iter().all(|r| r.verdict == Verdict::Pass);
    problems.truncate(5);
    verdict(
        ok && worst <= 1e-4 && simons <= 1e-4,
        format!(
            "{fields} chart fields worst {worst:.2e}; Clifford S worst {simons:.2e} {}",
            problems.join("; ")
        ),
    )
}

fn rigidity_data() -> Finding {
    let clifford = ["clifford:n=2,k=1", "clifford:n=3,k=1", "clifford:n=4,k=2"];
    let checks = [
        CheckId::MeanCurvature,
        CheckId::SffNorm,
        CheckId::CodazziOfS,
        CheckId::DivergenceOfS,
        CheckId::SimonsIdentity,
    ];
    let rs = records(&config(&clifford, &checks, 30));
    let mut cfg = config(&["equator:n=2", "equator:n=3"], &[CheckId::SffNorm], 30);
    cfg.checks[0].tolerance = 1e-8;
    let eq = records(&cfg);
    let fails = failures(rs.iter().chain(&eq));
    let all_pass = rs.iter().chain(&eq).all(|r| r.verdict == Verdict::Pass);
    let by = |id: CheckId| worst_abs(rs.iter().filter(|r| r.check == id));
    verdict(
        fails.is_empty() && all_pass,
        format!(
            "|H| {:.1e}, ||S||^2-n {:.1e}, Codazzi {:.1e}, div {:.1e}, Simons {:.1e}; equators ||S||^2 {:.1e} {}",
            by(CheckId::MeanCurvature),
            by(CheckId::SffNorm),
            by(CheckId::CodazziOfS),
            by(CheckId::DivergenceOfS),
            by(CheckId::SimonsIdentity),
            worst_abs(eq.iter()),
            fails.join("; ")
        ),
    )
}

fn kato_and_schouten_chain() -> Finding {
    let ts: Vec<String> = chart_targets().into_iter().map(|t| t.name).collect();
    let kato = records(&config(&names(&ts), &[CheckId::Kato], 30));
    let min_kato = kato.iter().filter_map(|r| r.value).fold(f64::INFINITY, f64::min);
    let kato_ok = kato.iter().all(|r| r.verdict == Verdict::Pass);

    let lcf = lcf_names();
    let chain = records(&config(&names(&lcf), &[CheckId::SchoutenOperatorChain], 30));
    let chain_ok = chain.iter().all(|r| r.verdict != Verdict::Fail);
    let applied = chain.iter().filter(|r| r.verdict == Verdict::Pass).count();
    let fails = failures(kato.iter().chain(&chain));
    verdict(
        kato_ok && chain_ok && applied > 0,
        format!(
            "smallest Kato gap {min_kato:.2e} over {} points; chain applied at {applied}/{} LCF points {}",
            kato.len(),
            chain.len(),
            fails.join("; ")
        ),
    )
}

fn eigenvalue_formulas() -> Finding {
    let lcf = lcf_names();
    let rs = records(&config(&names(&lcf), &[CheckId::EigenvalueFormulas], 30));
    let ok = rs.iter().all(|r| r.verdict == Verdict::Pass);
    // the scaled form is off on S^4 (sec 1 against (n-2)^-1 (1/2 + 1/2) = 1/2)
    let s4 = resolve("sphere:n=4").unwrap();
    let TargetKind::Chart(ct) = &s4.kind else {
        unreachable!()
    };
    let geom = point_geometry(&ct.chart, &ct.chart.domain().center(), &FdSpec::default()).unwrap();
    let r = eigenvalue_formula_residuals(&geom).unwrap();
    let report = CheckReport::run(&config(&["sphere:n=4"], &[CheckId::EigenvalueFormulas], 1)).unwrap();
    let flagged =
        report.meta.notes.contains(&SCALED_SCHOUTEN_NOTE) && report.checks.iter().all(|c| c.note.contains("scaled"));
    verdict(
        ok && flagged && (r.scaled_schouten_residual - 0.5).abs() < 1e-6,
        format!(
            "worst {:.2e} over {} points; scaled form residual on S4 {:.3} (flagged)",
            worst_abs(rs.iter()),
            rs.len(),
            r.scaled_schouten_residual
        ),
    )
}

fn convergence_order() -> Finding {
    let rs = records(&config(
        &["sphere:n=2", "sphere:n=3", "sphere:n=4"],
        &[CheckId::ConvergenceOrder],
        30,
    ));
    let ratios: Vec<f64> = rs.iter().filter_map(|r| r.value).map(|v| v + 4.0).collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    verdict(
        ratios.len() == rs.len() && lo >= 3.5 && hi <= 4.5,
        format!("error ratio in [{lo:.3}, {hi:.3}] over {} points", ratios.len()),
    )
}

fn determinism() -> Finding {
    let ts = ["sphere:n=3", "conformal:n=4", "clifford:n=3,k=1", "hyperbolic:n=2"];
    let cfg = config(&ts, CheckId::ALL, 4);
    let a = CheckReport::run(&cfg).unwrap().to_json();
    let b = CheckReport::run(&cfg).unwrap().to_json();
    verdict(a == b, format!("{} bytes, identical: {}", a.len(), a == b))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("round-sphere pipeline", round_sphere_pipeline),
        (
            "operator-sectional and Ricci-sum identities",
            operator_sectional_identity,
        ),
        ("conformally flat reconstruction", lcf_reconstruction),
        ("Q_2 general vs spectral form", q_form_oracles),
        ("Okumura inequality", okumura),
        ("Bochner-Weitzenbock residual", bochner),
        ("Clifford torus and equator rigidity data", rigidity_data),
        ("Kato gap and Schouten-to-operator chain", kato_and_schouten_chain),
        (
            "sectional curvature from Ricci and Schouten eigenvalues",
            eigenvalue_formulas,
        ),
        ("convergence order", convergence_order),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        if !v.ok {
            failed += 1;
        }
        println!(
            "[{}] {:>2}. {name}: {}",
            if v.ok { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
