//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Each criterion carries two outcomes. `claim` is the statement as published;
//! `verified` is what this suite asserts after checking against an
//! independent oracle. The two differ only where exact arithmetic contradicts
//! the published statement, in which case the line reads FAIL and says why.
//! The process exits nonzero if any verified check fails.

use std::f64::consts::PI;
use std::time::Instant;

use symq_core::gaussian::{
    classify_localization, dominant_peaks, find_peaks, max_log_deviation, moment_summary, t_matrix,
    w_fine_structure, GaussianModel,
};
use symq_core::moments::{
    approx_moment_gaussian, asymptotic_deviation, build_model, closed_form_tables, dense_moment, exact_moment,
    moment_report, spherical_check, MomentKind, ModelChoice,
};
use symq_core::projection::{project_analytic, project_bruteforce, r_mnk_exact, MeasLattice};
use symq_core::states::{build_state, StateSpec};

const NMAX: usize = 12;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    claim: bool,
    verified: bool,
    detail: String,
}

impl Outcome {
    fn plain(ok: bool, detail: String) -> Self {
        Self { claim: ok, verified: ok, detail }
    }
}

fn rel_err(got: f64, want: f64, floor: f64) -> f64 {
    (got - want).abs() / want.abs().max(floor)
}

fn half_ones(n: usize) -> String {
    "1".repeat(n / 2) + &"0".repeat(n - n / 2)
}

fn oracle_families(n: usize) -> Vec<StateSpec> {
    vec![
        StateSpec::fiducial(n),
        StateSpec::basis(&half_ones(n)).unwrap(),
        StateSpec::ghz(n),
        StateSpec::shifted_ghz(&half_ones(n)).unwrap(),
        StateSpec::w(n),
        StateSpec::biseparable(-1.0, n).unwrap(),
        StateSpec::biseparable(0.5, n).unwrap(),
        StateSpec::graph_pairs(n).unwrap(),
        StateSpec::uniform_mixed(n),
    ]
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for n in [4, 6, 8] {
        let floor = 1e-14 * 2f64.powi(n as i32);
        for spec in oracle_families(n) {
            let fast = project_analytic(&spec).unwrap();
            let slow = project_bruteforce(&build_state(&spec, NMAX).unwrap(), NMAX, "oracle").unwrap();
            for ((_, a), (_, b)) in fast.iter().zip(slow.iter()) {
                worst = worst.max(rel_err(a, b, floor));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::plain(
        worst <= 1e-9 && secs <= 300.0,
        format!("max pointwise relative error {worst:.2e} over 27 cases in {secs:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for n in [4, 6, 8] {
        for spec in oracle_families(n) {
            let total = project_analytic(&spec).unwrap().total();
            worst = worst.max(rel_err(total, 2f64.powi(n as i32), 0.0));
        }
    }
    let mut exact = true;
    for n in 1..=20usize {
        let sum: u128 = MeasLattice::new(n).triples().iter().map(|t| r_mnk_exact(n, *t).unwrap()).sum();
        exact &= sum == 4u128.pow(n as u32);
    }
    Outcome::plain(
        worst <= 1e-9 && exact,
        format!("sum Q relative error {worst:.2e}; sum R = 4^N exactly for N <= 20: {exact}"),
    )
}

fn criterion_3() -> Outcome {
    let z = [0.0, 0.0, 1.0];
    let x = [1.0, 0.0, 0.0];
    let raw = MomentKind::Raw;
    let s33 = 3f64.powf(-1.5);
    let mut claim_err = 0.0f64;
    let mut verified_err = 0.0f64;
    let mut notes = Vec::new();
    let mut check = |label: &str, n: usize, got: f64, claimed: f64, corrected: f64| {
        let c = rel_err(got, claimed, 1.0);
        let v = rel_err(got, corrected, 1.0);
        if c > 1e-9 && !notes.iter().any(|s: &String| s.starts_with(label)) {
            notes.push(format!("{label} N={n}: {got:.6} vs {claimed:.6}"));
        }
        claim_err = claim_err.max(c);
        verified_err = verified_err.max(v);
    };
    for n in [4usize, 6, 8, 10] {
        let nf = n as f64;
        let w = build_state(&StateSpec::w(n), NMAX).unwrap();
        let ghz = build_state(&StateSpec::ghz(n), NMAX).unwrap();
        let wx = 15.0 * nf * nf - 30.0 * nf + 16.0;
        check("W x4", n, dense_moment(&w, &x, 4, raw).unwrap(), wx, wx);
        // Below N = 5 the two GHZ branches are linked by S_x^4 itself: +4! at N = 4.
        let gx = 3.0 * nf * nf - 2.0 * nf;
        let gx_true = gx + if n == 4 { 24.0 } else { 0.0 };
        check("GHZ x4", n, dense_moment(&ghz, &x, 4, raw).unwrap(), gx, gx_true);
        check("GHZ z4", n, dense_moment(&ghz, &z, 4, raw).unwrap(), nf.powi(4), nf.powi(4));
        let mu: String = (0..n).map(|j| if j % 3 == 0 { '1' } else { '0' }).collect();
        for h in 0..=n {
            let nu = "1".repeat(h) + &"0".repeat(n - h);
            let c = 2.0 * h as f64 / nf - 1.0;
            let dcs = build_state(&StateSpec::dcs(&mu, &nu).unwrap(), NMAX).unwrap();
            // As printed the bracket reads N²c; the N³c³ leading term needs N²c².
            let claimed3 = -s33 * nf * c * (nf * nf * c + 6.0 * nf - 4.0);
            let fixed3 = -s33 * nf * c * (nf * nf * c * c + 6.0 * nf - 4.0);
            check("shifted DCS z3", n, dense_moment(&dcs, &z, 3, raw).unwrap(), claimed3, fixed3);
            let z4 = nf * nf / 9.0 * (nf * nf * c.powi(4) + (12.0 * nf - 16.0) * c * c + 12.0);
            check("shifted DCS z4", n, dense_moment(&dcs, &z, 4, raw).unwrap(), z4, z4);
            let basis = build_state(&StateSpec::basis(&nu).unwrap(), NMAX).unwrap();
            let g = 1.0 - 2.0 * h as f64 / nf;
            check("basis z4", n, dense_moment(&basis, &z, 4, raw).unwrap(), g.powi(4) * nf.powi(4), g.powi(4) * nf.powi(4));
        }
    }
    let claim = claim_err <= 1e-9;
    let verified = verified_err <= 1e-9;
    let detail = if claim {
        format!("max relative error {claim_err:.2e}")
    } else {
        format!(
            "published forms off by up to {claim_err:.2e} ({}); dense values match GHZ x4 + 24 at N = 4 and the \
             shifted-DCS third moment with N^2 c^2 to {verified_err:.2e}",
            notes.join("; ")
        )
    };
    Outcome { claim, verified, detail }
}

fn criterion_4() -> Outcome {
    let dirs = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
        [1.0, -2.0, 0.5],
        [1.0, 1.0, 0.0],
    ];
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in [8usize, 30] {
        let mut specs = oracle_families(n);
        specs.push(StateSpec::dicke_uniform(n));
        let mu: String = (0..n).map(|j| if j % 3 == 0 { '1' } else { '0' }).collect();
        specs.push(StateSpec::dcs(&mu, &half_ones(n)).unwrap());
        for spec in specs {
            let model = build_model(&spec, ModelChoice::Single, NMAX).unwrap();
            for d in &dirs {
                for r in 1..=2 {
                    for kind in [MomentKind::Raw, MomentKind::Central] {
                        let exact = exact_moment(&spec, d, r, kind, NMAX).unwrap();
                        let approx = approx_moment_gaussian(&model, d, r, kind).unwrap();
                        worst = worst.max(rel_err(approx, exact, 1e-3 * (n as f64).powi(r as i32)));
                        cases += 1;
                    }
                }
            }
        }
    }
    Outcome::plain(worst <= 1e-9, format!("max relative error {worst:.2e} over {cases} moments"))
}

fn criterion_5() -> Outcome {
    let mut worst_formula = 0.0f64;
    for row in closed_form_tables(100, NMAX).unwrap() {
        worst_formula = worst_formula.max(rel_err(row.report.approx, row.formula_approx, 0.0));
    }
    let mut worst_dev = 0.0f64;
    for h in [0usize, 25, 75, 100] {
        let g = h as f64 / 100.0;
        let c = 1.0 - 2.0 * g;
        let kappa = "1".repeat(h) + &"0".repeat(100 - h);
        let spec = StateSpec::basis(&kappa).unwrap();
        let rep = moment_report(&spec, &[0.0, 0.0, 1.0], 4, MomentKind::Raw, ModelChoice::Single, NMAX).unwrap();
        worst_dev = worst_dev.max(rel_err(rep.deviation * 1e4, 16.0 / (c * c), 0.0));
        let big = "1".repeat(100 * h) + &"0".repeat(100 * (100 - h));
        let spec = StateSpec::basis(&big).unwrap();
        let xdev = asymptotic_deviation(&spec, &[1.0, 1.0, 0.0], 4, MomentKind::Central, 1, 10_000, NMAX).unwrap();
        worst_dev = worst_dev.max(rel_err(xdev, 18.0 + 4.0 * 3f64.sqrt() * c, 0.0));
    }
    Outcome::plain(
        worst_formula <= 1e-6 && worst_dev <= 1e-6,
        format!("approx vs closed forms at N=100: {worst_formula:.2e}; normalized deviations: {worst_dev:.2e}"),
    )
}

fn criterion_6() -> Outcome {
    let model = t_matrix(&moment_summary(&StateSpec::fiducial(12), NMAX).unwrap()).unwrap();
    let e = model.eigen();
    let want = [2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
    let val_err = (0..3).map(|i| (e.values[i] - want[i]).abs()).fold(0.0, f64::max);
    let axis = 1.0 / 3f64.sqrt();
    let axis_err = e.vectors[0].iter().map(|v| (v - axis).abs()).fold(0.0, f64::max);
    Outcome::plain(
        val_err <= 1e-12 && axis_err <= 1e-12,
        format!("eigenvalue error {val_err:.1e}, principal axis error {axis_err:.1e}"),
    )
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

fn criterion_7() -> Outcome {
    let n = 18;
    let step = 1.0 / n as f64;
    let w_peaks = dominant_peaks(&find_peaks(&project_analytic(&StateSpec::w(n)).unwrap()), 0.5);
    let fine = w_fine_structure(n).unwrap();
    let w_dist = fine
        .maxima
        .iter()
        .map(|m| w_peaks.iter().map(|p| distance(&p.position, m)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let ghz_peaks = dominant_peaks(&find_peaks(&project_analytic(&StateSpec::ghz(n)).unwrap()), 0.5);
    let mut zs: Vec<f64> = ghz_peaks.iter().map(|p| p.position[2]).collect();
    zs.sort_by(f64::total_cmp);
    let s3 = 3f64.sqrt();
    let targets = [(1.0 - 1.0 / s3) / 2.0, (1.0 + 1.0 / s3) / 2.0];
    let ghz_dist = if zs.len() == 2 { (zs[0] - targets[0]).abs().max((zs[1] - targets[1]).abs()) } else { f64::INFINITY };
    Outcome::plain(
        w_peaks.len() == 2 && w_dist <= step && ghz_peaks.len() == 2 && ghz_dist <= step,
        format!(
            "W: {} peaks, farthest {w_dist:.3} from x_+-; GHZ: {} peaks, z offset {ghz_dist:.3}; step {step:.3}",
            w_peaks.len(),
            ghz_peaks.len()
        ),
    )
}

fn criterion_8() -> Outcome {
    let ns = [8usize, 16, 32, 64, 128];
    let eps = 0.1;
    let tol = 1e-12;
    let mut verified = true;
    let mut notes = Vec::new();
    let products = [
        StateSpec::fiducial(8),
        StateSpec::dcs("10010110", "11100100").unwrap(),
        StateSpec::basis("11000000").unwrap(),
        StateSpec::basis("00000000").unwrap(),
        StateSpec::uniform_mixed(8),
    ];
    for spec in &products {
        let rep = classify_localization(spec, &ns, eps, NMAX).unwrap();
        let bounded = rep.trace_t.iter().all(|t| *t >= 4.0 / 3.0 - tol && *t <= 1.5 + tol);
        if !(rep.localized && bounded) {
            verified = false;
            notes.push(format!("{}: localized {} TrT {:?}", rep.state, rep.localized, rep.trace_t));
        }
    }
    let graph = classify_localization(&StateSpec::graph_pairs(8).unwrap(), &ns, eps, NMAX).unwrap();
    verified &= graph.localized;
    let graph_tr = graph.trace_t.iter().cloned().fold(0.0, f64::max);
    let graph_bounded = graph.trace_t.iter().all(|t| *t >= 4.0 / 3.0 - tol && *t <= 1.5 + tol);

    let ghz = classify_localization(&StateSpec::ghz(8), &ns, eps, NMAX).unwrap();
    let along_z = ghz.axes.last().unwrap()[0][2].abs() >= 1.0 - tol;
    let ghz_ok = ghz.delocalized == [true, false, false] && along_z;
    if !ghz_ok {
        notes.push(format!("GHZ exponents {:?}", ghz.exponents));
    }
    verified &= ghz_ok;

    let shifted = StateSpec::shifted_ghz("11110000").unwrap();
    let sg = classify_localization(&shifted, &ns, eps, NMAX).unwrap();
    let want = [[0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 1.0 / 3.0]];
    let mut sg_err = 0.0f64;
    for &n in &ns {
        let t = t_matrix(&moment_summary(&shifted.with_n(n).unwrap(), NMAX).unwrap()).unwrap().dispersion();
        for i in 0..3 {
            for j in 0..3 {
                sg_err = sg_err.max((t[i][j] - want[i][j]).abs());
            }
        }
    }
    verified &= sg.localized && sg_err <= tol;

    let dicke = classify_localization(&StateSpec::dicke_uniform(8), &ns, eps, NMAX).unwrap();
    verified &= !dicke.localized;

    let claim = verified && graph_bounded;
    let mut detail = format!(
        "products localized with TrT in [4/3, 3/2]; graph_pairs localized; GHZ exponents {:.3?} (z axis {along_z}); \
         shifted GHZ T error {sg_err:.1e}; Dicke exponents {:.3?}",
        ghz.exponents, dicke.exponents
    );
    if !graph_bounded {
        detail.push_str(&format!(
            "; graph_pairs has TrT = {graph_tr:.6} = 5/3, outside [4/3, 3/2], which holds only for fully separable states"
        ));
    }
    if !notes.is_empty() {
        detail.push_str(&format!("; {}", notes.join("; ")));
    }
    Outcome { claim, verified, detail }
}

fn criterion_9() -> Outcome {
    let mut worst = 0.0f64;
    for n in [8usize, 64] {
        let nf = n as f64;
        for (spec, r, s2) in [
            (StateSpec::biseparable(-1.0, n).unwrap(), 3.0, 0.0),
            (StateSpec::uniform_mixed(n), 2.0, nf),
        ] {
            let check = spherical_check(&t_matrix(&moment_summary(&spec, NMAX).unwrap()).unwrap()).unwrap();
            worst = worst.max((check.r - r).abs());
            worst = worst.max((check.second_moment - s2).abs() / nf);
            for d in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
                let exact = exact_moment(&spec, &d, 2, MomentKind::Raw, NMAX).unwrap();
                worst = worst.max((exact - s2).abs() / nf);
            }
        }
    }
    Outcome::plain(worst <= 1e-9, format!("max error {worst:.2e} in r and <S_j^2>/N"))
}

/// ln Q̃ of the coherent-state Gaussian written directly in (m, n, k):
/// normalization 2^{N+1}/((πN)^{3/2} √(2/27)) times
/// exp(−N⁻¹(5/2(m²+n²+k²) − km − nk − mn − (m+n+k)N) − N/2).
fn ln_q_coherent_gaussian(n: usize, m: f64, nn: f64, k: f64) -> f64 {
    let nf = n as f64;
    let ln_pre = (nf + 1.0) * 2f64.ln() - 1.5 * (PI * nf).ln() - 0.5 * (2.0f64 / 27.0).ln();
    let q = (2.5 * (m * m + nn * nn + k * k) - k * m - nn * k - m * nn - (m + nn + k) * nf) / nf;
    ln_pre - q - nf / 2.0
}

fn criterion_10() -> Outcome {
    let mut errors = Vec::new();
    let mut consistent = true;
    for n in [50usize, 100, 200] {
        let spec = StateSpec::fiducial(n);
        let pq = project_analytic(&spec).unwrap();
        let mut worst = 0.0f64;
        for (t, ln_q) in pq.iter_ln() {
            let (m, nn, k) = (t.m as f64, t.n as f64, t.k as f64);
            let nf = n as f64;
            let q = (2.5 * (m * m + nn * nn + k * k) - k * m - nn * k - m * nn - (m + nn + k) * nf) / nf;
            // N Δx T⁻¹ Δx = q + N/2; two widths of the covariance T/(2N).
            if 2.0 * (q + nf / 2.0) > 4.0 * (1.0 + 1e-12) {
                continue;
            }
            worst = worst.max((ln_q - ln_q_coherent_gaussian(n, m, nn, k)).abs());
        }
        let model: GaussianModel = t_matrix(&moment_summary(&spec, NMAX).unwrap()).unwrap();
        let (via_model, _) = max_log_deviation(&pq, &model, 2.0).unwrap();
        consistent &= (via_model - worst).abs() <= 1e-9;
        errors.push(worst);
    }
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    Outcome::plain(
        decreasing && consistent,
        format!("max |log Q - Gaussian| for N = 50, 100, 200: {errors:.4?}; library model agrees: {consistent}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("oracle equivalence", criterion_1),
        ("normalization", criterion_2),
        ("closed-form moments vs dense oracle", criterion_3),
        ("Gaussian first and second moments exact", criterion_4),
        ("Gaussian fourth moments and normalized deviations", criterion_5),
        ("coherent-state dispersion geometry", criterion_6),
        ("W and GHZ fine structure at N = 18", criterion_7),
        ("localization verdicts", criterion_8),
        ("spherical law", criterion_9),
        ("asymptotic shape of the fiducial projection", criterion_10),
    ];
    let mut all_verified = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let out = run();
        let status = if out.claim { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {status}: {name}: {}", i + 1, out.detail);
        if !out.verified {
            println!("criterion {:>2} verified checks failed", i + 1);
        }
        all_verified &= out.verified;
    }
    if !all_verified {
        std::process::exit(1);
    }
}
