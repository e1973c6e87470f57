//! Exact and Gaussian-approximated moments of collective observables S·n.
//!
//! Everything goes through the log of a moment generating function,
//! ln⟨exp(λ S·n)⟩, kept as a truncated series in λ. Raw moments are
//! `r!·[λ^r] exp(ln M)`, central moments drop the linear term first, and
//! cumulants are read off ln M directly, so no step subtracts large numbers.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{ghz_two_gaussian, moment_summary, t_matrix, GaussianModel, MultiGaussian};
use crate::phase_space::{type_signs, TYPES};
use crate::series::Series;
use crate::states::{build_state, pair_amplitudes, Family, Pattern, Prepared, StateSpec};

/// Raw ⟨(S·n)^r⟩ or central ⟨(S·n − ⟨S·n⟩)^r⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentKind {
    Raw,
    Central,
}

/// Highest order served by the exact paths.
pub const MAX_EXACT_ORDER: usize = 6;
/// Highest order of the Gaussian estimate, limited by the available P-symbols.
pub const MAX_APPROX_ORDER: usize = 4;

fn split_direction(dir: &[f64; 3]) -> Result<([f64; 3], f64)> {
    let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    if !norm.is_finite() || norm < 1e-12 {
        return Err(Error::InvalidArgument(format!("direction {dir:?} has no length")));
    }
    Ok(([dir[0] / norm, dir[1] / norm, dir[2] / norm], norm))
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// exp(λ σ·n) for a unit n as a 2×2 matrix of series:
/// [[c + n_z s, (n_x − i n_y) s], [(n_x + i n_y) s, c − n_z s]].
fn local_exponential(n: &[f64; 3], order: usize) -> [[Series; 2]; 2] {
    let (c, s) = (Series::cosh(order), Series::sinh(order));
    [
        [&c + &s.scale_re(n[2]), s.scale(Complex64::new(n[0], -n[1]))],
        [s.scale(Complex64::new(n[0], n[1])), &c - &s.scale_re(n[2])],
    ]
}

/// ln of cosh λ + a sinh λ.
fn ln_local(a: f64, order: usize) -> Series {
    (&Series::cosh(order) + &Series::sinh(order).scale_re(a)).ln()
}

/// ln⟨exp(λ S·n)⟩ for a computational-basis superposition (|κ₁⟩ + |κ₂⟩)/√2.
fn two_string_log_mgf(k1: &Pattern, k2: &Pattern, n: &[f64; 3], order: usize) -> Series {
    let m = local_exponential(n, order);
    let count = |a, b| k1.joint_count(k2, a, b) as u64;
    let (c00, c01, c10, c11) = (count(false, false), count(false, true), count(true, false), count(true, true));
    let diag1 = &m[0][0].powi(c00 + c01) * &m[1][1].powi(c10 + c11);
    let diag2 = &m[0][0].powi(c00 + c10) * &m[1][1].powi(c01 + c11);
    let cross = &(&m[0][0].powi(c00) * &m[1][1].powi(c11)) * &(&m[0][1].powi(c01) * &m[1][0].powi(c10));
    (&(&diag1 + &diag2).scale_re(0.5) + &cross.re()).re().ln()
}

/// Closed-form ln⟨exp(λ S·n)⟩ for a unit direction, or `None` when the
/// family needs the dense path.
fn closed_form_log_mgf(spec: &StateSpec, n: &[f64; 3], order: usize) -> Option<Series> {
    let nq = spec.n();
    let series = match spec.family() {
        Family::Dcs { mu, nu } => {
            let mut total = Series::zero(order);
            for (a, b) in TYPES {
                let count = mu.joint_count(nu, a, b);
                if count > 0 {
                    let r = dot(n, &type_signs(a, b)) / 3f64.sqrt();
                    total = &total + &ln_local(r, order).scale_re(count as f64);
                }
            }
            total
        }
        Family::Basis { kappa } => {
            let w = kappa.weight() as f64;
            &ln_local(n[2], order).scale_re(nq as f64 - w) + &ln_local(-n[2], order).scale_re(w)
        }
        Family::UniformMixed => ln_local(0.0, order).scale_re(nq as f64),
        Family::Ghz => two_string_log_mgf(&Pattern::zeros(nq), &Pattern::ones(nq), n, order),
        Family::ShiftedGhz { nu } => {
            let flipped = nu.xor(&Pattern::ones(nq));
            two_string_log_mgf(nu, &flipped, n, order)
        }
        Family::SuperpositionBasis { kappa1, kappa2 } => two_string_log_mgf(kappa1, kappa2, n, order),
        Family::W => {
            let m = local_exponential(n, order);
            let s = Series::sinh(order);
            let first = &m[1][1] * &m[0][0].powi(nq as u64 - 1);
            let second = if nq >= 2 {
                (&s * &s).scale_re((nq - 1) as f64 * (n[0] * n[0] + n[1] * n[1])) * m[0][0].powi(nq as u64 - 2)
            } else {
                Series::zero(order)
            };
            (&first + &second).re().ln()
        }
        Family::BiseparableA { .. } | Family::GraphPairs => {
            let pair = pair_amplitudes(spec.family()).expect("pairwise family");
            let m = local_exponential(n, order);
            let mut total = Series::zero(order);
            for c in 0..4 {
                for d in 0..4 {
                    let w = pair[c].conj() * pair[d];
                    if w.norm() == 0.0 {
                        continue;
                    }
                    let term = &m[c & 1][d & 1] * &m[c >> 1][d >> 1];
                    total = &total + &term.scale(w);
                }
            }
            total.re().ln().scale_re((nq / 2) as f64)
        }
        Family::DickeUniform => {
            // the mixture is the normalized projector onto the symmetric subspace,
            // so it is rotation invariant and S·n has spectrum N − 2w
            let mut total = Series::zero(order);
            for w in 0..=nq {
                total = &total + &Series::exp_linear(Complex64::new((nq as f64) - 2.0 * w as f64, 0.0), order);
            }
            total.scale_re(1.0 / (nq + 1) as f64).ln()
        }
        Family::Custom { .. } => return None,
    };
    Some(series)
}

/// ln⟨exp(λ S·n)⟩ up to λ^order; `dir` need not be normalized.
pub fn exact_log_mgf(spec: &StateSpec, dir: &[f64; 3], order: usize, nmax: usize) -> Result<Series> {
    let (unit, norm) = split_direction(dir)?;
    let series = match closed_form_log_mgf(spec, &unit, order) {
        Some(s) => s,
        None => {
            let state = build_state(spec, nmax)?;
            let raw = dense_raw_moments(&state, &unit, order)?;
            let mut m = Series::zero(order);
            let mut fact = 1.0;
            for (r, v) in raw.iter().enumerate() {
                if r > 0 {
                    fact *= r as f64;
                }
                m = &m + &Series::from_real(&monomial(r, v / fact), order);
            }
            m.ln()
        }
    };
    Ok(series.rescale_argument(norm))
}

fn monomial(r: usize, c: f64) -> Vec<f64> {
    let mut v = vec![0.0; r + 1];
    v[r] = c;
    v
}

/// r!·[λ^r] of exp(ln M), optionally with the mean removed.
pub fn moment_from_log_mgf(log_mgf: &Series, r: usize, kind: MomentKind) -> f64 {
    let series = match kind {
        MomentKind::Raw => log_mgf.clone(),
        MomentKind::Central => log_mgf - &Series::linear(log_mgf.coeff(1), log_mgf.order()),
    };
    series.exp().derivative_at_zero(r).re
}

/// Cumulants κ₁..κ_order read off ln M.
pub fn cumulants_from_log_mgf(log_mgf: &Series) -> Vec<f64> {
    (1..=log_mgf.order()).map(|r| log_mgf.derivative_at_zero(r).re).collect()
}

fn check_order(r: usize, max: usize) -> Result<()> {
    if r == 0 || r > max {
        return Err(Error::InvalidArgument(format!("moment order {r} outside 1..={max}")));
    }
    Ok(())
}

/// Exact moment of S·dir: closed form for named families at any N, dense
/// statevector algebra for `custom`.
pub fn exact_moment(spec: &StateSpec, dir: &[f64; 3], r: usize, kind: MomentKind, nmax: usize) -> Result<f64> {
    check_order(r, MAX_EXACT_ORDER)?;
    Ok(moment_from_log_mgf(&exact_log_mgf(spec, dir, r, nmax)?, r, kind))
}

/// (S·n)|ψ⟩ on a dense vector; n need not be normalized.
fn apply_collective(n: &[f64; 3], psi: &[Complex64]) -> Vec<Complex64> {
    let dim = psi.len();
    let nq = dim.trailing_zeros() as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (i, a) in psi.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        for q in 0..nq {
            let bit = (i >> q) & 1;
            let sign = if bit == 1 { -1.0 } else { 1.0 };
            // σ_x|b⟩ = |b̄⟩, σ_y|b⟩ = i(−1)^b|b̄⟩, σ_z|b⟩ = (−1)^b|b⟩
            out[i ^ (1 << q)] += a * Complex64::new(n[0], sign * n[1]);
            out[i] += a * (sign * n[2]);
        }
    }
    out
}

/// Raw moments ⟨(S·n)^r⟩ for r = 0..=order by repeated application of S·n
/// to the dense statevector(s).
pub fn dense_raw_moments(state: &Prepared, dir: &[f64; 3], order: usize) -> Result<Vec<f64>> {
    let mut raw = vec![0.0; order + 1];
    for (w, psi) in state.components() {
        let amps = psi.amplitudes();
        let mut v = amps.to_vec();
        raw[0] += w;
        for slot in raw.iter_mut().skip(1) {
            v = apply_collective(dir, &v);
            let e: Complex64 = amps.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            *slot += w * e.re;
        }
    }
    Ok(raw)
}

/// Moment from dense linear algebra; central moments by binomial expansion.
pub fn dense_moment(state: &Prepared, dir: &[f64; 3], r: usize, kind: MomentKind) -> Result<f64> {
    check_order(r, MAX_EXACT_ORDER)?;
    let raw = dense_raw_moments(state, dir, r)?;
    Ok(match kind {
        MomentKind::Raw => raw[r],
        MomentKind::Central => {
            let mean = raw[1];
            let mut binom = 1.0;
            let mut total = 0.0;
            for (j, rj) in raw.iter().enumerate().take(r + 1) {
                total += binom * rj * (-mean).powi((r - j) as i32);
                binom = binom * (r - j) as f64 / (j + 1) as f64;
            }
            total
        }
    })
}

/// Linear coefficients of the type counts in scaled coordinates:
/// t_type = N (a_type + b_type · x).
const TYPE_OFFSET: [f64; 4] = [1.0, 0.0, 0.0, 0.0];
const TYPE_SLOPE: [[f64; 3]; 4] = [
    [-0.5, -0.5, -0.5],
    [0.5, 0.5, -0.5],
    [-0.5, 0.5, 0.5],
    [0.5, -0.5, 0.5],
];

/// ln E_G[2^N P_{exp(λ S·n)}(x)] for one Gaussian component.
///
/// The P-symbol is Π_type f_type^{t_type(x)} with t linear in x, so its
/// Gaussian average is exp(C + L·x̄ + ½ Lᵀ Σ L) with Σ = T/(2N); T is never
/// inverted.
fn gaussian_log_mgf(g: &GaussianModel, n: &[f64; 3], order: usize) -> Series {
    let nq = g.n_qubits() as f64;
    let lf: Vec<Series> = TYPES
        .iter()
        .map(|&(a, b)| ln_local(3f64.sqrt() * dot(n, &type_signs(a, b)), order))
        .collect();
    let mut constant = Series::zero(order);
    let mut slope: [Series; 3] = std::array::from_fn(|_| Series::zero(order));
    for (t, l) in lf.iter().enumerate() {
        constant = &constant + &l.scale_re(nq * TYPE_OFFSET[t]);
        for (i, s) in slope.iter_mut().enumerate() {
            *s = &*s + &l.scale_re(nq * TYPE_SLOPE[t][i]);
        }
    }
    let center = g.center();
    let t = g.dispersion();
    let mut out = constant;
    for i in 0..3 {
        out = &out + &slope[i].scale_re(center[i]);
        for j in 0..3 {
            out = &out + &(&slope[i] * &slope[j]).scale_re(0.5 * t[i][j] / (2.0 * nq));
        }
    }
    out
}

/// ln of the Gaussian-model estimate of ⟨exp(λ S·n)⟩; `dir` need not be
/// normalized.
pub fn approx_log_mgf(model: &MultiGaussian, dir: &[f64; 3], order: usize) -> Result<Series> {
    let (unit, norm) = split_direction(dir)?;
    let mut total = Series::zero(order);
    for g in model.components() {
        total = &total + &gaussian_log_mgf(g, &unit, order).exp().scale_re(g.weight());
    }
    Ok(total.ln().rescale_argument(norm))
}

/// Gaussian estimate of a moment of S·dir, by exact Gaussian integration of
/// the P-symbol. Orders 1..=4.
pub fn approx_moment_gaussian(model: &MultiGaussian, dir: &[f64; 3], r: usize, kind: MomentKind) -> Result<f64> {
    check_order(r, MAX_APPROX_ORDER)?;
    Ok(moment_from_log_mgf(&approx_log_mgf(model, dir, r)?, r, kind))
}

/// Which Gaussian model to compare against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    /// One Gaussian from the exact first and second moments.
    Single,
    /// The two-component GHZ mixture.
    GhzPair,
}

/// Builds the requested model for a spec.
pub fn build_model(spec: &StateSpec, choice: ModelChoice, nmax: usize) -> Result<MultiGaussian> {
    match choice {
        ModelChoice::Single => MultiGaussian::single(t_matrix(&moment_summary(spec, nmax)?)?),
        ModelChoice::GhzPair => {
            if !matches!(spec.family(), Family::Ghz) {
                return Err(Error::Unsupported {
                    family: spec.family().name().to_string(),
                    what: "two-Gaussian model",
                });
            }
            Ok(ghz_two_gaussian(spec.n()))
        }
    }
}

/// One exact-versus-approximate comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub state: String,
    pub n_qubits: usize,
    pub direction: [f64; 3],
    pub order: usize,
    pub kind: MomentKind,
    pub model: ModelChoice,
    pub exact: f64,
    pub approx: f64,
    /// (approx − exact)/exact, or approx − exact when exact vanishes.
    pub deviation: f64,
    pub relative: bool,
    /// κ₂, κ₃, κ₄ of S·n.
    pub cumulants: [f64; 3],
}

impl MomentReport {
    pub const CSV_HEADER: &'static str =
        "state,n,nx,ny,nz,order,kind,model,exact,approx,deviation,relative,kappa2,kappa3,kappa4";

    pub fn csv_row(&self) -> String {
        let [nx, ny, nz] = self.direction;
        let [k2, k3, k4] = self.cumulants;
        format!(
            "\"{}\",{},{nx:.17e},{ny:.17e},{nz:.17e},{},{},{},{:.17e},{:.17e},{:.17e},{},{k2:.17e},{k3:.17e},{k4:.17e}",
            self.state,
            self.n_qubits,
            self.order,
            serde_json::to_value(self.kind).unwrap().as_str().unwrap(),
            serde_json::to_value(self.model).unwrap().as_str().unwrap(),
            self.exact,
            self.approx,
            self.deviation,
            self.relative,
        )
    }
}

/// Deviation (approx − exact)/exact, falling back to the absolute difference
/// when the exact value is zero on the natural scale N^r.
pub fn deviation(exact: f64, approx: f64, n_qubits: usize, r: usize) -> (f64, bool) {
    let scale = (n_qubits as f64).powi(r as i32).max(1.0);
    if exact.abs() <= 1e-12 * scale {
        (approx - exact, false)
    } else {
        ((approx - exact) / exact, true)
    }
}

pub fn moment_report(
    spec: &StateSpec,
    dir: &[f64; 3],
    r: usize,
    kind: MomentKind,
    choice: ModelChoice,
    nmax: usize,
) -> Result<MomentReport> {
    check_order(r, MAX_APPROX_ORDER)?;
    let log_mgf = exact_log_mgf(spec, dir, MAX_APPROX_ORDER, nmax)?;
    let exact = moment_from_log_mgf(&log_mgf, r, kind);
    let model = build_model(spec, choice, nmax)?;
    let approx = approx_moment_gaussian(&model, dir, r, kind)?;
    let (deviation, relative) = deviation(exact, approx, spec.n(), r);
    let k = cumulants_from_log_mgf(&log_mgf);
    Ok(MomentReport {
        state: spec.label(),
        n_qubits: spec.n(),
        direction: *dir,
        order: r,
        kind,
        model: choice,
        exact,
        approx,
        deviation,
        relative,
        cumulants: [k[1], k[2], k[3]],
    })
}

/// Reports for every (N, direction, order) cell, in that nesting order.
pub fn deviation_table(
    spec: &StateSpec,
    directions: &[[f64; 3]],
    orders: &[usize],
    ns: &[usize],
    kind: MomentKind,
    choice: ModelChoice,
    nmax: usize,
) -> Result<Vec<MomentReport>> {
    let cells: Vec<(usize, [f64; 3], usize)> = ns
        .iter()
        .flat_map(|&n| directions.iter().flat_map(move |&d| orders.iter().map(move |&r| (n, d, r))))
        .collect();
    cells
        .par_iter()
        .map(|&(n, d, r)| moment_report(&spec.with_n(n)?, &d, r, kind, choice, nmax))
        .collect()
}

/// lim_{N→∞} N^p · deviation, by one Richardson step on N and 2N assuming
/// N^p·dev = A + B/N + O(N⁻²).
pub fn asymptotic_deviation(
    spec: &StateSpec,
    dir: &[f64; 3],
    r: usize,
    kind: MomentKind,
    power: i32,
    n: usize,
    nmax: usize,
) -> Result<f64> {
    let scaled = |n: usize| -> Result<f64> {
        let rep = moment_report(&spec.with_n(n)?, dir, r, kind, ModelChoice::Single, nmax)?;
        if !rep.relative {
            return Err(Error::InvalidArgument("exact moment vanishes; no relative deviation".into()));
        }
        Ok(rep.deviation * (n as f64).powi(power))
    };
    Ok(2.0 * scaled(2 * n)? - scaled(n)?)
}

/// Cumulants of S·n and a flag for the Gaussian growth condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantDiagnostic {
    pub kappa2: f64,
    pub kappa3: f64,
    pub kappa4: f64,
    /// False when |κ₄| ≥ κ₂²/2.
    pub gaussian_ok: bool,
}

pub fn cumulant_diagnostic(spec: &StateSpec, dir: &[f64; 3], nmax: usize) -> Result<CumulantDiagnostic> {
    let k = cumulants_from_log_mgf(&exact_log_mgf(spec, dir, 4, nmax)?);
    let (kappa2, kappa3, kappa4) = (k[1], k[2], k[3]);
    let tiny = 1e-12 * (spec.n() as f64).powi(4);
    let gaussian_ok = if kappa2.abs() <= tiny.sqrt() && kappa4.abs() <= tiny {
        true
    } else {
        kappa4.abs() < kappa2 * kappa2 / 2.0
    };
    Ok(CumulantDiagnostic { kappa2, kappa3, kappa4, gaussian_ok })
}

/// Parameter r of a spherical model exp(−N r Δx²) and the implied ⟨S_j²⟩.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalCheck {
    pub r: f64,
    pub second_moment: f64,
    pub eigenvalue_spread: f64,
}

/// Largest relative eigenvalue spread still treated as isotropic.
pub const SPHERICAL_SPREAD: f64 = 0.05;

/// r = 1/λ̄ for T ≈ λ̄·I and ⟨S_j²⟩ = 2N(3 − r)/r; r ≤ 3 is required.
pub fn spherical_check(model: &GaussianModel) -> Result<SphericalCheck> {
    let values = model.eigen().values;
    let mean = values.iter().sum::<f64>() / 3.0;
    if mean <= 0.0 {
        return Err(Error::NotSpherical(format!("mean eigenvalue {mean}")));
    }
    let spread = (values[0] - values[2]) / mean;
    if spread >= SPHERICAL_SPREAD {
        return Err(Error::NotSpherical(format!(
            "eigenvalues {values:?} spread by {:.1}%",
            100.0 * spread
        )));
    }
    let r = 1.0 / mean;
    if r > 3.0 + 1e-6 {
        return Err(Error::Unphysical(r));
    }
    let n = model.n_qubits() as f64;
    Ok(SphericalCheck { r, second_moment: 2.0 * n * (3.0 - r) / r, eigenvalue_spread: spread })
}

/// One row of the closed-form comparison tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormRow {
    pub label: String,
    pub report: MomentReport,
    /// Closed-form exact expression at this N.
    pub formula_exact: f64,
    /// Closed-form Gaussian estimate at this N.
    pub formula_approx: f64,
}

/// The closed-form comparisons for shifted coherent, W, GHZ and basis states
/// at a given N (even, divisible by 4).
///
/// Moments are raw, ⟨(S·n)^r⟩, which is what the closed forms describe. The
/// shifted coherent state uses h(ν) = N/4 (c = −1/2) and the basis state
/// h(κ) = N/4 (γ = 1/4).
pub fn closed_form_tables(n: usize, nmax: usize) -> Result<Vec<ClosedFormRow>> {
    if n < 4 || !n.is_multiple_of(4) {
        return Err(Error::InvalidArgument(format!("table N must be a positive multiple of 4, got {n}")));
    }
    let nf = n as f64;
    let raw = MomentKind::Raw;
    let z = [0.0, 0.0, 1.0];
    let x = [1.0, 0.0, 0.0];
    let xy = [1.0, 1.0, 0.0];
    let s33 = 3f64.powf(-1.5);

    let dcs = StateSpec::new(
        Family::Dcs { mu: Pattern::zeros(n), nu: Pattern::leading_ones(n, n / 4) },
        n,
    )?;
    let c = 2.0 * (n / 4) as f64 / nf - 1.0;
    let basis = StateSpec::new(Family::Basis { kappa: Pattern::leading_ones(n, n / 4) }, n)?;
    let g: f64 = 1.0 - 2.0 * 0.25;
    let (w, ghz) = (StateSpec::w(n), StateSpec::ghz(n));
    let single = ModelChoice::Single;

    // label, state, direction, order, model, exact formula, approximate formula
    type Row<'a> = (&'a str, &'a StateSpec, [f64; 3], usize, ModelChoice, f64, f64);
    let rows: Vec<Row> = vec![
        (
            "shifted coherent, z, 3rd",
            &dcs,
            z,
            3,
            single,
            -s33 * nf * c * (nf * nf * c * c + 6.0 * nf - 4.0),
            -s33 * nf * c * (nf * nf * c * c + 6.0 * nf + 12.0),
        ),
        (
            "shifted coherent, z, 4th",
            &dcs,
            z,
            4,
            single,
            nf * nf / 9.0 * (nf * nf * c.powi(4) + (12.0 * nf - 16.0) * c * c + 12.0),
            nf * nf / 9.0 * (nf * nf * c.powi(4) + (12.0 * nf + 48.0) * c * c + 12.0 + 96.0 / nf),
        ),
        ("W, x, 4th", &w, x, 4, single, 15.0 * nf * nf - 30.0 * nf + 16.0, 27.0 * nf * nf + 12.0 * nf - 20.0),
        (
            "W, z, 4th",
            &w,
            z,
            4,
            single,
            (nf - 2.0).powi(4),
            (nf - 2.0).powi(4) + 16.0 * (nf - 2.0).powi(2),
        ),
        ("GHZ, x, 4th", &ghz, x, 4, single, 3.0 * nf * nf - 2.0 * nf, 3.0 * nf * nf + 16.0 * nf),
        ("GHZ, z, 4th", &ghz, z, 4, single, nf.powi(4), 3.0 * nf.powi(4) + 16.0 * nf * nf),
        (
            "GHZ two-Gaussian, z, 4th",
            &ghz,
            z,
            4,
            ModelChoice::GhzPair,
            nf.powi(4),
            nf.powi(4) + 16.0 * nf * nf,
        ),
        (
            "basis, z, 4th",
            &basis,
            z,
            4,
            single,
            g.powi(4) * nf.powi(4),
            g.powi(4) * nf.powi(4) + 16.0 * g * g * nf * nf,
        ),
        (
            "basis, x+y, 4th",
            &basis,
            xy,
            4,
            single,
            12.0 * nf * nf - 8.0 * nf,
            12.0 * nf * nf + (208.0 + 48.0 * 3f64.sqrt() - 96.0 * 3f64.sqrt() * 0.25) * nf,
        ),
    ];
    rows.into_iter()
        .map(|(label, spec, dir, r, choice, fe, fa)| {
            Ok(ClosedFormRow {
                label: label.to_string(),
                report: moment_report(spec, &dir, r, raw, choice, nmax)?,
                formula_exact: fe,
                formula_approx: fa,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dirs() -> Vec<[f64; 3]> {
        vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.6, -0.48, 0.64], [1.0, 1.0, 0.0]]
    }

    #[test]
    fn closed_forms_match_dense_algebra() {
        let specs = [
            StateSpec::dcs("011010", "110001").unwrap(),
            StateSpec::basis("011010").unwrap(),
            StateSpec::ghz(6),
            StateSpec::shifted_ghz("111000").unwrap(),
            StateSpec::w(6),
            StateSpec::biseparable(0.5, 6).unwrap(),
            StateSpec::graph_pairs(6).unwrap(),
            StateSpec::uniform_mixed(5),
            StateSpec::dicke_uniform(5),
        ];
        for spec in &specs {
            let state = build_state(spec, 12).unwrap();
            for d in dirs() {
                for r in 1..=6 {
                    for kind in [MomentKind::Raw, MomentKind::Central] {
                        let exact = exact_moment(spec, &d, r, kind, 12).unwrap();
                        let dense = dense_moment(&state, &d, r, kind).unwrap();
                        assert!(
                            (exact - dense).abs() <= 1e-9 * dense.abs().max(1.0),
                            "{} {d:?} r={r} {kind:?}: {exact} vs {dense}",
                            spec.label()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn known_values() {
        let w = StateSpec::w(4);
        assert_relative_eq!(exact_moment(&w, &[1.0, 0.0, 0.0], 4, MomentKind::Central, 12).unwrap(), 136.0, max_relative = 1e-12);
        let w10 = StateSpec::w(10);
        assert_relative_eq!(exact_moment(&w10, &[1.0, 0.0, 0.0], 4, MomentKind::Raw, 12).unwrap(), 1216.0, max_relative = 1e-12);
        let ghz = StateSpec::ghz(8);
        assert_relative_eq!(exact_moment(&ghz, &[0.0, 0.0, 1.0], 4, MomentKind::Raw, 12).unwrap(), 4096.0, max_relative = 1e-12);
    }

    #[test]
    fn order_limits() {
        let spec = StateSpec::fiducial(4);
        assert!(exact_moment(&spec, &[0.0, 0.0, 1.0], 7, MomentKind::Raw, 12).is_err());
        assert!(exact_moment(&spec, &[0.0, 0.0, 0.0], 2, MomentKind::Raw, 12).is_err());
        let model = build_model(&spec, ModelChoice::Single, 12).unwrap();
        assert!(approx_moment_gaussian(&model, &[0.0, 0.0, 1.0], 5, MomentKind::Raw).is_err());
        assert!(build_model(&spec, ModelChoice::GhzPair, 12).is_err());
    }
}
