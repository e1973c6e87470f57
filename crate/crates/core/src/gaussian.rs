//! Large-N analytics: moment summaries, the dispersion matrix T, Gaussian
//! models of the projected Q̃-function, peak finding and localization.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{cumulants_from_log_mgf, dense_raw_moments, exact_log_mgf};
use crate::phase_space::p_symbol_series_scaled;
use crate::projection::{MeasLattice, ProjectedQ, Triple};
use crate::series::Series;
use crate::states::{log_sum_exp, Prepared, StateSpec};

pub type Mat3 = [[f64; 3]; 3];

/// First and second collective moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub n_qubits: usize,
    /// ⟨S_x⟩, ⟨S_y⟩, ⟨S_z⟩.
    pub mean_spin: [f64; 3],
    /// Γ_ij = ⟨S_iS_j + S_jS_i⟩/2 − ⟨S_i⟩⟨S_j⟩.
    pub correlation: Mat3,
}

const UNIT: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Builds a summary from a function returning the first two cumulants of S·d.
fn summary_from<F>(n_qubits: usize, cumulants: F) -> Result<MomentSummary>
where
    F: Fn(&[f64; 3]) -> Result<(f64, f64)>,
{
    let mut mean = [0.0; 3];
    let mut gamma = [[0.0; 3]; 3];
    for i in 0..3 {
        let (k1, k2) = cumulants(&UNIT[i])?;
        mean[i] = k1;
        gamma[i][i] = k2;
    }
    for i in 0..3 {
        for j in i + 1..3 {
            let d = [UNIT[i][0] + UNIT[j][0], UNIT[i][1] + UNIT[j][1], UNIT[i][2] + UNIT[j][2]];
            let (_, var) = cumulants(&d)?;
            let c = (var - gamma[i][i] - gamma[j][j]) / 2.0;
            gamma[i][j] = c;
            gamma[j][i] = c;
        }
    }
    Ok(MomentSummary { n_qubits, mean_spin: mean, correlation: gamma })
}

/// Exact moments of a named family from closed forms (any N), or from dense
/// algebra for `custom`.
pub fn moment_summary(spec: &StateSpec, nmax: usize) -> Result<MomentSummary> {
    summary_from(spec.n(), |d| {
        let k = cumulants_from_log_mgf(&exact_log_mgf(spec, d, 2, nmax)?);
        Ok((k[0], k[1]))
    })
}

impl MomentSummary {
    /// Exact moments by dense statevector algebra.
    pub fn from_state(state: &Prepared) -> Result<Self> {
        summary_from(state.n_qubits(), |d| {
            let raw = dense_raw_moments(state, d, 2)?;
            Ok((raw[1], raw[2] - raw[1] * raw[1]))
        })
    }

    /// Moments recovered from a projection through P-symbols,
    /// ⟨exp(λ S·n)⟩ = Σ P(m,n,k) Q̃(m,n,k).
    pub fn from_projection(pq: &ProjectedQ) -> Result<Self> {
        let n = pq.n_qubits();
        let ln_pre = -(n as f64) * 2f64.ln();
        summary_from(n, |d| {
            let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            let unit = [d[0] / norm, d[1] / norm, d[2] / norm];
            let mut mgf = Series::zero(2);
            for (t, ln_q) in pq.iter_ln() {
                if ln_q == f64::NEG_INFINITY {
                    continue;
                }
                let p = p_symbol_series_scaled(&unit, &t.census(n)?, 2)?;
                mgf = &mgf + &p.scale_re((ln_q + ln_pre).exp());
            }
            let k = cumulants_from_log_mgf(&mgf.ln().rescale_argument(norm));
            Ok((k[0], k[1]))
        })
    }
}

/// Eigen-decomposition of a symmetric 3×3 matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigen3 {
    /// Sorted descending.
    pub values: [f64; 3],
    /// `vectors[i]` belongs to `values[i]`; first nonzero component positive.
    pub vectors: Mat3,
}

/// Cyclic Jacobi rotations until the off-diagonal norm is below 1e−13
/// (relative to the Frobenius norm when that exceeds one).
pub fn eigen3(m: &Mat3) -> Eigen3 {
    let mut a = *m;
    for i in 0..3 {
        for j in i + 1..3 {
            let s = (a[i][j] + a[j][i]) / 2.0;
            a[i][j] = s;
            a[j][i] = s;
        }
    }
    let mut v = UNIT;
    let fro = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-13 * fro.max(1.0);
    for _ in 0..100 {
        let off = (2.0 * (a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2))).sqrt();
        if off <= tol {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let (akp, akq) = (a[k][p], a[k][q]);
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let (vp, vq) = (row[p], row[q]);
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap_or(std::cmp::Ordering::Equal));
    let mut values = [0.0; 3];
    let mut vectors = [[0.0; 3]; 3];
    for (slot, &i) in order.iter().enumerate() {
        values[slot] = a[i][i];
        let mut col = [v[0][i], v[1][i], v[2][i]];
        if let Some(first) = col.iter().find(|c| c.abs() > 1e-12) {
            if *first < 0.0 {
                col.iter_mut().for_each(|c| *c = -*c);
            }
        }
        vectors[slot] = col;
    }
    Eigen3 { values, vectors }
}

fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// One Gaussian component: center x̄, dispersion T and mixture weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    n_qubits: usize,
    center: [f64; 3],
    dispersion: Mat3,
    weight: f64,
}

/// Value of a (possibly rank-deficient) Gaussian at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    /// Log of the density, without the delta factors of a degenerate model.
    pub ln_value: f64,
    pub rank: usize,
    /// Directions u with zero eigenvalue; the density carries δ(u·Δx).
    pub delta_directions: Vec<[f64; 3]>,
    /// u·Δx for each delta direction.
    pub delta_offsets: Vec<f64>,
}

impl GaussianModel {
    pub fn new(n_qubits: usize, center: [f64; 3], dispersion: Mat3, weight: f64) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidArgument("N must be positive".into()));
        }
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(Error::InvalidArgument(format!("weight {weight} outside (0, 1]")));
        }
        for i in 0..3 {
            for j in 0..3 {
                if (dispersion[i][j] - dispersion[j][i]).abs() > 1e-12 * (1.0 + dispersion[i][j].abs()) {
                    return Err(Error::InvalidArgument("dispersion matrix is not symmetric".into()));
                }
            }
        }
        let model = Self { n_qubits, center, dispersion, weight };
        let values = model.eigen().values;
        let scale = model.trace().abs().max(1.0);
        if values[2] < -1e-12 * scale {
            return Err(Error::NegativeEigenvalue(values[2]));
        }
        Ok(model)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn center(&self) -> [f64; 3] {
        self.center
    }

    pub fn dispersion(&self) -> Mat3 {
        self.dispersion
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn trace(&self) -> f64 {
        (0..3).map(|i| self.dispersion[i][i]).sum()
    }

    pub fn det(&self) -> f64 {
        det3(&self.dispersion)
    }

    pub fn eigen(&self) -> Eigen3 {
        eigen3(&self.dispersion)
    }

    /// Rank under the rule λ < 1e−10·Tr T counts as zero.
    pub fn rank(&self) -> usize {
        let tol = 1e-10 * self.trace();
        self.eigen().values.iter().filter(|v| **v >= tol).count()
    }

    /// Covariance of the normalized Gaussian, T/(2N).
    pub fn covariance(&self) -> Mat3 {
        let s = 1.0 / (2.0 * self.n_qubits as f64);
        self.dispersion.map(|row| row.map(|x| x * s))
    }

    /// N·Δx·T⁻¹·Δx over the nonzero eigen-directions.
    pub fn quadratic_form(&self, x: &[f64; 3]) -> f64 {
        let e = self.eigen();
        let tol = 1e-10 * self.trace();
        let dx = [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]];
        let n = self.n_qubits as f64;
        e.values
            .iter()
            .zip(&e.vectors)
            .filter(|(l, _)| **l >= tol)
            .map(|(l, u)| {
                let c = u[0] * dx[0] + u[1] * dx[1] + u[2] * dx[2];
                n * c * c / l
            })
            .sum()
    }

    /// Weighted density normalized so that (N³/2)∫ Q̃ d³x = 2^N:
    /// 2^{N+1} N^{r/2−3} / (π^{r/2} √Πλ) · exp(−N Δx T⁻¹ Δx) for rank r, with
    /// δ(u·Δx) along every zero eigen-direction u reported separately.
    pub fn density(&self, x: &[f64; 3]) -> DensityPoint {
        let e = self.eigen();
        let tol = 1e-10 * self.trace();
        let n = self.n_qubits as f64;
        let dx = [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]];
        let mut rank = 0;
        let mut ln_prod = 0.0;
        let mut delta_directions = Vec::new();
        let mut delta_offsets = Vec::new();
        for (l, u) in e.values.iter().zip(&e.vectors) {
            if *l >= tol {
                rank += 1;
                ln_prod += l.ln();
            } else {
                delta_directions.push(*u);
                delta_offsets.push(u[0] * dx[0] + u[1] * dx[1] + u[2] * dx[2]);
            }
        }
        let r = rank as f64;
        let ln_pre = (n + 1.0) * 2f64.ln() + (r / 2.0 - 3.0) * n.ln() - r / 2.0 * PI.ln() - ln_prod / 2.0;
        DensityPoint {
            ln_value: self.weight.ln() + ln_pre - self.quadratic_form(x),
            rank,
            delta_directions,
            delta_offsets,
        }
    }
}

/// Weighted sum of Gaussian components with weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiGaussian {
    components: Vec<GaussianModel>,
}

impl MultiGaussian {
    pub fn new(components: Vec<GaussianModel>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::InvalidArgument("a mixture needs at least one component".into()));
        };
        if components.iter().any(|c| c.n_qubits != first.n_qubits) {
            return Err(Error::InvalidArgument("components disagree on N".into()));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("mixture weights sum to {total}")));
        }
        Ok(Self { components })
    }

    pub fn single(model: GaussianModel) -> Result<Self> {
        Self::new(vec![model.with_weight(1.0)])
    }

    pub fn components(&self) -> &[GaussianModel] {
        &self.components
    }

    pub fn n_qubits(&self) -> usize {
        self.components[0].n_qubits
    }

    /// Log of the mixture density; every component must have full rank.
    pub fn ln_density(&self, x: &[f64; 3]) -> Result<f64> {
        let values = self
            .components
            .iter()
            .map(|c| {
                let d = c.density(x);
                if d.rank < 3 {
                    Err(Error::InvalidArgument(
                        "degenerate component; evaluate it with GaussianModel::density".into(),
                    ))
                } else {
                    Ok(d.ln_value)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(log_sum_exp(&values))
    }
}

/// Center x̄ = (1 − ⟨S⟩/(N√3))/2 and T = (Γ + Λ)/(6N), where Λ has 2N on
/// the diagonal and √3⟨S_z⟩, √3⟨S_y⟩, √3⟨S_x⟩ at xy, xz, yz.
pub fn t_matrix(ms: &MomentSummary) -> Result<GaussianModel> {
    let n = ms.n_qubits as f64;
    let s3 = 3f64.sqrt();
    let [sx, sy, sz] = ms.mean_spin;
    let lambda = [
        [2.0 * n, s3 * sz, s3 * sy],
        [s3 * sz, 2.0 * n, s3 * sx],
        [s3 * sy, s3 * sx, 2.0 * n],
    ];
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = (ms.correlation[i][j] + lambda[i][j]) / (6.0 * n);
        }
    }
    let center = ms.mean_spin.map(|s| (1.0 - s / (n * s3)) / 2.0);
    let model = GaussianModel::new(ms.n_qubits, center, t, 1.0)?;
    if model.det() < -1e-12 {
        return Err(Error::NegativeEigenvalue(model.eigen().values[2]));
    }
    Ok(model)
}

/// GHZ as two equal Gaussians, one per basis component |0…0⟩ and |1…1⟩:
/// centers (1, 1, 1 ∓ 1/√3)/2 and T_± = (1/6)[[3, ±√3, 0], [±√3, 3, 0], [0, 0, 2]].
pub fn ghz_two_gaussian(n_qubits: usize) -> MultiGaussian {
    let s3 = 3f64.sqrt();
    let component = |sign: f64| {
        let t = [[0.5, sign * s3 / 6.0, 0.0], [sign * s3 / 6.0, 0.5, 0.0], [0.0, 0.0, 1.0 / 3.0]];
        let center = [0.5, 0.5, (1.0 - sign / s3) / 2.0];
        GaussianModel::new(n_qubits, center, t, 0.5).expect("valid GHZ component")
    };
    MultiGaussian::new(vec![component(1.0), component(-1.0)]).expect("weights sum to one")
}

/// Envelope center and the two narrow maxima of the W-state Q̃.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WFineStructure {
    pub envelope_center: [f64; 3],
    pub maxima: [[f64; 3]; 2],
    /// Distance between the maxima in scaled coordinates.
    pub separation: f64,
}

/// x̄ = (1, 1, 1 − 1/√3)/2 and x_± = (1/2 ± d, 1/2 ∓ d, 2 − √3) with
/// d = (√3 − 1)/(2√N).
pub fn w_fine_structure(n_qubits: usize) -> Result<WFineStructure> {
    if n_qubits < 4 {
        return Err(Error::InvalidArgument(format!("W fine structure needs N >= 4, got {n_qubits}")));
    }
    let s3 = 3f64.sqrt();
    let d = (s3 - 1.0) / (2.0 * (n_qubits as f64).sqrt());
    let z = 2.0 - s3;
    Ok(WFineStructure {
        envelope_center: [0.5, 0.5, (1.0 - 1.0 / s3) / 2.0],
        maxima: [[0.5 + d, 0.5 - d, z], [0.5 - d, 0.5 + d, z]],
        separation: 2.0 * std::f64::consts::SQRT_2 * d,
    })
}

/// A lattice local maximum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub triple: Triple,
    /// Scaled (x, y, z) = (m, k, n)/N.
    pub position: [f64; 3],
    pub ln_value: f64,
}

/// Local maxima of Q̃ over neighborhoods of valid triples within Chebyshev
/// distance 2 (steps of one in m, n, k keep parity only in pairs). Ties are
/// broken toward the lexicographically smaller triple, so a plateau yields
/// one point. Sorted by value, descending.
pub fn find_peaks(pq: &ProjectedQ) -> Vec<Peak> {
    let n = pq.n_qubits();
    let side = n + 1;
    let idx = |t: Triple| (t.m * side + t.n) * side + t.k;
    let mut grid = vec![f64::NEG_INFINITY; side * side * side];
    for (t, v) in pq.iter_ln() {
        grid[idx(t)] = v;
    }
    let lattice = MeasLattice::new(n);
    let mut peaks: Vec<Peak> = lattice
        .triples()
        .par_iter()
        .filter_map(|&t| {
            let v = grid[idx(t)];
            if v == f64::NEG_INFINITY {
                return None;
            }
            let range = |c: usize| c.saturating_sub(2)..=(c + 2).min(n);
            for m in range(t.m) {
                for nn in range(t.n) {
                    for k in range(t.k) {
                        let u = Triple::new(m, nn, k);
                        if u == t || !u.is_valid(n) {
                            continue;
                        }
                        let w = grid[idx(u)];
                        if w > v || (w == v && u < t) {
                            return None;
                        }
                    }
                }
            }
            Some(Peak { triple: t, position: t.scaled(n), ln_value: v })
        })
        .collect();
    peaks.sort_by(|a, b| b.ln_value.partial_cmp(&a.ln_value).unwrap().then(a.triple.cmp(&b.triple)));
    peaks
}

/// Peaks whose value is at least `fraction` of the highest one.
pub fn dominant_peaks(peaks: &[Peak], fraction: f64) -> Vec<Peak> {
    let Some(top) = peaks.first() else { return Vec::new() };
    let cut = top.ln_value + fraction.ln();
    peaks.iter().filter(|p| p.ln_value >= cut).cloned().collect()
}

/// Largest |ln Q̃ − ln G| over lattice points within `widths` standard
/// deviations of the center, where G is the model density; also returns the
/// number of points inspected.
pub fn max_log_deviation(pq: &ProjectedQ, model: &GaussianModel, widths: f64) -> Result<(f64, usize)> {
    if model.rank() < 3 {
        return Err(Error::InvalidArgument("shape comparison needs a full-rank model".into()));
    }
    let n = pq.n_qubits();
    let mut worst = 0.0f64;
    let mut count = 0;
    for (t, ln_q) in pq.iter_ln() {
        let x = t.scaled(n);
        // Mahalanobis distance² under covariance T/(2N) is 2·N·Δx T⁻¹ Δx;
        // lattice points often sit exactly on the boundary, so include them
        if 2.0 * model.quadratic_form(&x) > widths * widths * (1.0 + 1e-12) {
            continue;
        }
        count += 1;
        worst = worst.max((ln_q - model.density(&x).ln_value).abs());
    }
    Ok((worst, count))
}

/// Fitted growth of the eigenvalues of T over an N-sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub state: String,
    pub ns: Vec<usize>,
    /// Eigenvalues of T per N, descending.
    pub eigenvalues: Vec<[f64; 3]>,
    /// Principal axes per N, matching `eigenvalues`.
    pub axes: Vec<Mat3>,
    pub trace_t: Vec<f64>,
    /// Growth exponent of each eigenvalue, see [`growth_exponent`].
    pub exponents: [f64; 3],
    /// A direction is delocalized when its exponent is at least 1 − ε.
    pub epsilon: f64,
    pub delocalized: [bool; 3],
    pub localized: bool,
}

/// Default ε for the exponent threshold.
pub const DEFAULT_EPSILON: f64 = 0.1;

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Growth exponent p of λ(N) ~ a + b·N^p. Fitting ln λ directly is biased by
/// the constant a at moderate N, so the slope is taken on the increments:
/// ln|Δλ/ΔN| against ln of the geometric midpoint, plus one. A sequence whose
/// increments all vanish (to 1e−12 of its scale) is bounded and gets p = 0.
pub fn growth_exponent(ns: &[usize], lambdas: &[f64]) -> f64 {
    let scale = lambdas.iter().fold(1.0f64, |a, l| a.max(l.abs()));
    let floor = 1e-12 * scale;
    let mut xs = Vec::with_capacity(ns.len() - 1);
    let mut ys = Vec::with_capacity(ns.len() - 1);
    let mut any_growth = false;
    for i in 0..ns.len() - 1 {
        let (n0, n1) = (ns[i] as f64, ns[i + 1] as f64);
        let dl = (lambdas[i + 1] - lambdas[i]).abs();
        any_growth |= dl > floor;
        xs.push((n0 * n1).sqrt().ln());
        ys.push((dl.max(floor) / (n1 - n0)).ln());
    }
    if !any_growth {
        return 0.0;
    }
    1.0 + slope(&xs, &ys)
}

/// Sweeps N, fits ln λ_j(N) against ln N and labels each principal direction.
pub fn classify_localization(spec: &StateSpec, ns: &[usize], epsilon: f64, nmax: usize) -> Result<LocalizationReport> {
    if ns.len() < 4 {
        return Err(Error::InvalidArgument(format!("a sweep needs at least 4 values of N, got {}", ns.len())));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("sweep must be strictly increasing".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside (0, 1)")));
    }
    let models = ns
        .par_iter()
        .map(|&n| t_matrix(&moment_summary(&spec.with_n(n)?, nmax)?))
        .collect::<Result<Vec<_>>>()?;
    let eig: Vec<Eigen3> = models.iter().map(GaussianModel::eigen).collect();
    let mut exponents = [0.0; 3];
    for (j, e) in exponents.iter_mut().enumerate() {
        let lambdas: Vec<f64> = eig.iter().map(|x| x.values[j]).collect();
        *e = growth_exponent(ns, &lambdas);
    }
    let delocalized = exponents.map(|e| e >= 1.0 - epsilon);
    Ok(LocalizationReport {
        state: spec.label(),
        ns: ns.to_vec(),
        eigenvalues: eig.iter().map(|e| e.values).collect(),
        axes: eig.iter().map(|e| e.vectors).collect(),
        trace_t: models.iter().map(GaussianModel::trace).collect(),
        exponents,
        epsilon,
        delocalized,
        localized: !delocalized.iter().any(|d| *d),
    })
}
