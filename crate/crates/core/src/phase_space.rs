//! Discrete phase space of N qubits: coherent states, Q-functions, the
//! mapping kernel and symbols of collective operators.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitstring::{walsh_hadamard, BitString};
use crate::error::{Error, Result};
use crate::projection::Census;
use crate::series::Series;
use crate::states::{fiducial_qubit, Prepared, StateVector};

/// A point (α, β) of the discrete phase space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhasePoint {
    alpha: BitString,
    beta: BitString,
}

impl PhasePoint {
    pub fn new(alpha: BitString, beta: BitString) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::LengthMismatch(alpha.len(), beta.len()));
        }
        Ok(Self { alpha, beta })
    }

    pub fn origin(n: usize) -> Result<Self> {
        Self::new(BitString::zeros(n)?, BitString::zeros(n)?)
    }

    pub fn alpha(&self) -> &BitString {
        &self.alpha
    }

    pub fn beta(&self) -> &BitString {
        &self.beta
    }

    pub fn n_qubits(&self) -> usize {
        self.alpha.len()
    }

    /// Counts of the four local types (α_j, β_j).
    pub fn census(&self) -> Census {
        let (a, b) = (self.alpha.bits(), self.beta.bits());
        let t11 = (a & b).count_ones() as usize;
        let t10 = (a & !b).count_ones() as usize;
        let t01 = (!a & b).count_ones() as usize;
        let t00 = self.n_qubits() - t11 - t10 - t01;
        Census { t00, t10, t01, t11 }
    }
}

/// ⟨ξ|Z_γ X_δ|ξ⟩ = 3^{−(h(γ)+h(δ)+h(γ+δ))/4} · i^{(h(γ)+h(δ)−h(γ+δ))/2}.
pub fn fiducial_overlap(gamma: &BitString, delta: &BitString) -> Result<Complex64> {
    let sum = gamma.checked_xor(delta)?;
    let (hg, hd, hs) = (gamma.weight(), delta.weight(), sum.weight());
    let modulus = 3f64.powf(-((hg + hd + hs) as f64) / 4.0);
    let phase = match ((hg + hd - hs) / 2) % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    Ok(phase * modulus)
}

fn check_nmax(n: usize, nmax: usize, what: &'static str) -> Result<()> {
    let limit = nmax.min(30);
    if n > limit {
        return Err(Error::TooManyQubits { n, limit, what });
    }
    Ok(())
}

/// The fiducial product vector ξ_κ = Π_j ξ_{κ_j}.
fn fiducial_product(n: usize) -> Vec<Complex64> {
    let xi = fiducial_qubit();
    let mut v = vec![Complex64::new(1.0, 0.0)];
    for j in 0..n {
        let mut next = vec![Complex64::new(0.0, 0.0); v.len() * 2];
        let (lo, hi) = next.split_at_mut(1 << j);
        for (i, a) in v.iter().enumerate() {
            lo[i] = a * xi[0];
            hi[i] = a * xi[1];
        }
        v = next;
    }
    v
}

/// |α, β⟩ = Z_α X_β |ξ⟩ with zero phase: amplitude (−1)^{α·κ} ξ_{κ+β} at κ.
pub fn dcs_vector(p: &PhasePoint, nmax: usize) -> Result<StateVector> {
    let n = p.n_qubits();
    check_nmax(n, nmax, "coherent state vector")?;
    let f = fiducial_product(n);
    let (a, b) = (p.alpha.bits() as usize, p.beta.bits() as usize);
    let amps = (0..1usize << n)
        .map(|kappa| {
            let v = f[kappa ^ b];
            if (kappa & a).count_ones() % 2 == 1 {
                -v
            } else {
                v
            }
        })
        .collect();
    StateVector::new(amps)
}

/// Q_ρ(α, β) = Σ_i w_i |⟨α,β|ψ_i⟩|² through one dense inner product.
pub fn q_at_point_dense(state: &Prepared, p: &PhasePoint) -> Result<f64> {
    let n = state.n_qubits();
    if p.n_qubits() != n {
        return Err(Error::LengthMismatch(p.n_qubits(), n));
    }
    let dcs = dcs_vector(p, usize::MAX)?;
    Ok(state.components().iter().map(|(w, s)| w * dcs.inner(s).norm_sqr()).sum())
}

/// Number of β blocks; fixed so that reductions do not depend on the pool size.
const BETA_CHUNKS: usize = 256;

/// Streams Q(·, β) rows for every β, in parallel over fixed β blocks.
///
/// `fold` sees each row once; block accumulators are combined in β order,
/// so the result is independent of the thread count.
pub(crate) fn fold_q_rows<A, I, F, C>(
    state: &Prepared,
    nmax: usize,
    init: I,
    fold: F,
    combine: C,
) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, u64, &[f64]) + Sync,
    C: Fn(A, A) -> A,
{
    let n = state.n_qubits();
    check_nmax(n, nmax, "brute-force Q-function")?;
    let dim = 1usize << n;
    let f = fiducial_product(n);
    let comps = state.components();
    let chunks = BETA_CHUNKS.min(dim);
    let per = dim / chunks;
    let partials: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let mut g = vec![Complex64::new(0.0, 0.0); dim];
            let mut row = vec![0.0; dim];
            for beta in c * per..(c + 1) * per {
                row.iter_mut().for_each(|r| *r = 0.0);
                for (w, psi) in &comps {
                    for (kappa, (gk, amp)) in g.iter_mut().zip(psi.amplitudes()).enumerate() {
                        *gk = f[kappa ^ beta].conj() * amp;
                    }
                    walsh_hadamard(&mut g).expect("power-of-two length");
                    for (r, x) in row.iter_mut().zip(&g) {
                        *r += w * x.norm_sqr();
                    }
                }
                fold(&mut acc, beta as u64, &row);
            }
            acc
        })
        .collect();
    let mut it = partials.into_iter();
    let first = it.next().expect("at least one block");
    Ok(it.fold(first, combine))
}

/// Dense Q-function on all 4^N points, stored as `values[β·2^N + α]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QGrid {
    n: usize,
    values: Vec<f64>,
}

impl QGrid {
    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, p: &PhasePoint) -> f64 {
        self.values[((p.beta.bits() as usize) << self.n) | p.alpha.bits() as usize]
    }

    /// Σ_{α,β} Q(α, β), summed in index order.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `(point, value)` pairs in (β, α) index order.
    pub fn iter(&self) -> impl Iterator<Item = (PhasePoint, f64)> + '_ {
        let n = self.n;
        let mask = (1usize << n) - 1;
        self.values.iter().enumerate().map(move |(i, v)| {
            let p = PhasePoint {
                alpha: BitString::from_raw((i & mask) as u64, n),
                beta: BitString::from_raw((i >> n) as u64, n),
            };
            (p, *v)
        })
    }

    /// CSV rows `alpha,beta,value` with bit-string literals.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "alpha,beta,value")?;
        for (p, v) in self.iter() {
            writeln!(w, "{},{},{:.17e}", p.alpha, p.beta, v)?;
        }
        Ok(())
    }
}

/// Full Q-function by a Walsh–Hadamard transform per β, O(N·4^N).
pub fn q_grid_bruteforce(state: &Prepared, nmax: usize) -> Result<QGrid> {
    let n = state.n_qubits();
    let dim = 1usize << n;
    let blocks = fold_q_rows(
        state,
        nmax,
        Vec::new,
        |acc: &mut Vec<f64>, _beta, row| acc.extend_from_slice(row),
        |mut a, b| {
            a.extend(b);
            a
        },
    )?;
    debug_assert_eq!(blocks.len(), dim * dim);
    Ok(QGrid { n, values: blocks })
}

/// Which member of the s-parametrized kernel family to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelOrder {
    /// s = −1: Q-symbols.
    Q,
    /// s = 0: phase left as i^{γ·δ}; not a valid Wigner kernel.
    Unphased,
    /// s = 1: P-symbols.
    P,
}

impl KernelOrder {
    fn s(self) -> i32 {
        match self {
            KernelOrder::Q => -1,
            KernelOrder::Unphased => 0,
            KernelOrder::P => 1,
        }
    }
}

/// Largest N for which the dense kernel is materialized.
pub const KERNEL_NMAX: usize = 5;

/// Z_γ X_δ as a dense matrix.
fn monomial(n: usize, gamma: usize, delta: usize) -> DMatrix<Complex64> {
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for kappa in 0..dim {
        let row = kappa ^ delta;
        let sign = if (gamma & row).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        m[(row, kappa)] = Complex64::new(sign, 0.0);
    }
    m
}

/// Mapping kernel
/// Δ^(s)(α,β) = 2^{−N(s+3)/2} Σ_{γ,δ} (−1)^{α·δ+β·γ} θ(γ,δ)^{(1−s)/2} ⟨ξ|Z_γX_δ|ξ⟩^{−s} Z_γ X_δ
/// with θ(γ,δ) = (−1)^{Σγ_jδ_j}.
///
/// Validation only: O(16^N) work, so N ≤ 5. For s = 0 the square root of θ
/// is taken as i^{Σγ_jδ_j}, which is one arbitrary branch; the second return
/// value is `false` in that case to flag it.
pub fn kernel_delta(p: &PhasePoint, order: KernelOrder) -> Result<(DMatrix<Complex64>, bool)> {
    let n = p.n_qubits();
    if n > KERNEL_NMAX {
        return Err(Error::TooManyQubits { n, limit: KERNEL_NMAX, what: "dense kernel" });
    }
    let dim = 1usize << n;
    let s = order.s();
    let (a, b) = (p.alpha.bits() as usize, p.beta.bits() as usize);
    let mut out = DMatrix::zeros(dim, dim);
    for gamma in 0..dim {
        for delta in 0..dim {
            let g = BitString::from_raw(gamma as u64, n);
            let d = BitString::from_raw(delta as u64, n);
            let overlap = fiducial_overlap(&g, &d)?;
            let common = (gamma & delta).count_ones() as i32;
            let sign = if ((a & delta).count_ones() + (b & gamma).count_ones()) % 2 == 1 { -1.0 } else { 1.0 };
            // θ^{(1−s)/2} with θ = (−1)^common = i^{2·common}
            let theta = Complex64::i().powi(common * (1 - s));
            let coeff = theta * sign * overlap.powi(-s);
            out += monomial(n, gamma, delta) * coeff;
        }
    }
    let scale = 2f64.powf(-(n as f64) * (s + 3) as f64 / 2.0);
    Ok((out * Complex64::new(scale, 0.0), s != 0))
}

/// Per-type spin direction s = ((−1)^a, (−1)^{a+b}, (−1)^b) in (x, y, z) order;
/// the local Bloch vector of Z^a X^b |ξ⟩ is s/√3.
pub fn type_signs(a: bool, b: bool) -> [f64; 3] {
    let sg = |x: bool| if x { -1.0 } else { 1.0 };
    [sg(a), sg(a ^ b), sg(b)]
}

/// The four local types in census order (00, 10, 01, 11) as (α_j, β_j).
pub const TYPES: [(bool, bool); 4] = [(false, false), (true, false), (false, true), (true, true)];

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn check_direction(dir: &[f64; 3]) -> Result<()> {
    let norm = dot(dir, dir).sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("direction must be a unit vector, |n| = {norm}")));
    }
    Ok(())
}

/// ⟨α,β| exp(λ S·n) |α,β⟩ as a series in λ up to `order`, for a point of the
/// given census. Moments of S·n are `r!·[λ^r]`.
///
/// Each qubit contributes cosh λ + (n·s)/√3 · sinh λ.
pub fn q_symbol_series(dir: &[f64; 3], census: &Census, order: usize) -> Result<Series> {
    check_direction(dir)?;
    let (c, s) = (Series::cosh(order), Series::sinh(order));
    let mut out = Series::one(order);
    for ((a, b), t) in TYPES.iter().zip(census.counts()) {
        let f = &c + &s.scale_re(dot(dir, &type_signs(*a, *b)) / 3f64.sqrt());
        out = &out * &f.powi(t as u64);
    }
    Ok(out)
}

/// 2^N · P-symbol of exp(λ S·n) as a series in λ.
///
/// Each qubit contributes cosh λ + √3 (n·s) sinh λ; the 2^{−N} prefactor is
/// left out so that products with Q̃ stay O(1).
pub fn p_symbol_series_scaled(dir: &[f64; 3], census: &Census, order: usize) -> Result<Series> {
    check_direction(dir)?;
    let (c, s) = (Series::cosh(order), Series::sinh(order));
    let mut out = Series::one(order);
    for ((a, b), t) in TYPES.iter().zip(census.counts()) {
        let f = &c + &s.scale_re(3f64.sqrt() * dot(dir, &type_signs(*a, *b)));
        out = &out * &f.powi(t as u64);
    }
    Ok(out)
}

/// The product formula for the Q-symbol of exp(λ S·n) at finite λ.
pub fn q_symbol_exp_collective(lambda: f64, dir: &[f64; 3], census: &Census) -> Result<f64> {
    check_direction(dir)?;
    let (ch, sh) = (lambda.cosh(), lambda.sinh());
    Ok(TYPES
        .iter()
        .zip(census.counts())
        .map(|((a, b), t)| (ch + sh * dot(dir, &type_signs(*a, *b)) / 3f64.sqrt()).powi(t as i32))
        .product())
}

/// Coordinate axis of the measurement space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn unit(self) -> [f64; 3] {
        match self {
            Axis::X => [1.0, 0.0, 0.0],
            Axis::Y => [0.0, 1.0, 0.0],
            Axis::Z => [0.0, 0.0, 1.0],
        }
    }

    /// The weight that tracks this spin component: x ↔ m, y ↔ k, z ↔ n.
    pub fn weight(self, census: &Census) -> usize {
        match self {
            Axis::X => census.m(),
            Axis::Y => census.k(),
            Axis::Z => census.n(),
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidArgument(format!("unknown axis `{other}`"))),
        }
    }
}

/// P-symbol of S_a^power (power 1..=4) as a polynomial in the weight fraction
/// `x` of the chosen axis.
pub fn p_symbol_collective(power: u32, x: f64, n_qubits: usize) -> Result<f64> {
    let nn = n_qubits as f64;
    let u = 2.0 * x - 1.0;
    let pre = 2f64.powi(-(n_qubits as i32));
    let s3 = 3f64.sqrt();
    let value = match power {
        1 => -nn * s3 * u,
        2 => 3.0 * u * u * nn * nn - 2.0 * nn,
        3 => -s3.powi(3) * u.powi(3) * nn.powi(3) + 2.0 * s3.powi(3) * u * nn * nn - 4.0 * s3 * nn * u,
        4 => {
            9.0 * u.powi(4) * nn.powi(4) - 36.0 * u * u * nn.powi(3)
                + 12.0 * (16.0 * x * x - 16.0 * x + 5.0) * nn * nn
                - 32.0 * nn
        }
        p => {
            return Err(Error::InvalidArgument(format!(
                "P-symbol polynomials are available for powers 1..=4, got {p}"
            )))
        }
    };
    Ok(pre * value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{build_state, StateSpec};
    use approx::assert_relative_eq;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn pt(a: &str, b: &str) -> PhasePoint {
        PhasePoint::new(bs(a), bs(b)).unwrap()
    }

    #[test]
    fn overlap_examples() {
        let z = bs("000");
        assert_relative_eq!(fiducial_overlap(&z, &z).unwrap().re, 1.0);
        let g = fiducial_overlap(&bs("100"), &z).unwrap();
        assert_relative_eq!(g.re, 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        // ⟨ξ|σ_z σ_x|ξ⟩ from the 2×2 matrices directly
        let [x0, x1] = fiducial_qubit();
        let direct = x0.conj() * x1 - x1.conj() * x0;
        let law = fiducial_overlap(&bs("1"), &bs("1")).unwrap();
        assert!((direct - law).norm() < 1e-15);
        assert!((law - Complex64::new(0.0, 1.0 / 3f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn overlap_law_matches_dense_vectors() {
        let n = 4;
        let origin = dcs_vector(&PhasePoint::origin(n).unwrap(), 12).unwrap();
        for g in 0..16u64 {
            for d in 0..16u64 {
                let (gb, db) = (BitString::new(g, n).unwrap(), BitString::new(d, n).unwrap());
                // Z_γ X_δ |ξ⟩ is the DCS (γ, δ)
                let v = dcs_vector(&PhasePoint::new(gb, db).unwrap(), 12).unwrap();
                let direct = origin.inner(&v);
                assert!((direct - fiducial_overlap(&gb, &db).unwrap()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn brute_force_fiducial_grid_is_step_like() {
        let state = build_state(&StateSpec::fiducial(5), 12).unwrap();
        let grid = q_grid_bruteforce(&state, 12).unwrap();
        for (p, q) in grid.iter() {
            let c = p.census();
            let expect = 3f64.powf(-((c.m() + c.n() + c.k()) as f64) / 2.0);
            assert_relative_eq!(q, expect, max_relative = 1e-12);
        }
        assert_relative_eq!(grid.total(), 32.0, max_relative = 1e-12);
    }

    #[test]
    fn brute_force_matches_dense_inner_products() {
        let spec = StateSpec::dcs("0110", "1011").unwrap();
        let state = build_state(&StateSpec::w(4), 12).unwrap();
        let grid = q_grid_bruteforce(&state, 12).unwrap();
        for (p, q) in grid.iter() {
            assert_relative_eq!(q, q_at_point_dense(&state, &p).unwrap(), epsilon = 1e-14);
        }
        let dcs = build_state(&spec, 12).unwrap();
        let g = q_grid_bruteforce(&dcs, 12).unwrap();
        assert_relative_eq!(g.get(&pt("0110", "1011")), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn brute_force_respects_nmax() {
        let state = build_state(&StateSpec::ghz(6), 12).unwrap();
        assert!(matches!(q_grid_bruteforce(&state, 5), Err(Error::TooManyQubits { .. })));
    }

    #[test]
    fn q_kernel_is_the_projector() {
        for (a, b) in [("0", "0"), ("1", "0"), ("0", "1"), ("1", "1"), ("01", "11")] {
            let p = pt(a, b);
            let (k, phased) = kernel_delta(&p, KernelOrder::Q).unwrap();
            assert!(phased);
            let v = dcs_vector(&p, 12).unwrap();
            let proj = DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| {
                v.amplitudes()[i] * v.amplitudes()[j].conj()
            });
            assert!((k - proj).norm() < 1e-13);
        }
        assert!(!kernel_delta(&pt("0", "0"), KernelOrder::Unphased).unwrap().1);
    }

    #[test]
    fn csv_export() {
        let state = build_state(&StateSpec::basis("1").unwrap(), 12).unwrap();
        let grid = q_grid_bruteforce(&state, 12).unwrap();
        let mut out = Vec::new();
        grid.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "alpha,beta,value");
        assert!(lines[1].starts_with("0,0,"));
    }

    #[test]
    fn appendix_polynomials_match_series() {
        let n = 7;
        for m in 0..=n {
            let c = Census { t00: n - m, t10: m, t01: 0, t11: 0 };
            let p = p_symbol_series_scaled(&Axis::X.unit(), &c, 4).unwrap();
            for r in 1..=4u32 {
                let series = p.derivative_at_zero(r as usize).re / 2f64.powi(n as i32);
                let poly = p_symbol_collective(r, m as f64 / n as f64, n).unwrap();
                assert_relative_eq!(series, poly, epsilon = 1e-12, max_relative = 1e-12);
            }
        }
        assert_relative_eq!(p_symbol_collective(2, 0.0, 1).unwrap(), 0.5);
        assert_eq!(p_symbol_collective(1, 0.5, 9).unwrap(), 0.0);
        assert!(p_symbol_collective(5, 0.5, 9).is_err());
    }

    #[test]
    fn q_symbol_limits() {
        let c = Census { t00: 2, t10: 1, t01: 3, t11: 1 };
        let d = [0.6, 0.0, 0.8];
        assert_eq!(q_symbol_exp_collective(0.0, &d, &c).unwrap(), 1.0);
        let series = q_symbol_series(&d, &c, 6).unwrap();
        let lam: f64 = 1e-2;
        let approx: f64 = (0..=6).map(|j| series.coeff(j).re * lam.powi(j as i32)).sum();
        assert_relative_eq!(q_symbol_exp_collective(lam, &d, &c).unwrap(), approx, max_relative = 1e-13);
        assert!(q_symbol_series(&[1.0, 1.0, 0.0], &c, 2).is_err());
    }
}
