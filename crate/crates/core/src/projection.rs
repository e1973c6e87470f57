//! Projection of Q-functions onto the (m, n, k) weight lattice of symmetric
//! measurements.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::bitstring::BitString;
use crate::error::{Error, Result};
use crate::phase_space::{fold_q_rows, PhasePoint};
use crate::states::{
    fiducial_probs, ln_q_at_point, ln_q_ghz_like, ln_q_symmetric, local_dcs_amplitude, log_sum_exp,
    pair_amplitudes, Family, Prepared, StateSpec,
};

/// A weight triple (m, n, k) = (h(α), h(β), h(α + β)).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub m: usize,
    pub n: usize,
    pub k: usize,
}

impl Triple {
    pub fn new(m: usize, n: usize, k: usize) -> Self {
        Self { m, n, k }
    }

    /// m + n + k even, |m − n| ≤ k ≤ min(m + n, 2N − m − n), all ≤ N.
    pub fn is_valid(&self, n_qubits: usize) -> bool {
        let Triple { m, n, k } = *self;
        let nq = n_qubits;
        m <= nq
            && n <= nq
            && k <= nq
            && (m + n + k) % 2 == 0
            && m.abs_diff(n) <= k
            && k <= (m + n).min(2 * nq - m - n)
    }

    pub fn census(&self, n_qubits: usize) -> Result<Census> {
        if !self.is_valid(n_qubits) {
            return Err(Error::InvalidTriple { m: self.m, n: self.n, k: self.k, n_qubits });
        }
        let Triple { m, n, k } = *self;
        Ok(Census {
            t00: n_qubits - (m + n + k) / 2,
            t10: (m + k - n) / 2,
            t01: (n + k - m) / 2,
            t11: (m + n - k) / 2,
        })
    }

    /// Scaled coordinates (x, y, z) = (m, k, n)/N.
    pub fn scaled(&self, n_qubits: usize) -> [f64; 3] {
        let nq = n_qubits as f64;
        [self.m as f64 / nq, self.k as f64 / nq, self.n as f64 / nq]
    }
}

/// Counts of the local types (α_j, β_j) ∈ {00, 10, 01, 11} at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Census {
    pub t00: usize,
    pub t10: usize,
    pub t01: usize,
    pub t11: usize,
}

impl Census {
    pub fn n_qubits(&self) -> usize {
        self.t00 + self.t10 + self.t01 + self.t11
    }

    pub fn m(&self) -> usize {
        self.t10 + self.t11
    }

    pub fn n(&self) -> usize {
        self.t01 + self.t11
    }

    pub fn k(&self) -> usize {
        self.t10 + self.t01
    }

    pub fn triple(&self) -> Triple {
        Triple::new(self.m(), self.n(), self.k())
    }

    /// Counts in (00, 10, 01, 11) order.
    pub fn counts(&self) -> [usize; 4] {
        [self.t00, self.t10, self.t01, self.t11]
    }
}

/// All valid triples for a given N, in lexicographic (m, n, k) order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasLattice {
    n: usize,
    triples: Vec<Triple>,
}

impl MeasLattice {
    pub fn new(n_qubits: usize) -> Self {
        let mut triples = Vec::with_capacity(lattice_size(n_qubits));
        for m in 0..=n_qubits {
            for n in 0..=n_qubits {
                let lo = m.abs_diff(n);
                let hi = (m + n).min(2 * n_qubits - m - n);
                triples.extend((lo..=hi).step_by(2).map(|k| Triple { m, n, k }));
            }
        }
        Self { n: n_qubits, triples }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

/// Number of valid triples, C(N + 3, 3).
pub fn lattice_size(n_qubits: usize) -> usize {
    let n = n_qubits;
    (n + 1) * (n + 2) * (n + 3) / 6
}

pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n as u64) - ln_factorial(k as u64) - ln_factorial((n - k) as u64)
}

/// ln R_mnk, the log of the number of points with weights (m, n, k);
/// −∞ for an invalid triple.
pub fn r_mnk(n_qubits: usize, t: Triple) -> f64 {
    match t.census(n_qubits) {
        Ok(c) => {
            ln_factorial(n_qubits as u64)
                - c.counts().iter().map(|x| ln_factorial(*x as u64)).sum::<f64>()
        }
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Largest N for the exact integer count.
pub const R_EXACT_NMAX: usize = 20;

fn binomial_u128(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// R_mnk as an exact integer for N ≤ 20; zero for an invalid triple.
pub fn r_mnk_exact(n_qubits: usize, t: Triple) -> Result<u128> {
    if n_qubits > R_EXACT_NMAX {
        return Err(Error::TooManyQubits { n: n_qubits, limit: R_EXACT_NMAX, what: "exact R_mnk" });
    }
    let Ok(c) = t.census(n_qubits) else { return Ok(0) };
    let mut rest = n_qubits as u128;
    let mut total = 1u128;
    for x in c.counts() {
        total *= binomial_u128(rest, x as u128);
        rest -= x as u128;
    }
    Ok(total)
}

/// Canonical point with the given weights: α covers qubits 1..m and β covers
/// qubits m − t + 1 .. m − t + n, where t = (m + n − k)/2 is the overlap.
pub fn representative(t: Triple, n_qubits: usize) -> Result<PhasePoint> {
    let c = t.census(n_qubits)?;
    if n_qubits > crate::bitstring::MAX_QUBITS {
        return Err(Error::TooManyQubits {
            n: n_qubits,
            limit: crate::bitstring::MAX_QUBITS,
            what: "representative point",
        });
    }
    let alpha = BitString::leading_ones(n_qubits, t.m)?;
    let start = t.m - c.t11;
    let beta_bits = (start..start + t.n).fold(0u64, |acc, j| acc | (1 << j));
    PhasePoint::new(alpha, BitString::new(beta_bits, n_qubits)?)
}

/// How a projection was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Analytic,
    Bruteforce,
}

/// Projected Q̃ on the lattice, stored as natural logs in lexicographic
/// order. Exact zeros are −∞.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectedQ {
    n_qubits: usize,
    source: Source,
    label: String,
    triples: Vec<Triple>,
    ln_values: Vec<f64>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    n_qubits: usize,
    source: Source,
    state: &'a str,
    n_points: usize,
    normalization: f64,
    expected_normalization: f64,
    coordinates: &'static str,
}

impl ProjectedQ {
    pub fn new(n_qubits: usize, source: Source, label: String, entries: Vec<(Triple, f64)>) -> Result<Self> {
        if let Some((t, _)) = entries.iter().find(|(t, _)| !t.is_valid(n_qubits)) {
            return Err(Error::InvalidTriple { m: t.m, n: t.n, k: t.k, n_qubits });
        }
        let (triples, ln_values) = entries.into_iter().unzip();
        Ok(Self { n_qubits, source, label, triples, ln_values })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// `(triple, ln Q̃)` pairs in lexicographic order.
    pub fn iter_ln(&self) -> impl Iterator<Item = (Triple, f64)> + '_ {
        self.triples.iter().copied().zip(self.ln_values.iter().copied())
    }

    /// `(triple, Q̃)` pairs in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (Triple, f64)> + '_ {
        self.iter_ln().map(|(t, v)| (t, v.exp()))
    }

    pub fn ln_value(&self, t: Triple) -> Option<f64> {
        self.triples.binary_search(&t).ok().map(|i| self.ln_values[i])
    }

    pub fn value(&self, t: Triple) -> Option<f64> {
        self.ln_value(t).map(f64::exp)
    }

    pub fn ln_total(&self) -> f64 {
        log_sum_exp(&self.ln_values)
    }

    pub fn total(&self) -> f64 {
        self.ln_total().exp()
    }

    /// Point cloud rows `x y z value` with (x, y, z) = (m, k, n)/N.
    pub fn write_xyz<W: Write>(&self, mut w: W) -> Result<()> {
        for (t, v) in self.iter() {
            let [x, y, z] = t.scaled(self.n_qubits);
            writeln!(w, "{x:.17e} {y:.17e} {z:.17e} {v:.17e}")?;
        }
        Ok(())
    }

    /// CSV rows `m,n,k,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "m,n,k,value")?;
        for (t, v) in self.iter() {
            writeln!(w, "{},{},{},{v:.17e}", t.m, t.n, t.k)?;
        }
        Ok(())
    }

    /// Metadata accompanying an exported point cloud.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::to_value(Sidecar {
            n_qubits: self.n_qubits,
            source: self.source,
            state: &self.label,
            n_points: self.len(),
            normalization: self.total(),
            expected_normalization: 2f64.powi(self.n_qubits as i32),
            coordinates: "x = m/N, y = k/N, z = n/N",
        })
        .expect("sidecar serializes")
    }
}

fn project_lattice<F>(spec: &StateSpec, f: F) -> Result<ProjectedQ>
where
    F: Fn(Triple) -> Result<f64> + Sync,
{
    let n = spec.n();
    let lattice = MeasLattice::new(n);
    let entries = lattice
        .triples()
        .par_iter()
        .map(|&t| f(t).map(|v| (t, v)))
        .collect::<Result<Vec<_>>>()?;
    ProjectedQ::new(n, Source::Analytic, spec.label(), entries)
}

/// Q̃ = Q(representative) · R_mnk for a permutation-symmetric state.
///
/// Q is evaluated at the representative point when N ≤ 64 and from the
/// weight census beyond that; both give the same closed form.
pub fn project_symmetric(spec: &StateSpec) -> Result<ProjectedQ> {
    if !spec.is_permutation_symmetric() {
        return Err(Error::NotSymmetric(spec.label()));
    }
    let n = spec.n();
    project_lattice(spec, |t| {
        let ln_q = if n <= crate::bitstring::MAX_QUBITS {
            ln_q_at_point(spec, &representative(t, n)?)?
        } else {
            ln_q_symmetric(spec, &t.census(n)?)?
        };
        Ok(ln_q + r_mnk(n, t))
    })
}

/// Largest N for the dynamic-programming projection of product states.
pub const PRODUCT_DP_NMAX: usize = 160;

/// One factor of a product state: the increments it adds to the census and
/// the Q-mass of each increment (masses sum to 2^{qubits in the factor}).
struct Factor {
    moves: Vec<([usize; 4], f64)>,
}

fn qubit_factor(mu: bool, nu: bool) -> Factor {
    // Q of the single-qubit DCS (μ, ν) at (a, b) is 3^{−w/2}, w = h(a+μ) + h(b+ν) + h(a+b+μ+ν)
    let moves = crate::phase_space::TYPES
        .iter()
        .enumerate()
        .map(|(idx, &(a, b))| {
            let (x, y) = (a ^ mu, b ^ nu);
            let w = x as i32 + y as i32 + (x ^ y) as i32;
            let mut inc = [0; 4];
            inc[idx] = 1;
            (inc, 3f64.powf(-w as f64 / 2.0))
        })
        .collect();
    Factor { moves }
}

fn pair_factor(pair: &[Complex64; 4]) -> Factor {
    let types = crate::phase_space::TYPES;
    let mut moves = Vec::with_capacity(16);
    for (i1, &(a1, b1)) in types.iter().enumerate() {
        for (i2, &(a2, b2)) in types.iter().enumerate() {
            let mut amp = Complex64::new(0.0, 0.0);
            for (idx, psi) in pair.iter().enumerate() {
                let (c1, c2) = (idx & 1 == 1, idx & 2 == 2);
                amp += (local_dcs_amplitude(a1, b1, c1) * local_dcs_amplitude(a2, b2, c2)).conj() * psi;
            }
            let mut inc = [0; 4];
            inc[i1] += 1;
            inc[i2] += 1;
            moves.push((inc, amp.norm_sqr()));
        }
    }
    Factor { moves }
}

/// Exact Q̃ of a product state by dynamic programming over the census
/// (t10, t01, t11); t00 is implied. Masses are normalized per factor, so
/// entries below ~1e−308 of the total flush to zero.
fn project_product(spec: &StateSpec, factors: Vec<Factor>) -> Result<ProjectedQ> {
    let n = spec.n();
    if n > PRODUCT_DP_NMAX {
        return Err(Error::TooManyQubits { n, limit: PRODUCT_DP_NMAX, what: "product-state projection" });
    }
    let side = n + 1;
    let idx = |a: usize, b: usize, c: usize| (a * side + b) * side + c;
    let mut table = vec![0.0f64; side * side * side];
    table[0] = 1.0;
    let mut used = 0usize;
    for f in &factors {
        let width: usize = f.moves[0].0.iter().sum();
        let scale: f64 = f.moves.iter().map(|(_, w)| w).sum();
        let mut next = vec![0.0f64; table.len()];
        for a in 0..=used {
            for b in 0..=used - a {
                for c in 0..=used - a - b {
                    let v = table[idx(a, b, c)];
                    if v == 0.0 {
                        continue;
                    }
                    for (inc, w) in &f.moves {
                        next[idx(a + inc[1], b + inc[2], c + inc[3])] += v * w / scale;
                    }
                }
            }
        }
        table = next;
        used += width;
    }
    let ln_norm = n as f64 * 2f64.ln();
    let entries = MeasLattice::new(n)
        .triples()
        .iter()
        .map(|&t| {
            let c = t.census(n).expect("lattice triple");
            (t, table[idx(c.t10, c.t01, c.t11)].ln() + ln_norm)
        })
        .collect();
    ProjectedQ::new(n, Source::Analytic, spec.label(), entries)
}

/// Closed-form Q̃ evaluator for one state spec.
pub struct AnalyticProjector<'a> {
    spec: &'a StateSpec,
    method: Method,
}

enum Method {
    Symmetric,
    /// Q depends only on h(α) and h(β + ν) for a fixed ν of weight `w`.
    Shifted { w: usize, ghz: bool },
    Product(ProjectedQ),
}

impl<'a> AnalyticProjector<'a> {
    pub fn new(spec: &'a StateSpec) -> Result<Self> {
        let n = spec.n();
        let method = if spec.is_permutation_symmetric() {
            Method::Symmetric
        } else {
            match spec.family() {
                Family::Basis { kappa } => Method::Shifted { w: kappa.weight(), ghz: false },
                Family::ShiftedGhz { nu } => Method::Shifted { w: nu.weight(), ghz: true },
                Family::Dcs { mu, nu } => {
                    let factors = (0..n).map(|j| qubit_factor(mu.get(j), nu.get(j))).collect();
                    Method::Product(project_product(spec, factors)?)
                }
                Family::BiseparableA { .. } | Family::GraphPairs => {
                    let pair = pair_amplitudes(spec.family()).expect("pairwise family");
                    let factors = (0..n / 2).map(|_| pair_factor(&pair)).collect();
                    Method::Product(project_product(spec, factors)?)
                }
                other => {
                    return Err(Error::Unsupported {
                        family: other.name().to_string(),
                        what: "analytic projection",
                    })
                }
            }
        };
        Ok(Self { spec, method })
    }

    /// ln Q̃(m, n, k); −∞ for an invalid triple.
    pub fn ln_q(&self, t: Triple) -> Result<f64> {
        let n = self.spec.n();
        let Ok(c) = t.census(n) else { return Ok(f64::NEG_INFINITY) };
        match &self.method {
            Method::Symmetric => Ok(ln_q_symmetric(self.spec, &c)? + r_mnk(n, t)),
            Method::Shifted { w, ghz } => {
                // α choices for fixed β, times β choices by overlap i with ν
                let head = ln_binomial(t.n, c.t11) + ln_binomial(n - t.n, t.m - c.t11);
                let [c0, c1] = fiducial_probs();
                let terms: Vec<f64> = (0..=t.n.min(*w))
                    .filter(|i| t.n - i <= n - w)
                    .map(|i| {
                        let shifted = w + t.n - 2 * i;
                        let ln_q = if *ghz {
                            ln_q_ghz_like(n, t.m, shifted)
                        } else {
                            (n - shifted) as f64 * c0.ln() + shifted as f64 * c1.ln()
                        };
                        ln_binomial(*w, i) + ln_binomial(n - w, t.n - i) + ln_q
                    })
                    .collect();
                Ok(head + log_sum_exp(&terms))
            }
            Method::Product(pq) => Ok(pq.ln_value(t).unwrap_or(f64::NEG_INFINITY)),
        }
    }
}

/// Closed-form projection for every family that has one: symmetric states,
/// basis and shifted GHZ states with any pattern, and product states.
pub fn project_analytic(spec: &StateSpec) -> Result<ProjectedQ> {
    let proj = AnalyticProjector::new(spec)?;
    if let Method::Product(pq) = proj.method {
        return Ok(pq);
    }
    project_lattice(spec, |t| proj.ln_q(t))
}

/// Exact projection by binning the brute-force Q-function.
pub fn project_bruteforce(state: &Prepared, nmax: usize, label: &str) -> Result<ProjectedQ> {
    let n = state.n_qubits();
    let side = n + 1;
    let idx = move |t: Triple| (t.m * side + t.n) * side + t.k;
    let hist = fold_q_rows(
        state,
        nmax,
        || vec![0.0f64; side * side * side],
        |acc, beta, row| {
            let nb = beta.count_ones() as usize;
            for (alpha, q) in row.iter().enumerate() {
                let m = alpha.count_ones() as usize;
                let k = (alpha as u64 ^ beta).count_ones() as usize;
                acc[idx(Triple { m, n: nb, k })] += q;
            }
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    )?;
    let entries = MeasLattice::new(n).triples().iter().map(|&t| (t, hist[idx(t)].ln())).collect();
    ProjectedQ::new(n, Source::Bruteforce, label.to_string(), entries)
}

/// ⟨f⟩ = Σ_{m,n,k} P_f(m, n, k) · Q̃(m, n, k), summed in lattice order.
pub fn expectation_from_projection<F>(pq: &ProjectedQ, symbol: F) -> f64
where
    F: Fn(Triple) -> f64,
{
    pq.iter().map(|(t, q)| if q == 0.0 { 0.0 } else { symbol(t) * q }).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lattice_basics() {
        assert_eq!(MeasLattice::new(1).triples(), &[
            Triple::new(0, 0, 0),
            Triple::new(0, 1, 1),
            Triple::new(1, 0, 1),
            Triple::new(1, 1, 0),
        ]);
        for n in 0..12 {
            assert_eq!(MeasLattice::new(n).len(), lattice_size(n));
        }
        assert!(!Triple::new(2, 2, 2).is_valid(2));
        assert!(Triple::new(2, 2, 0).is_valid(2));
    }

    #[test]
    fn r_examples() {
        for t in MeasLattice::new(1).triples() {
            assert_eq!(r_mnk_exact(1, *t).unwrap(), 1);
        }
        assert_eq!(r_mnk_exact(2, Triple::new(1, 1, 0)).unwrap(), 2);
        assert_eq!(r_mnk_exact(3, Triple::new(1, 1, 1)).unwrap(), 0);
        assert_eq!(r_mnk(3, Triple::new(1, 1, 1)), f64::NEG_INFINITY);
        assert!(r_mnk_exact(21, Triple::new(0, 0, 0)).is_err());
        assert_relative_eq!(r_mnk(10, Triple::new(4, 6, 4)).exp(), r_mnk_exact(10, Triple::new(4, 6, 4)).unwrap() as f64, max_relative = 1e-12);
    }

    #[test]
    fn representative_example() {
        let p = representative(Triple::new(2, 1, 1), 3).unwrap();
        assert_eq!(p.alpha().to_string(), "110");
        assert_eq!(p.beta().to_string(), "010");
        assert_eq!(p.alpha().xor(p.beta()).to_string(), "100");
        let z = representative(Triple::new(0, 0, 0), 5).unwrap();
        assert_eq!(z.alpha().weight() + z.beta().weight(), 0);
        assert!(representative(Triple::new(1, 1, 1), 3).is_err());
    }

    #[test]
    fn fiducial_projection_closed_form() {
        let spec = StateSpec::fiducial(12);
        let pq = project_symmetric(&spec).unwrap();
        for (t, v) in pq.iter_ln() {
            let expect = -((t.m + t.n + t.k) as f64) / 2.0 * 3f64.ln() + r_mnk(12, t);
            assert_relative_eq!(v, expect, epsilon = 1e-12);
        }
        assert_relative_eq!(pq.total(), 4096.0, max_relative = 1e-12);
    }

    #[test]
    fn non_symmetric_refused() {
        let spec = StateSpec::basis("0101").unwrap();
        assert!(matches!(project_symmetric(&spec), Err(Error::NotSymmetric(_))));
        let sup = StateSpec::new(
            Family::SuperpositionBasis { kappa1: "0101".parse().unwrap(), kappa2: "0011".parse().unwrap() },
            4,
        )
        .unwrap();
        assert!(matches!(project_analytic(&sup), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn exports() {
        let pq = project_symmetric(&StateSpec::uniform_mixed(1)).unwrap();
        let mut xyz = Vec::new();
        pq.write_xyz(&mut xyz).unwrap();
        let text = String::from_utf8(xyz).unwrap();
        assert_eq!(text.lines().count(), 4);
        let first: Vec<f64> = text.lines().nth(1).unwrap().split(' ').map(|s| s.parse().unwrap()).collect();
        // (m, n, k) = (0, 1, 1) → (x, y, z) = (0, 1, 1)
        assert_eq!(&first[..3], &[0.0, 1.0, 1.0]);
        assert_relative_eq!(first[3], 0.5, epsilon = 1e-15);
        let mut csv = Vec::new();
        pq.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("m,n,k,value\n0,0,0,"));
        assert_eq!(pq.sidecar()["n_points"], 4);
    }
}
