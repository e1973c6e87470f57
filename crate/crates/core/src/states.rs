//! State families: declarative specs, dense construction for small N, and
//! closed-form Q-functions for large N.

use std::f64::consts::{FRAC_PI_4, SQRT_2};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::bitstring::BitString;
use crate::error::{Error, Result};
use crate::phase_space::PhasePoint;
use crate::projection::{ln_binomial, Census, Triple};

/// Default cap on N for dense statevectors and brute-force oracles.
pub const DEFAULT_NMAX_BRUTE: usize = 12;

/// Polar angle of the fiducial qubit, ϑ = arctan √2.
pub fn fiducial_theta() -> f64 {
    SQRT_2.atan()
}

/// Azimuth of the fiducial qubit, φ = π/4.
pub const FIDUCIAL_PHI: f64 = FRAC_PI_4;

/// Single-qubit fiducial amplitudes (cos ϑ/2·e^{−iφ/2}, sin ϑ/2·e^{iφ/2}).
pub fn fiducial_qubit() -> [Complex64; 2] {
    let half = fiducial_theta() / 2.0;
    [
        Complex64::from_polar(half.cos(), -FIDUCIAL_PHI / 2.0),
        Complex64::from_polar(half.sin(), FIDUCIAL_PHI / 2.0),
    ]
}

/// ξ = ξ₁/ξ₀ = (√3 − 1)/√2 · e^{iπ/4}.
pub fn fiducial_ratio() -> Complex64 {
    let [a, b] = fiducial_qubit();
    b / a
}

/// Occupation probabilities (|ξ₀|², |ξ₁|²) = ((1 + 1/√3)/2, (1 − 1/√3)/2).
pub fn fiducial_probs() -> [f64; 2] {
    let [a, b] = fiducial_qubit();
    [a.norm_sqr(), b.norm_sqr()]
}

/// Amplitude of the single-qubit coherent state Z^a X^b |ξ⟩ on basis state `c`.
#[inline]
pub fn local_dcs_amplitude(a: bool, b: bool, c: bool) -> Complex64 {
    let xi = fiducial_qubit();
    let amp = xi[(c ^ b) as usize];
    if a && c {
        -amp
    } else {
        amp
    }
}

/// A binary pattern of arbitrary length used as a family parameter.
///
/// Closed-form paths only need weights, so patterns are not limited to 64
/// positions; dense construction converts them to [`BitString`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pattern(Vec<bool>);

impl Pattern {
    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn ones(len: usize) -> Self {
        Self(vec![true; len])
    }

    pub fn leading_ones(len: usize, weight: usize) -> Self {
        Self((0..len).map(|j| j < weight).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> bool {
        self.0[j]
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|b| *b == self.0[0])
    }

    pub fn to_bitstring(&self) -> Result<BitString> {
        self.to_string().parse()
    }

    /// Same fraction of ones on a different length, packed to the front.
    pub fn rescaled(&self, len: usize) -> Self {
        if self.is_empty() {
            return Self::zeros(len);
        }
        let w = (self.weight() as f64 * len as f64 / self.len() as f64).round() as usize;
        Self::leading_ones(len, w.min(len))
    }

    /// Number of positions where `(self_j, other_j) == (a, b)`.
    pub fn joint_count(&self, other: &Pattern, a: bool, b: bool) -> usize {
        self.0.iter().zip(&other.0).filter(|(x, y)| **x == a && **y == b).count()
    }

    pub fn xor(&self, other: &Pattern) -> Pattern {
        Pattern(self.0.iter().zip(&other.0).map(|(x, y)| x ^ y).collect())
    }
}

impl From<BitString> for Pattern {
    fn from(b: BitString) -> Self {
        Self((0..b.len()).map(|j| b.get(j)).collect())
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Pattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::InvalidBitString("empty pattern".into()));
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidBitString(format!("`{s}` contains `{c}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Pattern)
    }
}

/// The supported state families.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// Z_μ X_ν |ξ⟩.
    Dcs { mu: Pattern, nu: Pattern },
    /// Computational basis state |κ⟩.
    Basis { kappa: Pattern },
    /// (|κ₁⟩ + |κ₂⟩)/√2.
    SuperpositionBasis { kappa1: Pattern, kappa2: Pattern },
    Ghz,
    /// X_ν |GHZ⟩.
    ShiftedGhz { nu: Pattern },
    W,
    /// ⊗ (|01⟩ + a|10⟩)/√(1 + a²) over consecutive pairs.
    BiseparableA { a: f64 },
    /// ⊗ (|00⟩ + |10⟩ + |01⟩ − |11⟩)/2 over consecutive pairs.
    GraphPairs,
    UniformMixed,
    /// Equal-weight mixture of the N + 1 Dicke states.
    DickeUniform,
    /// Dense statevector read from a two-column (re, im) text file.
    Custom { path: PathBuf },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Dcs { .. } => "dcs",
            Family::Basis { .. } => "basis",
            Family::SuperpositionBasis { .. } => "superposition_basis",
            Family::Ghz => "ghz",
            Family::ShiftedGhz { .. } => "shifted_ghz",
            Family::W => "w",
            Family::BiseparableA { .. } => "biseparable_a",
            Family::GraphPairs => "graph_pairs",
            Family::UniformMixed => "uniform_mixed",
            Family::DickeUniform => "dicke_uniform",
            Family::Custom { .. } => "custom",
        }
    }
}

/// A family together with its qubit count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct StateSpec {
    family: Family,
    n: usize,
}

/// JSON wire form: `{"family": "...", "n": int, "params": {...}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawSpec {
    pub family: String,
    pub n: usize,
    #[serde(default)]
    pub params: Map<String, Value>,
}

fn pattern_param(params: &Map<String, Value>, key: &str, n: usize) -> Result<Pattern> {
    let weight_key = format!("{key}_weight");
    match (params.get(key), params.get(&weight_key)) {
        (Some(Value::String(s)), None) => {
            let p: Pattern = s.parse()?;
            if p.len() != n {
                return Err(Error::InvalidSpec(format!(
                    "`{key}` has length {} but n = {n}",
                    p.len()
                )));
            }
            Ok(p)
        }
        (None, Some(w)) => {
            let w = w.as_u64().ok_or_else(|| {
                Error::InvalidSpec(format!("`{weight_key}` must be a non-negative integer"))
            })? as usize;
            if w > n {
                return Err(Error::InvalidSpec(format!("`{weight_key}` = {w} exceeds n = {n}")));
            }
            Ok(Pattern::leading_ones(n, w))
        }
        (None, None) => Ok(Pattern::zeros(n)),
        (Some(_), Some(_)) => {
            Err(Error::InvalidSpec(format!("give either `{key}` or `{weight_key}`, not both")))
        }
        (Some(_), None) => Err(Error::InvalidSpec(format!("`{key}` must be a 0/1 string"))),
    }
}

impl TryFrom<RawSpec> for StateSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let n = raw.n;
        let p = &raw.params;
        let family = match raw.family.as_str() {
            "dcs" => Family::Dcs { mu: pattern_param(p, "mu", n)?, nu: pattern_param(p, "nu", n)? },
            "basis" => Family::Basis { kappa: pattern_param(p, "kappa", n)? },
            "superposition_basis" => Family::SuperpositionBasis {
                kappa1: pattern_param(p, "kappa1", n)?,
                kappa2: pattern_param(p, "kappa2", n)?,
            },
            "ghz" => Family::Ghz,
            "shifted_ghz" => Family::ShiftedGhz { nu: pattern_param(p, "nu", n)? },
            "w" => Family::W,
            "biseparable_a" => {
                let a = p
                    .get("a")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| Error::InvalidSpec("biseparable_a needs a real `a`".into()))?;
                Family::BiseparableA { a }
            }
            "graph_pairs" => Family::GraphPairs,
            "uniform_mixed" => Family::UniformMixed,
            "dicke_uniform" => Family::DickeUniform,
            "custom" => {
                let path = p
                    .get("path")
                    .and_then(Value::as_str)
                    .ok_or_else(|| Error::InvalidSpec("custom needs a `path`".into()))?;
                Family::Custom { path: PathBuf::from(path) }
            }
            other => return Err(Error::UnknownFamily(other.to_string())),
        };
        StateSpec::new(family, n)
    }
}

impl From<StateSpec> for RawSpec {
    fn from(spec: StateSpec) -> Self {
        let mut params = Map::new();
        match &spec.family {
            Family::Dcs { mu, nu } => {
                params.insert("mu".into(), Value::String(mu.to_string()));
                params.insert("nu".into(), Value::String(nu.to_string()));
            }
            Family::Basis { kappa } => {
                params.insert("kappa".into(), Value::String(kappa.to_string()));
            }
            Family::SuperpositionBasis { kappa1, kappa2 } => {
                params.insert("kappa1".into(), Value::String(kappa1.to_string()));
                params.insert("kappa2".into(), Value::String(kappa2.to_string()));
            }
            Family::ShiftedGhz { nu } => {
                params.insert("nu".into(), Value::String(nu.to_string()));
            }
            Family::BiseparableA { a } => {
                params.insert("a".into(), serde_json::json!(a));
            }
            Family::Custom { path } => {
                params.insert("path".into(), Value::String(path.display().to_string()));
            }
            _ => {}
        }
        RawSpec { family: spec.family.name().to_string(), n: spec.n, params }
    }
}

impl StateSpec {
    pub fn new(family: Family, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("n must be at least 1".into()));
        }
        let check = |p: &Pattern, name: &str| {
            if p.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("`{name}` has length {} but n = {n}", p.len())))
            }
        };
        match &family {
            Family::Dcs { mu, nu } => {
                check(mu, "mu")?;
                check(nu, "nu")?;
            }
            Family::Basis { kappa } => check(kappa, "kappa")?,
            Family::SuperpositionBasis { kappa1, kappa2 } => {
                check(kappa1, "kappa1")?;
                check(kappa2, "kappa2")?;
                if kappa1 == kappa2 {
                    return Err(Error::InvalidSpec("kappa1 and kappa2 must differ".into()));
                }
            }
            Family::ShiftedGhz { nu } => check(nu, "nu")?,
            Family::BiseparableA { a } if !a.is_finite() => {
                return Err(Error::InvalidSpec("`a` must be finite".into()));
            }
            _ => {}
        }
        if matches!(family, Family::BiseparableA { .. } | Family::GraphPairs) && n % 2 == 1 {
            return Err(Error::InvalidSpec(format!("{} needs an even n, got {n}", family.name())));
        }
        Ok(Self { family, n })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Convenience constructors.
    pub fn fiducial(n: usize) -> Self {
        Self { family: Family::Dcs { mu: Pattern::zeros(n), nu: Pattern::zeros(n) }, n }
    }

    pub fn dcs(mu: &str, nu: &str) -> Result<Self> {
        let (mu, nu): (Pattern, Pattern) = (mu.parse()?, nu.parse()?);
        let n = mu.len();
        Self::new(Family::Dcs { mu, nu }, n)
    }

    pub fn basis(kappa: &str) -> Result<Self> {
        let kappa: Pattern = kappa.parse()?;
        let n = kappa.len();
        Self::new(Family::Basis { kappa }, n)
    }

    pub fn shifted_ghz(nu: &str) -> Result<Self> {
        let nu: Pattern = nu.parse()?;
        let n = nu.len();
        Self::new(Family::ShiftedGhz { nu }, n)
    }

    pub fn ghz(n: usize) -> Self {
        Self { family: Family::Ghz, n }
    }

    pub fn w(n: usize) -> Self {
        Self { family: Family::W, n }
    }

    pub fn uniform_mixed(n: usize) -> Self {
        Self { family: Family::UniformMixed, n }
    }

    pub fn dicke_uniform(n: usize) -> Self {
        Self { family: Family::DickeUniform, n }
    }

    pub fn biseparable(a: f64, n: usize) -> Result<Self> {
        Self::new(Family::BiseparableA { a }, n)
    }

    pub fn graph_pairs(n: usize) -> Result<Self> {
        Self::new(Family::GraphPairs, n)
    }

    /// The same family at a different N; bit-pattern parameters keep their
    /// fraction of ones.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        let family = match &self.family {
            Family::Dcs { mu, nu } => {
                // keep the joint census of (μ_j, ν_j) proportional
                let scale = |c: usize| (c as f64 * n as f64 / self.n as f64).round() as usize;
                let c11 = scale(mu.joint_count(nu, true, true));
                let c10 = scale(mu.joint_count(nu, true, false));
                let c01 = scale(mu.joint_count(nu, false, true));
                if c11 + c10 + c01 > n {
                    return Err(Error::InvalidSpec(format!("cannot rescale dcs to n = {n}")));
                }
                let mu = Pattern((0..n).map(|j| j < c11 + c10).collect());
                let nu = Pattern((0..n).map(|j| j < c11 || (j >= c11 + c10 && j < c11 + c10 + c01)).collect());
                Family::Dcs { mu, nu }
            }
            Family::Basis { kappa } => Family::Basis { kappa: kappa.rescaled(n) },
            Family::SuperpositionBasis { kappa1, kappa2 } => Family::SuperpositionBasis {
                kappa1: kappa1.rescaled(n),
                kappa2: kappa2.rescaled(n),
            },
            Family::ShiftedGhz { nu } => Family::ShiftedGhz { nu: nu.rescaled(n) },
            Family::Custom { .. } => {
                return Err(Error::Unsupported { family: "custom".into(), what: "rescaling" })
            }
            other => other.clone(),
        };
        Self::new(family, n)
    }

    /// True when the density matrix commutes with every qubit permutation.
    pub fn is_permutation_symmetric(&self) -> bool {
        match &self.family {
            Family::Dcs { mu, nu } => mu.is_constant() && nu.is_constant(),
            Family::Basis { kappa } => kappa.is_constant(),
            Family::ShiftedGhz { nu } => nu.is_constant(),
            Family::SuperpositionBasis { kappa1, kappa2 } => {
                kappa1.is_constant() && kappa2.is_constant()
            }
            Family::Ghz | Family::W | Family::UniformMixed | Family::DickeUniform => true,
            Family::BiseparableA { .. } | Family::GraphPairs | Family::Custom { .. } => false,
        }
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match &self.family {
            Family::Dcs { mu, nu } => format!("dcs(mu={mu}, nu={nu})"),
            Family::Basis { kappa } => format!("basis({kappa})"),
            Family::SuperpositionBasis { kappa1, kappa2 } => {
                format!("superposition_basis({kappa1}, {kappa2})")
            }
            Family::ShiftedGhz { nu } => format!("shifted_ghz({nu})"),
            Family::BiseparableA { a } => format!("biseparable_a({a})"),
            Family::Custom { path } => format!("custom({})", path.display()),
            other => other.name().to_string(),
        }
    }
}

/// Dense amplitude vector; index bit `j` is qubit `j + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        let n = len.trailing_zeros() as usize;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Unnormalizable(format!("norm² = {norm}")));
        }
        Ok(Self { n, amplitudes })
    }

    /// Rescales to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::Unnormalizable(format!("norm = {norm}")));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::new(amplitudes)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Weighted ensemble of pure states.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedEnsemble {
    n: usize,
    components: Vec<(f64, StateVector)>,
}

impl MixedEnsemble {
    pub fn new(components: Vec<(f64, StateVector)>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
        let n = first.1.n_qubits();
        if components.iter().any(|(w, s)| *w <= 0.0 || s.n_qubits() != n) {
            return Err(Error::InvalidArgument(
                "ensemble weights must be positive and states of equal size".into(),
            ));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("ensemble weights sum to {total}")));
        }
        Ok(Self { n, components })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[(f64, StateVector)] {
        &self.components
    }
}

/// A built state: pure or mixed.
#[derive(Clone, Debug, PartialEq)]
pub enum Prepared {
    Pure(StateVector),
    Mixed(MixedEnsemble),
}

impl Prepared {
    pub fn n_qubits(&self) -> usize {
        match self {
            Prepared::Pure(s) => s.n_qubits(),
            Prepared::Mixed(e) => e.n_qubits(),
        }
    }

    /// Components as (weight, state) pairs; a pure state has one.
    pub fn components(&self) -> Vec<(f64, &StateVector)> {
        match self {
            Prepared::Pure(s) => vec![(1.0, s)],
            Prepared::Mixed(e) => e.components.iter().map(|(w, s)| (*w, s)).collect(),
        }
    }
}

fn check_dense(n: usize, nmax: usize) -> Result<()> {
    if n > nmax || n > 30 {
        return Err(Error::TooManyQubits { n, limit: nmax.min(30), what: "dense construction" });
    }
    Ok(())
}

fn basis_vector(n: usize, index: u64) -> StateVector {
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    amps[index as usize] = Complex64::new(1.0, 0.0);
    StateVector { n, amplitudes: amps }
}

fn pattern_index(p: &Pattern) -> u64 {
    (0..p.len()).filter(|&j| p.get(j)).fold(0u64, |acc, j| acc | (1 << j))
}

/// Two-qubit factor of the pairwise families; index = q₁ + 2·q₂.
pub(crate) fn pair_amplitudes(family: &Family) -> Option<[Complex64; 4]> {
    let c = |x: f64| Complex64::new(x, 0.0);
    match family {
        Family::BiseparableA { a } => {
            let norm = (1.0 + a * a).sqrt();
            // |01⟩ = (q₁=0, q₂=1) → index 2; |10⟩ → index 1
            Some([c(0.0), c(a / norm), c(1.0 / norm), c(0.0)])
        }
        Family::GraphPairs => Some([c(0.5), c(0.5), c(0.5), c(-0.5)]),
        _ => None,
    }
}

/// Builds the dense statevector or ensemble for `spec`, refusing N > `nmax`.
pub fn build_state(spec: &StateSpec, nmax: usize) -> Result<Prepared> {
    let n = spec.n;
    if let Family::Custom { path } = &spec.family {
        return load_custom(path, n, nmax).map(Prepared::Pure);
    }
    check_dense(n, nmax)?;
    let dim = 1usize << n;
    let zero = Complex64::new(0.0, 0.0);
    let pure = |amps: Vec<Complex64>| StateVector::normalized(amps).map(Prepared::Pure);
    match &spec.family {
        Family::Dcs { mu, nu } => {
            let point = PhasePoint::new(mu.to_bitstring()?, nu.to_bitstring()?)?;
            Ok(Prepared::Pure(crate::phase_space::dcs_vector(&point, nmax)?))
        }
        Family::Basis { kappa } => Ok(Prepared::Pure(basis_vector(n, pattern_index(kappa)))),
        Family::SuperpositionBasis { kappa1, kappa2 } => {
            let mut amps = vec![zero; dim];
            amps[pattern_index(kappa1) as usize] += 1.0;
            amps[pattern_index(kappa2) as usize] += 1.0;
            pure(amps)
        }
        Family::Ghz | Family::ShiftedGhz { .. } => {
            let nu = match &spec.family {
                Family::ShiftedGhz { nu } => pattern_index(nu),
                _ => 0,
            };
            let mut amps = vec![zero; dim];
            amps[nu as usize] += 1.0;
            amps[(nu ^ (dim as u64 - 1)) as usize] += 1.0;
            pure(amps)
        }
        Family::W => {
            let mut amps = vec![zero; dim];
            for j in 0..n {
                amps[1 << j] = Complex64::new(1.0, 0.0);
            }
            pure(amps)
        }
        Family::BiseparableA { .. } | Family::GraphPairs => {
            let pair = pair_amplitudes(&spec.family).expect("pairwise family");
            let amps = (0..dim)
                .map(|idx| {
                    (0..n / 2).fold(Complex64::new(1.0, 0.0), |acc, p| acc * pair[(idx >> (2 * p)) & 3])
                })
                .collect();
            pure(amps)
        }
        Family::UniformMixed => {
            let w = 1.0 / dim as f64;
            let comps = (0..dim as u64).map(|i| (w, basis_vector(n, i))).collect();
            Ok(Prepared::Mixed(MixedEnsemble::new(comps)?))
        }
        Family::DickeUniform => {
            let w = 1.0 / (n + 1) as f64;
            let comps = (0..=n)
                .map(|h| {
                    let amps = (0..dim as u64)
                        .map(|i| if i.count_ones() as usize == h { Complex64::new(1.0, 0.0) } else { zero })
                        .collect();
                    StateVector::normalized(amps).map(|s| (w, s))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Prepared::Mixed(MixedEnsemble::new(comps)?))
        }
        Family::Custom { .. } => unreachable!(),
    }
}

/// Reads a two-column `re im` text file of length 2^N and normalizes it.
pub fn load_custom(path: &std::path::Path, n: usize, nmax: usize) -> Result<StateVector> {
    check_dense(n, nmax)?;
    let text = std::fs::read_to_string(path)?;
    let mut amps = Vec::with_capacity(1 << n);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty());
        let mut next = || -> Result<f64> {
            cols.next()
                .ok_or_else(|| Error::InvalidSpec(format!("line {}: expected two columns", lineno + 1)))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidSpec(format!("line {}: {e}", lineno + 1)))
        };
        let (re, im) = (next()?, next()?);
        amps.push(Complex64::new(re, im));
    }
    if amps.len() != 1 << n {
        return Err(Error::InvalidSpec(format!(
            "custom state has {} amplitudes, expected 2^{n} = {}",
            amps.len(),
            1usize << n
        )));
    }
    StateVector::normalized(amps)
}

/// ln |z|², with −∞ for an exact zero.
#[inline]
fn ln_norm_sqr(z: Complex64) -> f64 {
    let v = z.norm_sqr();
    if v == 0.0 {
        f64::NEG_INFINITY
    } else {
        v.ln()
    }
}

/// ln Q of a GHZ-type pair (|ν⟩ + |ν̄⟩)/√2, given h(α) and h(β ⊕ ν).
///
/// Q = |ξ₀|^{2N} |ξ^{n'} + (−1)^m ξ^{N−n'}|² / 2; the smaller power is
/// factored out so nothing underflows.
pub(crate) fn ln_q_ghz_like(n_qubits: usize, m: usize, n_shifted: usize) -> f64 {
    let [c0, _] = fiducial_probs();
    let xi = fiducial_ratio();
    let low = n_shifted.min(n_qubits - n_shifted);
    let gap = n_qubits - 2 * low;
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let inner = Complex64::new(1.0, 0.0) + xi.powu(gap as u32) * sign;
    n_qubits as f64 * c0.ln() + 2.0 * low as f64 * xi.norm().ln() + ln_norm_sqr(inner) - 2f64.ln()
}

/// ln Q of the W state at a point of census `c`:
/// Q = |ξ₀|^{2N} |ξ|^{2n} |Nξ + k(ξ⁻¹ − ξ) − m(ξ⁻¹ + ξ)|² / N
/// with m = h(α), n = h(β), k = h(α + β).
pub(crate) fn ln_q_w(c: &Census) -> f64 {
    let [c0, _] = fiducial_probs();
    let xi = fiducial_ratio();
    let (nq, m, n, k) = (c.n_qubits() as f64, c.m() as f64, c.n() as f64, c.k() as f64);
    let inner = xi * nq + (xi.inv() - xi) * k - (xi.inv() + xi) * m;
    nq * c0.ln() + 2.0 * n * xi.norm().ln() + ln_norm_sqr(inner) - nq.ln()
}

/// ln Q of the uniform Dicke mixture at a point of census `c`.
///
/// For a product state φ, ⟨D_w|φ⟩ = C(N,w)^{−1/2} Π_j φ_j(0) · e_w(r), where
/// e_w is the elementary symmetric polynomial of the ratios r_j = φ_j(1)/φ_j(0).
/// The ratios are scaled by ξ so every |r_j ξ| ≤ 1.
pub(crate) fn ln_q_dicke(c: &Census) -> Result<f64> {
    const LIMIT: usize = 500;
    let nq = c.n_qubits();
    if nq > LIMIT {
        return Err(Error::TooManyQubits { n: nq, limit: LIMIT, what: "closed-form Dicke mixture" });
    }
    let xi = fiducial_ratio();
    let one = Complex64::new(1.0, 0.0);
    // (1 ± ξ² z) for b = 0 types, (1 ± z) for b = 1 types
    let xi2 = xi * xi;
    let factors = [(xi2, c.t00), (-xi2, c.t10), (one, c.t01), (-one, c.t11)];
    let mut poly = vec![one];
    for (root, count) in factors {
        for _ in 0..count {
            let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
            for (i, a) in poly.iter().enumerate() {
                next[i] += a;
                next[i + 1] += a * root;
            }
            poly = next;
        }
    }
    let [c0, _] = fiducial_probs();
    let ln_xi = xi.norm().ln();
    let n = c.n();
    let terms: Vec<f64> = poly
        .iter()
        .enumerate()
        .map(|(w, e)| ln_norm_sqr(*e) - ln_binomial(nq, w) + 2.0 * (n as f64 - w as f64) * ln_xi)
        .collect();
    Ok(nq as f64 * c0.ln() + log_sum_exp(&terms) - ((nq + 1) as f64).ln())
}

/// Deterministic log-sum-exp over a slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Closed-form ln Q_ρ(α, β) of a product of identical pair states.
fn ln_q_pairs(pair: &[Complex64; 4], point: &PhasePoint) -> f64 {
    let n = point.n_qubits();
    let mut total = 0.0;
    for p in 0..n / 2 {
        let (j1, j2) = (2 * p, 2 * p + 1);
        let (a1, b1) = (point.alpha().get(j1), point.beta().get(j1));
        let (a2, b2) = (point.alpha().get(j2), point.beta().get(j2));
        let mut amp = Complex64::new(0.0, 0.0);
        for idx in 0..4 {
            let (c1, c2) = (idx & 1 == 1, idx & 2 == 2);
            let phi = local_dcs_amplitude(a1, b1, c1) * local_dcs_amplitude(a2, b2, c2);
            amp += phi.conj() * pair[idx];
        }
        total += ln_norm_sqr(amp);
    }
    total
}

fn ln_q_basis_like(n_qubits: usize, shifted_weight: usize) -> f64 {
    let [c0, c1] = fiducial_probs();
    (n_qubits - shifted_weight) as f64 * c0.ln() + shifted_weight as f64 * c1.ln()
}

/// Closed-form ln Q_ρ(α, β) at a single phase-space point.
///
/// Available for every family except `custom`; the dense fallback is
/// [`crate::phase_space::q_at_point_dense`].
pub fn ln_q_at_point(spec: &StateSpec, point: &PhasePoint) -> Result<f64> {
    let n = spec.n;
    if point.n_qubits() != n {
        return Err(Error::LengthMismatch(point.n_qubits(), n));
    }
    let (alpha, beta) = (point.alpha(), point.beta());
    let pat = |p: &Pattern| p.to_bitstring();
    Ok(match &spec.family {
        Family::Dcs { mu, nu } => {
            // covariance: Q_{μ,ν}(α, β) = Q_ξ(α + μ, β + ν)
            let shifted = PhasePoint::new(alpha.xor(&pat(mu)?), beta.xor(&pat(nu)?))?;
            let c = shifted.census();
            -((c.m() + c.n() + c.k()) as f64) / 2.0 * 3f64.ln()
        }
        Family::Basis { kappa } => ln_q_basis_like(n, beta.xor(&pat(kappa)?).weight()),
        Family::Ghz => ln_q_ghz_like(n, alpha.weight(), beta.weight()),
        Family::ShiftedGhz { nu } => ln_q_ghz_like(n, alpha.weight(), beta.xor(&pat(nu)?).weight()),
        Family::SuperpositionBasis { kappa1, kappa2 } => {
            let amp = |kappa: &BitString| {
                let h = beta.xor(kappa).weight() as i32;
                let sign = if alpha.dot_mod2(kappa) == 1 { -1.0 } else { 1.0 };
                let xi = fiducial_qubit();
                // ⟨κ|α,β⟩ conjugated only changes a global phase of |·|²
                xi[0].powi(n as i32 - h) * xi[1].powi(h) * sign
            };
            let total = amp(&pat(kappa1)?) + amp(&pat(kappa2)?);
            ln_norm_sqr(total) - 2f64.ln()
        }
        Family::W => ln_q_w(&point.census()),
        Family::BiseparableA { .. } | Family::GraphPairs => {
            ln_q_pairs(&pair_amplitudes(&spec.family).expect("pairwise"), point)
        }
        Family::UniformMixed => -(n as f64) * 2f64.ln(),
        Family::DickeUniform => ln_q_dicke(&point.census())?,
        Family::Custom { .. } => {
            return Err(Error::Unsupported { family: "custom".into(), what: "closed-form Q" })
        }
    })
}

/// Closed-form ln Q for a permutation-symmetric state, which depends only on
/// the weight census of the point.
pub fn ln_q_symmetric(spec: &StateSpec, census: &Census) -> Result<f64> {
    if !spec.is_permutation_symmetric() {
        return Err(Error::NotSymmetric(spec.label()));
    }
    let n = spec.n;
    let flip = |p: &Pattern, w: usize| if p.get(0) { n - w } else { w };
    Ok(match &spec.family {
        Family::Dcs { mu, nu } => {
            let m = flip(mu, census.m());
            let nn = flip(nu, census.n());
            let k = if mu.get(0) ^ nu.get(0) { n - census.k() } else { census.k() };
            -((m + nn + k) as f64) / 2.0 * 3f64.ln()
        }
        Family::Basis { kappa } => ln_q_basis_like(n, flip(kappa, census.n())),
        Family::Ghz => ln_q_ghz_like(n, census.m(), census.n()),
        Family::ShiftedGhz { nu } => ln_q_ghz_like(n, census.m(), flip(nu, census.n())),
        Family::SuperpositionBasis { kappa1, .. } => {
            // both constant and distinct: a GHZ state, shifted by κ₁
            ln_q_ghz_like(n, census.m(), flip(kappa1, census.n()))
        }
        Family::W => ln_q_w(census),
        Family::UniformMixed => -(n as f64) * 2f64.ln(),
        Family::DickeUniform => ln_q_dicke(census)?,
        _ => unreachable!("non-symmetric families rejected above"),
    })
}

/// Q̃(m, n, k) for a family with a closed form, evaluated in the log domain
/// and exponentiated.
pub fn analytic_projected_q(spec: &StateSpec, triple: Triple) -> Result<f64> {
    crate::projection::AnalyticProjector::new(spec)?.ln_q(triple).map(f64::exp)
}
