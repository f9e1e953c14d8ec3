//! Bounded-distance hard-decision decoding of narrow-sense primitive BCH
//! codes: power-sum syndromes over GF(2^m), Berlekamp–Massey and Chien
//! search.
//!
//! Bit v of a word is the coefficient of x^v, so a single error at position
//! p contributes alpha^(j p) to syndrome S_j.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::channel::stream_rng;
use crate::code::{CodeSpec, Codeword, ErrorPattern};
use crate::error::{check_len, Error, Result};

/// Default primitive polynomials, bit i = coefficient of x^i.
pub fn default_primitive_poly(m: u32) -> Option<u32> {
    Some(match m {
        2 => 0b111,
        3 => 0b1011,
        4 => 0b1_0011,
        5 => 0b10_0101,
        6 => 0b100_0011,
        7 => 0b1000_1001,
        8 => 0b1_0001_1101,
        9 => 0b10_0001_0001,
        10 => 0b100_0000_1001,
        _ => return None,
    })
}

/// GF(2^m) with exponent/logarithm tables for a primitive element alpha.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GfField {
    m: u32,
    primitive_poly: u32,
    order: usize,
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl GfField {
    pub fn new(m: u32, primitive_poly: u32) -> Result<Self> {
        if !(2..=15).contains(&m) || primitive_poly >> m != 1 {
            return Err(Error::InvalidArgument(format!(
                "polynomial {primitive_poly:#x} is not of degree {m}"
            )));
        }
        let order = (1usize << m) - 1;
        let mut exp = vec![0u16; 2 * order];
        let mut log = vec![0u16; order + 1];
        let mut x: u32 = 1;
        for i in 0..order {
            if i > 0 && x == 1 {
                return Err(Error::InvalidArgument(format!(
                    "polynomial {primitive_poly:#x} is not primitive (alpha has order {i})"
                )));
            }
            exp[i] = x as u16;
            log[x as usize] = i as u16;
            x <<= 1;
            if x >> m != 0 {
                x ^= primitive_poly;
            }
        }
        if x != 1 {
            return Err(Error::InvalidArgument(format!("polynomial {primitive_poly:#x} is not primitive")));
        }
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }
        Ok(GfField {
            m,
            primitive_poly,
            order,
            exp,
            log,
        })
    }

    pub fn with_default_poly(m: u32) -> Result<Self> {
        let poly = default_primitive_poly(m)
            .ok_or_else(|| Error::InvalidArgument(format!("no default primitive polynomial for m = {m}")))?;
        Self::new(m, poly)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn primitive_poly(&self) -> u32 {
        self.primitive_poly
    }

    /// Multiplicative order 2^m - 1.
    pub fn order(&self) -> usize {
        self.order
    }

    /// alpha^i for any i >= 0.
    #[inline]
    pub fn alpha_pow(&self, i: usize) -> u16 {
        self.exp[i % self.order]
    }

    /// Discrete log of a nonzero element.
    #[inline]
    pub fn log(&self, a: u16) -> usize {
        debug_assert!(a != 0);
        self.log[a as usize] as usize
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    #[inline]
    pub fn div(&self, a: u16, b: u16) -> u16 {
        assert!(b != 0, "division by zero in GF(2^m)");
        if a == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.order - self.log[b as usize] as usize]
        }
    }

    /// Evaluates a polynomial (coefficient i = x^i) at `x`.
    pub fn eval(&self, poly: &[u16], x: u16) -> u16 {
        poly.iter().rev().fold(0, |acc, &c| self.mul(acc, x) ^ c)
    }
}

/// S_j = r(alpha^j), j = 1..=2t.
pub fn gf_syndromes(field: &GfField, r: &[u8], t: usize) -> Result<Vec<u16>> {
    check_len("received word length", field.order(), r.len())?;
    let mut s = vec![0u16; 2 * t];
    for (p, _) in r.iter().enumerate().filter(|(_, &b)| b & 1 == 1) {
        for (j, sj) in s.iter_mut().enumerate() {
            *sj ^= field.alpha_pow((j + 1) * p);
        }
    }
    Ok(s)
}

/// Error-locator polynomial Lambda(x) = prod (1 - X_i x) and the length of
/// the shortest LFSR generating the syndromes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorLocator {
    /// Coefficients, constant term first, trailing zeros trimmed.
    pub coeffs: Vec<u16>,
    pub lfsr_len: usize,
}

impl ErrorLocator {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// Berlekamp–Massey over GF(2^m).
pub fn berlekamp_massey(field: &GfField, syndromes: &[u16]) -> ErrorLocator {
    let mut c = vec![1u16];
    let mut b = vec![1u16];
    let mut l = 0usize;
    let mut shift = 1usize;
    let mut b_disc = 1u16;
    for n in 0..syndromes.len() {
        let mut d = syndromes[n];
        for i in 1..=l.min(c.len() - 1) {
            d ^= field.mul(c[i], syndromes[n - i]);
        }
        if d == 0 {
            shift += 1;
            continue;
        }
        let coef = field.div(d, b_disc);
        let prev = c.clone();
        if c.len() < b.len() + shift {
            c.resize(b.len() + shift, 0);
        }
        for (i, &bi) in b.iter().enumerate() {
            c[i + shift] ^= field.mul(coef, bi);
        }
        if 2 * l <= n {
            l = n + 1 - l;
            b = prev;
            b_disc = d;
            shift = 1;
        } else {
            shift += 1;
        }
    }
    while c.len() > 1 && *c.last().unwrap() == 0 {
        c.pop();
    }
    ErrorLocator { coeffs: c, lfsr_len: l }
}

/// Positions p with Lambda(alpha^-p) = 0, over all 2^m - 1 positions.
pub fn chien_search(field: &GfField, locator: &ErrorLocator) -> Vec<usize> {
    let n = field.order();
    (0..n)
        .filter(|&p| field.eval(&locator.coeffs, field.alpha_pow(n - p)) == 0)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HddStatus {
    Corrected,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HddResult {
    pub status: HddStatus,
    pub codeword: Option<Codeword>,
    /// y_HD xor the decoded codeword.
    pub estimated_error: Option<ErrorPattern>,
}

impl HddResult {
    fn failure() -> Self {
        HddResult {
            status: HddStatus::Failure,
            codeword: None,
            estimated_error: None,
        }
    }
}

/// A BCH code bound to its field.
#[derive(Debug, Clone)]
pub struct BchDecoder {
    code: CodeSpec,
    field: GfField,
}

impl BchDecoder {
    pub fn new(code: CodeSpec, field: GfField) -> Result<Self> {
        if field.m() != code.gf_order_exponent || field.order() != code.n {
            return Err(Error::InvalidArgument(format!(
                "{}: n = {} needs GF(2^{}), got GF(2^{})",
                code.code_id,
                code.n,
                code.gf_order_exponent,
                field.m()
            )));
        }
        Ok(BchDecoder { code, field })
    }

    pub fn with_default_field(code: CodeSpec) -> Result<Self> {
        let field = GfField::with_default_poly(code.gf_order_exponent)?;
        Self::new(code, field)
    }

    pub fn code(&self) -> &CodeSpec {
        &self.code
    }

    pub fn field(&self) -> &GfField {
        &self.field
    }

    pub fn decode(&self, y_hd: &[u8]) -> Result<HddResult> {
        hdd_decode(&self.code, &self.field, y_hd)
    }

    /// Membership in the cyclic code: S_1..S_2t all vanish.
    pub fn is_codeword(&self, word: &[u8]) -> Result<bool> {
        Ok(gf_syndromes(&self.field, word, self.code.t)?.iter().all(|&s| s == 0))
    }
}

/// Syndromes, Berlekamp–Massey, Chien search, then re-verification of the
/// corrected word. Anything that does not verify is a failure.
pub fn hdd_decode(code: &CodeSpec, field: &GfField, y_hd: &[u8]) -> Result<HddResult> {
    check_len("hard-decision word length", code.n, y_hd.len())?;
    let syn = gf_syndromes(field, y_hd, code.t)?;
    if syn.iter().all(|&s| s == 0) {
        return Ok(HddResult {
            status: HddStatus::Corrected,
            codeword: Some(Codeword(y_hd.to_vec())),
            estimated_error: Some(ErrorPattern(vec![0; code.n])),
        });
    }
    let locator = berlekamp_massey(field, &syn);
    if locator.lfsr_len > code.t || locator.degree() != locator.lfsr_len {
        return Ok(HddResult::failure());
    }
    let roots = chien_search(field, &locator);
    if roots.len() != locator.degree() {
        return Ok(HddResult::failure());
    }
    let mut corrected = y_hd.to_vec();
    for &p in &roots {
        corrected[p] ^= 1;
    }
    if gf_syndromes(field, &corrected, code.t)?.iter().any(|&s| s != 0) {
        return Ok(HddResult::failure());
    }
    let estimated_error = ErrorPattern::between(y_hd, &corrected);
    Ok(HddResult {
        status: HddStatus::Corrected,
        codeword: Some(Codeword(corrected)),
        estimated_error: Some(estimated_error),
    })
}

/// Outcome of planting errors of one weight into the zero word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelftestWeight {
    pub weight: usize,
    pub exhaustive: bool,
    pub trials: usize,
    /// Decoded with the estimated error equal to the planted one.
    pub exact: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub code_id: String,
    pub t: usize,
    pub m: u32,
    pub primitive_poly: u32,
    pub seed: u64,
    pub weights: Vec<SelftestWeight>,
    pub passed: bool,
}

/// Plants every weight-1 and weight-2 pattern, then `random_trials`
/// random patterns for each weight up to t, and checks each is corrected
/// exactly.
pub fn selftest(dec: &BchDecoder, random_trials: usize, seed: u64) -> Result<SelftestReport> {
    let n = dec.code().n;
    let t = dec.code().t;
    let check = |support: &[usize]| -> Result<bool> {
        let mut y = vec![0u8; n];
        for &p in support {
            y[p] = 1;
        }
        let r = dec.decode(&y)?;
        Ok(r.status == HddStatus::Corrected && r.estimated_error.as_ref().is_some_and(|e| e.bits() == &y[..]))
    };
    let mut weights = Vec::new();
    if t >= 1 {
        let exact = (0..n).map(|p| check(&[p])).collect::<Result<Vec<_>>>()?.into_iter().filter(|&b| b).count();
        weights.push(SelftestWeight { weight: 1, exhaustive: true, trials: n, exact });
    }
    if t >= 2 {
        let mut exact = 0;
        let mut trials = 0;
        for a in 0..n {
            for b in a + 1..n {
                trials += 1;
                exact += usize::from(check(&[a, b])?);
            }
        }
        weights.push(SelftestWeight { weight: 2, exhaustive: true, trials, exact });
    }
    for w in 1..=t {
        let mut rng = stream_rng(seed, w as u64);
        let mut exact = 0;
        for _ in 0..random_trials {
            let support = sample(&mut rng, n, w).into_vec();
            exact += usize::from(check(&support)?);
        }
        weights.push(SelftestWeight { weight: w, exhaustive: false, trials: random_trials, exact });
    }
    let passed = weights.iter().all(|w| w.exact == w.trials);
    Ok(SelftestReport {
        code_id: dec.code().code_id.clone(),
        t,
        m: dec.field().m(),
        primitive_poly: dec.field().primitive_poly(),
        seed,
        weights,
        passed,
    })
}
