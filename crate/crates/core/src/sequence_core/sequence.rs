use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use rug::{Complex, Float, Rational};
use serde::Serialize;

use super::{ClassParameters, SequenceError};
use crate::mp_numerics::PrecisionContext;

/// Where a term of a (possibly merged) sequence came from: the parent
/// family and the 1-based index inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Origin {
    pub family: usize,
    pub index: usize,
}

/// A lazy generator of the terms Λ_1, Λ_2, … of a sequence.
pub trait TermSource: Send + Sync + fmt::Debug {
    /// First `n` terms at the given precision. Callers never request more
    /// than [`TermSource::max_len`].
    fn generate(&self, n: usize, ctx: PrecisionContext) -> Vec<Complex>;

    /// Number of terms the generator can produce, `None` when unbounded.
    fn max_len(&self) -> Option<usize> {
        None
    }

    /// First `n` terms as exact rationals, when the sequence is real and
    /// rational.
    fn exact(&self, _n: usize) -> Option<Vec<Rational>> {
        None
    }

    fn origins(&self, n: usize) -> Vec<Origin> {
        (1..=n).map(|index| Origin { family: 0, index }).collect()
    }

    fn is_real(&self) -> bool;

    /// Σ_{n>m} Λ_n^{−j} in closed form, when available.
    fn tail_power_sum(&self, _m: usize, _j: u32, _ctx: PrecisionContext) -> Option<Float> {
        None
    }
}

struct Inner {
    label: String,
    source: Box<dyn TermSource>,
    params: Option<ClassParameters>,
    minimal_time: Option<f64>,
    cache: RwLock<HashMap<u32, Arc<Vec<Complex>>>>,
}

impl fmt::Debug for Inner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EigenSequence").field("label", &self.label).field("source", &self.source).finish()
    }
}

/// Ordered sequence Λ = {Λ_k}, 1-indexed, with attached metadata.
#[derive(Clone, Debug)]
pub struct EigenSequence {
    inner: Arc<Inner>,
}

impl EigenSequence {
    pub fn new(label: impl Into<String>, source: impl TermSource + 'static) -> Self {
        Self::from_parts(label.into(), Box::new(source), None, None)
    }

    fn from_parts(label: String, source: Box<dyn TermSource>, params: Option<ClassParameters>, minimal_time: Option<f64>) -> Self {
        Self { inner: Arc::new(Inner { label, source, params, minimal_time, cache: RwLock::new(HashMap::new()) }) }
    }

    fn rebuild(self, f: impl FnOnce(&mut Option<ClassParameters>, &mut Option<f64>, &mut String)) -> Self {
        let inner = Arc::try_unwrap(self.inner).unwrap_or_else(|shared| Inner {
            label: shared.label.clone(),
            source: Box::new(Shared(EigenSequence { inner: shared.clone() })),
            params: shared.params.clone(),
            minimal_time: shared.minimal_time,
            cache: RwLock::new(HashMap::new()),
        });
        let Inner { mut label, source, mut params, mut minimal_time, cache } = inner;
        f(&mut params, &mut minimal_time, &mut label);
        Self { inner: Arc::new(Inner { label, source, params, minimal_time, cache }) }
    }

    pub fn with_params(self, params: ClassParameters) -> Self {
        self.rebuild(|p, _, _| *p = Some(params))
    }

    pub fn with_minimal_time(self, t0: f64) -> Self {
        self.rebuild(|_, m, _| *m = Some(t0))
    }

    pub fn with_label(self, label: impl Into<String>) -> Self {
        let label = label.into();
        self.rebuild(|_, _, l| *l = label)
    }

    pub fn label(&self) -> &str {
        &self.inner.label
    }

    pub fn params(&self) -> Option<&ClassParameters> {
        self.inner.params.as_ref()
    }

    pub fn minimal_time(&self) -> Option<f64> {
        self.inner.minimal_time
    }

    pub fn is_real(&self) -> bool {
        self.inner.source.is_real()
    }

    /// Length of the materializable prefix, `None` when unbounded.
    pub fn known_prefix_length(&self) -> Option<usize> {
        self.inner.source.max_len()
    }

    fn check_len(&self, n: usize) -> Result<(), SequenceError> {
        match self.inner.source.max_len() {
            Some(available) if n > available => Err(SequenceError::PrefixExhausted { requested: n, available }),
            _ => Ok(()),
        }
    }

    /// First `n` terms at the precision of `ctx`.
    pub fn terms(&self, n: usize, ctx: PrecisionContext) -> Result<Vec<Complex>, SequenceError> {
        self.check_len(n)?;
        if let Some(cached) = self.inner.cache.read().expect("term cache poisoned").get(&ctx.bits()) {
            if cached.len() >= n {
                return Ok(cached[..n].to_vec());
            }
        }
        let mut cache = self.inner.cache.write().expect("term cache poisoned");
        let have = cache.get(&ctx.bits()).map_or(0, |v| v.len());
        if have < n {
            let mut want = n.max(have + have / 2);
            if let Some(cap) = self.inner.source.max_len() {
                want = want.min(cap);
            }
            cache.insert(ctx.bits(), Arc::new(self.inner.source.generate(want, ctx)));
        }
        Ok(cache[&ctx.bits()][..n].to_vec())
    }

    /// Λ_k for 1-based `k`.
    pub fn term(&self, k: usize, ctx: PrecisionContext) -> Result<Complex, SequenceError> {
        if k == 0 {
            return Err(SequenceError::InvalidInput("terms are 1-indexed".into()));
        }
        Ok(self.terms(k, ctx)?.pop().expect("k ≥ 1"))
    }

    pub fn exact_terms(&self, n: usize) -> Option<Vec<Rational>> {
        if self.check_len(n).is_err() {
            return None;
        }
        self.inner.source.exact(n)
    }

    pub fn origins(&self, n: usize) -> Vec<Origin> {
        self.inner.source.origins(n)
    }

    pub fn tail_power_sum(&self, m: usize, j: u32, ctx: PrecisionContext) -> Option<Float> {
        self.inner.source.tail_power_sum(m, j, ctx)
    }

    /// Moduli |Λ_1|, …, |Λ_n|.
    pub fn moduli(&self, n: usize, ctx: PrecisionContext) -> Result<Vec<Float>, SequenceError> {
        Ok(self.terms(n, ctx)?.iter().map(|z| Float::with_val(ctx.bits(), z.abs_ref())).collect())
    }

    /// Smallest prefix length whose last modulus exceeds `r`, growing
    /// geometrically.
    pub(crate) fn prefix_beyond(&self, r: &Float, ctx: PrecisionContext) -> Result<Vec<Float>, SequenceError> {
        let mut n = 16;
        loop {
            if let Some(cap) = self.known_prefix_length() {
                n = n.min(cap);
            }
            let moduli = self.moduli(n, ctx)?;
            if moduli.last().is_some_and(|m| m > r) {
                return Ok(moduli);
            }
            if self.known_prefix_length() == Some(n) {
                return Err(SequenceError::PrefixExhausted { requested: n + 1, available: n });
            }
            n *= 2;
        }
    }
}

#[derive(Debug)]
struct Shared(EigenSequence);

impl TermSource for Shared {
    fn generate(&self, n: usize, ctx: PrecisionContext) -> Vec<Complex> {
        self.0.inner.source.generate(n, ctx)
    }
    fn max_len(&self) -> Option<usize> {
        self.0.inner.source.max_len()
    }
    fn exact(&self, n: usize) -> Option<Vec<Rational>> {
        self.0.inner.source.exact(n)
    }
    fn origins(&self, n: usize) -> Vec<Origin> {
        self.0.inner.source.origins(n)
    }
    fn is_real(&self) -> bool {
        self.0.inner.source.is_real()
    }
    fn tail_power_sum(&self, m: usize, j: u32, ctx: PrecisionContext) -> Option<Float> {
        self.0.inner.source.tail_power_sum(m, j, ctx)
    }
}

/// A finite sequence given term by term as (re, im) pairs. Binary64
/// inputs are read as the exact rationals they encode.
#[derive(Debug, Clone)]
pub struct ExplicitSource {
    terms: Vec<(f64, f64)>,
}

impl ExplicitSource {
    pub fn new(terms: Vec<(f64, f64)>) -> Result<Self, SequenceError> {
        if terms.is_empty() {
            return Err(SequenceError::InvalidInput("explicit sequence has no terms".into()));
        }
        if terms.iter().any(|(re, im)| !re.is_finite() || !im.is_finite()) {
            return Err(SequenceError::InvalidInput("explicit sequence has a non-finite term".into()));
        }
        Ok(Self { terms })
    }

    pub fn real(terms: &[f64]) -> Result<Self, SequenceError> {
        Self::new(terms.iter().map(|&x| (x, 0.0)).collect())
    }
}

impl TermSource for ExplicitSource {
    fn generate(&self, n: usize, ctx: PrecisionContext) -> Vec<Complex> {
        self.terms.iter().take(n).map(|&(re, im)| ctx.complex((re, im))).collect()
    }
    fn max_len(&self) -> Option<usize> {
        Some(self.terms.len())
    }
    fn exact(&self, n: usize) -> Option<Vec<Rational>> {
        if !self.is_real() {
            return None;
        }
        self.terms.iter().take(n).map(|&(re, _)| Rational::from_f64(re)).collect()
    }
    fn is_real(&self) -> bool {
        self.terms.iter().all(|&(_, im)| im == 0.0)
    }
}

/// Union of two sequences, ordered by modulus with ties broken by
/// ascending imaginary part.
#[derive(Debug)]
struct MergedSource {
    a: EigenSequence,
    b: EigenSequence,
}

fn cmp_terms(x: &Complex, y: &Complex, bits: u32) -> std::cmp::Ordering {
    let nx = Float::with_val(bits, x.norm_ref());
    let ny = Float::with_val(bits, y.norm_ref());
    nx.partial_cmp(&ny)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then_with(|| x.imag().partial_cmp(y.imag()).unwrap_or(std::cmp::Ordering::Equal))
}

impl MergedSource {
    fn take_counts(&self, n: usize) -> (usize, usize) {
        let na = self.a.known_prefix_length().map_or(n, |c| c.min(n));
        let nb = self.b.known_prefix_length().map_or(n, |c| c.min(n));
        (na, nb)
    }

    fn merged(&self, n: usize, ctx: PrecisionContext) -> Vec<(Complex, Origin)> {
        let (na, nb) = self.take_counts(n);
        let ta = self.a.terms(na, ctx).expect("length checked");
        let tb = self.b.terms(nb, ctx).expect("length checked");
        let oa = self.a.origins(na);
        let ob = self.b.origins(nb);
        let mut out = Vec::with_capacity(n);
        let (mut i, mut j) = (0, 0);
        while out.len() < n && (i < na || j < nb) {
            let take_a = j >= nb || (i < na && cmp_terms(&ta[i], &tb[j], ctx.bits()) != std::cmp::Ordering::Greater);
            if take_a {
                out.push((ta[i].clone(), Origin { family: 0, index: oa[i].index }));
                i += 1;
            } else {
                out.push((tb[j].clone(), Origin { family: 1, index: ob[j].index }));
                j += 1;
            }
        }
        out
    }
}

impl TermSource for MergedSource {
    fn generate(&self, n: usize, ctx: PrecisionContext) -> Vec<Complex> {
        self.merged(n, ctx).into_iter().map(|(z, _)| z).collect()
    }
    fn max_len(&self) -> Option<usize> {
        Some(self.a.known_prefix_length()? + self.b.known_prefix_length()?)
    }
    fn exact(&self, n: usize) -> Option<Vec<Rational>> {
        let (na, nb) = self.take_counts(n);
        let ea = self.a.exact_terms(na)?;
        let eb = self.b.exact_terms(nb)?;
        let mut out = Vec::with_capacity(n);
        let (mut i, mut j) = (0, 0);
        while out.len() < n && (i < ea.len() || j < eb.len()) {
            if j >= eb.len() || (i < ea.len() && ea[i].clone().abs() <= eb[j].clone().abs()) {
                out.push(ea[i].clone());
                i += 1;
            } else {
                out.push(eb[j].clone());
                j += 1;
            }
        }
        Some(out)
    }
    fn origins(&self, n: usize) -> Vec<Origin> {
        let ctx = PrecisionContext::new(128).expect("valid precision");
        self.merged(n, ctx).into_iter().map(|(_, o)| o).collect()
    }
    fn is_real(&self) -> bool {
        self.a.is_real() && self.b.is_real()
    }
    fn tail_power_sum(&self, m: usize, j: u32, ctx: PrecisionContext) -> Option<Float> {
        let from_a = self.origins(m).iter().filter(|o| o.family == 0).count();
        let ta = self.a.tail_power_sum(from_a, j, ctx)?;
        let tb = self.b.tail_power_sum(m - from_a, j, ctx)?;
        Some(ta + tb)
    }
}

/// Merges two sequences into one nondecreasing in modulus. The first
/// `check_len` terms of each parent are compared for coincidences.
pub fn merge_increasing(a: &EigenSequence, b: &EigenSequence, check_len: usize, ctx: PrecisionContext) -> Result<EigenSequence, SequenceError> {
    let na = a.known_prefix_length().map_or(check_len, |c| c.min(check_len));
    let nb = b.known_prefix_length().map_or(check_len, |c| c.min(check_len));
    if let (Some(ea), Some(eb)) = (a.exact_terms(na), b.exact_terms(nb)) {
        let mut j = 0;
        for (i, x) in ea.iter().enumerate() {
            while j < eb.len() && eb[j] < *x {
                j += 1;
            }
            if j < eb.len() && eb[j] == *x {
                return Err(SequenceError::DuplicateTerm { index_a: i + 1, index_b: j + 1 });
            }
        }
    } else {
        let ta = a.terms(na, ctx)?;
        let tb = b.terms(nb, ctx)?;
        for (i, x) in ta.iter().enumerate() {
            for (j, y) in tb.iter().enumerate() {
                if x == y {
                    return Err(SequenceError::DuplicateTerm { index_a: i + 1, index_b: j + 1 });
                }
            }
        }
    }
    let label = format!("{} ∪ {}", a.label(), b.label());
    Ok(EigenSequence::new(label, MergedSource { a: a.clone(), b: b.clone() }))
}

/// N(r) = #{k : |Λ_k| ≤ r}, extending the prefix until a term exceeds r.
pub fn counting_function(seq: &EigenSequence, r: &Float, ctx: PrecisionContext) -> Result<usize, SequenceError> {
    let moduli = seq.prefix_beyond(r, ctx)?;
    Ok(moduli.iter().filter(|m| *m <= r).count())
}

/// N(r) in exact rational arithmetic for real rational sequences.
pub fn counting_function_exact(seq: &EigenSequence, r: &Rational) -> Result<usize, SequenceError> {
    let mut n = 16;
    loop {
        if let Some(cap) = seq.known_prefix_length() {
            n = n.min(cap);
        }
        let terms = seq
            .exact_terms(n)
            .ok_or_else(|| SequenceError::InvalidInput(format!("{} has no exact terms", seq.label())))?;
        if terms.last().is_some_and(|t| t.clone().abs() > *r) {
            return Ok(terms.iter().filter(|t| (*t).clone().abs() <= *r).count());
        }
        if seq.known_prefix_length() == Some(n) {
            return Err(SequenceError::PrefixExhausted { requested: n + 1, available: n });
        }
        n *= 2;
    }
}

/// P_k = 1/∏_{1≤|k−n|<q} |Λ_k − Λ_n|, and 1 when q = 1.
pub fn condensation_product(seq: &EigenSequence, k: usize, q: u32, ctx: PrecisionContext) -> Result<Float, SequenceError> {
    if k == 0 || q == 0 {
        return Err(SequenceError::InvalidInput("k and q must be positive".into()));
    }
    let q = q as usize;
    let mut product = ctx.float(1);
    if q == 1 {
        return Ok(product);
    }
    let hi = k + q - 1;
    let terms = seq.terms(hi, ctx)?;
    let lo = k.saturating_sub(q - 1).max(1);
    for n in lo..=hi {
        if n == k {
            continue;
        }
        let diff = Complex::with_val(ctx.bits(), &terms[k - 1] - &terms[n - 1]);
        let d = Float::with_val(ctx.bits(), diff.abs_ref());
        if d.is_zero() {
            return Err(SequenceError::DegenerateSequence { k, n });
        }
        product *= d;
    }
    Ok(product.recip())
}
