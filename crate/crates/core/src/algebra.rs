//! Concrete ternary Banach algebras.
//!
//! Two instances are provided:
//!
//! * square complex matrices with the product-induced ("trivial") ternary
//!   product `[abc] = (a*b)*c` and the Frobenius norm, and
//! * polynomials of odd degree in one variable with `[pqr] = p*q*r` and the
//!   coefficient l1 norm.
//!
//! Both norms are submultiplicative under the binary product, hence
//! `||[abc]|| <= ||a|| ||b|| ||c||` holds in either algebra. The matrix
//! algebra is unital (so the `[aeb]` bridge recovers the binary product);
//! the odd-polynomial algebra has no identity and is closed only under the
//! ternary product, since the product of two odd-degree polynomials has even
//! degree.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::ser::{SerializeMap, SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default cap on the number of stored polynomial terms.
pub const DEFAULT_TERM_CAP: usize = 100_000;

/// Which concrete algebra a context describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgebraKind {
    /// `dim x dim` complex matrices with `[abc] = (ab)c`.
    MatrixTrivial { dim: usize },
    /// Odd-degree polynomials with `[pqr] = pqr`.
    OddPolynomial,
}

/// The norm paired with each algebra instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    Frobenius,
    CoefficientL1,
}

/// A concrete ternary Banach algebra instance.
///
/// Owns the product, the norm, and the structural checks. Contexts are
/// immutable after construction and safe to share across threads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraContext {
    kind: AlgebraKind,
    norm_kind: NormKind,
    term_cap: usize,
}

/// A point of the algebra's underlying linear space.
///
/// Matrix entries are stored row-major; polynomial coefficients are a sparse
/// map from odd degree to coefficient with no explicitly stored zeros.
#[derive(Clone, Debug, PartialEq)]
pub enum Element {
    Matrix { dim: usize, entries: Vec<Scalar> },
    Poly { coeffs: BTreeMap<u64, Scalar> },
}

impl AlgebraContext {
    /// Matrix algebra of dimension `dim >= 1` with the Frobenius norm.
    pub fn matrix_trivial(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "matrix dimension must be >= 1".into(),
            ));
        }
        Ok(AlgebraContext {
            kind: AlgebraKind::MatrixTrivial { dim },
            norm_kind: NormKind::Frobenius,
            term_cap: DEFAULT_TERM_CAP,
        })
    }

    /// Odd-polynomial algebra with the coefficient l1 norm.
    pub fn odd_polynomial() -> Self {
        AlgebraContext {
            kind: AlgebraKind::OddPolynomial,
            norm_kind: NormKind::CoefficientL1,
            term_cap: DEFAULT_TERM_CAP,
        }
    }

    /// Override the polynomial term cap that guards runaway degree growth.
    pub fn with_term_cap(mut self, cap: usize) -> Self {
        self.term_cap = cap.max(1);
        self
    }

    pub fn kind(&self) -> AlgebraKind {
        self.kind
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm_kind
    }

    /// Matrix dimension, if this is a matrix context.
    pub fn dim(&self) -> Option<usize> {
        match self.kind {
            AlgebraKind::MatrixTrivial { dim } => Some(dim),
            AlgebraKind::OddPolynomial => None,
        }
    }

    pub fn zero(&self) -> Element {
        match self.kind {
            AlgebraKind::MatrixTrivial { dim } => Element::Matrix {
                dim,
                entries: vec![Scalar::ZERO; dim * dim],
            },
            AlgebraKind::OddPolynomial => Element::Poly {
                coeffs: BTreeMap::new(),
            },
        }
    }

    /// The multiplicative identity. Only the matrix algebra has one.
    pub fn identity(&self) -> Result<Element> {
        match self.kind {
            AlgebraKind::MatrixTrivial { dim } => Ok(Element::identity_matrix(dim)),
            AlgebraKind::OddPolynomial => Err(Error::InvalidParameter(
                "the odd-polynomial algebra has no identity element".into(),
            )),
        }
    }

    pub fn contains(&self, e: &Element) -> bool {
        match (&self.kind, e) {
            (AlgebraKind::MatrixTrivial { dim }, Element::Matrix { dim: d, entries }) => {
                d == dim && entries.len() == dim * dim
            }
            (AlgebraKind::OddPolynomial, Element::Poly { .. }) => true,
            _ => false,
        }
    }

    fn ensure_member(&self, e: &Element, role: &str) -> Result<()> {
        if self.contains(e) {
            Ok(())
        } else {
            Err(Error::ContextMismatch(format!(
                "{role} does not belong to {self:?}"
            )))
        }
    }

    /// Norm of an element: Frobenius for matrices, coefficient l1 for polynomials.
    pub fn norm(&self, a: &Element) -> Result<f64> {
        self.ensure_member(a, "norm argument")?;
        Ok(match a {
            Element::Matrix { entries, .. } => {
                entries.iter().map(|s| s.norm_sq()).sum::<f64>().sqrt()
            }
            Element::Poly { coeffs } => coeffs.values().map(|s| s.modulus()).sum(),
        })
    }

    pub fn add(&self, a: &Element, b: &Element) -> Result<Element> {
        self.ensure_member(a, "add lhs")?;
        self.ensure_member(b, "add rhs")?;
        Ok(match (a, b) {
            (Element::Matrix { dim, entries: ea }, Element::Matrix { entries: eb, .. }) => {
                Element::Matrix {
                    dim: *dim,
                    entries: ea.iter().zip(eb).map(|(&x, &y)| x + y).collect(),
                }
            }
            (Element::Poly { coeffs: ca }, Element::Poly { coeffs: cb }) => {
                let mut out = ca.clone();
                for (&d, &c) in cb {
                    let v = out.entry(d).or_insert(Scalar::ZERO);
                    *v += c;
                }
                Element::Poly { coeffs: prune(out) }
            }
            _ => unreachable!("membership checked above"),
        })
    }

    pub fn sub(&self, a: &Element, b: &Element) -> Result<Element> {
        self.add(a, &self.scalar_mul(Scalar::real(-1.0), b)?)
    }

    pub fn scalar_mul(&self, lambda: Scalar, a: &Element) -> Result<Element> {
        self.ensure_member(a, "scalar_mul argument")?;
        Ok(match a {
            Element::Matrix { dim, entries } => Element::Matrix {
                dim: *dim,
                entries: entries.iter().map(|&e| lambda * e).collect(),
            },
            Element::Poly { coeffs } => Element::Poly {
                coeffs: prune(coeffs.iter().map(|(&d, &c)| (d, lambda * c)).collect()),
            },
        })
    }

    /// Multiply by a real factor. Exact when the factor is a power of two.
    pub fn scale(&self, factor: f64, a: &Element) -> Result<Element> {
        self.scalar_mul(Scalar::real(factor), a)
    }

    /// The associative ternary product `[abc]`.
    pub fn ternary_product(&self, a: &Element, b: &Element, c: &Element) -> Result<Element> {
        self.ensure_member(a, "product slot 1")?;
        self.ensure_member(b, "product slot 2")?;
        self.ensure_member(c, "product slot 3")?;
        let ab = self.raw_binary(a, b)?;
        self.raw_binary(&ab, c)
    }

    /// The underlying binary product. For polynomials the result can leave
    /// the odd-degree algebra (odd + odd = even), so this is exposed only as
    /// the building block of `ternary_product` and the unital bridge.
    fn raw_binary(&self, a: &Element, b: &Element) -> Result<Element> {
        Ok(match (a, b) {
            (Element::Matrix { dim, entries: ea }, Element::Matrix { entries: eb, .. }) => {
                let n = *dim;
                let mut out = vec![Scalar::ZERO; n * n];
                for i in 0..n {
                    for k in 0..n {
                        let aik = ea[i * n + k];
                        if aik.is_zero() {
                            continue;
                        }
                        for j in 0..n {
                            out[i * n + j] += aik * eb[k * n + j];
                        }
                    }
                }
                Element::Matrix {
                    dim: n,
                    entries: out,
                }
            }
            (Element::Poly { coeffs: ca }, Element::Poly { coeffs: cb }) => {
                let mut out: BTreeMap<u64, Scalar> = BTreeMap::new();
                for (&da, &va) in ca {
                    for (&db, &vb) in cb {
                        let v = out.entry(da + db).or_insert(Scalar::ZERO);
                        *v += va * vb;
                        if out.len() > self.term_cap {
                            return Err(Error::DegreeOverflow {
                                terms: out.len(),
                                cap: self.term_cap,
                            });
                        }
                    }
                }
                Element::Poly { coeffs: prune(out) }
            }
            _ => {
                return Err(Error::ContextMismatch(
                    "binary product of elements from different algebras".into(),
                ))
            }
        })
    }

    /// Max deviation across the two ternary associativity identities
    /// `[[abc]de] = [a[bcd]e] = [ab[cde]]`.
    pub fn check_ternary_associativity(
        &self,
        a: &Element,
        b: &Element,
        c: &Element,
        d: &Element,
        e: &Element,
    ) -> Result<f64> {
        let left = self.ternary_product(&self.ternary_product(a, b, c)?, d, e)?;
        let mid = self.ternary_product(a, &self.ternary_product(b, c, d)?, e)?;
        let right = self.ternary_product(a, b, &self.ternary_product(c, d, e)?)?;
        let d1 = self.norm(&self.sub(&left, &mid)?)?;
        let d2 = self.norm(&self.sub(&mid, &right)?)?;
        Ok(d1.max(d2))
    }

    /// Defect of `e` as a right identity on `probe`: `||[probe, e, e] - probe||`.
    pub fn check_identity(&self, e: &Element, probe: &Element) -> Result<f64> {
        self.ensure_member(e, "identity candidate")?;
        self.ensure_member(probe, "identity probe")?;
        let aee = self.ternary_product(probe, e, e)?;
        self.norm(&self.sub(&aee, probe)?)
    }

    /// Binary product induced by an identity element: `a (.) b := [aeb]`.
    ///
    /// Fails with `IdentityViolation` when `e` does not act as an identity on
    /// `a` to within `1e-10 * (1 + ||a||)`.
    pub fn binary_from_identity(&self, e: &Element, a: &Element, b: &Element) -> Result<Element> {
        let defect = self.check_identity(e, a)?;
        let tol = 1e-10 * (1.0 + self.norm(a)?);
        if defect > tol {
            return Err(Error::IdentityViolation { defect, tol });
        }
        self.ensure_member(b, "bridge rhs")?;
        let ae = self.raw_binary(a, e)?;
        self.raw_binary(&ae, b)
    }

    /// Linearity defect in the first product slot:
    /// `||[a+a', b, c] - [abc] - [a'bc]||`, and likewise for slots 2 and 3
    /// via `slot`.
    pub fn check_slot_linearity(
        &self,
        slot: usize,
        a: &Element,
        a_prime: &Element,
        b: &Element,
        c: &Element,
    ) -> Result<f64> {
        let sum = self.add(a, a_prime)?;
        let (combined, single, single_prime) = match slot {
            1 => (
                self.ternary_product(&sum, b, c)?,
                self.ternary_product(a, b, c)?,
                self.ternary_product(a_prime, b, c)?,
            ),
            2 => (
                self.ternary_product(b, &sum, c)?,
                self.ternary_product(b, a, c)?,
                self.ternary_product(b, a_prime, c)?,
            ),
            3 => (
                self.ternary_product(b, c, &sum)?,
                self.ternary_product(b, c, a)?,
                self.ternary_product(b, c, a_prime)?,
            ),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "slot must be 1..=3, got {slot}"
                )))
            }
        };
        let resid = self.sub(&self.sub(&combined, &single)?, &single_prime)?;
        self.norm(&resid)
    }
}

impl Element {
    /// Row-major matrix from entries; `entries.len()` must equal `dim^2`.
    pub fn matrix(dim: usize, entries: Vec<Scalar>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::InvalidParameter(format!(
                "matrix wants {} entries for dim {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter("non-finite matrix entry".into()));
        }
        Ok(Element::Matrix { dim, entries })
    }

    pub fn identity_matrix(dim: usize) -> Self {
        let mut entries = vec![Scalar::ZERO; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Scalar::ONE;
        }
        Element::Matrix { dim, entries }
    }

    pub fn diagonal(values: &[Scalar]) -> Self {
        let dim = values.len();
        let mut entries = vec![Scalar::ZERO; dim * dim];
        for (i, &v) in values.iter().enumerate() {
            entries[i * dim + i] = v;
        }
        Element::Matrix { dim, entries }
    }

    /// Sparse polynomial from `(degree, coefficient)` pairs. Degrees must be
    /// odd; exact-zero coefficients are dropped.
    pub fn poly<I: IntoIterator<Item = (u64, Scalar)>>(coeffs: I) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (d, c) in coeffs {
            if d % 2 == 0 {
                return Err(Error::InvalidParameter(format!(
                    "polynomial degree {d} is even; only odd degrees are allowed"
                )));
            }
            if !c.is_finite() {
                return Err(Error::InvalidParameter("non-finite coefficient".into()));
            }
            if !c.is_zero() {
                let v = map.entry(d).or_insert(Scalar::ZERO);
                *v += c;
            }
        }
        Ok(Element::Poly { coeffs: prune(map) })
    }

    pub fn monomial(degree: u64, coeff: Scalar) -> Result<Self> {
        Element::poly([(degree, coeff)])
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<Scalar> {
        match self {
            Element::Matrix { dim, entries } => {
                if i < *dim && j < *dim {
                    Some(entries[i * dim + j])
                } else {
                    None
                }
            }
            Element::Poly { .. } => None,
        }
    }

    pub fn coeff(&self, degree: u64) -> Scalar {
        match self {
            Element::Poly { coeffs } => coeffs.get(&degree).copied().unwrap_or(Scalar::ZERO),
            Element::Matrix { .. } => Scalar::ZERO,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Element::Matrix { entries, .. } => entries.iter().all(|s| s.is_zero()),
            Element::Poly { coeffs } => coeffs.is_empty(),
        }
    }

    /// Entrywise complex conjugate (matrices only keep their shape).
    pub fn conj_entrywise(&self) -> Element {
        match self {
            Element::Matrix { dim, entries } => Element::Matrix {
                dim: *dim,
                entries: entries.iter().map(|s| s.conj()).collect(),
            },
            Element::Poly { coeffs } => Element::Poly {
                coeffs: coeffs.iter().map(|(&d, &c)| (d, c.conj())).collect(),
            },
        }
    }

    /// Conjugate transpose; `None` for polynomials.
    pub fn conj_transpose(&self) -> Option<Element> {
        match self {
            Element::Matrix { dim, entries } => {
                let n = *dim;
                let mut out = vec![Scalar::ZERO; n * n];
                for i in 0..n {
                    for j in 0..n {
                        out[j * n + i] = entries[i * n + j].conj();
                    }
                }
                Some(Element::Matrix {
                    dim: n,
                    entries: out,
                })
            }
            Element::Poly { .. } => None,
        }
    }

    /// Degrees carrying a nonzero coefficient, ascending.
    pub fn degrees(&self) -> Vec<u64> {
        match self {
            Element::Poly { coeffs } => coeffs.keys().copied().collect(),
            Element::Matrix { .. } => Vec::new(),
        }
    }
}

fn prune(map: BTreeMap<u64, Scalar>) -> BTreeMap<u64, Scalar> {
    map.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Matrix { dim, .. } => write!(f, "matrix[{dim}x{dim}]"),
            Element::Poly { coeffs } => write!(f, "poly[{} terms]", coeffs.len()),
        }
    }
}

// Elements serialize as the wire format used by configs and reports:
// matrices are row-major arrays of [re, im] pairs, polynomials are
// {"degree": [re, im]} maps with decimal string keys.
impl Serialize for Element {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Element::Matrix { entries, .. } => {
                let mut seq = serializer.serialize_seq(Some(entries.len()))?;
                for e in entries {
                    seq.serialize_element(e)?;
                }
                seq.end()
            }
            Element::Poly { coeffs } => {
                let mut map = serializer.serialize_map(Some(coeffs.len()))?;
                for (d, c) in coeffs {
                    map.serialize_entry(&d.to_string(), c)?;
                }
                map.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for Element {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ElementVisitor;
        impl<'de> Visitor<'de> for ElementVisitor {
            type Value = Element;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a flat [re,im] matrix array or a {degree: [re,im]} map")
            }
            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<Element, A::Error> {
                let mut entries: Vec<Scalar> = Vec::new();
                while let Some(s) = seq.next_element()? {
                    entries.push(s);
                }
                let dim = (entries.len() as f64).sqrt().round() as usize;
                if dim * dim != entries.len() || dim == 0 {
                    return Err(de::Error::custom(format!(
                        "matrix entry count {} is not a positive perfect square",
                        entries.len()
                    )));
                }
                Element::matrix(dim, entries).map_err(de::Error::custom)
            }
            fn visit_map<A: MapAccess<'de>>(
                self,
                mut map: A,
            ) -> std::result::Result<Element, A::Error> {
                let mut coeffs: Vec<(u64, Scalar)> = Vec::new();
                while let Some((key, value)) = map.next_entry::<String, Scalar>()? {
                    let degree: u64 = key.parse().map_err(de::Error::custom)?;
                    coeffs.push((degree, value));
                }
                Element::poly(coeffs).map_err(de::Error::custom)
            }
        }
        deserializer.deserialize_any(ElementVisitor)
    }
}
