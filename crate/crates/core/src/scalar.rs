//! Complex scalars in double precision.
//!
//! The scalar field is `R` or `C`; real-only experiments simply keep `im = 0`.
//! Scalars serialize as `[re, im]` pairs.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::de::{self, Deserialize, Deserializer, SeqAccess, Visitor};
use serde::ser::{Serialize, SerializeTuple, Serializer};

/// A complex number with `f64` parts.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Scalar {
    pub re: f64,
    pub im: f64,
}

impl Scalar {
    pub const ZERO: Scalar = Scalar { re: 0.0, im: 0.0 };
    pub const ONE: Scalar = Scalar { re: 1.0, im: 0.0 };
    pub const I: Scalar = Scalar { re: 0.0, im: 1.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Scalar { re, im }
    }

    pub fn real(re: f64) -> Self {
        Scalar { re, im: 0.0 }
    }

    /// Point on the unit circle at angle `theta`.
    pub fn from_angle(theta: f64) -> Self {
        Scalar {
            re: theta.cos(),
            im: theta.sin(),
        }
    }

    pub fn conj(self) -> Self {
        Scalar {
            re: self.re,
            im: -self.im,
        }
    }

    /// Squared modulus `re^2 + im^2`.
    pub fn norm_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn modulus(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Argument in `(-pi, pi]`; zero for the zero scalar.
    pub fn arg(self) -> f64 {
        if self.re == 0.0 && self.im == 0.0 {
            0.0
        } else {
            self.im.atan2(self.re)
        }
    }

    pub fn is_zero(self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn scale(self, factor: f64) -> Self {
        Scalar {
            re: self.re * factor,
            im: self.im * factor,
        }
    }

    pub fn inverse(self) -> Option<Self> {
        let d = self.norm_sq();
        if d == 0.0 {
            None
        } else {
            Some(Scalar {
                re: self.re / d,
                im: -self.im / d,
            })
        }
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        Scalar {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl AddAssign for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        self.re += rhs.re;
        self.im += rhs.im;
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        Scalar {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        Scalar {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im >= 0.0 {
            write!(f, "{}+{}i", self.re, self.im)
        } else {
            write!(f, "{}{}i", self.re, self.im)
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(2)?;
        t.serialize_element(&self.re)?;
        t.serialize_element(&self.im)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct PairVisitor;
        impl<'de> Visitor<'de> for PairVisitor {
            type Value = Scalar;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a [re, im] pair")
            }
            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<Scalar, A::Error> {
                let re: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let im: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                Ok(Scalar { re, im })
            }
        }
        deserializer.deserialize_tuple(2, PairVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_basics() {
        let a = Scalar::new(1.0, 2.0);
        let b = Scalar::new(3.0, -1.0);
        assert_eq!(a + b, Scalar::new(4.0, 1.0));
        assert_eq!(a - b, Scalar::new(-2.0, 3.0));
        // (1+2i)(3-i) = 3 - i + 6i + 2 = 5 + 5i
        assert_eq!(a * b, Scalar::new(5.0, 5.0));
        assert_eq!(-a, Scalar::new(-1.0, -2.0));
    }

    #[test]
    fn i_squared_is_minus_one() {
        assert_eq!(Scalar::I * Scalar::I, Scalar::new(-1.0, 0.0));
    }

    #[test]
    fn modulus_and_conj() {
        let z = Scalar::new(3.0, 4.0);
        assert_eq!(z.modulus(), 5.0);
        assert_eq!(z.conj(), Scalar::new(3.0, -4.0));
        assert_eq!((z * z.conj()).re, 25.0);
    }

    #[test]
    fn unit_circle_points_have_modulus_one() {
        for k in 0..16 {
            let theta = k as f64 * std::f64::consts::PI / 8.0;
            let z = Scalar::from_angle(theta);
            assert!((z.modulus() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let z = Scalar::new(2.0, -3.0);
        let w = z.inverse().unwrap() * z;
        assert!((w.re - 1.0).abs() < 1e-15);
        assert!(w.im.abs() < 1e-15);
        assert!(Scalar::ZERO.inverse().is_none());
    }

    #[test]
    fn serde_pair_roundtrip() {
        let z = Scalar::new(0.5, -1.25);
        let s = serde_json::to_string(&z).unwrap();
        assert_eq!(s, "[0.5,-1.25]");
        let back: Scalar = serde_json::from_str(&s).unwrap();
        assert_eq!(back, z);
    }
}
