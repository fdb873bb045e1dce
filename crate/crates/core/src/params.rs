//! The admissible parameter domain `(z, z′, r)` and the jump rate `q`.
//!
//! Only the real invariants `s = z + z′` and `p = z z′` are kept; every rate
//! is the real quadratic `q(c) = p + s c + c²` in the content `c = j − i`.
//! Admissibility is equivalent to `q(k) > 0` for every integer `k`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partitions::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum ParamKind {
    /// `z′ = z̄` with nonzero imaginary part.
    ConjugatePair,
    /// Both parameters real and inside `(m, m+1)`.
    RealInterval { m: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub s: f64,
    pub p: f64,
    pub kind: ParamKind,
    pub r: f64,
}

/// A complex number parsed from strings like `"0.5"`, `"1+2i"`, `"-3.5i"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn real(re: f64) -> Self {
        Complex { re, im: 0.0 }
    }
}

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im == 0.0 {
            write!(f, "{}", self.re)
        } else if self.im < 0.0 {
            write!(f, "{}-{}i", self.re, -self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

impl FromStr for Complex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cannot parse complex number {s:?}"));
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(bad());
        }
        let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
            return t.parse::<f64>().map(Complex::real).map_err(|_| bad());
        };
        // Split at the last sign that is not part of an exponent.
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let (re_str, im_str) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im_str {
            "" | "+" => 1.0,
            "-" => -1.0,
            x => x.parse::<f64>().map_err(|_| bad())?,
        };
        let re = re_str.parse::<f64>().map_err(|_| bad())?;
        Ok(Complex { re, im })
    }
}

/// Quadratic `p + s c + c²`.
fn quad(s: f64, p: f64, c: f64) -> f64 {
    p + s * c + c * c
}

/// Integers nearest the vertex of `c ↦ c² + s c + p`; the minimum over ℤ
/// is attained at one of them.
fn vertex_integers(s: f64) -> [f64; 2] {
    let v = -s / 2.0;
    [v.floor(), v.ceil()]
}

impl Parameters {
    /// Checks admissibility of `(z, z′)` and `r > 0`.
    pub fn validate(z_re: f64, z_im: f64, zp_re: f64, zp_im: f64, r: f64) -> Result<Self> {
        let vals = [z_re, z_im, zp_re, zp_im, r];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InadmissibleParameters("all values must be finite".into()));
        }
        if r <= 0.0 {
            return Err(Error::InadmissibleParameters(format!("r = {r} must be positive")));
        }
        let s = z_re + zp_re;
        let p = z_re * zp_re - z_im * zp_im;
        let kind = match (z_im == 0.0, zp_im == 0.0) {
            (true, true) => {
                let (a, b) = if z_re <= zp_re { (z_re, zp_re) } else { (zp_re, z_re) };
                if a.floor() == b.floor() && a.fract() != 0.0 && b.fract() != 0.0 {
                    ParamKind::RealInterval { m: a.floor() as i64 }
                } else {
                    let k = if a.fract() == 0.0 { -a } else { -b.floor() };
                    return Err(Error::InadmissibleParameters(format!(
                        "z = {z_re}, z' = {zp_re} are not in a common open unit interval; \
                         witness k = {}: (z+k)(z'+k) = {} <= 0",
                        k as i64, (z_re + k) * (zp_re + k)
                    )));
                }
            }
            (false, false) if z_re == zp_re && z_im == -zp_im => ParamKind::ConjugatePair,
            _ => {
                return Err(Error::InadmissibleParameters(format!(
                    "z = {}, z' = {} are neither complex conjugates nor real",
                    Complex { re: z_re, im: z_im },
                    Complex { re: zp_re, im: zp_im }
                )))
            }
        };
        Ok(Parameters { s, p, kind, r })
    }

    pub fn from_complex(z: Complex, zp: Complex, r: f64) -> Result<Self> {
        Self::validate(z.re, z.im, zp.re, zp.im, r)
    }

    /// Builds parameters directly from the invariants `(s, p)`.
    pub fn from_invariants(s: f64, p: f64, r: f64) -> Result<Self> {
        if !(s.is_finite() && p.is_finite() && r.is_finite()) || r <= 0.0 {
            return Err(Error::InadmissibleParameters(format!("s = {s}, p = {p}, r = {r}")));
        }
        for k in vertex_integers(s) {
            if quad(s, p, k) <= 0.0 {
                return Err(Error::InadmissibleParameters(format!(
                    "witness k = {}: q(k) = {} <= 0",
                    k as i64,
                    quad(s, p, k)
                )));
            }
        }
        let disc = s * s - 4.0 * p;
        let kind = if disc < 0.0 {
            ParamKind::ConjugatePair
        } else {
            ParamKind::RealInterval { m: ((s - disc.sqrt()) / 2.0).floor() as i64 }
        };
        Ok(Parameters { s, p, kind, r })
    }

    pub fn with_r(&self, r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InadmissibleParameters(format!("r = {r} must be positive")));
        }
        Ok(Parameters { r, ..*self })
    }

    /// `q` as a function of the content.
    pub fn q_content(&self, c: i64) -> f64 {
        quad(self.s, self.p, c as f64)
    }

    /// `q(i, j) = (z + j − i)(z′ + j − i)`.
    pub fn q_rate(&self, cell: Cell) -> f64 {
        self.q_content(cell.content())
    }

    /// `z z′`.
    pub fn zz(&self) -> f64 {
        self.p
    }
}

impl Default for Parameters {
    fn default() -> Self {
        Parameters::validate(0.5, 0.0, 0.5, 0.0, 1.0).expect("default parameters are admissible")
    }
}

/// Parameters with exact rational invariants, for identity checking.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactParameters {
    pub s: BigRational,
    pub p: BigRational,
    pub r: BigRational,
}

impl ExactParameters {
    /// Accepts any rational `(s, p)` with `q(k) > 0` on ℤ and `r > 0`.
    pub fn new(s: BigRational, p: BigRational, r: BigRational) -> Result<Self> {
        if !r.is_positive() {
            return Err(Error::InadmissibleParameters(format!("r = {r} must be positive")));
        }
        let v = -&s / BigRational::from_integer(BigInt::from(2));
        for k in [v.floor(), v.ceil()] {
            let q = &p + &s * &k + &k * &k;
            if q <= BigRational::zero() {
                return Err(Error::InadmissibleParameters(format!("witness k = {k}: q(k) = {q} <= 0")));
            }
        }
        Ok(ExactParameters { s, p, r })
    }

    /// Convenience constructor from `(numerator, denominator)` pairs.
    pub fn from_ratios(s: (i64, i64), p: (i64, i64), r: (i64, i64)) -> Result<Self> {
        let q = |(n, d): (i64, i64)| BigRational::new(BigInt::from(n), BigInt::from(d));
        Self::new(q(s), q(p), q(r))
    }

    pub fn q_content(&self, c: i64) -> BigRational {
        let c = BigRational::from_integer(BigInt::from(c));
        &self.p + &self.s * &c + &c * &c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn validate_examples() {
        let a = Parameters::validate(0.5, 0.0, 0.5, 0.0, 1.0).unwrap();
        assert_eq!(a.kind, ParamKind::RealInterval { m: 0 });
        assert_eq!((a.s, a.p), (1.0, 0.25));

        let b = Parameters::validate(1.0, 2.0, 1.0, -2.0, 2.0).unwrap();
        assert_eq!(b.kind, ParamKind::ConjugatePair);
        assert_eq!((b.s, b.p), (2.0, 5.0));

        let err = Parameters::validate(0.5, 0.0, 1.5, 0.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("k = -1"), "{err}");
    }

    #[test]
    fn validate_rejections() {
        assert!(Parameters::validate(0.5, 0.0, 0.5, 0.0, 0.0).is_err());
        assert!(Parameters::validate(0.5, 0.0, 0.5, 0.0, -1.0).is_err());
        assert!(Parameters::validate(1.0, 2.0, 1.0, 2.0, 1.0).is_err());
        assert!(Parameters::validate(1.0, 2.0, 1.5, -2.0, 1.0).is_err());
        assert!(Parameters::validate(1.0, 2.0, 1.0, 0.0, 1.0).is_err());
        // Integer endpoints make some q(k) vanish.
        assert!(Parameters::validate(1.0, 0.0, 1.5, 0.0, 1.0).is_err());
        assert!(Parameters::validate(-0.5, 0.0, -0.5, 0.0, 0.5).is_ok());
    }

    #[test]
    fn q_rate_examples() {
        let a = Parameters::validate(0.5, 0.0, 0.5, 0.0, 1.0).unwrap();
        assert_eq!(a.q_rate(Cell { i: 1, j: 1 }), 0.25);
        let b = Parameters::validate(1.0, 2.0, 1.0, -2.0, 2.0).unwrap();
        assert_eq!(b.q_rate(Cell { i: 1, j: 2 }), 8.0);
        assert_eq!(b.q_rate(Cell { i: 3, j: 5 }), b.q_rate(Cell { i: 4, j: 6 }));
    }

    #[test]
    fn complex_parsing() {
        let p = |s: &str| s.parse::<Complex>().unwrap();
        assert_eq!(p("0.5"), Complex { re: 0.5, im: 0.0 });
        assert_eq!(p("1+2i"), Complex { re: 1.0, im: 2.0 });
        assert_eq!(p("1-2i"), Complex { re: 1.0, im: -2.0 });
        assert_eq!(p("-3.5i"), Complex { re: 0.0, im: -3.5 });
        assert_eq!(p("i"), Complex { re: 0.0, im: 1.0 });
        assert_eq!(p("1e-1+2e+0i"), Complex { re: 0.1, im: 2.0 });
        assert!("abc".parse::<Complex>().is_err());
    }

    #[test]
    fn invariants_roundtrip() {
        let a = Parameters::from_invariants(1.0, 0.25, 1.0).unwrap();
        assert_eq!(a.kind, ParamKind::RealInterval { m: 0 });
        assert_eq!(Parameters::from_invariants(2.0, 5.0, 1.0).unwrap().kind, ParamKind::ConjugatePair);
        assert!(Parameters::from_invariants(2.0, 0.75, 1.0).is_err());
    }

    #[test]
    fn exact_admissibility() {
        assert!(ExactParameters::from_ratios((1, 1), (1, 4), (1, 1)).is_ok());
        assert!(ExactParameters::from_ratios((-1, 1), (1, 4), (1, 2)).is_ok());
        assert!(ExactParameters::from_ratios((2, 1), (3, 4), (1, 1)).is_err());
        assert!(ExactParameters::from_ratios((1, 1), (1, 4), (0, 1)).is_err());
    }

    fn admissible() -> impl Strategy<Value = (f64, f64, f64, f64)> {
        prop_oneof![
            (-5.0f64..5.0, 0.01f64..5.0).prop_map(|(re, im)| (re, im, re, -im)),
            (-6i64..6, 0.01f64..0.99, 0.01f64..0.99)
                .prop_map(|(m, a, b)| (m as f64 + a, 0.0, m as f64 + b, 0.0)),
        ]
    }

    proptest! {
        #[test]
        fn q_positive_on_contents((zr, zi, wr, wi) in admissible(), r in 0.01f64..10.0) {
            let prm = Parameters::validate(zr, zi, wr, wi, r).unwrap();
            for c in -64..=64 {
                prop_assert!(prm.q_content(c) > 0.0);
            }
        }

        #[test]
        fn swap_symmetry((zr, zi, wr, wi) in admissible(), r in 0.01f64..10.0) {
            let a = Parameters::validate(zr, zi, wr, wi, r).unwrap();
            let b = Parameters::validate(wr, wi, zr, zi, r).unwrap();
            prop_assert_eq!(a.s, b.s);
            prop_assert_eq!(a.p, b.p);
        }

        #[test]
        fn swap_rejects_symmetrically(a in -4.0f64..4.0, b in -4.0f64..4.0) {
            let x = Parameters::validate(a, 0.0, b, 0.0, 1.0).is_ok();
            let y = Parameters::validate(b, 0.0, a, 0.0, 1.0).is_ok();
            prop_assert_eq!(x, y);
        }

        #[test]
        fn content_dependence(i in 1usize..50, j in 1usize..50, k in 0usize..50) {
            let prm = Parameters::validate(0.3, 1.7, 0.3, -1.7, 1.0).unwrap();
            prop_assert_eq!(prm.q_rate(Cell { i, j }), prm.q_rate(Cell { i: i + k, j: j + k }));
        }
    }
}
