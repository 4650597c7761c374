//! Serde helpers writing exact rationals as `"n/d"` strings.

use serde::{Deserialize, Deserializer, Serializer};

use crate::Rational;

pub fn rational_to_string(r: &Rational) -> String {
    r.to_string()
}

pub fn rational_from_str(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let d: num_bigint::BigInt = d.trim().parse().ok()?;
            if d == 0.into() {
                return None;
            }
            Some(Rational::new(n.trim().parse().ok()?, d))
        }
        None => Some(Rational::from_integer(s.parse().ok()?)),
    }
}

/// `#[serde(with = "crate::serial::rational")]`
pub mod rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rational_to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        rational_from_str(&text).ok_or_else(|| serde::de::Error::custom(format!("not a rational: {text}")))
    }
}

/// `#[serde(with = "crate::serial::rational_triple")]`
pub mod rational_triple {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(r: &[Rational; 3], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(3))?;
        for v in r {
            seq.serialize_element(&rational_to_string(v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Rational; 3], D::Error> {
        let v = <[String; 3]>::deserialize(d)?;
        let parse =
            |t: &str| rational_from_str(t).ok_or_else(|| serde::de::Error::custom(format!("not a rational: {t}")));
        Ok([parse(&v[0])?, parse(&v[1])?, parse(&v[2])?])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let r = Rational::new((-41).into(), 256.into());
        assert_eq!(rational_to_string(&r), "-41/256");
        assert_eq!(rational_from_str("-41/256"), Some(r));
        assert_eq!(rational_from_str("3"), Some(Rational::from_integer(3.into())));
        assert_eq!(rational_from_str("1/0"), None);
    }
}
