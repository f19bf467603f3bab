//! Serde adapters writing complex numbers as `{"re": .., "im": ..}`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::numerics::C64;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Repr {
    re: f64,
    im: f64,
}

impl From<C64> for Repr {
    fn from(z: C64) -> Self {
        Repr { re: z.re, im: z.im }
    }
}

impl From<Repr> for C64 {
    fn from(r: Repr) -> Self {
        C64::new(r.re, r.im)
    }
}

pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
    Repr::from(*z).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
    Repr::deserialize(d).map(C64::from)
}

pub mod array {
    use super::*;

    pub fn serialize<S: Serializer, const N: usize>(v: &[C64; N], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&z| Repr::from(z)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[C64; N], D::Error> {
        let items: Vec<Repr> = Vec::deserialize(d)?;
        let len = items.len();
        let values: Vec<C64> = items.into_iter().map(C64::from).collect();
        values
            .try_into()
            .map_err(|_| D::Error::custom(format!("expected {N} complex numbers, got {len}")))
    }
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&z| Repr::from(z)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let items: Vec<Repr> = Vec::deserialize(d)?;
        Ok(items.into_iter().map(C64::from).collect())
    }
}

pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<C64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(Repr::from).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<C64>, D::Error> {
        Ok(Option::<Repr>::deserialize(d)?.map(C64::from))
    }
}
