use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Boolean selection over the feature columns of a dataset.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureMask(Vec<bool>);

impl FeatureMask {
    pub fn new(bits: Vec<bool>) -> Self {
        FeatureMask(bits)
    }

    pub fn full(len: usize) -> Self {
        FeatureMask(vec![true; len])
    }

    pub fn empty(len: usize) -> Self {
        FeatureMask(vec![false; len])
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Self {
        let mut bits = vec![false; len];
        for &i in indices {
            bits[i] = true;
        }
        FeatureMask(bits)
    }

    /// Parse a string of `0`/`1` characters.
    pub fn parse_bits(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidMask(format!(
                    "unexpected character `{other}`"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(FeatureMask)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Indices of the selected features, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn to_bit_string(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Debug for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeatureMask({})", self.to_bit_string())
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bit_string())
    }
}

impl Serialize for FeatureMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_bit_string())
    }
}

impl<'de> Deserialize<'de> for FeatureMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        FeatureMask::parse_bits(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_string_round_trip() {
        let m = FeatureMask::new(vec![true, false, true, true]);
        assert_eq!(m.to_bit_string(), "1011");
        assert_eq!(FeatureMask::parse_bits("1011").unwrap(), m);
        assert_eq!(m.indices(), vec![0, 2, 3]);
        assert_eq!(m.count(), 3);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "\"1011\"");
        assert_eq!(serde_json::from_str::<FeatureMask>(&json).unwrap(), m);
    }

    #[test]
    fn rejects_bad_characters() {
        assert!(FeatureMask::parse_bits("10x").is_err());
    }
}
