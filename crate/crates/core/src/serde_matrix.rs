//! Serde adapter writing a [`GeneralMatrix`] as nested rows.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::matrix::{general_from_rows, general_to_rows, GeneralMatrix};

pub fn serialize<S: Serializer>(m: &GeneralMatrix, s: S) -> Result<S::Ok, S::Error> {
    general_to_rows(m).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<GeneralMatrix, D::Error> {
    let rows = Vec::<Vec<f64>>::deserialize(d)?;
    general_from_rows(&rows).map_err(serde::de::Error::custom)
}
