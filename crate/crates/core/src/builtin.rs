//! Parity-check matrices shipped with the repository under `data/`.

use std::path::Path;

use crate::code::{parse_alist, CodeSpec, ParityCheckMatrix};
use crate::error::{Error, Result};

const CR_BCH_63_36: &str = include_str!("../../../data/cr_bch_63_36.alist");
const CR_BCH_63_45: &str = include_str!("../../../data/cr_bch_63_45.alist");
const HAMMING_7_4: &str = include_str!("../../../data/hamming_7_4.alist");

/// Identifiers accepted by [`load`].
pub const CODE_IDS: [&str; 3] = ["CR-BCH(63,36)", "CR-BCH(63,45)", "Hamming(7,4)"];

/// Code parameters and parity-check matrix for a shipped code.
pub fn load(code_id: &str) -> Result<(CodeSpec, ParityCheckMatrix)> {
    let text = match code_id {
        "CR-BCH(63,36)" => CR_BCH_63_36,
        "CR-BCH(63,45)" => CR_BCH_63_45,
        "Hamming(7,4)" => HAMMING_7_4,
        other => {
            return Err(Error::InvalidArgument(format!(
                "no shipped matrix for '{other}' (known: {})",
                CODE_IDS.join(", ")
            )))
        }
    };
    let h = parse_alist(text, code_id)?;
    let spec = CodeSpec::from_id(code_id)?;
    spec.check_matrix(&h)?;
    Ok((spec, h))
}

/// A shipped code, or `code_id`'s parameters with the matrix read from an
/// alist file.
pub fn load_with(code_id: &str, alist: Option<&Path>) -> Result<(CodeSpec, ParityCheckMatrix)> {
    match alist {
        None => load(code_id),
        Some(path) => {
            let h = ParityCheckMatrix::load_alist(path)?;
            let spec = CodeSpec::from_id(code_id)?;
            spec.check_matrix(&h)?;
            Ok((spec, h))
        }
    }
}

pub fn hamming_7_4() -> ParityCheckMatrix {
    load("Hamming(7,4)").expect("shipped matrix parses").1
}

pub fn cr_bch_63_36() -> (CodeSpec, ParityCheckMatrix) {
    load("CR-BCH(63,36)").expect("shipped matrix parses")
}

pub fn cr_bch_63_45() -> (CodeSpec, ParityCheckMatrix) {
    load("CR-BCH(63,45)").expect("shipped matrix parses")
}
