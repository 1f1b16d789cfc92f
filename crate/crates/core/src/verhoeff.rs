//! Verhoeff check digits, as carried by the last digit of every SCTID.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed identifier {0:?}: expected at least two decimal digits")]
pub struct MalformedId(pub String);

// Multiplication table of the dihedral group D5.
const MUL: [[u8; 10]; 10] = [
    [0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
    [1, 2, 3, 4, 0, 6, 7, 8, 9, 5],
    [2, 3, 4, 0, 1, 7, 8, 9, 5, 6],
    [3, 4, 0, 1, 2, 8, 9, 5, 6, 7],
    [4, 0, 1, 2, 3, 9, 5, 6, 7, 8],
    [5, 9, 8, 7, 6, 0, 4, 3, 2, 1],
    [6, 5, 9, 8, 7, 1, 0, 4, 3, 2],
    [7, 6, 5, 9, 8, 2, 1, 0, 4, 3],
    [8, 7, 6, 5, 9, 3, 2, 1, 0, 4],
    [9, 8, 7, 6, 5, 4, 3, 2, 1, 0],
];

// Position-dependent permutations; row i is the base permutation applied i times.
const PERM: [[u8; 10]; 8] = [
    [0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
    [1, 5, 7, 6, 2, 8, 3, 0, 9, 4],
    [5, 8, 0, 3, 7, 9, 6, 1, 4, 2],
    [8, 9, 1, 6, 0, 4, 3, 5, 2, 7],
    [9, 4, 5, 3, 1, 2, 6, 8, 7, 0],
    [4, 2, 8, 6, 5, 7, 3, 9, 0, 1],
    [2, 7, 9, 3, 8, 0, 6, 4, 1, 5],
    [7, 0, 4, 6, 9, 1, 3, 2, 5, 8],
];

const INV: [u8; 10] = [0, 4, 3, 2, 1, 5, 6, 7, 8, 9];

fn fold(digits: &[u8], offset: usize) -> u8 {
    digits
        .iter()
        .rev()
        .enumerate()
        .fold(0, |acc, (i, &d)| {
            MUL[acc as usize][PERM[(i + offset) % 8][(d - b'0') as usize] as usize]
        })
}

/// True iff the Verhoeff checksum over the whole decimal string is zero.
pub fn verhoeff_valid(id: &str) -> Result<bool, MalformedId> {
    if id.len() < 2 || !id.bytes().all(|b| b.is_ascii_digit()) {
        return Err(MalformedId(id.to_owned()));
    }
    Ok(fold(id.as_bytes(), 0) == 0)
}

/// The check digit that makes `payload` followed by it Verhoeff-valid.
pub fn check_digit(payload: &str) -> Result<u8, MalformedId> {
    if payload.is_empty() || !payload.bytes().all(|b| b.is_ascii_digit()) {
        return Err(MalformedId(payload.to_owned()));
    }
    Ok(INV[fold(payload.as_bytes(), 1) as usize])
}

/// Appends the Verhoeff check digit to `payload`.
pub fn with_check_digit(payload: u64) -> u64 {
    let digit = check_digit(&payload.to_string()).expect("decimal rendering");
    payload * 10 + u64::from(digit)
}
