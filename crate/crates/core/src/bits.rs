//! Bit-sequence helpers shared by extraction, conditioning and evaluation.

use crate::error::{Error, Result};

/// Renders bits as ASCII `0`/`1`.
pub fn to_bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Parses ASCII `0`/`1`, ignoring surrounding whitespace.
pub fn parse_bit_string(text: &str) -> Result<Vec<bool>> {
    text.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::InvalidBits(format!(
                "unexpected character `{other}`"
            ))),
        })
        .collect()
}

/// Packs bits MSB-first; the final byte is zero-padded on the right.
pub fn pack_msb_first(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)))
        })
        .collect()
}

/// Unpacks bytes MSB-first.
pub fn unpack_msb_first(bytes: &[u8]) -> Vec<bool> {
    bytes
        .iter()
        .flat_map(|&byte| (0..8).rev().map(move |i| (byte >> i) & 1 == 1))
        .collect()
}

/// Length after dropping leading zero bits.
pub fn stripped_len(bits: &[bool]) -> usize {
    bits.iter()
        .position(|&b| b)
        .map_or(0, |first| bits.len() - first)
}

/// Number of positions where the two sequences differ, over the shorter length.
pub fn hamming_prefix(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}
