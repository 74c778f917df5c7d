use crate::bits::pack_msb_first;
use crate::error::{Error, Result};

/// Plug-in Shannon entropy of the byte histogram, in bits per byte.
pub fn byte_entropy(bytes: &[u8]) -> f64 {
    if bytes.is_empty() {
        return 0.0;
    }
    let mut counts = [0u64; 256];
    for &b in bytes {
        counts[b as usize] += 1;
    }
    let n = bytes.len() as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Packs bits MSB-first, drops a trailing partial byte, and estimates
/// entropy per byte. Needs at least one full byte.
pub fn estimate_byte_entropy(bits: &[bool]) -> Result<f64> {
    if bits.len() < 8 {
        return Err(Error::InsufficientData {
            needed: 8,
            got: bits.len(),
        });
    }
    let whole = bits.len() / 8 * 8;
    Ok(byte_entropy(&pack_msb_first(&bits[..whole])))
}
