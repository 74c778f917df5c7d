//! Key conditioning, message encryption and image-carrier embedding.
//!
//! Both devices must reach the same key without talking to each other, so the
//! KDF salt is a fixed application constant rather than a per-session value.
//! Messages are AES-256-CBC with PKCS#7 padding and a fresh random IV; the
//! on-disk blob is `IV || ciphertext`. Carriers must be lossless (PNG): lossy
//! formats destroy the least-significant bits that hold the payload.

use std::fmt::Write as _;

use aes::cipher::{block_padding::Pkcs7, BlockDecryptMut, BlockEncryptMut, KeyIvInit};
use image::RgbImage;
use rand::{rngs::OsRng, CryptoRng, RngCore};
use sha2::Sha256;

use crate::error::{Error, Result};
use crate::extract::SharedSecret;

type Aes256CbcEnc = cbc::Encryptor<aes::Aes256>;
type Aes256CbcDec = cbc::Decryptor<aes::Aes256>;

/// Public, fixed salt shared by every installation.
pub const APP_SALT: &[u8] = b"gyrosecret/shared-key/v1";
pub const DEFAULT_KDF_ITERATIONS: u32 = 100_000;
pub const KEY_LEN: usize = 32;
pub const BLOCK_LEN: usize = 16;
const STEGO_HEADER_BYTES: usize = 4;

#[derive(Clone, PartialEq, Eq)]
pub struct ConditionedKey {
    pub key_bytes: [u8; KEY_LEN],
    pub kdf_salt: Vec<u8>,
    pub kdf_iterations: u32,
}

impl std::fmt::Debug for ConditionedKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConditionedKey")
            .field("key_bytes", &"<redacted>")
            .field("kdf_salt", &hex::encode(&self.kdf_salt))
            .field("kdf_iterations", &self.kdf_iterations)
            .finish()
    }
}

impl ConditionedKey {
    /// `key=<hex>`, `salt=<hex>` and `iterations=<n>` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "key={}", hex::encode(self.key_bytes));
        let _ = writeln!(out, "salt={}", hex::encode(&self.kdf_salt));
        let _ = writeln!(out, "iterations={}", self.kdf_iterations);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::KeyFormat(msg.to_string());
        let (mut key, mut salt, mut iterations) = (None, None, None);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad("expected key=value"))?;
            match k.trim() {
                "key" => {
                    let bytes = hex::decode(v.trim()).map_err(|_| bad("key is not hex"))?;
                    let arr: [u8; KEY_LEN] =
                        bytes.try_into().map_err(|_| bad("key must be 32 bytes"))?;
                    key = Some(arr);
                }
                "salt" => salt = Some(hex::decode(v.trim()).map_err(|_| bad("salt is not hex"))?),
                "iterations" => {
                    iterations = Some(v.trim().parse().map_err(|_| bad("bad iteration count"))?)
                }
                other => return Err(bad(&format!("unknown field `{other}`"))),
            }
        }
        Ok(Self {
            key_bytes: key.ok_or_else(|| bad("missing key"))?,
            kdf_salt: salt.unwrap_or_else(|| APP_SALT.to_vec()),
            kdf_iterations: iterations.unwrap_or(DEFAULT_KDF_ITERATIONS),
        })
    }
}

/// PBKDF2-HMAC-SHA256 over the MSB-first packing of the whole bit string.
pub fn condition_secret(secret: &SharedSecret) -> Result<ConditionedKey> {
    condition_secret_with(secret, DEFAULT_KDF_ITERATIONS)
}

pub fn condition_secret_with(secret: &SharedSecret, iterations: u32) -> Result<ConditionedKey> {
    condition_bits(&secret.bits, iterations)
}

/// Conditioning on a bare bit sequence.
pub fn condition_bits(bits: &[bool], iterations: u32) -> Result<ConditionedKey> {
    if bits.is_empty() {
        return Err(Error::EmptySecret);
    }
    if iterations == 0 {
        return Err(Error::KeyFormat("iteration count must be positive".into()));
    }
    let mut key_bytes = [0u8; KEY_LEN];
    let password = crate::bits::pack_msb_first(bits);
    pbkdf2::pbkdf2_hmac::<Sha256>(&password, APP_SALT, iterations, &mut key_bytes);
    Ok(ConditionedKey {
        key_bytes,
        kdf_salt: APP_SALT.to_vec(),
        kdf_iterations: iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptedMessage {
    pub iv: [u8; BLOCK_LEN],
    pub ciphertext: Vec<u8>,
}

impl EncryptedMessage {
    /// `IV || ciphertext`.
    pub fn to_bytes(&self) -> Vec<u8> {
        [&self.iv[..], &self.ciphertext].concat()
    }

    pub fn from_bytes(blob: &[u8]) -> Result<Self> {
        if blob.len() < 2 * BLOCK_LEN {
            return Err(Error::CiphertextFormat(format!(
                "{} bytes is shorter than IV plus one block",
                blob.len()
            )));
        }
        let (iv, ciphertext) = blob.split_at(BLOCK_LEN);
        if ciphertext.len() % BLOCK_LEN != 0 {
            return Err(Error::CiphertextFormat(format!(
                "ciphertext length {} is not a multiple of {BLOCK_LEN}",
                ciphertext.len()
            )));
        }
        Ok(Self {
            iv: iv.try_into().expect("split at block length"),
            ciphertext: ciphertext.to_vec(),
        })
    }
}

/// AES-256-CBC with an IV drawn from the operating system.
pub fn encrypt_message(key: &ConditionedKey, plaintext: &[u8]) -> Result<EncryptedMessage> {
    encrypt_message_with_rng(key, plaintext, &mut OsRng)
}

pub fn encrypt_message_with_rng<R: RngCore + CryptoRng>(
    key: &ConditionedKey,
    plaintext: &[u8],
    rng: &mut R,
) -> Result<EncryptedMessage> {
    if plaintext.is_empty() {
        return Err(Error::EmptyPlaintext);
    }
    let mut iv = [0u8; BLOCK_LEN];
    rng.try_fill_bytes(&mut iv)
        .map_err(|e| Error::Rng(e.to_string()))?;
    let ciphertext = Aes256CbcEnc::new(&key.key_bytes.into(), &iv.into())
        .encrypt_padded_vec_mut::<Pkcs7>(plaintext);
    Ok(EncryptedMessage { iv, ciphertext })
}

/// Inverse of [`encrypt_message`]. Nothing is returned unless the padding validates.
pub fn decrypt_message(key: &ConditionedKey, msg: &EncryptedMessage) -> Result<Vec<u8>> {
    if msg.ciphertext.is_empty() || !msg.ciphertext.len().is_multiple_of(BLOCK_LEN) {
        return Err(Error::CiphertextFormat(format!(
            "ciphertext length {} is not a positive multiple of {BLOCK_LEN}",
            msg.ciphertext.len()
        )));
    }
    Aes256CbcDec::new(&key.key_bytes.into(), &msg.iv.into())
        .decrypt_padded_vec_mut::<Pkcs7>(&msg.ciphertext)
        .map_err(|_| Error::Decrypt)
}

/// Bits available in the carrier: one per channel byte.
pub fn carrier_capacity_bits(carrier: &RgbImage) -> usize {
    carrier.as_raw().len()
}

/// Writes a 32-bit big-endian length header and the payload into the LSBs of
/// the channel bytes, row-major and R, G, B within a pixel, MSB of each byte first.
pub fn embed_in_image(carrier: &RgbImage, payload: &[u8]) -> Result<RgbImage> {
    let length = u32::try_from(payload.len()).map_err(|_| Error::Capacity {
        needed_bits: usize::MAX,
        available_bits: carrier_capacity_bits(carrier),
    })?;
    let needed_bits = (payload.len() + STEGO_HEADER_BYTES) * 8;
    let available_bits = carrier_capacity_bits(carrier);
    if needed_bits > available_bits {
        return Err(Error::Capacity {
            needed_bits,
            available_bits,
        });
    }
    let message = [&length.to_be_bytes()[..], payload].concat();
    let mut stego = carrier.clone();
    let channels: &mut [u8] = &mut stego;
    for (channel, bit) in channels
        .iter_mut()
        .zip(crate::bits::unpack_msb_first(&message))
    {
        *channel = (*channel & !1) | u8::from(bit);
    }
    Ok(stego)
}

/// Reads back a payload written by [`embed_in_image`].
pub fn extract_from_image(stego: &RgbImage) -> Result<Vec<u8>> {
    let channels = stego.as_raw();
    let read_bytes = |offset: usize, count: usize| -> Vec<u8> {
        channels[offset * 8..(offset + count) * 8]
            .chunks_exact(8)
            .map(|byte| byte.iter().fold(0u8, |acc, c| (acc << 1) | (c & 1)))
            .collect()
    };
    if channels.len() < STEGO_HEADER_BYTES * 8 {
        return Err(Error::StegoFormat(
            "image too small for a length header".into(),
        ));
    }
    let header: [u8; 4] = read_bytes(0, STEGO_HEADER_BYTES)
        .try_into()
        .expect("four header bytes");
    let length = u32::from_be_bytes(header) as usize;
    let capacity_bytes = channels.len() / 8 - STEGO_HEADER_BYTES;
    if length > capacity_bytes {
        return Err(Error::StegoFormat(format!(
            "header claims {length} bytes, image holds at most {capacity_bytes}"
        )));
    }
    Ok(read_bytes(STEGO_HEADER_BYTES, length))
}
