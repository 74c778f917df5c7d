//! Iterative radix-2 Cooley-Tukey transform, generic over the scalar type.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Complex sequence whose length is fixed by the transform size.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector<T>(Vec<Complex<T>>);

impl<T: Scalar> ComplexVector<T> {
    pub fn new(elements: Vec<Complex<T>>) -> Self {
        Self(elements)
    }

    /// Builds `re[i] + j im[i]`.
    pub fn from_parts(re: &[T], im: &[T]) -> Self {
        Self(
            re.iter()
                .zip(im)
                .map(|(&a, &b)| Complex::new(a, b))
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex<T>> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<T> From<Vec<Complex<T>>> for ComplexVector<T> {
    fn from(v: Vec<Complex<T>>) -> Self {
        Self(v)
    }
}

/// Forward transform `X_k = Σ x_m e^{-j2πkm/N}`, unnormalized.
pub fn dft<T: Scalar>(x: &ComplexVector<T>) -> Result<ComplexVector<T>> {
    let mut data = x.0.clone();
    transform(&mut data, -T::one())?;
    Ok(ComplexVector(data))
}

/// Inverse transform with the `1/N` factor.
pub fn idft<T: Scalar>(x: &ComplexVector<T>) -> Result<ComplexVector<T>> {
    let mut data = x.0.clone();
    transform(&mut data, T::one())?;
    let scale = T::one() / T::of_usize(data.len());
    for v in &mut data {
        *v = v.scale(scale);
    }
    Ok(ComplexVector(data))
}

fn transform<T: Scalar>(data: &mut [Complex<T>], sign: T) -> Result<()> {
    let n = data.len();
    if !n.is_power_of_two() {
        return Err(Error::FftSize(n));
    }
    if n == 1 {
        return Ok(());
    }

    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            data.swap(i, j);
        }
    }

    let tau = T::PI() + T::PI();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let twiddles: Vec<Complex<T>> = (0..half)
            .map(|k| {
                let angle = sign * tau * T::of_usize(k) / T::of_usize(len);
                Complex::new(angle.cos(), angle.sin())
            })
            .collect();
        for chunk in data.chunks_exact_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for ((a, b), w) in lo.iter_mut().zip(hi.iter_mut()).zip(&twiddles) {
                let t = *b * *w;
                *b = *a - t;
                *a += t;
            }
        }
        len <<= 1;
    }
    Ok(())
}
