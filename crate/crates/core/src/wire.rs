//! Fixed-width big-endian encoding of annotation messages.

use alloc::vec::Vec;

use crate::error::Reject;
use crate::field::{FieldElement as Fe, PrimeField};
use crate::poly::DensePolynomial;
use crate::streams::PairwiseHash;

#[derive(Clone, Debug, Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn i64(&mut self, v: i64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u128(&mut self, v: u128) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn i128(&mut self, v: i128) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    /// A residue in exactly `field.byte_len()` bytes.
    pub fn fe(&mut self, field: &PrimeField, v: Fe) -> &mut Self {
        let bytes = v.value().to_be_bytes();
        self.buf.extend_from_slice(&bytes[16 - field.byte_len()..]);
        self
    }

    pub fn hash(&mut self, h: &PairwiseHash) -> &mut Self {
        self.u64(h.a).u64(h.b).u64(h.p).u64(h.range)
    }

    /// Modulus, degree, then the coefficients lowest first.
    pub fn poly(&mut self, field: &PrimeField, p: &DensePolynomial) -> &mut Self {
        self.u128(field.modulus()).u64(p.degree() as u64);
        let coeffs = p.coefficients();
        for i in 0..=p.degree() {
            self.fe(field, coeffs.get(i).copied().unwrap_or_default());
        }
        self
    }
}

#[derive(Clone, Debug)]
pub struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], Reject> {
        if self.buf.len() < n {
            return Err(Reject::Malformed("truncated"));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    pub fn u8(&mut self) -> Result<u8, Reject> {
        Ok(self.take(1)?[0])
    }

    pub fn u64(&mut self) -> Result<u64, Reject> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn i64(&mut self) -> Result<i64, Reject> {
        Ok(i64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn u128(&mut self) -> Result<u128, Reject> {
        Ok(u128::from_be_bytes(self.take(16)?.try_into().expect("16 bytes")))
    }

    pub fn i128(&mut self) -> Result<i128, Reject> {
        Ok(i128::from_be_bytes(self.take(16)?.try_into().expect("16 bytes")))
    }

    /// A count that must not exceed `limit`, checked before anything it sizes is read.
    pub fn count(&mut self, limit: usize) -> Result<usize, Reject> {
        let n = self.u64()?;
        if n > limit as u64 {
            return Err(Reject::Malformed("count exceeds limit"));
        }
        Ok(n as usize)
    }

    pub fn fe(&mut self, field: &PrimeField) -> Result<Fe, Reject> {
        let mut bytes = [0u8; 16];
        let w = field.byte_len();
        bytes[16 - w..].copy_from_slice(self.take(w)?);
        field.element(u128::from_be_bytes(bytes)).ok_or(Reject::Malformed("residue out of range"))
    }

    pub fn hash(&mut self) -> Result<PairwiseHash, Reject> {
        let (a, b, p, range) = (self.u64()?, self.u64()?, self.u64()?, self.u64()?);
        PairwiseHash::new(a, b, p, range).map_err(|_| Reject::Malformed("hash parameters"))
    }

    /// Reads a polynomial, refusing before the coefficients if its degree exceeds `bound`.
    pub fn poly(&mut self, field: &PrimeField, bound: usize) -> Result<DensePolynomial, Reject> {
        if self.u128()? != field.modulus() {
            return Err(Reject::Malformed("proof over a different field"));
        }
        let degree = self.u64()?;
        if degree > bound as u64 {
            return Err(Reject::DegreeTooHigh { degree: degree.min(usize::MAX as u64) as usize, bound });
        }
        let coeffs = (0..=degree).map(|_| self.fe(field)).collect::<Result<Vec<_>, _>>()?;
        Ok(DensePolynomial::from_coefficients(coeffs))
    }

    /// The unread bytes.
    pub fn rest(self) -> &'a [u8] {
        self.buf
    }

    pub fn finish(self) -> Result<(), Reject> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(Reject::Malformed("trailing bytes"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let f = PrimeField::new(4637).unwrap();
        let p = DensePolynomial::from_coefficients([5u64, 0, 4000].iter().map(|&c| f.from_u64(c)).collect());
        let h = PairwiseHash::new(3, 4, 13, 5).unwrap();
        let mut w = Writer::new();
        w.u64(7).i64(-9).poly(&f, &p).hash(&h).i128(-5);
        let bytes = w.into_bytes();
        // modulus 16 + degree 8 + three 2-byte coefficients
        assert_eq!(bytes.len(), 8 + 8 + 16 + 8 + 6 + 32 + 16);
        let mut r = Reader::new(&bytes);
        assert_eq!(r.u64().unwrap(), 7);
        assert_eq!(r.i64().unwrap(), -9);
        assert_eq!(r.poly(&f, 2).unwrap(), p);
        assert_eq!(r.hash().unwrap(), h);
        assert_eq!(r.i128().unwrap(), -5);
        r.finish().unwrap();
    }

    #[test]
    fn degree_checked_before_coefficients() {
        let f = PrimeField::mersenne61();
        let mut w = Writer::new();
        w.u128(f.modulus()).u64(1 << 40);
        let bytes = w.into_bytes();
        assert_eq!(Reader::new(&bytes).poly(&f, 10), Err(Reject::DegreeTooHigh { degree: 1 << 40, bound: 10 }));
    }

    #[test]
    fn zero_polynomial_encodes_one_coefficient() {
        let f = PrimeField::mersenne61();
        let mut w = Writer::new();
        w.poly(&f, &DensePolynomial::zero());
        let bytes = w.into_bytes();
        assert_eq!(bytes.len(), 16 + 8 + 8);
        assert!(Reader::new(&bytes).poly(&f, 0).unwrap().is_zero());
    }

    #[test]
    fn out_of_range_residue_rejected() {
        let f = PrimeField::new(11).unwrap();
        assert!(Reader::new(&[12]).fe(&f).is_err());
    }
}
