use crate::error::Error;
use crate::field::{FieldElement as Fe, PrimeField};

/// Σ_i f_i ρ^i over F_q for the updates consumed so far.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fingerprint {
    field: PrimeField,
    basis: Fe,
    acc: Fe,
}

impl Fingerprint {
    pub fn new(field: PrimeField, basis: Fe) -> Self {
        Self { field, basis, acc: field.zero() }
    }

    pub fn basis(&self) -> Fe {
        self.basis
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn value(&self) -> Fe {
        self.acc
    }

    pub fn update(&mut self, item: u64, delta: i64) {
        self.add_weighted(item, self.field.from_i64(delta));
    }

    pub fn add_weighted(&mut self, item: u64, weight: Fe) {
        let term = self.field.mul(weight, self.field.pow(self.basis, item as u128));
        self.acc = self.field.add(self.acc, term);
    }

    /// Fingerprint of the indicator vector of {0, .., count-1}.
    pub fn of_prefix_set(field: PrimeField, basis: Fe, count: u64) -> Self {
        // geometric series (ρ^count - 1)/(ρ - 1), or count when ρ = 1
        let acc = match field.inv(field.sub(basis, field.one())) {
            Some(inv) => field.mul(field.sub(field.pow(basis, count as u128), field.one()), inv),
            None => field.from_u64(count),
        };
        Self { field, basis, acc }
    }

    /// Accumulator sum, the fingerprint of the concatenated streams.
    pub fn combine(&self, other: &Self) -> Result<Self, Error> {
        self.compatible(other)?;
        Ok(Self { acc: self.field.add(self.acc, other.acc), ..*self })
    }

    fn compatible(&self, other: &Self) -> Result<(), Error> {
        if self.field != other.field || self.basis != other.basis {
            return Err(Error::InvalidParams("fingerprints use different bases or fields"));
        }
        Ok(())
    }
}

pub fn fingerprints_equal(a: &Fingerprint, b: &Fingerprint) -> Result<bool, Error> {
    a.compatible(b)?;
    Ok(a.acc == b.acc)
}
