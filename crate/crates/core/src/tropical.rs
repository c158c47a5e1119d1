//! The tropical semiring `(ℝ ∪ {∞}, min, +)` and the map `p ↦ −ln p`.
//!
//! - `a ⊕ b = min(a, b)`, identity `∞`
//! - `a ⊙ b = a + b`, identity `0`, with `∞` absorbing
//!
//! No subtraction or division is offered: the semiring has no inverses, so
//! argmins are re-derived by comparison instead of being "undone".

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::model::NetworkModel;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("probability {0} lies outside [0, 1]")]
pub struct DomainError(pub f64);

/// An element of the tropical semiring. Never NaN.
#[derive(Clone, Copy, PartialEq, Default)]
#[repr(transparent)]
pub struct Weight(f64);

impl Weight {
    /// Multiplicative identity.
    pub const ZERO: Weight = Weight(0.0);
    /// Additive identity.
    pub const INFINITY: Weight = Weight(f64::INFINITY);

    /// # Panics
    /// On NaN or `−∞`.
    pub fn new(value: f64) -> Self {
        assert!(
            !value.is_nan() && value != f64::NEG_INFINITY,
            "invalid tropical weight {value}"
        );
        Weight(value)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    /// Tropical sum.
    #[inline]
    pub fn oplus(self, rhs: Weight) -> Weight {
        if rhs.0 < self.0 {
            rhs
        } else {
            self
        }
    }

    /// Tropical product.
    #[inline]
    pub fn otimes(self, rhs: Weight) -> Weight {
        // inf + finite = inf and inf + inf = inf in IEEE arithmetic; -inf never occurs.
        Weight(self.0 + rhs.0)
    }

    /// Inverse of [`tropicalize`]: `e^{−w}`.
    #[inline]
    pub fn to_probability(self) -> f64 {
        (-self.0).exp()
    }
}

impl Eq for Weight {}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> Ordering {
        // Agrees with the derived PartialEq, including 0.0 == -0.0.
        self.0.partial_cmp(&other.0).expect("weights are never NaN")
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Weight({})", self.0)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            fmt::Display::fmt(&self.0, f)
        }
    }
}

impl std::iter::Sum<Weight> for Weight {
    /// Tropical product of all items (ordinary sum of the values).
    fn sum<I: Iterator<Item = Weight>>(iter: I) -> Weight {
        iter.fold(Weight::ZERO, Weight::otimes)
    }
}

#[inline]
pub fn trop_add(a: Weight, b: Weight) -> Weight {
    a.oplus(b)
}

#[inline]
pub fn trop_mul(a: Weight, b: Weight) -> Weight {
    a.otimes(b)
}

/// `p ↦ −ln p`, with `0 ↦ ∞` and `1 ↦ 0`.
pub fn tropicalize(p: f64) -> Result<Weight, DomainError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(DomainError(p));
    }
    if p == 0.0 {
        return Ok(Weight::INFINITY);
    }
    // -ln(1) is -0.0; normalise the sign.
    Ok(Weight(-(p.ln()) + 0.0))
}

/// Conditional weight tables `w = −ln p`, laid out exactly like the source CPTs.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightModel {
    tables: Vec<WeightTable>,
}

/// One node's weights: `rows × states`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    states: usize,
    entries: Vec<Weight>,
}

impl WeightTable {
    pub fn new(states: usize, entries: Vec<Weight>) -> Self {
        assert!(states > 0 && entries.len().is_multiple_of(states));
        WeightTable { states, entries }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn rows(&self) -> usize {
        self.entries.len() / self.states
    }

    #[inline]
    pub fn get(&self, row: usize, state: usize) -> Weight {
        self.entries[row * self.states + state]
    }

    pub fn row(&self, row: usize) -> &[Weight] {
        &self.entries[row * self.states..(row + 1) * self.states]
    }

    pub fn entries_mut(&mut self) -> &mut [Weight] {
        &mut self.entries
    }
}

impl WeightModel {
    pub fn from_tables(tables: Vec<WeightTable>) -> Self {
        WeightModel { tables }
    }

    pub fn table(&self, node: usize) -> &WeightTable {
        &self.tables[node]
    }

    pub fn table_mut(&mut self, node: usize) -> &mut WeightTable {
        &mut self.tables[node]
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

/// Elementwise [`tropicalize`] of every CPT entry.
///
/// # Panics
/// If a CPT entry lies outside `[0, 1]`; a validated model never has one.
pub fn tropicalize_model(net: &NetworkModel) -> WeightModel {
    let tables = net
        .cpts()
        .iter()
        .map(|cpt| {
            let states = cpt.states();
            let entries = cpt
                .rows()
                .iter()
                .flat_map(|row| row.iter())
                .map(|&p| tropicalize(p).expect("validated CPT entry"))
                .collect();
            WeightTable::new(states, entries)
        })
        .collect();
    WeightModel { tables }
}
