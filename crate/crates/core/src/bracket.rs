use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::LogValue;

/// A two-sided bound that holds up to the listed constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundBracket {
    pub lower: LogValue,
    pub upper: LogValue,
    /// Named constants that were folded into `lower` / `upper`.
    pub constants_used: BTreeMap<String, f64>,
}

impl BoundBracket {
    pub fn new(lower: LogValue, upper: LogValue) -> Self {
        debug_assert!(lower <= upper, "bracket {lower:?} > {upper:?}");
        BoundBracket { lower, upper, constants_used: BTreeMap::new() }
    }

    pub fn with_constant(mut self, name: &str, value: f64) -> Self {
        self.constants_used.insert(name.to_string(), value);
        self
    }

    pub fn contains(&self, x: LogValue) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// Strict containment, as for the Mills-ratio inequalities.
    pub fn strictly_contains(&self, x: LogValue) -> bool {
        self.lower < x && x < self.upper
    }
}
