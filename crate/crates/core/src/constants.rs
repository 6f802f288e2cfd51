//! Universal constants hidden behind `≲` / `≃`, as a flat `key = value`
//! configuration. Defaults come from the calibrated fixture in
//! `fixtures/constants.conf`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CONSTANTS: &str = include_str!("../fixtures/constants.conf");

macro_rules! constants_table {
    ($($(#[$doc:meta])* $field:ident),* $(,)?) => {
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        pub struct Constants {
            $($(#[$doc])* pub $field: f64,)*
        }

        impl Constants {
            pub const KEYS: &'static [&'static str] = &[$(stringify!($field)),*];

            fn slot(&mut self, key: &str) -> Option<&mut f64> {
                match key {
                    $(stringify!($field) => Some(&mut self.$field),)*
                    _ => None,
                }
            }

            pub fn get(&self, key: &str) -> Option<f64> {
                match key {
                    $(stringify!($field) => Some(self.$field),)*
                    _ => None,
                }
            }

            fn blank() -> Self {
                Constants { $($field: f64::NAN,)* }
            }
        }
    };
}

constants_table! {
    /// Smallest `n` the theory accepts.
    n_min,
    /// `K` in the quantile approximation check.
    k_quantile,
    /// Window for `xi^{-1} e^{-xi^2/2} / (1 - alpha)`.
    feller_lo,
    feller_hi,
    /// Factors around the truncated-integral orders.
    moment_lower,
    moment_upper,
    /// Factor on `q a^{q-1} e^{-a^2/2} / (a + q - a^2)` bounding `E min(|g|, a)^q`.
    moment_min_upper,
    /// `c` and `C` of the initial lower-deviation bound.
    c_initial,
    big_c_initial,
    /// `c` of the intermediate lower-deviation bound.
    c_intermediate,
    /// `c` and `C'` of the small-ball bound.
    small_ball_c,
    small_ball_big_c,
    /// `K` and `v_K` of the negative-moment bound.
    negative_k,
    negative_v,
    /// `c` in `E gap^2 <= c n T^-3 e^{-T^2/2}`.
    tails_c,
    /// `c_A` in `1 + log A >= c_A p`.
    c_a,
    /// MC variance containment `[c_lo lower, c_hi upper]`.
    c_lo,
    c_hi,
    /// `C` above which the lower envelope applies.
    c_lower,
    /// Floor `c / log n` of the lower envelope, applied for `p >= C log n`.
    pvz_lower_c,
    pvz_lower_big_c,
    /// `Var <= C / log n` for `p >= 2.01`.
    pvz_upper_c,
    /// Factors around `E(|g|^{2p-2} 1{|g| <= M})`'s closed forms.
    twop_lower,
    twop_upper,
    /// Factors around `M^{-1} e^{-M^2/2}`'s closed forms.
    mexpm_lower,
    mexpm_upper,
    /// Largest working set (bytes) a single run may allocate.
    mem_guard_bytes,
}

impl Constants {
    /// Parses a complete configuration; every key must be present.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Constants::blank();
        c.apply(text)?;
        if let Some(missing) = Self::KEYS.iter().find(|k| c.get(k).unwrap().is_nan()) {
            return Err(Error::Config(format!("missing key `{missing}`")));
        }
        Ok(c)
    }

    /// Overrides the keys present in `text`; unknown keys are rejected.
    pub fn apply(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|e| Error::Config(format!("line {}: `{}`: {e}", lineno + 1, value.trim())))?;
            if value.is_nan() {
                return Err(Error::Config(format!("line {}: NaN for `{key}`", lineno + 1)));
            }
            let slot = self
                .slot(key)
                .ok_or_else(|| Error::Config(format!("line {}: unknown key `{key}`", lineno + 1)))?;
            *slot = value;
        }
        Ok(())
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        Self::KEYS.iter().map(|k| (k.to_string(), self.get(k).unwrap())).collect()
    }

    /// `key = value` lines in schema order, parseable by [`Constants::parse`].
    pub fn to_config_string(&self) -> String {
        Self::KEYS.iter().map(|k| format!("{k} = {}\n", self.get(k).unwrap())).collect()
    }
}

impl Default for Constants {
    fn default() -> Self {
        Constants::parse(DEFAULT_CONSTANTS).expect("committed constants fixture is valid")
    }
}
