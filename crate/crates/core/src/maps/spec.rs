//! Serializable family specifications.
//!
//! A [`FamilySpec`] is the JSON-facing description of a one-parameter family;
//! [`super::build_family`] validates it and turns it into a
//! [`super::FamilyDescriptor`]. Field names are documented in
//! `schema/family.schema.json` at the repository root.

use serde::{Deserialize, Serialize};

use crate::interval::Interval;

/// A slope or offset that moves affinely with the parameter: `offset + rate * a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffinePath {
    pub offset: f64,
    #[serde(default)]
    pub rate: f64,
}

impl AffinePath {
    pub const fn new(offset: f64, rate: f64) -> Self {
        AffinePath { offset, rate }
    }

    pub const fn constant(value: f64) -> Self {
        AffinePath {
            offset: value,
            rate: 0.0,
        }
    }

    pub fn value(&self, a: f64) -> f64 {
        self.offset + self.rate * a
    }
}

/// One piece `T(u) = slope * (u - b_k) + curvature * (u - b_k)^2` of a base map
/// on `[b_k, b_{k+1})`. The constant term is absent so `T(b_k) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasePiece {
    pub slope: f64,
    #[serde(default)]
    pub curvature: f64,
}

/// Finite prefix of a right-continuous base map `T: [0, ∞) → [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseMapSpec {
    /// `0 = b_0 < b_1 < ... < b_m`; piece `k` lives on `[b_k, b_{k+1})`.
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<BasePiece>,
}

impl BaseMapSpec {
    /// `T(u) = u mod 1` with `pieces` unit pieces.
    pub fn mod_one(pieces: usize) -> Self {
        BaseMapSpec {
            breakpoints: (0..=pieces).map(|k| k as f64).collect(),
            pieces: vec![
                BasePiece {
                    slope: 1.0,
                    curvature: 0.0
                };
                pieces
            ],
        }
    }
}

/// The homeomorphism `g` precomposed in the Markov family.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Homeomorphism {
    #[default]
    Identity,
    /// `g(x) = x + c x (1 - x)`, a C^{1,1} homeomorphism for `|c| < 1`.
    Quadratic { c: f64 },
}

impl Homeomorphism {
    pub(crate) fn coefficient(&self) -> f64 {
        match *self {
            Homeomorphism::Identity => 0.0,
            Homeomorphism::Quadratic { c } => c,
        }
    }
}

/// Construction request for a one-parameter family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `T_a(x) = T(a x)` for a base map `T` vanishing at its breakpoints.
    Beta {
        param_interval: [f64; 2],
        base: BaseMapSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lip_const: Option<f64>,
    },
    /// Skew tent `1 + α(a) x` for `x <= 0`, `1 - β(a) x` for `x > 0`.
    SkewTent {
        param_interval: [f64; 2],
        alpha: AffinePath,
        beta: AffinePath,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lip_const: Option<f64>,
    },
    /// `x/a` below the cut and `(x-a)/(1-a)` above it, precomposed with `g`.
    Markov {
        param_interval: [f64; 2],
        #[serde(default)]
        g: Homeomorphism,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lip_const: Option<f64>,
    },
    /// Fixed breakpoints; branch `k` is `values[k](a) + slopes[k](a) (x - b_k)`.
    PiecewiseAffine {
        param_interval: [f64; 2],
        breakpoints: Vec<f64>,
        values: Vec<AffinePath>,
        slopes: Vec<AffinePath>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lip_const: Option<f64>,
    },
}

impl FamilySpec {
    pub fn param_interval(&self) -> Interval {
        let [lo, hi] = match self {
            FamilySpec::Beta { param_interval, .. }
            | FamilySpec::SkewTent { param_interval, .. }
            | FamilySpec::Markov { param_interval, .. }
            | FamilySpec::PiecewiseAffine { param_interval, .. } => *param_interval,
        };
        Interval::new(lo, hi)
    }

    pub(crate) fn lip_override(&self) -> Option<f64> {
        match self {
            FamilySpec::Beta { lip_const, .. }
            | FamilySpec::SkewTent { lip_const, .. }
            | FamilySpec::Markov { lip_const, .. }
            | FamilySpec::PiecewiseAffine { lip_const, .. } => *lip_const,
        }
    }

    /// `a x mod 1` on `[lo, hi]`.
    pub fn beta_mod_one(lo: f64, hi: f64) -> Self {
        FamilySpec::Beta {
            param_interval: [lo, hi],
            base: BaseMapSpec::mod_one(hi.ceil().max(1.0) as usize),
            lip_const: None,
        }
    }

    pub fn skew_tent(lo: f64, hi: f64, alpha: AffinePath, beta: AffinePath) -> Self {
        FamilySpec::SkewTent {
            param_interval: [lo, hi],
            alpha,
            beta,
            lip_const: None,
        }
    }

    /// The Markov family with `g = identity`.
    pub fn markov_identity(lo: f64, hi: f64) -> Self {
        FamilySpec::Markov {
            param_interval: [lo, hi],
            g: Homeomorphism::Identity,
            lip_const: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let spec = FamilySpec::skew_tent(
            0.0,
            0.5,
            AffinePath::new(2.0, 1.0),
            AffinePath::new(2.0, 1.0),
        );
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"kind\":\"skew_tent\""));
        let back: FamilySpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);

        let bad = r#"{"kind":"markov","param_interval":[0.2,0.8],"gee":1}"#;
        assert!(serde_json::from_str::<FamilySpec>(bad).is_err());
        let ok = r#"{"kind":"markov","param_interval":[0.2,0.8]}"#;
        let m: FamilySpec = serde_json::from_str(ok).unwrap();
        assert_eq!(m, FamilySpec::markov_identity(0.2, 0.8));
    }

    #[test]
    fn mod_one_prefix() {
        let b = BaseMapSpec::mod_one(3);
        assert_eq!(b.breakpoints, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(b.pieces.len(), 3);
    }
}
