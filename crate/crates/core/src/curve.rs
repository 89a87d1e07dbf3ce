//! Starting-point curves `a ↦ X(a)` together with their derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `C¹` curve of starting points, supplied as a closed form or as a sampled
/// value/derivative table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamCurve {
    Constant {
        value: f64,
    },
    /// `offset + rate * a`.
    Affine {
        offset: f64,
        rate: f64,
    },
    /// `numerator / a`.
    Reciprocal {
        numerator: f64,
    },
    /// The period-2 point `a² / (1 - a + a²)` of the Markov family with
    /// `g = identity`.
    MarkovPeriodTwo,
    /// Linear interpolation through `(params[i], values[i])`; derivatives are
    /// interpolated the same way.
    Table {
        params: Vec<f64>,
        values: Vec<f64>,
        derivs: Vec<f64>,
    },
}

impl ParamCurve {
    pub fn validate(&self) -> Result<()> {
        if let ParamCurve::Table {
            params,
            values,
            derivs,
        } = self
        {
            if params.is_empty() || params.len() != values.len() || params.len() != derivs.len() {
                return Err(Error::config(
                    "x_curve",
                    "table needs equally long, non-empty params/values/derivs",
                ));
            }
            if params.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::config(
                    "x_curve",
                    "table params must increase strictly",
                ));
            }
        }
        Ok(())
    }

    /// `(X(a), X'(a))`.
    pub fn sample(&self, a: f64) -> (f64, f64) {
        match self {
            ParamCurve::Constant { value } => (*value, 0.0),
            ParamCurve::Affine { offset, rate } => (offset + rate * a, *rate),
            ParamCurve::Reciprocal { numerator } => (numerator / a, -numerator / (a * a)),
            ParamCurve::MarkovPeriodTwo => {
                let q = 1.0 - a + a * a;
                (a * a / q, (2.0 * a - a * a) / (q * q))
            }
            ParamCurve::Table {
                params,
                values,
                derivs,
            } => {
                let i = params.partition_point(|&p| p <= a);
                if i == 0 {
                    return (values[0], derivs[0]);
                }
                if i == params.len() {
                    return (values[i - 1], derivs[i - 1]);
                }
                let t = (a - params[i - 1]) / (params[i] - params[i - 1]);
                let lerp = |v: &[f64]| v[i - 1] + t * (v[i] - v[i - 1]);
                (lerp(values), lerp(derivs))
            }
        }
    }

    pub fn value(&self, a: f64) -> f64 {
        self.sample(a).0
    }

    pub fn deriv(&self, a: f64) -> f64 {
        self.sample(a).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn period_two_point_is_periodic() {
        let a = 0.37;
        let p = ParamCurve::MarkovPeriodTwo.value(a);
        let q = p / a;
        assert!(p < a && q > a);
        assert!(((q - a) / (1.0 - a) - p).abs() < 1e-15);
        let h = 1e-6;
        let fd = (ParamCurve::MarkovPeriodTwo.value(a + h)
            - ParamCurve::MarkovPeriodTwo.value(a - h))
            / (2.0 * h);
        assert!((fd - ParamCurve::MarkovPeriodTwo.deriv(a)).abs() < 1e-8);
    }

    #[test]
    fn table_interpolates_and_clamps() {
        let t = ParamCurve::Table {
            params: vec![0.0, 1.0],
            values: vec![0.0, 2.0],
            derivs: vec![2.0, 2.0],
        };
        t.validate().unwrap();
        assert_eq!(t.sample(0.25), (0.5, 2.0));
        assert_eq!(t.sample(-1.0), (0.0, 2.0));
        assert_eq!(t.sample(3.0), (2.0, 2.0));
        let json = r#"{"type":"reciprocal","numerator":1.0}"#;
        let r: ParamCurve = serde_json::from_str(json).unwrap();
        assert_eq!(r.sample(2.0), (0.5, -0.25));
    }
}
