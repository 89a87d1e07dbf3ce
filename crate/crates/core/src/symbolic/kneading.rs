use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{FamilyDescriptor, FamilyKind, MapSnapshot};

/// Points with `|x| <= C_TOL` are read as the turning point.
pub const C_TOL: f64 = 1e-12;

/// Ordered `L < C < R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum KneadingSymbol {
    L,
    C,
    R,
}

impl KneadingSymbol {
    pub fn as_char(self) -> char {
        match self {
            KneadingSymbol::L => 'L',
            KneadingSymbol::C => 'C',
            KneadingSymbol::R => 'R',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'L' => Some(KneadingSymbol::L),
            'C' => Some(KneadingSymbol::C),
            'R' => Some(KneadingSymbol::R),
            _ => None,
        }
    }
}

/// Itinerary of the critical value, cut at the requested depth or at the
/// first `C`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KneadingWord {
    pub symbols: Vec<KneadingSymbol>,
    pub truncated_at: usize,
}

impl KneadingWord {
    /// Parses a word such as `"RLLC"`.
    pub fn parse(s: &str) -> Option<Self> {
        let symbols = s
            .chars()
            .map(KneadingSymbol::from_char)
            .collect::<Option<Vec<_>>>()?;
        Some(KneadingWord {
            truncated_at: symbols.len(),
            symbols,
        })
    }

    pub fn ends_at_turning_point(&self) -> bool {
        self.symbols.last() == Some(&KneadingSymbol::C)
    }
}

impl fmt::Display for KneadingWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.symbols {
            write!(f, "{}", s.as_char())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KneadingOrder {
    Less,
    EqualToDepth,
    Greater,
}

pub fn kneading_sequence(snap: &MapSnapshot, depth: usize) -> Result<KneadingWord> {
    kneading_sequence_with_tol(snap, depth, C_TOL)
}

/// Symbols of `1 = T_a(0), T_a^2(0), …`.
pub fn kneading_sequence_with_tol(
    snap: &MapSnapshot,
    depth: usize,
    c_tol: f64,
) -> Result<KneadingWord> {
    if snap.kind != FamilyKind::SkewTent {
        return Err(Error::NotUnimodal);
    }
    let mut symbols = Vec::with_capacity(depth);
    let mut x: f64 = 1.0;
    for _ in 0..depth {
        let s = if x.abs() <= c_tol {
            KneadingSymbol::C
        } else if x < 0.0 {
            KneadingSymbol::L
        } else {
            KneadingSymbol::R
        };
        symbols.push(s);
        if s == KneadingSymbol::C {
            break;
        }
        x = snap.step(x).value;
    }
    Ok(KneadingWord {
        symbols,
        truncated_at: depth,
    })
}

/// Signed lexicographic order: the first difference decides, reversed when
/// the common prefix holds an odd number of `R`s.
pub fn compare_kneading(k1: &KneadingWord, k2: &KneadingWord) -> KneadingOrder {
    let mut odd = false;
    for (&s1, &s2) in k1.symbols.iter().zip(&k2.symbols) {
        if s1 != s2 {
            let less = (s1 < s2) != odd;
            return if less {
                KneadingOrder::Less
            } else {
                KneadingOrder::Greater
            };
        }
        if s1 == KneadingSymbol::R {
            odd = !odd;
        }
    }
    KneadingOrder::EqualToDepth
}

/// Kneading words at increasing parameters, each with its order relative to
/// the previous word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KneadingScan {
    pub params: Vec<f64>,
    pub words: Vec<KneadingWord>,
    /// `order[i]` compares `words[i]` with `words[i + 1]`.
    pub order: Vec<KneadingOrder>,
}

impl KneadingScan {
    /// Steps where the word decreased.
    pub fn violations(&self) -> usize {
        self.order
            .iter()
            .filter(|&&o| o == KneadingOrder::Greater)
            .count()
    }
}

pub fn kneading_scan(
    family: &FamilyDescriptor,
    params: &[f64],
    depth: usize,
) -> Result<KneadingScan> {
    let words = params
        .iter()
        .map(|&a| kneading_sequence(&family.snapshot(a)?, depth))
        .collect::<Result<Vec<_>>>()?;
    let order = words
        .windows(2)
        .map(|w| compare_kneading(&w[0], &w[1]))
        .collect();
    Ok(KneadingScan {
        params: params.to_vec(),
        words,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{build_family_with, AffinePath, FamilySpec, SamplingConfig};

    fn tent(alpha: f64, beta: f64) -> MapSnapshot {
        build_family_with(
            &FamilySpec::skew_tent(
                0.0,
                1.0,
                AffinePath::constant(alpha),
                AffinePath::constant(beta),
            ),
            &SamplingConfig {
                param_points: 3,
                x_points: 3,
            },
        )
        .unwrap()
        .snapshot(0.5)
        .unwrap()
    }

    fn w(s: &str) -> KneadingWord {
        KneadingWord::parse(s).unwrap()
    }

    #[test]
    fn kneading_words() {
        assert_eq!(
            kneading_sequence(&tent(2.0, 2.0), 5).unwrap().to_string(),
            "RLLLL"
        );
        let k = kneading_sequence(&tent(2.0, 1.5), 3).unwrap();
        assert_eq!(k.to_string(), "RLC");
        assert!(k.ends_at_turning_point());
        // Stops at C even with depth to spare.
        assert_eq!(
            kneading_sequence(&tent(2.0, 1.5), 10)
                .unwrap()
                .symbols
                .len(),
            3
        );
        for (a, b) in [(1.3, 1.5), (1.9, 1.2), (1.5, 2.5)] {
            let k = kneading_sequence(&tent(a, b), 2).unwrap();
            assert_eq!(k.to_string(), "RL");
        }
    }

    #[test]
    fn other_kinds_are_rejected() {
        let s = build_family_with(
            &FamilySpec::markov_identity(0.2, 0.8),
            &SamplingConfig {
                param_points: 3,
                x_points: 3,
            },
        )
        .unwrap()
        .snapshot(0.5)
        .unwrap();
        assert_eq!(kneading_sequence(&s, 4), Err(Error::NotUnimodal));
    }

    #[test]
    fn signed_order() {
        assert_eq!(compare_kneading(&w("RLR"), &w("RLL")), KneadingOrder::Less);
        assert_eq!(
            compare_kneading(&w("RLLL"), &w("RLLL")),
            KneadingOrder::EqualToDepth
        );
        assert_eq!(
            compare_kneading(&w("RLL"), &w("RLR")),
            KneadingOrder::Greater
        );
        assert_eq!(compare_kneading(&w("RLC"), &w("RLL")), KneadingOrder::Less);
        assert_eq!(
            compare_kneading(&w("RL"), &w("RLRRL")),
            KneadingOrder::EqualToDepth
        );
        // Even prefix: plain order.
        assert_eq!(compare_kneading(&w("RRL"), &w("RRR")), KneadingOrder::Less);
    }

    #[test]
    fn scan_along_increasing_slopes() {
        let f = build_family_with(
            &FamilySpec::skew_tent(
                0.0,
                1.0,
                AffinePath::new(1.3, 0.7),
                AffinePath::new(1.5, 0.5),
            ),
            &SamplingConfig {
                param_points: 11,
                x_points: 3,
            },
        )
        .unwrap();
        let params: Vec<f64> = (0..30).map(|i| i as f64 / 29.0).collect();
        let scan = kneading_scan(&f, &params, 30).unwrap();
        assert_eq!(scan.violations(), 0);
        assert!(scan.order.iter().any(|&o| o == KneadingOrder::Less));
    }

    #[test]
    fn order_is_antisymmetric() {
        let words = ["RLRL", "RLLR", "RLLL", "RRLC", "RLC", "RLRR"];
        for a in words {
            for b in words {
                let (x, y) = (
                    compare_kneading(&w(a), &w(b)),
                    compare_kneading(&w(b), &w(a)),
                );
                match x {
                    KneadingOrder::Less => assert_eq!(y, KneadingOrder::Greater),
                    KneadingOrder::Greater => assert_eq!(y, KneadingOrder::Less),
                    KneadingOrder::EqualToDepth => assert_eq!(y, KneadingOrder::EqualToDepth),
                }
            }
        }
    }
}
