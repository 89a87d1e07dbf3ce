//! Monotonicity partitions, itineraries and kneading words.

mod condition_three;
mod kneading;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::maps::{FamilyKind, MapSnapshot};
use crate::output::{csv_preamble, fmt17};

pub use condition_three::{check_condition_three, condition_three_report, ConditionThreeReport};
pub use kneading::{
    compare_kneading, kneading_scan, kneading_sequence, kneading_sequence_with_tol, KneadingOrder,
    KneadingScan, KneadingSymbol, KneadingWord, C_TOL,
};

/// Default cap on the number of cylinders at one depth.
pub const CYLINDER_CAP: usize = 1_000_000;

/// Image pieces shorter than this fraction of the domain are dropped as
/// rounding debris.
const SLIVER: f64 = 1e-14;

/// An element of `P_j(a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    /// Branch symbols, 1-based, `word[i]` is the branch of `T_a^i(x)`.
    pub word: Vec<u32>,
    pub domain: Interval,
    /// `T_a^j(domain)` as a closed interval.
    pub image: Interval,
    pub depth: usize,
    /// Orientation of `T_a^j` on `domain`.
    pub increasing: bool,
}

impl Cylinder {
    pub fn word_string(&self) -> String {
        word_string(&self.word)
    }
}

pub fn word_string(word: &[u32]) -> String {
    word.iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join("-")
}

/// `P_j(a)` with `δ(a)`, the smallest cylinder length.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub depth: usize,
    pub cylinders: Vec<Cylinder>,
    pub min_length: f64,
}

/// The region partitioned into cylinders: `K(a)` for beta maps, otherwise the
/// snapshot domain.
pub fn partition_domain(snap: &MapSnapshot) -> Interval {
    match snap.kind {
        FamilyKind::BetaLike => snap.support,
        _ => snap.domain,
    }
}

/// Branch indices (1-based) of `x, T_a(x), …, T_a^{depth-1}(x)`.
pub fn itinerary(snap: &MapSnapshot, x: f64, depth: usize) -> Result<Vec<u32>> {
    if depth == 0 {
        return Err(Error::InvalidArgument(
            "itinerary depth must be at least 1".into(),
        ));
    }
    let mut word = Vec::with_capacity(depth);
    let mut x = x;
    for step in 0..depth {
        let tol = 4.0 * f64::EPSILON * x.abs().max(1.0);
        if snap.near_breakpoint(x, tol).is_some() {
            return Err(Error::HitsBreakpoint { step });
        }
        word.push(snap.locate(x) as u32 + 1);
        if step + 1 < depth {
            x = snap.evaluate(x)?;
        }
    }
    Ok(word)
}

pub fn cylinders(snap: &MapSnapshot, depth: usize) -> Result<Partition> {
    cylinders_with_cap(snap, depth, CYLINDER_CAP)
}

/// Exact subdivision: each level intersects the images of the previous level
/// with the branch intervals and pulls the cut points back through the
/// closed-form branch inverses.
pub fn cylinders_with_cap(snap: &MapSnapshot, depth: usize, cap: usize) -> Result<Partition> {
    if depth == 0 {
        return Err(Error::InvalidArgument(
            "cylinder depth must be at least 1".into(),
        ));
    }
    let dom = partition_domain(snap);
    let sliver = SLIVER * dom.len();
    let mut level: Vec<Cylinder> = (0..snap.branch_count())
        .filter_map(|k| {
            let piece = snap.branch_interval(k).intersect(&dom)?;
            (piece.len() > sliver).then(|| first_level(snap, k, piece))
        })
        .collect();
    if level.len() > cap {
        return Err(Error::DepthTooLarge { depth: 1, cap });
    }
    for j in 2..=depth {
        level = level
            .par_iter()
            .flat_map_iter(|c| refine(snap, c, sliver))
            .collect();
        if level.len() > cap {
            return Err(Error::DepthTooLarge { depth: j, cap });
        }
    }
    level.sort_by(|a, b| a.domain.lo.total_cmp(&b.domain.lo));
    let min_length = level
        .iter()
        .map(|c| c.domain.len())
        .fold(f64::INFINITY, f64::min);
    Ok(Partition {
        depth,
        cylinders: level,
        min_length,
    })
}

/// Image of the closed piece `[lo, hi]` of branch `k`, oriented as (left, right).
fn branch_image(snap: &MapSnapshot, k: usize, piece: Interval) -> (f64, f64) {
    let br = snap.branch(k);
    let left = if piece.lo <= snap.branch_interval(k).lo {
        br.left_value(piece.lo)
    } else {
        br.value(piece.lo)
    };
    (left, br.value(piece.hi))
}

fn first_level(snap: &MapSnapshot, k: usize, piece: Interval) -> Cylinder {
    let (l, r) = branch_image(snap, k, piece);
    Cylinder {
        word: vec![k as u32 + 1],
        domain: piece,
        image: Interval::hull(l, r),
        depth: 1,
        increasing: r >= l,
    }
}

fn refine(snap: &MapSnapshot, c: &Cylinder, sliver: f64) -> Vec<Cylinder> {
    let mut out = Vec::new();
    for k in 0..snap.branch_count() {
        let Some(piece) = c.image.intersect(&snap.branch_interval(k)) else {
            continue;
        };
        if piece.len() <= sliver {
            continue;
        }
        let (p, q) = (pull_back(snap, c, piece.lo), pull_back(snap, c, piece.hi));
        let (l, r) = branch_image(snap, k, piece);
        let mut word = c.word.clone();
        word.push(k as u32 + 1);
        let branch_up = r >= l;
        out.push(Cylinder {
            word,
            domain: Interval::hull(p, q),
            image: Interval::hull(l, r),
            depth: c.depth + 1,
            increasing: c.increasing == branch_up,
        });
    }
    out
}

/// The point of `c.domain` that `T_a^j` sends to `y ∈ c.image`.
fn pull_back(snap: &MapSnapshot, c: &Cylinder, y: f64) -> f64 {
    let (at_lo, at_hi) = if c.increasing {
        (c.domain.lo, c.domain.hi)
    } else {
        (c.domain.hi, c.domain.lo)
    };
    if y <= c.image.lo {
        return at_lo;
    }
    if y >= c.image.hi {
        return at_hi;
    }
    let mut x = y;
    for &sym in c.word.iter().rev() {
        x = snap.branch(sym as usize - 1).inverse(x);
    }
    x.clamp(c.domain.lo, c.domain.hi)
}

/// CSV with one row per cylinder.
pub fn cylinders_csv(cylinders: &[Cylinder], meta: &[(&str, String)]) -> String {
    let mut out = csv_preamble(meta);
    out.push_str("word,depth,domain_lo,domain_hi,image_lo,image_hi\n");
    for c in cylinders {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.word_string(),
            c.depth,
            fmt17(c.domain.lo),
            fmt17(c.domain.hi),
            fmt17(c.image.lo),
            fmt17(c.image.hi)
        ));
    }
    out
}
