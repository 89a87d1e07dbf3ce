//! Closed-form branch evaluators.
//!
//! Every branch of every supported family is one of three shapes, each with an
//! explicit inverse. Formulas extend continuously to the closed branch
//! interval, which is how one-sided limits at breakpoints are taken.

/// One monotone branch of `T_a`, frozen at a parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branch {
    /// `y0 + slope (x - x0)` where `x0`, `y0`, `slope` move with `a` at the
    /// given rates.
    Affine {
        x0: f64,
        y0: f64,
        slope: f64,
        dx0: f64,
        dy0: f64,
        dslope: f64,
    },
    /// `c1 t + c2 t^2` with `t = a x - b`: one piece of a base map rescaled.
    /// `width` is the length of the base piece.
    Scaled {
        a: f64,
        b: f64,
        width: f64,
        c1: f64,
        c2: f64,
    },
    /// `g(x)/a` (lower) or `(g(x) - a)/(1 - a)` (upper), `g(x) = x + c x (1-x)`.
    Markov { a: f64, c: f64, upper: bool },
}

fn g(c: f64, x: f64) -> f64 {
    x + c * x * (1.0 - x)
}

fn g_prime(c: f64, x: f64) -> f64 {
    1.0 + c * (1.0 - 2.0 * x)
}

/// Inverse of `g` on `[0, 1]`: the root of `c x^2 - (1 + c) x + z = 0` in `[0, 1]`.
fn g_inverse(c: f64, z: f64) -> f64 {
    if c == 0.0 {
        return z;
    }
    let b = 1.0 + c;
    let disc = (b * b - 4.0 * c * z).max(0.0);
    2.0 * z / (b + disc.sqrt())
}

impl Branch {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Branch::Affine { x0, y0, slope, .. } => y0 + slope * (x - x0),
            Branch::Scaled { a, b, c1, c2, .. } => {
                let t = (a * x - b).max(0.0);
                c1 * t + c2 * t * t
            }
            Branch::Markov { a, c, upper } => {
                if upper {
                    (g(c, x) - a) / (1.0 - a)
                } else {
                    g(c, x) / a
                }
            }
        }
    }

    /// `∂_x T_a(x)`.
    pub fn deriv(&self, x: f64) -> f64 {
        match *self {
            Branch::Affine { slope, .. } => slope,
            Branch::Scaled { a, b, c1, c2, .. } => {
                let t = (a * x - b).max(0.0);
                a * (c1 + 2.0 * c2 * t)
            }
            Branch::Markov { a, c, upper } => {
                if upper {
                    g_prime(c, x) / (1.0 - a)
                } else {
                    g_prime(c, x) / a
                }
            }
        }
    }

    /// `∂_x^2 T_a(x)`, the local Lipschitz constant of the derivative.
    pub fn second_deriv(&self, _x: f64) -> f64 {
        match *self {
            Branch::Affine { .. } => 0.0,
            Branch::Scaled { a, c2, .. } => 2.0 * c2 * a * a,
            Branch::Markov { a, c, upper } => {
                if upper {
                    -2.0 * c / (1.0 - a)
                } else {
                    -2.0 * c / a
                }
            }
        }
    }

    /// `∂_a T_a(x)` at fixed `x`.
    pub fn param_partial(&self, x: f64) -> f64 {
        match *self {
            Branch::Affine {
                x0,
                slope,
                dx0,
                dy0,
                dslope,
                ..
            } => dy0 - slope * dx0 + dslope * (x - x0),
            Branch::Scaled { a, b, c1, c2, .. } => {
                let t = (a * x - b).max(0.0);
                x * (c1 + 2.0 * c2 * t)
            }
            Branch::Markov { a, c, upper } => {
                if upper {
                    (g(c, x) - 1.0) / ((1.0 - a) * (1.0 - a))
                } else {
                    -g(c, x) / (a * a)
                }
            }
        }
    }

    /// `∂_a ∂_x T_a(x)`.
    pub fn slope_param_partial(&self, x: f64) -> f64 {
        match *self {
            Branch::Affine { dslope, .. } => dslope,
            Branch::Scaled { a, b, c1, c2, .. } => {
                let t = (a * x - b).max(0.0);
                c1 + 2.0 * c2 * t + 2.0 * c2 * a * x
            }
            Branch::Markov { a, c, upper } => {
                if upper {
                    g_prime(c, x) / ((1.0 - a) * (1.0 - a))
                } else {
                    -g_prime(c, x) / (a * a)
                }
            }
        }
    }

    /// Preimage of `y` under this branch (extended to the closed branch).
    pub fn inverse(&self, y: f64) -> f64 {
        match *self {
            Branch::Affine { x0, y0, slope, .. } => x0 + (y - y0) / slope,
            Branch::Scaled { a, b, c1, c2, .. } => {
                let disc = (c1 * c1 + 4.0 * c2 * y).max(0.0);
                let t = 2.0 * y / (c1 + disc.sqrt());
                (b + t) / a
            }
            Branch::Markov { a, c, upper } => {
                let z = if upper { a + (1.0 - a) * y } else { a * y };
                g_inverse(c, z)
            }
        }
    }

    /// Value at the branch's left endpoint `x_left`. Beta pieces vanish there
    /// exactly, which keeps orbits landing on `b_k/a` frozen at 0.
    pub fn left_value(&self, x_left: f64) -> f64 {
        match *self {
            Branch::Scaled { .. } => 0.0,
            _ => self.value(x_left),
        }
    }

    /// Whether `x` maps onto the next base breakpoint, where the
    /// right-continuous base map is 0 again.
    pub fn reaches_next_piece(&self, x: f64) -> bool {
        match *self {
            Branch::Scaled { a, b, width, .. } => a * x - b >= width,
            _ => false,
        }
    }

    pub fn is_increasing(&self, x: f64) -> bool {
        self.deriv(x) > 0.0
    }
}
