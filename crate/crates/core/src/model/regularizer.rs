use std::fmt;

/// Block-separable convex regularizer, applied coordinate-wise within a block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    Zero,
    /// `λ ||u||_1`
    L1 { lambda: f64 },
    /// Indicator of `[lo, hi]` per coordinate.
    Box { lo: f64, hi: f64 },
    /// `(μ/2) ||u||²` (Euclidean).
    SquaredL2 { mu: f64 },
}

impl Regularizer {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            Regularizer::Zero => Ok(()),
            Regularizer::L1 { lambda } if lambda >= 0.0 && lambda.is_finite() => Ok(()),
            Regularizer::SquaredL2 { mu } if mu >= 0.0 && mu.is_finite() => Ok(()),
            Regularizer::Box { lo, hi } if lo <= hi => Ok(()),
            r => Err(format!("invalid regularizer {r}")),
        }
    }

    /// `Ψ_i(u)`; `+∞` outside the box.
    pub fn value(&self, u: &[f64]) -> f64 {
        match *self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { lambda } => lambda * u.iter().map(|v| v.abs()).sum::<f64>(),
            Regularizer::Box { lo, hi } => {
                if u.iter().all(|&v| v >= lo && v <= hi) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Regularizer::SquaredL2 { mu } => 0.5 * mu * u.iter().map(|v| v * v).sum::<f64>(),
        }
    }

    /// Strong convexity modulus of this block term with respect to
    /// `v_i ||·||_(i)²`, where `metric` is the block's diagonal `B_i`.
    pub fn strong_convexity(&self, v_i: f64, metric: &[f64]) -> f64 {
        match *self {
            Regularizer::SquaredL2 { mu } => {
                let dmax = metric.iter().cloned().fold(0.0, f64::max);
                mu / (v_i * dmax)
            }
            _ => 0.0,
        }
    }

    /// Whether `s` is a subgradient of `Ψ_i` at `u` (coordinate-wise, with
    /// tolerance `tol`).
    pub fn is_subgradient(&self, u: &[f64], s: &[f64], tol: f64) -> bool {
        u.iter().zip(s).all(|(&u, &s)| match *self {
            Regularizer::Zero => s.abs() <= tol,
            Regularizer::L1 { lambda } => {
                if u > 0.0 {
                    (s - lambda).abs() <= tol
                } else if u < 0.0 {
                    (s + lambda).abs() <= tol
                } else {
                    s.abs() <= lambda + tol
                }
            }
            Regularizer::Box { lo, hi } => {
                if u < lo - tol || u > hi + tol {
                    false
                } else if hi - lo <= 2.0 * tol {
                    true
                } else if u <= lo + tol {
                    s <= tol
                } else if u >= hi - tol {
                    s >= -tol
                } else {
                    s.abs() <= tol
                }
            }
            Regularizer::SquaredL2 { mu } => (s - mu * u).abs() <= tol,
        })
    }
}

impl fmt::Display for Regularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regularizer::Zero => write!(f, "none"),
            Regularizer::L1 { lambda } => write!(f, "l1:{lambda}"),
            Regularizer::Box { lo, hi } => write!(f, "box:{lo}:{hi}"),
            Regularizer::SquaredL2 { mu } => write!(f, "l2:{mu}"),
        }
    }
}

#[inline]
pub(crate) fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Minimizer `h_i` of `<g, t> + (v/2) ||t||_(i)² + Ψ_i(x + t)`.
///
/// `metric` is the diagonal of `B_i`; each coordinate sees curvature
/// `v · metric[c]`. Writes the result into `out`.
pub fn block_prox(reg: &Regularizer, g: &[f64], x: &[f64], v: f64, metric: &[f64], out: &mut [f64]) {
    debug_assert!(v > 0.0);
    for c in 0..g.len() {
        let w = v * metric[c];
        out[c] = match *reg {
            Regularizer::Zero => -g[c] / w,
            Regularizer::L1 { lambda } => soft_threshold(x[c] - g[c] / w, lambda / w) - x[c],
            // Ties on the boundary return the boundary point.
            Regularizer::Box { lo, hi } => box_step(x[c], (x[c] - g[c] / w).clamp(lo, hi), lo, hi),
            Regularizer::SquaredL2 { mu } => -(g[c] + mu * x[c]) / (w + mu),
        };
    }
}

/// `target - x`, nudged by ulps so that `x + step` stays inside `[lo, hi]`
/// after rounding.
fn box_step(x: f64, target: f64, lo: f64, hi: f64) -> f64 {
    let mut h = target - x;
    while x + h > hi {
        h = h.next_down();
    }
    while x + h < lo {
        h = h.next_up();
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prox1(reg: Regularizer, g: f64, x: f64, v: f64) -> f64 {
        let mut out = [0.0];
        block_prox(&reg, &[g], &[x], v, &[1.0], &mut out);
        out[0]
    }

    // Independent 1-D oracle: dense grid, then ternary search on the best
    // bracket. The objective is convex, so the bracket holds the minimizer.
    fn grid_argmin(reg: Regularizer, g: f64, x: f64, v: f64) -> f64 {
        let obj = |t: f64| g * t + 0.5 * v * t * t + reg.value(&[x + t]);
        let (lo, hi, steps) = (-50.0, 50.0, 200_000);
        let dt = (hi - lo) / steps as f64;
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=steps {
            let t = lo + k as f64 * dt;
            let val = obj(t);
            if val < best.0 {
                best = (val, t);
            }
        }
        let (mut a, mut b) = (best.1 - dt, best.1 + dt);
        for _ in 0..200 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if obj(m1) <= obj(m2) {
                b = m2;
            } else {
                a = m1;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(prox1(Regularizer::Zero, 4.0, 0.0, 2.0), -2.0);
        assert_eq!(prox1(Regularizer::L1 { lambda: 1.0 }, 0.0, 0.0, 1.0), 0.0);
        assert_eq!(prox1(Regularizer::L1 { lambda: 1.0 }, 10.0, 3.0, 2.0), -4.5);
        assert!((prox1(Regularizer::Box { lo: 0.0, hi: 1.0 }, -3.0, 0.8, 2.0) - 0.2).abs() < 1e-15);
        assert_eq!(prox1(Regularizer::SquaredL2 { mu: 1.0 }, 2.0, 1.0, 1.0), -1.5);
    }

    #[test]
    fn grid_oracle_agrees_on_examples() {
        assert!((grid_argmin(Regularizer::L1 { lambda: 1.0 }, 10.0, 3.0, 2.0) + 4.5).abs() < 1e-6);
        assert!((grid_argmin(Regularizer::Box { lo: 0.0, hi: 1.0 }, -3.0, 0.8, 2.0) - 0.2).abs() < 1e-6);
    }

    #[test]
    fn box_tie_returns_boundary() {
        // x - g/v lands exactly on hi.
        assert_eq!(prox1(Regularizer::Box { lo: 0.0, hi: 1.0 }, -1.0, 0.5, 2.0), 0.5);
    }

    #[test]
    fn closed_forms_match_oracle_and_optimality() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let regs = [
            Regularizer::Zero,
            Regularizer::L1 { lambda: 0.7 },
            Regularizer::Box { lo: -1.0, hi: 2.0 },
            Regularizer::SquaredL2 { mu: 1.3 },
        ];
        for _ in 0..60 {
            for reg in regs {
                let g = rng.gen_range(-5.0..5.0);
                let v = rng.gen_range(0.3..4.0);
                let x = match reg {
                    Regularizer::Box { .. } => rng.gen_range(-1.0..2.0),
                    _ => rng.gen_range(-3.0..3.0),
                };
                let h = prox1(reg, g, x, v);
                assert!((h - grid_argmin(reg, g, x, v)).abs() <= 1e-6, "{reg} g={g} x={x} v={v}");
                // -g - v h ∈ ∂Ψ(x + h)
                assert!(reg.is_subgradient(&[x + h], &[-g - v * h], 1e-9), "{reg}");
            }
        }
    }

    #[test]
    fn box_step_lands_inside() {
        let reg = Regularizer::Box { lo: -0.7967492983533719, hi: 0.6191579137681253 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        use rand::{Rng, SeedableRng};
        for _ in 0..10_000 {
            let x = rng.gen_range(-0.79..0.61);
            let h = prox1(reg, rng.gen_range(-50.0..50.0), x, rng.gen_range(0.1..3.0));
            assert!(reg.value(&[x + h]) == 0.0);
        }
    }

    #[test]
    fn strong_convexity_moduli() {
        assert_eq!(Regularizer::SquaredL2 { mu: 0.5 }.strong_convexity(2.0, &[1.0, 0.5]), 0.25);
        assert_eq!(Regularizer::L1 { lambda: 1.0 }.strong_convexity(2.0, &[1.0]), 0.0);
    }

    #[test]
    fn validation() {
        assert!(Regularizer::L1 { lambda: -1.0 }.validate().is_err());
        assert!(Regularizer::Box { lo: 1.0, hi: 0.0 }.validate().is_err());
        assert!(Regularizer::Box { lo: 0.0, hi: 1.0 }.validate().is_ok());
        assert_eq!(Regularizer::Box { lo: 0.0, hi: 1.0 }.value(&[1.5]), f64::INFINITY);
    }
}
