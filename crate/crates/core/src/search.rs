//! Golden-section minimization on a bracket.
//!
//! The objective may return any totally ordered value, so callers that need
//! the minimizer location beyond `√ε` precision can evaluate it exactly
//! (e.g. as a rational number) instead of in `f64`.

/// `1/φ = (√5 − 1)/2`.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenSection {
    /// Stop once the bracket is narrower than this.
    pub xtol: f64,
    pub max_iter: usize,
}

impl Default for GoldenSection {
    fn default() -> Self {
        Self {
            xtol: 1e-12,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub iterations: usize,
}

impl GoldenSection {
    /// Minimizes a unimodal `f` on `[lo, hi]`.
    pub fn minimize<F, T>(&self, mut f: F, lo: f64, hi: f64) -> Minimum
    where
        F: FnMut(f64) -> T,
        T: PartialOrd,
    {
        let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = f(c);
        let mut fd = f(d);
        let mut iterations = 0;
        while b - a > self.xtol && iterations < self.max_iter {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = f(d);
            }
            iterations += 1;
            // Interior points can no longer be distinguished in f64.
            if !(a < c && c < d && d < b) {
                break;
            }
        }
        Minimum {
            x: 0.5 * (a + b),
            iterations,
        }
    }
}
