//! Small numerical helpers shared by the planners and the harness.

/// Overflow-safe `log(sum(exp(x)))`. Returns `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// `log(w * exp(a) + (1 - w) * exp(b))` for a mixing weight `w` in `[0, 1]`.
///
/// Exact (zero) when `a == b == 0`, which plain log-sum-exp is not.
pub fn log_mix_exp(w: f64, a: f64, b: f64) -> f64 {
    if w >= 1.0 {
        return a;
    }
    if w <= 0.0 {
        return b;
    }
    if a >= b {
        a + ((1.0 - w) * (b - a).exp_m1()).ln_1p()
    } else {
        b + (w * (a - b).exp_m1()).ln_1p()
    }
}

/// Writes `softmax(scale * xs)` into `out`.
pub fn softmax_into(xs: &[f64], scale: f64, out: &mut [f64]) {
    debug_assert_eq!(xs.len(), out.len());
    let max = xs
        .iter()
        .map(|&x| scale * x)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &x) in out.iter_mut().zip(xs) {
        *o = (scale * x - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Running mean and standard error (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for MeanAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Result of a one-dimensional bracketed minimisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `tol`. The returned point is the
/// best evaluated point, which includes both endpoints so that minima on the
/// boundary are found exactly.
pub fn golden_section_min<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    assert!(lo < hi, "empty bracket");
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = Minimum {
        x: lo,
        value: f(lo),
    };
    let f_hi = f(hi);
    if f_hi < best.value {
        best = Minimum { x: hi, value: f_hi };
    }
    while (b - a) > tol {
        if fc <= fd {
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
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v < best.value {
            best = Minimum { x, value: v };
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_handles_large_inputs() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, 0.0]), 0.0);
    }

    #[test]
    fn softmax_sums_to_one() {
        let mut out = [0.0; 3];
        softmax_into(&[1.0, 2.0, 3.0], 50.0, &mut out);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(out[2] > 0.999);
    }

    #[test]
    fn welford_matches_direct_formula() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let acc: MeanAccumulator = xs.iter().copied().collect();
        assert!((acc.mean() - 3.75).abs() < 1e-15);
        let var = xs.iter().map(|x| (x - 3.75f64).powi(2)).sum::<f64>() / 3.0;
        assert!((acc.variance() - var).abs() < 1e-12);
    }

    #[test]
    fn golden_section_finds_interior_and_boundary_minima() {
        let m = golden_section_min(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-10);
        assert!((m.x - 0.3).abs() < 1e-8);
        let m = golden_section_min(|x| -x, 0.0, 1.0, 1e-10);
        assert_eq!(m.x, 1.0);
    }
}
