//! Small numeric helpers shared across modules.

use std::collections::VecDeque;

/// Formats a float with 9 significant digits. Values with a decimal
/// exponent in `[-5, 15)` are written positionally with trailing zeros
/// trimmed, others in `e` notation.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.8e}", x);
    let (mant, exp) = sci.split_once('e').expect("e notation");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..15).contains(&exp) {
        return sci;
    }
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::with_capacity(24);
    if neg {
        out.push('-');
    }
    if exp >= 0 {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            out.extend(std::iter::repeat_n('0', int_len - digits.len()));
        } else {
            out.push_str(&digits[..int_len]);
            let frac = digits[int_len..].trim_end_matches('0');
            if !frac.is_empty() {
                out.push('.');
                out.push_str(frac);
            }
        }
    } else {
        out.push_str("0.");
        out.extend(std::iter::repeat('0').take((-exp - 1) as usize));
        out.push_str(digits.trim_end_matches('0'));
    }
    out
}

/// Trailing-window minimum and maximum over the last `window` pushed values
/// in amortised O(1) per push.
#[derive(Debug, Clone)]
pub struct RollingMinMax {
    window: usize,
    idx: usize,
    min: VecDeque<(usize, f64)>,
    max: VecDeque<(usize, f64)>,
}

impl RollingMinMax {
    pub fn new(window: usize) -> Self {
        assert!(window > 0);
        RollingMinMax {
            window,
            idx: 0,
            min: VecDeque::new(),
            max: VecDeque::new(),
        }
    }

    pub fn push(&mut self, x: f64) {
        let i = self.idx;
        self.idx += 1;
        while self.min.back().is_some_and(|&(_, v)| v >= x) {
            self.min.pop_back();
        }
        self.min.push_back((i, x));
        while self.max.back().is_some_and(|&(_, v)| v <= x) {
            self.max.pop_back();
        }
        self.max.push_back((i, x));
        let cutoff = self.idx.saturating_sub(self.window);
        while self.min.front().is_some_and(|&(j, _)| j < cutoff) {
            self.min.pop_front();
        }
        while self.max.front().is_some_and(|&(j, _)| j < cutoff) {
            self.max.pop_front();
        }
    }

    /// Number of values currently inside the window.
    pub fn len(&self) -> usize {
        self.idx.min(self.window)
    }

    pub fn is_empty(&self) -> bool {
        self.idx == 0
    }

    pub fn min(&self) -> Option<f64> {
        self.min.front().map(|&(_, v)| v)
    }

    pub fn max(&self) -> Option<f64> {
        self.max.front().map(|&(_, v)| v)
    }
}

/// Trailing-window mean, recomputed exactly from a ring buffer every
/// `window` pushes to keep drift out of the running sum.
#[derive(Debug, Clone)]
pub struct RollingMean {
    window: usize,
    buf: VecDeque<f64>,
    sum: f64,
    since_resum: usize,
}

impl RollingMean {
    pub fn new(window: usize) -> Self {
        assert!(window > 0);
        RollingMean {
            window,
            buf: VecDeque::with_capacity(window),
            sum: 0.0,
            since_resum: 0,
        }
    }

    pub fn push(&mut self, x: f64) {
        if self.buf.len() == self.window {
            let old = self.buf.pop_front().expect("full window");
            self.sum -= old;
        }
        self.buf.push_back(x);
        self.sum += x;
        self.since_resum += 1;
        if self.since_resum >= self.window {
            self.sum = self.buf.iter().sum();
            self.since_resum = 0;
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.buf.is_empty()).then(|| self.sum / self.buf.len() as f64)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divides by n).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Empirical quantile with linear interpolation, `q` in `[0, 1]`.
/// `sorted` must be ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}
