//! Second-order ENO one-sided derivatives.

#[inline]
pub fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() <= b.abs() {
        a
    } else {
        b
    }
}

/// `(φ⁻, φ⁺)` at `values[i]` for a line of samples spaced `h` apart.
///
/// `φ⁻ = D⁻φ_i + (h/2)·minmod(D²φ_{i-1}, D²φ_i)` and mirrored for `φ⁺`.
/// Where the biased stencil runs off the end of the line the estimate
/// drops to first order; the end nodes use the single available
/// difference for both sides.
pub fn eno2_onesided(values: &[f64], i: usize, h: f64) -> (f64, f64) {
    assert!(values.len() >= 2 && i < values.len());
    eno2_with(|o| values[(i as isize + o) as usize], i, values.len(), h)
}

#[inline(always)]
pub(crate) fn eno2_with(at: impl Fn(isize) -> f64, pos: usize, n: usize, h: f64) -> (f64, f64) {
    let c = at(0);
    if pos == 0 {
        let d = (at(1) - c) / h;
        return (d, d);
    }
    if pos == n - 1 {
        let d = (c - at(-1)) / h;
        return (d, d);
    }
    let l1 = at(-1);
    let r1 = at(1);
    let dm = (c - l1) / h;
    let dp = (r1 - c) / h;
    let d2c = (r1 - 2.0 * c + l1) / (h * h);
    let minus = if pos >= 2 {
        let l2 = at(-2);
        let d2l = (c - 2.0 * l1 + l2) / (h * h);
        dm + 0.5 * h * minmod(d2l, d2c)
    } else {
        dm
    };
    let plus = if pos + 2 < n {
        let r2 = at(2);
        let d2r = (r2 - 2.0 * r1 + c) / (h * h);
        dp - 0.5 * h * minmod(d2c, d2r)
    } else {
        dp
    };
    (minus, plus)
}
