//! Central differences with one Richardson step.

/// Derivative at 0 of `f`, from central differences at steps `h` and `h/2`.
pub fn derivative<const N: usize, F>(mut f: F, h: f64) -> [f64; N]
where
    F: FnMut(f64) -> [f64; N],
{
    let mut central = |s: f64| {
        let (a, b) = (f(s), f(-s));
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = (a[i] - b[i]) / (2.0 * s);
        }
        d
    };
    let coarse = central(h);
    let fine = central(0.5 * h);
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
    }
    out
}

pub fn derivative_scalar<F: FnMut(f64) -> f64>(mut f: F, h: f64) -> f64 {
    derivative(|s| [f(s)], h)[0]
}
