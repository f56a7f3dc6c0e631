//! Independent oracles for the integration tests. Nothing here calls the
//! library routine it is used to check.

#![allow(dead_code)]

use std::io::Write;

use gapkit::Fraction;
use num_integer::Integer;

/// Writes a report line past the test harness's output capture.
pub fn report(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

/// Prints the PASS/FAIL line of a criterion and returns `pass`.
pub fn verdict(id: &str, pass: bool, detail: &str) -> bool {
    report(&format!("{} {id}: {detail}", if pass { "PASS" } else { "FAIL" }));
    pass
}

/// Euler's totient for `1..=n` by sieve; index 0 is unused.
pub fn totients(n: usize) -> Vec<u64> {
    let mut phi: Vec<u64> = (0..=n as u64).collect();
    for p in 2..=n {
        if phi[p] == p as u64 {
            for m in (p..=n).step_by(p) {
                phi[m] -= phi[m] / p as u64;
            }
        }
    }
    phi
}

/// `N(Q) = Σ_{q ≤ Q} φ(q)`, the number of gaps of the Farey sequence.
pub fn farey_count(q: usize) -> u64 {
    totients(q)[1..].iter().sum()
}

/// Farey fractions of level `q` by brute force: every reduced `a/b` with
/// `b ≤ q`, sorted by cross-multiplication.
pub fn farey_brute(q: i64) -> Vec<(i64, i64)> {
    let mut v: Vec<(i64, i64)> = (1..=q)
        .flat_map(|b| (0..=b).map(move |a| (a, b)))
        .filter(|&(a, b)| a.gcd(&b) == 1)
        .collect();
    v.sort_by(|x, y| (x.0 * y.1).cmp(&(y.0 * x.1)));
    v
}

/// Exact consecutive differences of [`farey_brute`].
pub fn farey_brute_gaps(q: i64) -> Vec<Fraction> {
    let f = farey_brute(q);
    f.windows(2)
        .map(|w| Fraction::new(w[1].0, w[1].1) - Fraction::new(w[0].0, w[0].1))
        .collect()
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance
/// `eps`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, eps: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, eps, 50)
}

/// Simpson quadrature over consecutive breakpoints.
pub fn simpson_pieces<F: Fn(f64) -> f64>(f: &F, mut points: Vec<f64>, eps: f64) -> f64 {
    points.sort_by(f64::total_cmp);
    points.dedup();
    points.windows(2).map(|w| simpson(f, w[0], w[1], eps)).sum()
}

/// `|{(u, v) ∈ [0,1]²: u + v > 1, uv > c}|` by quadrature in `u` of the
/// length of the admissible `v`-interval.
pub fn area_uv_above(c: f64) -> f64 {
    let len = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let lo = (1.0 - u).max(c / u);
        (1.0 - lo).max(0.0)
    };
    let mut pts = vec![0.0, 1.0];
    if (0.0..1.0).contains(&c) {
        pts.push(c);
    }
    let disc = 1.0 - 4.0 * c;
    if disc > 0.0 {
        let r = disc.sqrt();
        pts.push(0.5 * (1.0 - r));
        pts.push(0.5 * (1.0 + r));
    }
    let pts = pts.into_iter().filter(|p| (0.0..=1.0).contains(p)).collect();
    simpson_pieces(&len, pts, 1e-14)
}

/// Hall's CDF at `t` for gaps of mean `π²/3` (unit strip), from the
/// quadrature area: `2|{uv > 1/t}|`.
pub fn hall_cdf_oracle_unnormalized(t: f64) -> f64 {
    if t <= 1.0 {
        0.0
    } else {
        2.0 * area_uv_above(1.0 / t)
    }
}

/// Hall's CDF for gaps normalized to mean one.
pub fn hall_cdf_oracle_normalized(t: f64) -> f64 {
    hall_cdf_oracle_unnormalized(t * std::f64::consts::PI.powi(2) / 3.0)
}

/// `2∫₀¹ −ln(1−a)/a da` by the substitution `a = 1 − e^{−s}`, which turns
/// the integrand into the smooth `s/(e^s − 1)`.
pub fn mean_roof_oracle() -> f64 {
    let g = |s: f64| if s == 0.0 { 1.0 } else { s / s.exp_m1() };
    2.0 * simpson(&g, 0.0, 80.0, 1e-14)
}

/// Kolmogorov–Smirnov distance computed from scratch.
pub fn ks_oracle<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let mut j = i;
        while j + 1 < s.len() && s[j + 1] == s[i] {
            j += 1;
        }
        let f = cdf(s[i]);
        d = d.max((f - i as f64 / n).abs()).max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    d
}

pub fn exp_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -(-t).exp_m1()
    }
}
