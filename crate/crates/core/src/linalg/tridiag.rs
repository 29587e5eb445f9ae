//! Symmetric tridiagonal eigenproblems.
//!
//! Full spectra come from implicit QL with Wilkinson shifts (`O(n²)`, no
//! vectors). Partial spectra below a cutoff come from Sturm bisection plus
//! inverse iteration, which is what the coupling-constant integrals on long
//! 1D boxes need.

use crate::{Error, Result};

/// All eigenvalues of the tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (`e.len() == d.len() - 1`), ascending.
pub fn eigenvalues(d: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if e.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            found: e.len(),
        });
    }
    let mut d = d.to_vec();
    let mut e: Vec<f64> = e.iter().copied().chain(std::iter::once(0.0)).collect();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::EigensolveFailure(format!("QL iteration stalled at index {l}")));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Number of eigenvalues strictly below `x` (Sturm count).
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    Sturm::new(d, e).count(x)
}

/// Sturm sequence data shared across many counts on one matrix.
struct Sturm<'a> {
    d: &'a [f64],
    e2: Vec<f64>,
    pivmin: f64,
}

impl<'a> Sturm<'a> {
    fn new(d: &'a [f64], e: &[f64]) -> Self {
        Self {
            d,
            e2: e.iter().map(|v| v * v).collect(),
            pivmin: pivot_floor(e),
        }
    }

    fn count(&self, x: f64) -> usize {
        let pivmin = self.pivmin;
        let mut count = 0;
        let mut q = self.d[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        count += usize::from(q < 0.0);
        for (di, e2) in self.d[1..].iter().zip(&self.e2) {
            q = di - x - e2 / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            count += usize::from(q < 0.0);
        }
        count
    }

    fn bracket(&self, k: usize, mut lo: f64, mut hi: f64, width: f64) -> (f64, f64) {
        while hi - lo > width {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo, hi)
    }

    /// Four counts in one pass; the independent recurrences hide division latency.
    fn count4(&self, x: [f64; 4]) -> [usize; 4] {
        let pivmin = self.pivmin;
        let mut count = [0usize; 4];
        let mut q = [0.0; 4];
        for j in 0..4 {
            q[j] = self.d[0] - x[j];
            if q[j].abs() < pivmin {
                q[j] = -pivmin;
            }
            count[j] += usize::from(q[j] < 0.0);
        }
        for (di, e2) in self.d[1..].iter().zip(&self.e2) {
            for j in 0..4 {
                q[j] = di - x[j] - e2 / q[j];
                if q[j].abs() < pivmin {
                    q[j] = -pivmin;
                }
                count[j] += usize::from(q[j] < 0.0);
            }
        }
        count
    }

    /// Like `bracket` but five-way, starting from and adding to a sorted record of `(x, count(x))`.
    fn bracket_sharing(&self, k: usize, width: f64, seen: &mut Vec<(f64, usize)>) -> (f64, f64) {
        let split = seen.partition_point(|&(_, c)| c <= k);
        let (mut lo, mut hi) = (seen[split - 1].0, seen[split].0);
        while hi - lo > width {
            let step = (hi - lo) / 5.0;
            let xs = [lo + step, lo + 2.0 * step, lo + 3.0 * step, lo + 4.0 * step];
            if xs[0] <= lo || xs[3] >= hi {
                break;
            }
            let cs = self.count4(xs);
            let (mut new_lo, mut new_hi) = (lo, hi);
            for (&x, &c) in xs.iter().zip(&cs) {
                let at = seen.partition_point(|&(y, _)| y < x);
                seen.insert(at, (x, c));
                if c > k {
                    new_hi = new_hi.min(x);
                } else {
                    new_lo = new_lo.max(x);
                }
            }
            lo = new_lo;
            hi = new_hi;
        }
        (lo, hi)
    }

    fn kth(&self, k: usize, lo: f64, hi: f64, scale: f64) -> f64 {
        let (lo, hi) = self.bracket(k, lo, hi, 2.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE));
        0.5 * (lo + hi)
    }
}

fn pivot_floor(e: &[f64]) -> f64 {
    let emax = e.iter().fold(0.0_f64, |m, v| m.max(v * v));
    f64::MIN_POSITIVE.max(emax * f64::MIN_POSITIVE) * 4.0
}

/// Gershgorin interval containing the spectrum.
pub fn gershgorin(d: &[f64], e: &[f64]) -> (f64, f64) {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    (lo, hi)
}

/// The `k`-th smallest eigenvalue (0-based) by bisection.
pub fn kth_eigenvalue(d: &[f64], e: &[f64], k: usize) -> f64 {
    let (lo, hi) = gershgorin(d, e);
    Sturm::new(d, e).kth(k, lo, hi, lo.abs().max(hi.abs()))
}

/// Eigenpairs with eigenvalue `<= cutoff`; vectors are unit-norm.
pub fn eigenpairs_below(d: &[f64], e: &[f64], cutoff: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = d.len();
    if e.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n.saturating_sub(1),
            found: e.len(),
        });
    }
    let sturm = Sturm::new(d, e);
    let upper = next_up(cutoff);
    let count = sturm.count(upper);
    let (lo, hi) = gershgorin(d, e);
    let norm = lo.abs().max(hi.abs());
    // coarse brackets first; well separated eigenvalues are then finished by
    // the Rayleigh quotient of their inverse-iteration vector
    let coarse = 1e-10 * norm;
    let mut seen = vec![(lo, 0), (upper.min(hi).max(lo), count)];
    let brackets: Vec<(f64, f64)> = (0..count)
        .map(|k| sturm.bracket_sharing(k, coarse, &mut seen))
        .collect();
    let isolated: Vec<bool> = (0..count)
        .map(|k| {
            let width = brackets[k].1 - brackets[k].0;
            let left = k == 0 || brackets[k].0 - brackets[k - 1].1 > 1e3 * width;
            let right = k + 1 == count || brackets[k + 1].0 - brackets[k].1 > 1e3 * width;
            left && right
        })
        .collect();
    let mut values: Vec<f64> = Vec::with_capacity(count);
    for (k, &(a, b)) in brackets.iter().enumerate() {
        values.push(if isolated[k] {
            0.5 * (a + b)
        } else {
            sturm.kth(k, a, b, norm)
        });
    }
    let cluster_gap = 1e-7 * norm;
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut cluster_start = 0;
    for k in 0..count {
        if k > 0 && values[k] - values[k - 1] > cluster_gap {
            cluster_start = k;
        }
        let sweeps = if isolated[k] { 4 } else { 5 };
        let v = inverse_iteration(d, e, values[k], norm, k, sweeps, &vectors[cluster_start..])?;
        if isolated[k] {
            let rq = rayleigh_quotient(d, e, &v);
            let (a, b) = brackets[k];
            values[k] = if (a..=b).contains(&rq) {
                rq
            } else {
                sturm.kth(k, a, b, norm)
            };
        }
        vectors.push(v);
    }
    Ok((values, vectors))
}

fn rayleigh_quotient(d: &[f64], e: &[f64], v: &[f64]) -> f64 {
    let n = d.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut tv = d[i] * v[i];
        if i > 0 {
            tv += e[i - 1] * v[i - 1];
        }
        if i + 1 < n {
            tv += e[i] * v[i + 1];
        }
        acc += v[i] * tv;
    }
    acc
}

fn next_up(x: f64) -> f64 {
    if x.is_finite() {
        x + x.abs().max(f64::MIN_POSITIVE) * f64::EPSILON
    } else {
        x
    }
}

fn inverse_iteration(
    d: &[f64],
    e: &[f64],
    lambda: f64,
    norm: f64,
    seed: usize,
    sweeps: usize,
    against: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let n = d.len();
    let factors = PivotedTridiagonalLu::new(d, e, lambda, norm);
    // deterministic, non-degenerate start vector
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * (0.618_033_988_75 + seed as f64 * 0.1)).sin())
        .collect();
    for _ in 0..sweeps {
        factors.solve(&mut x);
        for u in against {
            let dot: f64 = x.iter().zip(u).map(|(a, b)| a * b).sum();
            x.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(nrm.is_finite() && nrm > 0.0) {
            return Err(Error::EigensolveFailure(format!(
                "inverse iteration broke down at {lambda}"
            )));
        }
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    Ok(x)
}

/// LU with partial pivoting of `T - λI`; `U` has two superdiagonals.
struct PivotedTridiagonalLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl PivotedTridiagonalLu {
    fn new(d: &[f64], e: &[f64], lambda: f64, norm: f64) -> Self {
        let n = d.len();
        let tiny = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n];
        let mut swapped = vec![false; n];
        // current row i: (a, b, c) at columns i, i+1, i+2
        let mut a = d[0] - lambda;
        let mut b = if n > 1 { e[0] } else { 0.0 };
        let mut c = 0.0;
        for i in 0..n {
            if i + 1 == n {
                u0[i] = if a.abs() < tiny { tiny } else { a };
                break;
            }
            let sub = e[i];
            let next_diag = d[i + 1] - lambda;
            let next_sup = if i + 2 < n { e[i + 1] } else { 0.0 };
            if sub.abs() > a.abs() {
                swapped[i] = true;
                u0[i] = sub;
                u1[i] = next_diag;
                u2[i] = next_sup;
                let m = a / sub;
                mult[i] = m;
                a = b - m * next_diag;
                b = c - m * next_sup;
            } else {
                let piv = if a.abs() < tiny { tiny } else { a };
                u0[i] = piv;
                u1[i] = b;
                u2[i] = c;
                let m = sub / piv;
                mult[i] = m;
                a = next_diag - m * b;
                b = next_sup - m * c;
            }
            c = 0.0;
        }
        Self {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= self.mult[i] * x[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            if i + 1 < n {
                s -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * x[i + 2];
            }
            x[i] = s / self.u0[i];
        }
    }
}
