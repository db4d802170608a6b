use crate::scalar::Scalar;
use crate::sets::Grid2;

/// Replaces `phi` by a signed distance function with the same zero level
/// set (fast sweeping on the eikonal equation, zero crossings seeded by
/// linear interpolation along grid edges).
pub fn redistance<S: Scalar>(grid: &Grid2<S>, phi: &mut [S]) {
    let (nx, ny, h) = (grid.nx, grid.ny, grid.cell);
    let inf = S::infinity();
    let mut d = vec![inf; phi.len()];
    let mut fixed = vec![false; phi.len()];
    let crossing = |a: S, b: S| -> Option<S> {
        if (a > S::zero()) != (b > S::zero()) {
            Some(h * a.abs() / (a - b).abs())
        } else {
            None
        }
    };
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let v = phi[k];
            let mut ax = inf;
            let mut ay = inf;
            if i > 0 {
                if let Some(c) = crossing(v, phi[k - 1]) {
                    ax = ax.min(c);
                }
            }
            if i + 1 < nx {
                if let Some(c) = crossing(v, phi[k + 1]) {
                    ax = ax.min(c);
                }
            }
            if j > 0 {
                if let Some(c) = crossing(v, phi[k - nx]) {
                    ay = ay.min(c);
                }
            }
            if j + 1 < ny {
                if let Some(c) = crossing(v, phi[k + nx]) {
                    ay = ay.min(c);
                }
            }
            let dk = match (ax < inf, ay < inf) {
                (true, true) if ax.min(ay) > S::zero() => ax * ay / ax.hypot(ay),
                (true, true) => S::zero(),
                (true, false) => ax,
                (false, true) => ay,
                _ => continue,
            };
            d[k] = dk;
            fixed[k] = true;
        }
    }
    if !fixed.iter().any(|&f| f) {
        return;
    }
    let two_h2 = h * h * S::of(2.0);
    let update = |d: &mut [S], i: usize, j: usize| {
        let k = j * nx + i;
        if fixed[k] {
            return;
        }
        let a = match (i > 0, i + 1 < nx) {
            (true, true) => d[k - 1].min(d[k + 1]),
            (true, false) => d[k - 1],
            (false, true) => d[k + 1],
            _ => inf,
        };
        let b = match (j > 0, j + 1 < ny) {
            (true, true) => d[k - nx].min(d[k + nx]),
            (true, false) => d[k - nx],
            (false, true) => d[k + nx],
            _ => inf,
        };
        let cand = if (a - b).abs() >= h || a == inf || b == inf {
            a.min(b) + h
        } else {
            (a + b + (two_h2 - (a - b) * (a - b)).sqrt()) * S::of(0.5)
        };
        if cand < d[k] {
            d[k] = cand;
        }
    };
    for _ in 0..2 {
        for j in 0..ny {
            for i in 0..nx {
                update(&mut d, i, j);
            }
            for i in (0..nx).rev() {
                update(&mut d, i, j);
            }
        }
        for j in (0..ny).rev() {
            for i in 0..nx {
                update(&mut d, i, j);
            }
            for i in (0..nx).rev() {
                update(&mut d, i, j);
            }
        }
    }
    for (p, dk) in phi.iter_mut().zip(d) {
        *p = if *p > S::zero() { dk } else { -dk };
    }
}
