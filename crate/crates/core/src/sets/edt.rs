//! Exact Euclidean distance transform (Felzenszwalb and Huttenlocher).

use crate::scalar::Scalar;

/// Distance, in grid units, from every node to the nearest seed node.
/// Returns `None` if there are no seeds.
pub fn distance_to_seeds<S: Scalar>(nx: usize, ny: usize, seed: impl Fn(usize) -> bool) -> Option<Vec<S>> {
    let inf = S::of(1e18);
    let mut any = false;
    let mut f: Vec<S> = (0..nx * ny)
        .map(|k| {
            if seed(k) {
                any = true;
                S::zero()
            } else {
                inf
            }
        })
        .collect();
    if !any {
        return None;
    }
    let mut line = vec![S::zero(); nx.max(ny)];
    let mut out = vec![S::zero(); nx.max(ny)];
    let mut v = vec![0usize; nx.max(ny)];
    let mut z = vec![S::zero(); nx.max(ny) + 1];
    // Columns first, then rows.
    for i in 0..nx {
        for j in 0..ny {
            line[j] = f[j * nx + i];
        }
        transform_1d(&line[..ny], &mut out[..ny], &mut v, &mut z, inf);
        for j in 0..ny {
            f[j * nx + i] = out[j];
        }
    }
    for j in 0..ny {
        line[..nx].copy_from_slice(&f[j * nx..(j + 1) * nx]);
        transform_1d(&line[..nx], &mut out[..nx], &mut v, &mut z, inf);
        f[j * nx..(j + 1) * nx].copy_from_slice(&out[..nx]);
    }
    Some(f.into_iter().map(|d| d.sqrt()).collect())
}

/// 1-D squared distance transform of sampled function `f` (lower envelope of
/// parabolas).
fn transform_1d<S: Scalar>(f: &[S], d: &mut [S], v: &mut [usize], z: &mut [S], inf: S) {
    let n = f.len();
    let sq = |q: usize| S::of_usize(q * q);
    let mut k = 0usize;
    v[0] = 0;
    z[0] = -inf;
    z[1] = inf;
    // Skip leading empty samples so intersections stay finite.
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + sq(q)) - (f[p] + sq(p))) / (S::of_usize(2 * q) - S::of_usize(2 * p));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0: replace the first parabola.
                v[0] = q;
                z[0] = -inf;
                z[1] = inf;
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = inf;
            break;
        }
    }
    k = 0;
    for q in 0..n {
        while z[k + 1] < S::of_usize(q) {
            k += 1;
        }
        let p = v[k];
        let dq = S::of_usize(q.abs_diff(p));
        d[q] = dq * dq + f[p];
    }
}
