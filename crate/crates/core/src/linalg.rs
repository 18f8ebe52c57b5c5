//! Dense complex linear algebra helpers.
//!
//! Eigenvalues are taken block by block over the strongly connected
//! components of the matrix sparsity graph.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// `exp(i phi)`, exact for multiples of `pi/2`.
pub fn phasor(phi: f64) -> C64 {
    let quarter = phi / FRAC_PI_2;
    let k = quarter.round();
    if (quarter - k).abs() < 1e-14 {
        match (k as i64).rem_euclid(4) {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    } else {
        C64::from_polar(1.0, phi)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi % (2.0 * PI);
    if p <= -PI {
        p += 2.0 * PI;
    } else if p > PI {
        p -= 2.0 * PI;
    }
    p
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Off-diagonal entries at or below this magnitude count as structural zeros.
pub fn structural_tolerance(m: &DMatrix<C64>) -> f64 {
    64.0 * f64::EPSILON * max_abs(m).max(f64::MIN_POSITIVE)
}

/// Total order on complex numbers: real part first, then imaginary part.
pub fn cmp_complex(a: &C64, b: &C64) -> Ordering {
    a.re.partial_cmp(&b.re)
        .unwrap_or(Ordering::Equal)
        .then(a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal))
}

/// Strongly connected components of the sparsity graph of `m`.
pub(crate) fn irreducible_blocks(m: &DMatrix<C64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let tol = structural_tolerance(m);
    let mut g = DiGraph::<(), ()>::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)].norm() > tol {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut idx: Vec<usize> = c.into_iter().map(|v| v.index()).collect();
            idx.sort_unstable();
            idx
        })
        .collect()
}

/// Eigenvalues of a general complex matrix, sorted by (real, imag).
pub fn eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    let tol = structural_tolerance(m);
    let mut out = Vec::with_capacity(m.nrows());
    for block in irreducible_blocks(m) {
        if block.len() == 1 {
            out.push(m[(block[0], block[0])]);
            continue;
        }
        let sub = DMatrix::from_fn(block.len(), block.len(), |r, c| {
            let z = m[(block[r], block[c])];
            if r != c && z.norm() <= tol {
                C64::new(0.0, 0.0)
            } else {
                z
            }
        });
        // Deflating at machine epsilon can stall on large, badly scaled
        // blocks; a few ulps of slack costs nothing measurable.
        let schur = [
            16.0 * f64::EPSILON,
            256.0 * f64::EPSILON,
            4096.0 * f64::EPSILON,
        ]
        .into_iter()
        .find_map(|eps| nalgebra::linalg::Schur::try_new(sub.clone(), eps, 100 * block.len()))
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
        let (_, t) = schur.unpack();
        out.extend((0..block.len()).map(|k| t[(k, k)]));
    }
    out.sort_by(cmp_complex);
    Ok(out)
}

pub fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    let svd = nalgebra::linalg::SVD::new(m.clone(), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    s
}

/// Number of singular values above `tol`.
pub fn numerical_rank(m: &DMatrix<C64>, tol: f64) -> usize {
    singular_values(m).into_iter().filter(|&s| s > tol).count()
}

/// Right singular vectors of `m` whose singular values lie below `tol`,
/// ordered from smallest singular value up. At most `max` are returned; when
/// none is below `tol` the single least-singular vector is returned instead.
fn near_null_vectors(m: &DMatrix<C64>, tol: f64, max: usize) -> (Vec<DVector<C64>>, usize) {
    let svd = nalgebra::linalg::SVD::new(m.clone(), false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[a]
            .partial_cmp(&svd.singular_values[b])
            .unwrap_or(Ordering::Equal)
    });
    let below = order
        .iter()
        .filter(|&&k| svd.singular_values[k] <= tol)
        .count();
    let take = below.clamp(1, max.max(1));
    let vecs = order
        .iter()
        .take(take)
        .map(|&k| v_t.row(k).adjoint().into_owned())
        .collect();
    (vecs, below)
}

/// Groups values whose single-linkage distance is below `tol`.
pub fn cluster(values: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if (values[a] - values[b]).norm() < tol {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[rb] = ra;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for k in 0..n {
        let r = find(&mut parent, k);
        groups.entry(r).or_default().push(k);
    }
    groups.into_values().collect()
}

pub fn centroid(values: &[C64], members: &[usize]) -> C64 {
    members.iter().map(|&k| values[k]).sum::<C64>() / members.len() as f64
}

/// Condition number of the (column-normalized) eigenvector matrix of `m`.
///
/// Each eigenvalue cluster contributes as many eigenvectors as the null space
/// of `m - centroid` supports. A cluster whose geometric multiplicity falls
/// short of its size has no complete eigenbasis and yields `f64::INFINITY`.
pub fn eigenvector_condition(
    m: &DMatrix<C64>,
    eigenvalues: &[C64],
    cluster_tol: f64,
    rank_tol: f64,
) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 1.0;
    }
    let mut columns: Vec<DVector<C64>> = Vec::with_capacity(n);
    for members in cluster(eigenvalues, cluster_tol) {
        let center = centroid(eigenvalues, &members);
        let shifted = m - DMatrix::<C64>::identity(n, n) * center;
        let (vecs, below) = near_null_vectors(&shifted, rank_tol, members.len());
        if members.len() > 1 && below < members.len() {
            return f64::INFINITY;
        }
        columns.extend(vecs);
    }
    let v = DMatrix::from_fn(n, n, |r, c| {
        let col = &columns[c];
        col[r] / col.norm()
    });
    let s = singular_values(&v);
    let (hi, lo) = (s[0], s[s.len() - 1]);
    if lo <= 0.0 || !lo.is_finite() {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solves `a x = b`; `None` when `a` is singular.
pub fn solve(a: DMatrix<C64>, b: &DMatrix<C64>) -> Option<DMatrix<C64>> {
    let x = a.lu().solve(b)?;
    x.iter()
        .all(|z| z.re.is_finite() && z.im.is_finite())
        .then_some(x)
}
