//! Cyclic Jacobi eigen-decomposition for symmetric 3x3 matrices.
//!
//! Jacobi rotations keep the eigenvectors orthonormal to machine precision
//! and resolve small eigenvalues with high relative accuracy, which is what
//! the null-vector extraction in the vanishing-point estimator depends on.
//! The sweep order is fixed, so results are bit-reproducible.

use nalgebra::{Matrix3, Vector3};

const MAX_SWEEPS: usize = 64;

/// Eigenpairs sorted by ascending eigenvalue. Column `i` of `vectors` belongs
/// to `values[i]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen3 {
    pub values: Vector3<f64>,
    pub vectors: Matrix3<f64>,
}

impl SymEigen3 {
    pub fn smallest(&self) -> (f64, Vector3<f64>) {
        (self.values[0], self.vectors.column(0).into_owned())
    }
}

/// Decomposes `m`, reading only its upper triangle.
pub fn sym_eigen3(m: &Matrix3<f64>) -> SymEigen3 {
    let mut a = *m;
    for i in 0..3 {
        for j in 0..i {
            a[(i, j)] = a[(j, i)];
        }
    }
    let mut v = Matrix3::identity();

    for _ in 0..MAX_SWEEPS {
        let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        let diag = a[(0, 0)].powi(2) + a[(1, 1)].powi(2) + a[(2, 2)].powi(2);
        if off == 0.0 || off <= f64::EPSILON * f64::EPSILON * 1e-4 * diag {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            rotate(&mut a, &mut v, p, q);
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = Vector3::new(
        a[(order[0], order[0])],
        a[(order[1], order[1])],
        a[(order[2], order[2])],
    );
    let vectors = Matrix3::from_columns(&[
        v.column(order[0]).into_owned(),
        v.column(order[1]).into_owned(),
        v.column(order[2]).into_owned(),
    ]);
    SymEigen3 { values, vectors }
}

/// One Jacobi rotation zeroing `a[(p, q)]`.
fn rotate(a: &mut Matrix3<f64>, v: &mut Matrix3<f64>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..3 {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..3 {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;

    for k in 0..3 {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
