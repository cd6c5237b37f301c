use faer::linalg::solvers::DenseSolveCore;
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Mat, MatRef, Par, Side};

/// Lower Cholesky factor, or `None` if the matrix is not numerically PD.
pub(crate) fn cholesky(m: &Mat<f64>) -> Option<Mat<f64>> {
    m.llt(Side::Lower).ok().map(|f| f.L().to_owned())
}

/// Inverse of an SPD matrix through its Cholesky factorization.
pub(crate) fn spd_inverse(m: &Mat<f64>) -> Option<Mat<f64>> {
    let f = m.llt(Side::Lower).ok()?;
    let mut inv = f.inverse();
    symmetrize(&mut inv);
    Some(inv)
}

pub(crate) fn symmetrize(m: &mut Mat<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub(crate) fn min_eigenvalue(m: &Mat<f64>) -> f64 {
    match m.self_adjoint_eigenvalues(Side::Lower) {
        Ok(ev) => ev.into_iter().fold(f64::INFINITY, f64::min),
        Err(_) => f64::NAN,
    }
}

/// Largest `t` with `X + t dX` PSD, given the Cholesky factor of `X`.
pub(crate) fn max_psd_step(chol: MatRef<'_, f64>, dx: &Mat<f64>) -> f64 {
    let mut t = dx.clone();
    solve_lower_triangular_in_place(chol, t.as_mut(), Par::Seq);
    let mut w = t.transpose().to_owned();
    solve_lower_triangular_in_place(chol, w.as_mut(), Par::Seq);
    symmetrize(&mut w);
    let lmin = min_eigenvalue(&w);
    if lmin.is_nan() {
        0.0
    } else if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

/// Largest `t` with `v + t dv >= 0` entrywise.
pub(crate) fn max_orthant_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, &d)| d < 0.0)
        .map(|(&x, &d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn frob_dot(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        let ca = a.col_as_slice(j);
        let cb = b.col_as_slice(j);
        s += ca.iter().zip(cb).map(|(x, y)| x * y).sum::<f64>();
    }
    s
}

pub(crate) fn frob_norm(a: &Mat<f64>) -> f64 {
    frob_dot(a, a).sqrt()
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Column-major copy with unit column stride for tight inner loops.
pub(crate) fn to_dense_vec(m: &Mat<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * m.ncols());
    for j in 0..m.ncols() {
        out.extend_from_slice(m.col_as_slice(j));
    }
    out
}
