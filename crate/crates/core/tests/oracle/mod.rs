//! Reference implementations built from explicit n×n skew matrices,
//! independent of the library's bracket tables.

#![allow(dead_code)]

use nalgebra::DMatrix;

pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            v.push((i, j));
        }
    }
    v
}

/// `e_i e_jᵀ - e_j e_iᵀ` for every lex pair.
pub fn skew_basis(n: usize) -> Vec<DMatrix<f64>> {
    pairs(n)
        .into_iter()
        .map(|(i, j)| {
            let mut m = DMatrix::zeros(n, n);
            m[(i, j)] = 1.0;
            m[(j, i)] = -1.0;
            m
        })
        .collect()
}

/// `c[a][b][g] = ⟨[b_a, b_b], b_g⟩` with `⟨X, Y⟩ = ½ tr(XᵀY)`.
pub fn structure_constants(n: usize) -> Vec<Vec<Vec<f64>>> {
    let b = skew_basis(n);
    let d = b.len();
    let mut c = vec![vec![vec![0.0; d]; d]; d];
    for a in 0..d {
        for bb in 0..d {
            let br = &b[a] * &b[bb] - &b[bb] * &b[a];
            for g in 0..d {
                c[a][bb][g] = 0.5 * (br.transpose() * &b[g]).trace();
            }
        }
    }
    c
}

/// `R² + R#` with `(R#)_{αβ} = ½ Σ c^{γδ}_α c^{εζ}_β R_{γε} R_{δζ}`.
pub fn q(n: usize, r: &DMatrix<f64>) -> DMatrix<f64> {
    let c = structure_constants(n);
    let d = r.nrows();
    let mut sharp = DMatrix::zeros(d, d);
    for al in 0..d {
        for be in 0..d {
            let mut acc = 0.0;
            for g in 0..d {
                for dl in 0..d {
                    let ca = c[g][dl][al];
                    if ca == 0.0 {
                        continue;
                    }
                    for e in 0..d {
                        for z in 0..d {
                            let cb = c[e][z][be];
                            if cb != 0.0 {
                                acc += ca * cb * r[(g, e)] * r[(dl, z)];
                            }
                        }
                    }
                }
            }
            sharp[(al, be)] = 0.5 * acc;
        }
    }
    r * r + sharp
}

fn signed(n: usize, i: usize, j: usize) -> Option<(usize, f64)> {
    let p = pairs(n);
    if i < j {
        p.iter().position(|&x| x == (i, j)).map(|a| (a, 1.0))
    } else if j < i {
        p.iter().position(|&x| x == (j, i)).map(|a| (a, -1.0))
    } else {
        None
    }
}

/// `R_{ijkl} = ⟨R(e_i∧e_j), e_k∧e_l⟩` as a dense 4-index array.
pub fn tensor(n: usize, r: &DMatrix<f64>) -> Vec<f64> {
    let mut t = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    if let (Some((a, sa)), Some((b, sb))) = (signed(n, i, j), signed(n, k, l)) {
                        t[((i * n + j) * n + k) * n + l] = sa * sb * r[(a, b)];
                    }
                }
            }
        }
    }
    t
}

pub fn ricci(n: usize, r: &DMatrix<f64>) -> DMatrix<f64> {
    let t = tensor(n, r);
    DMatrix::from_fn(n, n, |i, j| (0..n).map(|k| t[((i * n + k) * n + j) * n + k]).sum())
}

pub fn scalar(n: usize, r: &DMatrix<f64>) -> f64 {
    ricci(n, r).trace()
}

pub fn q_tilde(n: usize, r: &DMatrix<f64>) -> DMatrix<f64> {
    let ric = ricci(n, r);
    q(n, r) - r * (&ric * &ric).trace()
}

/// `⟨DQ̃(R)A, A⟩` by Richardson-extrapolated central differences, exact up
/// to rounding because Q̃ is a cubic polynomial.
pub fn quadratic_form(n: usize, r: &DMatrix<f64>, a: &DMatrix<f64>) -> f64 {
    let central = |h: f64| {
        let d = (q_tilde(n, &(r + a * h)) - q_tilde(n, &(r - a * h))) / (2.0 * h);
        (d.transpose() * a).trace()
    };
    let h = 1e-2;
    (4.0 * central(h / 2.0) - central(h)) / 3.0
}
