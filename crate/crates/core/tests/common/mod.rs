//! Fixtures, random generators and independent oracles shared by the
//! integration tests.
#![allow(dead_code)]

use netclear_core::{DynamicInstance, LiabilityMatrix, Matrix, StaticInstance};
use rand::Rng;

pub fn en5_liabilities() -> LiabilityMatrix {
    LiabilityMatrix::from_rows(
        vec![
            vec![0.0, 180.0, 0.0, 0.0, 180.0],
            vec![0.0, 0.0, 100.0, 0.0, 100.0],
            vec![90.0, 0.0, 0.0, 100.0, 50.0],
            vec![150.0, 0.0, 0.0, 0.0, 150.0],
            vec![0.0; 5],
        ],
        Some(4),
    )
    .unwrap()
}

pub const C_NOM: [f64; 5] = [120.0, 20.0, 150.0, 200.0, 0.0];
pub const C_SHOCK: [f64; 5] = [120.0, 20.0, 120.0, 200.0, 0.0];

pub fn en5_stream() -> Vec<Vec<f64>> {
    vec![
        vec![60.0, 10.0, 120.0, 0.0, 0.0],
        vec![60.0, 8.0, 0.0, 200.0, 0.0],
        vec![1.0, 3.0, 10.0, 4.0, 0.0],
    ]
}

pub fn en5_static(c: [f64; 5]) -> StaticInstance {
    StaticInstance::new(en5_liabilities(), c.to_vec()).unwrap()
}

pub fn en5_dynamic() -> DynamicInstance {
    DynamicInstance::new(en5_liabilities(), en5_stream(), 1.01, 0.0).unwrap()
}

fn sparse(n: usize, entries: &[(usize, usize, f64)]) -> Matrix {
    let mut m = Matrix::square_zeros(n);
    for &(i, j, v) in entries {
        m[(i, j)] = v;
    }
    m
}

/// Known single-period optimum for the first inflow of the stream.
pub fn reference_first_period() -> Matrix {
    Matrix::from_rows(vec![
        vec![0.0, 180.0, 0.0, 0.0, 70.0],
        vec![0.0, 0.0, 100.0, 0.0, 90.0],
        vec![90.0, 0.0, 0.0, 100.0, 30.0],
        vec![100.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0; 5],
    ])
    .unwrap()
}

/// Known optimal three-period schedule, rounded to two decimals.
pub fn reference_schedule() -> Vec<Matrix> {
    vec![
        reference_first_period(),
        sparse(5, &[(0, 4, 110.5), (1, 4, 8.0), (3, 0, 50.5), (3, 4, 149.5)]),
        sparse(5, &[(0, 4, 0.61), (1, 4, 2.12), (2, 4, 10.0), (3, 4, 2.02)]),
    ]
}

/// Diamond network: 1 owes 2 and 3, both owe 4; cash arrives at node 1
/// first and node 2 second.
pub fn example_one() -> DynamicInstance {
    let m = sparse(4, &[(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)]);
    DynamicInstance::new(
        LiabilityMatrix::new(m, None).unwrap(),
        vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]],
        1.0,
        0.0,
    )
    .unwrap()
}

/// Node 1 routes its cash through node 2 at `t = 0`; nothing moves at `t = 1`.
pub fn example_one_node_two_first() -> Vec<Matrix> {
    vec![sparse(4, &[(0, 1, 1.0), (1, 3, 1.0)]), Matrix::square_zeros(4)]
}

pub fn example_one_optimal() -> Vec<Matrix> {
    vec![sparse(4, &[(0, 2, 1.0), (2, 3, 1.0)]), sparse(4, &[(1, 3, 1.0)])]
}

pub const ALPHAS: [f64; 3] = [1.0, 1.01, 1.1];

/// Random network with `2..=6` nodes and horizon `1..=4`. With `sink`, the
/// last node is an external sector owed by every other node.
pub fn random_instance(rng: &mut impl Rng, sink: bool) -> DynamicInstance {
    let n = rng.gen_range(2..=6);
    let horizon = rng.gen_range(1..=4);
    let alpha = ALPHAS[rng.gen_range(0..ALPHAS.len())];
    let mut m = Matrix::square_zeros(n);
    let banks = if sink { n - 1 } else { n };
    for i in 0..banks {
        for j in 0..banks {
            if i != j && rng.gen_bool(0.5) {
                m[(i, j)] = rng.gen_range(1.0..20.0_f64).round();
            }
        }
        if sink {
            m[(i, n - 1)] = rng.gen_range(2.0..20.0_f64).round();
        }
    }
    let inflows = (0..horizon)
        .map(|_| {
            (0..n)
                .map(|i| {
                    if (sink && i == n - 1) || rng.gen_bool(0.4) {
                        0.0
                    } else {
                        rng.gen_range(0.0..15.0)
                    }
                })
                .collect()
        })
        .collect();
    let external = sink.then_some(n - 1);
    DynamicInstance::new(LiabilityMatrix::new(m, external).unwrap(), inflows, alpha, 0.0).unwrap()
}

/// A row `aᵀx ≤ b` of a dense LP.
pub type Row = (Vec<f64>, f64);

/// Maximum of `cᵀx` over `{x : rows}` by enumerating every basis of tight
/// rows; `None` when no vertex is feasible. The rows must bound the region.
pub fn vertex_enumeration(c: &[f64], rows: &[Row], tol: f64) -> Option<f64> {
    let n = c.len();
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(n);
    fn recurse(
        start: usize,
        pick: &mut Vec<usize>,
        n: usize,
        c: &[f64],
        rows: &[Row],
        tol: f64,
        best: &mut Option<f64>,
    ) {
        if pick.len() == n {
            let a: Vec<Vec<f64>> = pick.iter().map(|&r| rows[r].0.clone()).collect();
            let b: Vec<f64> = pick.iter().map(|&r| rows[r].1).collect();
            if let Some(x) = gauss_solve(a, b) {
                let feasible = rows
                    .iter()
                    .all(|(a, b)| a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= b + tol);
                if feasible {
                    let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                    if best.is_none_or(|b| v > b) {
                        *best = Some(v);
                    }
                }
            }
            return;
        }
        for r in start..rows.len() {
            pick.push(r);
            recurse(r + 1, pick, n, c, rows, tol, best);
            pick.pop();
        }
    }
    recurse(0, &mut pick, n, c, rows, tol, &mut best);
    best
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for k in col..n {
                        a[r][k] -= f * a[col][k];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// `P̄(t+1) = α (P̄(t) − P(t))` evaluated entry by entry.
pub fn nominal_by_hand(initial: &Matrix, payments: &[Matrix], alpha: f64) -> Vec<Matrix> {
    let n = initial.rows();
    let mut out = vec![initial.clone()];
    for p in payments {
        let prev = out.last().unwrap();
        let mut next = Matrix::square_zeros(n);
        for i in 0..n {
            for j in 0..n {
                next[(i, j)] = alpha * (prev[(i, j)] - p[(i, j)]);
            }
        }
        out.push(next);
    }
    out
}

pub fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Prints one verdict line and fails the test when the check did not hold.
/// Writes to the process stdout directly so the line survives output
/// capture.
pub fn verdict(criterion: u32, title: &str, ok: bool, detail: String) {
    use std::io::Write;
    let line = format!("criterion {criterion}: {} | {title} | {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(ok, "criterion {criterion} failed: {title}: {detail}");
}
