//! Diagonal reduction of integer relation matrices.
//!
//! Only the row transform is tracked: it is what maps ambient coordinates
//! onto the coordinates of the quotient `Z^r / span(columns)`.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagonalized {
    /// `|d_i|` for each row; rows past the rank carry 0.
    pub diag: Vec<i64>,
    /// Unimodular `U` with `U * M * V = diag(d)`.
    pub left: Vec<Vec<i64>>,
}

/// Reduces the `rows x cols.len()` matrix whose columns are `cols`.
#[allow(clippy::needless_range_loop)]
pub fn diagonalize(rows: usize, cols: &[Vec<i64>]) -> Diagonalized {
    let ncols = cols.len();
    let mut a: Vec<Vec<i128>> = (0..rows)
        .map(|i| cols.iter().map(|c| c[i] as i128).collect())
        .collect();
    let mut u: Vec<Vec<i128>> = (0..rows)
        .map(|i| (0..rows).map(|j| i128::from(i == j)).collect())
        .collect();

    let mut t = 0;
    while t < rows.min(ncols) {
        let Some((pi, pj)) = smallest_entry(&a, t) else { break };
        a.swap(t, pi);
        u.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let p = a[t][t];
            let mut dirty = false;
            for i in t + 1..rows {
                let q = a[i][t] / p;
                if q != 0 {
                    for j in t..ncols {
                        a[i][j] -= q * a[t][j];
                    }
                    for j in 0..rows {
                        u[i][j] -= q * u[t][j];
                    }
                }
                dirty |= a[i][t] != 0;
            }
            for j in t + 1..ncols {
                let q = a[t][j] / p;
                if q != 0 {
                    for row in a.iter_mut().skip(t) {
                        row[j] -= q * row[t];
                    }
                }
                dirty |= a[t][j] != 0;
            }
            if !dirty {
                break;
            }
            // a remainder survived; move the smallest one in row/col t to the pivot
            let (mut bi, mut bj, mut best) = (t, t, p.abs());
            for i in t + 1..rows {
                if a[i][t] != 0 && a[i][t].abs() < best {
                    (bi, bj, best) = (i, t, a[i][t].abs());
                }
            }
            for j in t + 1..ncols {
                if a[t][j] != 0 && a[t][j].abs() < best {
                    (bi, bj, best) = (t, j, a[t][j].abs());
                }
            }
            a.swap(t, bi);
            u.swap(t, bi);
            for row in a.iter_mut() {
                row.swap(t, bj);
            }
        }
        t += 1;
    }

    let mut diag = vec![0i64; rows];
    for (i, d) in diag.iter_mut().enumerate().take(rows.min(ncols)) {
        *d = a[i][i].unsigned_abs() as i64;
    }
    let left = u
        .into_iter()
        .map(|r| r.into_iter().map(|x| x as i64).collect())
        .collect();
    Diagonalized { diag, left }
}

fn smallest_entry(a: &[Vec<i128>], t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, i128)> = None;
    for (i, row) in a.iter().enumerate().skip(t) {
        for (j, &x) in row.iter().enumerate().skip(t) {
            if x != 0 && best.is_none_or(|(_, _, b)| x.abs() < b) {
                best = Some((i, j, x.abs()));
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}
