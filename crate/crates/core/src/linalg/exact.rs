use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{Mat, QMatrix, RankOracle};

/// Exact rank decisions by row reduction over the rationals.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactOracle;

/// Reduced row echelon form in place; returns the pivot columns.
fn rref(a: &mut QMatrix) -> Vec<usize> {
    let (rows, cols) = (a.nrows(), a.ncols());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a.get(i, c).is_zero()) else {
            continue;
        };
        if p != r {
            for j in 0..cols {
                let tmp = a.get(p, j).clone();
                a.set(p, j, a.get(r, j).clone());
                a.set(r, j, tmp);
            }
        }
        let inv = a.get(r, c).recip();
        for j in 0..cols {
            let v = a.get(r, j) * &inv;
            a.set(r, j, v);
        }
        for i in 0..rows {
            if i == r || a.get(i, c).is_zero() {
                continue;
            }
            let f = a.get(i, c).clone();
            for j in 0..cols {
                let v = a.get(i, j) - &f * a.get(r, j);
                a.set(i, j, v);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

impl RankOracle<BigRational> for ExactOracle {
    fn nullspace(&self, a: &QMatrix) -> Vec<Vec<BigRational>> {
        let mut m = a.clone();
        let pivots = rref(&mut m);
        let cols = a.ncols();
        let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![BigRational::zero(); cols];
                v[f] = BigRational::one();
                for (r, &p) in pivots.iter().enumerate() {
                    v[p] = -m.get(r, f).clone();
                }
                v
            })
            .collect()
    }

    fn rank(&self, a: &QMatrix) -> usize {
        let mut m = a.clone();
        rref(&mut m).len()
    }

    fn solve(&self, a: &QMatrix, b: &[BigRational]) -> Option<Vec<BigRational>> {
        let (rows, cols) = (a.nrows(), a.ncols());
        assert_eq!(rows, b.len());
        let mut aug = Mat::from_fn(rows, cols + 1, |i, j| {
            if j < cols {
                a.get(i, j).clone()
            } else {
                b[i].clone()
            }
        });
        let pivots = rref(&mut aug);
        if pivots.last() == Some(&cols) {
            return None;
        }
        let mut x = vec![BigRational::zero(); cols];
        for (r, &p) in pivots.iter().enumerate() {
            x[p] = aug.get(r, cols).clone();
        }
        Some(x)
    }

    fn is_zero_vec(&self, v: &[BigRational], _scale: f64) -> bool {
        v.iter().all(Zero::is_zero)
    }

    fn normalizer(&self, v: &[BigRational]) -> Option<BigRational> {
        let first = v.iter().find(|x| !x.is_zero())?;
        let max = v.iter().map(|x| x.abs()).max()?;
        let s = max.recip();
        Some(if first.is_negative() { -s } else { s })
    }
}
