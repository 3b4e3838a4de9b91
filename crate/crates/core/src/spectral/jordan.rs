//! Jordan chains of a single eigenvalue, generic over the scalar backend.
//!
//! Chains are computed for `K = (T - λI)^T` acting on column vectors, so a
//! left chain `v_1 (T-λI) = 0`, `v_j (T-λI) = v_{j-1}` reads `K v_1 = 0`,
//! `K v_j = v_{j-1}`.

use crate::linalg::{max_abs, Mat, RankOracle, Scalar};

#[derive(Debug)]
pub(crate) struct ChainFailure {
    /// `dim ker K^k` for `k = 1, 2, …` as far as computed.
    pub nullities: Vec<usize>,
}

/// Jordan chains of `t` for `lambda`, each listed bottom first.
///
/// `power_oracle(k)` decides ranks of `K^k`. `independence(base, w)` returns
/// `None` when `w` lies in the span of `base`, otherwise a score (larger is
/// better conditioned). Preferred eigenvectors are placed at the bottom of a
/// chain whenever that is possible, in the order given; the remaining heads
/// are picked from a nullspace basis by best score.
pub(crate) fn jordan_chains<S, O, P, R>(
    t: &Mat<S>,
    lambda: &S,
    mult: usize,
    preferred: &[Vec<S>],
    power_oracle: P,
    independence: R,
) -> Result<Vec<Vec<Vec<S>>>, ChainFailure>
where
    S: Scalar,
    O: RankOracle<S>,
    P: Fn(usize) -> O,
    R: Fn(&[Vec<S>], &[S]) -> Option<f64>,
{
    let k = t.shifted(lambda).transpose();
    let mut powers = vec![Mat::identity(t.nrows())];
    let mut null: Vec<Vec<Vec<S>>> = vec![Vec::new()];
    let mut nullities = Vec::new();
    let mut top = None;
    for j in 1..=mult {
        let p = powers[j - 1].matmul(&k);
        let ns = power_oracle(j).nullspace(&p);
        nullities.push(ns.len());
        powers.push(p);
        null.push(ns);
        let d = null[j].len();
        if d > mult || d < null[j - 1].len() {
            return Err(ChainFailure { nullities });
        }
        if d == mult {
            top = Some(j);
            break;
        }
    }
    let Some(top) = top else {
        return Err(ChainFailure { nullities });
    };
    // a split cluster shows up as growth past the claimed multiplicity
    let beyond = powers[top].matmul(&k);
    let extra = power_oracle(top + 1).nullspace(&beyond).len();
    if extra != mult {
        nullities.push(extra);
        return Err(ChainFailure { nullities });
    }
    let knorm = k.norm_inf().max(1.0);
    // exact chain-length counts from the nullity staircase
    let d = |j: usize| if j > top { mult } else { null[j].len() };
    let count = |j: usize| (d(j) - d(j - 1)) - (d(j + 1) - d(j));

    let mut chains: Vec<Vec<Vec<S>>> = Vec::new();
    let mut used = vec![false; preferred.len()];
    for level in (1..=top).rev() {
        let need = count(level);
        if need == 0 {
            continue;
        }
        let mut base: Vec<Vec<S>> = null[level - 1].clone();
        base.extend(chains.iter().map(|c| c[level - 1].clone()));

        let mut picks: Vec<(Option<usize>, Vec<S>)> = Vec::new();
        for (i, u) in preferred.iter().enumerate() {
            if picks.len() == need {
                break;
            }
            let o = power_oracle(1);
            if used[i] || !o.is_zero_vec(&k.mul_vec(u), max_abs(u) * knorm) {
                continue;
            }
            let head = if level == 1 {
                Some(u.clone())
            } else {
                power_oracle(level - 1).solve(&powers[level - 1], u)
            };
            if let Some(w) = head {
                if independence(&base, &w).is_some() {
                    used[i] = true;
                    base.push(w.clone());
                    picks.push((Some(i), w));
                }
            }
        }
        while picks.len() < need {
            let mut best: Option<(f64, &Vec<S>)> = None;
            for w in &null[level] {
                if let Some(score) = independence(&base, w) {
                    if best.is_none_or(|(b, _)| score > b) {
                        best = Some((score, w));
                    }
                }
            }
            let Some((_, w)) = best else { break };
            base.push(w.clone());
            picks.push((None, w.clone()));
        }
        let accepted = picks.len();
        for (tag, w) in picks {
            let mut chain = vec![w];
            for _ in 1..level {
                let next = k.mul_vec(chain.last().unwrap());
                chain.push(next);
            }
            chain.reverse();
            if let Some(i) = tag {
                chain[0] = preferred[i].clone();
            }
            chains.push(chain);
        }
        if accepted < need {
            return Err(ChainFailure { nullities });
        }
    }
    Ok(chains)
}
