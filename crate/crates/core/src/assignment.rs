//! Rectangular linear assignment with per-pair feasibility and a cost cap.
//!
//! The solver maximizes the number of matched pairs first and minimizes total
//! cost among maximum-cardinality matchings. Pairs above the cap are removed
//! before solving.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Marks a pair that must never be matched.
pub const INFEASIBLE: f64 = f64::INFINITY;

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    values: DMatrix<f64>,
}

impl CostMatrix {
    /// Entries must be finite or [`INFEASIBLE`].
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() || **v == INFEASIBLE)) {
            return Err(Error::Shape(format!("cost entry {v} is neither finite nor INFEASIBLE")));
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: usize, cols: usize, row_major: &[f64]) -> Result<Self> {
        if row_major.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} cost matrix",
                row_major.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, row_major))
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            values: DMatrix::zeros(rows, cols),
        }
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[(row, col)]
    }

    pub fn is_feasible(&self, row: usize, col: usize) -> bool {
        self.values[(row, col)] != INFEASIBLE
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssignmentResult {
    /// Sorted by row.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

impl AssignmentResult {
    pub fn total_cost(&self, cost: &CostMatrix) -> f64 {
        self.matches.iter().map(|&(r, c)| cost.get(r, c)).sum()
    }

    fn from_matches(mut matches: Vec<(usize, usize)>, rows: usize, cols: usize) -> Self {
        matches.sort_unstable();
        let mut row_used = vec![false; rows];
        let mut col_used = vec![false; cols];
        for &(r, c) in &matches {
            row_used[r] = true;
            col_used[c] = true;
        }
        Self {
            matches,
            unmatched_rows: (0..rows).filter(|&r| !row_used[r]).collect(),
            unmatched_cols: (0..cols).filter(|&c| !col_used[c]).collect(),
        }
    }
}

/// Minimum-cost matching over pairs that are feasible and cost at most `max_cost`.
///
/// Pass `f64::INFINITY` as `max_cost` to disable the cap.
pub fn hungarian_solve(cost: &CostMatrix, max_cost: f64) -> AssignmentResult {
    let (rows, cols) = (cost.rows(), cost.cols());
    let allowed = |r: usize, c: usize| {
        let v = cost.get(r, c);
        v != INFEASIBLE && v <= max_cost
    };

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in 0..rows {
        for c in 0..cols {
            if allowed(r, c) {
                lo = lo.min(cost.get(r, c));
                hi = hi.max(cost.get(r, c));
            }
        }
    }
    if lo > hi {
        return AssignmentResult::from_matches(Vec::new(), rows, cols);
    }

    // Any matching that uses one more forbidden pair costs more than the
    // spread between the cheapest and dearest feasible matchings.
    let k = rows.min(cols) as f64;
    let big = hi + (hi - lo + 1.0) * (k + 1.0);

    let transpose = rows > cols;
    let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
    let entry = |i: usize, j: usize| {
        let (r, c) = if transpose { (j, i) } else { (i, j) };
        if allowed(r, c) {
            cost.get(r, c) - lo
        } else {
            big - lo
        }
    };

    let assigned = solve_square_or_wide(n, m, entry);
    let matches = assigned
        .into_iter()
        .enumerate()
        .filter_map(|(i, j)| {
            let (r, c) = if transpose { (j, i) } else { (i, j) };
            allowed(r, c).then_some((r, c))
        })
        .collect();
    AssignmentResult::from_matches(matches, rows, cols)
}

/// Shortest augmenting path Hungarian method for `n <= m`.
/// Returns the column assigned to each row.
fn solve_square_or_wide(n: usize, m: usize, a: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    debug_assert!(n <= m);
    // 1-based potentials and matching; index 0 is the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive search: max cardinality, then min cost.
    fn brute(cost: &CostMatrix, cap: f64) -> (usize, f64) {
        fn go(r: usize, cost: &CostMatrix, cap: f64, used: &mut Vec<bool>, n: usize, sum: f64, best: &mut (usize, f64)) {
            if r == cost.rows() {
                if n > best.0 || (n == best.0 && sum < best.1) {
                    *best = (n, sum);
                }
                return;
            }
            go(r + 1, cost, cap, used, n, sum, best);
            for c in 0..cost.cols() {
                let v = cost.get(r, c);
                if !used[c] && v != INFEASIBLE && v <= cap {
                    used[c] = true;
                    go(r + 1, cost, cap, used, n + 1, sum + v, best);
                    used[c] = false;
                }
            }
        }
        let mut best = (0, 0.0);
        go(0, cost, cap, &mut vec![false; cost.cols()], 0, 0.0, &mut best);
        best
    }

    fn matrix_strategy() -> impl Strategy<Value = CostMatrix> {
        (0usize..=5, 0usize..=5).prop_flat_map(|(r, c)| {
            proptest::collection::vec(prop_oneof![4 => 0.0f64..1.0, 1 => Just(INFEASIBLE)], r * c)
                .prop_map(move |v| CostMatrix::from_rows(r, c, &v).unwrap())
        })
    }

    fn check_partition(res: &AssignmentResult, rows: usize, cols: usize) {
        let mut rs: Vec<usize> = res.matches.iter().map(|m| m.0).chain(res.unmatched_rows.iter().copied()).collect();
        let mut cs: Vec<usize> = res.matches.iter().map(|m| m.1).chain(res.unmatched_cols.iter().copied()).collect();
        rs.sort_unstable();
        cs.sort_unstable();
        assert_eq!(rs, (0..rows).collect::<Vec<_>>());
        assert_eq!(cs, (0..cols).collect::<Vec<_>>());
    }

    #[test]
    fn identity_like_diagonal() {
        let c = CostMatrix::from_rows(3, 3, &[0., 1., 1., 1., 0., 1., 1., 1., 0.]).unwrap();
        let res = hungarian_solve(&c, 0.5);
        assert_eq!(res.matches, vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn single_row_takes_cheaper_feasible() {
        let c = CostMatrix::from_rows(1, 2, &[0.3, 0.1]).unwrap();
        let res = hungarian_solve(&c, 0.2);
        assert_eq!(res.matches, vec![(0, 1)]);
        assert_eq!(res.unmatched_cols, vec![0]);
    }

    #[test]
    fn empty_and_all_infeasible() {
        let res = hungarian_solve(&CostMatrix::empty(0, 3), 0.2);
        assert_eq!(res.unmatched_cols, vec![0, 1, 2]);
        let c = CostMatrix::from_rows(2, 1, &[INFEASIBLE, INFEASIBLE]).unwrap();
        let res = hungarian_solve(&c, f64::INFINITY);
        assert!(res.matches.is_empty());
        assert_eq!(res.unmatched_rows, vec![0, 1]);
    }

    #[test]
    fn cap_prefers_more_feasible_matches() {
        // Taking (0,0) alone is cheapest, but (0,1)+(1,0) matches both rows.
        let c = CostMatrix::from_rows(2, 2, &[0.0, 0.15, 0.15, 0.9]).unwrap();
        let res = hungarian_solve(&c, 0.2);
        assert_eq!(res.matches, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn tall_matrix_is_handled() {
        let c = CostMatrix::from_rows(3, 1, &[0.5, 0.1, 0.3]).unwrap();
        let res = hungarian_solve(&c, f64::INFINITY);
        assert_eq!(res.matches, vec![(1, 0)]);
        assert_eq!(res.unmatched_rows, vec![0, 2]);
    }

    #[test]
    fn rejects_nan() {
        assert!(CostMatrix::from_rows(1, 1, &[f64::NAN]).is_err());
        assert!(CostMatrix::from_rows(1, 1, &[f64::NEG_INFINITY]).is_err());
        assert!(CostMatrix::from_rows(1, 2, &[0.0]).is_err());
    }

    proptest! {
        #[test]
        fn matches_brute_force(c in matrix_strategy(), cap in prop_oneof![Just(f64::INFINITY), 0.0f64..1.0]) {
            let res = hungarian_solve(&c, cap);
            check_partition(&res, c.rows(), c.cols());
            let (n, best) = brute(&c, cap);
            prop_assert_eq!(res.matches.len(), n);
            prop_assert!((res.total_cost(&c) - best).abs() < 1e-9);
        }

        #[test]
        fn cap_equals_pre_gating(c in matrix_strategy(), cap in 0.0f64..1.0) {
            let res = hungarian_solve(&c, cap);
            prop_assert!(res.matches.iter().all(|&(r, k)| c.get(r, k) <= cap));
            let gated = c.values().map(|v| if v > cap { INFEASIBLE } else { v });
            let again = hungarian_solve(&CostMatrix::new(gated).unwrap(), f64::INFINITY);
            prop_assert_eq!(res, again);
        }

        #[test]
        fn permutation_equivariance(c in matrix_strategy(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut pr: Vec<usize> = (0..c.rows()).collect();
            let mut pc: Vec<usize> = (0..c.cols()).collect();
            pr.shuffle(&mut rng);
            pc.shuffle(&mut rng);
            // permuted[i][j] = c[pr[i]][pc[j]]
            let permuted = CostMatrix::new(DMatrix::from_fn(c.rows(), c.cols(), |i, j| c.get(pr[i], pc[j]))).unwrap();
            let a = hungarian_solve(&c, f64::INFINITY);
            let b = hungarian_solve(&permuted, f64::INFINITY);
            let mut mapped: Vec<(usize, usize)> = b.matches.iter().map(|&(i, j)| (pr[i], pc[j])).collect();
            mapped.sort_unstable();
            // Continuous random costs make the optimum unique almost surely.
            prop_assert!((a.total_cost(&c) - b.total_cost(&permuted)).abs() < 1e-9);
            prop_assert_eq!(a.matches, mapped);
        }

        #[test]
        fn constant_shift_keeps_matching(n in 1usize..=6, vals in proptest::collection::vec(0.0f64..1.0, 36), shift in -5.0f64..5.0) {
            let c = CostMatrix::new(DMatrix::from_fn(n, n, |i, j| vals[i * 6 + j])).unwrap();
            let shifted = CostMatrix::new(c.values().add_scalar(shift)).unwrap();
            let a = hungarian_solve(&c, f64::INFINITY);
            let b = hungarian_solve(&shifted, f64::INFINITY);
            prop_assert_eq!(a.matches, b.matches);
        }
    }
}
