//! Self-contained phase-1 simplex for simplex-constrained feasibility,
//! generic over the scalar type.
//!
//! The one problem shape needed here: does a probability vector `p` over n
//! columns exist with `C p >= 0` row-wise? Exact rationals give crisp
//! boundary decisions on small instances; f64 with a fixed tolerance
//! covers large ones. Bland's rule keeps the degenerate pivots (every
//! right-hand side but one is zero) from cycling.

use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

/// Ordered-field scalar usable in the tableau.
pub trait LpScalar: Clone + PartialOrd + Signed {
    /// Comparison slack; zero for exact arithmetic.
    fn tolerance() -> Self;
    /// Exact embedding of an f64 (every finite f64 is rational).
    fn from_f64_exact(x: f64) -> Self;
    fn to_f64(&self) -> f64;
}

impl LpScalar for f64 {
    fn tolerance() -> f64 {
        1e-9
    }

    fn from_f64_exact(x: f64) -> f64 {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl LpScalar for num_rational::BigRational {
    fn tolerance() -> Self {
        Self::zero()
    }

    fn from_f64_exact(x: f64) -> Self {
        num_rational::BigRational::from_f64(x).expect("finite rate")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Find `p >= 0` with `sum(p) = 1` and `rows[m] . p >= 0` for every m,
/// or report infeasibility.
pub fn simplex_feasible<S: LpScalar>(rows: &[Vec<S>], n: usize) -> Option<Vec<S>> {
    assert!(n > 0, "need at least one column");
    for row in rows {
        assert_eq!(row.len(), n, "constraint width mismatch");
    }
    let m = rows.len();
    // columns: 0..n decision vars, n..n+m slacks, n+m artificial, n+m+1 rhs
    let cols = n + m + 2;
    let art = n + m;
    let rhs = n + m + 1;
    let mut tab: Vec<Vec<S>> = Vec::with_capacity(m + 1);
    // sum(p) + a = 1
    let mut row0: Vec<S> = vec![S::zero(); cols];
    for c in row0.iter_mut().take(n) {
        *c = S::one();
    }
    row0[art] = S::one();
    row0[rhs] = S::one();
    tab.push(row0);
    // -(rows[m] . p) + s_m = 0
    for (i, row) in rows.iter().enumerate() {
        let mut r: Vec<S> = vec![S::zero(); cols];
        for (j, c) in row.iter().enumerate() {
            r[j] = -c.clone();
        }
        r[n + i] = S::one();
        tab.push(r);
    }
    let mut basis: Vec<usize> = Vec::with_capacity(m + 1);
    basis.push(art);
    basis.extend((0..m).map(|i| n + i));
    // phase-1 objective: minimize the artificial. Reduced costs start as
    // the artificial's row over the non-artificial columns.
    let mut obj: Vec<S> = tab[0].clone();
    obj[art] = S::zero();

    let tol = S::tolerance();
    loop {
        // Bland: smallest improving column, artificial excluded
        let entering = (0..n + m).find(|&j| obj[j] > tol);
        let Some(entering) = entering else { break };
        // ratio test with Bland tie-break on the basic variable index
        let mut leaving: Option<(usize, S)> = None;
        for (i, row) in tab.iter().enumerate() {
            if row[entering] > tol {
                let ratio = row[rhs].clone() / row[entering].clone();
                let better = match &leaving {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && basis[i] < basis[*li])
                    }
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
        }
        let Some((pivot_row, _)) = leaving else {
            // unbounded phase-1 cannot happen (objective bounded below by 0)
            unreachable!("phase-1 objective is bounded");
        };
        pivot(&mut tab, &mut obj, pivot_row, entering, rhs);
        basis[pivot_row] = entering;
    }
    // feasible iff the artificial reached (near) zero
    let objective = obj[rhs].clone();
    if objective > S::tolerance() {
        return None;
    }
    let mut p = vec![S::zero(); n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            p[b] = tab[i][rhs].clone();
        }
    }
    // clamp tiny negatives from float rounding
    for v in p.iter_mut() {
        if *v < S::zero() {
            *v = S::zero();
        }
    }
    Some(p)
}

fn pivot<S: LpScalar>(
    tab: &mut [Vec<S>],
    obj: &mut [S],
    pivot_row: usize,
    entering: usize,
    rhs: usize,
) {
    let factor = tab[pivot_row][entering].clone();
    for c in 0..=rhs {
        tab[pivot_row][c] = tab[pivot_row][c].clone() / factor.clone();
    }
    for i in 0..tab.len() {
        if i == pivot_row {
            continue;
        }
        let mult = tab[i][entering].clone();
        if mult.is_zero() {
            continue;
        }
        for c in 0..=rhs {
            tab[i][c] = tab[i][c].clone() - mult.clone() * tab[pivot_row][c].clone();
        }
    }
    let mult = obj[entering].clone();
    if !mult.is_zero() {
        for c in 0..=rhs {
            obj[c] = obj[c].clone() - mult.clone() * tab[pivot_row][c].clone();
        }
    }
}
