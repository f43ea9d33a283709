//! Small integer/rational matrix utilities: products, Smith normal form,
//! kernels, basis completion and exact linear solving.

use num::{BigInt, BigRational, One, Signed, Zero};

pub type IVec = Vec<i64>;

/// Dense row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IMat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<i64>,
}

impl IMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IMat { rows, cols, a: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[IVec]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut a = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            a.extend_from_slice(row);
        }
        IMat { rows: r, cols: c, a }
    }

    pub fn from_cols(cols: &[IVec]) -> Self {
        IMat::from_rows(cols).transpose()
    }

    pub fn col(&self, j: usize) -> IVec {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> IVec {
        self.a[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn transpose(&self) -> IMat {
        let mut t = IMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &IMat) -> IMat {
        assert_eq!(self.cols, other.rows);
        let mut m = IMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let v = self[(i, k)];
                if v == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    m[(i, j)] += v * other[(k, j)];
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[i64]) -> IVec {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && *self == IMat::identity(self.rows)
    }
}

impl std::ops::Index<(usize, usize)> for IMat {
    type Output = i64;
    fn index(&self, (i, j): (usize, usize)) -> &i64 {
        &self.a[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i64 {
        &mut self.a[i * self.cols + j]
    }
}

pub fn add_vec(a: &[i64], b: &[i64]) -> IVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub_vec(a: &[i64], b: &[i64]) -> IVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn neg_vec(a: &[i64]) -> IVec {
    a.iter().map(|x| -x).collect()
}

pub fn scale_vec(c: i64, a: &[i64]) -> IVec {
    a.iter().map(|x| c * x).collect()
}

pub fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Big-integer matrix used internally by the Smith normal form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BMat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<BigInt>,
}

impl BMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BMat { rows, cols, a: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_imat(m: &IMat) -> Self {
        BMat { rows: m.rows, cols: m.cols, a: m.a.iter().map(|&x| BigInt::from(x)).collect() }
    }

    pub fn to_imat(&self) -> IMat {
        IMat {
            rows: self.rows,
            cols: self.cols,
            a: self.a.iter().map(|x| i64::try_from(x).expect("entry exceeds i64")).collect(),
        }
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        for k in 0..self.cols {
            let (x, y) = (self[(i, k)].clone(), self[(j, k)].clone());
            self[(i, k)] = y;
            self[(j, k)] = x;
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        for k in 0..self.rows {
            let (x, y) = (self[(k, i)].clone(), self[(k, j)].clone());
            self[(k, i)] = y;
            self[(k, j)] = x;
        }
    }

    /// row i -= c * row j
    fn row_op(&mut self, i: usize, j: usize, c: &BigInt) {
        for k in 0..self.cols {
            let t = &self[(j, k)] * c;
            self[(i, k)] -= t;
        }
    }

    /// col i -= c * col j
    fn col_op(&mut self, i: usize, j: usize, c: &BigInt) {
        for k in 0..self.rows {
            let t = &self[(k, j)] * c;
            self[(k, i)] -= t;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for k in 0..self.cols {
            let v = -self[(i, k)].clone();
            self[(i, k)] = v;
        }
    }

    fn negate_col(&mut self, j: usize) {
        for k in 0..self.rows {
            let v = -self[(k, j)].clone();
            self[(k, j)] = v;
        }
    }

    pub fn mul(&self, other: &BMat) -> BMat {
        assert_eq!(self.cols, other.rows);
        let mut m = BMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let t = &self[(i, k)] * &other[(k, j)];
                    m[(i, j)] += t;
                }
            }
        }
        m
    }
}

impl std::ops::Index<(usize, usize)> for BMat {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.a[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for BMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.a[i * self.cols + j]
    }
}

/// Smith normal form `u * a * v = d` with `u`, `v` unimodular and
/// `d` diagonal with each entry dividing the next.
pub struct Snf {
    pub d: BMat,
    pub u: BMat,
    pub uinv: BMat,
    pub v: BMat,
    pub vinv: BMat,
}

impl Snf {
    /// Diagonal entries (all of them, including zeros), as i64.
    pub fn diag(&self) -> Vec<i64> {
        let n = self.d.rows.min(self.d.cols);
        (0..n).map(|i| i64::try_from(&self.d[(i, i)]).expect("snf entry overflow")).collect()
    }

    /// Nonzero invariant factors different from 1, i.e. the torsion part.
    pub fn torsion_factors(&self) -> Vec<i64> {
        self.diag().into_iter().filter(|&x| x.abs() > 1).map(|x| x.abs()).collect()
    }

    /// Number of nonzero diagonal entries.
    pub fn rank(&self) -> usize {
        self.diag().iter().filter(|&&x| x != 0).count()
    }
}

pub fn smith_normal_form(m: &IMat) -> Snf {
    let mut d = BMat::from_imat(m);
    let mut u = BMat::identity(m.rows);
    let mut uinv = BMat::identity(m.rows);
    let mut v = BMat::identity(m.cols);
    let mut vinv = BMat::identity(m.cols);

    let n = m.rows.min(m.cols);
    let mut t = 0;
    while t < n {
        // find a nonzero pivot in the lower-right block
        let mut pivot = None;
        'outer: for i in t..d.rows {
            for j in t..d.cols {
                if !d[(i, j)].is_zero() {
                    pivot = Some((i, j));
                    break 'outer;
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        if pi != t {
            d.swap_rows(t, pi);
            u.swap_rows(t, pi);
            uinv.swap_cols(t, pi);
        }
        if pj != t {
            d.swap_cols(t, pj);
            v.swap_cols(t, pj);
            vinv.swap_rows(t, pj);
        }
        loop {
            // clear column t
            let mut done = true;
            for i in (t + 1)..d.rows {
                if d[(i, t)].is_zero() {
                    continue;
                }
                let q = div_round(&d[(i, t)], &d[(t, t)]);
                d.row_op(i, t, &q);
                u.row_op(i, t, &q);
                // uinv: column op with +q on the transposed side
                for k in 0..uinv.rows {
                    let add = &uinv[(k, i)] * &q;
                    uinv[(k, t)] += add;
                }
                if !d[(i, t)].is_zero() {
                    d.swap_rows(t, i);
                    u.swap_rows(t, i);
                    uinv.swap_cols(t, i);
                    done = false;
                }
            }
            // clear row t
            for j in (t + 1)..d.cols {
                if d[(t, j)].is_zero() {
                    continue;
                }
                let q = div_round(&d[(t, j)], &d[(t, t)]);
                d.col_op(j, t, &q);
                v.col_op(j, t, &q);
                for k in 0..vinv.cols {
                    let add = &vinv[(j, k)] * &q;
                    vinv[(t, k)] += add;
                }
                if !d[(t, j)].is_zero() {
                    d.swap_cols(t, j);
                    v.swap_cols(t, j);
                    vinv.swap_rows(t, j);
                    done = false;
                }
            }
            let col_clear = ((t + 1)..d.rows).all(|i| d[(i, t)].is_zero());
            let row_clear = ((t + 1)..d.cols).all(|j| d[(t, j)].is_zero());
            if done && col_clear && row_clear {
                break;
            }
        }
        if d[(t, t)].is_negative() {
            d.negate_row(t);
            u.negate_row(t);
            uinv.negate_col(t);
        }
        t += 1;
    }
    // enforce divisibility d_i | d_{i+1}
    loop {
        let mut fixed = true;
        for i in 0..n.saturating_sub(1) {
            let (a, b) = (d[(i, i)].clone(), d[(i + 1, i + 1)].clone());
            if a.is_zero() || b.is_zero() {
                continue;
            }
            if (&b % &a).is_zero() {
                continue;
            }
            fixed = false;
            // col i += col i+1, then re-reduce the 2x2 block via full pass
            d.col_op(i, i + 1, &BigInt::from(-1));
            v.col_op(i, i + 1, &BigInt::from(-1));
            for k in 0..vinv.cols {
                let sub = vinv[(i, k)].clone();
                vinv[(i + 1, k)] -= sub;
            }
            // now clear entry (i+1, i) style interactions by redoing from i
            reduce_block(&mut d, &mut u, &mut uinv, &mut v, &mut vinv, i);
        }
        if fixed {
            break;
        }
    }
    let s = Snf { d, u, uinv, v, vinv };
    debug_assert!(s.u.mul(&s.uinv).a.iter().enumerate().all(|(k, x)| {
        let (i, j) = (k / s.u.cols, k % s.u.cols);
        if i == j { x.is_one() } else { x.is_zero() }
    }));
    s
}

fn reduce_block(d: &mut BMat, u: &mut BMat, uinv: &mut BMat, v: &mut BMat, vinv: &mut BMat, t0: usize) {
    let n = d.rows.min(d.cols);
    let mut t = t0;
    while t < n {
        let mut pivot = None;
        'outer: for i in t..d.rows {
            for j in t..d.cols {
                if !d[(i, j)].is_zero() {
                    pivot = Some((i, j));
                    break 'outer;
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        if pi != t {
            d.swap_rows(t, pi);
            u.swap_rows(t, pi);
            uinv.swap_cols(t, pi);
        }
        if pj != t {
            d.swap_cols(t, pj);
            v.swap_cols(t, pj);
            vinv.swap_rows(t, pj);
        }
        loop {
            let mut done = true;
            for i in (t + 1)..d.rows {
                if d[(i, t)].is_zero() {
                    continue;
                }
                let q = div_round(&d[(i, t)], &d[(t, t)]);
                d.row_op(i, t, &q);
                u.row_op(i, t, &q);
                for k in 0..uinv.rows {
                    let add = &uinv[(k, i)] * &q;
                    uinv[(k, t)] += add;
                }
                if !d[(i, t)].is_zero() {
                    d.swap_rows(t, i);
                    u.swap_rows(t, i);
                    uinv.swap_cols(t, i);
                    done = false;
                }
            }
            for j in (t + 1)..d.cols {
                if d[(t, j)].is_zero() {
                    continue;
                }
                let q = div_round(&d[(t, j)], &d[(t, t)]);
                d.col_op(j, t, &q);
                v.col_op(j, t, &q);
                for k in 0..vinv.cols {
                    let add = &vinv[(j, k)] * &q;
                    vinv[(t, k)] += add;
                }
                if !d[(t, j)].is_zero() {
                    d.swap_cols(t, j);
                    v.swap_cols(t, j);
                    vinv.swap_rows(t, j);
                    done = false;
                }
            }
            let col_clear = ((t + 1)..d.rows).all(|i| d[(i, t)].is_zero());
            let row_clear = ((t + 1)..d.cols).all(|j| d[(t, j)].is_zero());
            if done && col_clear && row_clear {
                break;
            }
        }
        if d[(t, t)].is_negative() {
            d.negate_row(t);
            u.negate_row(t);
            uinv.negate_col(t);
        }
        t += 1;
    }
}

fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    // truncating division: the remainder |a - qb| < |b| is all the clearing
    // loop needs to make progress
    a / b
}

/// Basis of the integer kernel `{x : m x = 0}` (a saturated sublattice of Z^cols).
pub fn kernel_basis(m: &IMat) -> Vec<IVec> {
    let s = smith_normal_form(m);
    let diag = s.diag();
    let rank = diag.iter().filter(|&&x| x != 0).count();
    (rank..m.cols).map(|j| s.v.to_imat().col(j)).collect()
}

/// Given a saturated sublattice spanned by the columns of `m` (n x k, rank k),
/// return a unimodular n x n matrix whose first k columns span the same
/// sublattice.
pub fn complete_basis(m: &IMat) -> IMat {
    let k = m.cols;
    let s = smith_normal_form(m);
    for (i, d) in s.diag().iter().enumerate() {
        assert!(i >= k || d.abs() == 1, "sublattice not saturated");
    }
    // m * v = uinv * d, so the first k columns of uinv (scaled by the units d_i)
    // span the sublattice.
    let mut b = s.uinv.to_imat();
    for i in 0..k {
        if s.diag()[i] < 0 {
            for r in 0..b.rows {
                let x = b[(r, i)];
                b[(r, i)] = -x;
            }
        }
    }
    b
}

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from(BigInt::from(n))
}

/// Dense rational matrix with exact arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<Rat>,
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat { rows, cols, a: vec![Rat::zero(); rows * cols] }
    }

    pub fn from_imat(m: &IMat) -> Self {
        QMat {
            rows: m.rows,
            cols: m.cols,
            a: m.a.iter().map(|&x| rat_int(x)).collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| &self[(i, j)] * &v[j]).sum())
            .collect()
    }

    pub fn det(&self) -> Rat {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Rat::one();
        for t in 0..n {
            let Some(p) = (t..n).find(|&i| !m[(i, t)].is_zero()) else {
                return Rat::zero();
            };
            if p != t {
                for k in 0..n {
                    let (x, y) = (m[(t, k)].clone(), m[(p, k)].clone());
                    m[(t, k)] = y;
                    m[(p, k)] = x;
                }
                det = -det;
            }
            det *= m[(t, t)].clone();
            let inv = m[(t, t)].recip();
            for i in (t + 1)..n {
                let f = &m[(i, t)] * &inv;
                if f.is_zero() {
                    continue;
                }
                for k in t..n {
                    let sub = &m[(t, k)] * &f;
                    m[(i, k)] -= sub;
                }
            }
        }
        det
    }

    /// Solve `self * x = b` when `self` is square invertible.
    pub fn solve(&self, b: &[Rat]) -> Option<Vec<Rat>> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(self.rows, b.len());
        let n = self.rows;
        let mut m = self.clone();
        let mut rhs = b.to_vec();
        for t in 0..n {
            let p = (t..n).find(|&i| !m[(i, t)].is_zero())?;
            if p != t {
                for k in 0..n {
                    let (x, y) = (m[(t, k)].clone(), m[(p, k)].clone());
                    m[(t, k)] = y;
                    m[(p, k)] = x;
                }
                rhs.swap(t, p);
            }
            let inv = m[(t, t)].recip();
            for k in t..n {
                let v = &m[(t, k)] * &inv;
                m[(t, k)] = v;
            }
            let v = &rhs[t] * &inv;
            rhs[t] = v;
            for i in 0..n {
                if i == t || m[(i, t)].is_zero() {
                    continue;
                }
                let f = m[(i, t)].clone();
                for k in t..n {
                    let sub = &m[(t, k)] * &f;
                    m[(i, k)] -= sub;
                }
                let sub = &rhs[t] * &f;
                rhs[i] -= sub;
            }
        }
        Some(rhs)
    }
}

impl std::ops::Index<(usize, usize)> for QMat {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.a[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.a[i * self.cols + j]
    }
}



#[cfg(test)]
mod snf_fuzz {
    use super::*;
    #[test]
    fn snf_terminates_smallish() {
        for a in -3i64..=3 {
            for b in -3i64..=3 {
                for c in -3i64..=3 {
                    for d in -3i64..=3 {
                        let m = IMat::from_rows(&[vec![a, b], vec![c, d]]);
                        let s = smith_normal_form(&m);
                        let diag = s.diag();
                        // consistency
                        let prod = s.u.mul(&BMat::from_imat(&m)).mul(&s.v);
                        assert_eq!(prod, s.d, "m={:?}", m);
                        if diag[0] != 0 && diag[1] != 0 {
                            assert_eq!(diag[1] % diag[0], 0, "m={:?} diag={:?}", m, diag);
                        }
                    }
                }
            }
        }
    }
}
