//! Root data `(X, Y, R0, R0v, F0)`: construction, validation, the built-in
//! families, duals, products, and parabolic subdata with their lattice
//! bookkeeping.

use crate::error::{HkError, Result};
use crate::intmat::{
    complete_basis, dot, kernel_basis, rat_int, smith_normal_form, IMat, IVec, QMat, Rat,
};
use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

/// Built-in families of root data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `A_{n-1}` with `X` the weight lattice (rank `n-1`), `n >= 2`.
    AWeight,
    /// `A_{n-1}` with `X` the root lattice (rank `n-1`), `n >= 2`.
    ARoot,
    /// `GL_n` with `X = Y = Z^n`, `n >= 1`.
    Gl,
    /// `B_n` with `X` the root lattice `Z^n`, `n >= 2`.
    BRoot,
    /// `B_2` with `X` the weight lattice `Z^2`.
    B2Weight,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::AWeight => "A_weight",
            Family::ARoot => "A_root",
            Family::Gl => "GL",
            Family::BRoot => "B_root",
            Family::B2Weight => "B2_weight",
        }
    }
}

/// How the finite Weyl group is described for labelling conjugacy classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassLabelKind {
    /// `W0 = S_n` and simple reflection `i` is the transposition `(i-1, i)`.
    SymmetricGroup(usize),
    /// `W0 = W(B_n)` acting by signed permutations in the `X` basis.
    SignedPermutations(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyInfo {
    pub family: Family,
    pub n: usize,
    pub class_labels: Option<ClassLabelKind>,
}

/// A root datum with a chosen basis of simple roots.
///
/// `X = Z^rank` in a fixed basis, `Y = Z^rank`, and the perfect pairing is
/// `<x, y> = x^T P y` for the integer matrix `P`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootDatum {
    rank: usize,
    pairing: IMat,
    simple_roots: Vec<IVec>,
    simple_coroots: Vec<IVec>,
    roots: Vec<IVec>,
    coroots: Vec<IVec>,
    positive: Vec<bool>,
    /// per root: whether the coroot lies in `2Y` (so the doubled root enters `R_nr`)
    doubled: Vec<bool>,
    pub family: Option<FamilyInfo>,
}

/// A long root of the possibly non-reduced system: either a root of `R0`
/// that stays long, or the double of a root whose coroot lies in `2Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct LongRoot {
    pub root_index: usize,
    pub doubled: bool,
}

const MAX_ROOTS: usize = 20_000;

impl RootDatum {
    pub fn new(
        pairing: IMat,
        simple_roots: Vec<IVec>,
        simple_coroots: Vec<IVec>,
    ) -> Result<RootDatum> {
        let rank = pairing.rows;
        if pairing.cols != rank {
            return Err(HkError::Invalid("pairing matrix must be square".into()));
        }
        if simple_roots.len() != simple_coroots.len() {
            return Err(HkError::Invalid(
                "need matching numbers of simple roots and coroots".into(),
            ));
        }
        for v in simple_roots.iter().chain(simple_coroots.iter()) {
            if v.len() != rank {
                return Err(HkError::Invalid("basis vector of wrong rank".into()));
            }
        }
        let mut d = RootDatum {
            rank,
            pairing,
            simple_roots,
            simple_coroots,
            roots: vec![],
            coroots: vec![],
            positive: vec![],
            doubled: vec![],
            family: None,
        };
        d.generate_roots()?;
        Ok(d)
    }

    /// `<x, y>` for `x` in `X` coordinates and `y` in `Y` coordinates.
    pub fn pair(&self, x: &[i64], y: &[i64]) -> i64 {
        let py = self.pairing.mul_vec(y);
        dot(x, &py)
    }

    fn generate_roots(&mut self) -> Result<()> {
        // saturate the simple roots under all simple reflections
        let mut pairs: Vec<(IVec, IVec)> = vec![];
        let mut seen = std::collections::BTreeSet::new();
        let mut queue: Vec<(IVec, IVec)> = self
            .simple_roots
            .iter()
            .cloned()
            .zip(self.simple_coroots.iter().cloned())
            .collect();
        for (a, av) in &queue {
            if self.pair(a, av) != 2 {
                return Err(HkError::Invalid(format!(
                    "<alpha, alpha^vee> = {} != 2 for simple root {:?}",
                    self.pair(a, av),
                    a
                )));
            }
        }
        while let Some((a, av)) = queue.pop() {
            if !seen.insert(a.clone()) {
                continue;
            }
            pairs.push((a.clone(), av.clone()));
            if pairs.len() > MAX_ROOTS {
                return Err(HkError::SizeLimit("root generation did not terminate".into()));
            }
            for i in 0..self.simple_roots.len() {
                let (si, siv) = (self.simple_roots[i].clone(), self.simple_coroots[i].clone());
                // s_i(a) = a - <a, s_i^vee> s_i ; s_i^vee(a^vee) = a^vee - <s_i, a^vee> s_i^vee
                let c1 = self.pair(&a, &siv);
                let c2 = self.pair(&si, &av);
                let ra: IVec = a.iter().zip(&si).map(|(x, s)| x - c1 * s).collect();
                let rav: IVec = av.iter().zip(&siv).map(|(x, s)| x - c2 * s).collect();
                if !seen.contains(&ra) {
                    queue.push((ra, rav));
                }
            }
        }
        pairs.sort();
        self.roots = pairs.iter().map(|(a, _)| a.clone()).collect();
        self.coroots = pairs.iter().map(|(_, av)| av.clone()).collect();
        // positivity via expansion in the simple roots
        let f0 = QMat::from_imat(&IMat::from_cols(&self.simple_roots));
        self.positive = Vec::with_capacity(self.roots.len());
        for a in &self.roots {
            let coords = self.simple_coordinates(&f0, a)?;
            let pos = coords.iter().all(|c| !c.is_negative());
            let negt = coords.iter().all(|c| !c.is_positive());
            if !pos && !negt {
                return Err(HkError::Invalid(format!(
                    "root {:?} is not a one-signed combination of the simple roots",
                    a
                )));
            }
            self.positive.push(pos);
        }
        self.doubled = self
            .coroots
            .iter()
            .map(|av| av.iter().all(|c| c % 2 == 0))
            .collect();
        Ok(())
    }

    fn simple_coordinates(&self, f0: &QMat, a: &[i64]) -> Result<Vec<Rat>> {
        // solve F0 * c = a in the least-squares sense over Q; F0 has full
        // column rank, so use normal equations with exact arithmetic.
        let k = self.simple_roots.len();
        let mut gram = QMat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                gram[(i, j)] = (0..self.rank)
                    .map(|r| &f0[(r, i)] * &f0[(r, j)])
                    .sum();
            }
        }
        let rhs: Vec<Rat> = (0..k)
            .map(|i| (0..self.rank).map(|r| &f0[(r, i)] * &rat_int(a[r])).sum())
            .collect();
        let coords = gram
            .solve(&rhs)
            .ok_or_else(|| HkError::Invalid("simple roots are linearly dependent".into()))?;
        // verify it is an actual solution (a lies in the span)
        for r in 0..self.rank {
            let v: Rat = (0..k).map(|i| &f0[(r, i)] * &coords[i]).sum();
            if v != rat_int(a[r]) {
                return Err(HkError::Invalid(format!(
                    "root {:?} outside the span of the simple roots",
                    a
                )));
            }
        }
        Ok(coords)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn pairing(&self) -> &IMat {
        &self.pairing
    }

    pub fn simple_roots(&self) -> &[IVec] {
        &self.simple_roots
    }

    pub fn simple_coroots(&self) -> &[IVec] {
        &self.simple_coroots
    }

    pub fn num_simple(&self) -> usize {
        self.simple_roots.len()
    }

    pub fn roots(&self) -> &[IVec] {
        &self.roots
    }

    pub fn coroots(&self) -> &[IVec] {
        &self.coroots
    }

    pub fn root_index(&self, a: &[i64]) -> Option<usize> {
        self.roots.binary_search_by(|r| r.as_slice().cmp(a)).ok()
    }

    pub fn is_positive_root(&self, idx: usize) -> bool {
        self.positive[idx]
    }

    pub fn positive_root_indices(&self) -> Vec<usize> {
        (0..self.roots.len()).filter(|&i| self.positive[i]).collect()
    }

    pub fn num_positive(&self) -> usize {
        self.positive.iter().filter(|&&p| p).count()
    }

    /// Whether the coroot of root `idx` lies in `2Y`.
    pub fn is_doubled(&self, idx: usize) -> bool {
        self.doubled[idx]
    }

    pub fn is_semisimple(&self) -> bool {
        self.simple_roots.len() == self.rank
    }

    /// The long roots of `R_nr`, i.e. the system `R1`.
    pub fn long_roots(&self) -> Vec<LongRoot> {
        let mut out = vec![];
        for i in 0..self.roots.len() {
            if !self.doubled[i] {
                out.push(LongRoot { root_index: i, doubled: false });
            } else {
                // candidate 2*alpha with coroot alpha^vee / 2; long iff that
                // half-coroot is not itself in 2Y
                let half: IVec = self.coroots[i].iter().map(|c| c / 2).collect();
                if !half.iter().all(|c| c % 2 == 0) {
                    out.push(LongRoot { root_index: i, doubled: true });
                }
            }
        }
        out
    }

    /// The vector in `X` of a long root.
    pub fn long_root_vector(&self, lr: &LongRoot) -> IVec {
        let a = &self.roots[lr.root_index];
        if lr.doubled {
            a.iter().map(|c| 2 * c).collect()
        } else {
            a.clone()
        }
    }

    /// Positive long roots.
    pub fn positive_long_roots(&self) -> Vec<LongRoot> {
        self.long_roots()
            .into_iter()
            .filter(|lr| self.positive[lr.root_index])
            .collect()
    }

    /// Reflection matrix of root `idx` acting on `X` (column convention).
    pub fn reflection(&self, idx: usize) -> IMat {
        self.reflection_for(&self.roots[idx], &self.coroots[idx])
    }

    pub fn reflection_for(&self, a: &[i64], av: &[i64]) -> IMat {
        let mut m = IMat::identity(self.rank);
        let pav = self.pairing.mul_vec(av);
        for i in 0..self.rank {
            for j in 0..self.rank {
                m[(i, j)] -= a[i] * pav[j];
            }
        }
        m
    }

    /// Matrix of the action on `Y` induced by the matrix `m` on `X`:
    /// `<m x, y> = <x, m' y>` gives `m' = P^{-1} m^T P`.
    pub fn dual_action(&self, m: &IMat) -> IMat {
        let p = QMat::from_imat(&self.pairing);
        let mt = QMat::from_imat(&m.transpose());
        // solve P Z = M^T P  column by column
        let rhs = mt_mul(&mt, &p);
        let mut z = IMat::zeros(self.rank, self.rank);
        for j in 0..self.rank {
            let col: Vec<Rat> = (0..self.rank).map(|i| rhs[(i, j)].clone()).collect();
            let sol = p.solve(&col).expect("pairing not invertible");
            for i in 0..self.rank {
                assert!(sol[i].is_integer(), "dual action not integral");
                let v: num::BigInt = sol[i].to_integer();
                z[(i, j)] = i64::try_from(&v).expect("entry overflow");
            }
        }
        z
    }

    pub fn is_dominant(&self, x: &[i64]) -> bool {
        self.simple_coroots.iter().all(|av| self.pair(x, av) >= 0)
    }

    /// Report-style validation of the root datum axioms.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = vec![];
        // <alpha, alpha^vee> = 2
        let mut ok = true;
        for (a, av) in self.roots.iter().zip(&self.coroots) {
            if self.pair(a, av) != 2 {
                ok = false;
            }
        }
        checks.push(Check::new("pair(alpha, alpha_vee) = 2 for all roots", ok));
        // s_alpha(R0) = R0, dual closure
        let mut closed = true;
        let mut dual_closed = true;
        for i in 0..self.roots.len() {
            let m = self.reflection(i);
            let md = self.coreflection(i);
            for (a, av) in self.roots.iter().zip(&self.coroots) {
                let ra = m.mul_vec(a);
                match self.root_index(&ra) {
                    None => closed = false,
                    Some(_) => {}
                }
                let rav = md.mul_vec(av);
                if !self.coroots.contains(&rav) {
                    dual_closed = false;
                }
            }
        }
        checks.push(Check::new("reflections permute R0", closed));
        checks.push(Check::new("coreflections permute R0_vee", dual_closed));
        // reduced
        let mut reduced = true;
        for a in &self.roots {
            let twice: IVec = a.iter().map(|c| 2 * c).collect();
            if self.root_index(&twice).is_some() {
                reduced = false;
            }
        }
        checks.push(Check::new("R0 is reduced", reduced));
        // basis property: every root one-signed in F0 (established during
        // generation; re-verified here)
        let f0 = QMat::from_imat(&IMat::from_cols(&self.simple_roots));
        let mut basis_ok = true;
        for a in &self.roots {
            match self.simple_coordinates(&f0, a) {
                Ok(c) => {
                    let pos = c.iter().all(|x| !x.is_negative());
                    let neg = c.iter().all(|x| !x.is_positive());
                    if !(pos || neg) {
                        basis_ok = false;
                    }
                }
                Err(_) => basis_ok = false,
            }
        }
        checks.push(Check::new("F0 is a basis of R0", basis_ok));
        ValidationReport { checks }
    }

    /// Reflection of root `idx` acting on `Y`.
    pub fn coreflection(&self, idx: usize) -> IMat {
        let (a, av) = (&self.roots[idx], &self.coroots[idx]);
        let mut m = IMat::identity(self.rank);
        let pa = self.pairing.transpose().mul_vec(a);
        for i in 0..self.rank {
            for j in 0..self.rank {
                m[(i, j)] -= av[i] * pa[j];
            }
        }
        m
    }

    /// Dual root datum: swap `X` with `Y` and roots with coroots.
    pub fn dual(&self) -> RootDatum {
        let mut d = RootDatum::new(
            self.pairing.transpose(),
            self.simple_coroots.clone(),
            self.simple_roots.clone(),
        )
        .expect("dual of a valid datum is valid");
        d.family = None;
        d
    }

    /// Direct product of two root data.
    pub fn product(&self, other: &RootDatum) -> RootDatum {
        let rank = self.rank + other.rank;
        let mut pairing = IMat::zeros(rank, rank);
        for i in 0..self.rank {
            for j in 0..self.rank {
                pairing[(i, j)] = self.pairing[(i, j)];
            }
        }
        for i in 0..other.rank {
            for j in 0..other.rank {
                pairing[(self.rank + i, self.rank + j)] = other.pairing[(i, j)];
            }
        }
        let pad = |v: &IVec, before: usize, after: usize| -> IVec {
            let mut out = vec![0; before];
            out.extend_from_slice(v);
            out.extend(std::iter::repeat(0).take(after));
            out
        };
        let mut simple_roots: Vec<IVec> =
            self.simple_roots.iter().map(|v| pad(v, 0, other.rank)).collect();
        simple_roots.extend(other.simple_roots.iter().map(|v| pad(v, self.rank, 0)));
        let mut simple_coroots: Vec<IVec> =
            self.simple_coroots.iter().map(|v| pad(v, 0, other.rank)).collect();
        simple_coroots.extend(other.simple_coroots.iter().map(|v| pad(v, self.rank, 0)));
        RootDatum::new(pairing, simple_roots, simple_coroots)
            .expect("product of valid data is valid")
    }

    /// The trivial rank-one extension `R x Z`.
    pub fn times_z(&self) -> RootDatum {
        self.product(&RootDatum::new(IMat::identity(1), vec![], vec![]).unwrap())
    }

    /// Parabolic subdatum data for `P` a subset of the simple roots.
    pub fn parabolic(&self, p: &[usize]) -> Result<ParabolicData> {
        for &i in p {
            if i >= self.simple_roots.len() {
                return Err(HkError::Invalid(format!("no simple root with index {}", i)));
            }
        }
        let mut p_sorted = p.to_vec();
        p_sorted.sort_unstable();
        p_sorted.dedup();

        // R_P = Q P cap R0: saturate the chosen simple roots
        let span_basis: Vec<IVec> = p_sorted.iter().map(|&i| self.simple_roots[i].clone()).collect();
        let mut roots_p = vec![];
        if !span_basis.is_empty() {
            let f0 = QMat::from_imat(&IMat::from_cols(&span_basis));
            for (idx, a) in self.roots.iter().enumerate() {
                if in_span(&f0, a) {
                    roots_p.push(idx);
                }
            }
        }

        // lattices:
        //   X_P = X / (X cap (P^vee)^perp),  X^P = X / (X cap Q P)
        //   Y_P = Y cap Q P^vee,             Y^P = Y cap P^perp
        let coroot_rows: Vec<IVec> = p_sorted
            .iter()
            .map(|&i| self.pairing.mul_vec(&self.simple_coroots[i]))
            .collect();
        // X cap (P^vee)^perp: kernel of x -> (<x, beta^vee>)_beta
        let perp_x = if coroot_rows.is_empty() {
            (0..self.rank).map(|i| unit(self.rank, i)).collect::<Vec<_>>()
        } else {
            kernel_basis(&IMat::from_rows(&coroot_rows))
        };
        // X cap Q P: saturation of the span of the roots in P
        let span_x = if span_basis.is_empty() {
            vec![]
        } else {
            saturation_basis(&span_basis, self.rank)
        };
        // Y_P = Y cap Q P^vee
        let covec: Vec<IVec> = p_sorted.iter().map(|&i| self.simple_coroots[i].clone()).collect();
        let y_p = if covec.is_empty() { vec![] } else { saturation_basis(&covec, self.rank) };
        // Y^P = Y cap P^perp: kernel of y -> (<beta, y>)_beta
        let root_rows: Vec<IVec> = p_sorted
            .iter()
            .map(|&i| self.pairing.transpose().mul_vec(&self.simple_roots[i]))
            .collect();
        let y_perp = if root_rows.is_empty() {
            (0..self.rank).map(|i| unit(self.rank, i)).collect::<Vec<_>>()
        } else {
            kernel_basis(&IMat::from_rows(&root_rows))
        };

        // K_P = T^P cap T_P = Hom(X / (A + B), C^x) with A = X cap (P^vee)^perp
        // and B = X cap Q P; its invariant factors come from the SNF of [A | B].
        let mut cols = perp_x.clone();
        cols.extend(span_x.iter().cloned());
        let k_p = if cols.is_empty() {
            vec![]
        } else {
            let m = IMat::from_cols(&cols);
            let s = smith_normal_form(&m);
            let mut factors = s.torsion_factors();
            let full_rank = s.rank() == self.rank;
            if !full_rank {
                return Err(HkError::Invalid(
                    "parabolic lattice sum does not have full rank".into(),
                ));
            }
            factors.sort_unstable();
            factors
        };

        // subdatum R^P = (X, Y, R_P, R_P^vee, P): same lattices
        let sub = {
            let sr: Vec<IVec> = p_sorted.iter().map(|&i| self.simple_roots[i].clone()).collect();
            let sc: Vec<IVec> = p_sorted.iter().map(|&i| self.simple_coroots[i].clone()).collect();
            let mut d = RootDatum::new(self.pairing.clone(), sr, sc)?;
            d.family = None;
            d
        };

        // quotient datum R_P = (X_P, Y_P, R_P, R_P^vee, P)
        let quotient = if p_sorted.is_empty() {
            None
        } else {
            Some(self.quotient_datum(&p_sorted, &perp_x, &y_p)?)
        };

        Ok(ParabolicData {
            p: p_sorted,
            roots_p,
            x_perp_basis: perp_x,
            x_span_basis: span_x,
            y_p_basis: y_p,
            y_perp_basis: y_perp,
            k_p,
            subdatum: sub,
            quotient_datum: quotient,
        })
    }

    fn quotient_datum(
        &self,
        p: &[usize],
        perp_x: &[IVec],
        y_p: &[IVec],
    ) -> Result<RootDatum> {
        // X_P = X / A with A = X cap (P^vee)^perp (saturated). Coordinates on
        // X_P: complete A to a basis of X and project onto the complement.
        let k = p.len();
        let n = self.rank;
        let a_rank = perp_x.len();
        assert_eq!(a_rank + k, n, "parabolic rank bookkeeping");
        let full = if a_rank == 0 {
            IMat::identity(n)
        } else {
            complete_basis(&IMat::from_cols(perp_x))
        };
        // full basis columns: first a_rank span A, the rest map onto X_P
        let fullq = QMat::from_imat(&full);
        let to_quot = move |x: &IVec| -> IVec {
            let col: Vec<Rat> = x.iter().map(|&c| rat_int(c)).collect();
            let sol = fullq.solve(&col).expect("basis completion invertible");
            sol[a_rank..]
                .iter()
                .map(|r| {
                    assert!(r.is_integer());
                    i64::try_from(&r.to_integer()).expect("overflow")
                })
                .collect()
        };
        // Y_P basis gives coordinates on the coroot side
        let yb = IMat::from_cols(y_p);
        let ybq = QMat::from_imat(&yb);
        let to_yp = move |y: &IVec| -> IVec {
            // solve yb * c = y via least squares (yb full column rank)
            let k2 = yb.cols;
            let mut gram = QMat::zeros(k2, k2);
            for i in 0..k2 {
                for j in 0..k2 {
                    gram[(i, j)] = (0..yb.rows).map(|r| &ybq[(r, i)] * &ybq[(r, j)]).sum();
                }
            }
            let rhs: Vec<Rat> = (0..k2)
                .map(|i| (0..yb.rows).map(|r| &ybq[(r, i)] * &rat_int(y[r])).sum())
                .collect();
            let sol = gram.solve(&rhs).expect("Y_P basis independent");
            sol.iter()
                .map(|r| {
                    assert!(r.is_integer(), "coroot not in Y_P lattice");
                    i64::try_from(&r.to_integer()).expect("overflow")
                })
                .collect()
        };
        let sr: Vec<IVec> = p.iter().map(|&i| to_quot(&self.simple_roots[i])).collect();
        let sc: Vec<IVec> = p.iter().map(|&i| to_yp(&self.simple_coroots[i])).collect();
        // induced pairing on X_P x Y_P: <xbar, y> = <x, y> for any lift; in the
        // completed basis the lift of the j-th quotient generator is column
        // a_rank + j of `full`.
        let mut pairing = IMat::zeros(k, k);
        for i in 0..k {
            let lift = full.col(a_rank + i);
            for j in 0..k {
                pairing[(i, j)] = self.pair(&lift, y_p[j].as_slice());
            }
        }
        RootDatum::new(pairing, sr, sc)
    }

    /// Datum description used by the CLI and the JSON interface.
    pub fn describe_json(&self) -> serde_json::Value {
        serde_json::json!({
            "rank": self.rank,
            "pairing": mat_rows(&self.pairing),
            "simple_roots": self.simple_roots,
            "simple_coroots": self.simple_coroots,
            "num_roots": self.roots.len(),
            "num_positive": self.num_positive(),
            "semisimple": self.is_semisimple(),
            "family": self.family.as_ref().map(|f| format!("{},{}", f.family.name(), f.n)),
        })
    }
}

fn mt_mul(a: &QMat, b: &QMat) -> QMat {
    let mut m = QMat::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            if a[(i, k)].is_zero() {
                continue;
            }
            for j in 0..b.cols {
                let t = &a[(i, k)] * &b[(k, j)];
                m[(i, j)] += t;
            }
        }
    }
    m
}

fn unit(n: usize, i: usize) -> IVec {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

fn in_span(f0: &QMat, a: &[i64]) -> bool {
    // least-squares onto the span, then verify
    let k = f0.cols;
    let mut gram = QMat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gram[(i, j)] = (0..f0.rows).map(|r| &f0[(r, i)] * &f0[(r, j)]).sum();
        }
    }
    let rhs: Vec<Rat> = (0..k)
        .map(|i| (0..f0.rows).map(|r| &f0[(r, i)] * &rat_int(a[r])).sum())
        .collect();
    let Some(sol) = gram.solve(&rhs) else { return false };
    for r in 0..f0.rows {
        let v: Rat = (0..k).map(|i| &f0[(r, i)] * &sol[i]).sum();
        if v != rat_int(a[r]) {
            return false;
        }
    }
    true
}

/// Basis of the saturation `(Q-span of vs) cap Z^n`, computed as a double
/// coordinate kernel: first the functionals vanishing on the span, then the
/// vectors they annihilate.
pub fn saturation_basis(vs: &[IVec], n: usize) -> Vec<IVec> {
    let forms = kernel_basis(&IMat::from_rows(vs));
    if forms.is_empty() {
        return (0..n).map(|i| unit(n, i)).collect();
    }
    kernel_basis(&IMat::from_rows(&forms))
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
}

impl Check {
    fn new(name: &str, ok: bool) -> Self {
        Check { name: name.into(), ok }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.ok).map(|c| c.name.as_str()).collect()
    }
}

/// Parabolic data for `P` a subset of the simple roots: the root subsystem,
/// the four lattices presented by bases/quotients, and the finite group `K_P`
/// as an invariant-factor list.
#[derive(Debug, Clone)]
pub struct ParabolicData {
    pub p: Vec<usize>,
    /// indices into the ambient root list
    pub roots_p: Vec<usize>,
    /// basis of `X cap (P^vee)^perp` (so `X_P = X /` this)
    pub x_perp_basis: Vec<IVec>,
    /// basis of `X cap Q P` (so `X^P = X /` this)
    pub x_span_basis: Vec<IVec>,
    /// basis of `Y_P = Y cap Q P^vee`
    pub y_p_basis: Vec<IVec>,
    /// basis of `Y^P = Y cap P^perp`
    pub y_perp_basis: Vec<IVec>,
    /// invariant factors (> 1) of `K_P = T^P cap T_P`
    pub k_p: Vec<i64>,
    /// the subdatum `R^P` on the full lattices
    pub subdatum: RootDatum,
    /// the quotient datum `R_P` (when `P` is nonempty)
    pub quotient_datum: Option<RootDatum>,
}

impl ParabolicData {
    pub fn k_p_order(&self) -> i64 {
        self.k_p.iter().product()
    }
}

/// Cartan matrix of type `A_{n-1}` (size n-1).
fn cartan_a(n: usize) -> IMat {
    let r = n - 1;
    let mut c = IMat::zeros(r, r);
    for i in 0..r {
        c[(i, i)] = 2;
        if i + 1 < r {
            c[(i, i + 1)] = -1;
            c[(i + 1, i)] = -1;
        }
    }
    c
}

/// Construct a built-in family member.
pub fn build_family(family: Family, n: usize) -> Result<RootDatum> {
    let mut d = match family {
        Family::AWeight => {
            if n < 2 {
                return Err(HkError::UnsupportedFamily(
                    "A_weight requires n >= 2".into(),
                ));
            }
            let r = n - 1;
            let c = cartan_a(n);
            // X basis: fundamental weights; Y basis: simple coroots; pairing = id
            // simple root i has coordinates = column i of the Cartan matrix
            let simple_roots: Vec<IVec> = (0..r).map(|i| c.col(i)).collect();
            let simple_coroots: Vec<IVec> = (0..r).map(|i| unit(r, i)).collect();
            let mut d = RootDatum::new(IMat::identity(r), simple_roots, simple_coroots)?;
            d.family = Some(FamilyInfo {
                family,
                n,
                class_labels: Some(ClassLabelKind::SymmetricGroup(n)),
            });
            d
        }
        Family::ARoot => {
            if n < 2 {
                return Err(HkError::UnsupportedFamily("A_root requires n >= 2".into()));
            }
            let r = n - 1;
            let c = cartan_a(n);
            // X basis: simple roots; Y basis: fundamental coweights; pairing = id
            let simple_roots: Vec<IVec> = (0..r).map(|i| unit(r, i)).collect();
            let simple_coroots: Vec<IVec> = (0..r).map(|i| c.col(i)).collect();
            let mut d = RootDatum::new(IMat::identity(r), simple_roots, simple_coroots)?;
            d.family = Some(FamilyInfo {
                family,
                n,
                class_labels: Some(ClassLabelKind::SymmetricGroup(n)),
            });
            d
        }
        Family::Gl => {
            if n < 1 {
                return Err(HkError::UnsupportedFamily("GL requires n >= 1".into()));
            }
            let mut simple_roots = vec![];
            for i in 0..n.saturating_sub(1) {
                let mut v = vec![0; n];
                v[i] = 1;
                v[i + 1] = -1;
                simple_roots.push(v);
            }
            let simple_coroots = simple_roots.clone();
            let mut d = RootDatum::new(IMat::identity(n), simple_roots, simple_coroots)?;
            d.family = Some(FamilyInfo {
                family,
                n,
                class_labels: Some(ClassLabelKind::SymmetricGroup(n)),
            });
            d
        }
        Family::BRoot => {
            if n < 2 {
                return Err(HkError::UnsupportedFamily("B_root requires n >= 2".into()));
            }
            let mut simple_roots = vec![];
            let mut simple_coroots = vec![];
            for i in 0..n - 1 {
                let mut v = vec![0; n];
                v[i] = 1;
                v[i + 1] = -1;
                simple_roots.push(v.clone());
                simple_coroots.push(v);
            }
            let mut short = vec![0; n];
            short[n - 1] = 1;
            simple_roots.push(short.clone());
            simple_coroots.push(scale2(&short));
            let mut d = RootDatum::new(IMat::identity(n), simple_roots, simple_coroots)?;
            d.family = Some(FamilyInfo {
                family,
                n,
                class_labels: Some(ClassLabelKind::SignedPermutations(n)),
            });
            d
        }
        Family::B2Weight => {
            if n != 2 {
                return Err(HkError::UnsupportedFamily("B2_weight is fixed at n = 2".into()));
            }
            let simple_roots = vec![vec![2, 0], vec![-1, 1]];
            let simple_coroots = vec![vec![1, 0], vec![-1, 1]];
            let mut d = RootDatum::new(IMat::identity(2), simple_roots, simple_coroots)?;
            d.family = Some(FamilyInfo {
                family,
                n: 2,
                class_labels: Some(ClassLabelKind::SignedPermutations(2)),
            });
            d
        }
    };
    debug_assert!(d.validate().passed());
    d.family.as_mut().unwrap().n = n;
    Ok(d)
}

fn scale2(v: &IVec) -> IVec {
    v.iter().map(|c| 2 * c).collect()
}

/// Parse shorthand family strings: `"A2~"`, `"A2"`, `"GL3"`, `"B3"`, `"B2~"`.
pub fn parse_family(s: &str) -> Result<RootDatum> {
    let t = s.trim();
    let bad = || HkError::UnsupportedFamily(format!("unrecognized family string '{}'", t));
    if let Some(rest) = t.strip_prefix("GL") {
        let n: usize = rest.parse().map_err(|_| bad())?;
        return build_family(Family::Gl, n);
    }
    if let Some(rest) = t.strip_prefix('A') {
        if let Some(num) = rest.strip_suffix('~') {
            let k: usize = num.parse().map_err(|_| bad())?;
            return build_family(Family::AWeight, k + 1);
        }
        let k: usize = rest.parse().map_err(|_| bad())?;
        return build_family(Family::ARoot, k + 1);
    }
    if let Some(rest) = t.strip_prefix('B') {
        if let Some(num) = rest.strip_suffix('~') {
            let k: usize = num.parse().map_err(|_| bad())?;
            if k != 2 {
                return Err(HkError::UnsupportedFamily(
                    "only the B2 weight lattice is built in".into(),
                ));
            }
            return build_family(Family::B2Weight, 2);
        }
        let k: usize = rest.parse().map_err(|_| bad())?;
        return build_family(Family::BRoot, k);
    }
    Err(bad())
}

/// JSON schema for custom data:
/// `{rank, pairing: [[int]], simple_roots: [[int]], simple_coroots: [[int]]}`.
#[derive(Debug, Deserialize)]
pub struct DatumJson {
    pub rank: usize,
    pub pairing: Vec<Vec<i64>>,
    pub simple_roots: Vec<Vec<i64>>,
    pub simple_coroots: Vec<Vec<i64>>,
}

pub fn from_json(v: &serde_json::Value) -> Result<RootDatum> {
    let dj: DatumJson =
        serde_json::from_value(v.clone()).map_err(|e| HkError::Parse(e.to_string()))?;
    if dj.pairing.len() != dj.rank || dj.pairing.iter().any(|r| r.len() != dj.rank) {
        return Err(HkError::Invalid("pairing must be rank x rank".into()));
    }
    RootDatum::new(
        IMat::from_rows(&dj.pairing),
        dj.simple_roots,
        dj.simple_coroots,
    )
}

fn mat_rows(m: &IMat) -> Vec<IVec> {
    (0..m.rows).map(|i| m.row(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a1_weight_matches_reference() {
        let d = build_family(Family::AWeight, 2).unwrap();
        assert_eq!(d.rank(), 1);
        assert_eq!(d.roots(), &[vec![-2], vec![2]]);
        assert_eq!(d.coroots(), &[vec![-1], vec![1]]);
        assert!(d.validate().passed());
        // alpha^vee = 1 is odd: R1 = R0
        assert!(!d.is_doubled(0));
        assert_eq!(d.long_roots().len(), 2);
    }

    #[test]
    fn a1_root_has_doubled_root() {
        let d = build_family(Family::ARoot, 2).unwrap();
        assert_eq!(d.roots(), &[vec![-1], vec![1]]);
        assert_eq!(d.coroots(), &[vec![-2], vec![2]]);
        // alpha^vee = 2 in 2Y: R_nr strictly contains R0, R1 = {+-2alpha}
        assert!(d.is_doubled(0));
        let r1 = d.long_roots();
        assert_eq!(r1.len(), 2);
        assert!(r1.iter().all(|lr| lr.doubled));
        assert_eq!(d.long_root_vector(&r1[1]), vec![2]);
    }

    #[test]
    fn gl2_matches_reference() {
        let d = build_family(Family::Gl, 2).unwrap();
        assert_eq!(d.roots(), &[vec![-1, 1], vec![1, -1]]);
        assert!(d.validate().passed());
        assert!(!d.is_semisimple());
    }

    #[test]
    fn b2_weight_matches_reference() {
        let d = build_family(Family::B2Weight, 2).unwrap();
        assert_eq!(d.roots().len(), 8);
        assert!(d.root_index(&[2, 0]).is_some());
        assert!(d.root_index(&[1, 1]).is_some());
        assert!(d.root_index(&[0, 2]).is_some());
        assert!(d.root_index(&[-1, 1]).is_some());
        assert!(d.validate().passed());
        // weight lattice: no doubled roots, R1 = R0
        assert_eq!(d.long_roots().len(), 8);
    }

    #[test]
    fn validate_flags_bad_coroot() {
        // A1 weight with alpha^vee replaced by 2: <alpha, alpha^vee> = 4
        let r = RootDatum::new(IMat::identity(1), vec![vec![2]], vec![vec![2]]);
        assert!(r.is_err());
    }

    #[test]
    fn dual_of_a1_weight_is_a1_root() {
        let d = build_family(Family::AWeight, 2).unwrap().dual();
        let e = build_family(Family::ARoot, 2).unwrap();
        assert_eq!(d.roots(), e.roots());
        assert_eq!(d.coroots(), e.coroots());
        assert_eq!(d.pairing(), e.pairing());
    }

    #[test]
    fn dual_involution_and_gl_selfdual() {
        for (fam, n) in [
            (Family::AWeight, 3),
            (Family::ARoot, 3),
            (Family::Gl, 3),
            (Family::BRoot, 2),
            (Family::B2Weight, 2),
        ] {
            let d = build_family(fam, n).unwrap();
            let dd = d.dual().dual();
            assert_eq!(d.roots(), dd.roots());
            assert_eq!(d.coroots(), dd.coroots());
            assert_eq!(d.pairing(), dd.pairing());
        }
        let gl = build_family(Family::Gl, 3).unwrap();
        let gld = gl.dual();
        assert_eq!(gl.roots(), gld.roots());
        assert_eq!(gl.pairing(), gld.pairing());
    }

    #[test]
    fn product_with_trivial_extension() {
        let d = build_family(Family::AWeight, 2).unwrap().times_z();
        assert_eq!(d.rank(), 2);
        assert_eq!(d.roots().len(), 2);
        assert!(d.validate().passed());
    }

    #[test]
    fn parabolic_gl2_full() {
        let d = build_family(Family::Gl, 2).unwrap();
        let p = d.parabolic(&[0]).unwrap();
        assert_eq!(p.k_p, vec![2]);
        assert_eq!(p.roots_p.len(), 2);
        let q = p.quotient_datum.as_ref().unwrap();
        assert!(q.validate().passed());
        assert_eq!(q.rank(), 1);
    }

    #[test]
    fn parabolic_empty() {
        let d = build_family(Family::B2Weight, 2).unwrap();
        let p = d.parabolic(&[]).unwrap();
        assert!(p.k_p.is_empty());
        assert!(p.roots_p.is_empty());
        assert_eq!(p.x_perp_basis.len(), 2); // T^P = T
    }

    #[test]
    fn parabolic_b2_weight_alpha2() {
        let d = build_family(Family::B2Weight, 2).unwrap();
        let p = d.parabolic(&[1]).unwrap();
        assert_eq!(p.k_p, vec![2]);
    }

    #[test]
    fn parabolic_nesting_and_kp() {
        let d = build_family(Family::BRoot, 3).unwrap();
        let p01 = d.parabolic(&[0, 1]).unwrap();
        let p0 = d.parabolic(&[0]).unwrap();
        for idx in &p0.roots_p {
            assert!(p01.roots_p.contains(idx));
        }
    }

    #[test]
    fn parse_family_strings() {
        assert!(parse_family("A1~").is_ok());
        assert!(parse_family("A2").is_ok());
        assert!(parse_family("GL3").is_ok());
        assert!(parse_family("B2~").is_ok());
        assert!(parse_family("B3").is_ok());
        assert!(parse_family("Q7").is_err());
    }

    #[test]
    fn json_roundtrip() {
        let d = build_family(Family::Gl, 2).unwrap();
        let j = serde_json::json!({
            "rank": 2,
            "pairing": [[1,0],[0,1]],
            "simple_roots": [[1,-1]],
            "simple_coroots": [[1,-1]],
        });
        let e = from_json(&j).unwrap();
        assert_eq!(d.roots(), e.roots());
    }
}
