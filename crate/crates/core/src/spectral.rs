//! Symbolic torus points, c-function factor bookkeeping, residual coset
//! classification, tempered forms, label genericity classes and the scaling
//! map on torus points.
//!
//! A point of `T = Hom(X, C^x)` is stored exactly as a root-of-unity part
//! (rational angles) together with a label-exponent part (rational powers of
//! the label variables `q_i`). Under the genericity convention the labels are
//! multiplicatively independent positive reals, so equality of values is
//! decidable; at exact numeric labels the comparison collapses to rational
//! arithmetic.

use crate::error::{HkError, Result};
use crate::hecke::LabelFunction;
use crate::intmat::{rat_int, smith_normal_form, IMat, IVec, QMat, Rat};
use crate::root_datum::{saturation_basis, LongRoot, RootDatum};
use crate::weyl::{invert_unimodular, WeylData};
use num::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

/// Labels are either independent symbols or exact positive rationals
/// (values of the base variables `q_i`).
#[derive(Debug, Clone, PartialEq)]
pub enum LabelRegime {
    Generic,
    Numeric(Vec<Rat>),
}

impl LabelRegime {
    pub fn numeric(vals: Vec<Rat>) -> Result<LabelRegime> {
        for v in &vals {
            if !v.is_positive() {
                return Err(HkError::Invalid("labels must be positive".into()));
            }
        }
        Ok(LabelRegime::Numeric(vals))
    }

    /// Is `prod q_i^{g_i} = 1` under this regime?
    fn exps_trivial(&self, g: &[Rat]) -> bool {
        match self {
            LabelRegime::Generic => g.iter().all(|x| x.is_zero()),
            LabelRegime::Numeric(q) => {
                // common denominator d: the product is 1 iff prod q_i^{d g_i} = 1
                let mut d = num::BigInt::one();
                for x in g {
                    d = num::integer::lcm(d, x.denom().clone());
                }
                let mut acc = Rat::one();
                for (x, qi) in g.iter().zip(q) {
                    let e = (x * Rat::from(d.clone())).to_integer();
                    let e: i64 = i64::try_from(&e).expect("exponent overflow");
                    acc *= pow_rat(qi, e);
                }
                acc.is_one()
            }
        }
    }
}

fn pow_rat(v: &Rat, k: i64) -> Rat {
    let base = if k >= 0 { v.clone() } else { v.recip() };
    let mut acc = Rat::one();
    for _ in 0..k.unsigned_abs() {
        acc *= &base;
    }
    acc
}

fn norm_angle(a: &Rat) -> Rat {
    let f = a.floor();
    a - f
}

/// Value of a character at a lattice point: `e^{2 pi i angle} * prod q_i^{e_i}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CharValue {
    pub angle: Rat,
    pub exps: Vec<Rat>,
}

impl CharValue {
    pub fn one(nvars: usize) -> Self {
        CharValue { angle: Rat::zero(), exps: vec![Rat::zero(); nvars] }
    }

    pub fn mul(&self, other: &CharValue) -> CharValue {
        CharValue {
            angle: norm_angle(&(&self.angle + &other.angle)),
            exps: self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn inv(&self) -> CharValue {
        CharValue {
            angle: norm_angle(&(-self.angle.clone())),
            exps: self.exps.iter().map(|a| -a.clone()).collect(),
        }
    }

    pub fn is_one(&self, regime: &LabelRegime) -> bool {
        norm_angle(&self.angle).is_zero() && regime.exps_trivial(&self.exps)
    }

    pub fn equals(&self, other: &CharValue, regime: &LabelRegime) -> bool {
        self.mul(&other.inv()).is_one(regime)
    }

    /// Absolute value is 1, i.e. the exponent part vanishes under the regime.
    pub fn is_unitary(&self, regime: &LabelRegime) -> bool {
        regime.exps_trivial(&self.exps)
    }

    /// Numeric complex value at float labels `q_i = qf[i]`.
    pub fn to_complex(&self, qf: &[f64]) -> (f64, f64) {
        let mut r = 1.0f64;
        for (e, q) in self.exps.iter().zip(qf) {
            r *= q.powf(e.to_f64().unwrap_or(f64::NAN));
        }
        let theta = 2.0 * std::f64::consts::PI * self.angle.to_f64().unwrap_or(f64::NAN);
        (r * theta.cos(), r * theta.sin())
    }
}

/// Group homomorphism `X -> C^x` with exact unitary and label-exponent parts,
/// stored on the standard basis of `X`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TorusPoint {
    pub angles: Vec<Rat>,
    pub exps: Vec<Vec<Rat>>,
}

impl TorusPoint {
    pub fn identity(rank: usize, nvars: usize) -> Self {
        TorusPoint {
            angles: vec![Rat::zero(); rank],
            exps: vec![vec![Rat::zero(); nvars]; rank],
        }
    }

    pub fn rank(&self) -> usize {
        self.angles.len()
    }

    pub fn nvars(&self) -> usize {
        self.exps.first().map(|e| e.len()).unwrap_or(0)
    }

    /// Evaluate at a lattice vector.
    pub fn eval(&self, x: &[i64]) -> CharValue {
        let mut angle = Rat::zero();
        let mut exps = vec![Rat::zero(); self.nvars()];
        for (j, &c) in x.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let cr = rat_int(c);
            angle += &self.angles[j] * &cr;
            for (k, e) in self.exps[j].iter().enumerate() {
                exps[k] += e * &cr;
            }
        }
        CharValue { angle: norm_angle(&angle), exps }
    }

    /// The action `(w t)(x) = t(w^{-1} x)`.
    pub fn apply(&self, w: &IMat) -> TorusPoint {
        let winv = invert_unimodular(w);
        let rank = self.rank();
        let mut angles = vec![Rat::zero(); rank];
        let mut exps = vec![vec![Rat::zero(); self.nvars()]; rank];
        for j in 0..rank {
            let mut e = vec![0i64; rank];
            e[j] = 1;
            let v = winv.mul_vec(&e);
            let val = self.eval(&v);
            angles[j] = val.angle;
            exps[j] = val.exps;
        }
        TorusPoint { angles, exps }
    }

    /// Scaling map: unitary part unchanged, exponent part multiplied by eps.
    pub fn scale(&self, eps: &Rat) -> TorusPoint {
        TorusPoint {
            angles: self.angles.clone(),
            exps: self
                .exps
                .iter()
                .map(|row| row.iter().map(|e| e * eps).collect())
                .collect(),
        }
    }

    /// `t |t|^{-1}`: strip the label-exponent part.
    pub fn unitary_part(&self) -> TorusPoint {
        TorusPoint {
            angles: self.angles.clone(),
            exps: vec![vec![Rat::zero(); self.nvars()]; self.rank()],
        }
    }

    pub fn equals(&self, other: &TorusPoint, regime: &LabelRegime) -> bool {
        let rank = self.rank();
        for j in 0..rank {
            let mut e = vec![0i64; rank];
            e[j] = 1;
            if !self.eval(&e).equals(&other.eval(&e), regime) {
                return false;
            }
        }
        true
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "angles": self.angles.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
            "label_exponents": self
                .exps
                .iter()
                .map(|row| row.iter().map(|e| e.to_string()).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }
}

/// Zero/pole pattern of the c-factor of a long root at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CFactorStatus {
    pub numerator_zero: (bool, bool),
    pub denominator_zero: bool,
}

/// Spectral context: the Weyl data, labels and the comparison regime.
pub struct Spectral<'a> {
    pub weyl: &'a WeylData,
    pub labels: &'a LabelFunction,
    pub regime: LabelRegime,
}

/// One residual coset: its constant root set, the saturated lattice where the
/// base point lives, and a representative point of `T` (extended by 1 on a
/// complement of that lattice).
#[derive(Debug, Clone)]
pub struct ResidualCoset {
    /// vectors in X of the long roots constant on the coset direction
    pub r_l: Vec<IVec>,
    /// saturated basis of `Q R_L cap X`
    pub lattice: Vec<IVec>,
    pub dim: usize,
    pub rp: Vec<IVec>,
    pub rz: Vec<IVec>,
    pub point: TorusPoint,
}

impl ResidualCoset {
    /// Values of the base point on the canonical lattice basis.
    fn base_values(&self) -> Vec<CharValue> {
        self.lattice.iter().map(|b| self.point.eval(b)).collect()
    }

    /// Unitary slice of the base values on the lattice (the angles of `r_L`).
    pub fn tempered_point(&self) -> TorusPoint {
        self.point.unitary_part()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dim": self.dim,
            "base_point": self.point.to_json(),
            "tempered_form": self.tempered_point().to_json(),
            "lattice": self.lattice,
            "r_p": self.rp,
            "r_z": self.rz,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ResidualOrbit {
    pub dim: usize,
    /// number of distinct cosets in the orbit
    pub size: usize,
    /// number of translates `w(L)` counted with multiplicity `|W0|`; for
    /// orbits with trivial setwise stabilizer this equals `size`
    pub translates: usize,
    pub representative: ResidualCoset,
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub orbits: Vec<ResidualOrbit>,
    /// whether the search was the exhaustive codimension-k solver
    pub search_complete: bool,
}

impl ResidualReport {
    pub fn points(&self) -> (usize, usize) {
        let orbits: Vec<_> = self.orbits.iter().filter(|o| o.dim == 0).collect();
        (orbits.iter().map(|o| o.size).sum(), orbits.len())
    }

    pub fn cosets_of_dim(&self, d: usize) -> (usize, usize) {
        let orbits: Vec<_> = self.orbits.iter().filter(|o| o.dim == d).collect();
        (orbits.iter().map(|o| o.size).sum(), orbits.len())
    }

    /// Translate-weighted census: counts `w(L)` over all of W0 per orbit.
    pub fn translates_of_dim(&self, d: usize) -> (usize, usize) {
        let orbits: Vec<_> = self.orbits.iter().filter(|o| o.dim == d).collect();
        (orbits.iter().map(|o| o.translates).sum(), orbits.len())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "search_complete_under_genericity_convention": self.search_complete,
            "orbits": self.orbits.iter().map(|o| {
                serde_json::json!({
                    "dim": o.dim,
                    "size": o.size,
                    "w0_translates": o.translates,
                    "representative": o.representative.to_json(),
                })
            }).collect::<Vec<_>>(),
        })
    }
}

/// A single vanishing condition `t(v) = zeta * prod q^w`.
#[derive(Debug, Clone)]
struct Condition {
    v: IVec,
    angle: Rat,
    exps: Vec<Rat>,
}

impl<'a> Spectral<'a> {
    pub fn new(weyl: &'a WeylData, labels: &'a LabelFunction, regime: LabelRegime) -> Self {
        Spectral { weyl, labels, regime }
    }

    fn datum(&self) -> &RootDatum {
        &self.weyl.datum
    }

    /// Zero pattern of the c-factor of the long root `lr` at `t`.
    pub fn c_factor_status(&self, lr: &LongRoot, t: &TorusPoint) -> CFactorStatus {
        let datum = self.datum();
        let (qav, q2av) = self.labels.long_root_label_exponents(lr);
        let a = datum.long_root_vector(lr);
        let t_a = t.eval(&a);
        let denominator_zero = t_a.is_one(&self.regime);
        let numerator_zero = if !lr.doubled {
            // merged factor (1 - q_{a^vee}^{-1} theta_{-a}): zero iff t(a) = q^{-1}
            let target = CharValue {
                angle: Rat::zero(),
                exps: qav.iter().map(|e| -e.clone()).collect(),
            };
            (t_a.equals(&target, &self.regime), false)
        } else {
            let half = &datum.roots()[lr.root_index];
            let t_h = t.eval(half);
            // (1 + q^{-1/2} theta_{-a/2}) = 0  iff  t(a/2) = -q_{a^vee}^{-1/2}
            let m1 = CharValue {
                angle: Rat::new(1.into(), 2.into()),
                exps: qav.iter().map(|e| -e / rat_int(2)).collect(),
            };
            // (1 - q^{-1/2} q_{2a^vee}^{-1} theta_{-a/2}) = 0  iff
            //   t(a/2) = q^{-1/2} q_{2a^vee}^{-1}
            let m2 = CharValue {
                angle: Rat::zero(),
                exps: qav
                    .iter()
                    .zip(&q2av)
                    .map(|(e, f)| -e / rat_int(2) - f)
                    .collect(),
            };
            (t_h.equals(&m1, &self.regime), t_h.equals(&m2, &self.regime))
        };
        CFactorStatus { numerator_zero, denominator_zero }
    }

    /// The roots of `R^p_L` and `R^z_L` over the given constant root set.
    fn pole_zero_counts(&self, r_l: &[LongRoot], t: &TorusPoint) -> (Vec<IVec>, Vec<IVec>) {
        let mut rp = vec![];
        let mut rz = vec![];
        for lr in r_l {
            let st = self.c_factor_status(lr, t);
            let v = self.datum().long_root_vector(lr);
            if st.numerator_zero.0 || st.numerator_zero.1 {
                rp.push(v.clone());
            }
            if st.denominator_zero {
                rz.push(v);
            }
        }
        (rp, rz)
    }

    /// Vanishing conditions available for the c-factors of `+-a`.
    fn conditions_for(&self, lr: &LongRoot) -> Vec<Condition> {
        let datum = self.datum();
        let (qav, q2av) = self.labels.long_root_label_exponents(lr);
        if !lr.doubled {
            let a = datum.long_root_vector(lr);
            // t(a) = q^{-1} (from c_a) and t(a) = q (from c_{-a})
            vec![
                Condition {
                    v: a.clone(),
                    angle: Rat::zero(),
                    exps: qav.iter().map(|e| -e.clone()).collect(),
                },
                Condition { v: a, angle: Rat::zero(), exps: qav.clone() },
            ]
        } else {
            let half = datum.roots()[lr.root_index].clone();
            let h = Rat::new(1.into(), 2.into());
            let half_qav: Vec<Rat> = qav.iter().map(|e| e / rat_int(2)).collect();
            vec![
                // t(a/2) = -q^{-1/2}
                Condition {
                    v: half.clone(),
                    angle: h.clone(),
                    exps: half_qav.iter().map(|e| -e.clone()).collect(),
                },
                // t(a/2) = q^{-1/2} q_{2a}^{-1}
                Condition {
                    v: half.clone(),
                    angle: Rat::zero(),
                    exps: half_qav.iter().zip(&q2av).map(|(e, f)| -e - f).collect(),
                },
                // from c_{-a}: t(a/2) = -q^{1/2}
                Condition { v: half.clone(), angle: h, exps: half_qav.clone() },
                // t(a/2) = q^{1/2} q_{2a}
                Condition {
                    v: half,
                    angle: Rat::zero(),
                    exps: half_qav.iter().zip(&q2av).map(|(e, f)| e + f).collect(),
                },
            ]
        }
    }

    /// All residual cosets, grouped into W0-orbits with lexicographically
    /// minimal representatives. Candidate generation solves the
    /// numerator-vanishing systems for every linearly independent subset of
    /// positive long roots at each codimension.
    pub fn classify_residual_cosets(&self) -> Result<ResidualReport> {
        let datum = self.datum();
        let rank = datum.rank();
        if rank > 4 {
            return Err(HkError::SizeLimit(format!(
                "exhaustive residual solver limited to rank <= 4 (got {})",
                rank
            )));
        }
        let long = datum.long_roots();
        let pos_long: Vec<&LongRoot> =
            long.iter().filter(|lr| datum.is_positive_root(lr.root_index)).collect();

        let mut found: Vec<ResidualCoset> = vec![];
        // codim 0: T itself is residual (no roots are constant on it)
        {
            let t = TorusPoint::identity(rank, self.labels.nvars());
            found.push(ResidualCoset {
                r_l: vec![],
                lattice: vec![],
                dim: rank,
                rp: vec![],
                rz: vec![],
                point: t,
            });
        }
        let max_k = rank.min(pos_long.len());
        for k in 1..=max_k {
            for subset in subsets(pos_long.len(), k) {
                let roots: Vec<&LongRoot> = subset.iter().map(|&i| pos_long[i]).collect();
                let vectors: Vec<IVec> =
                    roots.iter().map(|lr| datum.long_root_vector(lr)).collect();
                if rank_of(&vectors) != k {
                    continue;
                }
                // constant root set and its saturated lattice
                let r_l = self.span_roots(&vectors, &long);
                let span_vecs: Vec<IVec> =
                    r_l.iter().map(|lr| datum.long_root_vector(lr)).collect();
                let lattice = saturation_basis(&span_vecs, rank);
                debug_assert_eq!(lattice.len(), k);
                // condition choices
                let choices: Vec<Vec<Condition>> =
                    roots.iter().map(|lr| self.conditions_for(lr)).collect();
                let mut pick = vec![0usize; k];
                loop {
                    let conds: Vec<&Condition> =
                        (0..k).map(|i| &choices[i][pick[i]]).collect();
                    for cand in self.solve_conditions(&lattice, &conds)? {
                        let (rp, rz) = self.pole_zero_counts(&r_l, &cand);
                        if rp.len() as i64 - rz.len() as i64 == k as i64 {
                            let coset = ResidualCoset {
                                r_l: span_vecs.clone(),
                                lattice: lattice.clone(),
                                dim: rank - k,
                                rp,
                                rz,
                                point: cand,
                            };
                            if !found.iter().any(|c| self.cosets_equal(c, &coset)) {
                                found.push(coset);
                            }
                        }
                    }
                    // advance the odometer over condition choices
                    let mut i = 0;
                    loop {
                        if i == k {
                            break;
                        }
                        pick[i] += 1;
                        if pick[i] < choices[i].len() {
                            break;
                        }
                        pick[i] = 0;
                        i += 1;
                    }
                    if i == k {
                        break;
                    }
                }
            }
        }
        // group into W0-orbits
        let mut orbits: Vec<ResidualOrbit> = vec![];
        let mut used = vec![false; found.len()];
        for i in 0..found.len() {
            if used[i] {
                continue;
            }
            let mut members = vec![i];
            used[i] = true;
            for m in &self.weyl.w0.elems {
                let img = self.apply_to_coset(&found[i], m);
                for (j, other) in found.iter().enumerate() {
                    if !used[j] && self.cosets_equal(&img, other) {
                        used[j] = true;
                        members.push(j);
                    }
                }
            }
            // representative: lexicographically minimal key
            let rep = members
                .iter()
                .min_by(|&&a, &&b| coset_key(&found[a]).cmp(&coset_key(&found[b])))
                .unwrap();
            orbits.push(ResidualOrbit {
                dim: found[*rep].dim,
                size: members.len(),
                translates: self.weyl.w0.order(),
                representative: found[*rep].clone(),
            });
        }
        orbits.sort_by(|a, b| {
            (a.dim, coset_key(&a.representative)).cmp(&(b.dim, coset_key(&b.representative)))
        });
        Ok(ResidualReport { orbits, search_complete: true })
    }

    fn span_roots(&self, span: &[IVec], long: &[LongRoot]) -> Vec<LongRoot> {
        let datum = self.datum();
        if span.is_empty() {
            return vec![];
        }
        long.iter()
            .filter(|lr| in_col_span(span, &datum.long_root_vector(lr)))
            .cloned()
            .collect()
    }

    /// Solve `t(v_i) = zeta_i prod q^{w_i}` on the saturated lattice with the
    /// base point extended by 1 on a complement; returns all solutions.
    fn solve_conditions(
        &self,
        lattice: &[IVec],
        conds: &[&Condition],
    ) -> Result<Vec<TorusPoint>> {
        let nvars = self.labels.nvars();
        let k = lattice.len();
        // coordinates of the condition vectors in the lattice basis
        let bq = QMat::from_imat(&IMat::from_cols(&lattice.to_vec()));
        let mut c = IMat::zeros(k, k);
        for (i, cond) in conds.iter().enumerate() {
            let coords = lattice_coords(&bq, &cond.v)
                .ok_or_else(|| HkError::Invalid("condition vector outside lattice".into()))?;
            for j in 0..k {
                c[(i, j)] = coords[j];
            }
        }
        let cq = QMat::from_imat(&c);
        if cq.det().is_zero() {
            return Ok(vec![]);
        }
        // exponent part: solve C * E = W exactly
        let mut e_rows: Vec<Vec<Rat>> = vec![vec![Rat::zero(); nvars]; k];
        for col in 0..nvars {
            let rhs: Vec<Rat> = conds.iter().map(|cd| cd.exps[col].clone()).collect();
            let sol = cq.solve(&rhs).expect("invertible");
            for (j, v) in sol.into_iter().enumerate() {
                e_rows[j][col] = v;
            }
        }
        // angle part: C u = a (mod Z^k): all solutions via the SNF of C
        let s = smith_normal_form(&c);
        let diag = s.diag();
        let u_imat = s.u.to_imat();
        let ua: Vec<Rat> = (0..k)
            .map(|i| {
                let mut acc = Rat::zero();
                for j in 0..k {
                    acc += rat_int(u_imat[(i, j)]) * conds[j].angle.clone();
                }
                acc
            })
            .collect();
        let mut angle_sets: Vec<Vec<Rat>> = vec![vec![]];
        for i in 0..k {
            let d = diag[i];
            assert!(d != 0);
            let mut next = vec![];
            for base in &angle_sets {
                for j in 0..d.abs() {
                    let w = (&ua[i] + rat_int(j)) / rat_int(d);
                    let mut row = base.clone();
                    row.push(w);
                    next.push(row);
                }
            }
            angle_sets = next;
        }
        let v_imat = s.v.to_imat();
        let mut out = vec![];
        for wvec in angle_sets {
            // u = V w
            let u: Vec<Rat> = (0..k)
                .map(|i| {
                    let mut acc = Rat::zero();
                    for j in 0..k {
                        acc += rat_int(v_imat[(i, j)]) * wvec[j].clone();
                    }
                    norm_angle(&acc)
                })
                .collect();
            out.push(self.extend_point(lattice, &u, &e_rows)?);
        }
        Ok(out)
    }

    /// Extend values on a saturated sublattice to a point of `T` (value 1 on
    /// a complement).
    fn extend_point(
        &self,
        lattice: &[IVec],
        angles: &[Rat],
        exps: &[Vec<Rat>],
    ) -> Result<TorusPoint> {
        let rank = self.datum().rank();
        let nvars = self.labels.nvars();
        if lattice.is_empty() {
            return Ok(TorusPoint::identity(rank, nvars));
        }
        let full = crate::intmat::complete_basis(&IMat::from_cols(&lattice.to_vec()));
        let fullq = QMat::from_imat(&full);
        let k = lattice.len();
        // values on the columns of `full`: first k columns are in the lattice
        let bq = QMat::from_imat(&IMat::from_cols(&lattice.to_vec()));
        let mut col_angle = vec![Rat::zero(); rank];
        let mut col_exps = vec![vec![Rat::zero(); nvars]; rank];
        for j in 0..k {
            let coords = lattice_coords(&bq, &full.col(j))
                .ok_or_else(|| HkError::Invalid("completion column outside lattice".into()))?;
            for (i, &ci) in coords.iter().enumerate() {
                let cr = rat_int(ci);
                col_angle[j] += &angles[i] * &cr;
                for v in 0..nvars {
                    col_exps[j][v] += &exps[i][v] * &cr;
                }
            }
        }
        // t(e_i): solve full * gamma = e_i (gamma integral; full unimodular)
        let mut t = TorusPoint::identity(rank, nvars);
        for i in 0..rank {
            let mut e = vec![Rat::zero(); rank];
            e[i] = Rat::one();
            let gamma = fullq.solve(&e).expect("unimodular");
            let mut angle = Rat::zero();
            let mut ex = vec![Rat::zero(); nvars];
            for (j, g) in gamma.iter().enumerate() {
                assert!(g.is_integer());
                angle += &col_angle[j] * g;
                for v in 0..nvars {
                    ex[v] += &col_exps[j][v] * g;
                }
            }
            t.angles[i] = norm_angle(&angle);
            t.exps[i] = ex;
        }
        Ok(t)
    }

    fn cosets_equal(&self, a: &ResidualCoset, b: &ResidualCoset) -> bool {
        if a.dim != b.dim {
            return false;
        }
        let mut ra = a.r_l.clone();
        let mut rb = b.r_l.clone();
        ra.sort();
        rb.sort();
        if ra != rb {
            return false;
        }
        // same coset iff the base points agree on the lattice
        a.lattice.iter().all(|v| a.point.eval(v).equals(&b.point.eval(v), &self.regime))
    }

    fn apply_to_coset(&self, c: &ResidualCoset, w: &IMat) -> ResidualCoset {
        let rank = self.datum().rank();
        let r_l: Vec<IVec> = c.r_l.iter().map(|v| w.mul_vec(v)).collect();
        let lattice = if r_l.is_empty() { vec![] } else { saturation_basis(&r_l, rank) };
        let point = c.point.apply(w);
        let rp = c.rp.iter().map(|v| w.mul_vec(v)).collect();
        let rz = c.rz.iter().map(|v| w.mul_vec(v)).collect();
        ResidualCoset { r_l, lattice, dim: c.dim, rp, rz, point }
    }

    /// Radial character of the tempered form `r_L T_u^L`: the label-exponent
    /// rows of `|r_L|` on the standard basis, determined by the base values on
    /// the lattice together with triviality on `(R_L^vee)^perp cap X`.
    pub fn tempered_radial_rows(&self, c: &ResidualCoset) -> Vec<Vec<Rat>> {
        let datum = self.datum();
        let rank = datum.rank();
        let nvars = self.labels.nvars();
        if c.lattice.is_empty() {
            return vec![vec![Rat::zero(); nvars]; rank];
        }
        // coroot-perp lattice of the constant root set
        let mut coroot_rows: Vec<IVec> = vec![];
        for v in &c.r_l {
            // find the coroot: v is alpha or 2 alpha for a root index
            if let Some(idx) = datum.root_index(v) {
                coroot_rows.push(datum.pairing().mul_vec(&datum.coroots()[idx]));
            } else {
                let half: IVec = v.iter().map(|x| x / 2).collect();
                let idx = datum.root_index(&half).expect("long root over a root");
                coroot_rows.push(datum.pairing().mul_vec(&datum.coroots()[idx]));
            }
        }
        let perp = crate::intmat::kernel_basis(&IMat::from_rows(&coroot_rows));
        // solve: rows of |r_L| satisfy <row over vars> paired with lattice
        // vectors = base exps, and = 0 on the perp vectors
        let mut vecs: Vec<IVec> = c.lattice.clone();
        let mut targets: Vec<Vec<Rat>> = c.lattice.iter().map(|v| c.point.eval(v).exps).collect();
        for p in perp {
            vecs.push(p.clone());
            targets.push(vec![Rat::zero(); nvars]);
        }
        // the stacked vectors span X (x) Q; solve for each variable column
        let m = QMat::from_imat(&IMat::from_rows(&vecs));
        let mut rows = vec![vec![Rat::zero(); nvars]; rank];
        for var in 0..nvars {
            // least squares: M^T M x = M^T t
            let mut gram = QMat::zeros(rank, rank);
            for i in 0..rank {
                for j in 0..rank {
                    gram[(i, j)] = (0..m.rows).map(|r| &m[(r, i)] * &m[(r, j)]).sum();
                }
            }
            let rhs: Vec<Rat> = (0..rank)
                .map(|i| (0..m.rows).map(|r| &m[(r, i)] * &targets[r][var]).sum())
                .collect();
            let sol = gram.solve(&rhs).expect("stacked lattice spans");
            for i in 0..rank {
                rows[i][var] = sol[i].clone();
            }
        }
        rows
    }

    /// Do the tempered forms `r_L T_u^L` of two cosets intersect? The radial
    /// characters must agree and the combined angle constraints must be
    /// solvable by a unitary direction.
    pub fn tempered_forms_intersect(&self, a: &ResidualCoset, b: &ResidualCoset) -> bool {
        // radial characters of |r_L| must match under the regime
        let ra = self.tempered_radial_rows(a);
        let rb = self.tempered_radial_rows(b);
        for (x, y) in ra.iter().zip(&rb) {
            let diff: Vec<Rat> = x.iter().zip(y).map(|(p, q)| p - q).collect();
            if !self.regime.exps_trivial(&diff) {
                return false;
            }
        }
        // unitary solvability of the combined angle constraints
        let mut rows: Vec<IVec> = vec![];
        let mut targets: Vec<Rat> = vec![];
        for c in [a, b] {
            for v in &c.lattice {
                rows.push(v.clone());
                targets.push(c.point.eval(v).angle);
            }
        }
        if rows.is_empty() {
            return true;
        }
        let m = IMat::from_rows(&rows);
        let s = smith_normal_form(&m);
        let diag = s.diag();
        let u = s.u.to_imat();
        for i in 0..rows.len() {
            let d = if i < diag.len() { diag[i] } else { 0 };
            if d != 0 {
                continue;
            }
            let mut acc = Rat::zero();
            for j in 0..rows.len() {
                acc += rat_int(u[(i, j)]) * targets[j].clone();
            }
            if !norm_angle(&acc).is_zero() {
                return false;
            }
        }
        true
    }

    /// Whether the W0-orbit of every reported coset stays residual and inside
    /// the report.
    pub fn verify_w0_stability(&self, report: &ResidualReport) -> bool {
        for orbit in &report.orbits {
            for m in &self.weyl.w0.elems {
                let img = self.apply_to_coset(&orbit.representative, m);
                let (rp, rz) = self.pole_zero_counts(
                    &self.span_roots(&img.r_l, &self.datum().long_roots()),
                    &img.point,
                );
                if rp.len() as i64 - rz.len() as i64
                    != (self.datum().rank() - img.dim) as i64
                {
                    return false;
                }
                let hit = report.orbits.iter().any(|o| {
                    o.dim == img.dim && {
                        let mut found = false;
                        for m2 in &self.weyl.w0.elems {
                            if self.cosets_equal(&self.apply_to_coset(&o.representative, m2), &img)
                            {
                                found = true;
                                break;
                            }
                        }
                        found
                    }
                });
                if !hit {
                    return false;
                }
            }
        }
        true
    }
}

fn coset_key(c: &ResidualCoset) -> (Vec<IVec>, Vec<(String, Vec<String>)>) {
    let mut r = c.r_l.clone();
    r.sort();
    let vals = c
        .base_values()
        .into_iter()
        .map(|v| {
            (
                v.angle.to_string(),
                v.exps.iter().map(|e| e.to_string()).collect(),
            )
        })
        .collect();
    (r, vals)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![];
    let mut cur = vec![];
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn rank_of(vecs: &[IVec]) -> usize {
    if vecs.is_empty() {
        return 0;
    }
    let m = IMat::from_rows(&vecs.to_vec());
    smith_normal_form(&m).rank()
}

fn in_col_span(cols: &[IVec], v: &[i64]) -> bool {
    // rank test: v lies in the span iff adjoining it does not raise the rank
    let base = rank_of(cols);
    let mut ext = cols.to_vec();
    ext.push(v.to_vec());
    rank_of(&ext) == base
}

fn lattice_coords(basis: &QMat, v: &[i64]) -> Option<Vec<i64>> {
    let k = basis.cols;
    let mut gram = QMat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gram[(i, j)] = (0..basis.rows).map(|r| &basis[(r, i)] * &basis[(r, j)]).sum();
        }
    }
    let rhs: Vec<Rat> = (0..k)
        .map(|i| (0..basis.rows).map(|r| &basis[(r, i)] * &rat_int(v[r])).sum())
        .collect();
    let sol = gram.solve(&rhs)?;
    for r in 0..basis.rows {
        let val: Rat = (0..k).map(|i| &basis[(r, i)] * &sol[i]).sum();
        if val != rat_int(v[r]) {
            return None;
        }
    }
    let mut out = vec![];
    for s in sol {
        if !s.is_integer() {
            return None;
        }
        out.push(i64::try_from(&s.to_integer()).ok()?);
    }
    Some(out)
}

/// Label genericity classes for the rank <= 2 built-in families, detected by
/// exact collision tests among the residual candidate formulas.
pub fn genericity_class(datum: &RootDatum, q: &[Rat]) -> Result<String> {
    use crate::root_datum::Family;
    let fam = datum.family.as_ref().ok_or_else(|| {
        HkError::UnsupportedFamily("genericity classes need a built-in family".into())
    })?;
    let one = Rat::one();
    match (fam.family, fam.n) {
        (Family::AWeight, 2) | (Family::Gl, 2) | (Family::AWeight, 3) | (Family::ARoot, 3) => {
            if q.len() != 1 {
                return Err(HkError::Invalid("expected a single label".into()));
            }
            Ok(if q[0] == one { "group".into() } else { "generic".into() })
        }
        (Family::ARoot, 2) => {
            if q.len() != 2 {
                return Err(HkError::Invalid("expected labels (q0, q1)".into()));
            }
            let (q0, q1) = (&q[0], &q[1]);
            Ok(if *q0 == one && *q1 == one {
                "group".into()
            } else if q0 == q1 {
                // the candidate points -q0^{1/2} q1^{-1/2} collide with -1
                "equal".into()
            } else if (q0 * q1).is_one() {
                "inverse".into()
            } else {
                "generic".into()
            })
        }
        (Family::B2Weight, _) => {
            if q.len() != 2 {
                return Err(HkError::Invalid("expected labels (q0, q1)".into()));
            }
            // our q0 is the long-root label, q1 the short-root label
            let (q0, q1) = (&q[0], &q[1]);
            let q1sq = q1 * q1;
            Ok(if *q0 == one && *q1 == one {
                "group".into()
            } else if *q1 == one {
                "q1=1".into()
            } else if *q0 == one {
                "q0=1".into()
            } else if q0 == q1 {
                "special:q0=q1".into()
            } else if (q0 * q1).is_one() {
                "special:q0=q1^-1".into()
            } else if *q0 == q1sq {
                "special:q0=q1^2".into()
            } else if (q0 * &q1sq).is_one() {
                "special:q0=q1^-2".into()
            } else {
                "generic".into()
            })
        }
        _ => Err(HkError::UnsupportedFamily(format!(
            "genericity classes not tabulated for {},{}",
            fam.family.name(),
            fam.n
        ))),
    }
}

/// Orbit census keyed by dimension: `(total members, orbit count)`.
pub fn census_by_dim(report: &ResidualReport) -> BTreeMap<usize, (usize, usize)> {
    let mut out: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for o in &report.orbits {
        let e = out.entry(o.dim).or_insert((0, 0));
        e.0 += o.size;
        e.1 += 1;
    }
    out
}

/// Convenience: numeric regime from values of the base labels `q_i`.
pub fn numeric_regime(vals: &[Rat]) -> Result<LabelRegime> {
    LabelRegime::numeric(vals.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hecke::HeckeAlgebra;
    use crate::intmat::rat;
    use crate::root_datum::{build_family, Family};
    use crate::weyl::WeylData;

    fn setup(f: Family, n: usize) -> (WeylData, LabelFunction) {
        let d = build_family(f, n).unwrap();
        let w = WeylData::new(&d).unwrap();
        let h = HeckeAlgebra::new(w.clone()).unwrap();
        (w, h.labels)
    }

    #[test]
    fn theta_eval_homomorphism() {
        let (w, _labels) = setup(Family::AWeight, 2);
        let mut t = TorusPoint::identity(1, 1);
        // t = "q^{1/2} at x1"
        t.exps[0][0] = rat(1, 2);
        assert!(t.eval(&[0]).is_one(&LabelRegime::Generic));
        // t(alpha) = t(2 x1) = q
        let v = t.eval(&[2]);
        assert_eq!(v.exps[0], rat(1, 1));
        // (w t)(x) = t(w^{-1} x)
        let s = w.w0.elems[w.s0[0]].clone();
        let wt = t.apply(&s);
        assert!(wt.eval(&[1]).equals(&t.eval(&[-1]), &LabelRegime::Generic));
    }

    #[test]
    fn scaling_map() {
        let mut t = TorusPoint::identity(1, 1);
        t.angles[0] = rat(1, 3);
        t.exps[0][0] = rat(1, 2);
        // identity scaling
        assert!(t.scale(&Rat::one()).equals(&t, &LabelRegime::Generic));
        // zero scaling keeps only the unitary part
        let t0 = t.scale(&Rat::zero());
        assert!(t0.equals(&t.unitary_part(), &LabelRegime::Generic));
        // half scaling: q^{1/2} -> q^{1/4}
        let th = t.scale(&rat(1, 2));
        assert_eq!(th.exps[0][0], rat(1, 4));
        assert_eq!(th.angles[0], rat(1, 3));
        // composition law on the exponent part
        let a = t.scale(&rat(2, 3)).scale(&rat(1, 2));
        let b = t.scale(&rat(1, 3));
        assert!(a.equals(&b, &LabelRegime::Generic));
    }

    #[test]
    fn scaling_commutes_with_w0() {
        let (w, _labels) = setup(Family::B2Weight, 2);
        let mut t = TorusPoint::identity(2, 2);
        t.angles = vec![rat(1, 4), rat(2, 3)];
        t.exps[0][0] = rat(1, 2);
        t.exps[1][1] = rat(-1, 3);
        for m in &w.w0.elems {
            let a = t.apply(m).scale(&rat(1, 2));
            let b = t.scale(&rat(1, 2)).apply(m);
            assert!(a.equals(&b, &LabelRegime::Generic));
        }
    }

    #[test]
    fn c_factor_flags() {
        let (w, labels) = setup(Family::AWeight, 2);
        let sp = Spectral::new(&w, &labels, LabelRegime::Generic);
        let long = w.datum.long_roots();
        let lr = long
            .iter()
            .find(|lr| w.datum.is_positive_root(lr.root_index))
            .unwrap();
        let neg = long
            .iter()
            .find(|lr| !w.datum.is_positive_root(lr.root_index))
            .unwrap();
        // t with t(x1) = q^{1/2}: then t(alpha) = q so the c-factor of the
        // negative root has a vanishing numerator
        let mut t = TorusPoint::identity(1, 1);
        t.exps[0][0] = rat(1, 2);
        let st = sp.c_factor_status(neg, &t);
        assert!(st.numerator_zero.0);
        // generic point: nothing vanishes
        let mut g = TorusPoint::identity(1, 1);
        g.angles[0] = rat(1, 5);
        g.exps[0][0] = rat(1, 3);
        let st = sp.c_factor_status(lr, &g);
        assert!(!st.numerator_zero.0 && !st.numerator_zero.1 && !st.denominator_zero);
        // unitary fixed point: denominator zero
        let id = TorusPoint::identity(1, 1);
        let st = sp.c_factor_status(lr, &id);
        assert!(st.denominator_zero);
    }

    #[test]
    fn residual_a1_weight() {
        let (w, labels) = setup(Family::AWeight, 2);
        let sp = Spectral::new(&w, &labels, LabelRegime::Generic);
        let rep = sp.classify_residual_cosets().unwrap();
        // the four points of the rank-one weight-lattice case, in 2 orbits
        assert_eq!(rep.points(), (4, 2));
        // plus T itself
        assert_eq!(rep.cosets_of_dim(1), (1, 1));
        assert!(sp.verify_w0_stability(&rep));
    }

    #[test]
    fn residual_a1_root_generic_and_degenerate() {
        let (w, labels) = setup(Family::ARoot, 2);
        let sp = Spectral::new(&w, &labels, LabelRegime::Generic);
        let rep = sp.classify_residual_cosets().unwrap();
        assert_eq!(rep.points(), (4, 2));
        // equal labels: only q^{+-1} remain residual
        let eq = Spectral::new(&w, &labels, numeric_regime(&[rat(4, 1), rat(4, 1)]).unwrap());
        let rep = eq.classify_residual_cosets().unwrap();
        assert_eq!(rep.points(), (2, 1));
        // inverse labels: only -q^{+-1} remain
        let inv = Spectral::new(&w, &labels, numeric_regime(&[rat(1, 4), rat(4, 1)]).unwrap());
        let rep = inv.classify_residual_cosets().unwrap();
        assert_eq!(rep.points(), (2, 1));
        let p = &rep.orbits.iter().find(|o| o.dim == 0).unwrap().representative;
        // representative point is -q^{+-1}: angle 1/2 on the generator
        assert_eq!(p.point.eval(&[1]).angle, rat(1, 2));
    }

    #[test]
    fn residual_gl2() {
        let (w, labels) = setup(Family::Gl, 2);
        let sp = Spectral::new(&w, &labels, LabelRegime::Generic);
        let rep = sp.classify_residual_cosets().unwrap();
        assert_eq!(rep.points(), (0, 0));
        assert_eq!(rep.cosets_of_dim(1), (2, 1));
        assert_eq!(rep.cosets_of_dim(2), (1, 1));
        assert!(sp.verify_w0_stability(&rep));
    }

    #[test]
    fn residual_a2_weight() {
        let (w, labels) = setup(Family::AWeight, 3);
        let sp = Spectral::new(&w, &labels, LabelRegime::Generic);
        let rep = sp.classify_residual_cosets().unwrap();
        assert_eq!(rep.points(), (18, 3));
        assert_eq!(rep.cosets_of_dim(1), (6, 1));
        for o in &rep.orbits {
            if o.dim == 0 {
                assert_eq!(o.size, 6);
            }
        }
    }

    #[test]
    fn residual_a2_root() {
        let (w, labels) = setup(Family::ARoot, 3);
        let sp = Spectral::new(&w, &labels, LabelRegime::Generic);
        let rep = sp.classify_residual_cosets().unwrap();
        assert_eq!(rep.points(), (6, 1));
        assert_eq!(rep.cosets_of_dim(1), (6, 1));
    }

    #[test]
    fn residual_b2_weight() {
        let (w, labels) = setup(Family::B2Weight, 2);
        let sp = Spectral::new(&w, &labels, LabelRegime::Generic);
        let rep = sp.classify_residual_cosets().unwrap();
        assert_eq!(rep.points(), (40, 5));
        // three orbits of circles; each circle has a setwise stabilizer of
        // order two, so 12 distinct cosets but 24 translates counted over W0
        assert_eq!(rep.cosets_of_dim(1), (12, 3));
        assert_eq!(rep.translates_of_dim(1), (24, 3));
    }

    #[test]
    fn residual_b2_weight_mixed_classes() {
        let (w, labels) = setup(Family::B2Weight, 2);
        // q1 (short label) = 1: 16 points in 3 orbits, 8 circles in 2 orbits
        let sp = Spectral::new(&w, &labels, numeric_regime(&[rat(4, 1), rat(1, 1)]).unwrap());
        let rep = sp.classify_residual_cosets().unwrap();
        assert_eq!(rep.points(), (16, 3));
        assert_eq!(rep.cosets_of_dim(1), (8, 2));
        // q0 (long label) = 1: 8 points in 2 orbits, 4 circles in 1 orbit
        let sp = Spectral::new(&w, &labels, numeric_regime(&[rat(1, 1), rat(4, 1)]).unwrap());
        let rep = sp.classify_residual_cosets().unwrap();
        assert_eq!(rep.points(), (8, 2));
        assert_eq!(rep.cosets_of_dim(1), (4, 1));
    }

    #[test]
    fn tempered_forms_disjoint_on_b2() {
        let (w, labels) = setup(Family::B2Weight, 2);
        let sp = Spectral::new(&w, &labels, LabelRegime::Generic);
        let rep = sp.classify_residual_cosets().unwrap();
        let circles: Vec<_> = rep.orbits.iter().filter(|o| o.dim == 1).collect();
        assert_eq!(circles.len(), 3);
        for i in 0..circles.len() {
            for j in (i + 1)..circles.len() {
                assert!(!sp.tempered_forms_intersect(
                    &circles[i].representative,
                    &circles[j].representative
                ));
            }
        }
    }

    #[test]
    fn duality_q_to_qinv_rank1() {
        // classify at q and at q^{-1}: the point counts and unitary parts match
        let (w, labels) = setup(Family::AWeight, 2);
        let at = |q: Rat| {
            let sp = Spectral::new(&w, &labels, numeric_regime(&[q]).unwrap());
            sp.classify_residual_cosets().unwrap()
        };
        let r1 = at(rat(4, 1));
        let r2 = at(rat(1, 4));
        assert_eq!(r1.points(), r2.points());
        let angles = |r: &ResidualReport| {
            let mut v: Vec<String> = r
                .orbits
                .iter()
                .filter(|o| o.dim == 0)
                .map(|o| o.representative.point.eval(&[1]).angle.to_string())
                .collect();
            v.sort();
            v
        };
        assert_eq!(angles(&r1), angles(&r2));
    }

    #[test]
    fn genericity_classes() {
        let b2 = build_family(Family::B2Weight, 2).unwrap();
        assert_eq!(genericity_class(&b2, &[rat(1, 1), rat(1, 1)]).unwrap(), "group");
        assert_eq!(
            genericity_class(&b2, &[rat(4, 1), rat(2, 1)]).unwrap(),
            "special:q0=q1^2"
        );
        assert_eq!(genericity_class(&b2, &[rat(2, 1), rat(7, 1)]).unwrap(), "generic");
        assert_eq!(genericity_class(&b2, &[rat(4, 1), rat(1, 1)]).unwrap(), "q1=1");
        assert_eq!(genericity_class(&b2, &[rat(1, 1), rat(4, 1)]).unwrap(), "q0=1");
        let a1 = build_family(Family::AWeight, 2).unwrap();
        assert_eq!(genericity_class(&a1, &[rat(1, 1)]).unwrap(), "group");
        assert_eq!(genericity_class(&a1, &[rat(3, 1)]).unwrap(), "generic");
        let a1r = build_family(Family::ARoot, 2).unwrap();
        assert_eq!(genericity_class(&a1r, &[rat(2, 1), rat(2, 1)]).unwrap(), "equal");
        assert_eq!(genericity_class(&a1r, &[rat(2, 1), rat(1, 2)]).unwrap(), "inverse");
        assert_eq!(genericity_class(&a1r, &[rat(2, 1), rat(3, 1)]).unwrap(), "generic");
    }
}
