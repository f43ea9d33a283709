//! Extended quotients, character-sum Betti numbers at unit labels, the
//! partition-indexed rank formulas, and the per-family spectrum rank tables
//! with the two-route comparison.

use crate::error::{HkError, Result};
use crate::hecke::HeckeAlgebra;
use crate::intmat::{kernel_basis, rat_int, smith_normal_form, IMat, IVec, QMat, Rat};
use crate::root_datum::{Family, RootDatum};
use crate::spectral::{genericity_class, numeric_regime, Spectral};
use crate::weyl::WeylData;
use num::{One, Zero};
use serde::Serialize;
use std::collections::BTreeMap;

/// Decreasing partition of a positive integer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    pub fn new(mut parts: Vec<u32>) -> Self {
        assert!(parts.iter().all(|&p| p > 0));
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Partition { parts }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn weight(&self) -> u32 {
        self.parts.iter().sum()
    }

    /// Number of distinct part sizes.
    pub fn distinct_parts(&self) -> u32 {
        let mut v = self.parts.clone();
        v.dedup();
        v.len() as u32
    }

    pub fn gcd(&self) -> u32 {
        self.parts.iter().fold(0, |a, &b| num::integer::gcd(a, b))
    }

    /// Conjugate partition (reflected diagram).
    pub fn dual(&self) -> Partition {
        if self.parts.is_empty() {
            return Partition { parts: vec![] };
        }
        let m = self.parts[0];
        let parts = (1..=m)
            .map(|i| self.parts.iter().filter(|&&p| p >= i).count() as u32)
            .collect();
        Partition::new(parts)
    }

    pub fn label(&self) -> String {
        self.parts
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// All partitions of `n` (decreasing parts), in a deterministic order.
pub fn partitions(n: u32) -> Vec<Partition> {
    fn rec(n: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if n == 0 {
            out.push(Partition { parts: cur.clone() });
            return;
        }
        let top = max.min(n);
        for p in (1..=top).rev() {
            cur.push(p);
            rec(n - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = vec![];
    if n == 0 {
        out.push(Partition { parts: vec![] });
        return out;
    }
    rec(n, n, &mut vec![], &mut out);
    out
}

/// `d(n) = sum over partitions of gcd(mu) 2^{b(mu)-1}`.
pub fn d_formula(n: u32) -> u64 {
    assert!(n >= 1);
    partitions(n)
        .iter()
        .map(|mu| (mu.gcd() as u64) << (mu.distinct_parts() - 1))
        .sum()
}

/// Number of ordered `k`-tuples of partitions of total weight `n`.
pub fn p_tuples(k: u32, n: u32) -> u64 {
    assert!(k >= 1);
    // generating function convolution
    let p_counts: Vec<u64> = (0..=n).map(|m| partitions(m).len() as u64).collect();
    let mut acc = vec![0u64; (n + 1) as usize];
    acc[0] = 1;
    for _ in 0..k {
        let mut next = vec![0u64; (n + 1) as usize];
        for i in 0..=n as usize {
            for j in 0..=(n as usize - i) {
                next[i + j] += acc[i] * p_counts[j];
            }
        }
        acc = next;
    }
    acc[n as usize]
}

/// `sum over partitions of n of 2^{b(mu)}`: the total rank for the general
/// linear family.
pub fn gl_rank(n: u32) -> u64 {
    assert!(n >= 1);
    partitions(n)
        .iter()
        .map(|mu| 1u64 << mu.distinct_parts())
        .sum()
}

/// One orbit of connected components in the extended quotient.
#[derive(Debug, Clone, Serialize)]
pub struct EqComponent {
    pub class: String,
    pub components: usize,
    pub stabilizer_order: usize,
    pub torus_rank: usize,
    pub contribution_even: i64,
    pub contribution_odd: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankResult {
    pub k0: i64,
    pub k1: i64,
    pub census: Vec<EqComponent>,
}

impl RankResult {
    pub fn total(&self) -> i64 {
        self.k0 + self.k1
    }

    pub fn pair(&self) -> (i64, i64) {
        (self.k0, self.k1)
    }
}

const MAX_W0_FOR_EQ: usize = 100_000;

/// Ranks of the even/odd cohomology of the extended quotient of the compact
/// torus by the finite Weyl group, from character sums `det(1 +- g)` on the
/// fixed cocharacter spaces.
pub fn extended_quotient_ranks(datum: &RootDatum) -> Result<RankResult> {
    let weyl = WeylData::new(datum)?;
    extended_quotient_ranks_with(&weyl)
}

pub fn extended_quotient_ranks_with(weyl: &WeylData) -> Result<RankResult> {
    let datum = &weyl.datum;
    let n = datum.rank();
    if weyl.w0.order() > MAX_W0_FOR_EQ {
        return Err(HkError::SizeLimit("finite Weyl group too large".into()));
    }
    let identity_pairing = datum.pairing().is_identity();
    // dual (coroot-side) action per element; transpose when the pairing is
    // the standard one
    let dual_of = |idx: usize| -> IMat {
        if identity_pairing {
            weyl.w0.elems[idx].transpose()
        } else {
            datum.dual_action(&weyl.w0.elems[idx])
        }
    };
    let classes = weyl.conj_classes();
    let mut census = vec![];
    let mut k0 = 0i64;
    let mut k1 = 0i64;
    for class in &classes {
        let w = class.rep;
        let m = &weyl.w0.elems[w];
        // components of the fixed subtorus: torsion characters of X/(1-w)X
        let mut one_minus = IMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                one_minus[(i, j)] = if i == j { 1 - m[(i, j)] } else { -m[(i, j)] };
            }
        }
        let s = smith_normal_form(&one_minus);
        let diag = s.diag();
        let u = s.u.to_imat();
        let torsion: Vec<(usize, i64)> = diag
            .iter()
            .enumerate()
            .filter(|(_, &d)| d.abs() > 1)
            .map(|(i, &d)| (i, d.abs()))
            .collect();
        let denom: i64 = torsion.iter().fold(1, |acc, &(_, d)| num::integer::lcm(acc, d));
        // scaled integer angle rows: theta_j * denom
        let mut comps: Vec<IVec> = vec![];
        let mut tuples: Vec<Vec<i64>> = vec![vec![]];
        for &(_, d) in &torsion {
            let mut next = vec![];
            for t in &tuples {
                for a in 0..d {
                    let mut t2 = t.clone();
                    t2.push(a);
                    next.push(t2);
                }
            }
            tuples = next;
        }
        for t in &tuples {
            let mut theta = vec![0i64; n];
            for (k, &(i, d)) in torsion.iter().enumerate() {
                for j in 0..n {
                    theta[j] += t[k] * u[(i, j)] * (denom / d);
                }
            }
            comps.push(theta);
        }
        // saturation of (1-w)X: two scaled angle rows define the same
        // component iff their difference pairs integrally (mod denom) with it
        let img_cols: Vec<IVec> = (0..n).map(|j| one_minus.col(j)).collect();
        let sat = crate::root_datum::saturation_basis(&img_cols, n);
        let signature = |theta: &IVec| -> IVec {
            sat.iter()
                .map(|v| {
                    let dot: i64 = v.iter().zip(theta).map(|(a, b)| a * b).sum();
                    dot.rem_euclid(denom)
                })
                .collect()
        };
        let mut sig_index: BTreeMap<IVec, usize> = BTreeMap::new();
        for (i, c) in comps.iter().enumerate() {
            sig_index.entry(signature(c)).or_insert(i);
        }
        // centralizer and fixed cocharacter lattice
        let z = weyl.centralizer(w);
        let my = dual_of(w);
        let mut one_minus_y = IMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                one_minus_y[(i, j)] = if i == j { 1 - my[(i, j)] } else { -my[(i, j)] };
            }
        }
        let yw = kernel_basis(&one_minus_y);
        let torus_rank = yw.len();
        let restrictor = SublatticeRestrictor::new(&yw);

        let mut used = vec![false; comps.len()];
        for start in 0..comps.len() {
            if used[start] {
                continue;
            }
            let mut orbit_size = 1usize;
            used[start] = true;
            let mut stab: Vec<usize> = vec![];
            for &zi in &z {
                let zinv = weyl.w0.inv(zi);
                let zm = &weyl.w0.elems[zinv];
                // theta' = theta o z^{-1}: row vector times matrix
                let theta = &comps[start];
                let theta2: IVec = (0..n)
                    .map(|j| (0..n).map(|i| theta[i] * zm[(i, j)]).sum())
                    .collect();
                let target = *sig_index
                    .get(&signature(&theta2))
                    .expect("component action stays in the component set");
                if target == start {
                    stab.push(zi);
                } else if !used[target] {
                    used[target] = true;
                    orbit_size += 1;
                }
            }
            // character sums on the fixed cocharacter space
            let (mut sum_plus, mut sum_minus) = (0i128, 0i128);
            for &g in &stab {
                let gv = restrictor.restrict(&dual_of(g));
                let r = yw.len();
                let mut plus = gv.clone();
                let mut minus = gv;
                for i in 0..r {
                    plus[(i, i)] += 1;
                    for j in 0..r {
                        minus[(i, j)] = -minus[(i, j)];
                    }
                    minus[(i, i)] += 1;
                }
                sum_plus += int_det(&plus);
                sum_minus += int_det(&minus);
            }
            let so = stab.len() as i128;
            assert!(sum_plus % so == 0 && sum_minus % so == 0, "character sums must be integral");
            let a = (sum_plus / so) as i64;
            let b = (sum_minus / so) as i64;
            assert!(a >= 0 && b >= 0 && (a + b) % 2 == 0 && a >= b);
            let even = (a + b) / 2;
            let odd = (a - b) / 2;
            k0 += even;
            k1 += odd;
            census.push(EqComponent {
                class: class.label.clone().unwrap_or_else(|| format!("c{}", class.rep)),
                components: orbit_size,
                stabilizer_order: stab.len(),
                torus_rank,
                contribution_even: even,
                contribution_odd: odd,
            });
        }
    }
    census.sort_by(|a, b| (a.class.clone(), a.components).cmp(&(b.class.clone(), b.components)));
    Ok(RankResult { k0, k1, census })
}

/// Integer coordinates on a saturated sublattice: a scaled integer
/// pseudo-inverse of the basis matrix.
struct SublatticeRestrictor {
    basis: Vec<IVec>,
    pinv_scaled: IMat,
    scale: i64,
}

impl SublatticeRestrictor {
    fn new(basis: &[IVec]) -> Self {
        let r = basis.len();
        if r == 0 {
            return SublatticeRestrictor { basis: vec![], pinv_scaled: IMat::zeros(0, 0), scale: 1 };
        }
        let n = basis[0].len();
        let bq = QMat::from_imat(&IMat::from_cols(&basis.to_vec()));
        let mut gram = QMat::zeros(r, r);
        for i in 0..r {
            for k in 0..r {
                gram[(i, k)] = (0..n).map(|t| &bq[(t, i)] * &bq[(t, k)]).sum();
            }
        }
        // pinv = gram^{-1} B^T, scaled to integers
        let mut pinv = QMat::zeros(r, n);
        for i in 0..r {
            let mut e = vec![Rat::zero(); r];
            e[i] = Rat::one();
            let row = gram.solve(&e).expect("independent basis");
            for j in 0..n {
                let mut acc = Rat::zero();
                for k in 0..r {
                    acc += &row[k] * &bq[(j, k)];
                }
                pinv[(i, j)] = acc;
            }
        }
        let mut scale = num::BigInt::one();
        for v in &pinv.a {
            scale = num::integer::lcm(scale, v.denom().clone());
        }
        let scale = i64::try_from(&scale).expect("overflow");
        let mut pinv_scaled = IMat::zeros(r, n);
        for i in 0..r {
            for j in 0..n {
                let v = &pinv[(i, j)] * &rat_int(scale);
                assert!(v.is_integer());
                pinv_scaled[(i, j)] = i64::try_from(&v.to_integer()).expect("overflow");
            }
        }
        SublatticeRestrictor { basis: basis.to_vec(), pinv_scaled, scale }
    }

    /// Matrix of `m` on the sublattice in the stored basis, integral.
    fn restrict(&self, m: &IMat) -> IMat {
        let r = self.basis.len();
        let mut out = IMat::zeros(r, r);
        for (j, b) in self.basis.iter().enumerate() {
            let img = m.mul_vec(b);
            for i in 0..r {
                let num: i64 = (0..img.len()).map(|t| self.pinv_scaled[(i, t)] * img[t]).sum();
                assert!(num % self.scale == 0, "image not in the sublattice");
                out[(i, j)] = num / self.scale;
            }
        }
        out
    }
}

/// Exact determinant of a small integer matrix (fraction-free elimination).
fn int_det(m: &IMat) -> i128 {
    let n = m.rows;
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = (0..n)
        .map(|i| (0..n).map(|j| m[(i, j)] as i128).collect())
        .collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for t in 0..n - 1 {
        if a[t][t] == 0 {
            let Some(p) = ((t + 1)..n).find(|&i| a[i][t] != 0) else {
                return 0;
            };
            a.swap(t, p);
            sign = -sign;
        }
        for i in (t + 1)..n {
            for j in (t + 1)..n {
                a[i][j] = (a[t][t] * a[i][j] - a[i][t] * a[t][j]) / prev;
            }
            a[i][t] = 0;
        }
        prev = a[t][t];
    }
    sign * a[n - 1][n - 1]
}

fn normalize_angle(a: &Rat) -> Rat {
    let f = a.floor();
    a - f
}

/// Two angle rows define the same component of the fixed subtorus iff their
/// difference is integral on the saturation of `(1-w)X`.
fn same_component(a: &[Rat], b: &[Rat], sat: &[IVec]) -> bool {
    for v in sat {
        let mut acc = Rat::zero();
        for (j, &c) in v.iter().enumerate() {
            acc += (&a[j] - &b[j]) * rat_int(c);
        }
        if !normalize_angle(&acc).is_zero() {
            return false;
        }
    }
    true
}

/// K-groups of the r-torus: `(2^{r-1}, 2^{r-1})` for `r >= 1`, `(1, 0)` for
/// the point.
fn torus_k(r: u32) -> (i64, i64) {
    if r == 0 {
        (1, 0)
    } else {
        (1i64 << (r - 1), 1i64 << (r - 1))
    }
}

/// Spectrum-side ranks at the given labels (values of the base variables
/// `q_i`), assembled from the residual census and the partition machinery of
/// the covered families.
pub fn spectrum_ranks(datum: &RootDatum, q: &[Rat]) -> Result<RankResult> {
    let fam = datum.family.as_ref().ok_or_else(|| {
        HkError::NotImplemented("spectrum ranks are tabulated for built-in families only".into())
    })?;
    let group_case = q.iter().all(|v| v.is_one());
    if group_case {
        // unit labels: the spectrum is the extended quotient
        return extended_quotient_ranks(datum);
    }
    match (fam.family, fam.n) {
        (Family::AWeight, 2) | (Family::ARoot, 2) => a1_spectrum_ranks(datum, q),
        (Family::AWeight, n) => {
            // components indexed by partitions: gcd(mu) tori of dim b(mu)-1
            let (mut k0, mut k1) = (0i64, 0i64);
            let mut census = vec![];
            for mu in partitions(n as u32) {
                let (e, o) = torus_k(mu.distinct_parts() - 1);
                let g = mu.gcd() as i64;
                k0 += g * e;
                k1 += g * o;
                census.push(EqComponent {
                    class: mu.label(),
                    components: mu.gcd() as usize,
                    stabilizer_order: 0,
                    torus_rank: (mu.distinct_parts() - 1) as usize,
                    contribution_even: g * e,
                    contribution_odd: g * o,
                });
            }
            Ok(RankResult { k0, k1, census })
        }
        (Family::ARoot, n) => {
            // per partition: sheaf pieces indexed by divisors of gcd(mu^vee)
            let (mut k0, mut k1) = (0i64, 0i64);
            let mut census = vec![];
            for mu in partitions(n as u32) {
                let dual = mu.dual();
                let g = dual.gcd();
                let b = dual.distinct_parts();
                let mut e_tot = 0i64;
                let mut o_tot = 0i64;
                for r in 1..=g {
                    if g % r != 0 {
                        continue;
                    }
                    let phi = euler_phi(r) as i64;
                    let (e, o) = torus_k(b - 1);
                    e_tot += phi * e;
                    o_tot += phi * o;
                }
                k0 += e_tot;
                k1 += o_tot;
                census.push(EqComponent {
                    class: mu.label(),
                    components: g as usize,
                    stabilizer_order: 0,
                    torus_rank: (b - 1) as usize,
                    contribution_even: e_tot,
                    contribution_odd: o_tot,
                });
            }
            Ok(RankResult { k0, k1, census })
        }
        (Family::Gl, n) => {
            let (mut k0, mut k1) = (0i64, 0i64);
            let mut census = vec![];
            for mu in partitions(n as u32) {
                let (e, o) = torus_k(mu.distinct_parts());
                k0 += e;
                k1 += o;
                census.push(EqComponent {
                    class: mu.label(),
                    components: 1,
                    stabilizer_order: 0,
                    torus_rank: mu.distinct_parts() as usize,
                    contribution_even: e,
                    contribution_odd: o,
                });
            }
            Ok(RankResult { k0, k1, census })
        }
        (Family::B2Weight, _) => b2_weight_spectrum_ranks(datum, q),
        (Family::BRoot, _) => Err(HkError::NotImplemented(
            "spectrum ranks for the odd-orthogonal root-lattice family at non-unit labels"
                .into(),
        )),
        _ => Err(HkError::NotImplemented(format!(
            "spectrum ranks not tabulated for {},{}",
            fam.family.name(),
            fam.n
        ))),
    }
}

fn euler_phi(n: u32) -> u32 {
    (1..=n).filter(|k| num::integer::gcd(*k, n) == 1).count() as u32
}

/// Rank-one family at arbitrary positive labels: one interval component from
/// the principal part, one extra class per reducible unitary endpoint, and
/// one class per orbit of residual points.
fn a1_spectrum_ranks(datum: &RootDatum, q: &[Rat]) -> Result<RankResult> {
    let weyl = WeylData::new(datum)?;
    let h = HeckeAlgebra::new(weyl.clone())?;
    let regime = numeric_regime(q)?;
    let sp = Spectral::new(&weyl, &h.labels, regime);
    let report = sp.classify_residual_cosets()?;
    let (points, point_orbits) = report.points();
    let _ = points;
    // endpoint splitting: a unitary fixed point splits the principal series
    // iff some c-factor numerator vanishes there
    let mut splits = 0;
    for angle_half in [false, true] {
        let mut t = crate::spectral::TorusPoint::identity(1, h.nvars());
        if angle_half {
            t.angles[0] = Rat::new(1.into(), 2.into());
        }
        let vanish = datum.long_roots().iter().any(|lr| {
            let st = sp.c_factor_status(lr, &t);
            st.numerator_zero.0 || st.numerator_zero.1
        });
        if vanish {
            splits += 1;
        }
    }
    let k0 = 1 + splits + point_orbits as i64;
    let census = vec![EqComponent {
        class: format!(
            "principal interval + {} split endpoints + {} residual point orbits",
            splits, point_orbits
        ),
        components: 1 + splits as usize + point_orbits,
        stabilizer_order: 0,
        torus_rank: 0,
        contribution_even: k0,
        contribution_odd: 0,
    }];
    Ok(RankResult { k0, k1: 0, census })
}

/// The rank-two weight-lattice case with two label classes, per the case
/// tables: the principal part, one interval per circle orbit, and the
/// discrete-series count per point orbit (the orbit of full size carries a
/// unique discrete series; half-size orbits carry two).
fn b2_weight_spectrum_ranks(datum: &RootDatum, q: &[Rat]) -> Result<RankResult> {
    let class = genericity_class(datum, q)?;
    if class.starts_with("special") {
        return Err(HkError::NotImplemented(format!(
            "spectrum ranks on the special label line '{}' need R-group input",
            class
        )));
    }
    let weyl = WeylData::new(datum)?;
    let h = HeckeAlgebra::new(weyl.clone())?;
    let regime = numeric_regime(q)?;
    let sp = Spectral::new(&weyl, &h.labels, regime);
    let report = sp.classify_residual_cosets()?;
    let (points, point_orbits) = report.points();
    let (circles, circle_orbits) = report.cosets_of_dim(1);
    // principal-part contribution and expected census per class
    let (principal, expect): (i64, ((usize, usize), (usize, usize))) = match class.as_str() {
        "generic" => (1, ((40, 5), (12, 3))),
        "q1=1" => (2, ((16, 3), (8, 2))),
        "q0=1" => (4, ((8, 2), (4, 1))),
        other => {
            return Err(HkError::NotImplemented(format!(
                "unexpected label class '{}'",
                other
            )))
        }
    };
    if (points, point_orbits) != expect.0 || (circles, circle_orbits) != expect.1 {
        return Err(HkError::Invalid(format!(
            "residual census (({points},{point_orbits}),({circles},{circle_orbits})) does not match the tabulated class '{class}'"
        )));
    }
    // discrete series count: full orbits carry one, half orbits carry two
    let w0 = weyl.w0.order();
    let mut ds = 0i64;
    for o in report.orbits.iter().filter(|o| o.dim == 0) {
        ds += (w0 / o.size) as i64;
    }
    let k0 = principal + circle_orbits as i64 + ds;
    let census = vec![EqComponent {
        class: format!(
            "label class {class}: principal {principal} + circle orbits {circle_orbits} + discrete series {ds}"
        ),
        components: point_orbits + circle_orbits + 1,
        stabilizer_order: 0,
        torus_rank: 0,
        contribution_even: k0,
        contribution_odd: 0,
    }];
    Ok(RankResult { k0, k1: 0, census })
}

/// Two-route comparison: extended-quotient character sums at unit labels
/// against the residual/partition census at the given labels.
pub fn compare_q1(datum: &RootDatum, q: &[Rat]) -> Result<(bool, RankResult, RankResult)> {
    let eq = extended_quotient_ranks(datum)?;
    let sp = spectrum_ranks(datum, q)?;
    Ok((eq.pair() == sp.pair(), eq, sp))
}

/// Rank census serialization.
pub fn rank_json(r: &RankResult) -> serde_json::Value {
    serde_json::json!({
        "k0": r.k0,
        "k1": r.k1,
        "census": r.census,
    })
}
