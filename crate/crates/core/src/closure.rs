//! Exact H-polytopes in dimension at most four, Gomory-Chvátal cuts, and
//! truncated closures.
//!
//! Every polytope lives inside `[0,1]^n`; the cube bounds are always present, so
//! vertex enumeration can start from the cube and cut one inequality at a time.
//! [`candidate_closure`] only uses normals with `||c||_inf <= K` and therefore
//! returns a superset of the true closure.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::num::{floor, fmt_rat, gcd_all, int_rat, rat, serde_str, Rational};

pub const MAX_DIM: usize = 4;

pub type Point = Vec<Rational>;

/// `a x <= b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ineq {
    #[serde(with = "serde_str::int_vec")]
    pub a: Vec<BigInt>,
    #[serde(with = "serde_str::rat")]
    pub b: Rational,
}

impl Ineq {
    pub fn new(a: Vec<BigInt>, b: Rational) -> Self {
        Self { a, b }
    }

    pub fn from_i64(a: &[i64], b: Rational) -> Self {
        Self { a: a.iter().map(|&x| BigInt::from(x)).collect(), b }
    }

    pub fn lhs(&self, x: &[Rational]) -> Rational {
        self.a.iter().zip(x).map(|(ai, xi)| int_rat(ai) * xi).sum()
    }

    /// `b - a x`.
    pub fn slack(&self, x: &[Rational]) -> Rational {
        &self.b - self.lhs(x)
    }

    /// Divides by the entry gcd; `None` for the zero normal.
    fn primitive(&self) -> Option<Self> {
        let g = gcd_all(&self.a);
        if g.is_zero() {
            return None;
        }
        Some(Self { a: self.a.iter().map(|x| x / &g).collect(), b: &self.b / int_rat(&g) })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HPolytope {
    pub n: usize,
    pub ineqs: Vec<Ineq>,
}

fn unit(n: usize, i: usize, v: i64) -> Vec<BigInt> {
    (0..n).map(|j| BigInt::from(if i == j { v } else { 0 })).collect()
}

fn cube_bounds(n: usize) -> Vec<Ineq> {
    (0..n)
        .flat_map(|i| [Ineq::new(unit(n, i, -1), rat(0, 1)), Ineq::new(unit(n, i, 1), rat(1, 1))])
        .collect()
}

/// Rank of a rational matrix by exact elimination.
#[allow(clippy::needless_range_loop)]
fn rank(rows: &[Vec<Rational>]) -> usize {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for col in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][col].is_zero()) else { continue };
        m.swap(r, p);
        for i in r + 1..m.len() {
            if !m[i][col].is_zero() {
                let f = &m[i][col] / &m[r][col];
                for k in col..cols {
                    let t = &f * &m[r][k];
                    m[i][k] -= t;
                }
            }
        }
        r += 1;
    }
    r
}

/// One nonzero vector orthogonal to all rows when they have rank `cols - 1`.
#[allow(clippy::needless_range_loop)]
fn null_vector(rows: &[Vec<Rational>], cols: usize) -> Option<Vec<Rational>> {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][col].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][col].recip();
        for k in 0..cols {
            m[r][k] *= &inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                for k in 0..cols {
                    let t = &f * &m[r][k];
                    m[i][k] -= t;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    if r + 1 != cols {
        return None;
    }
    let free = (0..cols).find(|c| !pivots.contains(c))?;
    let mut v = vec![Rational::zero(); cols];
    v[free] = Rational::one();
    for (row, &pc) in pivots.iter().enumerate() {
        v[pc] = -m[row][free].clone();
    }
    Some(v)
}

/// Scales a rational vector to a primitive integer vector.
fn integral_direction(v: &[Rational]) -> Vec<BigInt> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * int_rat(&l)).to_integer()).collect();
    let g = gcd_all(&ints);
    ints.into_iter().map(|x| x / &g).collect()
}

impl HPolytope {
    pub fn cube(n: usize) -> Self {
        Self { n, ineqs: cube_bounds(n) }
    }

    /// The given inequalities plus the cube bounds.
    pub fn new(n: usize, ineqs: Vec<Ineq>) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidArgument(format!("sandbox dimension must be in 1..={MAX_DIM}, got {n}")));
        }
        if ineqs.iter().any(|h| h.a.len() != n) {
            return Err(Error::LengthMismatch { expected: n, got: ineqs.iter().find(|h| h.a.len() != n).unwrap().a.len() });
        }
        let mut all = cube_bounds(n);
        for h in ineqs {
            if !all.contains(&h) {
                all.push(h);
            }
        }
        Ok(Self { n, ineqs: all })
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.ineqs.iter().all(|h| !h.slack(x).is_negative())
    }

    /// Exact vertex list, sorted. Empty when the polytope is empty.
    pub fn vertices(&self) -> Vec<Point> {
        let n = self.n;
        let mut verts: Vec<Point> = (0..1u32 << n)
            .map(|mask| (0..n).map(|i| rat(((mask >> i) & 1) as i64, 1)).collect())
            .collect();
        // start from the exact cube; stored bounds may have been tightened by `reduce`
        let cube = cube_bounds(n);
        let mut active: Vec<&Ineq> = cube.iter().collect();
        for h in &self.ineqs {
            let slack: Vec<Rational> = verts.iter().map(|v| h.slack(v)).collect();
            if slack.iter().all(|s| !s.is_negative()) {
                active.push(h);
                continue;
            }
            let mut next: Vec<Point> =
                verts.iter().zip(&slack).filter(|(_, s)| !s.is_negative()).map(|(v, _)| v.clone()).collect();
            let tight: Vec<Vec<usize>> = verts
                .iter()
                .map(|v| (0..active.len()).filter(|&k| active[k].slack(v).is_zero()).collect())
                .collect();
            for i in 0..verts.len() {
                for j in 0..verts.len() {
                    if !(slack[i].is_positive() && slack[j].is_negative()) {
                        continue;
                    }
                    let common: Vec<Vec<Rational>> = tight[i]
                        .iter()
                        .filter(|k| tight[j].contains(k))
                        .map(|&k| active[k].a.iter().map(int_rat).collect())
                        .collect();
                    if rank(&common) + 1 != n {
                        continue;
                    }
                    let t = &slack[i] / (&slack[i] - &slack[j]);
                    let p: Point = (0..n).map(|k| &verts[i][k] + &t * (&verts[j][k] - &verts[i][k])).collect();
                    next.push(p);
                }
            }
            next.sort();
            next.dedup();
            verts = next;
            active.push(h);
            if verts.is_empty() {
                break;
            }
        }
        verts.sort();
        verts
    }

    /// Facet description of `conv(points)`, which must be full-dimensional and inside the cube.
    pub fn from_points(n: usize, points: &[Point]) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidArgument(format!("sandbox dimension must be in 1..={MAX_DIM}, got {n}")));
        }
        let mut pts = points.to_vec();
        pts.sort();
        pts.dedup();
        if pts.iter().any(|p| p.len() != n) {
            return Err(Error::InvalidArgument("point dimension mismatch".into()));
        }
        if pts.is_empty() {
            return Err(Error::DegenerateHull);
        }
        let diffs: Vec<Vec<Rational>> =
            pts.iter().skip(1).map(|p| p.iter().zip(&pts[0]).map(|(x, y)| x - y).collect()).collect();
        if rank(&diffs) < n {
            return Err(Error::DegenerateHull);
        }
        let mut facets: Vec<Ineq> = Vec::new();
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            let base = &pts[idx[0]];
            let rows: Vec<Vec<Rational>> =
                idx[1..].iter().map(|&k| pts[k].iter().zip(base).map(|(x, y)| x - y).collect()).collect();
            if let Some(normal) = null_vector(&rows, n) {
                let a = integral_direction(&normal);
                let h = Ineq::new(a.clone(), Ineq::new(a.clone(), rat(0, 1)).lhs(base));
                let s: Vec<Rational> = pts.iter().map(|p| h.slack(p)).collect();
                let facet = if s.iter().all(|x| !x.is_negative()) {
                    Some(h)
                } else if s.iter().all(|x| !x.is_positive()) {
                    Some(Ineq::new(a.iter().map(|x| -x).collect(), -h.b))
                } else {
                    None
                };
                if let Some(f) = facet {
                    if !facets.contains(&f) {
                        facets.push(f);
                    }
                }
            }
            if !next_combination(&mut idx, pts.len()) {
                break;
            }
        }
        facets.sort_by(|x, y| x.a.cmp(&y.a).then(x.b.cmp(&y.b)));
        Self::new(n, facets)
    }

    /// `P(c, eps) = conv({x ∈ {0,1}^n : c x <= ||c||_1 / 2} ∪ {x*(eps)})`.
    pub fn knapsack_polytope(inst: &Instance) -> Result<Self> {
        let n = inst.n();
        if n > MAX_DIM {
            return Err(Error::InvalidArgument(format!("sandbox dimension must be at most {MAX_DIM}")));
        }
        let cap = inst.capacity();
        let c = inst.c().entries();
        let mut pts: Vec<Point> = (0..1u32 << n)
            .filter(|mask| int_rat(&(0..n).filter(|i| (mask >> i) & 1 == 1).map(|i| &c[i]).sum()) <= cap)
            .map(|mask| (0..n).map(|i| rat(((mask >> i) & 1) as i64, 1)).collect())
            .collect();
        pts.push(inst.xstar());
        Self::from_points(n, &pts)
    }

    /// Normalizes directions, keeps the tightest inequality per direction,
    /// and drops inequalities slack at every vertex (redundant for a nonempty polytope).
    pub fn reduce(&self) -> Self {
        let mut best: Vec<Ineq> = Vec::new();
        for h in &self.ineqs {
            let Some(p) = h.primitive() else { continue };
            match best.iter_mut().find(|q| q.a == p.a) {
                Some(q) if p.b < q.b => q.b = p.b,
                Some(_) => {}
                None => best.push(p),
            }
        }
        // keep cube bounds first so vertex enumeration can start from the cube
        let cube = cube_bounds(self.n);
        let mut ordered: Vec<Ineq> = cube.iter().map(|c| best.iter().find(|q| q.a == c.a).cloned().unwrap()).collect();
        let rest: Vec<Ineq> = best.into_iter().filter(|q| !cube.iter().any(|c| c.a == q.a)).collect();
        ordered.extend(rest);
        let full = Self { n: self.n, ineqs: ordered };
        let verts = full.vertices();
        if verts.is_empty() {
            return full;
        }
        let n = self.n;
        let ineqs: Vec<Ineq> = full
            .ineqs
            .iter()
            .enumerate()
            .filter(|(k, h)| *k < 2 * n || verts.iter().any(|v| h.slack(v).is_zero()))
            .map(|(_, h)| h.clone())
            .collect();
        Self { n, ineqs }
    }
}

fn next_combination(idx: &mut [usize], total: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < total - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn dot_int(a: &[BigInt], x: &[Rational]) -> Rational {
    a.iter().zip(x).map(|(ai, xi)| int_rat(ai) * xi).sum()
}

pub fn lp_max(poly: &HPolytope, objective: &[BigInt]) -> Result<Rational> {
    lp_max_over(&poly.vertices(), objective)
}

fn lp_max_over(verts: &[Point], objective: &[BigInt]) -> Result<Rational> {
    verts.iter().map(|v| dot_int(objective, v)).max().ok_or(Error::EmptyPolytope)
}

/// `c x <= floor(max { c y : y ∈ poly })`.
pub fn gc_cut(poly: &HPolytope, c: &[BigInt]) -> Result<Ineq> {
    let beta = lp_max(poly, c)?;
    Ok(Ineq::new(c.to_vec(), int_rat(&floor(&beta))))
}

/// Default cap on `n (2K+1)^n`.
pub const CLOSURE_BUDGET: u64 = 2_000_000;

/// Intersection of `poly` with every cut whose normal has `||c||_inf <= K`.
pub fn candidate_closure(poly: &HPolytope, k: u32) -> Result<HPolytope> {
    candidate_closure_with(poly, k, CLOSURE_BUDGET)
}

pub fn candidate_closure_with(poly: &HPolytope, k: u32, budget: u64) -> Result<HPolytope> {
    let n = poly.n;
    let side = 2 * k as u64 + 1;
    let work = side.checked_pow(n as u32).and_then(|x| x.checked_mul(n as u64)).unwrap_or(u64::MAX);
    if work > budget {
        return Err(Error::BudgetExceeded(format!("n (2K+1)^n = {work} exceeds {budget}")));
    }
    let verts = poly.vertices();
    if verts.is_empty() {
        return Err(Error::EmptyPolytope);
    }
    let total = side.pow(n as u32);
    let cuts: Vec<Ineq> = (0..total)
        .into_par_iter()
        .filter_map(|code| {
            let mut rest = code;
            let c: Vec<BigInt> = (0..n)
                .map(|_| {
                    let d = (rest % side) as i64 - k as i64;
                    rest /= side;
                    BigInt::from(d)
                })
                .collect();
            // non-primitive normals give weaker cuts
            if !gcd_all(&c).is_one() {
                return None;
            }
            let beta = lp_max_over(&verts, &c).expect("nonempty");
            Some(Ineq::new(c, int_rat(&floor(&beta))))
        })
        .collect();
    let mut ineqs = poly.ineqs.clone();
    ineqs.extend(cuts);
    Ok(HPolytope { n, ineqs }.reduce())
}

/// `max { eps : x*(eps) ∈ poly }`, or `None` if the diagonal misses `poly`.
pub fn diagonal_max(poly: &HPolytope) -> Option<Rational> {
    let half = rat(1, 2);
    let mut upper: Option<Rational> = None;
    let mut lower: Option<Rational> = None;
    for h in &poly.ineqs {
        let s: BigInt = h.a.iter().sum();
        // (1/2 + eps) s <= b
        if s.is_zero() {
            if h.b.is_negative() {
                return None;
            }
            continue;
        }
        let bound = &h.b / int_rat(&s) - &half;
        if s.is_positive() {
            upper = Some(upper.map_or(bound.clone(), |u| u.min(bound)));
        } else {
            lower = Some(lower.map_or(bound.clone(), |l| l.max(bound)));
        }
    }
    let top = upper?;
    match lower {
        Some(l) if l > top => None,
        _ => Some(top),
    }
}

/// `eps_bar_i = max { eps : x*(eps) ∈ P_i }` for `P_0 = poly0` and `P_(i+1)` the
/// candidate closure of `P_i`.
pub fn diagonal_trace(poly0: &HPolytope, k: u32, rounds: usize) -> Result<Vec<Option<Rational>>> {
    let mut p = poly0.clone();
    let mut out = vec![diagonal_max(&p)];
    for _ in 0..rounds {
        p = candidate_closure(&p, k)?;
        out.push(diagonal_max(&p));
    }
    Ok(out)
}

/// `round,eps_bar` lines; an empty intersection prints `empty`.
pub fn trace_csv(trace: &[Option<Rational>]) -> String {
    let mut s = String::from("round,eps_bar\n");
    for (i, e) in trace.iter().enumerate() {
        let v = e.as_ref().map_or_else(|| "empty".to_string(), fmt_rat);
        s.push_str(&format!("{i},{v}\n"));
    }
    s
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroOneHull {
    pub n: usize,
    pub vertices: Vec<Vec<u8>>,
}

impl ZeroOneHull {
    pub fn of(poly: &HPolytope) -> Self {
        let n = poly.n;
        let vertices = (0..1u32 << n)
            .map(|mask| (0..n).map(|i| ((mask >> i) & 1) as u8).collect::<Vec<u8>>())
            .filter(|v| poly.contains(&v.iter().map(|&x| rat(x as i64, 1)).collect::<Vec<_>>()))
            .collect();
        Self { n, vertices }
    }

    pub fn max(&self, d: &[BigInt]) -> Option<BigInt> {
        self.vertices.iter().map(|v| v.iter().zip(d).filter(|(x, _)| **x == 1).map(|(_, di)| di).sum()).max()
    }
}

/// The maxima of `d` over `poly` and over its 0/1 points agree.
pub fn is_saturated(poly: &HPolytope, hull: &ZeroOneHull, d: &[BigInt]) -> bool {
    match (lp_max(poly, d), hull.max(d)) {
        (Ok(lp), Some(h)) => lp == int_rat(&h),
        _ => false,
    }
}
