//! Triples of involutions: geometric classification, the strongly non
//! self-polar test, constructions of special triangles and the sweep that
//! compares the geometric verdict with the hypertope criteria.
//!
//! Sides. A side is read as the set of centers of the involutions in the
//! dihedral group generated by two of the three involutions; non-involutory
//! elements have no center and are skipped.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geom::{criteria_from_parabolics, maximal_parabolics, others, CriteriaReport};
use crate::gf::FieldInfo;
use crate::grp::{closure, conic_group, identify_closure, GroupId, GroupTag, GrpError};
use crate::perspectivity::{center_axis, in_psl, involution_from_center, product_order, Involution};
use crate::plane::{Line, LineClass, Plane, Point};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TriangleError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("centers are collinear")]
    CollinearCenters,
    #[error("point {0} is not on the conic")]
    PointsNotOnConic(Point),
    #[error("conic points coincide")]
    CoincidentConicPoints,
    #[error("no triangle satisfies the construction")]
    SearchExhausted,
    #[error(transparent)]
    Group(#[from] GrpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TriangleClass {
    Collinear,
    SelfPolar,
    ProperSNSP,
    ProperNotSNSP,
    NonProperPolarizedOK,
    NonProperViolating,
}

impl TriangleClass {
    pub const ALL: [TriangleClass; 6] = [
        TriangleClass::Collinear,
        TriangleClass::SelfPolar,
        TriangleClass::ProperSNSP,
        TriangleClass::ProperNotSNSP,
        TriangleClass::NonProperPolarizedOK,
        TriangleClass::NonProperViolating,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TriangleClass::Collinear => "Collinear",
            TriangleClass::SelfPolar => "SelfPolar",
            TriangleClass::ProperSNSP => "ProperSNSP",
            TriangleClass::ProperNotSNSP => "ProperNotSNSP",
            TriangleClass::NonProperPolarizedOK => "NonProperPolarizedOK",
            TriangleClass::NonProperViolating => "NonProperViolating",
        }
    }

    /// A triangle that is strongly non self-polar.
    pub fn is_snsp_triangle(&self) -> bool {
        matches!(self, TriangleClass::ProperSNSP | TriangleClass::NonProperPolarizedOK)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TriangleRecord {
    pub centers: [Point; 3],
    #[serde(skip)]
    pub involutions: [Involution; 3],
    /// sides[k]: centers of the involutions of <a_i, a_j>, {i,j,k} = {0,1,2}.
    pub sides: [Vec<Point>; 3],
    pub class: TriangleClass,
    pub witness: Option<[Point; 3]>,
    pub psl: [bool; 3],
    pub group_id: GroupId,
    /// Orders of a0a1, a0a2, a1a2.
    pub labels: [u32; 3],
    pub criteria: CriteriaReport,
    pub hypertope: bool,
}

impl TriangleRecord {
    /// Whether the hypertope verdict agrees with the geometric one.
    pub fn consistent(&self) -> bool {
        self.hypertope == self.class.is_snsp_triangle()
    }
}

fn conjugate(plane: &Plane, a: &Point, b: &Point) -> bool {
    plane.incident(b, &plane.polar(a))
}

/// Vertices spanning side s plus the center of their product when that
/// product is an involution.
fn trivial_side_points(plane: &Plane, centers: &[Point; 3], s: usize) -> Vec<Point> {
    let (i, j) = others(s);
    let mut t = vec![centers[i], centers[j]];
    if conjugate(plane, &centers[i], &centers[j]) {
        t.push(plane.meet(&plane.polar(&centers[i]), &plane.polar(&centers[j])).expect("distinct polars"));
    }
    t
}

/// Assignment order of (side of X, side of Y, side of Z) in the search.
const SEARCH_ORDER: [[usize; 3]; 6] = [[2, 0, 1], [0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 1, 0]];

/// Looks for a self-polar triangle with one vertex on each side of Δ.
///
/// A self-polar triangle whose vertices are all among the trivially present
/// points (the vertices of Δ and centers of products of its commuting
/// pairs) is not counted: such triangles occur whenever Δ is not proper and
/// do not obstruct the hypertope property. A self-polar Δ is handled
/// separately by the caller.
pub fn snsp_witness(plane: &Plane, centers: &[Point; 3], sides: &[Vec<Point>; 3]) -> Option<[Point; 3]> {
    let trivial: [Vec<Point>; 3] = [0, 1, 2].map(|s| trivial_side_points(plane, centers, s));
    for [a, b, c] in SEARCH_ORDER {
        for x in &sides[a] {
            let polar_x = plane.polar(x);
            for y in &sides[b] {
                if x == y || !plane.incident(y, &polar_x) {
                    continue;
                }
                let z = plane.meet(&polar_x, &plane.polar(y)).expect("distinct polars");
                if sides[c].binary_search(&z).is_err() {
                    continue;
                }
                if !trivial[a].contains(x) || !trivial[b].contains(y) || !trivial[c].contains(&z) {
                    return Some([*x, *y, z]);
                }
            }
        }
    }
    None
}

fn side_points(plane: &Plane, h: &crate::grp::ElementSet) -> Vec<Point> {
    let f = plane.field();
    let mut out: Vec<Point> = h
        .iter()
        .filter(|x| !x.is_identity() && x.compose(f, x).is_identity())
        .map(|x| center_axis(plane, x).expect("involutions of the conic stabilizer").0)
        .collect();
    out.sort();
    out
}

/// Full record for the triple of involutions with centers P, Q, R.
pub fn classify_triangle(plane: &Plane, p: &Point, q: &Point, r: &Point, budget: usize) -> Result<TriangleRecord, TriangleError> {
    let centers = [*p, *q, *r];
    for c in &centers {
        if plane.point_index(c).is_none() {
            return Err(TriangleError::DegenerateInput(format!("{c} is not a normalized point")));
        }
        if plane.on_conic(c) {
            return Err(TriangleError::DegenerateInput(format!("{c} lies on the conic")));
        }
    }
    if p == q || p == r || q == r {
        return Err(TriangleError::DegenerateInput("centers coincide".into()));
    }
    let f = plane.field();
    let involutions = centers.map(|c| involution_from_center(plane, &c).expect("off-conic center"));
    let gens = [&involutions[0], &involutions[1], &involutions[2]];
    let parabolics = maximal_parabolics(f, gens);
    let criteria = criteria_from_parabolics(plane, gens, &parabolics);
    let sides = [0, 1, 2].map(|k| side_points(plane, &parabolics[k]));
    let h = closure(f, &involutions.map(|a| *a.map()), budget)?;
    let group_id = identify_closure(&h, f);
    let labels = [
        product_order(f, gens[0], gens[1]),
        product_order(f, gens[0], gens[2]),
        product_order(f, gens[1], gens[2]),
    ];
    let psl = involutions.map(|a| in_psl(plane, &a));

    let (class, witness) = if plane.collinear(p, q, r) {
        (TriangleClass::Collinear, None)
    } else if conjugate(plane, p, q) && conjugate(plane, p, r) && conjugate(plane, q, r) {
        (TriangleClass::SelfPolar, Some(centers))
    } else {
        let proper = (0..3).all(|k| {
            let (i, j) = others(k);
            plane.polar(&centers[k]) != plane.line_through(&centers[i], &centers[j]).expect("distinct")
        });
        let witness = snsp_witness(plane, &centers, &sides);
        let class = match (proper, witness.is_none()) {
            (true, true) => TriangleClass::ProperSNSP,
            (true, false) => TriangleClass::ProperNotSNSP,
            (false, true) => TriangleClass::NonProperPolarizedOK,
            (false, false) => TriangleClass::NonProperViolating,
        };
        (class, witness)
    };

    Ok(TriangleRecord {
        centers,
        involutions,
        sides,
        class,
        witness,
        psl,
        group_id,
        labels,
        hypertope: criteria.hypertope,
        criteria,
    })
}

/// True when none of the three involutions lies in PSL(2,q), which forces
/// the triangle to be strongly non self-polar.
pub fn not_psl_sufficient(plane: &Plane, a: &Involution, b: &Involution, c: &Involution) -> Result<bool, TriangleError> {
    if plane.collinear(&a.center(), &b.center(), &c.center()) {
        return Err(TriangleError::CollinearCenters);
    }
    Ok(!in_psl(plane, a) && !in_psl(plane, b) && !in_psl(plane, c))
}

/// The triangle cut out by the tangents at three conic points A, B, C:
/// P = t(A) ∩ t(B), Q = t(B) ∩ t(C), R = t(A) ∩ t(C).
pub fn construct_tangent_triangle(plane: &Plane, a: &Point, b: &Point, c: &Point, budget: usize) -> Result<TriangleRecord, TriangleError> {
    for x in [a, b, c] {
        if !plane.on_conic(x) {
            return Err(TriangleError::PointsNotOnConic(*x));
        }
    }
    if a == b || a == c || b == c {
        return Err(TriangleError::CoincidentConicPoints);
    }
    let (ta, tb, tc) = (plane.polar(a), plane.polar(b), plane.polar(c));
    let meet = |l: &Line, m: &Line| plane.meet(l, m).expect("distinct tangents");
    classify_triangle(plane, &meet(&ta, &tb), &meet(&tb, &tc), &meet(&ta, &tc), budget)
}

/// A triangle generating PGL(2,q) whose diagram has no label 2.
///
/// Follows the construction: a_P outside PSL, a non-tangent line l through
/// P (secant lines first), a_Q on l with a_P a_Q of order m/2 where
/// m = |Stab(l)|, then a_R outside PSL off l with polar(R) avoiding P and Q.
/// a_Q is not required to lie outside PSL: two involutions outside PSL have
/// their product in PSL, which has no element of order q-1 or q+1, so that
/// requirement would leave no candidate. Strong non self-polarity is then
/// not automatic, so candidates are scanned in canonical order, each is
/// classified, and failures move on to the next candidate.
pub fn construct_nonlinear_pgl(plane: &Plane, budget: usize) -> Result<TriangleRecord, TriangleError> {
    let f = plane.field();
    let q = plane.q() as usize;
    let target = q * q * q - q;
    let outside_psl: Vec<Involution> = plane
        .off_conic_points()
        .iter()
        .map(|x| involution_from_center(plane, x).expect("off-conic"))
        .filter(|a| !in_psl(plane, a))
        .collect();
    let all: Vec<Involution> = plane
        .off_conic_points()
        .iter()
        .map(|x| involution_from_center(plane, x).expect("off-conic"))
        .collect();
    for ap in &outside_psl {
        let p = ap.center();
        let mut lines: Vec<(u8, Line)> = plane
            .lines_through(&p)
            .into_iter()
            .filter_map(|l| match plane.classify_line(&l) {
                LineClass::Secant => Some((0, l)),
                LineClass::Exterior => Some((1, l)),
                LineClass::Tangent => None,
            })
            .collect();
        lines.sort();
        for (kind, l) in lines {
            // Stabilizers of secant and exterior lines are dihedral of
            // order 2(q-1) and 2(q+1).
            let half = if kind == 0 { q as u32 - 1 } else { q as u32 + 1 };
            for aq in &all {
                let qq = aq.center();
                if qq == p || !plane.incident(&qq, &l) || product_order(f, ap, aq) != half {
                    continue;
                }
                for ar in &outside_psl {
                    let r = ar.center();
                    if plane.incident(&r, &l) {
                        continue;
                    }
                    let polar_r = plane.polar(&r);
                    if plane.incident(&p, &polar_r) || plane.incident(&qq, &polar_r) {
                        continue;
                    }
                    let rec = classify_triangle(plane, &p, &qq, &r, budget)?;
                    if rec.group_id.order == target && rec.hypertope && rec.labels.iter().all(|&x| x > 2) {
                        return Ok(rec);
                    }
                }
            }
        }
    }
    Err(TriangleError::SearchExhausted)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Full,
    OrbitReps,
    Sample(u64),
}

impl Mode {
    pub fn name(&self) -> String {
        match self {
            Mode::Full => "full".into(),
            Mode::OrbitReps => "orbit-reps".into(),
            Mode::Sample(n) => format!("sample({n})"),
        }
    }
}

/// One row of the table: a triangle class together with a group label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TableRow {
    pub count: u64,
    pub hypertope: u64,
    /// psl[k]: triples with exactly k involutions in PSL(2,q).
    pub psl: [u64; 4],
}

impl TableRow {
    fn add(&mut self, other: &TableRow) {
        self.count += other.count;
        self.hypertope += other.hypertope;
        for k in 0..4 {
            self.psl[k] += other.psl[k];
        }
    }
}

/// Largest number of counterexamples kept in a table.
const MAX_EXAMPLES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct Tally {
    rows: BTreeMap<(TriangleClass, String), TableRow>,
    triples: u64,
    evaluated: u64,
    violations: u64,
    examples: Vec<(u64, [Point; 3])>,
}

impl Tally {
    fn record(&mut self, rank: u64, rec: &TriangleRecord, weight: u64) {
        let row = self.rows.entry((rec.class, rec.group_id.label())).or_default();
        row.count += weight;
        if rec.hypertope {
            row.hypertope += weight;
        }
        row.psl[rec.psl.iter().filter(|&&b| b).count()] += weight;
        self.triples += weight;
        self.evaluated += 1;
        if !rec.consistent() {
            self.violations += weight;
            self.examples.push((rank, rec.centers));
            self.examples.sort();
            self.examples.truncate(MAX_EXAMPLES);
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (k, v) in other.rows {
            self.rows.entry(k).or_default().add(&v);
        }
        self.triples += other.triples;
        self.evaluated += other.evaluated;
        self.violations += other.violations;
        self.examples.extend(other.examples);
        self.examples.sort();
        self.examples.truncate(MAX_EXAMPLES);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableEntry {
    pub class: TriangleClass,
    pub group: String,
    #[serde(flatten)]
    pub row: TableRow,
}

/// Counts per class and generated group over a set of triples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassificationTable {
    pub field: FieldInfo,
    pub mode: Mode,
    pub seed: u64,
    /// Triples represented (orbit representatives are weighted by orbit size).
    pub triples: u64,
    /// Triples actually classified.
    pub evaluated: u64,
    pub entries: Vec<TableEntry>,
    /// Triples where the hypertope verdict and the geometric verdict differ.
    pub violations: u64,
    pub violation_examples: Vec<[Point; 3]>,
}

pub const TSV_HEADER: &str = "class\tgroup\tcount\thypertope\tpsl0\tpsl1\tpsl2\tpsl3";

impl ClassificationTable {
    pub fn class_count(&self, class: TriangleClass) -> u64 {
        self.entries.iter().filter(|e| e.class == class).map(|e| e.row.count).sum()
    }

    /// Columns: class, group, count, hypertope, psl0..psl3.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(TSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            let r = &e.row;
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                e.class.name(),
                e.group,
                r.count,
                r.hypertope,
                r.psl[0],
                r.psl[1],
                r.psl[2],
                r.psl[3]
            ));
        }
        out
    }
}

fn choose3(n: u64) -> u64 {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

fn choose2(n: u64) -> u64 {
    if n < 2 {
        0
    } else {
        n * (n - 1) / 2
    }
}

/// Lexicographic rank of i < j < k among 3-subsets of {0..n}.
pub fn rank_triple(n: u64, t: [u64; 3]) -> u64 {
    let [i, j, k] = t;
    let before_i = choose3(n) - choose3(n - i);
    let before_j = choose2(n - i - 1) - choose2(n - j);
    before_i + before_j + (k - j - 1)
}

pub fn unrank_triple(n: u64, mut r: u64) -> [u64; 3] {
    let mut i = 0;
    while r >= choose2(n - i - 1) {
        r -= choose2(n - i - 1);
        i += 1;
    }
    let mut j = i + 1;
    while r >= n - j - 1 {
        r -= n - j - 1;
        j += 1;
    }
    [i, j, j + 1 + r]
}

/// Orbit representatives of 3-subsets of off-conic points under the conic
/// stabilizer, each with its orbit size. Representatives are the smallest
/// rank in their orbit.
pub fn orbit_representatives(plane: &Plane, budget: usize) -> Result<Vec<(u64, u64)>, TriangleError> {
    let f = plane.field();
    let pts = plane.off_conic_points();
    let n = pts.len() as u64;
    let g = conic_group(plane, budget)?;
    let index: std::collections::HashMap<Point, u64> =
        pts.iter().enumerate().map(|(i, p)| (*p, i as u64)).collect();
    let perms: Vec<Vec<u64>> = g
        .generators()
        .iter()
        .map(|x| pts.iter().map(|p| index[&x.apply(f, p)]).collect())
        .collect();
    let total = choose3(n);
    let mut seen = vec![0u64; total.div_ceil(64) as usize];
    let test_and_set = |seen: &mut Vec<u64>, r: u64| {
        let (w, b) = ((r / 64) as usize, r % 64);
        let was = seen[w] >> b & 1 == 1;
        seen[w] |= 1 << b;
        was
    };
    let mut reps = Vec::new();
    let mut stack = Vec::new();
    for r in 0..total {
        if test_and_set(&mut seen, r) {
            continue;
        }
        let mut size = 1;
        stack.push(r);
        while let Some(s) = stack.pop() {
            let t = unrank_triple(n, s);
            for perm in &perms {
                let mut img = t.map(|x| perm[x as usize]);
                img.sort_unstable();
                let ri = rank_triple(n, img);
                if !test_and_set(&mut seen, ri) {
                    size += 1;
                    stack.push(ri);
                }
            }
        }
        reps.push((r, size));
    }
    Ok(reps)
}

/// Classifies triples of distinct off-conic centers.
///
/// `Full` walks all C(q^2, 3) triples; `OrbitReps` classifies one triple per
/// orbit of the conic stabilizer and weights it by the orbit size; `Sample`
/// draws distinct triples uniformly without replacement using ChaCha8
/// seeded with `seed`.
pub fn enumerate_triples(plane: &Plane, mode: Mode, seed: u64, budget: usize) -> Result<ClassificationTable, TriangleError> {
    let pts = plane.off_conic_points();
    let n = pts.len() as u64;
    let total = choose3(n);
    let work: Vec<(u64, u64)> = match mode {
        Mode::Full => (0..total).map(|r| (r, 1)).collect(),
        Mode::OrbitReps => orbit_representatives(plane, budget)?,
        Mode::Sample(k) => {
            let mut ranks = sample_ranks(total, k, seed);
            ranks.sort_unstable();
            ranks.into_iter().map(|r| (r, 1)).collect()
        }
    };
    let tally = work
        .par_iter()
        .try_fold(Tally::default, |mut acc, &(r, w)| {
            let [i, j, k] = unrank_triple(n, r);
            let rec = classify_triangle(plane, &pts[i as usize], &pts[j as usize], &pts[k as usize], budget)?;
            acc.record(r, &rec, w);
            Ok::<Tally, TriangleError>(acc)
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
    Ok(ClassificationTable {
        field: plane.field().info(),
        mode,
        seed,
        triples: tally.triples,
        evaluated: tally.evaluated,
        entries: tally
            .rows
            .into_iter()
            .map(|((class, group), row)| TableEntry { class, group, row })
            .collect(),
        violations: tally.violations,
        violation_examples: tally.examples.into_iter().map(|(_, t)| t).collect(),
    })
}

/// k distinct ranks below `total`, or all of them when k >= total.
pub fn sample_ranks(total: u64, k: u64, seed: u64) -> Vec<u64> {
    if k >= total {
        return (0..total).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, total as usize, k as usize)
        .into_iter()
        .map(|x| x as u64)
        .collect()
}

/// Triples of a sample as center points, in the sampler's order.
pub fn sample_triples(plane: &Plane, k: u64, seed: u64) -> Vec<[Point; 3]> {
    let pts = plane.off_conic_points();
    let n = pts.len() as u64;
    sample_ranks(choose3(n), k, seed)
        .into_iter()
        .map(|r| unrank_triple(n, r).map(|i| pts[i as usize]))
        .collect()
}

/// Triples whose three involutions all lie in PSL(2,q), split by strong non
/// self-polarity and by whether they generate PSL(2,q) itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PslSummary {
    pub field: FieldInfo,
    pub mode: Mode,
    pub seed: u64,
    pub triples: u64,
    pub all_psl: u64,
    pub all_psl_snsp: u64,
    pub generating_psl: u64,
    pub generating_psl_snsp: u64,
}

pub const PSL_TSV_HEADER: &str = "q\ttriples\tall_psl\tall_psl_snsp\tgenerating_psl\tgenerating_psl_snsp";

impl PslSummary {
    pub fn from_table(table: &ClassificationTable) -> PslSummary {
        let f = &table.field;
        let q = f.p.pow(f.n);
        let full = format!("PSL(2,{q})");
        let mut out = PslSummary {
            field: f.clone(),
            mode: table.mode,
            seed: table.seed,
            triples: table.triples,
            all_psl: 0,
            all_psl_snsp: 0,
            generating_psl: 0,
            generating_psl_snsp: 0,
        };
        for e in &table.entries {
            let k = e.row.psl[3];
            let snsp = e.class.is_snsp_triangle();
            out.all_psl += k;
            if snsp {
                out.all_psl_snsp += k;
            }
            if e.group == full {
                out.generating_psl += k;
                if snsp {
                    out.generating_psl_snsp += k;
                }
            }
        }
        out
    }

    pub fn to_tsv(&self) -> String {
        format!(
            "{PSL_TSV_HEADER}\n{}\t{}\t{}\t{}\t{}\t{}\n",
            self.field.p.pow(self.field.n),
            self.triples,
            self.all_psl,
            self.all_psl_snsp,
            self.generating_psl,
            self.generating_psl_snsp
        )
    }
}

/// True for the groups a triangle that is not self-polar can generate:
/// PSL(2,q0), PGL(2,q0), S4 or A5.
pub fn generation_allowed(id: &GroupId) -> bool {
    matches!(id.tag, GroupTag::PSL | GroupTag::PGL | GroupTag::A5 | GroupTag::S4)
}
