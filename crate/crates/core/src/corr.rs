//! Frobenius collineations, τ-triangles and correlation witnesses.
//!
//! Correlations of a coset geometry are exhibited through automorphisms of H
//! that permute the three generators: conjugation by an element of H
//! (`Inner`) or a field automorphism (`Field`). No incidence-graph
//! automorphism search is done, so absence of a witness is only absence
//! among these automorphisms.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::geom::{maximal_parabolics, CosetGeometry};
use crate::gf::{Field, FieldInfo};
use crate::grp::{closure, ElementSet, GrpError};
use crate::perspectivity::{Involution, Projectivity};
use crate::plane::{normalize, Line, Plane, Point};
use crate::triangles::{classify_triangle, construct_tangent_triangle, TriangleClass, TriangleError, TriangleRecord};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorrError {
    #[error("frobenius power {k} is not in 1..{n}")]
    InvalidPower { k: u32, n: u32 },
    #[error("conic point {0} is fixed by the collineation")]
    FixedConicPoint(Point),
    #[error("collineation has order {0}, not 3")]
    NotOrderThree(u32),
    #[error("no conic point is moved by the collineation")]
    NoTauTriangle,
    #[error(transparent)]
    Triangle(#[from] TriangleError),
    #[error(transparent)]
    Group(#[from] GrpError),
}

/// x ↦ M·x for projectivities, x ↦ M·x^(p^k) for semilinear maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Collineation {
    Projectivity(Projectivity),
    SemiLinear { matrix: Projectivity, k: u32 },
}

fn frob_vec(f: &Field, v: [crate::gf::Fe; 3], k: u32) -> [crate::gf::Fe; 3] {
    v.map(|x| f.frobenius_map(x, k))
}

/// Entrywise Frobenius of a matrix. Canonical forms are preserved since
/// 0 and 1 are fixed.
pub fn frobenius_matrix(field: &Field, m: &Projectivity, k: u32) -> Projectivity {
    Projectivity::from_matrix(field, m.matrix().map(|x| field.frobenius_map(x, k))).expect("frobenius keeps determinant nonzero")
}

impl Collineation {
    fn parts(&self) -> (Projectivity, u32) {
        match *self {
            Collineation::Projectivity(m) => (m, 0),
            Collineation::SemiLinear { matrix, k } => (matrix, k),
        }
    }

    fn from_parts(field: &Field, m: Projectivity, k: u32) -> Collineation {
        let k = k % field.n();
        if k == 0 {
            Collineation::Projectivity(m)
        } else {
            Collineation::SemiLinear { matrix: m, k }
        }
    }

    pub fn apply(&self, field: &Field, p: &Point) -> Point {
        let (m, k) = self.parts();
        m.apply(field, &Point(frob_vec(field, p.0, k)))
    }

    pub fn apply_line(&self, field: &Field, l: &Line) -> Line {
        let (m, k) = self.parts();
        let v = normalize(field, frob_vec(field, l.0, k)).expect("nonzero");
        m.apply_line(field, &Line(v))
    }

    /// `self ∘ other`: (M φ^k)(N φ^j) = M φ^k(N) φ^(k+j).
    pub fn compose(&self, field: &Field, other: &Collineation) -> Collineation {
        let (m, k) = self.parts();
        let (n, j) = other.parts();
        let prod = m.compose(field, &frobenius_matrix(field, &n, k));
        Collineation::from_parts(field, prod, k + j)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Collineation::Projectivity(m) if m.is_identity())
    }

    pub fn order(&self, field: &Field) -> u32 {
        let mut acc = *self;
        let mut k = 1;
        while !acc.is_identity() {
            acc = acc.compose(field, self);
            k += 1;
        }
        k
    }

    /// The automorphism h ↦ c h c⁻¹ of PGL(3,q) induced by the collineation.
    pub fn act_on(&self, field: &Field, h: &Projectivity) -> Projectivity {
        let (m, k) = self.parts();
        frobenius_matrix(field, h, k).conjugate_by(field, &m)
    }
}

/// The collineation x ↦ x^(p^k) applied to coordinates.
pub fn frobenius_collineation(field: &Field, k: u32) -> Result<Collineation, CorrError> {
    if k == 0 || k >= field.n() {
        return Err(CorrError::InvalidPower { k, n: field.n() });
    }
    Ok(Collineation::SemiLinear { matrix: Projectivity::IDENTITY, k })
}

/// Tangent triangle on (A, τA, τ²A). Its vertices satisfy τP = Q, τQ = R,
/// τR = P.
pub fn tau_triangle(plane: &Plane, a: &Point, tau: &Collineation, budget: usize) -> Result<TriangleRecord, CorrError> {
    let f = plane.field();
    let order = tau.order(f);
    if order != 3 {
        return Err(CorrError::NotOrderThree(order));
    }
    let b = tau.apply(f, a);
    if b == *a {
        return Err(CorrError::FixedConicPoint(*a));
    }
    let c = tau.apply(f, &b);
    Ok(construct_tangent_triangle(plane, a, &b, &c, budget)?)
}

/// The permutations of {0,1,2} in lexicographic order; sigma[i] is the image
/// of i.
pub const S3: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WitnessSource {
    Inner,
    Field,
}

fn ser_rows<S: Serializer>(g: &Option<Projectivity>, s: S) -> Result<S::Ok, S::Error> {
    match g {
        Some(m) => m.rows().serialize(s),
        None => s.serialize_none(),
    }
}

/// An automorphism of H sending each generator a_i to a_sigma(i).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorrelationWitness {
    pub sigma: [usize; 3],
    /// Conjugating element for inner witnesses.
    #[serde(serialize_with = "ser_rows", skip_serializing_if = "Option::is_none")]
    pub g: Option<Projectivity>,
    pub source: WitnessSource,
    /// Frobenius power for field witnesses.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frobenius: Option<u32>,
}

fn conjugates_to(field: &Field, g: &Projectivity, gens: [&Involution; 3], sigma: [usize; 3]) -> bool {
    let gi = g.inverse(field);
    (0..3).all(|i| g.compose(field, gens[i].map()).compose(field, &gi) == *gens[sigma[i]].map())
}

/// First g of H, in H's order, with g a_i g⁻¹ = a_sigma(i) for all i.
pub fn correlation_witness(field: &Field, h: &ElementSet, gens: [&Involution; 3], sigma: [usize; 3]) -> Option<CorrelationWitness> {
    h.iter()
        .find(|g| conjugates_to(field, g, gens, sigma))
        .map(|g| CorrelationWitness { sigma, g: Some(*g), source: WitnessSource::Inner, frobenius: None })
}

/// Number of elements of H inducing sigma on the generators.
pub fn count_witnesses(field: &Field, h: &ElementSet, gens: [&Involution; 3], sigma: [usize; 3]) -> usize {
    h.iter().filter(|g| conjugates_to(field, g, gens, sigma)).count()
}

/// Inner witnesses for every permutation that has one.
pub fn inner_witnesses(field: &Field, h: &ElementSet, gens: [&Involution; 3]) -> Vec<CorrelationWitness> {
    S3.iter().filter_map(|&s| correlation_witness(field, h, gens, s)).collect()
}

/// The permutation of the generators induced by a collineation, if it
/// permutes them.
pub fn field_witness(field: &Field, gens: [&Involution; 3], c: &Collineation) -> Option<CorrelationWitness> {
    let mut sigma = [usize::MAX; 3];
    for i in 0..3 {
        let img = c.act_on(field, gens[i].map());
        sigma[i] = (0..3).find(|&j| *gens[j].map() == img)?;
    }
    if sigma[0] == sigma[1] || sigma[0] == sigma[2] || sigma[1] == sigma[2] {
        return None;
    }
    let frobenius = match c {
        Collineation::SemiLinear { k, .. } => Some(*k),
        Collineation::Projectivity(_) => None,
    };
    let (m, _) = c.parts();
    let g = if m.is_identity() { None } else { Some(m) };
    Some(CorrelationWitness { sigma, g, source: WitnessSource::Field, frobenius })
}

/// Image of every element of the geometry under an inner witness: the
/// type-t coset H_t x goes to the type-sigma(t) coset H_sigma(t) g x g⁻¹.
pub fn correlation_action(field: &Field, geometry: &CosetGeometry, h: &ElementSet, w: &CorrelationWitness) -> Option<[Vec<usize>; 3]> {
    let g = w.g?;
    let gi = g.inverse(field);
    let image = |t: usize| -> Vec<usize> {
        (0..geometry.counts()[t])
            .map(|a| {
                let x = &h.elements()[geometry.coset(t, a)[0] as usize];
                let y = g.compose(field, x).compose(field, &gi);
                geometry.coset_containing(w.sigma[t], h.index_of(&y).expect("closed group"))
            })
            .collect()
    };
    Some([image(0), image(1), image(2)])
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialityReport {
    pub field: FieldInfo,
    /// Conic point whose τ-orbit spans the triangle.
    pub base_point: Point,
    pub triangle: TriangleRecord,
    /// Permutation of the generators induced by τ.
    pub sigma: [usize; 3],
    #[serde(serialize_with = "ser_rows_some")]
    pub g: Projectivity,
    /// Elements of H inducing sigma.
    pub matches: usize,
    /// Elements h of H with g h g⁻¹ = τ(h).
    pub checks: usize,
    pub group_order: usize,
    pub verified: bool,
}

fn ser_rows_some<S: Serializer>(g: &Projectivity, s: S) -> Result<S::Ok, S::Error> {
    g.rows().serialize(s)
}

/// Checks that τ acts on the group of a tangent τ-triangle as conjugation
/// by an element of that group.
pub fn triality_projectivity_check(plane: &Plane, budget: usize) -> Result<TrialityReport, CorrError> {
    let f = plane.field();
    if f.n() != 3 {
        return Err(CorrError::InvalidPower { k: 1, n: f.n() });
    }
    let tau = frobenius_collineation(f, 1)?;
    let a = *plane
        .conic_points()
        .iter()
        .find(|x| tau.apply(f, x) != **x)
        .ok_or(CorrError::NoTauTriangle)?;
    let triangle = tau_triangle(plane, &a, &tau, budget)?;
    let gens: [&Involution; 3] = [&triangle.involutions[0], &triangle.involutions[1], &triangle.involutions[2]];
    let maps: Vec<Projectivity> = gens.iter().map(|x| *x.map()).collect();
    let h = closure(f, &maps, budget)?;
    let w = field_witness(f, gens, &tau).ok_or(CorrError::NoTauTriangle)?;
    let sigma = w.sigma;
    let inner = correlation_witness(f, &h, gens, sigma);
    let matches = count_witnesses(f, &h, gens, sigma);
    let g = inner.as_ref().and_then(|w| w.g).unwrap_or(Projectivity::IDENTITY);
    let gi = g.inverse(f);
    let checks = h
        .iter()
        .filter(|x| g.compose(f, x).compose(f, &gi) == tau.act_on(f, x))
        .count();
    let verified = inner.is_some() && checks == h.len() && matches == 1;
    Ok(TrialityReport {
        field: f.info(),
        base_point: a,
        triangle,
        sigma,
        g,
        matches,
        checks,
        group_order: h.len(),
        verified,
    })
}

/// One row of the τ-triangle experiment.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TauRow {
    pub count: u64,
    pub proper: u64,
    pub hypertope: u64,
    /// Triangles with an inner witness for some transposition.
    pub inner_duality: u64,
    /// Triangles with an inner witness for a 3-cycle.
    pub inner_triality: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TauEntry {
    pub class: TriangleClass,
    pub group: String,
    /// Whether a_P lies in PSL(2,q); the same for all three vertices.
    pub psl: bool,
    #[serde(flatten)]
    pub row: TauRow,
}

/// τ-triangles {P, τP, τ²P} over all off-conic points P moved by τ, one per
/// τ-orbit. Duality counts are over inner automorphisms only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TauExperiment {
    pub field: FieldInfo,
    pub triangles: u64,
    pub collinear: u64,
    pub entries: Vec<TauEntry>,
}

pub const TAU_TSV_HEADER: &str = "class\tgroup\tpsl\tcount\tproper\thypertope\tinner_duality\tinner_triality";

impl TauExperiment {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(TAU_TSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            let r = &e.row;
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                e.class.name(),
                e.group,
                e.psl,
                r.count,
                r.proper,
                r.hypertope,
                r.inner_duality,
                r.inner_triality
            ));
        }
        out
    }
}

fn is_proper(class: TriangleClass) -> bool {
    matches!(class, TriangleClass::ProperSNSP | TriangleClass::ProperNotSNSP)
}

pub fn tau_experiment(plane: &Plane, budget: usize) -> Result<TauExperiment, CorrError> {
    let f = plane.field();
    if f.n() % 3 != 0 {
        return Err(CorrError::InvalidPower { k: f.n() / 3, n: f.n() });
    }
    let tau = frobenius_collineation(f, f.n() / 3)?;
    let mut rows: BTreeMap<(TriangleClass, String, bool), TauRow> = BTreeMap::new();
    let (mut triangles, mut collinear) = (0, 0);
    for p in plane.off_conic_points() {
        let q = tau.apply(f, p);
        let r = tau.apply(f, &q);
        // One triangle per orbit: P is the smallest of its orbit.
        if q == *p || q < *p || r < *p {
            continue;
        }
        triangles += 1;
        let rec = classify_triangle(plane, p, &q, &r, budget)?;
        if rec.class == TriangleClass::Collinear {
            collinear += 1;
        }
        let row = rows.entry((rec.class, rec.group_id.label(), rec.psl[0])).or_default();
        row.count += 1;
        row.proper += is_proper(rec.class) as u64;
        row.hypertope += rec.hypertope as u64;
        if rec.class != TriangleClass::Collinear {
            let gens: [&Involution; 3] = [&rec.involutions[0], &rec.involutions[1], &rec.involutions[2]];
            let maps: Vec<Projectivity> = gens.iter().map(|x| *x.map()).collect();
            let h = closure(f, &maps, budget)?;
            let has = |s: [usize; 3]| correlation_witness(f, &h, gens, s).is_some();
            row.inner_duality += [[0, 2, 1], [1, 0, 2], [2, 1, 0]].into_iter().any(has) as u64;
            row.inner_triality += [[1, 2, 0], [2, 0, 1]].into_iter().any(has) as u64;
        }
    }
    Ok(TauExperiment {
        field: f.info(),
        triangles,
        collinear,
        entries: rows
            .into_iter()
            .map(|((class, group, psl), row)| TauEntry { class, group, psl, row })
            .collect(),
    })
}

/// Parabolic subgroups of a triangle's group, for building its geometry.
pub fn parabolics(field: &Field, rec: &TriangleRecord) -> [ElementSet; 3] {
    maximal_parabolics(field, [&rec.involutions[0], &rec.involutions[1], &rec.involutions[2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::build_coset_geometry;
    use crate::gf::build_field;
    use crate::grp::DEFAULT_BUDGET;

    fn plane(p: u32, n: u32) -> Plane {
        Plane::new(build_field(p, n, None).unwrap())
    }

    #[test]
    fn invalid_powers() {
        let f = build_field(27, 1, None).err();
        assert!(f.is_some());
        let f = build_field(3, 3, None).unwrap();
        assert_eq!(frobenius_collineation(&f, 0), Err(CorrError::InvalidPower { k: 0, n: 3 }));
        assert_eq!(frobenius_collineation(&f, 3), Err(CorrError::InvalidPower { k: 3, n: 3 }));
        let f5 = build_field(5, 1, None).unwrap();
        assert!(frobenius_collineation(&f5, 1).is_err());
    }

    #[test]
    fn tau_has_order_three_on_points() {
        let pl = plane(3, 3);
        let f = pl.field();
        let tau = frobenius_collineation(f, 1).unwrap();
        assert_eq!(tau.order(f), 3);
        assert_eq!(pl.points().len(), 757);
        for x in pl.points() {
            let y = tau.apply(f, &tau.apply(f, &tau.apply(f, x)));
            assert_eq!(y, *x);
        }
        let image: std::collections::BTreeSet<Point> = pl.conic_points().iter().map(|x| tau.apply(f, x)).collect();
        let conic: std::collections::BTreeSet<Point> = pl.conic_points().iter().copied().collect();
        assert_eq!(conic.len(), 28);
        assert_eq!(image, conic);
    }

    #[test]
    fn order_two_over_quadratic_field() {
        let pl = plane(3, 2);
        let tau = frobenius_collineation(pl.field(), 1).unwrap();
        assert_eq!(tau.order(pl.field()), 2);
        let a = pl.conic_points().iter().find(|x| tau.apply(pl.field(), x) != **x).unwrap();
        assert_eq!(tau_triangle(&pl, a, &tau, DEFAULT_BUDGET).unwrap_err(), CorrError::NotOrderThree(2));
    }

    #[test]
    fn collineation_preserves_incidence() {
        let pl = plane(3, 3);
        let f = pl.field();
        let tau = frobenius_collineation(f, 2).unwrap();
        for l in pl.lines().iter().step_by(37) {
            let m = tau.apply_line(f, l);
            for x in pl.points_on(l) {
                assert!(pl.incident(&tau.apply(f, &x), &m));
            }
        }
    }

    #[test]
    fn tau_triangle_is_an_orbit() {
        let pl = plane(3, 3);
        let f = pl.field();
        let tau = frobenius_collineation(f, 1).unwrap();
        let fixed = pl.conic_points().iter().find(|x| tau.apply(f, x) == **x).unwrap();
        assert_eq!(tau_triangle(&pl, fixed, &tau, DEFAULT_BUDGET).unwrap_err(), CorrError::FixedConicPoint(*fixed));
        let a = pl.conic_points().iter().find(|x| tau.apply(f, x) != **x).unwrap();
        let rec = tau_triangle(&pl, a, &tau, DEFAULT_BUDGET).unwrap();
        let [p, q, r] = rec.centers;
        assert_eq!(tau.apply(f, &p), q);
        assert_eq!(tau.apply(f, &q), r);
        assert_eq!(tau.apply(f, &r), p);
        assert_eq!(rec.group_id.order, 24);
        assert_eq!(rec.group_id.label(), "PGL(2,3)");
        // τ(a_P) = a_τ(P): entrywise Frobenius of the matrices.
        for i in 0..3 {
            let img = frobenius_matrix(f, rec.involutions[i].map(), 1);
            assert_eq!(img, *rec.involutions[(i + 1) % 3].map());
        }
    }

    #[test]
    fn triality_check_q27() {
        let pl = plane(3, 3);
        let rep = triality_projectivity_check(&pl, DEFAULT_BUDGET).unwrap();
        assert_eq!((rep.group_order, rep.checks, rep.matches), (24, 24, 1));
        assert!(rep.verified);
        assert_eq!(rep.sigma, [1, 2, 0]);
    }

    #[test]
    fn witnesses_form_a_subgroup_and_preserve_incidence() {
        for p in [3u32, 5, 7] {
            let pl = plane(p, 1);
            let c = pl.conic_points();
            let rec = construct_tangent_triangle(&pl, &c[0], &c[1], &c[2], DEFAULT_BUDGET).unwrap();
            let f = pl.field();
            let gens = [&rec.involutions[0], &rec.involutions[1], &rec.involutions[2]];
            let maps: Vec<Projectivity> = gens.iter().map(|x| *x.map()).collect();
            let h = closure(f, &maps, DEFAULT_BUDGET).unwrap();
            let ws = inner_witnesses(f, &h, gens);
            assert_eq!(ws[0].g, Some(Projectivity::IDENTITY));
            let sigmas: Vec<[usize; 3]> = ws.iter().map(|w| w.sigma).collect();
            for a in &sigmas {
                for b in &sigmas {
                    let ab = [a[b[0]], a[b[1]], a[b[2]]];
                    assert!(sigmas.contains(&ab));
                }
            }
            let sub = parabolics(f, &rec);
            let geom = build_coset_geometry(f, &h, [&sub[0], &sub[1], &sub[2]]).unwrap();
            for w in &ws {
                let img = correlation_action(f, &geom, &h, w).unwrap();
                for [i, a, j, b] in geom.incidence() {
                    assert!(geom.incident(w.sigma[i], img[i][a], w.sigma[j], img[j][b]));
                }
            }
        }
    }
}
