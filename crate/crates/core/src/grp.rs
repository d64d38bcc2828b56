//! Finite groups of projectivities: closure, products, intersections and
//! identification against the subgroups of PGL(2,q).

use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::gf::Field;
use crate::perspectivity::{involution_from_center, Projectivity};
use crate::plane::{Line, Plane};

/// Default closure budget, enough for PGL(2,q) with q up to 121.
pub const DEFAULT_BUDGET: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrpError {
    #[error("closure exceeded the budget of {budget} elements ({partial} found)")]
    BudgetExceeded { budget: usize, partial: usize },
    #[error("element set is not a group")]
    NotClosed,
}

/// A set of projectivities in deterministic insertion order, with an index
/// for O(1) membership.
#[derive(Debug, Clone, Default)]
pub struct ElementSet {
    elements: Vec<Projectivity>,
    index: FxHashMap<Projectivity, u32>,
    generators: Vec<Projectivity>,
}

impl PartialEq for ElementSet {
    /// Set equality; order and generators are ignored.
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.elements.iter().all(|x| other.contains(x))
    }
}

impl Eq for ElementSet {}

impl ElementSet {
    /// Builds a set, dropping repeats but keeping first-seen order.
    pub fn from_elements<I: IntoIterator<Item = Projectivity>>(
        elements: I,
        generators: Vec<Projectivity>,
    ) -> ElementSet {
        let mut set = ElementSet { generators, ..ElementSet::default() };
        for x in elements {
            set.insert(x);
        }
        set
    }

    fn insert(&mut self, x: Projectivity) -> bool {
        if self.index.contains_key(&x) {
            return false;
        }
        self.index.insert(x, self.elements.len() as u32);
        self.elements.push(x);
        true
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, x: &Projectivity) -> bool {
        self.index.contains_key(x)
    }

    pub fn index_of(&self, x: &Projectivity) -> Option<usize> {
        self.index.get(x).map(|&i| i as usize)
    }

    pub fn elements(&self) -> &[Projectivity] {
        &self.elements
    }

    pub fn generators(&self) -> &[Projectivity] {
        &self.generators
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Projectivity> {
        self.elements.iter()
    }

    pub fn is_subset(&self, other: &ElementSet) -> bool {
        self.elements.iter().all(|x| other.contains(x))
    }

    /// g * self * g^-1, element by element.
    pub fn conjugate(&self, field: &Field, g: &Projectivity) -> ElementSet {
        let gi = g.inverse(field);
        let c = |x: &Projectivity| g.compose(field, x).compose(field, &gi);
        ElementSet::from_elements(self.elements.iter().map(c), self.generators.iter().map(c).collect())
    }

    /// Checks that the set is a group. With generators, every element must
    /// be reachable from the identity through them; otherwise the set must
    /// be closed under all pairwise products.
    pub fn is_closed(&self, field: &Field) -> bool {
        if !self.contains(&Projectivity::IDENTITY) {
            return false;
        }
        if self.generators.is_empty() {
            return self
                .elements
                .iter()
                .all(|a| self.elements.iter().all(|b| self.contains(&a.compose(field, b))));
        }
        if !self.generators.iter().all(|g| self.contains(g)) {
            return false;
        }
        match closure(field, &self.generators, self.len()) {
            Ok(h) => h.len() == self.len(),
            Err(_) => false,
        }
    }
}

/// Breadth-first closure: elements are discovered by right multiplication
/// with the generators, so the order is deterministic.
pub fn closure(field: &Field, generators: &[Projectivity], budget: usize) -> Result<ElementSet, GrpError> {
    let mut set = ElementSet { generators: generators.to_vec(), ..ElementSet::default() };
    set.insert(Projectivity::IDENTITY);
    let mut head = 0;
    while head < set.elements.len() {
        let x = set.elements[head];
        head += 1;
        for g in generators {
            let y = x.compose(field, g);
            if !set.contains(&y) {
                if set.len() >= budget {
                    return Err(GrpError::BudgetExceeded { budget, partial: set.len() });
                }
                set.insert(y);
            }
        }
    }
    Ok(set)
}

/// { a*b : a in A, b in B }.
pub fn set_product(field: &Field, a: &ElementSet, b: &ElementSet) -> ElementSet {
    let mut out = ElementSet::default();
    for x in a.iter() {
        for y in b.iter() {
            out.insert(x.compose(field, y));
        }
    }
    out
}

/// Elements of A that also lie in B, in A's order.
pub fn intersect(a: &ElementSet, b: &ElementSet) -> ElementSet {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut keep: Vec<Projectivity> = small.iter().copied().filter(|x| large.contains(x)).collect();
    if !std::ptr::eq(small, a) {
        keep.sort_by_key(|x| a.index_of(x));
    }
    ElementSet::from_elements(keep, Vec::new())
}

/// The full conic stabilizer G, generated by a few involutions chosen in
/// canonical center order.
pub fn conic_group(plane: &Plane, budget: usize) -> Result<ElementSet, GrpError> {
    let f = plane.field();
    let q = plane.q() as usize;
    let target = q * q * q - q;
    let mut gens: Vec<Projectivity> = Vec::new();
    let mut g = closure(f, &gens, budget)?;
    for p in plane.off_conic_points() {
        if g.len() == target {
            break;
        }
        let a = *involution_from_center(plane, p).expect("off-conic center").map();
        if g.contains(&a) {
            continue;
        }
        gens.push(a);
        g = closure(f, &gens, budget)?;
    }
    Ok(g)
}

/// Stabilizer of a line inside a group, by filtering.
pub fn line_stabilizer(field: &Field, group: &ElementSet, l: &Line) -> ElementSet {
    ElementSet::from_elements(group.iter().copied().filter(|g| g.apply_line(field, l) == *l), Vec::new())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupTag {
    Trivial,
    Cyclic(u32),
    Klein4,
    Dihedral(u32),
    C2xDihedral(u32),
    SubAGL,
    PSL,
    PGL,
    A4,
    A5,
    S4,
    Unknown,
}

impl GroupTag {
    pub fn name(&self) -> String {
        match self {
            GroupTag::Trivial => "Trivial".into(),
            GroupTag::Cyclic(m) => format!("Cyclic({m})"),
            GroupTag::Klein4 => "Klein4".into(),
            GroupTag::Dihedral(m) => format!("Dihedral({m})"),
            GroupTag::C2xDihedral(m) => format!("C2xDihedral({m})"),
            GroupTag::SubAGL => "SubAGL".into(),
            GroupTag::PSL => "PSL".into(),
            GroupTag::PGL => "PGL".into(),
            GroupTag::A4 => "A4".into(),
            GroupTag::A5 => "A5".into(),
            GroupTag::S4 => "S4".into(),
            GroupTag::Unknown => "Unknown".into(),
        }
    }
}

impl Serialize for GroupTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GroupId {
    pub tag: GroupTag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q0: Option<u32>,
    pub order: usize,
    pub max_elt_order: u32,
    pub n_involutions: usize,
}

impl GroupId {
    /// Short label such as "PGL(2,3)" or "Dihedral(4)".
    pub fn label(&self) -> String {
        match (self.tag, self.q0) {
            (GroupTag::PSL, Some(q0)) => format!("PSL(2,{q0})"),
            (GroupTag::PGL, Some(q0)) => format!("PGL(2,{q0})"),
            (tag, _) => tag.name(),
        }
    }
}

/// Order statistics of a closed set: (max element order, involution count).
fn order_statistics(field: &Field, h: &ElementSet) -> (u32, usize) {
    let mut max = 1;
    let mut inv = 0;
    for x in h.iter() {
        let o = x.order(field);
        max = max.max(o);
        if o == 2 {
            inv += 1;
        }
    }
    (max, inv)
}

/// Matches a closed group against the subgroup families of PGL(2,q).
///
/// Subfield groups PSL(2,q0) and PGL(2,q0) take priority, so at p = 3 an
/// order-24 group is PGL(2,3) rather than S4, and at p = 5 an order-60 group
/// is PSL(2,5) rather than A5.
pub fn identify_group(h: &ElementSet, field: &Field) -> Result<GroupId, GrpError> {
    if !h.is_closed(field) {
        return Err(GrpError::NotClosed);
    }
    Ok(identify_closure(h, field))
}

/// [`identify_group`] without the closedness check, for sets returned by
/// [`closure`].
pub fn identify_closure(h: &ElementSet, field: &Field) -> GroupId {
    let (max, inv) = order_statistics(field, h);
    let order = h.len();
    let id = |tag, q0| GroupId { tag, q0, order, max_elt_order: max, n_involutions: inv };
    let (p, n, q) = (field.p() as usize, field.n(), field.q() as usize);

    if order == 1 {
        return id(GroupTag::Trivial, None);
    }
    if max as usize == order {
        return id(GroupTag::Cyclic(max), None);
    }
    for k in (1..=n).filter(|k| n % k == 0) {
        let q0 = p.pow(k);
        let pgl = q0 * (q0 * q0 - 1);
        if order == pgl && inv == q0 * q0 && max as usize == p.max(q0 + 1) {
            return id(GroupTag::PGL, Some(q0 as u32));
        }
        let psl_inv = if q0 % 4 == 1 { q0 * (q0 + 1) / 2 } else { q0 * (q0 - 1) / 2 };
        if order == pgl / 2 && inv == psl_inv && max as usize == p.max((q0 + 1) / 2) {
            return id(GroupTag::PSL, Some(q0 as u32));
        }
    }
    match (order, inv, max) {
        (4, 3, 2) => return id(GroupTag::Klein4, None),
        (12, 3, 3) => return id(GroupTag::A4, None),
        (24, 9, 4) => return id(GroupTag::S4, None),
        (60, 15, 5) => return id(GroupTag::A5, None),
        _ => {}
    }
    if order % 2 == 0 {
        let m = order / 2;
        let dihedral_inv = if m % 2 == 1 { m } else { m + 1 };
        if inv == dihedral_inv && max as usize == m {
            return id(GroupTag::Dihedral(m as u32), None);
        }
    }
    if order % 4 == 0 {
        let m = order / 4;
        if m % 2 == 0 && inv == 2 * m + 3 && max as usize == m {
            return id(GroupTag::C2xDihedral(m as u32), None);
        }
    }
    // p^k : C_d inside the stabilizer of a tangent line.
    let mut pk = 1;
    let mut d = order;
    while d % p == 0 {
        d /= p;
        pk *= p;
    }
    if pk > 1 && d > 1 && (q - 1) % d == 0 && (pk > p || d > 2) {
        let expect_inv = if d % 2 == 0 { pk } else { 0 };
        if inv == expect_inv && max as usize == p.max(d) {
            return id(GroupTag::SubAGL, None);
        }
    }
    id(GroupTag::Unknown, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::build_field;
    use crate::perspectivity::{in_psl, product_order, Involution};
    use crate::plane::LineClass;
    use rand::{Rng, SeedableRng};

    fn plane(p: u32, n: u32) -> Plane {
        Plane::new(build_field(p, n, None).unwrap())
    }

    fn involutions(pl: &Plane) -> Vec<Involution> {
        pl.off_conic_points().iter().map(|p| involution_from_center(pl, p).unwrap()).collect()
    }

    fn tangent_generators(pl: &Plane) -> Vec<Projectivity> {
        let c = pl.conic_points();
        let t: Vec<Line> = c[..3].iter().map(|x| pl.polar(x)).collect();
        let centers = [pl.meet(&t[0], &t[1]).unwrap(), pl.meet(&t[1], &t[2]).unwrap(), pl.meet(&t[0], &t[2]).unwrap()];
        centers.iter().map(|x| *involution_from_center(pl, x).unwrap().map()).collect()
    }

    #[test]
    fn identity_closure() {
        let pl = plane(5, 1);
        let h = closure(pl.field(), &[Projectivity::IDENTITY], DEFAULT_BUDGET).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(identify_group(&h, pl.field()).unwrap().tag, GroupTag::Trivial);
    }

    #[test]
    fn dihedral_of_order_eight() {
        let pl = plane(5, 1);
        let f = pl.field();
        let inv = involutions(&pl);
        let (a, b) = inv
            .iter()
            .flat_map(|a| inv.iter().map(move |b| (a, b)))
            .find(|(a, b)| product_order(f, a, b) == 4)
            .unwrap();
        let h = closure(f, &[*a.map(), *b.map()], DEFAULT_BUDGET).unwrap();
        assert_eq!(h.len(), 8);
        let r = a.map().compose(f, b.map());
        let mut expected = Vec::new();
        let mut rk = Projectivity::IDENTITY;
        for _ in 0..4 {
            expected.push(rk);
            expected.push(rk.compose(f, a.map()));
            rk = rk.compose(f, &r);
        }
        assert_eq!(h, ElementSet::from_elements(expected, Vec::new()));
        assert_eq!(identify_group(&h, f).unwrap().tag, GroupTag::Dihedral(4));
    }

    #[test]
    fn budget_is_enforced() {
        let pl = plane(5, 1);
        let gens = tangent_generators(&pl);
        assert_eq!(
            closure(pl.field(), &gens, 10).unwrap_err(),
            GrpError::BudgetExceeded { budget: 10, partial: 10 }
        );
    }

    #[test]
    fn tangent_closures() {
        for (p, n, order, tag, q0) in [
            (3, 1, 24, GroupTag::PGL, 3),
            (5, 1, 60, GroupTag::PSL, 5),
            (3, 2, 24, GroupTag::PGL, 3),
        ] {
            let pl = plane(p, n);
            let h = closure(pl.field(), &tangent_generators(&pl), DEFAULT_BUDGET).unwrap();
            assert_eq!(h.len(), order);
            let id = identify_group(&h, pl.field()).unwrap();
            assert_eq!((id.tag, id.q0), (tag, Some(q0)));
        }
    }

    #[test]
    fn set_products() {
        let pl = plane(5, 1);
        let f = pl.field();
        let inv = involutions(&pl);
        let e = closure(f, &[], 1).unwrap();
        let a = closure(f, &[*inv[0].map(), *inv[7].map()], DEFAULT_BUDGET).unwrap();
        assert_eq!(set_product(f, &a, &e), a);
        assert_eq!(set_product(f, &a, &a), a);
        // Two dihedral groups sharing exactly one involution.
        let mut checked = 0;
        for b in &inv[1..] {
            for c in &inv[1..] {
                let h2 = closure(f, &[*inv[0].map(), *b.map()], DEFAULT_BUDGET).unwrap();
                let h0 = closure(f, &[*inv[0].map(), *c.map()], DEFAULT_BUDGET).unwrap();
                let common = intersect(&h2, &h0);
                if common.len() != 2 {
                    continue;
                }
                assert_eq!(set_product(f, &h2, &h0).len(), h2.len() * h0.len() / 2);
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn stabilizer_intersections() {
        let pl = plane(5, 1);
        let f = pl.field();
        let g = conic_group(&pl, DEFAULT_BUDGET).unwrap();
        assert_eq!(g.len(), 120);
        let tangents: Vec<Line> = pl.conic_points().iter().map(|c| pl.polar(c)).collect();
        let s0 = line_stabilizer(f, &g, &tangents[0]);
        let s1 = line_stabilizer(f, &g, &tangents[1]);
        assert_eq!(s0.len(), 20);
        let common = intersect(&s0, &s1);
        assert_eq!(common.len(), 4);
        assert_eq!(identify_group(&common, f).unwrap().tag, GroupTag::Cyclic(4));
        // A tangent and a non-tangent meeting off the conic.
        let other = pl
            .lines()
            .iter()
            .find(|l| {
                pl.classify_line(l) != LineClass::Tangent
                    && !pl.on_conic(&pl.meet(l, &tangents[0]).unwrap())
            })
            .unwrap();
        assert_eq!(intersect(&s0, &line_stabilizer(f, &g, other)).len(), 2);
    }

    #[test]
    fn dihedral_law() {
        for p in [3, 5, 7] {
            let pl = plane(p, 1);
            let f = pl.field();
            let inv = involutions(&pl);
            for a in &inv {
                for b in &inv {
                    let h = closure(f, &[*a.map(), *b.map()], DEFAULT_BUDGET).unwrap();
                    let o = product_order(f, a, b) as usize;
                    let expected = if o == 1 { 2 } else { 2 * o };
                    assert_eq!(h.len(), expected);
                }
            }
        }
    }

    #[test]
    fn lagrange_spot_checks() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(27);
        for (p, n) in [(3, 1), (5, 1), (7, 1), (3, 2), (11, 1), (13, 1), (5, 2), (3, 3)] {
            let pl = plane(p, n);
            let f = pl.field();
            let inv = involutions(&pl);
            let q = pl.q() as usize;
            for _ in 0..5 {
                let gens: Vec<Projectivity> = (0..3).map(|_| *inv[rng.gen_range(0..inv.len())].map()).collect();
                let h = closure(f, &gens, DEFAULT_BUDGET).unwrap();
                assert_eq!((q * q * q - q) % h.len(), 0);
            }
        }
    }

    #[test]
    fn identification_is_conjugation_invariant() {
        let pl = plane(7, 1);
        let f = pl.field();
        let inv = involutions(&pl);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let gens: Vec<Projectivity> = (0..3).map(|_| *inv[rng.gen_range(0..inv.len())].map()).collect();
            let h = closure(f, &gens, DEFAULT_BUDGET).unwrap();
            let g = inv[rng.gen_range(0..inv.len())].map().compose(f, inv[rng.gen_range(0..inv.len())].map());
            let hc = h.conjugate(f, &g);
            assert!(hc.is_closed(f));
            assert_eq!(identify_group(&h, f).unwrap(), identify_group(&hc, f).unwrap());
        }
    }

    #[test]
    fn not_closed_is_reported() {
        let pl = plane(5, 1);
        let inv = involutions(&pl);
        let s = ElementSet::from_elements([Projectivity::IDENTITY, *inv[0].map(), *inv[1].map()], Vec::new());
        assert_eq!(identify_group(&s, pl.field()), Err(GrpError::NotClosed));
    }

    #[test]
    fn klein_four() {
        let pl = plane(7, 1);
        let f = pl.field();
        let inv = involutions(&pl);
        let a = &inv[0];
        let b = inv.iter().find(|b| *b != a && pl.incident(&b.center(), &a.axis())).unwrap();
        let h = closure(f, &[*a.map(), *b.map()], DEFAULT_BUDGET).unwrap();
        let id = identify_group(&h, f).unwrap();
        assert_eq!((id.tag, id.order, id.n_involutions), (GroupTag::Klein4, 4, 3));
    }

    #[test]
    fn psl_is_the_subgroup_of_even_words() {
        // Squares generate the index-2 subgroup PSL(2,q); its involutions
        // are exactly the ones the fixed-point test calls PSL.
        for (p, n) in [(3, 1), (5, 1), (7, 1), (3, 2)] {
            let pl = plane(p, n);
            let f = pl.field();
            let inv = involutions(&pl);
            let g = conic_group(&pl, DEFAULT_BUDGET).unwrap();
            let squares = ElementSet::from_elements(g.iter().map(|x| x.compose(f, x)), Vec::new());
            let psl = closure(f, squares.elements(), DEFAULT_BUDGET).unwrap();
            assert_eq!(psl.len() * 2, g.len());
            for a in &inv {
                assert_eq!(psl.contains(a.map()), in_psl(&pl, a));
            }
            // Parity is multiplicative.
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(p as u64);
            for _ in 0..50 {
                let a = &inv[rng.gen_range(0..inv.len())];
                let b = &inv[rng.gen_range(0..inv.len())];
                let prod = a.map().compose(f, b.map());
                assert_eq!(psl.contains(&prod), in_psl(&pl, a) == in_psl(&pl, b));
            }
            let q0 = pl.q();
            let id = identify_group(&psl, f).unwrap();
            assert_eq!((id.tag, id.q0), (GroupTag::PSL, Some(q0)));
            let id = identify_group(&g, f).unwrap();
            assert_eq!((id.tag, id.q0), (GroupTag::PGL, Some(q0)));
        }
    }

    #[test]
    fn involution_count_of_full_group() {
        let pl = plane(5, 1);
        let f = pl.field();
        let g = conic_group(&pl, DEFAULT_BUDGET).unwrap();
        let inv: std::collections::HashSet<Projectivity> =
            involutions(&pl).iter().map(|a| *a.map()).collect();
        let order_two: Vec<&Projectivity> = g.iter().filter(|x| x.order(f) == 2).collect();
        assert_eq!(order_two.len(), 25);
        assert!(order_two.iter().all(|x| inv.contains(x)));
    }
}
