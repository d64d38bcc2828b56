//! PG(2,q) with the conic x0*x2 = x1^2 and its polarity.

use std::collections::HashMap;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::gf::{Fe, Field};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlaneError {
    #[error("points coincide")]
    CoincidentPoints,
    #[error("lines coincide")]
    CoincidentLines,
    #[error("the zero vector is not a projective point")]
    ZeroVector,
    #[error("cannot parse triple {0:?}")]
    Parse(String),
}

/// Homogeneous coordinates scaled so the first nonzero entry is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point(pub [Fe; 3]);

/// Line coordinates, normalized the same way as points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Line(pub [Fe; 3]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum LineClass {
    Tangent,
    Secant,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PointClass {
    OnConic,
    Exterior,
    Interior,
}

fn fmt_triple(v: &[Fe; 3], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "[{},{},{}]", v[0], v[1], v[2])
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_triple(&self.0, f)
    }
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_triple(&self.0, f)
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.0[0].0, self.0[1].0, self.0[2].0].serialize(s)
    }
}

impl Serialize for Line {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.0[0].0, self.0[1].0, self.0[2].0].serialize(s)
    }
}

/// Scales a nonzero triple so its first nonzero entry is 1.
pub fn normalize(field: &Field, v: [Fe; 3]) -> Option<[Fe; 3]> {
    let lead = v.iter().copied().find(|x| !x.is_zero())?;
    if lead == Fe::ONE {
        return Some(v);
    }
    let inv = field.inv_nonzero(lead);
    Some([field.mul(v[0], inv), field.mul(v[1], inv), field.mul(v[2], inv)])
}

pub fn cross(field: &Field, a: &[Fe; 3], b: &[Fe; 3]) -> [Fe; 3] {
    let m = |x, y| field.mul(x, y);
    [
        field.sub(m(a[1], b[2]), m(a[2], b[1])),
        field.sub(m(a[2], b[0]), m(a[0], b[2])),
        field.sub(m(a[0], b[1]), m(a[1], b[0])),
    ]
}

pub fn dot(field: &Field, a: &[Fe; 3], b: &[Fe; 3]) -> Fe {
    let s = field.add(field.mul(a[0], b[0]), field.mul(a[1], b[1]));
    field.add(s, field.mul(a[2], b[2]))
}

/// Parses "[a,b,c]" with canonical element encodings and normalizes.
pub fn parse_triple(field: &Field, s: &str) -> Result<[Fe; 3], PlaneError> {
    let err = || PlaneError::Parse(s.to_string());
    let inner = s.trim().strip_prefix('[').and_then(|t| t.strip_suffix(']')).ok_or_else(err)?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(err());
    }
    let mut v = [Fe::ZERO; 3];
    for (slot, part) in v.iter_mut().zip(parts) {
        let e: u32 = part.parse().map_err(|_| err())?;
        *slot = field.element(e).ok_or_else(err)?;
    }
    normalize(field, v).ok_or(PlaneError::ZeroVector)
}

/// The plane together with its fixed conic and precomputed incidence data.
/// Immutable after construction.
pub struct Plane {
    field: Field,
    points: Vec<Point>,
    point_index: HashMap<Point, usize>,
    lines: Vec<Line>,
    line_index: HashMap<Line, usize>,
    conic: Vec<Point>,
    off_conic: Vec<Point>,
    point_class: Vec<PointClass>,
    line_class: Vec<LineClass>,
}

impl fmt::Debug for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Plane").field("field", &self.field).finish_non_exhaustive()
    }
}

impl Plane {
    pub fn new(field: Field) -> Plane {
        let q = field.q();
        let mut triples = Vec::with_capacity((q * q + q + 1) as usize);
        triples.push([Fe::ZERO, Fe::ZERO, Fe::ONE]);
        for b in field.elements() {
            triples.push([Fe::ZERO, Fe::ONE, b]);
        }
        for a in field.elements() {
            for b in field.elements() {
                triples.push([Fe::ONE, a, b]);
            }
        }
        triples.sort();
        let points: Vec<Point> = triples.iter().map(|&t| Point(t)).collect();
        let lines: Vec<Line> = triples.iter().map(|&t| Line(t)).collect();
        let point_index = points.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let line_index = lines.iter().enumerate().map(|(i, &l)| (l, i)).collect();

        let mut plane = Plane {
            field,
            points,
            point_index,
            lines,
            line_index,
            conic: Vec::new(),
            off_conic: Vec::new(),
            point_class: Vec::new(),
            line_class: Vec::new(),
        };
        let (conic, off): (Vec<Point>, Vec<Point>) =
            plane.points.iter().partition(|p| plane.on_conic(p));
        plane.conic = conic;
        plane.off_conic = off;

        let line_class = plane
            .lines
            .iter()
            .map(|l| {
                let hits = plane.conic.iter().filter(|c| plane.incident(c, l)).count();
                match hits {
                    0 => LineClass::Exterior,
                    1 => LineClass::Tangent,
                    2 => LineClass::Secant,
                    _ => unreachable!("a conic meets a line in at most two points"),
                }
            })
            .collect();
        plane.line_class = line_class;

        let mut point_class = vec![PointClass::Interior; plane.points.len()];
        for c in &plane.conic {
            let tangent = plane.polar(c);
            for x in plane.points_on(&tangent) {
                point_class[plane.point_index[&x]] = PointClass::Exterior;
            }
        }
        for c in &plane.conic {
            point_class[plane.point_index[c]] = PointClass::OnConic;
        }
        plane.point_class = point_class;
        plane
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn q(&self) -> u32 {
        self.field.q()
    }

    /// All points in canonical (lexicographic encoding) order.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    /// The q+1 conic points in canonical order.
    pub fn conic_points(&self) -> &[Point] {
        &self.conic
    }

    /// The q^2 points off the conic in canonical order.
    pub fn off_conic_points(&self) -> &[Point] {
        &self.off_conic
    }

    pub fn point_index(&self, p: &Point) -> Option<usize> {
        self.point_index.get(p).copied()
    }

    pub fn line_index(&self, l: &Line) -> Option<usize> {
        self.line_index.get(l).copied()
    }

    pub fn point(&self, v: [Fe; 3]) -> Result<Point, PlaneError> {
        normalize(&self.field, v).map(Point).ok_or(PlaneError::ZeroVector)
    }

    pub fn line(&self, v: [Fe; 3]) -> Result<Line, PlaneError> {
        normalize(&self.field, v).map(Line).ok_or(PlaneError::ZeroVector)
    }

    pub fn parse_point(&self, s: &str) -> Result<Point, PlaneError> {
        parse_triple(&self.field, s).map(Point)
    }

    /// Q(x) = x0*x2 - x1^2.
    pub fn quadratic_form(&self, x: &[Fe; 3]) -> Fe {
        let f = &self.field;
        f.sub(f.mul(x[0], x[2]), f.mul(x[1], x[1]))
    }

    /// B(x,y) = x0*y2 + x2*y0 - 2*x1*y1, so that B(x,x) = 2Q(x).
    pub fn bilinear_form(&self, x: &[Fe; 3], y: &[Fe; 3]) -> Fe {
        let f = &self.field;
        let two = f.from_int(2);
        let s = f.add(f.mul(x[0], y[2]), f.mul(x[2], y[0]));
        f.sub(s, f.mul(two, f.mul(x[1], y[1])))
    }

    pub fn on_conic(&self, p: &Point) -> bool {
        self.quadratic_form(&p.0).is_zero()
    }

    pub fn incident(&self, p: &Point, l: &Line) -> bool {
        dot(&self.field, &p.0, &l.0).is_zero()
    }

    pub fn line_through(&self, p: &Point, q: &Point) -> Result<Line, PlaneError> {
        if p == q {
            return Err(PlaneError::CoincidentPoints);
        }
        let c = cross(&self.field, &p.0, &q.0);
        self.line(c)
    }

    pub fn meet(&self, l: &Line, m: &Line) -> Result<Point, PlaneError> {
        if l == m {
            return Err(PlaneError::CoincidentLines);
        }
        self.point(cross(&self.field, &l.0, &m.0))
    }

    pub fn collinear(&self, a: &Point, b: &Point, c: &Point) -> bool {
        let f = &self.field;
        dot(f, &cross(f, &a.0, &b.0), &c.0).is_zero()
    }

    /// Line with coordinates B(P, ·). For P on the conic, the tangent at P.
    pub fn polar(&self, p: &Point) -> Line {
        let f = &self.field;
        let x = p.0;
        Line(normalize(f, [x[2], f.mul(f.from_int(-2), x[1]), x[0]]).expect("polarity is nondegenerate"))
    }

    pub fn pole(&self, l: &Line) -> Point {
        let f = &self.field;
        let v = l.0;
        let minus_half = f.neg(f.inv_nonzero(f.from_int(2)));
        Point(normalize(f, [v[2], f.mul(minus_half, v[1]), v[0]]).expect("polarity is nondegenerate"))
    }

    /// Two points spanning the line.
    fn basis(&self, l: &Line) -> (Point, Point) {
        let f = &self.field;
        let units = [
            [Fe::ONE, Fe::ZERO, Fe::ZERO],
            [Fe::ZERO, Fe::ONE, Fe::ZERO],
            [Fe::ZERO, Fe::ZERO, Fe::ONE],
        ];
        let mut found: Vec<Point> = Vec::with_capacity(2);
        for u in &units {
            if let Some(v) = normalize(f, cross(f, &l.0, u)) {
                let pt = Point(v);
                if !found.contains(&pt) {
                    found.push(pt);
                }
                if found.len() == 2 {
                    break;
                }
            }
        }
        (found[0], found[1])
    }

    /// The q+1 points of a line.
    pub fn points_on(&self, l: &Line) -> Vec<Point> {
        let f = &self.field;
        let (u, v) = self.basis(l);
        let mut out = Vec::with_capacity(self.q() as usize + 1);
        out.push(v);
        for t in f.elements() {
            let w = [
                f.add(u.0[0], f.mul(t, v.0[0])),
                f.add(u.0[1], f.mul(t, v.0[1])),
                f.add(u.0[2], f.mul(t, v.0[2])),
            ];
            out.push(Point(normalize(f, w).expect("independent basis")));
        }
        out
    }

    pub fn lines_through(&self, p: &Point) -> Vec<Line> {
        // Dual of points_on.
        self.points_on(&Line(p.0)).into_iter().map(|x| Line(x.0)).collect()
    }

    pub fn classify_line(&self, l: &Line) -> LineClass {
        match self.line_index(l) {
            Some(i) => self.line_class[i],
            None => {
                let l = self.line(l.0).expect("nonzero line");
                self.line_class[self.line_index[&l]]
            }
        }
    }

    pub fn classify_point(&self, p: &Point) -> PointClass {
        match self.point_index(p) {
            Some(i) => self.point_class[i],
            None => {
                let p = self.point(p.0).expect("nonzero point");
                self.point_class[self.point_index[&p]]
            }
        }
    }

    pub fn conic_points_on(&self, l: &Line) -> Vec<Point> {
        self.conic.iter().copied().filter(|c| self.incident(c, l)).collect()
    }

    pub fn tangents_through(&self, p: &Point) -> usize {
        self.conic.iter().filter(|c| self.incident(p, &self.polar(c))).count()
    }

    /// The conic point with parameter t, (1, t, t^2); `None` gives (0,0,1).
    pub fn conic_point(&self, t: Option<Fe>) -> Point {
        match t {
            Some(t) => Point([Fe::ONE, t, self.field.mul(t, t)]),
            None => Point([Fe::ZERO, Fe::ZERO, Fe::ONE]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::build_field;

    fn plane(p: u32, n: u32) -> Plane {
        Plane::new(build_field(p, n, None).unwrap())
    }

    /// Polar of an off-conic point via two secants through it: join of the
    /// two diagonal points of the inscribed quadrangle.
    fn polar_by_secants(pl: &Plane, p: &Point) -> Line {
        let secants: Vec<Line> = pl
            .lines_through(p)
            .into_iter()
            .filter(|l| pl.classify_line(l) == LineClass::Secant)
            .take(2)
            .collect();
        let a = pl.conic_points_on(&secants[0]);
        let b = pl.conic_points_on(&secants[1]);
        let (p1, q1, p2, q2) = (a[0], a[1], b[0], b[1]);
        let d1 = pl
            .meet(&pl.line_through(&q1, &q2).unwrap(), &pl.line_through(&p1, &p2).unwrap())
            .unwrap();
        let d2 = pl
            .meet(&pl.line_through(&q1, &p2).unwrap(), &pl.line_through(&p1, &q2).unwrap())
            .unwrap();
        pl.line_through(&d1, &d2).unwrap()
    }

    #[test]
    fn line_through_axes() {
        let pl = plane(3, 1);
        let a = pl.point([Fe(1), Fe(0), Fe(0)]).unwrap();
        let b = pl.point([Fe(0), Fe(1), Fe(0)]).unwrap();
        assert_eq!(pl.line_through(&a, &b).unwrap(), Line([Fe(0), Fe(0), Fe(1)]));
        assert_eq!(pl.line_through(&a, &a), Err(PlaneError::CoincidentPoints));
    }

    #[test]
    fn line_through_contains_both_points() {
        use rand::{Rng, SeedableRng};
        let pl = plane(5, 1);
        let pts = pl.points();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut count = 0;
        while count < 100 {
            let a = pts[rng.gen_range(0..pts.len())];
            let b = pts[rng.gen_range(0..pts.len())];
            if a == b {
                continue;
            }
            let l = pl.line_through(&a, &b).unwrap();
            assert!(pl.incident(&a, &l) && pl.incident(&b, &l));
            let on = pl.points_on(&l);
            assert_eq!(on.len(), 6);
            assert!(on.contains(&a) && on.contains(&b));
            count += 1;
        }
    }

    #[test]
    fn counts_and_incidence() {
        for (p, n) in [(3, 1), (5, 1), (7, 1), (3, 2)] {
            let pl = plane(p, n);
            let q = pl.q() as usize;
            assert_eq!(pl.points().len(), q * q + q + 1);
            assert_eq!(pl.lines().len(), q * q + q + 1);
            for l in pl.lines() {
                let on = pl.points_on(l);
                assert_eq!(on.len(), q + 1);
                assert!(on.iter().all(|x| pl.incident(x, l)));
                let distinct: std::collections::HashSet<_> = on.iter().collect();
                assert_eq!(distinct.len(), q + 1);
            }
            for x in pl.points() {
                assert_eq!(pl.lines_through(x).len(), q + 1);
                assert!(pl.lines_through(x).iter().all(|l| pl.incident(x, l)));
            }
        }
    }

    #[test]
    fn conic_is_an_arc() {
        for (p, n) in [(3, 1), (5, 1), (7, 1), (3, 2), (11, 1), (13, 1), (5, 2), (3, 3)] {
            let pl = plane(p, n);
            let c = pl.conic_points();
            assert_eq!(c.len() as u32, pl.q() + 1);
            let param: std::collections::HashSet<Point> = pl
                .field()
                .elements()
                .map(|t| pl.conic_point(Some(t)))
                .chain(std::iter::once(pl.conic_point(None)))
                .collect();
            assert_eq!(param, c.iter().copied().collect());
            for i in 0..c.len() {
                for j in i + 1..c.len() {
                    let l = pl.line_through(&c[i], &c[j]).unwrap();
                    assert_eq!(pl.conic_points_on(&l).len(), 2);
                }
            }
        }
    }

    #[test]
    fn bilinear_form_doubles_quadratic_form() {
        let pl = plane(3, 2);
        let two = pl.field().from_int(2);
        for x in pl.points() {
            assert_eq!(pl.bilinear_form(&x.0, &x.0), pl.field().mul(two, pl.quadratic_form(&x.0)));
        }
    }

    #[test]
    fn polarity_is_an_involution_preserving_incidence() {
        for (p, n) in [(7, 1), (3, 2)] {
            let pl = plane(p, n);
            for x in pl.points() {
                assert_eq!(pl.pole(&pl.polar(x)), *x);
                assert_eq!(pl.incident(x, &pl.polar(x)), pl.on_conic(x));
            }
            for l in pl.lines() {
                assert_eq!(pl.polar(&pl.pole(l)), *l);
            }
            for x in pl.points().iter().step_by(5) {
                for l in pl.lines() {
                    assert_eq!(pl.incident(x, l), pl.incident(&pl.pole(l), &pl.polar(x)));
                }
            }
        }
    }

    #[test]
    fn polar_of_conic_point_is_tangent() {
        let pl = plane(5, 1);
        for c in pl.conic_points() {
            let t = pl.polar(c);
            assert_eq!(pl.classify_line(&t), LineClass::Tangent);
            assert_eq!(pl.conic_points_on(&t), vec![*c]);
        }
    }

    #[test]
    fn polar_matches_secant_construction() {
        // At q=3 an exterior point lies on a single secant, so start at 5.
        for (p, n) in [(5, 1), (7, 1), (3, 2)] {
            let pl = plane(p, n);
            for x in pl.off_conic_points() {
                assert_eq!(polar_by_secants(&pl, x), pl.polar(x), "q={} P={x}", pl.q());
            }
        }
    }

    #[test]
    fn line_class_counts() {
        for (p, n) in [(3, 1), (5, 1), (7, 1), (3, 2)] {
            let pl = plane(p, n);
            let q = pl.q() as usize;
            let count = |c| pl.lines().iter().filter(|l| pl.classify_line(l) == c).count();
            assert_eq!(count(LineClass::Tangent), q + 1);
            assert_eq!(count(LineClass::Secant), q * (q + 1) / 2);
            assert_eq!(count(LineClass::Exterior), q * (q - 1) / 2);
        }
        let pl = plane(3, 1);
        let count = |c| pl.lines().iter().filter(|l| pl.classify_line(l) == c).count();
        assert_eq!((count(LineClass::Tangent), count(LineClass::Secant), count(LineClass::Exterior)), (4, 6, 3));
    }

    #[test]
    fn point_class_counts_and_tangent_histogram() {
        for (p, n) in [(3, 1), (5, 1), (7, 1), (3, 2)] {
            let pl = plane(p, n);
            let q = pl.q() as usize;
            let count = |c| pl.points().iter().filter(|x| pl.classify_point(x) == c).count();
            assert_eq!(count(PointClass::OnConic), q + 1);
            assert_eq!(count(PointClass::Exterior), q * (q + 1) / 2);
            assert_eq!(count(PointClass::Interior), q * (q - 1) / 2);
        }
        let pl = plane(7, 1);
        for x in pl.off_conic_points() {
            let expected = match pl.classify_point(x) {
                PointClass::Exterior => 2,
                PointClass::Interior => 0,
                PointClass::OnConic => unreachable!(),
            };
            assert_eq!(pl.tangents_through(x), expected);
        }
        let c = pl.conic_points();
        let meet = pl.meet(&pl.polar(&c[0]), &pl.polar(&c[1])).unwrap();
        assert_eq!(pl.classify_point(&meet), PointClass::Exterior);
    }

    #[test]
    fn parse_and_display() {
        let pl = plane(5, 1);
        let p = pl.parse_point("[2, 4, 1]").unwrap();
        assert_eq!(p.to_string(), "[1,2,3]");
        assert_eq!(pl.parse_point("[0,0,0]"), Err(PlaneError::ZeroVector));
        assert!(matches!(pl.parse_point("[5,0,0]"), Err(PlaneError::Parse(_))));
        assert!(matches!(pl.parse_point("1,2,3"), Err(PlaneError::Parse(_))));
    }
}
