//! Projectivities as canonical 3x3 matrices, and the involutions of the
//! conic stabilizer as perspectivities.

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::gf::{Fe, Field};
use crate::plane::{normalize, Line, Plane, Point};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PerspectivityError {
    #[error("center {0} lies on the conic")]
    CenterOnConic(Point),
    #[error("matrix is not an involution of the conic stabilizer")]
    NotAnInvolution,
    #[error("matrix is singular")]
    Singular,
}

/// A projectivity, stored as its matrix scaled so that the first nonzero
/// entry in row-major order is 1. Equal projectivities compare equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Projectivity([Fe; 9]);

fn mat_mul(f: &Field, a: &[Fe; 9], b: &[Fe; 9]) -> [Fe; 9] {
    let mut out = [Fe::ZERO; 9];
    for i in 0..3 {
        for j in 0..3 {
            let mut s = f.mul(a[3 * i], b[j]);
            s = f.add(s, f.mul(a[3 * i + 1], b[3 + j]));
            s = f.add(s, f.mul(a[3 * i + 2], b[6 + j]));
            out[3 * i + j] = s;
        }
    }
    out
}

fn canonical(f: &Field, mut m: [Fe; 9]) -> [Fe; 9] {
    let lead = *m.iter().find(|x| !x.is_zero()).expect("nonzero matrix");
    if lead != Fe::ONE {
        let inv = f.inv_nonzero(lead);
        for x in m.iter_mut() {
            *x = f.mul(*x, inv);
        }
    }
    m
}

/// Adjugate, so that m * adj(m) = det(m) * I.
fn adjugate(f: &Field, m: &[Fe; 9]) -> [Fe; 9] {
    let c = |r1: usize, c1: usize, r2: usize, c2: usize| {
        f.sub(f.mul(m[3 * r1 + c1], m[3 * r2 + c2]), f.mul(m[3 * r1 + c2], m[3 * r2 + c1]))
    };
    [
        c(1, 1, 2, 2),
        c(0, 2, 2, 1),
        c(0, 1, 1, 2),
        c(1, 2, 2, 0),
        c(0, 0, 2, 2),
        c(0, 2, 1, 0),
        c(1, 0, 2, 1),
        c(0, 1, 2, 0),
        c(0, 0, 1, 1),
    ]
}

fn determinant(f: &Field, m: &[Fe; 9]) -> Fe {
    let adj = adjugate(f, m);
    let s = f.add(f.mul(m[0], adj[0]), f.mul(m[1], adj[3]));
    f.add(s, f.mul(m[2], adj[6]))
}

impl Projectivity {
    pub const IDENTITY: Projectivity = Projectivity([
        Fe::ONE,
        Fe::ZERO,
        Fe::ZERO,
        Fe::ZERO,
        Fe::ONE,
        Fe::ZERO,
        Fe::ZERO,
        Fe::ZERO,
        Fe::ONE,
    ]);

    /// Row-major entries; fails on singular input.
    pub fn from_matrix(field: &Field, m: [Fe; 9]) -> Result<Projectivity, PerspectivityError> {
        if determinant(field, &m).is_zero() {
            return Err(PerspectivityError::Singular);
        }
        Ok(Projectivity(canonical(field, m)))
    }

    pub fn matrix(&self) -> &[Fe; 9] {
        &self.0
    }

    pub fn rows(&self) -> [[u32; 3]; 3] {
        let m = &self.0;
        [[m[0].0, m[1].0, m[2].0], [m[3].0, m[4].0, m[5].0], [m[6].0, m[7].0, m[8].0]]
    }

    pub fn is_identity(&self) -> bool {
        *self == Projectivity::IDENTITY
    }

    /// Matrix product `self * other`: apply `other` first.
    pub fn compose(&self, field: &Field, other: &Projectivity) -> Projectivity {
        Projectivity(canonical(field, mat_mul(field, &self.0, &other.0)))
    }

    pub fn inverse(&self, field: &Field) -> Projectivity {
        Projectivity(canonical(field, adjugate(field, &self.0)))
    }

    /// g * self * g^-1.
    pub fn conjugate_by(&self, field: &Field, g: &Projectivity) -> Projectivity {
        g.compose(field, self).compose(field, &g.inverse(field))
    }

    pub fn apply(&self, field: &Field, p: &Point) -> Point {
        let m = &self.0;
        let x = p.0;
        let row = |i: usize| {
            let s = field.add(field.mul(m[3 * i], x[0]), field.mul(m[3 * i + 1], x[1]));
            field.add(s, field.mul(m[3 * i + 2], x[2]))
        };
        Point(normalize(field, [row(0), row(1), row(2)]).expect("invertible"))
    }

    /// Image of a line: coordinates transform by the inverse transpose.
    pub fn apply_line(&self, field: &Field, l: &Line) -> Line {
        let adj = adjugate(field, &self.0);
        let v = l.0;
        let col = |j: usize| {
            let s = field.add(field.mul(v[0], adj[j]), field.mul(v[1], adj[3 + j]));
            field.add(s, field.mul(v[2], adj[6 + j]))
        };
        Line(normalize(field, [col(0), col(1), col(2)]).expect("invertible"))
    }

    /// Projective order. Elements of PGL(2,q) have order at most q+1.
    pub fn order(&self, field: &Field) -> u32 {
        let mut acc = *self;
        let mut k = 1;
        while !acc.is_identity() {
            acc = acc.compose(field, self);
            k += 1;
        }
        k
    }

    pub fn trace(&self, field: &Field) -> Fe {
        field.add(field.add(self.0[0], self.0[4]), self.0[8])
    }
}

impl fmt::Display for Projectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.rows();
        write!(
            f,
            "[[{},{},{}],[{},{},{}],[{},{},{}]]",
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2]
        )
    }
}

impl Serialize for Projectivity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

/// An involution of the conic stabilizer with its center and axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Involution {
    map: Projectivity,
    center: Point,
    axis: Line,
}

impl Involution {
    pub fn map(&self) -> &Projectivity {
        &self.map
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn axis(&self) -> Line {
        self.axis
    }
}

/// Serialized as its center; the center determines the involution.
impl Serialize for Involution {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.center.serialize(s)
    }
}

/// The reflection x -> x - (B(x,P)/Q(P)) P, scaled by Q(P).
pub fn involution_from_center(plane: &Plane, p: &Point) -> Result<Involution, PerspectivityError> {
    let f = plane.field();
    let qp = plane.quadratic_form(&p.0);
    if qp.is_zero() {
        return Err(PerspectivityError::CenterOnConic(*p));
    }
    // Coordinates of B(P, .) before normalization.
    let b = [p.0[2], f.mul(f.from_int(-2), p.0[1]), p.0[0]];
    let mut m = [Fe::ZERO; 9];
    for i in 0..3 {
        for j in 0..3 {
            let diag = if i == j { qp } else { Fe::ZERO };
            m[3 * i + j] = f.sub(diag, f.mul(p.0[i], b[j]));
        }
    }
    Ok(Involution { map: Projectivity(canonical(f, m)), center: *p, axis: plane.polar(p) })
}

/// Center and axis of an involutory element of the conic stabilizer.
///
/// With eigenvalues mu on the axis and -mu at the center, the trace is mu,
/// so `M - trace*I` has rank one: its columns span the center and its rows
/// are multiples of the axis.
pub fn center_axis(plane: &Plane, m: &Projectivity) -> Result<(Point, Line), PerspectivityError> {
    let f = plane.field();
    if m.is_identity() || !m.compose(f, m).is_identity() {
        return Err(PerspectivityError::NotAnInvolution);
    }
    let t = m.trace(f);
    let mut r = m.0;
    for i in 0..3 {
        r[4 * i] = f.sub(r[4 * i], t);
    }
    let col = (0..3)
        .map(|j| [r[j], r[3 + j], r[6 + j]])
        .find_map(|c| normalize(f, c))
        .ok_or(PerspectivityError::NotAnInvolution)?;
    let row = (0..3)
        .map(|i| [r[3 * i], r[3 * i + 1], r[3 * i + 2]])
        .find_map(|c| normalize(f, c))
        .ok_or(PerspectivityError::NotAnInvolution)?;
    let center = Point(col);
    let axis = Line(row);
    if plane.on_conic(&center) || plane.polar(&center) != axis {
        return Err(PerspectivityError::NotAnInvolution);
    }
    Ok((center, axis))
}

/// Wraps a projectivity known to be an involution of the conic stabilizer.
pub fn involution_from_map(plane: &Plane, m: &Projectivity) -> Result<Involution, PerspectivityError> {
    let (center, axis) = center_axis(plane, m)?;
    Ok(Involution { map: *m, center, axis })
}

pub fn product_order(field: &Field, a: &Involution, b: &Involution) -> u32 {
    a.map.compose(field, &b.map).order(field)
}

pub fn fixed_conic_points(plane: &Plane, m: &Projectivity) -> usize {
    let f = plane.field();
    plane.conic_points().iter().filter(|c| m.apply(f, c) == **c).count()
}

/// PSL(2,q) membership from the number of fixed conic points.
pub fn in_psl(plane: &Plane, a: &Involution) -> bool {
    let fixed = fixed_conic_points(plane, &a.map);
    if plane.q() % 4 == 1 {
        fixed == 2
    } else {
        fixed == 0
    }
}
