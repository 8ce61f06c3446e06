//! Small fixed-size vector helpers on `[f64; 3]`.

pub type Point = [f64; 3];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(s: f64, a: Point) -> Point {
    [s * a[0], s * a[1], s * a[2]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn distance(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

pub fn midpoint(a: Point, b: Point) -> Point {
    scale(0.5, add(a, b))
}

pub fn centroid<const N: usize>(points: &[Point; N]) -> Point {
    let mut c = [0.0; 3];
    for p in points {
        c = add(c, *p);
    }
    scale(1.0 / N as f64, c)
}

/// Six times the signed volume of the tetrahedron `(a, b, c, d)`.
pub fn signed_volume6(a: Point, b: Point, c: Point, d: Point) -> f64 {
    dot(sub(b, a), cross(sub(c, a), sub(d, a)))
}

/// Gradients of the four barycentric coordinates of a tetrahedron.
pub fn barycentric_gradients(x: &[Point; 4]) -> [Point; 4] {
    let a = sub(x[1], x[0]);
    let b = sub(x[2], x[0]);
    let c = sub(x[3], x[0]);
    let det = dot(a, cross(b, c));
    let g1 = scale(1.0 / det, cross(b, c));
    let g2 = scale(1.0 / det, cross(c, a));
    let g3 = scale(1.0 / det, cross(a, b));
    let g0 = scale(-1.0, add(add(g1, g2), g3));
    [g0, g1, g2, g3]
}
