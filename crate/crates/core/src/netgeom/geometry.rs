//! Planar predicates used when validating and snapping onto a network.

pub type Coord = [f64; 2];

pub fn dist(a: Coord, b: Coord) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Twice the signed area of the triangle `a, b, c`; positive when counter-clockwise.
pub fn orient(a: Coord, b: Coord, c: Coord) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Foot of the perpendicular from `p` onto segment `a-b`, clamped to the segment.
///
/// Returns the arc-length offset from `a` and the distance from `p` to the foot.
pub fn project(p: Coord, a: Coord, b: Coord) -> (f64, f64) {
    let len = dist(a, b);
    let dx = (b[0] - a[0]) / len;
    let dy = (b[1] - a[1]) / len;
    let along = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy).clamp(0.0, len);
    let foot = [a[0] + along * dx, a[1] + along * dy];
    (along, dist(p, foot))
}

pub fn point_segment_distance(p: Coord, a: Coord, b: Coord) -> f64 {
    project(p, a, b).1
}

/// True when the open interiors of `p1-p2` and `q1-q2` cross transversally.
pub fn proper_crossing(p1: Coord, p2: Coord, q1: Coord, q2: Coord) -> bool {
    let o1 = orient(p1, p2, q1);
    let o2 = orient(p1, p2, q2);
    let o3 = orient(q1, q2, p1);
    let o4 = orient(q1, q2, p2);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

pub fn segment_distance(p1: Coord, p2: Coord, q1: Coord, q2: Coord) -> f64 {
    if proper_crossing(p1, p2, q1, q2) {
        return 0.0;
    }
    point_segment_distance(p1, q1, q2)
        .min(point_segment_distance(p2, q1, q2))
        .min(point_segment_distance(q1, p1, p2))
        .min(point_segment_distance(q2, p1, p2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_of_offset_point() {
        let (along, d) = project([4.0, 10.0], [0.0, 0.0], [20.0, 0.0]);
        assert_eq!(along, 4.0);
        assert_eq!(d, 10.0);
    }

    #[test]
    fn projection_clamps_to_endpoints() {
        let (along, d) = project([-3.0, 4.0], [0.0, 0.0], [20.0, 0.0]);
        assert_eq!(along, 0.0);
        assert_eq!(d, 5.0);
    }

    #[test]
    fn crossing_detection() {
        assert!(proper_crossing([0.0, 0.0], [2.0, 0.0], [1.0, -1.0], [1.0, 1.0]));
        // touching at an endpoint is not a proper crossing
        assert!(!proper_crossing([0.0, 0.0], [2.0, 0.0], [2.0, 0.0], [2.0, 1.0]));
        assert_eq!(segment_distance([0.0, 0.0], [2.0, 0.0], [0.0, 1.0], [2.0, 1.0]), 1.0);
    }
}
