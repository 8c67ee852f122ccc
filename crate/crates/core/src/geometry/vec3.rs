//! Small fixed-size vector helpers for 3D points.

pub fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm_sq(a: [f64; 3]) -> f64 {
    dot(a, a)
}

pub fn norm(a: [f64; 3]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn dist_sq(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm_sq(sub(a, b))
}

pub fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// Total order on coordinates: x, then y, then z. All inputs finite.
pub fn lex_less(a: [f64; 3], b: [f64; 3]) -> bool {
    for d in 0..3 {
        if a[d] < b[d] {
            return true;
        }
        if a[d] > b[d] {
            return false;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_of_basis() {
        assert_eq!(cross([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn lex_order() {
        assert!(lex_less([0.0, 9.0, 9.0], [1.0, 0.0, 0.0]));
        assert!(lex_less([1.0, 0.0, 0.0], [1.0, 0.0, 0.5]));
        assert!(!lex_less([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]));
    }
}
