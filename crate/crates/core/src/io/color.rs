//! Deterministic index colors for ordered structure points.

/// Color for structure point `i` of `m`: hue spread evenly around the
/// wheel at fixed saturation/value, so the same index gets the same color
/// on every shape.
pub fn index_color(i: usize, m: usize) -> [u8; 3] {
    let m = m.max(1);
    let hue = (i % m) as f64 / m as f64 * 360.0;
    hsv_to_rgb(hue, 0.85, 0.95)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [
        ((r + m) * 255.0).round() as u8,
        ((g + m) * 255.0).round() as u8,
        ((b + m) * 255.0).round() as u8,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_index_is_red_and_colors_are_distinct() {
        let c0 = index_color(0, 8);
        assert!(c0[0] > 200 && c0[1] < 80 && c0[2] < 80, "{:?}", c0);
        let all: Vec<[u8; 3]> = (0..8).map(|i| index_color(i, 8)).collect();
        for i in 0..8 {
            for j in (i + 1)..8 {
                assert_ne!(all[i], all[j]);
            }
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(index_color(5, 16), index_color(5, 16));
    }
}
