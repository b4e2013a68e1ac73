//! sRGB (D65) to CIE L*a*b*.
//!
//! 8-bit channels are scaled to [0, 1] and linearized with the sRGB transfer
//! curve (`c / 12.92` below 0.04045, else `((c + 0.055) / 1.055)^2.4`), taken
//! to XYZ with the matrix below, normalized by the D65 white point and mapped
//! through `f(t) = cbrt(t)` for `t > (6/29)^3`, else `t / (3 (6/29)^2) + 4/29`.

const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

const WHITE_D65: [f64; 3] = [0.950_47, 1.0, 1.088_83];

fn linearize(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

pub fn srgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let lin = rgb.map(linearize);
    let mut xyz = [0.0; 3];
    for (i, row) in RGB_TO_XYZ.iter().enumerate() {
        xyz[i] = row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
    }
    let fx = f(xyz[0] / WHITE_D65[0]);
    let fy = f(xyz[1] / WHITE_D65[1]);
    let fz = f(xyz[2] / WHITE_D65[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn reference_colours() {
        // Published L*a*b* values for sRGB primaries under D65.
        assert!(close(srgb_to_lab([0, 0, 0]), [0.0, 0.0, 0.0], 1e-9));
        assert!(close(srgb_to_lab([255, 255, 255]), [100.0, 0.0, 0.0], 1e-2));
        assert!(close(srgb_to_lab([255, 0, 0]), [53.24, 80.09, 67.20], 1e-2));
        assert!(close(srgb_to_lab([0, 255, 0]), [87.73, -86.18, 83.18], 1e-2));
        assert!(close(srgb_to_lab([0, 0, 255]), [32.30, 79.19, -107.86], 1e-2));
    }

    #[test]
    fn lightness_is_monotone_on_greys() {
        let mut last = -1.0;
        for v in 0..=255u8 {
            let lab = srgb_to_lab([v, v, v]);
            assert!(lab[0] > last);
            last = lab[0];
        }
    }
}
