//! 8-bit mu-law companding. Encode floors the companded value into 256
//! bins; decode returns the bin center, so encode(decode(c)) == c for
//! every code and zero maps to code 128.

pub const MU: f64 = 255.0;
pub const N_CLASSES: usize = 256;

/// Companding curve f(x) = sign(x) ln(1 + mu|x|) / ln(1 + mu).
fn compand(x: f64) -> f64 {
    x.signum() * (1.0 + MU * x.abs()).ln() / (1.0 + MU).ln()
}

/// Encodes an amplitude in [-1, 1] (clamped outside) to a code in [0, 255].
pub fn mu_law_encode(x: f64) -> u8 {
    let x = x.clamp(-1.0, 1.0);
    let f = compand(x);
    let bin = ((f + 1.0) / 2.0 * 256.0).floor();
    bin.clamp(0.0, 255.0) as u8
}

/// Decodes a code to the amplitude at its bin center.
pub fn mu_law_decode(code: u8) -> f64 {
    let y = (code as f64 + 0.5) / 128.0 - 1.0;
    y.signum() * ((1.0 + MU).powf(y.abs()) - 1.0) / MU
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_maps_to_128() {
        assert_eq!(mu_law_encode(0.0), 128);
    }

    #[test]
    fn saturation() {
        assert_eq!(mu_law_encode(1.0), 255);
        assert_eq!(mu_law_encode(-1.0), 0);
        assert_eq!(mu_law_encode(2.5), 255);
        assert_eq!(mu_law_encode(-2.5), 0);
    }

    #[test]
    fn code_round_trip_all_256() {
        for c in 0..=255u8 {
            assert_eq!(mu_law_encode(mu_law_decode(c)), c);
        }
    }

    #[test]
    fn decode_strictly_increasing() {
        let mut prev = f64::NEG_INFINITY;
        for c in 0..=255u8 {
            let v = mu_law_decode(c);
            assert!(v > prev);
            assert!(v.abs() <= 1.0);
            prev = v;
        }
    }

    #[test]
    fn decode_zero_code_regression() {
        // closed form evaluated once and frozen
        let v = mu_law_decode(255);
        assert!((v - 0.9784880309586322).abs() < 1e-12, "got {v}");
        let z = mu_law_decode(128);
        assert!(z > 0.0 && z < mu_law_decode(129) - mu_law_decode(128));
    }

    #[test]
    fn round_trip_error_bounded_by_bin_width() {
        // exhaustive 1e6-point grid
        let n = 1_000_000;
        for i in 0..=n {
            let x = -1.0 + 2.0 * i as f64 / n as f64;
            let c = mu_law_encode(x);
            let back = mu_law_decode(c);
            let width = if c == 255 {
                1.0 - mu_law_decode(255)
            } else {
                mu_law_decode(c + 1) - mu_law_decode(c)
            };
            assert!(
                (back - x).abs() <= width,
                "x={x} c={c} back={back} width={width}"
            );
        }
    }

    #[test]
    fn decode_near_zero_within_one_step() {
        let step = mu_law_decode(129) - mu_law_decode(128);
        assert!(mu_law_decode(mu_law_encode(0.0)).abs() <= step);
    }
}
