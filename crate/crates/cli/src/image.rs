//! Binary PGM/PPM (maxval 255) contact sheets of generated samples.

use condgan::data::unit_to_byte;

/// Lays `samples` (each `h·w·d` values in `[-1, 1]`) out on a near-square
/// grid. Three-channel images become a PPM; anything else becomes a PGM in
/// which the `d` channels of a sample sit side by side.
pub fn sample_grid(samples: &[f64], count: usize, [h, w, d]: [usize; 3]) -> (Vec<u8>, &'static str) {
    let cols = (count as f64).sqrt().ceil().max(1.0) as usize;
    let rows = count.div_ceil(cols).max(1);
    let per = h * w * d;
    if d == 3 {
        let (width, height) = (cols * w, rows * h);
        let mut px = vec![0u8; width * height * 3];
        for s in 0..count {
            let (gr, gc) = (s / cols, s % cols);
            for i in 0..h {
                for j in 0..w {
                    let dst = ((gr * h + i) * width + gc * w + j) * 3;
                    for k in 0..3 {
                        px[dst + k] = unit_to_byte(samples[s * per + (i * w + j) * 3 + k]);
                    }
                }
            }
        }
        (pnm("P6", width, height, px), "ppm")
    } else {
        let tile_w = w * d;
        let (width, height) = (cols * tile_w, rows * h);
        let mut px = vec![0u8; width * height];
        for s in 0..count {
            let (gr, gc) = (s / cols, s % cols);
            for i in 0..h {
                for j in 0..w {
                    for k in 0..d {
                        let dst = (gr * h + i) * width + gc * tile_w + k * w + j;
                        px[dst] = unit_to_byte(samples[s * per + (i * w + j) * d + k]);
                    }
                }
            }
        }
        (pnm("P5", width, height, px), "pgm")
    }
}

fn pnm(magic: &str, width: usize, height: usize, pixels: Vec<u8>) -> Vec<u8> {
    let mut out = format!("{magic}\n{width} {height}\n255\n").into_bytes();
    out.extend(pixels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_grid_layout() {
        // two 1x2 single-channel samples -> 2 columns, 1 row
        let (bytes, ext) = sample_grid(&[-1.0, 1.0, 1.0, -1.0], 2, [1, 2, 1]);
        assert_eq!(ext, "pgm");
        assert_eq!(bytes, b"P5\n4 1\n255\n\x00\xff\xff\x00".to_vec());
    }

    #[test]
    fn color_grid_layout() {
        let (bytes, ext) = sample_grid(&[1.0, -1.0, 1.0], 1, [1, 1, 3]);
        assert_eq!(ext, "ppm");
        assert_eq!(bytes, b"P6\n1 1\n255\n\xff\x00\xff".to_vec());
    }

    #[test]
    fn channels_are_tiled() {
        let (bytes, _) = sample_grid(&[-1.0, 1.0], 1, [1, 1, 2]);
        assert_eq!(bytes, b"P5\n2 1\n255\n\x00\xff".to_vec());
    }
}
