//! Procedural outdoor scenes with a roughly 1/f amplitude spectrum and a
//! matching depth map. Used wherever the pipeline needs natural-looking
//! content without shipping a dataset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::{ImageF32, Plane};

#[derive(Debug, Clone)]
pub struct Scene {
    pub clear: ImageF32,
    /// Scene depth in arbitrary units: about 0.05 at the bottom edge rising
    /// to 2.0 at the horizon and beyond.
    pub depth: Plane,
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// One octave of lattice value noise in [0, 1].
fn value_octave(rng: &mut ChaCha8Rng, width: usize, height: usize, cell: f64) -> Vec<f64> {
    let gw = (width as f64 / cell).ceil() as usize + 2;
    let gh = (height as f64 / cell).ceil() as usize + 2;
    let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.random::<f64>()).collect();
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        let fy = y as f64 / cell;
        let (iy, ty) = (fy.floor() as usize, smooth(fy.fract()));
        for x in 0..width {
            let fx = x as f64 / cell;
            let (ix, tx) = (fx.floor() as usize, smooth(fx.fract()));
            let l = |gx: usize, gy: usize| lattice[gy * gw + gx];
            let top = l(ix, iy) + (l(ix + 1, iy) - l(ix, iy)) * tx;
            let bot = l(ix, iy + 1) + (l(ix + 1, iy + 1) - l(ix, iy + 1)) * tx;
            out.push(top + (bot - top) * ty);
        }
    }
    out
}

/// Fractal value noise normalized to [0, 1]; octave amplitude halves as
/// the cell size halves.
pub fn fractal_noise(
    rng: &mut ChaCha8Rng,
    width: usize,
    height: usize,
    base_cell: f64,
    octaves: usize,
) -> Plane {
    let mut acc = vec![0.0; width * height];
    let mut amp = 1.0;
    let mut cell = base_cell;
    for _ in 0..octaves {
        for (a, v) in acc
            .iter_mut()
            .zip(value_octave(rng, width, height, cell.max(1.0)))
        {
            *a += amp * (v - 0.5);
        }
        amp *= 0.5;
        cell *= 0.5;
    }
    let (lo, hi) = acc
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    let span = (hi - lo).max(1e-12);
    Plane {
        width,
        height,
        data: acc.into_iter().map(|v| (v - lo) / span).collect(),
    }
}

fn hash01(seed: u64, ix: i64, iy: i64) -> f64 {
    let mut h = seed
        ^ (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h ^= h >> 33;
    h = h.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    h ^= h >> 33;
    h = h.wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    h ^= h >> 33;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Value noise on an unbounded lattice, sampled at a continuous point.
fn lattice_noise(seed: u64, u: f64, v: f64) -> f64 {
    let (fu, fv) = (u.floor(), v.floor());
    let (iu, iv) = (fu as i64, fv as i64);
    let (tu, tv) = (smooth(u - fu), smooth(v - fv));
    let top = hash01(seed, iu, iv) + (hash01(seed, iu + 1, iv) - hash01(seed, iu, iv)) * tu;
    let bot =
        hash01(seed, iu, iv + 1) + (hash01(seed, iu + 1, iv + 1) - hash01(seed, iu, iv + 1)) * tu;
    top + (bot - top) * tv
}

/// Fractal lattice noise in [0, 1] at a ground-plane point.
fn ground_noise(seed: u64, u: f64, v: f64, octaves: usize) -> f64 {
    let (mut acc, mut amp, mut freq, mut norm) = (0.0, 1.0, 1.0, 0.0);
    for o in 0..octaves {
        acc += amp * lattice_noise(seed.wrapping_add(o as u64), u * freq, v * freq);
        norm += amp;
        amp *= 0.55;
        freq *= 2.0;
    }
    acc / norm
}

fn random_color(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> [f64; 3] {
    [(); 3].map(|_| rng.random_range(lo..hi))
}

/// Builds a scene of sky, textured ground, a handful of occluding objects
/// and a few deep shadows.
pub fn scene(width: usize, height: usize, seed: u64) -> Scene {
    build(width, height, seed, true)
}

/// Like [`scene`] but looking down at the ground with no sky in frame; the
/// top row is the most distant.
pub fn ground_scene(width: usize, height: usize, seed: u64) -> Scene {
    build(width, height, seed, false)
}

fn build(width: usize, height: usize, seed: u64, sky_in_frame: bool) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon_frac = rng.random_range(0.25..0.45);
    let horizon = if sky_in_frame {
        (height as f64 * horizon_frac) as usize
    } else {
        0
    };
    let base = (width.max(height) as f64 / 2.0).max(4.0);
    let texture = fractal_noise(&mut rng, width, height, base, 7);
    let grain = fractal_noise(&mut rng, width, height, 6.0, 3);
    let sky_noise = fractal_noise(&mut rng, width, height, base, 3);
    let sky = random_color(&mut rng, 0.55, 0.9);
    let ground = random_color(&mut rng, 0.2, 0.7);
    let ground2 = random_color(&mut rng, 0.1, 0.6);
    let ground_seed: u64 = rng.random();
    let ground_scale = rng.random_range(0.06..0.12);

    let mut rgb = vec![[0.0f64; 3]; width * height];
    let mut depth = vec![0.0f64; width * height];
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            if y < horizon {
                let lift = 0.1 * (1.0 - y as f64 / horizon.max(1) as f64);
                let n = 0.15 * (sky_noise.data[i] - 0.5);
                rgb[i] = sky.map(|c| c + lift + n);
                depth[i] = 2.0;
            } else {
                // ground plane seen in perspective: rows nearer the horizon
                // map to distant ground, so texture shrinks with distance
                let frac = (y - horizon) as f64 / (height - horizon).max(1) as f64;
                let dist = 1.0 / (frac + 0.02);
                let u = (x as f64 - width as f64 / 2.0) * ground_scale * dist / 4.0;
                let v = 12.0 * dist;
                let m = ground_noise(ground_seed, u, v, 6);
                let g = 0.25 * (ground_noise(ground_seed ^ 0x5a5a, 3.0 * u, 3.0 * v, 3) - 0.5);
                for c in 0..3 {
                    rgb[i][c] = (ground[c] * (1.0 - m) + ground2[c] * m) * (0.6 + 0.8 * m) + g;
                }
                depth[i] = 2.0 - 1.95 * frac.powf(0.6);
            }
        }
    }

    let objects = rng.random_range(3..9);
    for _ in 0..objects {
        let w = rng.random_range(width / 12 + 1..width / 3 + 2);
        let h = rng.random_range(height / 10 + 1..height / 2 + 2);
        let foot = rng.random_range(horizon + 1..height.max(horizon + 2));
        let x0 = rng.random_range(0..width);
        let y0 = foot.saturating_sub(h);
        let color = random_color(&mut rng, 0.05, 0.8);
        let round = rng.random_bool(0.5);
        let d = depth[(foot.min(height - 1)) * width + x0.min(width - 1)];
        for y in y0..foot.min(height) {
            for x in x0..(x0 + w).min(width) {
                if round {
                    let cx = x0 as f64 + w as f64 / 2.0;
                    let cy = y0 as f64 + h as f64 / 2.0;
                    let (dx, dy) = (
                        (x as f64 - cx) / (w as f64 / 2.0),
                        (y as f64 - cy) / (h as f64 / 2.0),
                    );
                    if dx * dx + dy * dy > 1.0 {
                        continue;
                    }
                }
                let i = y * width + x;
                let shade = 0.5 + texture.data[i];
                rgb[i] = color.map(|c| c * shade + 0.3 * (grain.data[i] - 0.5));
                depth[i] = d;
            }
        }
    }

    let shadows = rng.random_range(2..6);
    for _ in 0..shadows {
        let w = rng.random_range(4..width / 6 + 6);
        let h = rng.random_range(4..height / 8 + 6);
        let x0 = rng.random_range(0..width);
        let y0 = rng.random_range(horizon..height.max(horizon + 1));
        for y in y0..(y0 + h).min(height) {
            for x in x0..(x0 + w).min(width) {
                let i = y * width + x;
                rgb[i] = rgb[i].map(|c| c * 0.12);
            }
        }
    }

    let data = rgb
        .iter()
        .flat_map(|px| px.map(|c| c.clamp(0.0, 1.0) as f32))
        .collect();
    Scene {
        clear: ImageF32 {
            width,
            height,
            channels: 3,
            data,
        },
        depth: Plane {
            width,
            height,
            data: depth,
        },
    }
}
