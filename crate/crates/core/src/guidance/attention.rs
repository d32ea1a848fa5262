use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FeatureMap;
use crate::error::{Error, Result};
use crate::image::Tensor;

/// Projection matrices, each C×C row-major. Head `i` uses columns
/// `i·C/h .. (i+1)·C/h`, i.e. its own C×(C/h) slice.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    pub channels: usize,
    pub heads: usize,
    pub wq: Vec<f64>,
    pub wk: Vec<f64>,
    pub wv: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttentionManifest {
    pub channels: usize,
    pub heads: usize,
    /// Per-head shape of each projection.
    pub head_shape: [usize; 2],
    pub tensor_dims: Vec<usize>,
}

impl AttentionWeights {
    pub fn new(
        channels: usize,
        heads: usize,
        wq: Vec<f64>,
        wk: Vec<f64>,
        wv: Vec<f64>,
    ) -> Result<Self> {
        if heads == 0 || !channels.is_multiple_of(heads) {
            return Err(Error::param(format!(
                "{heads} heads do not divide {channels} channels"
            )));
        }
        for m in [&wq, &wk, &wv] {
            if m.len() != channels * channels {
                return Err(Error::Truncated {
                    expected: channels * channels,
                    found: m.len(),
                });
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::param("attention weights must be finite"));
            }
        }
        Ok(Self {
            channels,
            heads,
            wq,
            wk,
            wv,
        })
    }

    /// Entries drawn from N(0, 1/C).
    pub fn random(channels: usize, heads: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (channels.max(1) as f64).sqrt();
        let mut draw = || -> Vec<f64> {
            (0..channels * channels)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    scale * z
                })
                .collect::<Vec<f64>>()
        };
        let (wq, wk, wv) = (draw(), draw(), draw());
        Self::new(channels, heads, wq, wk, wv)
    }

    pub fn head_dim(&self) -> usize {
        self.channels / self.heads
    }

    pub fn manifest(&self) -> AttentionManifest {
        AttentionManifest {
            channels: self.channels,
            heads: self.heads,
            head_shape: [self.channels, self.head_dim()],
            tensor_dims: vec![3, self.channels, self.channels],
        }
    }

    /// [3, C, C] tensor holding W_q, W_k, W_v in that order.
    pub fn to_tensor(&self) -> Tensor {
        let data = [&self.wq, &self.wk, &self.wv]
            .into_iter()
            .flat_map(|m| m.iter().map(|&v| v as f32))
            .collect();
        Tensor {
            dims: vec![3, self.channels, self.channels],
            data,
        }
    }

    pub fn from_tensor(t: &Tensor, manifest: &AttentionManifest) -> Result<Self> {
        let c = manifest.channels;
        if t.dims != [3, c, c] {
            return Err(Error::param(format!(
                "weight tensor dims {:?}, expected [3, {c}, {c}]",
                t.dims
            )));
        }
        let m = |i: usize| {
            t.data[i * c * c..(i + 1) * c * c]
                .iter()
                .map(|&v| v as f64)
                .collect()
        };
        Self::new(c, manifest.heads, m(0), m(1), m(2))
    }
}

/// Token-major product X·W for X: T×C and W: C×C.
fn project(x: &[f64], w: &[f64], c: usize) -> Vec<f64> {
    let t = x.len() / c;
    let mut out = vec![0.0; t * c];
    out.par_chunks_mut(c).enumerate().for_each(|(i, row)| {
        let xr = &x[i * c..(i + 1) * c];
        for (k, &xv) in xr.iter().enumerate() {
            let wr = &w[k * c..(k + 1) * c];
            for (o, &wv) in row.iter_mut().zip(wr) {
                *o += xv * wv;
            }
        }
    });
    out
}

fn check_inputs(
    x: &FeatureMap,
    x_h: &FeatureMap,
    x_d: &FeatureMap,
    w: &AttentionWeights,
) -> Result<()> {
    if w.heads == 0 || !w.channels.is_multiple_of(w.heads) {
        return Err(Error::param(format!(
            "{} heads do not divide {} channels",
            w.heads, w.channels
        )));
    }
    for (name, f) in [("x", x), ("x_H", x_h), ("x_D", x_d)] {
        if f.channels != w.channels {
            return Err(Error::param(format!(
                "{name} has {} channels, weights expect {}",
                f.channels, w.channels
            )));
        }
        if f.tokens() != x.tokens() {
            return Err(Error::param(format!(
                "{name} has {} tokens, x has {}",
                f.tokens(),
                x.tokens()
            )));
        }
    }
    Ok(())
}

/// Row-softmaxed logits of one query row against all keys of a head.
fn softmax_row(q: &[f64], k: &[f64], c: usize, lo: usize, hi: usize, out: &mut [f64]) {
    let scale = 1.0 / ((hi - lo) as f64).sqrt();
    let mut max = f64::NEG_INFINITY;
    for (s, o) in out.iter_mut().enumerate() {
        let kr = &k[s * c + lo..s * c + hi];
        *o = q[lo..hi].iter().zip(kr).map(|(a, b)| a * b).sum::<f64>() * scale;
        max = max.max(*o);
    }
    let mut sum = 0.0;
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Multi-head attention with queries from `x`, keys from `x_h` and values
/// from `x_d`. All three share the token grid of `x`.
pub fn cross_attention(
    x: &FeatureMap,
    x_h: &FeatureMap,
    x_d: &FeatureMap,
    w: &AttentionWeights,
) -> Result<FeatureMap> {
    check_inputs(x, x_h, x_d, w)?;
    let c = w.channels;
    let n = x.tokens();
    let q = project(&x.token_matrix(), &w.wq, c);
    let k = project(&x_h.token_matrix(), &w.wk, c);
    let v = project(&x_d.token_matrix(), &w.wv, c);
    let d = w.head_dim();
    let mut out = vec![0.0; n * c];
    out.par_chunks_mut(c).enumerate().for_each_init(
        || vec![0.0; n],
        |attn, (t, row)| {
            for h in 0..w.heads {
                let (lo, hi) = (h * d, (h + 1) * d);
                softmax_row(&q[t * c..(t + 1) * c], &k, c, lo, hi, attn);
                for (s, &a) in attn.iter().enumerate() {
                    for j in lo..hi {
                        row[j] += a * v[s * c + j];
                    }
                }
            }
        },
    );
    Ok(FeatureMap::from_token_matrix(c, x.height, x.width, &out))
}

/// The T×T attention matrix of every head.
pub fn attention_maps(
    x: &FeatureMap,
    x_h: &FeatureMap,
    w: &AttentionWeights,
) -> Result<Vec<Vec<f64>>> {
    check_inputs(x, x_h, x, w)?;
    let c = w.channels;
    let n = x.tokens();
    let q = project(&x.token_matrix(), &w.wq, c);
    let k = project(&x_h.token_matrix(), &w.wk, c);
    let d = w.head_dim();
    Ok((0..w.heads)
        .map(|h| {
            let mut a = vec![0.0; n * n];
            a.par_chunks_mut(n).enumerate().for_each(|(t, row)| {
                softmax_row(&q[t * c..(t + 1) * c], &k, c, h * d, (h + 1) * d, row)
            });
            a
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_map(c: usize, h: usize, w: usize, rng: &mut ChaCha8Rng) -> FeatureMap {
        FeatureMap::new(
            c,
            h,
            w,
            (0..c * h * w)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
        )
        .unwrap()
    }

    /// Scalar loops straight from the definition.
    fn brute(x: &FeatureMap, xh: &FeatureMap, xd: &FeatureMap, w: &AttentionWeights) -> Vec<f64> {
        let (c, n, d) = (w.channels, x.tokens(), w.head_dim());
        let feat = |f: &FeatureMap, t: usize, k: usize| f.data[k * n + t];
        let mut out = vec![0.0; n * c];
        for h in 0..w.heads {
            for t in 0..n {
                let mut logits = vec![0.0; n];
                for (s, l) in logits.iter_mut().enumerate() {
                    for j in 0..d {
                        let col = h * d + j;
                        let mut qv = 0.0;
                        let mut kv = 0.0;
                        for k in 0..c {
                            qv += feat(x, t, k) * w.wq[k * c + col];
                            kv += feat(xh, s, k) * w.wk[k * c + col];
                        }
                        *l += qv * kv;
                    }
                    *l /= (d as f64).sqrt();
                }
                let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
                for j in 0..d {
                    let col = h * d + j;
                    for s in 0..n {
                        let mut vv = 0.0;
                        for k in 0..c {
                            vv += feat(xd, s, k) * w.wv[k * c + col];
                        }
                        out[t * c + col] += (logits[s] - m).exp() / z * vv;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn matches_scalar_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x, xh, xd) = (
            random_map(4, 2, 2, &mut rng),
            random_map(4, 2, 2, &mut rng),
            random_map(4, 2, 2, &mut rng),
        );
        let w = AttentionWeights::random(4, 2, 7).unwrap();
        let out = cross_attention(&x, &xh, &xd, &w).unwrap().token_matrix();
        for (a, b) in out.iter().zip(brute(&x, &xh, &xd, &w)) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn identical_keys_average_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_map(4, 3, 2, &mut rng);
        let xh = FeatureMap::new(
            4,
            3,
            2,
            (0..4).flat_map(|c| vec![c as f64 * 0.3; 6]).collect(),
        )
        .unwrap();
        let xd = random_map(4, 3, 2, &mut rng);
        let w = AttentionWeights::random(4, 2, 3).unwrap();
        for row in &attention_maps(&x, &xh, &w).unwrap()[0]
            .chunks(6)
            .collect::<Vec<_>>()
        {
            assert!(row.iter().all(|&a| (a - 1.0 / 6.0).abs() < 1e-12));
        }
        let out = cross_attention(&x, &xh, &xd, &w).unwrap().token_matrix();
        let v = project(&xd.token_matrix(), &w.wv, 4);
        for t in 0..6 {
            for j in 0..4 {
                let mean: f64 = (0..6).map(|s| v[s * 4 + j]).sum::<f64>() / 6.0;
                assert!((out[t * 4 + j] - mean).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_token_returns_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (x, xh, xd) = (
            random_map(2, 1, 1, &mut rng),
            random_map(2, 1, 1, &mut rng),
            random_map(2, 1, 1, &mut rng),
        );
        let w = AttentionWeights::random(2, 1, 4).unwrap();
        let out = cross_attention(&x, &xh, &xd, &w).unwrap();
        let v = project(&xd.token_matrix(), &w.wv, 2);
        assert_eq!(out.token_matrix(), v);
    }

    #[test]
    fn shape_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_map(4, 2, 2, &mut rng);
        let small = random_map(4, 1, 2, &mut rng);
        let w = AttentionWeights::random(4, 2, 1).unwrap();
        assert!(cross_attention(&x, &small, &x, &w).is_err());
        assert!(cross_attention(&x, &random_map(2, 2, 2, &mut rng), &x, &w).is_err());
        assert!(AttentionWeights::random(4, 3, 1).is_err());
    }

    #[test]
    fn tensor_round_trip() {
        let w = AttentionWeights::random(6, 3, 9).unwrap();
        let back = AttentionWeights::from_tensor(&w.to_tensor(), &w.manifest()).unwrap();
        for (a, b) in w.wq.iter().zip(&back.wq) {
            assert!((a - b).abs() < 1e-6);
        }
        assert_eq!(w.manifest().head_shape, [6, 2]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn rows_are_distributions_in_value_hull(seed in any::<u64>(), heads in prop::sample::select(vec![1usize, 2, 4])) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, xh, xd) = (random_map(4, 3, 3, &mut rng), random_map(4, 3, 3, &mut rng), random_map(4, 3, 3, &mut rng));
            let w = AttentionWeights::random(4, heads, seed).unwrap();
            for a in attention_maps(&x, &xh, &w).unwrap() {
                for row in a.chunks(9) {
                    prop_assert!(row.iter().all(|&v| v >= 0.0));
                    prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
                }
            }
            let out = cross_attention(&x, &xh, &xd, &w).unwrap().token_matrix();
            let v = project(&xd.token_matrix(), &w.wv, 4);
            for j in 0..4 {
                let col: Vec<f64> = (0..9).map(|s| v[s * 4 + j]).collect();
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                for t in 0..9 {
                    prop_assert!(out[t * 4 + j] >= lo - 1e-12 && out[t * 4 + j] <= hi + 1e-12);
                }
            }
        }

        #[test]
        fn softmax_shift_invariance(seed in any::<u64>(), shift in -50.0f64..50.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let k: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut a = vec![0.0; 5];
            softmax_row(&q, &k, 4, 0, 4, &mut a);
            // a constant added to every logit of the row: append a key
            // coordinate whose product with the query is the shift
            let q2: Vec<f64> = q.iter().copied().chain([shift * 2.0]).collect();
            let k2: Vec<f64> = k.chunks(4).flat_map(|r| r.iter().copied().chain([1.0])).collect();
            let mut b = vec![0.0; 5];
            // scale compensates the 1/√d of the wider head
            let q2: Vec<f64> = q2.iter().map(|v| v * (5.0f64 / 4.0).sqrt()).collect();
            softmax_row(&q2, &k2, 5, 0, 5, &mut b);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-7);
            }
        }
    }
}
