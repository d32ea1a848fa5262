//! Direct scalar transcription of the HFCM forward pass.

use fdg_core::decomposition::CompressionSpectrum;
use fdg_core::guidance::AttentionWeights;

pub struct Reference {
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Reference {
    fn at(&self, x: &[f64], c: usize, y: usize, xx: usize) -> f64 {
        x[(c * self.h + y) * self.w + xx]
    }

    /// LH + HL + HH of the 2×2 cell containing (y, x), edges replicated.
    fn high_freq(&self, x: &[f64], c: usize, y: usize, xx: usize) -> f64 {
        let (hh, hw) = (self.h.div_ceil(2), self.w.div_ceil(2));
        let (by, bx) = (y * hh / self.h, xx * hw / self.w);
        let p = |dy: usize, dx: usize| {
            self.at(
                x,
                c,
                (2 * by + dy).min(self.h - 1),
                (2 * bx + dx).min(self.w - 1),
            )
        };
        let (a, b, cc, d) = (p(0, 0), p(0, 1), p(1, 0), p(1, 1));
        let lh = (a + b - cc - d) / 2.0;
        let hl = (a - b + cc - d) / 2.0;
        let hh_ = (a - b - cc + d) / 2.0;
        lh + hl + hh_
    }

    fn spectrum(&self, s: &CompressionSpectrum, c: usize, y: usize, xx: usize) -> f64 {
        let t = s.tensor();
        let ch = c % t.channels;
        let (by, bx) = (y * t.blocks_high / self.h, xx * t.blocks_wide / self.w);
        let b = t.block(ch, bx, by);
        let mut sum = 0.0;
        for i in 1..64 {
            sum += b.0[i].abs();
        }
        sum / 63.0
    }

    pub fn forward(&self, x: &[f64], s: &CompressionSpectrum, wt: &AttentionWeights) -> Vec<f64> {
        let (c, n) = (self.c, self.h * self.w);
        let tok = |f: &dyn Fn(usize, usize, usize) -> f64| -> Vec<Vec<f64>> {
            (0..n)
                .map(|t| (0..c).map(|k| f(k, t / self.w, t % self.w)).collect())
                .collect()
        };
        let xt = tok(&|k, y, xx| self.at(x, k, y, xx));
        let ht = tok(&|k, y, xx| self.high_freq(x, k, y, xx));
        let dt = tok(&|k, y, xx| self.spectrum(s, k, y, xx));
        let proj = |m: &Vec<Vec<f64>>, w: &[f64]| -> Vec<Vec<f64>> {
            m.iter()
                .map(|row| {
                    (0..c)
                        .map(|j| (0..c).map(|i| row[i] * w[i * c + j]).sum())
                        .collect()
                })
                .collect()
        };
        let (q, k, v) = (proj(&xt, &wt.wq), proj(&ht, &wt.wk), proj(&dt, &wt.wv));
        let d = c / wt.heads;
        let mut out = x.to_vec();
        for head in 0..wt.heads {
            let cols = head * d..(head + 1) * d;
            for t in 0..n {
                let logits: Vec<f64> = (0..n)
                    .map(|s| {
                        cols.clone().map(|j| q[t][j] * k[s][j]).sum::<f64>() / (d as f64).sqrt()
                    })
                    .collect();
                let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
                let z: f64 = e.iter().sum();
                for j in cols.clone() {
                    let val: f64 = (0..n).map(|s| e[s] / z * v[s][j]).sum();
                    out[j * n + t] += val;
                }
            }
        }
        out
    }
}
