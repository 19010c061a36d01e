use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{LstmDataset, PerceptionError};
use crate::par::{self, Parallelism};
use crate::persist::{MatrixFile, PersistError};

/// Vanilla LSTM cell with a scalar input and a linear scalar readout.
///
/// Gate rows are stacked as input, forget, output, candidate; each block
/// has `hidden` rows. Inputs are divided by `scale` and outputs multiplied
/// by it.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub hidden: usize,
    pub w: Vec<f64>,
    /// `4·hidden × hidden`, row-major.
    pub u: Vec<f64>,
    pub b: Vec<f64>,
    pub wy: Vec<f64>,
    pub by: f64,
    pub scale: f64,
    /// Stride between model steps and simulation samples.
    pub downsample: usize,
}

struct Step {
    x: f64,
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    c: Vec<f64>,
    tc: Vec<f64>,
    h: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmModel {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            hidden,
            w: vec![0.0; 4 * hidden],
            u: vec![0.0; 4 * hidden * hidden],
            b: vec![0.0; 4 * hidden],
            wy: vec![0.0; hidden],
            by: 0.0,
            scale: 1.0,
            downsample: 1,
        }
    }

    /// Small random weights, forget-gate bias of one.
    pub fn init(hidden: usize, seed: u64) -> Self {
        let mut m = Self::zeros(hidden);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let std = 1.0 / (hidden as f64).sqrt();
        let nd = Normal::new(0.0, std).unwrap();
        m.w.iter_mut().for_each(|v| *v = nd.sample(&mut rng));
        m.u.iter_mut().for_each(|v| *v = 0.5 * nd.sample(&mut rng));
        m.wy.iter_mut().for_each(|v| *v = nd.sample(&mut rng));
        m.b[hidden..2 * hidden].iter_mut().for_each(|v| *v = 1.0);
        m
    }

    pub fn n_params(&self) -> usize {
        self.w.len() + self.u.len() + self.b.len() + self.wy.len() + 1
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        p.extend(&self.w);
        p.extend(&self.u);
        p.extend(&self.b);
        p.extend(&self.wy);
        p.push(self.by);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params());
        let mut off = 0;
        for buf in [&mut self.w, &mut self.u, &mut self.b, &mut self.wy] {
            let n = buf.len();
            buf.copy_from_slice(&p[off..off + n]);
            off += n;
        }
        self.by = p[off];
    }

    fn run(&self, xs: &[f64]) -> (Vec<f64>, Vec<Step>) {
        let hd = self.hidden;
        let mut h = vec![0.0; hd];
        let mut c = vec![0.0; hd];
        let mut ys = Vec::with_capacity(xs.len());
        let mut steps = Vec::with_capacity(xs.len());
        for &x in xs {
            let mut a = vec![0.0; 4 * hd];
            for (r, ar) in a.iter_mut().enumerate() {
                let row = &self.u[r * hd..(r + 1) * hd];
                *ar = self.w[r] * x
                    + self.b[r]
                    + row.iter().zip(&h).map(|(u, hv)| u * hv).sum::<f64>();
            }
            let i: Vec<f64> = a[..hd].iter().map(|v| sigmoid(*v)).collect();
            let f: Vec<f64> = a[hd..2 * hd].iter().map(|v| sigmoid(*v)).collect();
            let o: Vec<f64> = a[2 * hd..3 * hd].iter().map(|v| sigmoid(*v)).collect();
            let g: Vec<f64> = a[3 * hd..].iter().map(|v| v.tanh()).collect();
            for j in 0..hd {
                c[j] = f[j] * c[j] + i[j] * g[j];
            }
            let tc: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
            h = (0..hd).map(|j| o[j] * tc[j]).collect();
            ys.push(self.by + self.wy.iter().zip(&h).map(|(w, hv)| w * hv).sum::<f64>());
            steps.push(Step {
                x,
                i,
                f,
                o,
                g,
                c: c.clone(),
                tc,
                h: h.clone(),
            });
        }
        (ys, steps)
    }

    /// Output sequence in physical units, zero initial state.
    pub fn forward(&self, seq: &[f64]) -> Vec<f64> {
        let xs: Vec<f64> = seq.iter().map(|v| v / self.scale).collect();
        self.run(&xs)
            .0
            .into_iter()
            .map(|y| y * self.scale)
            .collect()
    }

    /// Mean squared error in normalized units and its gradient, by full
    /// backpropagation through time.
    pub fn loss_and_grad(&self, input: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
        let hd = self.hidden;
        let xs: Vec<f64> = input.iter().map(|v| v / self.scale).collect();
        let ts: Vec<f64> = target.iter().map(|v| v / self.scale).collect();
        let (ys, steps) = self.run(&xs);
        let n = ys.len().max(1) as f64;
        let loss = ys
            .iter()
            .zip(&ts)
            .map(|(y, t)| (y - t) * (y - t))
            .sum::<f64>()
            / n;

        let mut gw = vec![0.0; self.w.len()];
        let mut gu = vec![0.0; self.u.len()];
        let mut gb = vec![0.0; self.b.len()];
        let mut gwy = vec![0.0; hd];
        let mut gby = 0.0;
        let mut dh_next = vec![0.0; hd];
        let mut dc_next = vec![0.0; hd];
        let zeros = vec![0.0; hd];
        let mut da = vec![0.0; 4 * hd];
        for t in (0..steps.len()).rev() {
            let s = &steps[t];
            let (h_prev, c_prev) = if t > 0 {
                (&steps[t - 1].h, &steps[t - 1].c)
            } else {
                (&zeros, &zeros)
            };
            let dy = 2.0 * (ys[t] - ts[t]) / n;
            gby += dy;
            for (g, h) in gwy.iter_mut().zip(&s.h) {
                *g += dy * h;
            }
            for j in 0..hd {
                let dh = self.wy[j] * dy + dh_next[j];
                let d_o = dh * s.tc[j];
                let dc = dh * s.o[j] * (1.0 - s.tc[j] * s.tc[j]) + dc_next[j];
                let di = dc * s.g[j];
                let dg = dc * s.i[j];
                let df = dc * c_prev[j];
                dc_next[j] = dc * s.f[j];
                da[j] = di * s.i[j] * (1.0 - s.i[j]);
                da[hd + j] = df * s.f[j] * (1.0 - s.f[j]);
                da[2 * hd + j] = d_o * s.o[j] * (1.0 - s.o[j]);
                da[3 * hd + j] = dg * (1.0 - s.g[j] * s.g[j]);
            }
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            for r in 0..4 * hd {
                let d = da[r];
                gw[r] += d * s.x;
                gb[r] += d;
                let row = r * hd;
                for j in 0..hd {
                    gu[row + j] += d * h_prev[j];
                    dh_next[j] += self.u[row + j] * d;
                }
            }
        }
        let mut grad = gw;
        grad.extend(gu);
        grad.extend(gb);
        grad.extend(gwy);
        grad.push(gby);
        (loss, grad)
    }

    /// Root-mean-square error over a dataset, in physical units.
    pub fn rmse(&self, data: &LstmDataset, mode: Parallelism) -> f64 {
        let errs = par::map_range(mode, data.len(), |k| {
            let y = self.forward(&data.inputs[k]);
            let se: f64 = y
                .iter()
                .zip(&data.targets[k])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (se, y.len())
        });
        let (se, n) = errs
            .iter()
            .fold((0.0, 0usize), |(s, c), (a, b)| (s + a, c + b));
        (se / n.max(1) as f64).sqrt()
    }

    pub const KIND: &'static str = "lstm";

    pub fn to_matrix_file(&self) -> MatrixFile {
        let hd = self.hidden;
        let mut f = MatrixFile::new(Self::KIND);
        f.push_scalar("hidden", hd as f64);
        f.push_scalar("scale", self.scale);
        f.push_scalar("downsample", self.downsample as f64);
        f.push("w", DMatrix::from_row_slice(4 * hd, 1, &self.w));
        f.push("u", DMatrix::from_row_slice(4 * hd, hd, &self.u));
        f.push("b", DMatrix::from_row_slice(4 * hd, 1, &self.b));
        f.push("wy", DMatrix::from_row_slice(1, hd, &self.wy));
        f.push_scalar("by", self.by);
        f
    }

    pub fn from_matrix_file(f: &MatrixFile) -> Result<Self, PersistError> {
        f.expect_kind(Self::KIND)?;
        let hd = f.scalar("hidden")? as usize;
        let row_major = |m: &DMatrix<f64>| -> Vec<f64> { m.transpose().iter().copied().collect() };
        Ok(Self {
            hidden: hd,
            w: row_major(f.get_shaped("w", 4 * hd, 1)?),
            u: row_major(f.get_shaped("u", 4 * hd, hd)?),
            b: row_major(f.get_shaped("b", 4 * hd, 1)?),
            wy: row_major(f.get_shaped("wy", 1, hd)?),
            by: f.scalar("by")?,
            scale: f.scalar("scale")?,
            downsample: f.scalar("downsample")? as usize,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmTrainOptions {
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
    /// Global gradient-norm clip.
    pub clip: f64,
    pub parallelism: Parallelism,
}

impl Default for LstmTrainOptions {
    fn default() -> Self {
        Self {
            epochs: 40,
            lr: 0.01,
            batch: 256,
            seed: 0,
            clip: 5.0,
            parallelism: Parallelism::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmTrainReport {
    pub model: LstmModel,
    /// Training RMSE before the first epoch and after each epoch.
    pub rmse: Vec<f64>,
}

/// Mini-batch training with RMSProp updates. Per-sequence gradients are
/// computed through `par` and summed in batch order.
pub fn lstm_train(
    data: &LstmDataset,
    model: LstmModel,
    opts: &LstmTrainOptions,
) -> Result<LstmTrainReport, PerceptionError> {
    if data.is_empty() || opts.batch == 0 || opts.batch > data.len() {
        return Err(PerceptionError::InvalidArgument(format!(
            "batch {} must lie in 1..={}",
            opts.batch,
            data.len()
        )));
    }
    const DECAY: f64 = 0.9;
    const EPS: f64 = 1e-8;
    let mut m = model;
    let mut params = m.params();
    let mut cache = vec![0.0; params.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rmse = vec![m.rmse(data, opts.parallelism)];
    for epoch in 1..=opts.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(opts.batch) {
            let parts = par::map(opts.parallelism, chunk, |&k| {
                m.loss_and_grad(&data.inputs[k], &data.targets[k])
            });
            let mut grad = vec![0.0; params.len()];
            let mut loss = 0.0;
            for (l, g) in &parts {
                loss += l;
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b;
                }
            }
            let inv = 1.0 / chunk.len() as f64;
            grad.iter_mut().for_each(|g| *g *= inv);
            if !loss.is_finite() {
                return Err(PerceptionError::Diverged {
                    epoch,
                    hint: "reduce the learning rate",
                });
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > opts.clip {
                let s = opts.clip / norm;
                grad.iter_mut().for_each(|g| *g *= s);
            }
            for ((p, c), g) in params.iter_mut().zip(cache.iter_mut()).zip(&grad) {
                *c = DECAY * *c + (1.0 - DECAY) * g * g;
                *p -= opts.lr * g / (c.sqrt() + EPS);
            }
            m.set_params(&params);
        }
        let r = m.rmse(data, opts.parallelism);
        if !r.is_finite() {
            return Err(PerceptionError::Diverged {
                epoch,
                hint: "reduce the learning rate",
            });
        }
        rmse.push(r);
    }
    Ok(LstmTrainReport { model: m, rmse })
}
