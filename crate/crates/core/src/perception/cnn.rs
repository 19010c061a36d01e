use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{BoxImage, PerceptionError};
use crate::persist::{MatrixFile, PersistError};

/// Valid 3×3 convolution → relu → 2×2 max-pool → affine → softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub in_h: usize,
    pub in_w: usize,
    pub n_filters: usize,
    pub kernel: usize,
    pub n_classes: usize,
    /// `n_filters × kernel × kernel`.
    pub conv_w: Vec<f64>,
    pub conv_b: Vec<f64>,
    /// `n_classes × fc_in`, row-major.
    pub fc_w: Vec<f64>,
    pub fc_b: Vec<f64>,
}

struct Cache {
    conv: Vec<f64>,
    pooled: Vec<f64>,
    argmax: Vec<usize>,
    probs: Vec<f64>,
}

impl CnnModel {
    pub fn zeros(in_h: usize, in_w: usize, n_filters: usize, n_classes: usize) -> Self {
        let kernel = 3;
        let mut m = Self {
            in_h,
            in_w,
            n_filters,
            kernel,
            n_classes,
            conv_w: vec![0.0; n_filters * kernel * kernel],
            conv_b: vec![0.0; n_filters],
            fc_w: Vec::new(),
            fc_b: vec![0.0; n_classes],
        };
        m.fc_w = vec![0.0; n_classes * m.fc_in()];
        m
    }

    /// He-initialized weights, zero biases.
    pub fn init(in_h: usize, in_w: usize, n_filters: usize, n_classes: usize, seed: u64) -> Self {
        let mut m = Self::zeros(in_h, in_w, n_filters, n_classes);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let conv = Normal::new(0.0, (2.0 / (m.kernel * m.kernel) as f64).sqrt()).unwrap();
        let fc = Normal::new(0.0, (1.0 / m.fc_in() as f64).sqrt()).unwrap();
        m.conv_w.iter_mut().for_each(|w| *w = conv.sample(&mut rng));
        m.fc_w.iter_mut().for_each(|w| *w = fc.sample(&mut rng));
        m
    }

    pub fn conv_h(&self) -> usize {
        self.in_h + 1 - self.kernel
    }

    pub fn conv_w_dim(&self) -> usize {
        self.in_w + 1 - self.kernel
    }

    fn pool_dims(&self) -> (usize, usize) {
        (self.conv_h() / 2, self.conv_w_dim() / 2)
    }

    pub fn fc_in(&self) -> usize {
        let (ph, pw) = self.pool_dims();
        self.n_filters * ph * pw
    }

    pub fn n_params(&self) -> usize {
        self.conv_w.len() + self.conv_b.len() + self.fc_w.len() + self.fc_b.len()
    }

    fn buffers(&self) -> [&Vec<f64>; 4] {
        [&self.conv_w, &self.conv_b, &self.fc_w, &self.fc_b]
    }

    fn buffers_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [
            &mut self.conv_w,
            &mut self.conv_b,
            &mut self.fc_w,
            &mut self.fc_b,
        ]
    }

    /// Flat parameter view, in a fixed order.
    pub fn params(&self) -> Vec<f64> {
        self.buffers()
            .iter()
            .flat_map(|b| b.iter().copied())
            .collect()
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params());
        let mut off = 0;
        for b in self.buffers_mut() {
            let n = b.len();
            b.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
    }

    fn check(&self, img: &BoxImage) -> Result<(), PerceptionError> {
        if img.h != self.in_h || img.w != self.in_w {
            return Err(PerceptionError::Shape(format!(
                "image is {}x{}, model expects {}x{}",
                img.h, img.w, self.in_h, self.in_w
            )));
        }
        Ok(())
    }

    fn run(&self, img: &BoxImage) -> Cache {
        let (ch, cw) = (self.conv_h(), self.conv_w_dim());
        let (ph, pw) = self.pool_dims();
        let k = self.kernel;
        let mut conv = vec![0.0; self.n_filters * ch * cw];
        for f in 0..self.n_filters {
            let wk = &self.conv_w[f * k * k..(f + 1) * k * k];
            for i in 0..ch {
                for j in 0..cw {
                    let mut acc = self.conv_b[f];
                    for a in 0..k {
                        let row = (i + a) * img.w + j;
                        for b in 0..k {
                            acc += wk[a * k + b] * img.pixels[row + b];
                        }
                    }
                    conv[(f * ch + i) * cw + j] = acc;
                }
            }
        }
        let mut pooled = vec![0.0; self.fc_in()];
        let mut argmax = vec![0; self.fc_in()];
        for f in 0..self.n_filters {
            for i in 0..ph {
                for j in 0..pw {
                    let mut best = f64::NEG_INFINITY;
                    let mut at = 0;
                    for a in 0..2 {
                        for b in 0..2 {
                            let idx = (f * ch + 2 * i + a) * cw + 2 * j + b;
                            let v = conv[idx].max(0.0);
                            if v > best {
                                best = v;
                                at = idx;
                            }
                        }
                    }
                    let o = (f * ph + i) * pw + j;
                    pooled[o] = best;
                    argmax[o] = at;
                }
            }
        }
        let n_in = self.fc_in();
        let logits: Vec<f64> = (0..self.n_classes)
            .map(|c| {
                let row = &self.fc_w[c * n_in..(c + 1) * n_in];
                self.fc_b[c] + row.iter().zip(&pooled).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect();
        Cache {
            conv,
            pooled,
            argmax,
            probs: softmax(&logits),
        }
    }

    /// Class probabilities.
    pub fn forward(&self, img: &BoxImage) -> Result<Vec<f64>, PerceptionError> {
        self.check(img)?;
        Ok(self.run(img).probs)
    }

    /// Most probable class, starting at 1.
    pub fn classify(&self, img: &BoxImage) -> Result<usize, PerceptionError> {
        let p = self.forward(img)?;
        Ok(argmax(&p) + 1)
    }

    /// Cross-entropy loss on `img.label` and its gradient (flat, same order
    /// as [`CnnModel::params`]).
    pub fn loss_and_grad(&self, img: &BoxImage) -> Result<(f64, Vec<f64>), PerceptionError> {
        self.check(img)?;
        let label = img
            .label
            .checked_sub(1)
            .filter(|l| *l < self.n_classes)
            .ok_or_else(|| {
                PerceptionError::Shape(format!(
                    "label {} outside 1..={}",
                    img.label, self.n_classes
                ))
            })?;
        let cache = self.run(img);
        let loss = -cache.probs[label].max(1e-300).ln();
        let n_in = self.fc_in();
        let (ch, cw) = (self.conv_h(), self.conv_w_dim());
        let k = self.kernel;

        let mut dlogits = cache.probs.clone();
        dlogits[label] -= 1.0;
        let mut g_fc_w = vec![0.0; self.fc_w.len()];
        let mut d_pooled = vec![0.0; n_in];
        for c in 0..self.n_classes {
            for i in 0..n_in {
                g_fc_w[c * n_in + i] = dlogits[c] * cache.pooled[i];
                d_pooled[i] += self.fc_w[c * n_in + i] * dlogits[c];
            }
        }
        let mut d_conv = vec![0.0; cache.conv.len()];
        for (o, &idx) in cache.argmax.iter().enumerate() {
            if cache.conv[idx] > 0.0 {
                d_conv[idx] += d_pooled[o];
            }
        }
        let mut g_conv_w = vec![0.0; self.conv_w.len()];
        let mut g_conv_b = vec![0.0; self.n_filters];
        for f in 0..self.n_filters {
            for i in 0..ch {
                for j in 0..cw {
                    let g = d_conv[(f * ch + i) * cw + j];
                    if g == 0.0 {
                        continue;
                    }
                    g_conv_b[f] += g;
                    for a in 0..k {
                        for b in 0..k {
                            g_conv_w[f * k * k + a * k + b] += g * img.at(i + a, j + b);
                        }
                    }
                }
            }
        }
        let mut grad = g_conv_w;
        grad.extend(g_conv_b);
        grad.extend(g_fc_w);
        grad.extend(dlogits);
        Ok((loss, grad))
    }

    pub fn accuracy(&self, data: &[BoxImage]) -> Result<f64, PerceptionError> {
        if data.is_empty() {
            return Ok(0.0);
        }
        let mut hits = 0;
        for img in data {
            if self.classify(img)? == img.label {
                hits += 1;
            }
        }
        Ok(hits as f64 / data.len() as f64)
    }

    pub const KIND: &'static str = "cnn";

    pub fn to_matrix_file(&self) -> MatrixFile {
        let mut f = MatrixFile::new(Self::KIND);
        f.push_scalar("in_h", self.in_h as f64);
        f.push_scalar("in_w", self.in_w as f64);
        f.push_scalar("n_filters", self.n_filters as f64);
        f.push_scalar("kernel", self.kernel as f64);
        f.push_scalar("n_classes", self.n_classes as f64);
        let kk = self.kernel * self.kernel;
        f.push(
            "conv_w",
            DMatrix::from_row_slice(self.n_filters, kk, &self.conv_w),
        );
        f.push(
            "conv_b",
            DMatrix::from_row_slice(1, self.n_filters, &self.conv_b),
        );
        f.push(
            "fc_w",
            DMatrix::from_row_slice(self.n_classes, self.fc_in(), &self.fc_w),
        );
        f.push(
            "fc_b",
            DMatrix::from_row_slice(1, self.n_classes, &self.fc_b),
        );
        f
    }

    pub fn from_matrix_file(f: &MatrixFile) -> Result<Self, PersistError> {
        f.expect_kind(Self::KIND)?;
        let dim = |name: &str| -> Result<usize, PersistError> { Ok(f.scalar(name)? as usize) };
        let mut m = Self::zeros(
            dim("in_h")?,
            dim("in_w")?,
            dim("n_filters")?,
            dim("n_classes")?,
        );
        if dim("kernel")? != m.kernel {
            return Err(PersistError::Missing("kernel of size 3".into()));
        }
        let row_major =
            |mat: &DMatrix<f64>| -> Vec<f64> { mat.transpose().iter().copied().collect() };
        let kk = m.kernel * m.kernel;
        m.conv_w = row_major(f.get_shaped("conv_w", m.n_filters, kk)?);
        m.conv_b = row_major(f.get_shaped("conv_b", 1, m.n_filters)?);
        m.fc_w = row_major(f.get_shaped("fc_w", m.n_classes, m.fc_in())?);
        m.fc_b = row_major(f.get_shaped("fc_b", 1, m.n_classes)?);
        Ok(m)
    }
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Max over one 2×2 window.
pub fn max_pool_2x2(w: [[f64; 2]; 2]) -> f64 {
    w[0][0].max(w[0][1]).max(w[1][0]).max(w[1][1])
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnTrainOptions {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for CnnTrainOptions {
    fn default() -> Self {
        Self {
            epochs: 50,
            lr: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnTrainReport {
    /// Parameters at the epoch with the best validation accuracy.
    pub model: CnnModel,
    pub best_epoch: usize,
    pub train_acc: Vec<f64>,
    pub val_acc: Vec<f64>,
    pub mean_loss: Vec<f64>,
}

/// Plain SGD with batch size one; validation once per epoch.
pub fn cnn_train(
    train: &[BoxImage],
    val: &[BoxImage],
    model: CnnModel,
    opts: &CnnTrainOptions,
) -> Result<CnnTrainReport, PerceptionError> {
    if train.is_empty() {
        return Err(PerceptionError::InvalidArgument(
            "empty training set".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut m = model;
    let mut report = CnnTrainReport {
        model: m.clone(),
        best_epoch: 0,
        train_acc: Vec::new(),
        val_acc: Vec::new(),
        mean_loss: Vec::new(),
    };
    let mut best_val = f64::NEG_INFINITY;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut params = m.params();
    for epoch in 1..=opts.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let (loss, g) = m.loss_and_grad(&train[i])?;
            if !loss.is_finite() {
                return Err(PerceptionError::Diverged {
                    epoch,
                    hint: "reduce the learning rate",
                });
            }
            total += loss;
            for (p, gi) in params.iter_mut().zip(&g) {
                *p -= opts.lr * gi;
            }
            m.set_params(&params);
        }
        let mean = total / train.len() as f64;
        if !mean.is_finite() || params.iter().any(|p| !p.is_finite()) {
            return Err(PerceptionError::Diverged {
                epoch,
                hint: "reduce the learning rate",
            });
        }
        let tr = m.accuracy(train)?;
        let va = m.accuracy(val)?;
        report.mean_loss.push(mean);
        report.train_acc.push(tr);
        report.val_acc.push(va);
        if va > best_val {
            best_val = va;
            report.best_epoch = epoch;
            report.model = m.clone();
        }
    }
    if opts.epochs == 0 {
        report.model = m;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_is_uniform() {
        let m = CnnModel::zeros(8, 8, 2, 4);
        let img = BoxImage {
            h: 8,
            w: 8,
            pixels: vec![0.0; 64],
            label: 1,
        };
        for p in m.forward(&img).unwrap() {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn layer_contracts() {
        assert_eq!(relu(-2.0), 0.0);
        assert_eq!(max_pool_2x2([[1.0, 2.0], [3.0, 4.0]]), 4.0);
        let s = softmax(&[1000.0, 1000.0, -5.0]);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        let m = CnnModel::zeros(8, 8, 2, 4);
        let img = BoxImage {
            h: 6,
            w: 6,
            pixels: vec![0.0; 36],
            label: 1,
        };
        assert!(matches!(m.forward(&img), Err(PerceptionError::Shape(_))));
    }

    #[test]
    fn zero_lr_leaves_parameters() {
        let imgs = super::super::generate_images(10, 5, 2).unwrap();
        let m = CnnModel::init(32, 32, 2, 5, 1);
        let r = cnn_train(
            &imgs,
            &imgs,
            m.clone(),
            &CnnTrainOptions {
                epochs: 2,
                lr: 0.0,
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!(r.model, m);
    }

    #[test]
    fn persistence_round_trip() {
        let m = CnnModel::init(10, 12, 3, 4, 5);
        let back = CnnModel::from_matrix_file(
            &MatrixFile::parse(&m.to_matrix_file().to_text(), "mem").unwrap(),
        )
        .unwrap();
        assert_eq!(m, back);
    }
}
