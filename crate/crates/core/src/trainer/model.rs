use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

/// Parameters of [`TinyModel`], also used for their gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    /// Bilinear form of the same-scorer.
    pub ws: Array2<f64>,
    pub bs: f64,
}

impl Params {
    pub fn zeros(dim: usize, hidden: usize, classes: usize) -> Self {
        Params {
            w1: Array2::zeros((dim, hidden)),
            b1: Array1::zeros(hidden),
            w2: Array2::zeros((hidden, classes)),
            b2: Array1::zeros(classes),
            ws: Array2::zeros((hidden, hidden)),
            bs: 0.0,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Params::zeros(self.w1.nrows(), self.w1.ncols(), self.w2.ncols())
    }

    /// `self += alpha * other`.
    pub fn scaled_add(&mut self, alpha: f64, other: &Params) {
        self.w1.scaled_add(alpha, &other.w1);
        self.b1.scaled_add(alpha, &other.b1);
        self.w2.scaled_add(alpha, &other.w2);
        self.b2.scaled_add(alpha, &other.b2);
        self.ws.scaled_add(alpha, &other.ws);
        self.bs += alpha * other.bs;
    }

    pub fn scale(&mut self, alpha: f64) {
        self.w1 *= alpha;
        self.b1 *= alpha;
        self.w2 *= alpha;
        self.b2 *= alpha;
        self.ws *= alpha;
        self.bs *= alpha;
    }

    /// All parameters in a fixed order: `w1, b1, w2, b2, ws, bs`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend(self.w1.iter());
        v.extend(self.b1.iter());
        v.extend(self.w2.iter());
        v.extend(self.b2.iter());
        v.extend(self.ws.iter());
        v.push(self.bs);
        v
    }

    pub fn len(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len() + self.ws.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Hidden embeddings and class probabilities for a set of inputs.
#[derive(Debug, Clone)]
pub struct Forward {
    pub hidden: Array2<f64>,
    pub probs: Array2<f64>,
}

/// A one-hidden-layer tanh perceptron with a softmax head, plus a bilinear
/// same-class scorer `sigmoid(e1^T W e2 + b)` on hidden embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyModel {
    pub params: Params,
}

fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row /= s;
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl TinyModel {
    pub fn new<R: Rng>(dim: usize, hidden: usize, classes: usize, rng: &mut R) -> Self {
        let mut normal = |scale: f64| -> f64 { rng.sample::<f64, _>(StandardNormal) * scale };
        let mut p = Params::zeros(dim, hidden, classes);
        p.w1.mapv_inplace(|_| normal(0.25));
        p.w2.mapv_inplace(|_| normal(1.0 / (hidden as f64).sqrt()));
        p.ws.mapv_inplace(|_| normal(1.0 / hidden as f64));
        TinyModel { params: p }
    }

    pub fn forward(&self, x: &Array2<f64>) -> Forward {
        let p = &self.params;
        let hidden = (x.dot(&p.w1) + &p.b1).mapv(f64::tanh);
        let mut probs = hidden.dot(&p.w2) + &p.b2;
        softmax_rows(&mut probs);
        Forward { hidden, probs }
    }

    /// Same-class scores between every row of `e1` and every row of `e2`.
    pub fn same(&self, e1: &Array2<f64>, e2: &Array2<f64>) -> Array2<f64> {
        let p = &self.params;
        (e1.dot(&p.ws).dot(&e2.t()) + p.bs).mapv(sigmoid)
    }

    pub fn predict(&self, x: &Array2<f64>) -> Vec<usize> {
        self.forward(x)
            .probs
            .rows()
            .into_iter()
            .map(|r| {
                let mut best = 0;
                for (k, &v) in r.iter().enumerate() {
                    if v > r[best] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }

    /// Parameter gradient given the gradient at the softmax logits
    /// (`g_logits`, one row per input) and at the same-scorer
    /// pre-activations between the inputs (`g_same_pre`, square).
    pub fn backward(
        &self,
        x: &Array2<f64>,
        fwd: &Forward,
        g_logits: Option<&Array2<f64>>,
        g_same_pre: Option<&Array2<f64>>,
    ) -> Params {
        let p = &self.params;
        let e = &fwd.hidden;
        let mut g = self.params.zeros_like();
        let mut g_e = Array2::<f64>::zeros(e.raw_dim());
        if let Some(gl) = g_logits {
            g.w2 = e.t().dot(gl);
            g.b2 = gl.sum_axis(Axis(0));
            g_e += &gl.dot(&p.w2.t());
        }
        if let Some(gz) = g_same_pre {
            g.ws = e.t().dot(gz).dot(e);
            g.bs = gz.sum();
            g_e += &gz.dot(e).dot(&p.ws.t());
            g_e += &gz.t().dot(e).dot(&p.ws);
        }
        let g_pre = g_e * &e.mapv(|v| 1.0 - v * v);
        g.w1 = x.t().dot(&g_pre);
        g.b1 = g_pre.sum_axis(Axis(0));
        g
    }
}

/// Gradient at the logits from a gradient at the softmax outputs.
pub(crate) fn softmax_backward(probs: &Array2<f64>, g_probs: &Array2<f64>) -> Array2<f64> {
    let dot = (probs * g_probs).sum_axis(Axis(1)).insert_axis(Axis(1));
    probs * &(g_probs - &dot)
}
