//! Ways of injecting a condition vector `c` into a network.
//!
//! * [`vector_concat`]: `[z, c]`, used at the generator input.
//! * [`spatial_replicate_concat`]: tile `c` over every pixel and append it as
//!   extra channels (CGAN input, FCGAN every layer).
//! * [`spatial_bilinear_pool`]: per-pixel outer product of the pixel's
//!   channels with `c`.
//!
//! The bilinear output for a pixel with channels `p[0..d]` and a condition
//! `c[0..m]` is laid out condition-major: channel `a * d + b` holds
//! `p[b] * c[a]`. A one-hot `c = e_a` therefore copies the pixel into block
//! `a` and leaves every other block at zero.
//!
//! Batched kernels work on `[b, h, w, d]` images and `[b, m]` conditions and
//! are exposed to the autodiff graph through [`ReplicateConcat`] and
//! [`BilinearPool`].

use crate::error::{Error, Result};
use crate::graph::{Function, Graph, Var};
use crate::tensor::Tensor;

/// Condition `c` of length `m ≥ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionVector(Tensor);

impl ConditionVector {
    pub fn new(values: Tensor) -> Result<Self> {
        if values.rank() != 1 {
            return Err(Error::Shape(format!(
                "condition must be one-dimensional, got {:?}",
                values.shape()
            )));
        }
        Ok(ConditionVector(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Input("condition vector needs m ≥ 1".into()));
        }
        Self::new(Tensor::vector(values)?)
    }

    pub fn one_hot(index: usize, m: usize) -> Result<Self> {
        if index >= m {
            return Err(Error::Input(format!("class {index} out of range for m = {m}")));
        }
        let mut v = vec![0.0; m];
        v[index] = 1.0;
        Self::from_slice(&v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &Tensor {
        &self.0
    }

    /// `Some(a)` if this is exactly the one-hot vector `e_a`.
    pub fn class_index(&self) -> Option<usize> {
        let d = self.0.data();
        let ones = d.iter().filter(|&&v| v == 1.0).count();
        let zeros = d.iter().filter(|&&v| v == 0.0).count();
        (ones == 1 && zeros == d.len() - 1).then(|| d.iter().position(|&v| v == 1.0).unwrap_or(0))
    }
}

/// Image of shape `[h, w, d]` (height, width, channels).
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialTensor(Tensor);

impl SpatialTensor {
    pub fn new(values: Tensor) -> Result<Self> {
        if values.rank() != 3 {
            return Err(Error::Shape(format!(
                "spatial tensor must be [h, w, d], got {:?}",
                values.shape()
            )));
        }
        Ok(SpatialTensor(values))
    }

    pub fn values(&self) -> &Tensor {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor {
        self.0
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        let s = self.0.shape();
        (s[0], s[1], s[2])
    }

    /// Channel vector of pixel `(i, j)`.
    pub fn pixel(&self, i: usize, j: usize) -> &[f64] {
        let (_, w, d) = self.dims();
        let at = (i * w + j) * d;
        &self.0.data()[at..at + d]
    }

    /// Adds a unit batch axis: `[h, w, d] -> [1, h, w, d]`.
    fn batched(&self) -> Tensor {
        let mut shape = vec![1];
        shape.extend_from_slice(self.0.shape());
        Tensor::from_raw(shape, self.0.data().to_vec())
    }

    fn unbatched(t: Tensor) -> SpatialTensor {
        let shape = t.shape()[1..].to_vec();
        SpatialTensor(Tensor::from_raw(shape, t.into_data()))
    }
}

/// `[z, c]`.
pub fn vector_concat(z: &Tensor, c: &ConditionVector) -> Result<Tensor> {
    if z.rank() != 1 {
        return Err(Error::Shape(format!("z must be one-dimensional, got {:?}", z.shape())));
    }
    let mut data = z.data().to_vec();
    data.extend_from_slice(c.values().data());
    Tensor::new(vec![data.len()], data)
}

pub fn spatial_replicate_concat(x: &SpatialTensor, c: &ConditionVector) -> Result<SpatialTensor> {
    let cb = c.values().reshape(&[1, c.len()])?;
    Ok(SpatialTensor::unbatched(replicate_concat_batch(&x.batched(), &cb)?))
}

pub fn spatial_bilinear_pool(x: &SpatialTensor, c: &ConditionVector) -> Result<SpatialTensor> {
    let cb = c.values().reshape(&[1, c.len()])?;
    Ok(SpatialTensor::unbatched(bilinear_pool_batch(&x.batched(), &cb)?))
}

fn check_batch(op: &'static str, x: &Tensor, c: &Tensor) -> Result<(usize, usize, usize)> {
    if x.rank() != 4 || c.rank() != 2 || x.shape()[0] != c.shape()[0] {
        return Err(Error::dim(op, x.shape(), c.shape()));
    }
    let b = x.shape()[0];
    let pixels = x.shape()[1] * x.shape()[2];
    Ok((b, pixels, x.shape()[3]))
}

/// `[b,h,w,d] ⊕ [b,m] -> [b,h,w,d+m]`.
pub fn replicate_concat_batch(x: &Tensor, c: &Tensor) -> Result<Tensor> {
    let (b, pixels, d) = check_batch("spatial_replicate_concat", x, c)?;
    let m = c.shape()[1];
    let mut data = Vec::with_capacity(b * pixels * (d + m));
    for n in 0..b {
        let cn = &c.data()[n * m..(n + 1) * m];
        for p in 0..pixels {
            let at = (n * pixels + p) * d;
            data.extend_from_slice(&x.data()[at..at + d]);
            data.extend_from_slice(cn);
        }
    }
    let mut shape = x.shape().to_vec();
    shape[3] = d + m;
    Ok(Tensor::from_raw(shape, data))
}

/// `[b,h,w,d] ⊗ [b,m] -> [b,h,w,d·m]`, condition-major channel blocks.
pub fn bilinear_pool_batch(x: &Tensor, c: &Tensor) -> Result<Tensor> {
    let (b, pixels, d) = check_batch("spatial_bilinear_pool", x, c)?;
    let m = c.shape()[1];
    let mut data = Vec::with_capacity(b * pixels * d * m);
    for n in 0..b {
        let cn = &c.data()[n * m..(n + 1) * m];
        for p in 0..pixels {
            let at = (n * pixels + p) * d;
            let px = &x.data()[at..at + d];
            for &ca in cn {
                data.extend(px.iter().map(|&xv| xv * ca));
            }
        }
    }
    let mut shape = x.shape().to_vec();
    shape[3] = d * m;
    let out = Tensor::from_raw(shape, data);
    out.check_finite("spatial_bilinear_pool")?;
    Ok(out)
}

#[derive(Debug)]
pub struct ReplicateConcat;

impl Function for ReplicateConcat {
    fn tag(&self) -> &'static str {
        "spatial_replicate_concat"
    }

    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor> {
        replicate_concat_batch(inputs[0], inputs[1])
    }

    fn backward(&self, inputs: &[&Tensor], _output: &Tensor, grad: &Tensor) -> Vec<Tensor> {
        let (x, c) = (inputs[0], inputs[1]);
        let (b, pixels, d) = (x.shape()[0], x.shape()[1] * x.shape()[2], x.shape()[3]);
        let m = c.shape()[1];
        let mut gx = Vec::with_capacity(x.len());
        let mut gc = vec![0.0; c.len()];
        for n in 0..b {
            for p in 0..pixels {
                let at = (n * pixels + p) * (d + m);
                gx.extend_from_slice(&grad.data()[at..at + d]);
                for (acc, g) in gc[n * m..(n + 1) * m].iter_mut().zip(&grad.data()[at + d..at + d + m]) {
                    *acc += g;
                }
            }
        }
        vec![
            Tensor::from_raw(x.shape().to_vec(), gx),
            Tensor::from_raw(c.shape().to_vec(), gc),
        ]
    }
}

#[derive(Debug)]
pub struct BilinearPool;

impl Function for BilinearPool {
    fn tag(&self) -> &'static str {
        "spatial_bilinear_pool"
    }

    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor> {
        bilinear_pool_batch(inputs[0], inputs[1])
    }

    fn backward(&self, inputs: &[&Tensor], _output: &Tensor, grad: &Tensor) -> Vec<Tensor> {
        let (x, c) = (inputs[0], inputs[1]);
        let (b, pixels, d) = (x.shape()[0], x.shape()[1] * x.shape()[2], x.shape()[3]);
        let m = c.shape()[1];
        let mut gx = vec![0.0; x.len()];
        let mut gc = vec![0.0; c.len()];
        for n in 0..b {
            let cn = &c.data()[n * m..(n + 1) * m];
            for p in 0..pixels {
                let xat = (n * pixels + p) * d;
                let gat = (n * pixels + p) * d * m;
                let px = &x.data()[xat..xat + d];
                for (a, &ca) in cn.iter().enumerate() {
                    let block = &grad.data()[gat + a * d..gat + (a + 1) * d];
                    let mut dot = 0.0;
                    for k in 0..d {
                        gx[xat + k] += block[k] * ca;
                        dot += block[k] * px[k];
                    }
                    gc[n * m + a] += dot;
                }
            }
        }
        vec![
            Tensor::from_raw(x.shape().to_vec(), gx),
            Tensor::from_raw(c.shape().to_vec(), gc),
        ]
    }
}

/// Graph op for [`replicate_concat_batch`].
pub fn replicate_concat(g: &mut Graph, x: Var, c: Var) -> Result<Var> {
    g.apply(ReplicateConcat, &[x, c])
}

/// Graph op for [`bilinear_pool_batch`].
pub fn bilinear_pool(g: &mut Graph, x: Var, c: Var) -> Result<Var> {
    g.apply(BilinearPool, &[x, c])
}
