//! Dense row-major f64 tensors and named trainable parameters.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// A dense tensor: shape plus row-major values.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            values: vec![0.0; n],
        }
    }

    pub fn from_values(shape: &[usize], values: Vec<f64>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            values.len(),
            "value count must match shape"
        );
        Self {
            shape: shape.to_vec(),
            values,
        }
    }

    pub fn numel(&self) -> usize {
        self.values.len()
    }

    pub fn fill(&mut self, v: f64) {
        self.values.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// A trainable tensor with its gradient accumulator and a name path used by
/// checkpoints.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub value: Tensor,
    pub grad: Tensor,
    pub name: String,
}

impl Parameter {
    pub fn new(name: &str, value: Tensor) -> Self {
        let grad = Tensor::zeros(&value.shape);
        Self {
            value,
            grad,
            name: String::from(name),
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}
