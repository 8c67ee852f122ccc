//! Dense row-major tensors over f32/f64.

use crate::error::{Error, Result};

/// Scalar element type of tensors: f32 for training, f64 for gradient checks.
pub trait Real:
    num_traits::Float
    + num_traits::NumAssign
    + Copy
    + Send
    + Sync
    + std::fmt::Debug
    + std::fmt::Display
    + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;

    /// C = alpha * A(m×k) · B(k×n) + beta * C, arbitrary strides.
    ///
    /// # Safety
    /// Pointers and strides must describe valid m×k / k×n / m×n views.
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Real for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

/// Dense tensor with row-major storage. Rank 0 is a scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let count: usize = shape.iter().product();
        if count != data.len() {
            return Err(Error::shape(
                "tensor",
                format!("shape {:?} implies {} values, got {}", shape, count, data.len()),
            ));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let count: usize = shape.iter().product();
        Tensor {
            shape,
            data: vec![T::zero(); count],
        }
    }

    pub fn filled(shape: Vec<usize>, v: T) -> Self {
        let count: usize = shape.iter().product();
        Tensor {
            shape,
            data: vec![v; count],
        }
    }

    pub fn scalar(v: T) -> Self {
        Tensor {
            shape: vec![],
            data: vec![v],
        }
    }

    /// 2-D tensor from nested rows; rows must have equal length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::shape("tensor", "ragged rows"));
            }
            data.extend_from_slice(row);
        }
        Ok(Tensor {
            shape: vec![r, c],
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn dim(&self, axis: usize) -> usize {
        self.shape[axis]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.shape.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Scalar value of a rank-0 tensor.
    pub fn item(&self) -> T {
        debug_assert!(self.data.len() == 1);
        self.data[0]
    }

    pub fn reshaped(mut self, shape: Vec<usize>) -> Result<Self> {
        let count: usize = shape.iter().product();
        if count != self.data.len() {
            return Err(Error::shape(
                "reshape",
                format!("{:?} -> {:?}", self.shape, shape),
            ));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::from_f64(Real::to_f64(v))).collect(),
        }
    }

    /// result = self · other, both rank 2.
    pub fn matmul(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        let (m, k) = dims2(self, "matmul lhs")?;
        let (k2, n) = dims2(other, "matmul rhs")?;
        if k != k2 {
            return Err(Error::shape(
                "matmul",
                format!("inner dims {} vs {}", k, k2),
            ));
        }
        let mut out = Tensor::zeros(vec![m, n]);
        unsafe {
            T::gemm(
                m,
                k,
                n,
                T::one(),
                self.data.as_ptr(),
                k as isize,
                1,
                other.data.as_ptr(),
                n as isize,
                1,
                T::zero(),
                out.data.as_mut_ptr(),
                n as isize,
                1,
            );
        }
        Ok(out)
    }

    /// acc += a(m×k) · b(k×n) with optional transposes, in place.
    ///
    /// `ta`/`tb` flag whether the stored operand is the transpose of the
    /// logical one (i.e. `ta` means `a` is stored k×m).
    pub fn gemm_acc(acc: &mut Tensor<T>, a: &Tensor<T>, ta: bool, b: &Tensor<T>, tb: bool) {
        let (ar, ac) = (a.shape[0], a.shape[1]);
        let (br, bc) = (b.shape[0], b.shape[1]);
        let (m, k) = if ta { (ac, ar) } else { (ar, ac) };
        let (kb, n) = if tb { (bc, br) } else { (br, bc) };
        debug_assert_eq!(k, kb);
        debug_assert_eq!(acc.shape, [m, n]);
        let (rsa, csa) = if ta { (1, ac as isize) } else { (ac as isize, 1) };
        let (rsb, csb) = if tb { (1, bc as isize) } else { (bc as isize, 1) };
        unsafe {
            T::gemm(
                m,
                k,
                n,
                T::one(),
                a.data.as_ptr(),
                rsa,
                csa,
                b.data.as_ptr(),
                rsb,
                csb,
                T::one(),
                acc.data.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
}

pub(crate) fn dims2<T: Real>(t: &Tensor<T>, what: &'static str) -> Result<(usize, usize)> {
    if t.rank() != 2 {
        return Err(Error::shape(what, format!("expected rank 2, got {:?}", t.shape())));
    }
    Ok((t.shape()[0], t.shape()[1]))
}
