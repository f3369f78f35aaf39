/// Dense rank-4 array with independent dimensions per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    dims: [usize; 4],
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(dims: [usize; 4]) -> Tensor4 {
        Tensor4 {
            dims,
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    #[inline]
    fn index(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        let [_, b, c, d] = self.dims;
        ((i * b + j) * c + k) * d + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[self.index(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let at = self.index(i, j, k, l);
        self.data[at] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, s: f64) -> Tensor4 {
        Tensor4 {
            dims: self.dims,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    /// Largest absolute componentwise difference; infinite when shapes differ.
    pub fn max_abs_diff(&self, other: &Tensor4) -> f64 {
        if self.dims != other.dims {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}
