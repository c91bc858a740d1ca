/// A point of a metric space.
pub trait Metric {
    fn distance(&self, other: &Self) -> f64;
}

impl Metric for f64 {
    fn distance(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

/// Euclidean distance. Vectors of different lengths are infinitely far apart.
impl Metric for Vec<f64> {
    fn distance(&self, other: &Self) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        self.iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// A state of the product space `U x W`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState<U, W> {
    pub u: U,
    pub w: W,
}

impl<U, W> CoupledState<U, W> {
    pub fn new(u: U, w: W) -> Self {
        Self { u, w }
    }
}

/// Sum metric `d_U + d_W` on the product.
impl<U: Metric, W: Metric> Metric for CoupledState<U, W> {
    fn distance(&self, other: &Self) -> f64 {
        self.u.distance(&other.u) + self.w.distance(&other.w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_metric_is_the_sum() {
        let a = CoupledState::new(vec![0.0, 0.0], 1.0);
        let b = CoupledState::new(vec![3.0, 4.0], -1.0);
        assert_eq!(a.distance(&b), 5.0 + 2.0);
        assert_eq!(a.distance(&a), 0.0);
    }

    #[test]
    fn length_mismatch_is_infinite() {
        assert!(vec![1.0].distance(&vec![1.0, 2.0]).is_infinite());
    }
}
