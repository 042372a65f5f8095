//! Static sparse table for O(1) range-minimum queries over f64 slices.

#[inline(always)]
fn flog2(v: usize) -> usize {
    v.ilog2() as usize
}

/// Sparse table: O(n log n) build, O(1) min query.
#[derive(Debug, Clone)]
pub struct SparseTable {
    lgn: usize,
    n: usize,
    table: Vec<f64>,
}

impl SparseTable {
    pub fn new(values: &[f64]) -> Self {
        let n = values.len();
        assert!(n > 0, "sparse table over an empty slice");
        let lgn = flog2(n);
        let stride = lgn + 1;
        let mut table = vec![f64::INFINITY; stride * n];
        for (j, &v) in values.iter().enumerate() {
            table[j * stride] = v;
        }
        for i in 1..=lgn {
            for j in 0..=(n - (1 << i)) {
                table[j * stride + i] = f64::min(
                    table[j * stride + i - 1],
                    table[(j + (1 << (i - 1))) * stride + i - 1],
                );
            }
        }
        SparseTable { lgn, n, table }
    }

    /// Minimum over the inclusive index range [i, j].
    #[inline]
    pub fn min(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i <= j && j < self.n);
        let stride = self.lgn + 1;
        if i == j {
            return self.table[i * stride];
        }
        let k = flog2(j - i + 1);
        f64::min(
            self.table[i * stride + k],
            self.table[(j + 1 - (1 << k)) * stride + k],
        )
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn matches_linear_scan() {
        let mut rng = crate::rng::stream(3, "rmq-test", 0);
        let values: Vec<f64> = (0..257).map(|_| rng.random::<f64>()).collect();
        let st = SparseTable::new(&values);
        for _ in 0..2000 {
            let i = rng.random_range(0..values.len());
            let j = rng.random_range(i..values.len());
            let naive = values[i..=j].iter().cloned().fold(f64::INFINITY, f64::min);
            assert_eq!(st.min(i, j), naive);
        }
    }

    #[test]
    fn single_element() {
        let st = SparseTable::new(&[42.0]);
        assert_eq!(st.min(0, 0), 42.0);
    }
}
