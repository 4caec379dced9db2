//! Kernels acting on 3D nodal arrays stored x-fastest
//! (`index = ix + nx * (iy + ny * iz)`) by applying 1D operators along one
//! axis at a time.

/// Sparse 1D matrix stored by rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Sparse1D {
    pub n_rows: usize,
    pub n_cols: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl Sparse1D {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, rows: vec![Vec::new(); n_rows] }
    }

    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        let row = &mut self.rows[r];
        match row.iter_mut().find(|(cc, _)| *cc == c) {
            Some(entry) => entry.1 += v,
            None => row.push((c, v)),
        }
    }

    pub fn finalize(&mut self) {
        for row in &mut self.rows {
            row.sort_by_key(|&(c, _)| c);
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.rows[r].iter().find(|(cc, _)| *cc == c).map_or(0.0, |e| e.1)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n_rows, self.n_cols);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, i)).collect()
    }

    /// Rows and columns restricted to `keep`.
    pub fn restrict(&self, keep: &[usize]) -> Sparse1D {
        let mut map = vec![usize::MAX; self.n_cols];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let rows = keep
            .iter()
            .map(|&r| {
                self.rows[r]
                    .iter()
                    .filter(|(c, _)| map[*c] != usize::MAX)
                    .map(|&(c, v)| (map[c], v))
                    .collect()
            })
            .collect();
        Sparse1D { n_rows: keep.len(), n_cols: keep.len(), rows }
    }
}

/// Apply `op` along `axis` of an array with extents `dims`. The output has
/// `dims[axis]` replaced by `op.n_rows`.
pub fn apply_along_axis(op: &Sparse1D, axis: usize, dims: [usize; 3], src: &[f64], dst: &mut [f64]) {
    assert_eq!(dims[axis], op.n_cols);
    let mut out_dims = dims;
    out_dims[axis] = op.n_rows;
    assert_eq!(src.len(), dims.iter().product::<usize>());
    assert_eq!(dst.len(), out_dims.iter().product::<usize>());
    let [nx, ny, nz] = dims;
    let [ox, oy, _] = out_dims;
    match axis {
        0 => {
            for line in 0..ny * nz {
                let s = &src[line * nx..(line + 1) * nx];
                let d = &mut dst[line * ox..(line + 1) * ox];
                for (r, row) in op.rows.iter().enumerate() {
                    d[r] = row.iter().map(|&(c, v)| v * s[c]).sum();
                }
            }
        }
        1 => {
            for iz in 0..nz {
                let s = &src[iz * nx * ny..(iz + 1) * nx * ny];
                let d = &mut dst[iz * ox * oy..(iz + 1) * ox * oy];
                for (r, row) in op.rows.iter().enumerate() {
                    let out = &mut d[r * nx..(r + 1) * nx];
                    out.iter_mut().for_each(|v| *v = 0.0);
                    for &(c, v) in row {
                        let inp = &s[c * nx..(c + 1) * nx];
                        for (o, &i) in out.iter_mut().zip(inp) {
                            *o += v * i;
                        }
                    }
                }
            }
        }
        2 => {
            let plane = nx * ny;
            for (r, row) in op.rows.iter().enumerate() {
                let out = &mut dst[r * plane..(r + 1) * plane];
                out.iter_mut().for_each(|v| *v = 0.0);
                for &(c, v) in row {
                    let inp = &src[c * plane..(c + 1) * plane];
                    for (o, &i) in out.iter_mut().zip(inp) {
                        *o += v * i;
                    }
                }
            }
        }
        _ => panic!("axis must be 0, 1 or 2"),
    }
}

/// Apply the same 1D sparse operator along all three axes.
pub fn apply_tensor3(op: &Sparse1D, src: &[f64]) -> Vec<f64> {
    let n = op.n_cols;
    let m = op.n_rows;
    let mut a = vec![0.0; m * n * n];
    apply_along_axis(op, 0, [n, n, n], src, &mut a);
    let mut b = vec![0.0; m * m * n];
    apply_along_axis(op, 1, [m, n, n], &a, &mut b);
    let mut c = vec![0.0; m * m * m];
    apply_along_axis(op, 2, [m, m, n], &b, &mut c);
    c
}

/// Dense square 1D matrix in column-major storage.
#[derive(Debug, Clone)]
pub struct Dense1D {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Dense1D {
    pub fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        Self { n: m.nrows(), data: m.as_slice().to_vec() }
    }
}

/// `dst = op` (or `op^T` when `transpose`) applied along `axis` of a cube
/// array with `n` nodes per direction.
pub fn dense_along_axis(op: &Dense1D, transpose: bool, axis: usize, src: &[f64], dst: &mut [f64]) {
    let n = op.n;
    let total = n * n * n;
    assert_eq!(src.len(), total);
    assert_eq!(dst.len(), total);
    // Column-major op: element (r, c) at data[r + n c]. Its transpose swaps strides.
    let (rs_op, cs_op) = if transpose { (n as isize, 1) } else { (1, n as isize) };
    // SAFETY: all pointer extents below stay within the slices whose lengths
    // were checked above, and `src`/`dst` cannot alias (distinct borrows).
    unsafe {
        match axis {
            0 => {
                // dst(n x n^2) = op(n x n) * src(n x n^2), column-major.
                matrixmultiply::dgemm(
                    n, n, n * n, 1.0,
                    op.data.as_ptr(), rs_op, cs_op,
                    src.as_ptr(), 1, n as isize,
                    0.0, dst.as_mut_ptr(), 1, n as isize,
                );
            }
            1 => {
                // Per z-slab: dst(ix, r) = sum_c src(ix, c) op(r, c).
                for iz in 0..n {
                    let off = iz * n * n;
                    matrixmultiply::dgemm(
                        n, n, n, 1.0,
                        src.as_ptr().add(off), 1, n as isize,
                        op.data.as_ptr(), cs_op, rs_op,
                        0.0, dst.as_mut_ptr().add(off), 1, n as isize,
                    );
                }
            }
            2 => {
                // dst(n^2 x n) = src(n^2 x n) * op^T.
                matrixmultiply::dgemm(
                    n * n, n, n, 1.0,
                    src.as_ptr(), 1, (n * n) as isize,
                    op.data.as_ptr(), cs_op, rs_op,
                    0.0, dst.as_mut_ptr(), 1, (n * n) as isize,
                );
            }
            _ => panic!("axis must be 0, 1 or 2"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_along(op: &nalgebra::DMatrix<f64>, axis: usize, n: usize, src: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; n * n * n];
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let idx = [ix, iy, iz];
                    let mut s = 0.0;
                    for c in 0..n {
                        let mut j = idx;
                        j[axis] = c;
                        s += op[(idx[axis], c)] * src[j[0] + n * (j[1] + n * j[2])];
                    }
                    out[ix + n * (iy + n * iz)] = s;
                }
            }
        }
        out
    }

    #[test]
    fn dense_and_sparse_axis_kernels_agree_with_naive() {
        let n = 5;
        let op = nalgebra::DMatrix::from_fn(n, n, |r, c| ((r * 7 + c * 3) % 11) as f64 - 4.0);
        let mut sp = Sparse1D::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                sp.add(r, c, op[(r, c)]);
            }
        }
        let dense = Dense1D::from_nalgebra(&op);
        let dense_t = Dense1D::from_nalgebra(&op.transpose());
        let src: Vec<f64> = (0..n * n * n).map(|i| ((i * 13) % 17) as f64 * 0.1).collect();
        for axis in 0..3 {
            let expected = naive_along(&op, axis, n, &src);
            let mut got = vec![0.0; n * n * n];
            apply_along_axis(&sp, axis, [n, n, n], &src, &mut got);
            let mut got_d = vec![0.0; n * n * n];
            dense_along_axis(&dense, false, axis, &src, &mut got_d);
            let mut got_t = vec![0.0; n * n * n];
            dense_along_axis(&dense_t, true, axis, &src, &mut got_t);
            for i in 0..expected.len() {
                assert!((expected[i] - got[i]).abs() < 1e-12);
                assert!((expected[i] - got_d[i]).abs() < 1e-12);
                assert!((expected[i] - got_t[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rectangular_axis_application() {
        let mut op = Sparse1D::zeros(2, 3);
        op.add(0, 0, 1.0);
        op.add(0, 2, 2.0);
        op.add(1, 1, -1.0);
        let src: Vec<f64> = (0..27).map(|i| i as f64).collect();
        let out = apply_tensor3(&op, &src);
        assert_eq!(out.len(), 8);
        // out[0,0,0] = sum over (a,b,c) in {0:1, 2:2}^3 of weights * src.
        let w = [(0usize, 1.0), (2, 2.0)];
        let mut expected = 0.0;
        for &(a, wa) in &w {
            for &(b, wb) in &w {
                for &(c, wc) in &w {
                    expected += wa * wb * wc * src[a + 3 * (b + 3 * c)];
                }
            }
        }
        assert!((out[0] - expected).abs() < 1e-12);
    }
}
