//! Hypercubic lattices (chains and cubes) with neighbor and double-hop
//! tables. Sites are indexed row-major with `x` fastest:
//! `index = x + Lx * (y + Ly * z)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeGeometry {
    dims: [usize; 3],
    periodic: bool,
    dimension: usize,
    nn_offsets: Vec<usize>,
    nn: Vec<usize>,
    dh_offsets: Vec<usize>,
    double_hops: Vec<(usize, usize)>,
    in_a: Vec<bool>,
}

impl LatticeGeometry {
    /// Open-boundary lattice.
    pub fn new(dims: [usize; 3]) -> Result<Self> {
        Self::build(dims, false)
    }

    /// Periodic lattice; every axis with extent 1 stays trivial and every
    /// other axis needs extent at least 3 so that neighbors are distinct.
    pub fn periodic(dims: [usize; 3]) -> Result<Self> {
        Self::build(dims, true)
    }

    pub fn chain(len: usize) -> Result<Self> {
        Self::new([len, 1, 1])
    }

    pub fn cube(len: usize) -> Result<Self> {
        Self::new([len, len, len])
    }

    pub fn build(dims: [usize; 3], periodic: bool) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::domain(format!("lattice extents must be >= 1, got {dims:?}")));
        }
        let n_sites: usize = dims.iter().product();
        if n_sites < 2 {
            return Err(Error::domain(format!("lattice needs at least 2 sites, got {dims:?}")));
        }
        if periodic && dims.iter().any(|&d| d == 2) {
            return Err(Error::domain(
                "periodic axes need extent >= 3 (extent 2 would double-count a bond)",
            ));
        }
        let dimension = dims.iter().filter(|&&d| d > 1).count();

        let coords = |i: usize| [i % dims[0], (i / dims[0]) % dims[1], i / (dims[0] * dims[1])];
        let index = |c: [usize; 3]| c[0] + dims[0] * (c[1] + dims[1] * c[2]);

        let mut nn_offsets = Vec::with_capacity(n_sites + 1);
        let mut nn = Vec::with_capacity(n_sites * 2 * dimension);
        nn_offsets.push(0);
        for i in 0..n_sites {
            let c = coords(i);
            for axis in 0..3 {
                let len = dims[axis];
                if len == 1 {
                    continue;
                }
                for step in [-1i64, 1] {
                    let raw = c[axis] as i64 + step;
                    let v = if periodic {
                        raw.rem_euclid(len as i64) as usize
                    } else if raw < 0 || raw >= len as i64 {
                        continue;
                    } else {
                        raw as usize
                    };
                    let mut nc = c;
                    nc[axis] = v;
                    nn.push(index(nc));
                }
            }
            nn_offsets.push(nn.len());
        }

        let mut dh_offsets = Vec::with_capacity(n_sites + 1);
        let mut double_hops = Vec::new();
        dh_offsets.push(0);
        for i in 0..n_sites {
            for &j in &nn[nn_offsets[i]..nn_offsets[i + 1]] {
                for &k in &nn[nn_offsets[j]..nn_offsets[j + 1]] {
                    if k != i {
                        double_hops.push((j, k));
                    }
                }
            }
            dh_offsets.push(double_hops.len());
        }

        let in_a = (0..n_sites)
            .map(|i| {
                if dims[0] >= 2 {
                    coords(i)[0] < dims[0] / 2
                } else {
                    i < n_sites / 2
                }
            })
            .collect();

        Ok(LatticeGeometry {
            dims,
            periodic,
            dimension,
            nn_offsets,
            nn,
            dh_offsets,
            double_hops,
            in_a,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    /// Number of non-trivial axes (1 for a chain, 3 for a cube).
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn n_sites(&self) -> usize {
        self.in_a.len()
    }

    /// Default double-hop rate `2z - 1` where `z` is the dimension.
    pub fn default_double_hop_rate(&self) -> f64 {
        (2 * self.dimension) as f64 - 1.0
    }

    pub fn coords(&self, site: usize) -> [usize; 3] {
        let d = self.dims;
        [site % d[0], (site / d[0]) % d[1], site / (d[0] * d[1])]
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    fn check(&self, site: usize) -> Result<()> {
        if site >= self.n_sites() {
            return Err(Error::domain(format!(
                "site {site} out of range for {} sites",
                self.n_sites()
            )));
        }
        Ok(())
    }

    pub fn neighbors(&self, site: usize) -> Result<&[usize]> {
        self.check(site)?;
        Ok(self.nn_of(site))
    }

    pub fn double_hop_paths(&self, site: usize) -> Result<&[(usize, usize)]> {
        self.check(site)?;
        Ok(self.double_hops_of(site))
    }

    /// Unchecked neighbor row for hot loops.
    #[inline]
    pub fn nn_of(&self, site: usize) -> &[usize] {
        &self.nn[self.nn_offsets[site]..self.nn_offsets[site + 1]]
    }

    #[inline]
    pub fn double_hops_of(&self, site: usize) -> &[(usize, usize)] {
        &self.double_hops[self.dh_offsets[site]..self.dh_offsets[site + 1]]
    }

    /// Each undirected bond once, as `(i, j)` with `i < j`.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n_sites() {
            for &j in self.nn_of(i) {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Subsystem membership: `true` for the left half (`x < Lx/2`).
    #[inline]
    pub fn in_subsystem_a(&self, site: usize) -> bool {
        self.in_a[site]
    }

    pub fn subsystem_mask(&self) -> &[bool] {
        &self.in_a
    }
}
