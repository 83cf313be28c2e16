use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on [-1, 1] with an odd node count, so x = 0 is a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid1D {
    n: usize,
}

impl Grid1D {
    pub fn new(n: usize) -> Result<Self> {
        if n < 5 || n.is_multiple_of(2) {
            return Err(Error::param(
                "n",
                format!("need an odd node count >= 5, got {n}"),
            ));
        }
        Ok(Grid1D { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        2.0 / (self.n - 1) as f64
    }

    /// Node `i`; the midpoint formula keeps the nodes exactly symmetric about 0.
    pub fn x(&self, i: usize) -> f64 {
        let m = (self.n - 1) as f64;
        (2.0 * i as f64 - m) / m
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn center(&self) -> usize {
        (self.n - 1) / 2
    }

    pub fn mirror(&self, i: usize) -> usize {
        self.n - 1 - i
    }

    /// Sample `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|i| f(self.x(i))).collect()
    }
}

/// Tensor grid on the fixed rectangle [-1, 1] x [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid2D {
    x: Grid1D,
    neta: usize,
}

impl Grid2D {
    pub fn new(x: Grid1D, neta: usize) -> Result<Self> {
        if neta < 5 || neta.is_multiple_of(2) {
            return Err(Error::param(
                "neta",
                format!("need an odd node count >= 5, got {neta}"),
            ));
        }
        Ok(Grid2D { x, neta })
    }

    /// Grid with `nx` x-nodes and `neta` eta-nodes.
    pub fn with_sizes(nx: usize, neta: usize) -> Result<Self> {
        Grid2D::new(Grid1D::new(nx)?, neta)
    }

    /// Half as many eta-nodes as x-nodes, matching the aspect of the rectangle.
    pub fn for_line(x: Grid1D) -> Self {
        let neta = (x.len() - 1) / 2 + 1;
        let neta = if neta.is_multiple_of(2) {
            neta + 1
        } else {
            neta.max(5)
        };
        Grid2D { x, neta }
    }

    pub fn line(&self) -> Grid1D {
        self.x
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn neta(&self) -> usize {
        self.neta
    }

    pub fn hx(&self) -> f64 {
        self.x.h()
    }

    pub fn heta(&self) -> f64 {
        1.0 / (self.neta - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x.x(i)
    }

    pub fn eta(&self, j: usize) -> f64 {
        j as f64 / (self.neta - 1) as f64
    }

    /// Row-major index with eta running fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.neta + j
    }

    pub fn node_count(&self) -> usize {
        self.nx() * self.neta
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.node_count());
        for i in 0..self.nx() {
            let x = self.x(i);
            for j in 0..self.neta {
                out.push(f(x, self.eta(j)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_symmetric() {
        let g = Grid1D::new(129).unwrap();
        assert_eq!(g.x(0), -1.0);
        assert_eq!(g.x(128), 1.0);
        assert_eq!(g.x(g.center()), 0.0);
        for i in 0..g.len() {
            assert_eq!(g.x(i), -g.x(g.mirror(i)));
        }
    }

    #[test]
    fn rejects_even_or_tiny() {
        assert!(Grid1D::new(4).is_err());
        assert!(Grid1D::new(3).is_err());
        assert!(Grid1D::new(64).is_err());
        assert!(Grid2D::with_sizes(33, 16).is_err());
    }

    #[test]
    fn rectangle_covered() {
        let g = Grid2D::with_sizes(33, 17).unwrap();
        assert_eq!(g.eta(0), 0.0);
        assert_eq!(g.eta(16), 1.0);
        assert_eq!(Grid2D::for_line(Grid1D::new(129).unwrap()).neta(), 65);
        assert_eq!(Grid2D::for_line(Grid1D::new(7).unwrap()).neta(), 5);
    }
}
