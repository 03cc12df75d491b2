//! Factorization of a permutation of an `n × m` grid of cells as
//! row-preserving ∘ column-preserving ∘ row-preserving.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A permutation of the cells `(i, j)`, `i < n`, `j < m`, stored row-major:
/// `perm[i * m + j]` is the index of the image of `(i, j)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GridDoc", into = "GridDoc")]
pub struct GridPermutation {
    n: usize,
    m: usize,
    perm: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct GridDoc {
    n: usize,
    m: usize,
    perm: Vec<usize>,
}

impl TryFrom<GridDoc> for GridPermutation {
    type Error = Error;
    fn try_from(d: GridDoc) -> Result<Self> {
        GridPermutation::new(d.n, d.m, d.perm)
    }
}

impl From<GridPermutation> for GridDoc {
    fn from(g: GridPermutation) -> Self {
        GridDoc { n: g.n, m: g.m, perm: g.perm }
    }
}

impl GridPermutation {
    pub fn new(n: usize, m: usize, perm: Vec<usize>) -> Result<Self> {
        if perm.len() != n * m {
            return Err(Error::invalid(format!("a {n}x{m} grid has {} cells, got {} images", n * m, perm.len())));
        }
        let mut seen = vec![false; perm.len()];
        for &x in &perm {
            if x >= perm.len() || std::mem::replace(&mut seen[x], true) {
                return Err(Error::invalid("images do not form a permutation of the cells"));
            }
        }
        Ok(GridPermutation { n, m, perm })
    }

    pub fn identity(n: usize, m: usize) -> Self {
        GridPermutation { n, m, perm: (0..n * m).collect() }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.m
    }

    pub fn images(&self) -> &[usize] {
        &self.perm
    }

    pub fn apply(&self, cell: (usize, usize)) -> (usize, usize) {
        let x = self.perm[cell.0 * self.m + cell.1];
        (x / self.m, x % self.m)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn after(&self, other: &Self) -> Self {
        GridPermutation { n: self.n, m: self.m, perm: other.perm.iter().map(|&x| self.perm[x]).collect() }
    }

    pub fn preserves_rows(&self) -> bool {
        self.perm.iter().enumerate().all(|(c, &x)| c / self.m == x / self.m)
    }

    pub fn preserves_cols(&self) -> bool {
        self.perm.iter().enumerate().all(|(c, &x)| c % self.m == x % self.m)
    }
}

/// `rho = f1 ∘ h ∘ f2` with `f1`, `f2` preserving rows and `h` preserving
/// columns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridFactorization {
    pub f1: GridPermutation,
    pub h: GridPermutation,
    pub f2: GridPermutation,
}

impl GridFactorization {
    pub fn verify(&self, rho: &GridPermutation) -> std::result::Result<(), String> {
        if !self.f1.preserves_rows() || !self.f2.preserves_rows() {
            return Err("an outer factor moves a cell to another row".into());
        }
        if !self.h.preserves_cols() {
            return Err("the middle factor moves a cell to another column".into());
        }
        if self.f1.after(&self.h).after(&self.f2) != *rho {
            return Err("factors do not recompose to the permutation".into());
        }
        Ok(())
    }
}

/// Colours the cells so that the cells of each source row, and the images
/// in each target row, receive distinct colours `0..m`. The cells form an
/// `m`-regular bipartite multigraph between source and target rows; each
/// colour class is a perfect matching found by augmenting paths, trying
/// cells in increasing order.
fn edge_colouring(rho: &GridPermutation) -> Vec<usize> {
    let (n, m) = (rho.n, rho.m);
    let mut colour = vec![usize::MAX; n * m];
    for k in 0..m {
        // match_target[r] = cell currently matched into target row r.
        let mut match_target: Vec<Option<usize>> = vec![None; n];
        for row in 0..n {
            let mut visited = vec![false; n];
            let found = augment(rho, &colour, row, &mut match_target, &mut visited);
            debug_assert!(found, "regular bipartite multigraphs have perfect matchings");
        }
        for cell in match_target.into_iter().flatten() {
            colour[cell] = k;
        }
    }
    colour
}

fn augment(rho: &GridPermutation, colour: &[usize], row: usize, match_target: &mut [Option<usize>], visited: &mut [bool]) -> bool {
    let m = rho.m;
    for cell in row * m..(row + 1) * m {
        if colour[cell] != usize::MAX {
            continue;
        }
        let target = rho.perm[cell] / m;
        if visited[target] {
            continue;
        }
        visited[target] = true;
        let free = match match_target[target] {
            None => true,
            Some(other) => augment(rho, colour, other / m, match_target, visited),
        };
        if free {
            match_target[target] = Some(cell);
            return true;
        }
    }
    false
}

/// Factors `rho` through a proper edge colouring: `f2` sends each cell to
/// the column of its colour, `h` moves colour classes between rows, and `f1`
/// places each cell at its image within the target row.
pub fn factor_grid_permutation(rho: &GridPermutation) -> Result<GridFactorization> {
    let (n, m) = (rho.n, rho.m);
    let colour = edge_colouring(rho);
    let mut f2 = vec![0; n * m];
    let mut h = vec![0; n * m];
    let mut f1 = vec![0; n * m];
    for cell in 0..n * m {
        let (i, k) = (cell / m, colour[cell]);
        let target = rho.perm[cell];
        let i2 = target / m;
        f2[cell] = i * m + k;
        h[i * m + k] = i2 * m + k;
        f1[i2 * m + k] = target;
    }
    let out = GridFactorization {
        f1: GridPermutation::new(n, m, f1).map_err(|e| Error::defect(format!("first factor: {e}")))?,
        h: GridPermutation::new(n, m, h).map_err(|e| Error::defect(format!("middle factor: {e}")))?,
        f2: GridPermutation::new(n, m, f2).map_err(|e| Error::defect(format!("last factor: {e}")))?,
    };
    out.verify(rho).map_err(Error::defect)?;
    Ok(out)
}
