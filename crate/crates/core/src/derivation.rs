//! The pruning operator on index grids used to select tensor atoms along a
//! stable chain.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Cell = (usize, usize);
pub type Grid = BTreeSet<Cell>;

/// Index data for one stable chain on `{0, ..., k-1}` per side.
///
/// `gamma[e]` is the set of beginning indices whose thread returns to the
/// beginning, landing on `lambda[e]`; `delta[β]` lists the blocks of
/// beginning indices whose thread ends in free atom `β`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainGrid {
    pub k_left: usize,
    pub k_right: usize,
    pub gamma_left: Vec<BTreeSet<usize>>,
    pub gamma_right: Vec<BTreeSet<usize>>,
    pub lambda_left: Vec<BTreeSet<usize>>,
    pub lambda_right: Vec<BTreeSet<usize>>,
    pub delta_left: Vec<Vec<BTreeSet<usize>>>,
    pub delta_right: Vec<Vec<BTreeSet<usize>>>,
}

fn check_side(k: usize, gamma: &[BTreeSet<usize>], lambda: &[BTreeSet<usize>], delta: &[Vec<BTreeSet<usize>>]) -> Result<()> {
    if gamma.len() != lambda.len() {
        return Err(Error::invalid("returning threads and landing blocks differ in number"));
    }
    let partition = |blocks: &mut dyn Iterator<Item = &BTreeSet<usize>>, what: &str| -> Result<()> {
        let mut seen = BTreeSet::new();
        for b in blocks {
            if b.is_empty() {
                return Err(Error::invalid(format!("empty {what} block")));
            }
            for &i in b {
                if i >= k || !seen.insert(i) {
                    return Err(Error::invalid(format!("{what} blocks do not partition 0..{k}")));
                }
            }
        }
        if seen.len() != k {
            return Err(Error::invalid(format!("{what} blocks do not cover 0..{k}")));
        }
        Ok(())
    };
    partition(&mut lambda.iter(), "landing")?;
    partition(&mut gamma.iter().chain(delta.iter().flatten()), "thread")?;
    Ok(())
}

impl ChainGrid {
    pub fn check(&self) -> Result<()> {
        check_side(self.k_left, &self.gamma_left, &self.lambda_left, &self.delta_left)?;
        check_side(self.k_right, &self.gamma_right, &self.lambda_right, &self.delta_right)?;
        if self.delta_left.len() != self.delta_right.len() {
            return Err(Error::invalid("sides disagree on the number of free atoms"));
        }
        Ok(())
    }

    /// Union of all returning-thread products and all same-free-atom
    /// products.
    pub fn initial(&self) -> Grid {
        let mut x = Grid::new();
        for ge in &self.gamma_left {
            for gd in &self.gamma_right {
                x.extend(product(ge, gd));
            }
        }
        for (dl, dr) in self.delta_left.iter().zip(&self.delta_right) {
            for a in dl {
                for b in dr {
                    x.extend(product(a, b));
                }
            }
        }
        x
    }

    /// Indices of the returning thread on each side containing `(i, j)`.
    fn thread_of(&self, (i, j): Cell) -> Option<(usize, usize)> {
        let e = self.gamma_left.iter().position(|g| g.contains(&i))?;
        let d = self.gamma_right.iter().position(|g| g.contains(&j))?;
        Some((e, d))
    }
}

pub fn product<'a>(a: &'a BTreeSet<usize>, b: &BTreeSet<usize>) -> impl Iterator<Item = Cell> + 'a {
    let b: Vec<usize> = b.iter().copied().collect();
    a.iter().flat_map(move |&i| b.clone().into_iter().map(move |j| (i, j)))
}

fn meets(y: &Grid, a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> bool {
    a.iter().any(|&i| b.iter().any(|&j| y.contains(&(i, j))))
}

/// One application of the operator: keep a cell on a pair of returning
/// threads only if the pair's landing window still meets `y`.
pub fn derivation_step(y: &Grid, g: &ChainGrid) -> Result<Grid> {
    g.check()?;
    Ok(step_unchecked(y, g))
}

fn step_unchecked(y: &Grid, g: &ChainGrid) -> Grid {
    y.iter()
        .copied()
        .filter(|&c| match g.thread_of(c) {
            Some((e, d)) => meets(y, &g.lambda_left[e], &g.lambda_right[d]),
            None => true,
        })
        .collect()
}

/// Iterates the operator from `x0` until it stabilizes. Every row and column
/// of the result is nonempty; a violation is reported as a defect.
pub fn derivation_fixed_point(x0: &Grid, g: &ChainGrid) -> Result<Grid> {
    g.check()?;
    let mut y = x0.clone();
    loop {
        let next = step_unchecked(&y, g);
        if next == y {
            break;
        }
        y = next;
    }
    let rows: BTreeSet<usize> = y.iter().map(|c| c.0).collect();
    let cols: BTreeSet<usize> = y.iter().map(|c| c.1).collect();
    if rows.len() != g.k_left || cols.len() != g.k_right {
        return Err(Error::defect("fixed point has an empty row or column"));
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    fn diagonal_two() -> ChainGrid {
        ChainGrid {
            k_left: 2,
            k_right: 2,
            gamma_left: vec![s(&[0]), s(&[1])],
            gamma_right: vec![s(&[0]), s(&[1])],
            lambda_left: vec![s(&[0]), s(&[1])],
            lambda_right: vec![s(&[0]), s(&[1])],
            delta_left: vec![],
            delta_right: vec![],
        }
    }

    #[test]
    fn window_rule_by_direct_evaluation() {
        let y: Grid = [(0, 0), (0, 1)].into_iter().collect();
        assert_eq!(derivation_step(&y, &diagonal_two()).unwrap(), y);
        let y: Grid = [(0, 1), (1, 1)].into_iter().collect();
        // (0,1) lands on (0,1): kept. (1,1) lands on (1,1): kept.
        assert_eq!(derivation_step(&y, &diagonal_two()).unwrap(), y);
        let y: Grid = [(1, 0)].into_iter().collect();
        assert_eq!(derivation_step(&y, &diagonal_two()).unwrap(), y);
    }

    #[test]
    fn crossing_landing_removes_cells() {
        let mut g = diagonal_two();
        g.lambda_left = vec![s(&[1]), s(&[0])];
        let y: Grid = [(0, 0)].into_iter().collect();
        assert!(derivation_step(&y, &g).unwrap().is_empty());
    }

    #[test]
    fn vacuous_guard_keeps_everything() {
        let g = ChainGrid {
            k_left: 2,
            k_right: 2,
            gamma_left: vec![s(&[0])],
            gamma_right: vec![s(&[0])],
            lambda_left: vec![s(&[0, 1])],
            lambda_right: vec![s(&[0, 1])],
            delta_left: vec![vec![s(&[1])]],
            delta_right: vec![vec![s(&[1])]],
        };
        let y: Grid = [(1, 1), (0, 1), (1, 0)].into_iter().collect();
        assert_eq!(derivation_step(&y, &g).unwrap(), y);
    }

    #[test]
    fn rejects_non_partition() {
        let mut g = diagonal_two();
        g.lambda_left = vec![s(&[0]), s(&[0])];
        assert!(derivation_step(&Grid::new(), &g).is_err());
    }
}
