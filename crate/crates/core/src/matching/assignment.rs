//! Choosing the pairing between two item lists.
//!
//! Every cell carries a match class and a weighted distance. A pairing is an
//! injection from rows into columns; its class is the worst cell class (or the
//! caller's `floor`, whichever is worse) and its cost is the sum of cell costs.
//! Pairings are ranked lexicographically by (class, cost).
//!
//! Up to [`MAX_ENUM`] columns all injections are enumerated in lexicographic
//! order and the first strict optimum wins. Larger problems run a threshold
//! search: for each class in turn, a Hungarian assignment restricted to cells
//! no worse than that class; the first feasible class is the optimum.

use crate::ontology::MatchValue;

/// Largest column count solved by exhaustive enumeration.
pub const MAX_ENUM: usize = 6;

const COST_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub class: MatchValue,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub class: MatchValue,
    pub cost: f64,
    /// `columns[row]` is the column paired with `row`.
    pub columns: Vec<usize>,
}

/// Best injection of `cells.len()` rows into `cols` columns.
///
/// Returns `None` only when there are more rows than columns.
pub fn best_injection(cells: &[Vec<Cell>], cols: usize, floor: MatchValue) -> Option<Assignment> {
    let rows = cells.len();
    if rows > cols {
        return None;
    }
    if rows == 0 {
        return Some(Assignment {
            class: floor,
            cost: 0.0,
            columns: Vec::new(),
        });
    }
    if cols <= MAX_ENUM {
        Some(enumerate(cells, cols, floor))
    } else {
        Some(threshold_assignment(cells, cols, floor))
    }
}

/// Exhaustive search; also the reference used by the tests for the threshold path.
pub fn enumerate(cells: &[Vec<Cell>], cols: usize, floor: MatchValue) -> Assignment {
    struct Search<'a> {
        cells: &'a [Vec<Cell>],
        used: Vec<bool>,
        current: Vec<usize>,
        best: Option<Assignment>,
    }

    impl Search<'_> {
        fn go(&mut self, row: usize, class: MatchValue, cost: f64) {
            if let Some(best) = &self.best {
                if class > best.class {
                    return;
                }
            }
            if row == self.cells.len() {
                let better = match &self.best {
                    None => true,
                    Some(b) => class < b.class || cost < b.cost - COST_EPS,
                };
                if better {
                    self.best = Some(Assignment {
                        class,
                        cost,
                        columns: self.current.clone(),
                    });
                }
                return;
            }
            for col in 0..self.used.len() {
                if self.used[col] {
                    continue;
                }
                let cell = self.cells[row][col];
                self.used[col] = true;
                self.current.push(col);
                self.go(row + 1, class.max(cell.class), cost + cell.cost);
                self.current.pop();
                self.used[col] = false;
            }
        }
    }

    let mut search = Search {
        cells,
        used: vec![false; cols],
        current: Vec::with_capacity(cells.len()),
        best: None,
    };
    search.go(0, floor, 0.0);
    search.best.expect("rows <= cols leaves at least one injection")
}

fn threshold_assignment(cells: &[Vec<Cell>], cols: usize, floor: MatchValue) -> Assignment {
    const FORBIDDEN: f64 = 1e9;
    for &limit in MatchValue::ALL.iter().filter(|&&c| c >= floor) {
        let costs: Vec<Vec<f64>> = cells
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| if c.class <= limit { c.cost } else { FORBIDDEN })
                    .collect()
            })
            .collect();
        let columns = hungarian(&costs, cols);
        let feasible = columns.iter().enumerate().all(|(r, &c)| cells[r][c].class <= limit);
        if feasible {
            let class = columns
                .iter()
                .enumerate()
                .map(|(r, &c)| cells[r][c].class)
                .fold(floor, MatchValue::max);
            let cost = columns.iter().enumerate().map(|(r, &c)| cells[r][c].cost).sum();
            return Assignment { class, cost, columns };
        }
    }
    unreachable!("with limit = Fail every cell is allowed")
}

/// Minimum-cost assignment of rows to distinct columns (rows <= cols),
/// shortest-augmenting-path form with potentials. O(rows^2 * cols).
pub fn hungarian(cost: &[Vec<f64>], cols: usize) -> Vec<usize> {
    let n = cost.len();
    assert!(n <= cols, "more rows than columns");
    // 1-based arrays; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut columns = vec![0; n];
    for j in 1..=cols {
        if owner[j] != 0 {
            columns[owner[j] - 1] = j - 1;
        }
    }
    columns
}
