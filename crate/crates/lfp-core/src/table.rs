//! Materialized relations over named columns: the workhorse behind the
//! extension-based evaluator. Columns are kept sorted by name; every row is
//! a vector aligned with the column order.

use std::collections::{BTreeSet, HashMap};

pub type Row = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Table {
    cols: Vec<String>,
    rows: BTreeSet<Row>,
}

impl Table {
    /// Build a table from columns in any order; rows are given aligned with
    /// the argument order and are permuted into canonical (sorted) order.
    pub fn new(cols: Vec<String>, rows: impl IntoIterator<Item = Row>) -> Table {
        let mut order: Vec<usize> = (0..cols.len()).collect();
        order.sort_by(|&a, &b| cols[a].cmp(&cols[b]));
        let sorted_cols: Vec<String> = order.iter().map(|&i| cols[i].clone()).collect();
        debug_assert!(
            sorted_cols.windows(2).all(|w| w[0] != w[1]),
            "duplicate column names"
        );
        let rows = rows
            .into_iter()
            .map(|r| {
                debug_assert_eq!(r.len(), cols.len());
                order.iter().map(|&i| r[i]).collect()
            })
            .collect();
        Table {
            cols: sorted_cols,
            rows,
        }
    }

    /// Zero-column table acting as a boolean: `{()}` for true, `{}` for
    /// false.
    pub fn boolean(b: bool) -> Table {
        let rows = if b {
            BTreeSet::from([Vec::new()])
        } else {
            BTreeSet::new()
        };
        Table {
            cols: Vec::new(),
            rows,
        }
    }

    pub fn cols(&self) -> &[String] {
        &self.cols
    }

    pub fn rows(&self) -> &BTreeSet<Row> {
        &self.rows
    }

    /// Truth value of a zero-column table.
    pub fn truth(&self) -> bool {
        debug_assert!(self.cols.is_empty());
        !self.rows.is_empty()
    }

    fn col_index(&self, name: &str) -> Option<usize> {
        self.cols.iter().position(|c| c == name)
    }

    /// All tuples over `cols` (a small helper for complements and padding).
    fn all_rows(k: usize, m: usize) -> Vec<Row> {
        let mut out = Vec::with_capacity(m.pow(k as u32));
        let mut cur = vec![0usize; k];
        loop {
            out.push(cur.clone());
            // row-major increment
            let mut i = k;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                cur[i] += 1;
                if cur[i] < m {
                    break;
                }
                cur[i] = 0;
            }
        }
    }

    /// Complement with respect to the full product over the same columns.
    pub fn complement(&self, m: usize) -> Table {
        let rows = Self::all_rows(self.cols.len(), m)
            .into_iter()
            .filter(|r| !self.rows.contains(r))
            .collect();
        Table {
            cols: self.cols.clone(),
            rows,
        }
    }

    /// Natural join on shared column names. The smaller side is indexed.
    pub fn join(&self, other: &Table) -> Table {
        if self.cols.is_empty() {
            return if self.truth() {
                other.clone()
            } else {
                other.clear()
            };
        }
        if other.cols.is_empty() {
            return if other.truth() {
                self.clone()
            } else {
                self.clear()
            };
        }
        if other.rows.len() > self.rows.len() {
            return other.join(self);
        }
        let shared: Vec<String> = self
            .cols
            .iter()
            .filter(|c| other.cols.contains(c))
            .cloned()
            .collect();
        let self_shared: Vec<usize> = shared.iter().map(|c| self.col_index(c).unwrap()).collect();
        let other_shared: Vec<usize> = shared.iter().map(|c| other.col_index(c).unwrap()).collect();
        let other_extra: Vec<usize> = (0..other.cols.len())
            .filter(|i| !other_shared.contains(i))
            .collect();

        // Result columns: union, sorted.
        let mut cols: Vec<String> = self.cols.clone();
        cols.extend(other_extra.iter().map(|&i| other.cols[i].clone()));
        let mut order: Vec<usize> = (0..cols.len()).collect();
        order.sort_by(|&a, &b| cols[a].cmp(&cols[b]));
        let sorted_cols: Vec<String> = order.iter().map(|&i| cols[i].clone()).collect();

        let mut index: HashMap<Vec<usize>, Vec<&Row>> = HashMap::new();
        for row in &other.rows {
            let key: Vec<usize> = other_shared.iter().map(|&i| row[i]).collect();
            index.entry(key).or_default().push(row);
        }

        let mut rows = BTreeSet::new();
        for row in &self.rows {
            let key: Vec<usize> = self_shared.iter().map(|&i| row[i]).collect();
            if let Some(matches) = index.get(&key) {
                for orow in matches {
                    let mut combined: Row = row.clone();
                    combined.extend(other_extra.iter().map(|&i| orow[i]));
                    let reordered: Row = order.iter().map(|&i| combined[i]).collect();
                    rows.insert(reordered);
                }
            }
        }
        Table {
            cols: sorted_cols,
            rows,
        }
    }

    fn clear(&self) -> Table {
        Table {
            cols: self.cols.clone(),
            rows: BTreeSet::new(),
        }
    }

    /// Union after padding both sides to the same column set.
    pub fn union(&self, other: &Table, m: usize) -> Table {
        let mut cols: Vec<String> = self.cols.clone();
        for c in &other.cols {
            if !cols.contains(c) {
                cols.push(c.clone());
            }
        }
        cols.sort();
        let a = self.pad_to(&cols, m);
        let b = other.pad_to(&cols, m);
        let mut rows = a.rows;
        rows.extend(b.rows);
        Table { cols, rows }
    }

    /// Extend to a superset of columns by crossing with the full universe on
    /// each missing column, then reorder to the (sorted) target order.
    pub fn pad_to(&self, target: &[String], m: usize) -> Table {
        debug_assert!(target.windows(2).all(|w| w[0] < w[1]));
        if self.cols == target {
            return self.clone();
        }
        let missing: Vec<&String> = target.iter().filter(|c| !self.cols.contains(c)).collect();
        debug_assert!(self.cols.iter().all(|c| target.contains(c)));
        let fills = Self::all_rows(missing.len(), m);
        // Position of each target column in (self.cols ++ missing).
        let combined: Vec<&String> = self.cols.iter().chain(missing.iter().copied()).collect();
        let positions: Vec<usize> = target
            .iter()
            .map(|c| combined.iter().position(|d| *d == c).unwrap())
            .collect();
        let mut rows = BTreeSet::new();
        for row in &self.rows {
            for fill in &fills {
                let mut combined_row: Row = row.clone();
                combined_row.extend(fill.iter().copied());
                rows.insert(positions.iter().map(|&i| combined_row[i]).collect());
            }
        }
        Table {
            cols: target.to_vec(),
            rows,
        }
    }

    /// Project a column away (existential quantification).
    pub fn project_out(&self, col: &str) -> Table {
        match self.col_index(col) {
            None => self.clone(),
            Some(idx) => {
                let cols: Vec<String> = self
                    .cols
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != idx)
                    .map(|(_, c)| c.clone())
                    .collect();
                let rows = self
                    .rows
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|(i, _)| *i != idx)
                            .map(|(_, &v)| v)
                            .collect()
                    })
                    .collect();
                Table { cols, rows }
            }
        }
    }

    /// Rows reordered into an explicit column order (columns not present are
    /// an error in debug builds; use `pad_to` first).
    pub fn rows_in_order(&self, order: &[String]) -> BTreeSet<Row> {
        let positions: Vec<usize> = order
            .iter()
            .map(|c| self.col_index(c).expect("column present"))
            .collect();
        self.rows
            .iter()
            .map(|r| positions.iter().map(|&i| r[i]).collect())
            .collect()
    }
}

/// Row-major enumeration of all `k`-tuples over `0..m`, the documented tuple
/// order used for witness tie-breaking.
pub fn all_tuples(m: usize, k: usize) -> Vec<Row> {
    Table::all_rows(k, m)
}

/// Row-major rank of a tuple over `0..m`.
pub fn tuple_rank(t: &[usize], m: usize) -> usize {
    t.iter().fold(0, |acc, &v| acc * m + v)
}

/// Inverse of `tuple_rank`.
pub fn tuple_from_rank(mut rank: usize, m: usize, k: usize) -> Row {
    let mut out = vec![0usize; k];
    for i in (0..k).rev() {
        out[i] = rank % m;
        rank /= m;
    }
    out
}
