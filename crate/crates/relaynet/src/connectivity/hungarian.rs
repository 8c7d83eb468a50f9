use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Robot-to-task matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// Task of each robot (row); `None` when there are more robots than tasks.
    pub robot_to_task: Vec<Option<usize>>,
    pub total_cost: f64,
}

impl Assignment {
    pub fn task_of(&self, robot: usize) -> Option<usize> {
        self.robot_to_task[robot]
    }

    pub fn robot_of(&self, task: usize) -> Option<usize> {
        self.robot_to_task.iter().position(|&t| t == Some(task))
    }

    /// `(robot, task)` pairs in robot order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.robot_to_task
            .iter()
            .enumerate()
            .filter_map(|(r, t)| t.map(|t| (r, t)))
    }
}

/// Minimum-cost assignment of rows (robots) to columns (tasks).
///
/// Rectangular inputs are padded to square with zero-cost dummy entries, so
/// surplus robots or tasks stay unmatched. Among optimal matchings the one
/// whose column vector over the padded square is lexicographically smallest
/// is returned; dummy columns sort after every real task.
pub fn hungarian_assign(costs: &[Vec<f64>]) -> Result<Assignment> {
    let rows = costs.len();
    let cols = costs.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix);
    }
    for (i, row) in costs.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::InvalidMatrix(format!(
                "row {i} has {} entries, expected {cols}",
                row.len()
            )));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidMatrix(format!("entry {v} in row {i} is not a finite non-negative cost")));
        }
    }

    let n = rows.max(cols);
    let square: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i < rows && j < cols { costs[i][j] } else { 0.0 }).collect())
        .collect();

    let (best, optimum) = solve(&square);
    let tol = 1e-9 * optimum.abs().max(1.0);

    // Fix rows one at a time to the smallest column that still admits an
    // optimal completion.
    let mut fixed = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut prefix = 0.0;
    for i in 0..n {
        let free_cols: Vec<usize> = (0..n).filter(|&j| !used[j]).collect();
        let mut chosen = None;
        for &j in &free_cols {
            let rest_cols: Vec<usize> = free_cols.iter().copied().filter(|&c| c != j).collect();
            let rest: Vec<Vec<f64>> = (i + 1..n)
                .map(|r| rest_cols.iter().map(|&c| square[r][c]).collect())
                .collect();
            let rest_cost = if rest.is_empty() { 0.0 } else { solve(&rest).1 };
            if prefix + square[i][j] + rest_cost <= optimum + tol {
                chosen = Some(j);
                break;
            }
        }
        let j = chosen.unwrap_or(best[i]);
        fixed[i] = j;
        used[j] = true;
        prefix += square[i][j];
    }

    let robot_to_task: Vec<Option<usize>> = (0..rows).map(|i| (fixed[i] < cols).then_some(fixed[i])).collect();
    let total_cost = robot_to_task
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.map(|t| costs[i][t]))
        .sum();
    Ok(Assignment {
        robot_to_task,
        total_cost,
    })
}

/// Shortest augmenting path Hungarian method on a square matrix. Returns the
/// column of each row and the optimal total.
fn solve(a: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = a.len();
    // 1-based potentials and matching, column 0 is a virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    let total = row_to_col.iter().enumerate().map(|(i, &j)| a[i][j]).sum();
    (row_to_col, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_is_free() {
        let c = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        let a = hungarian_assign(&c).unwrap();
        assert_eq!(a.robot_to_task, vec![Some(0), Some(1), Some(2)]);
        assert_eq!(a.total_cost, 0.0);
    }

    #[test]
    fn two_by_two() {
        let a = hungarian_assign(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(a.robot_to_task, vec![Some(0), Some(1)]);
        assert_eq!(a.total_cost, 2.0);
    }

    #[test]
    fn ties_prefer_lexicographically_smallest() {
        let a = hungarian_assign(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(a.robot_to_task, vec![Some(0), Some(1)]);
        let a = hungarian_assign(&[vec![5.0, 5.0, 5.0]]).unwrap();
        assert_eq!(a.robot_to_task, vec![Some(0)]);
    }

    #[test]
    fn surplus_robots_stay_idle() {
        let a = hungarian_assign(&[vec![3.0], vec![1.0], vec![2.0]]).unwrap();
        assert_eq!(a.robot_to_task, vec![None, Some(0), None]);
        assert_eq!(a.robot_of(0), Some(1));
        assert_eq!(a.total_cost, 1.0);
    }

    #[test]
    fn surplus_tasks_stay_open() {
        let a = hungarian_assign(&[vec![4.0, 1.0, 3.0]]).unwrap();
        assert_eq!(a.task_of(0), Some(1));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(hungarian_assign(&[]), Err(Error::EmptyMatrix)));
        assert!(matches!(
            hungarian_assign(&[vec![1.0, 2.0], vec![1.0]]),
            Err(Error::InvalidMatrix(_))
        ));
        assert!(matches!(
            hungarian_assign(&[vec![f64::NAN]]),
            Err(Error::InvalidMatrix(_))
        ));
    }
}
