//! Exact balanced transportation problem by the transportation simplex
//! (network simplex on the complete bipartite graph).

use ndarray::{Array2, ArrayView2};

use crate::{Error, Result, Scalar};

#[derive(Clone, Debug)]
pub struct TransportSolution<T> {
    pub flow: Array2<T>,
    pub cost: T,
    pub pivots: usize,
}

struct Tree<T> {
    n: usize,
    m: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<T>,
    // node -> incident basis slots; rows are 0..n, columns n..n+m
    adj: Vec<Vec<usize>>,
    parent: Vec<usize>,
    depth: Vec<usize>,
    pot: Vec<T>,
}

const NONE: usize = usize::MAX;

impl<T: Scalar> Tree<T> {
    fn other(&self, slot: usize, node: usize) -> usize {
        let (i, j) = self.cells[slot];
        if node == i {
            self.n + j
        } else {
            i
        }
    }

    fn refresh(&mut self, cost: &ArrayView2<T>) -> bool {
        let total = self.n + self.m;
        self.parent.iter_mut().for_each(|x| *x = NONE);
        let mut seen = vec![false; total];
        let mut stack = vec![0usize];
        seen[0] = true;
        self.depth[0] = 0;
        self.pot[0] = T::zero();
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for k in 0..self.adj[u].len() {
                let slot = self.adj[u][k];
                let v = self.other(slot, u);
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                count += 1;
                let (i, j) = self.cells[slot];
                self.pot[v] = cost[[i, j]] - self.pot[u];
                self.parent[v] = slot;
                self.depth[v] = self.depth[u] + 1;
                stack.push(v);
            }
        }
        count == total
    }

    fn up(&self, node: usize) -> usize {
        self.other(self.parent[node], node)
    }
}

/// Least-cost start: takes cells in increasing cost order and retires one
/// line per cell, which yields a spanning tree of `n + m - 1` cells.
fn initial_basis<T: Scalar>(cost: &ArrayView2<T>, supply: &[T], demand: &[T]) -> Tree<T> {
    let (n, m) = cost.dim();
    let mut order: Vec<usize> = (0..n * m).collect();
    order.sort_by(|&a, &b| {
        cost[[a / m, a % m]]
            .partial_cmp(&cost[[b / m, b % m]])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut ra = supply.to_vec();
    let mut rb = demand.to_vec();
    let mut row_alive = vec![true; n];
    let mut col_alive = vec![true; m];
    let (mut rows_left, mut cols_left) = (n, m);
    let mut cells = Vec::with_capacity(n + m - 1);
    let mut flow = Vec::with_capacity(n + m - 1);
    for k in order {
        if rows_left == 0 || cols_left == 0 {
            break;
        }
        let (i, j) = (k / m, k % m);
        if !row_alive[i] || !col_alive[j] {
            continue;
        }
        let x = ra[i].min(rb[j]);
        cells.push((i, j));
        flow.push(x);
        if rows_left == 1 && cols_left == 1 {
            rows_left = 0;
            cols_left = 0;
            continue;
        }
        let retire_row = (ra[i] <= rb[j] && rows_left > 1) || cols_left == 1;
        if retire_row {
            row_alive[i] = false;
            rows_left -= 1;
            ra[i] = T::zero();
            rb[j] = (rb[j] - x).max(T::zero());
        } else {
            col_alive[j] = false;
            cols_left -= 1;
            rb[j] = T::zero();
            ra[i] = (ra[i] - x).max(T::zero());
        }
    }
    let mut adj = vec![Vec::new(); n + m];
    for (slot, &(i, j)) in cells.iter().enumerate() {
        adj[i].push(slot);
        adj[n + j].push(slot);
    }
    Tree {
        n,
        m,
        cells,
        flow,
        adj,
        parent: vec![NONE; n + m],
        depth: vec![0; n + m],
        pot: vec![T::zero(); n + m],
    }
}

/// Minimizes `<cost, X>` over `X >= 0` with row sums `supply` and column
/// sums `demand`. The totals must agree up to rounding.
pub fn solve_transport<T: Scalar>(
    cost: ArrayView2<T>,
    supply: &[T],
    demand: &[T],
) -> Result<TransportSolution<T>> {
    let (n, m) = cost.dim();
    if n != supply.len() || m != demand.len() {
        return Err(Error::Shape(format!(
            "cost is {n}x{m} but masses have lengths {} and {}",
            supply.len(),
            demand.len()
        )));
    }
    if n == 0 || m == 0 {
        return Err(Error::Shape("empty transport problem".into()));
    }
    if supply.iter().chain(demand).any(|&x| !(x >= T::zero()) || !x.is_finite()) {
        return Err(Error::InvalidParameter("masses must be finite and nonnegative".into()));
    }
    if cost.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("costs must be finite".into()));
    }
    let (sa, sb): (T, T) = (supply.iter().copied().sum(), demand.iter().copied().sum());
    if (sa - sb).abs() > T::feasibility_tol() * (T::one() + sa.abs()) {
        return Err(Error::InvalidParameter(format!("unbalanced masses: {sa} vs {sb}")));
    }

    let mut tree = initial_basis(&cost, supply, demand);
    if !tree.refresh(&cost) {
        return Err(Error::InvalidParameter("initial basis is not a spanning tree".into()));
    }

    let scale = cost.iter().fold(T::zero(), |a, &x| a.max(x.abs())) + T::one();
    let tol = scale * T::epsilon() * T::lit(64.0);
    let total = n * m;
    let block = ((total as f64).sqrt().ceil() as usize).max(32).min(total);
    let max_pivots = 50 * (n + m) * (n + m) + 1000;
    let mut cursor = 0usize;
    let mut pivots = 0usize;
    let mut degenerate_run = 0usize;

    loop {
        let bland = degenerate_run > n + m;
        let entering = if bland {
            (0..total).find(|&k| {
                let (i, j) = (k / m, k % m);
                cost[[i, j]] - tree.pot[i] - tree.pot[n + j] < -tol
            })
        } else {
            let mut best: Option<(usize, T)> = None;
            let mut scanned = 0;
            while scanned < total {
                let end = (scanned + block).min(total);
                for _ in scanned..end {
                    let k = cursor;
                    cursor += 1;
                    if cursor == total {
                        cursor = 0;
                    }
                    let (i, j) = (k / m, k % m);
                    let r = cost[[i, j]] - tree.pot[i] - tree.pot[n + j];
                    if r < -tol && best.is_none_or(|(_, b)| r < b) {
                        best = Some((k, r));
                    }
                }
                scanned = end;
                if best.is_some() {
                    break;
                }
            }
            best.map(|(k, _)| k)
        };
        let Some(k) = entering else { break };
        if pivots >= max_pivots {
            log::warn!("transport simplex stopped after {pivots} pivots");
            break;
        }
        pivots += 1;
        let (ei, ej) = (k / m, k % m);

        // tree path from row ei to column ej
        let (mut a, mut b) = (ei, n + ej);
        let mut from_a = Vec::new();
        let mut from_b = Vec::new();
        while tree.depth[a] > tree.depth[b] {
            from_a.push(tree.parent[a]);
            a = tree.up(a);
        }
        while tree.depth[b] > tree.depth[a] {
            from_b.push(tree.parent[b]);
            b = tree.up(b);
        }
        while a != b {
            from_a.push(tree.parent[a]);
            a = tree.up(a);
            from_b.push(tree.parent[b]);
            b = tree.up(b);
        }
        from_a.extend(from_b.into_iter().rev());
        let path = from_a;

        // even positions lose flow, odd positions gain
        let mut leave = path[0];
        for &slot in path.iter().step_by(2) {
            let (f, lf) = (tree.flow[slot], tree.flow[leave]);
            let better = if bland {
                f < lf || (f == lf && cell_index(&tree, slot, m) < cell_index(&tree, leave, m))
            } else {
                f < lf
            };
            if better {
                leave = slot;
            }
        }
        let theta = tree.flow[leave];
        degenerate_run = if theta > T::zero() { 0 } else { degenerate_run + 1 };
        for (pos, &slot) in path.iter().enumerate() {
            if pos % 2 == 0 {
                tree.flow[slot] -= theta;
            } else {
                tree.flow[slot] += theta;
            }
        }
        let (li, lj) = tree.cells[leave];
        tree.adj[li].retain(|&s| s != leave);
        tree.adj[n + lj].retain(|&s| s != leave);
        tree.cells[leave] = (ei, ej);
        tree.flow[leave] = theta;
        tree.adj[ei].push(leave);
        tree.adj[n + ej].push(leave);
        if !tree.refresh(&cost) {
            return Err(Error::InvalidParameter("basis lost the spanning tree property".into()));
        }
    }

    let mut flow = Array2::zeros((n, m));
    let mut total_cost = T::zero();
    for (slot, &(i, j)) in tree.cells.iter().enumerate() {
        let x = tree.flow[slot].max(T::zero());
        flow[[i, j]] = x;
        total_cost += x * cost[[i, j]];
    }
    Ok(TransportSolution {
        flow,
        cost: total_cost,
        pivots,
    })
}

fn cell_index<T>(tree: &Tree<T>, slot: usize, m: usize) -> usize {
    let (i, j) = tree.cells[slot];
    i * m + j
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force_assignment(cost: &Array2<f64>) -> f64 {
        // uniform masses on a square problem: optimum is a permutation
        let n = cost.nrows();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let c: f64 = p.iter().enumerate().map(|(i, &j)| cost[[i, j]]).sum();
            best = best.min(c);
        });
        best / n as f64
    }

    fn permute(p: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == p.len() {
            visit(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permute(p, k + 1, visit);
            p.swap(k, i);
        }
    }

    #[test]
    fn two_by_two() {
        let c = array![[1.0, 0.0], [0.0, 1.0]];
        let s = solve_transport(c.view(), &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!(s.cost, 0.0);
        assert_eq!(s.flow, array![[0.0, 0.5], [0.5, 0.0]]);
    }

    #[test]
    fn matches_permutation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=6 {
            for _ in 0..20 {
                let c = Array2::from_shape_fn((n, n), |_| rng.gen_range(0.0..10.0));
                let p = vec![1.0 / n as f64; n];
                let s = solve_transport(c.view(), &p, &p).unwrap();
                assert!((s.cost - brute_force_assignment(&c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn marginals_hold_on_rectangular_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = rng.gen_range(1..15);
            let m = rng.gen_range(1..15);
            let mut a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let mut b: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
            let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
            a.iter_mut().for_each(|x| *x /= sa);
            b.iter_mut().for_each(|x| *x /= sb);
            let c = Array2::from_shape_fn((n, m), |_| rng.gen_range(-1.0..1.0));
            let s = solve_transport(c.view(), &a, &b).unwrap();
            for i in 0..n {
                assert!((s.flow.row(i).sum() - a[i]).abs() < 1e-12);
            }
            for j in 0..m {
                assert!((s.flow.column(j).sum() - b[j]).abs() < 1e-12);
            }
            assert!(s.flow.iter().all(|&x| x >= 0.0));
            assert!(s.flow.iter().filter(|&&x| x > 0.0).count() <= n + m - 1);
        }
    }

    #[test]
    fn degenerate_ties_terminate() {
        let c = Array2::<f64>::zeros((8, 8));
        let p = vec![0.125; 8];
        let s = solve_transport(c.view(), &p, &p).unwrap();
        assert_eq!(s.cost, 0.0);
        let c = Array2::from_shape_fn((6, 9), |(i, j)| ((i + j) % 3) as f64);
        let s = solve_transport(c.view(), &[1.0 / 6.0; 6], &[1.0 / 9.0; 9]).unwrap();
        assert!(s.cost.abs() < 1e-12);
    }

    #[test]
    fn rejects_unbalanced() {
        let c = Array2::<f64>::zeros((2, 2));
        assert!(solve_transport(c.view(), &[0.5, 0.5], &[0.5, 0.6]).is_err());
    }

    #[test]
    fn single_precision() {
        let c = array![[2.0f32, 1.0], [1.0, 3.0]];
        let s = solve_transport(c.view(), &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert!((s.cost - 1.0).abs() < 1e-6);
    }
}
