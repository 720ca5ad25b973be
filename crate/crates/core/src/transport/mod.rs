//! Wasserstein, Gromov-Wasserstein and fused GW objectives between measure
//! networks, with a Frank-Wolfe solver over partial couplings.
//!
//! Partial transport of mass `m` is reduced to balanced transport by
//! appending one dummy node with mass `1 - m` to each side. Real-to-dummy
//! cells cost nothing and the dummy-to-dummy cell costs `xi`, so every
//! optimal plan leaves the dummy corner empty and moves exactly `m` between
//! real nodes.

mod simplex;

pub use simplex::{solve_transport, TransportSolution};

use ndarray::{s, Array1, Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::network::{array_to_rows, rows_to_array, MeasureNetwork};
use crate::{Error, Result, Scalar};

/// A transport plan between two node measures.
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling<T> {
    matrix: Array2<T>,
    mass: T,
    row_slack: Array1<T>,
    col_slack: Array1<T>,
}

impl<T: Scalar> Coupling<T> {
    pub fn new(matrix: Array2<T>, p1: &Array1<T>, p2: &Array1<T>, mass: T) -> Result<Self> {
        if matrix.dim() != (p1.len(), p2.len()) {
            return Err(Error::Shape(format!(
                "coupling is {:?}, measures have lengths {} and {}",
                matrix.dim(),
                p1.len(),
                p2.len()
            )));
        }
        let row_slack = p1 - &matrix.sum_axis(ndarray::Axis(1));
        let col_slack = p2 - &matrix.sum_axis(ndarray::Axis(0));
        Ok(Self {
            matrix,
            mass,
            row_slack,
            col_slack,
        })
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<T> {
        self.matrix
    }

    /// Target mass `m`.
    pub fn mass(&self) -> T {
        self.mass
    }

    /// `1^T C 1`.
    pub fn total(&self) -> T {
        self.matrix.sum()
    }

    pub fn row_slack(&self) -> &Array1<T> {
        &self.row_slack
    }

    pub fn col_slack(&self) -> &Array1<T> {
        &self.col_slack
    }

    pub fn transpose(&self) -> Self {
        Self {
            matrix: self.matrix.t().to_owned(),
            mass: self.mass,
            row_slack: self.col_slack.clone(),
            col_slack: self.row_slack.clone(),
        }
    }

    /// Nonnegativity, dominated marginals and total mass, all up to `tol`.
    pub fn check(&self, tol: T) -> Result<()> {
        if let Some(x) = self.matrix.iter().find(|&&x| x < T::zero()) {
            return Err(Error::InvalidParameter(format!("negative coupling entry {x}")));
        }
        let worst = self
            .row_slack
            .iter()
            .chain(self.col_slack.iter())
            .fold(T::infinity(), |a, &b| a.min(b));
        if worst < -tol {
            return Err(Error::InvalidParameter(format!("marginal exceeded by {}", -worst)));
        }
        let total = self.total();
        if (total - self.mass).abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "coupling mass {total} differs from m = {}",
                self.mass
            )));
        }
        Ok(())
    }

    pub fn is_feasible(&self, tol: T) -> bool {
        self.check(tol).is_ok()
    }

    /// Rows without any positive entry.
    pub fn zero_rows(&self) -> Vec<usize> {
        (0..self.matrix.nrows())
            .filter(|&i| self.matrix.row(i).iter().all(|&x| x <= T::zero()))
            .collect()
    }

    /// Columns without any positive entry.
    pub fn zero_cols(&self) -> Vec<usize> {
        (0..self.matrix.ncols())
            .filter(|&j| self.matrix.column(j).iter().all(|&x| x <= T::zero()))
            .collect()
    }
}

/// How the attribute term enters the fused objective.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeMode {
    /// `(1^T C 1) * <M, C>`, the double sum over two couplings.
    #[default]
    Literal,
    /// `<M, C>`.
    Linear,
}

impl std::str::FromStr for AttributeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(AttributeMode::Literal),
            "linear" => Ok(AttributeMode::Linear),
            other => Err(Error::InvalidParameter(format!("unknown attribute mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverParams<T> {
    pub q: T,
    pub alpha: T,
    pub m: T,
    pub max_iters: usize,
    pub rel_tol: T,
    /// Dummy-to-dummy cost; derived from the inputs when `None`.
    pub dummy_penalty: Option<T>,
    pub attribute_mode: AttributeMode,
    /// Warm start; `m p1 p2^T` when `None`.
    pub init: Option<Array2<T>>,
    /// Try the last linear-minimization vertex and keep it when not worse.
    pub polish: bool,
}

impl<T: Scalar> Default for SolverParams<T> {
    fn default() -> Self {
        Self {
            q: T::lit(2.0),
            alpha: T::one(),
            m: T::one(),
            max_iters: 1000,
            rel_tol: T::lit(1e-9),
            dummy_penalty: None,
            attribute_mode: AttributeMode::Literal,
            init: None,
            polish: true,
        }
    }
}

impl<T: Scalar> SolverParams<T> {
    pub fn new(alpha: T, m: T) -> Self {
        Self {
            alpha,
            m,
            ..Self::default()
        }
    }

    pub fn with_q(mut self, q: T) -> Self {
        self.q = q;
        self
    }

    pub fn with_init(mut self, init: Array2<T>) -> Self {
        self.init = Some(init);
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_attribute_mode(mut self, mode: AttributeMode) -> Self {
        self.attribute_mode = mode;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.m > T::zero() && self.m <= T::one()) {
            return Err(Error::InfeasibleMass(self.m.as_f64()));
        }
        if !(self.alpha >= T::zero() && self.alpha <= T::one()) {
            return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if !(self.q >= T::one()) {
            return Err(Error::InvalidParameter(format!("q must be >= 1, got {}", self.q)));
        }
        if let Some(xi) = self.dummy_penalty {
            if !(xi > T::zero()) {
                return Err(Error::InvalidParameter(format!("dummy penalty must be positive, got {xi}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport<T> {
    /// Minimized objective.
    pub objective: T,
    /// Objective in distance units: `1/2 obj^(1/q)` for GW, `obj^(1/q)` for
    /// Wasserstein, the raw objective for fused problems.
    pub distance: T,
    pub coupling: Coupling<T>,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct CouplingDoc<T> {
    #[serde(rename = "C")]
    c: Vec<Vec<T>>,
    m: T,
    objective: T,
    iterations: usize,
    converged: bool,
}

impl<T: Scalar> SolveReport<T> {
    /// `{C, m, objective, iterations, converged}`.
    pub fn to_json(&self) -> Result<String> {
        let doc = CouplingDoc {
            c: array_to_rows(self.coupling.matrix()),
            m: self.coupling.mass(),
            objective: self.objective,
            iterations: self.iterations,
            converged: self.converged,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// Coupling matrix and header fields read back from [`SolveReport::to_json`].
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingRecord<T> {
    pub matrix: Array2<T>,
    pub m: T,
    pub objective: T,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Scalar> CouplingRecord<T> {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CouplingDoc<T> = serde_json::from_str(text)?;
        Ok(Self {
            matrix: rows_to_array(&doc.c, None)?,
            m: doc.m,
            objective: doc.objective,
            iterations: doc.iterations,
            converged: doc.converged,
        })
    }
}

/// `M(i, j) = |a_i - b_j|^q` over attribute rows.
pub fn wasserstein_cost_matrix<T: Scalar>(
    a: &MeasureNetwork<T>,
    b: &MeasureNetwork<T>,
    q: T,
) -> Result<Array2<T>> {
    let (Some(xa), Some(xb)) = (a.attrs(), b.attrs()) else {
        return Err(Error::MissingAttributes);
    };
    if xa.ncols() != xb.ncols() {
        return Err(Error::Shape(format!(
            "attribute dimensions differ: {} vs {}",
            xa.ncols(),
            xb.ncols()
        )));
    }
    Ok(Array2::from_shape_fn((xa.nrows(), xb.nrows()), |(i, j)| {
        let d2 = xa
            .row(i)
            .iter()
            .zip(xb.row(j))
            .map(|(&u, &v)| (u - v) * (u - v))
            .fold(T::zero(), |s, x| s + x);
        if q == T::lit(2.0) {
            d2
        } else {
            d2.sqrt().powf(q)
        }
    }))
}

fn check_shapes<T>(c: &ArrayView2<T>, w1: &ArrayView2<T>, w2: &ArrayView2<T>) -> Result<()> {
    let (n1, n2) = c.dim();
    if w1.dim() != (n1, n1) || w2.dim() != (n2, n2) {
        return Err(Error::Shape(format!(
            "coupling {:?} against W1 {:?} and W2 {:?}",
            c.dim(),
            w1.dim(),
            w2.dim()
        )));
    }
    Ok(())
}

/// `sum_{i,j,k,l} |W1(i,k) - W2(j,l)|^q C(i,j) C(k,l)`, evaluated literally.
pub fn gw_loss<T: Scalar>(c: ArrayView2<T>, w1: ArrayView2<T>, w2: ArrayView2<T>, q: T) -> Result<T> {
    check_shapes(&c, &w1, &w2)?;
    let (n1, n2) = c.dim();
    let mut total = T::zero();
    for i in 0..n1 {
        for j in 0..n2 {
            let cij = c[[i, j]];
            if cij == T::zero() {
                continue;
            }
            let mut inner = T::zero();
            for k in 0..n1 {
                for l in 0..n2 {
                    inner += (w1[[i, k]] - w2[[j, l]]).abs().powf(q) * c[[k, l]];
                }
            }
            total += cij * inner;
        }
    }
    Ok(total)
}

/// [`gw_loss`] for `q = 2` in `O(n1^2 n2 + n1 n2^2)`.
pub fn gw_loss_fast<T: Scalar>(c: ArrayView2<T>, w1: ArrayView2<T>, w2: ArrayView2<T>) -> Result<T> {
    check_shapes(&c, &w1, &w2)?;
    let sq1 = w1.mapv(|x| x * x);
    let sq2 = w2.mapv(|x| x * x);
    Ok(inner(&tensor_q2(&c, &w1, &w2, &sq1, &sq2), &c))
}

/// `L(C)(i, j) = sum_{k,l} |W1(i,k) - W2(j,l)|^2 C(k,l)`, using the actual
/// marginals of `C`.
fn tensor_q2<T: Scalar>(
    c: &ArrayView2<T>,
    w1: &ArrayView2<T>,
    w2: &ArrayView2<T>,
    sq1: &Array2<T>,
    sq2: &Array2<T>,
) -> Array2<T> {
    let r = c.sum_axis(ndarray::Axis(1));
    let col = c.sum_axis(ndarray::Axis(0));
    let a = sq1.dot(&r);
    let b = sq2.dot(&col);
    let cross = w1.dot(c).dot(&w2.t());
    let two = T::lit(2.0);
    Array2::from_shape_fn(c.dim(), |(i, j)| a[i] + b[j] - two * cross[[i, j]])
}

fn tensor_general<T: Scalar>(c: &ArrayView2<T>, w1: &ArrayView2<T>, w2: &ArrayView2<T>, q: T) -> Array2<T> {
    let (n1, n2) = c.dim();
    Array2::from_shape_fn((n1, n2), |(i, j)| {
        let mut s = T::zero();
        for k in 0..n1 {
            for l in 0..n2 {
                let ckl = c[[k, l]];
                if ckl != T::zero() {
                    s += (w1[[i, k]] - w2[[j, l]]).abs().powf(q) * ckl;
                }
            }
        }
        s
    })
}

fn inner<T: Scalar>(a: &Array2<T>, b: &ArrayView2<T>) -> T {
    let mut s = T::zero();
    Zip::from(a).and(b).for_each(|&x, &y| s += x * y);
    s
}

/// Fused objective with the attribute term taken literally:
/// `(1 - alpha) (1^T C 1) <M, C> + alpha gw_loss(C)`.
pub fn fgw_objective<T: Scalar>(
    c: ArrayView2<T>,
    a: &MeasureNetwork<T>,
    b: &MeasureNetwork<T>,
    alpha: T,
    q: T,
) -> Result<T> {
    fgw_objective_with(c, a, b, alpha, q, AttributeMode::Literal)
}

pub fn fgw_objective_with<T: Scalar>(
    c: ArrayView2<T>,
    a: &MeasureNetwork<T>,
    b: &MeasureNetwork<T>,
    alpha: T,
    q: T,
    mode: AttributeMode,
) -> Result<T> {
    let mut total = T::zero();
    if alpha > T::zero() {
        total += alpha * gw_loss(c, a.w().view(), b.w().view(), q)?;
    }
    if alpha < T::one() {
        let m = wasserstein_cost_matrix(a, b, q)?;
        let lin = inner(&m, &c);
        let attr = match mode {
            AttributeMode::Literal => c.sum() * lin,
            AttributeMode::Linear => lin,
        };
        total += (T::one() - alpha) * attr;
    }
    Ok(total)
}

/// Default dummy-to-dummy cost `2 (max|W1| + max|W2|)^q + max M + 1`.
pub fn default_dummy_penalty<T: Scalar>(w1: &Array2<T>, w2: &Array2<T>, cost: Option<&Array2<T>>, q: T) -> T {
    let amax = |x: &Array2<T>| x.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
    let mmax = cost.map_or(T::zero(), amax);
    T::lit(2.0) * (amax(w1) + amax(w2)).powf(q) + mmax + T::one()
}

struct Problem<'a, T> {
    p1: &'a Array1<T>,
    p2: &'a Array1<T>,
    w1: ArrayView2<'a, T>,
    w2: ArrayView2<'a, T>,
    sq1: Array2<T>,
    sq2: Array2<T>,
    cost: Option<Array2<T>>,
    alpha: T,
    q: T,
    m: T,
    mode: AttributeMode,
    // None: balanced transport with no dummy nodes
    xi: Option<T>,
}

impl<'a, T: Scalar> Problem<'a, T> {
    fn tensor(&self, c: &ArrayView2<T>) -> Array2<T> {
        if self.q == T::lit(2.0) {
            tensor_q2(c, &self.w1, &self.w2, &self.sq1, &self.sq2)
        } else {
            tensor_general(c, &self.w1, &self.w2, self.q)
        }
    }

    fn uses_structure(&self) -> bool {
        self.alpha > T::zero()
    }

    fn attr_weight(&self) -> T {
        T::one() - self.alpha
    }

    fn objective(&self, c: &ArrayView2<T>, lc: Option<&Array2<T>>) -> T {
        let mut total = T::zero();
        if let Some(l) = lc {
            total += self.alpha * inner(l, c);
        }
        if let Some(m) = &self.cost {
            let lin = inner(m, c);
            let attr = match self.mode {
                AttributeMode::Literal => c.sum() * lin,
                AttributeMode::Linear => lin,
            };
            total += self.attr_weight() * attr;
        }
        total
    }

    fn structure(&self, c: &ArrayView2<T>) -> Option<Array2<T>> {
        self.uses_structure().then(|| self.tensor(c))
    }

    fn gradient(&self, lc: Option<&Array2<T>>) -> Array2<T> {
        let mut g = match lc {
            Some(l) => l * (T::lit(2.0) * self.alpha),
            None => Array2::zeros((self.p1.len(), self.p2.len())),
        };
        if let Some(m) = &self.cost {
            let scale = match self.mode {
                AttributeMode::Literal => self.attr_weight() * self.m,
                AttributeMode::Linear => self.attr_weight(),
            };
            g.scaled_add(scale, m);
        }
        g
    }

    /// Vertex of the feasible set minimizing `<g, S>`.
    fn linear_minimizer(&self, g: &Array2<T>) -> Result<Array2<T>> {
        let (n1, n2) = g.dim();
        match self.xi {
            None => Ok(solve_transport(g.view(), self.p1.as_slice().unwrap(), self.p2.as_slice().unwrap())?.flow),
            Some(xi) => {
                let slack = T::one() - self.m;
                let mut aug = Array2::zeros((n1 + 1, n2 + 1));
                aug.slice_mut(s![..n1, ..n2]).assign(g);
                aug[[n1, n2]] = xi;
                let mut a = self.p1.to_vec();
                a.push(slack);
                let mut b = self.p2.to_vec();
                b.push(slack);
                let sol = solve_transport(aug.view(), &a, &b)?;
                if sol.flow[[n1, n2]] > T::zero() {
                    log::warn!("dummy corner carries {} of mass", sol.flow[[n1, n2]]);
                }
                Ok(sol.flow.slice(s![..n1, ..n2]).to_owned())
            }
        }
    }

    /// Coefficients of `obj(C + g D) = obj(C) + b g + a g^2`.
    fn line_coefficients(&self, c: &ArrayView2<T>, d: &Array2<T>, lc: Option<&Array2<T>>) -> (T, T) {
        let mut a = T::zero();
        let mut b = T::zero();
        if let Some(l) = lc {
            let ld = self.tensor(&d.view());
            a += self.alpha * inner(&ld, &d.view());
            b += T::lit(2.0) * self.alpha * inner(l, &d.view());
        }
        if let Some(m) = &self.cost {
            let w = self.attr_weight();
            let md = inner(m, &d.view());
            match self.mode {
                AttributeMode::Literal => {
                    let mc = inner(m, c);
                    let (sc, sd) = (c.sum(), d.sum());
                    b += w * (sc * md + sd * mc);
                    a += w * sd * md;
                }
                AttributeMode::Linear => b += w * md,
            }
        }
        (a, b)
    }
}

fn step_size<T: Scalar>(a: T, b: T) -> T {
    if a > T::zero() {
        (-b / (T::lit(2.0) * a)).max(T::zero()).min(T::one())
    } else if a + b < T::zero() {
        T::one()
    } else {
        T::zero()
    }
}

fn prepare_init<T: Scalar>(params: &SolverParams<T>, p1: &Array1<T>, p2: &Array1<T>) -> Result<Array2<T>> {
    let (n1, n2) = (p1.len(), p2.len());
    match &params.init {
        None => Ok(Array2::from_shape_fn((n1, n2), |(i, j)| params.m * p1[i] * p2[j])),
        Some(c) => {
            let coupling = Coupling::new(c.clone(), p1, p2, params.m)?;
            coupling.check(T::feasibility_tol()).map_err(|e| {
                Error::InvalidParameter(format!("warm start is not in the feasible set: {e}"))
            })?;
            Ok(c.clone())
        }
    }
}

fn frank_wolfe<T: Scalar>(prob: &Problem<T>, params: &SolverParams<T>) -> Result<SolveReport<T>> {
    let mut c = prepare_init(params, prob.p1, prob.p2)?;
    let mut lc = prob.structure(&c.view());
    let mut obj = prob.objective(&c.view(), lc.as_ref());
    let mut trace = vec![obj];
    let mut iterations = 0;
    let mut converged = false;
    let mut last_grad = None;

    while iterations < params.max_iters {
        if obj <= T::zero() {
            converged = true;
            break;
        }
        let g = prob.gradient(lc.as_ref());
        let vertex = prob.linear_minimizer(&g)?;
        last_grad = Some(g);
        let d = &vertex - &c;
        let (a, b) = prob.line_coefficients(&c.view(), &d, lc.as_ref());
        let gamma = step_size(a, b);
        if gamma <= T::zero() {
            converged = true;
            break;
        }
        let next = if gamma == T::one() { vertex } else { &c + &(&d * gamma) };
        let l_next = prob.structure(&next.view());
        let obj_next = prob.objective(&next.view(), l_next.as_ref());
        if obj_next > obj {
            converged = true;
            break;
        }
        iterations += 1;
        let rel = (obj - obj_next) / obj.abs().max(T::min_positive_value());
        c = next;
        lc = l_next;
        obj = obj_next;
        trace.push(obj);
        last_grad = None;
        if rel < params.rel_tol {
            converged = true;
            break;
        }
    }

    if params.polish && obj > T::zero() {
        let g = match last_grad {
            Some(g) => g,
            None => prob.gradient(lc.as_ref()),
        };
        let vertex = prob.linear_minimizer(&g)?;
        if vertex != c {
            let lv = prob.structure(&vertex.view());
            let ov = prob.objective(&vertex.view(), lv.as_ref());
            if ov <= obj {
                c = vertex;
                if ov < obj {
                    obj = ov;
                    trace.push(obj);
                }
            }
        }
    }

    let coupling = Coupling::new(c, prob.p1, prob.p2, prob.m)?;
    Ok(SolveReport {
        objective: obj,
        distance: obj,
        coupling,
        iterations,
        converged,
        objective_trace: trace,
    })
}

fn build_problem<'a, T: Scalar>(
    a: &'a MeasureNetwork<T>,
    b: &'a MeasureNetwork<T>,
    params: &SolverParams<T>,
    partial: bool,
) -> Result<Problem<'a, T>> {
    params.validate()?;
    let cost = if params.alpha < T::one() {
        Some(wasserstein_cost_matrix(a, b, params.q)?)
    } else {
        None
    };
    let xi = partial.then(|| {
        params
            .dummy_penalty
            .unwrap_or_else(|| default_dummy_penalty(a.w(), b.w(), cost.as_ref(), params.q))
    });
    Ok(Problem {
        p1: a.p(),
        p2: b.p(),
        w1: a.w().view(),
        w2: b.w().view(),
        sq1: a.w().mapv(|x| x * x),
        sq2: b.w().mapv(|x| x * x),
        cost,
        alpha: params.alpha,
        q: params.q,
        m: params.m,
        mode: params.attribute_mode,
        xi,
    })
}

/// Partial fused GW: Frank-Wolfe over couplings of mass `params.m`, each
/// linear step solved exactly on the dummy-augmented problem.
pub fn solve_pfgw<T: Scalar>(
    a: &MeasureNetwork<T>,
    b: &MeasureNetwork<T>,
    params: &SolverParams<T>,
) -> Result<SolveReport<T>> {
    let prob = build_problem(a, b, params, true)?;
    frank_wolfe(&prob, params)
}

/// Fused GW with full transport (`m = 1`) and no dummy nodes.
pub fn solve_fgw<T: Scalar>(
    a: &MeasureNetwork<T>,
    b: &MeasureNetwork<T>,
    params: &SolverParams<T>,
) -> Result<SolveReport<T>> {
    let params = SolverParams {
        m: T::one(),
        ..params.clone()
    };
    let prob = build_problem(a, b, &params, false)?;
    frank_wolfe(&prob, &params)
}

/// Partial GW (`alpha = 1`); `distance` is `1/2 objective^(1/q)`.
pub fn solve_gw<T: Scalar>(
    a: &MeasureNetwork<T>,
    b: &MeasureNetwork<T>,
    params: &SolverParams<T>,
) -> Result<SolveReport<T>> {
    let params = SolverParams {
        alpha: T::one(),
        ..params.clone()
    };
    let mut report = solve_pfgw(a, b, &params)?;
    report.distance = T::lit(0.5) * report.objective.max(T::zero()).powf(params.q.recip());
    Ok(report)
}

/// Exact partial Wasserstein problem on the attributes; `distance` is
/// `cost^(1/q)`.
pub fn solve_wasserstein<T: Scalar>(
    a: &MeasureNetwork<T>,
    b: &MeasureNetwork<T>,
    q: T,
    m: T,
) -> Result<SolveReport<T>> {
    let params = SolverParams {
        q,
        m,
        alpha: T::zero(),
        attribute_mode: AttributeMode::Linear,
        ..SolverParams::default()
    };
    let prob = build_problem(a, b, &params, true)?;
    let g = prob.gradient(None);
    let plan = prob.linear_minimizer(&g)?;
    let objective = inner(&g, &plan.view());
    let coupling = Coupling::new(plan, a.p(), b.p(), m)?;
    Ok(SolveReport {
        objective,
        distance: objective.max(T::zero()).powf(q.recip()),
        coupling,
        iterations: 1,
        converged: true,
        objective_trace: vec![objective],
    })
}

/// Endpoint comparison of the fused objective against its two limits.
#[derive(Clone, Debug)]
pub struct InterpolationReport<T> {
    pub fgw_alpha0: T,
    pub wasserstein_cost: T,
    pub fgw_alpha1: T,
    pub gw_objective: T,
}

impl<T: Scalar> InterpolationReport<T> {
    pub fn max_error(&self) -> T {
        (self.fgw_alpha0 - self.wasserstein_cost)
            .abs()
            .max((self.fgw_alpha1 - self.gw_objective).abs())
    }

    pub fn holds(&self, tol: T) -> bool {
        self.max_error() <= tol
    }
}

/// Solves the fused problem at `alpha = 0` and `alpha = 1` with full
/// transport and compares against the Wasserstein and GW solvers started
/// from the same coupling.
pub fn interpolation_check<T: Scalar>(
    a: &MeasureNetwork<T>,
    b: &MeasureNetwork<T>,
    q: T,
) -> Result<InterpolationReport<T>> {
    let base = SolverParams::default().with_q(q);
    let at0 = solve_pfgw(
        a,
        b,
        &SolverParams {
            alpha: T::zero(),
            ..base.clone()
        },
    )?;
    let w = solve_wasserstein(a, b, q, T::one())?;
    let at1 = solve_pfgw(
        a,
        b,
        &SolverParams {
            alpha: T::one(),
            ..base.clone()
        },
    )?;
    let gw = solve_gw(a, b, &base)?;
    Ok(InterpolationReport {
        fgw_alpha0: at0.objective,
        wasserstein_cost: w.objective,
        fgw_alpha1: at1.objective,
        gw_objective: gw.objective,
    })
}
