//! Hidden-variable models of the two-wing Bell experiment.
//!
//! A model is held either as kernels indexed by a hidden state and settings
//! ([`HVModel`]) or as one probability space over
//! `(state, left setting, right setting, left outcome, right outcome)`
//! ([`BigSpaceModel`]). Joint outcome distributions are `[++, +-, -+, --]`.

mod szabo;

pub use szabo::{audit_boolean_combinations, build_szabo_model, verify_szabo, SzaboModel, SzaboOptions, STAGES};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{LabError, Result};
use crate::prob::{prob, Event, Partition, ProbabilitySpace};
use crate::report::{CheckReport, Tracker};
use crate::weight::Weight;

/// Outcome distribution `[++, +-, -+, --]`.
pub type Joint<W> = [W; 4];

/// Index into a [`Joint`]; `true` is the `+` outcome.
pub fn cell(x_plus: bool, y_plus: bool) -> usize {
    2 * usize::from(!x_plus) + usize::from(!y_plus)
}

const KERNEL_TOL: f64 = 1e-12;

/// Measurement angles, one per setting on each wing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingsGeometry {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl SettingsGeometry {
    /// `a1 = 0, a2 = π/2, b1 = π/4, b2 = 3π/4`, where the singlet reaches
    /// `|S| = 2√2`.
    pub fn chsh_optimal() -> Self {
        use std::f64::consts::PI;
        SettingsGeometry {
            left: vec![0.0, PI / 2.0],
            right: vec![PI / 4.0, 3.0 * PI / 4.0],
        }
    }

    /// The same three angles on both wings.
    pub fn symmetric(angles: &[f64]) -> Self {
        SettingsGeometry {
            left: angles.to_vec(),
            right: angles.to_vec(),
        }
    }
}

/// A stochastic hidden-variable model.
#[derive(Debug, Clone, PartialEq)]
pub struct HVModel<W: Weight = f64> {
    /// Distribution over hidden states.
    pub lambda: ProbabilitySpace<W>,
    /// `left[l][x]` is the probability of `+` on the left wing.
    pub left: Vec<Vec<W>>,
    /// `right[l][y]` is the probability of `+` on the right wing.
    pub right: Vec<Vec<W>>,
    /// `joint[l][x][y]` is the joint outcome distribution.
    pub joint: Vec<Vec<Vec<Joint<W>>>>,
}

fn unit<W: Weight>(p: &W) -> bool {
    !p.lt0() && *p <= W::one()
}

impl<W: Weight> HVModel<W> {
    /// Validates shapes and that every kernel is a distribution.
    pub fn new(
        lambda: ProbabilitySpace<W>,
        left: Vec<Vec<W>>,
        right: Vec<Vec<W>>,
        joint: Vec<Vec<Vec<Joint<W>>>>,
    ) -> Result<Self> {
        let n = lambda.len();
        if left.len() != n || right.len() != n || joint.len() != n {
            return Err(LabError::ModelIncomplete(format!(
                "{n} hidden states but kernels for {}/{}/{}",
                left.len(),
                right.len(),
                joint.len()
            )));
        }
        let nx = left[0].len();
        let ny = right[0].len();
        if nx == 0 || ny == 0 {
            return Err(LabError::ModelIncomplete("no settings".into()));
        }
        let slack = W::from_f64_lossy(KERNEL_TOL);
        for l in 0..n {
            if left[l].len() != nx || right[l].len() != ny || joint[l].len() != nx {
                return Err(LabError::ModelIncomplete(format!("ragged kernels at state {l}")));
            }
            if !left[l].iter().chain(&right[l]).all(unit) {
                return Err(LabError::ModelIncomplete(format!("single kernel outside [0,1] at state {l}")));
            }
            for x in 0..nx {
                if joint[l][x].len() != ny {
                    return Err(LabError::ModelIncomplete(format!("missing joint kernel at ({l},{x})")));
                }
                for y in 0..ny {
                    let j = &joint[l][x][y];
                    let total = j.iter().fold(W::zero(), |a, b| a + b.clone());
                    if j.iter().any(|p| p.lt0()) || (total - W::one()).abs() > slack {
                        return Err(LabError::ModelIncomplete(format!(
                            "joint kernel at ({l},{x},{y}) is not a distribution"
                        )));
                    }
                }
            }
        }
        Ok(HVModel { lambda, left, right, joint })
    }

    /// Builds the joints as products of the single kernels.
    pub fn factorizable(lambda: ProbabilitySpace<W>, left: Vec<Vec<W>>, right: Vec<Vec<W>>) -> Result<Self> {
        let joint = left
            .iter()
            .zip(&right)
            .map(|(ls, rs)| {
                ls.iter()
                    .map(|p| rs.iter().map(|q| product_joint(p, q)).collect())
                    .collect()
            })
            .collect();
        Self::new(lambda, left, right, joint)
    }

    pub fn left_settings(&self) -> usize {
        self.left[0].len()
    }

    pub fn right_settings(&self) -> usize {
        self.right[0].len()
    }

    /// Single-state model whose single kernels are the joint marginals.
    pub fn from_joints(joints: Vec<Vec<Joint<W>>>) -> Result<Self> {
        let left = vec![joints.iter().map(|row| row[0][0].clone() + row[0][1].clone()).collect()];
        let right = vec![(0..joints[0].len())
            .map(|y| joints[0][y][0].clone() + joints[0][y][2].clone())
            .collect()];
        let lambda = ProbabilitySpace::new(vec![("l0".into(), W::one())])?;
        Self::new(lambda, left, right, vec![joints])
    }

    pub fn to_json(&self) -> Value {
        let arr = |v: &[W]| Value::Array(v.iter().map(Weight::to_json).collect());
        serde_json::json!({
            "lambda": self.lambda.to_json()["atoms"],
            "left": self.left.iter().map(|r| arr(r)).collect::<Vec<_>>(),
            "right": self.right.iter().map(|r| arr(r)).collect::<Vec<_>>(),
            "joint": self.joint.iter().map(|a| a.iter().map(|b| b.iter().map(|j| arr(j)).collect::<Vec<_>>()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |what: &str| LabError::Parse(format!("model: bad {what}"));
        let lambda = ProbabilitySpace::from_json(&serde_json::json!({ "atoms": v["lambda"] }))?;
        let nums = |v: &Value| -> Result<Vec<W>> {
            v.as_array()
                .ok_or_else(|| bad("array"))?
                .iter()
                .map(|x| W::from_json(x).ok_or_else(|| bad("number")))
                .collect()
        };
        let rows = |v: &Value, what: &str| -> Result<Vec<Vec<W>>> {
            v.as_array().ok_or_else(|| bad(what))?.iter().map(nums).collect()
        };
        let left = rows(&v["left"], "left")?;
        let right = rows(&v["right"], "right")?;
        let joint = v["joint"]
            .as_array()
            .ok_or_else(|| bad("joint"))?
            .iter()
            .map(|a| {
                a.as_array()
                    .ok_or_else(|| bad("joint"))?
                    .iter()
                    .map(|b| {
                        b.as_array()
                            .ok_or_else(|| bad("joint"))?
                            .iter()
                            .map(|j| {
                                let j = nums(j)?;
                                <[W; 4]>::try_from(j).map_err(|_| bad("joint arity"))
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(lambda, left, right, joint)
    }
}

fn product_joint<W: Weight>(p: &W, q: &W) -> Joint<W> {
    let one = W::one();
    let (np, nq) = (one.clone() - p.clone(), one - q.clone());
    [
        p.clone() * q.clone(),
        p.clone() * nq.clone(),
        np.clone() * q.clone(),
        np * nq,
    ]
}

/// `pr(X = +)` and `pr(Y = +)` of a joint.
pub fn marginals<W: Weight>(j: &Joint<W>) -> (W, W) {
    (j[0].clone() + j[1].clone(), j[0].clone() + j[2].clone())
}

/// The hidden-state average of the joint kernel at settings `(x, y)`.
pub fn observable_joint<W: Weight>(model: &HVModel<W>, x: usize, y: usize) -> Result<Joint<W>> {
    if x >= model.left_settings() || y >= model.right_settings() {
        return Err(LabError::ModelIncomplete(format!("no kernel for settings ({x},{y})")));
    }
    let mut out: Joint<W> = std::array::from_fn(|_| W::zero());
    for (l, w) in model.lambda.weights().iter().enumerate() {
        for (o, p) in model.joint[l][x][y].iter().enumerate() {
            out[o] = out[o].clone() + w.clone() * p.clone();
        }
    }
    Ok(out)
}

/// All observable joints, indexed `[x][y]`.
pub fn observable_joints<W: Weight>(model: &HVModel<W>) -> Vec<Vec<Joint<W>>> {
    (0..model.left_settings())
        .map(|x| {
            (0..model.right_settings())
                .map(|y| observable_joint(model, x, y).expect("in range"))
                .collect()
        })
        .collect()
}

/// Each wing's outcome probability is insensitive to the distant setting.
pub fn check_parameter_independence<W: Weight>(model: &HVModel<W>, tol: f64) -> CheckReport {
    let mut t = Tracker::<W>::new(tol);
    for l in 0..model.lambda.len() {
        for x in 0..model.left_settings() {
            for y in 0..model.right_settings() {
                let (mx, my) = marginals(&model.joint[l][x][y]);
                t.equal([format!("left l{l} x{x} y{y}")], &model.left[l][x], &mx);
                t.equal([format!("right l{l} x{x} y{y}")], &model.right[l][y], &my);
            }
        }
    }
    t.finish("parameter_independence")
}

/// Each joint kernel is the product of its own marginals.
pub fn check_outcome_independence<W: Weight>(model: &HVModel<W>, tol: f64) -> CheckReport {
    let mut t = Tracker::<W>::new(tol);
    for l in 0..model.lambda.len() {
        for x in 0..model.left_settings() {
            for y in 0..model.right_settings() {
                let j = &model.joint[l][x][y];
                let (mx, my) = marginals(j);
                let prod = product_joint(&mx, &my);
                for o in 0..4 {
                    t.equal([format!("l{l} x{x} y{y} o{o}")], &j[o], &prod[o]);
                }
            }
        }
    }
    t.finish("outcome_independence")
}

/// Joint kernels equal products of single kernels. The notes record the
/// parameter- and outcome-independence verdicts on the same model.
pub fn check_factorizability<W: Weight>(model: &HVModel<W>, tol: f64) -> CheckReport {
    let mut t = Tracker::<W>::new(tol);
    for l in 0..model.lambda.len() {
        for x in 0..model.left_settings() {
            for y in 0..model.right_settings() {
                let j = &model.joint[l][x][y];
                let prod = product_joint(&model.left[l][x], &model.right[l][y]);
                for o in 0..4 {
                    t.equal([format!("l{l} x{x} y{y} o{o}")], &j[o], &prod[o]);
                }
            }
        }
    }
    let pi = check_parameter_independence(model, tol).holds;
    let oi = check_outcome_independence(model, tol).holds;
    t.note(format!("parameter_independence={pi} outcome_independence={oi}"));
    let mut r = t.finish("factorizability");
    if r.holds != (pi && oi) {
        r.notes.push("factorizability verdict differs from PI and OI at this tolerance".into());
    }
    r
}

/// Quantum singlet statistics: `pr(+,+ | a, b) = ½ sin²((a−b)/2)`.
pub fn singlet_oracle(geom: &SettingsGeometry) -> HVModel<f64> {
    let joint = geom
        .left
        .iter()
        .map(|a| {
            geom.right
                .iter()
                .map(|b| {
                    let s = ((a - b) / 2.0).sin().powi(2);
                    let same = s / 2.0;
                    let diff = (1.0 - s) / 2.0;
                    [same, diff, diff, same]
                })
                .collect()
        })
        .collect();
    let lambda = ProbabilitySpace::new(vec![("singlet".into(), 1.0)]).expect("one atom");
    HVModel {
        lambda,
        left: vec![vec![0.5; geom.left.len()]],
        right: vec![vec![0.5; geom.right.len()]],
        joint: vec![joint],
    }
}

/// Outcome correlation `E = pr(++) + pr(--) - pr(+-) - pr(-+)`.
pub fn expectation<W: Weight>(j: &Joint<W>) -> W {
    j[0].clone() + j[3].clone() - j[1].clone() - j[2].clone()
}

/// `S = E11 − E12 + E21 + E22` from joints indexed `[x][y]`.
pub fn chsh_value<W: Weight>(joints: &[Vec<Joint<W>>]) -> Result<W> {
    if joints.len() < 2 || joints.iter().any(|r| r.len() < 2) {
        return Err(LabError::ModelIncomplete("CHSH needs two settings per wing".into()));
    }
    let e = |x: usize, y: usize| expectation(&joints[x][y]);
    Ok(e(0, 0) - e(0, 1) + e(1, 0) + e(1, 1))
}

/// Bell–Wigner inequality `pr(a+, b+) + pr(b+, c+) ≥ pr(a+, c+)` for three
/// settings used on both wings, given perfect anti-correlation at equal
/// settings. `joints[x][y]` pairs left setting `x` with right setting `y`.
pub fn bell_wigner_check<W: Weight>(joints: &[Vec<Joint<W>>], tol: f64) -> Result<CheckReport> {
    if joints.len() < 3 || joints.iter().any(|r| r.len() < 3) {
        return Err(LabError::ModelIncomplete("Bell–Wigner needs three settings per wing".into()));
    }
    let slack = W::from_f64_lossy(tol);
    for i in 0..3 {
        let j = &joints[i][i];
        if j[0] > slack || j[3] > slack {
            return Err(LabError::Precondition(format!(
                "no perfect anti-correlation at parallel setting {i}"
            )));
        }
    }
    let mut t = Tracker::<W>::new(tol).verbose();
    let lhs = joints[0][1][0].clone() + joints[1][2][0].clone();
    t.at_least(["pr(a+,b+)+pr(b+,c+)", "pr(a+,c+)"], &lhs, &joints[0][2][0]);
    Ok(t.finish("bell_wigner"))
}

fn near<W: Weight>(p: &W, target: &W, tol: &W) -> bool {
    (p.clone() - target.clone()).abs() <= *tol
}

/// Replaces a factorizable model by a deterministic one with the same
/// observable joints. Each hidden state is split over the outcome patterns
/// of its stochastic settings. Settings in a perfectly anti-correlated
/// `parallel` pair are already deterministic and are rounded.
pub fn determinize<W: Weight>(model: &HVModel<W>, parallel: &[(usize, usize)], tol: f64) -> Result<HVModel<W>> {
    let fact = check_factorizability(model, tol);
    if !fact.holds {
        return Err(LabError::Precondition(format!(
            "model is not factorizable (residual {:e})",
            fact.max_residual
        )));
    }
    let slack = W::from_f64_lossy(tol);
    for &(x, y) in parallel {
        let j = observable_joint(model, x, y)?;
        if j[0] > slack || j[3] > slack {
            return Err(LabError::Precondition(format!(
                "settings ({x},{y}) are not perfectly anti-correlated"
            )));
        }
    }
    let (nx, ny) = (model.left_settings(), model.right_settings());
    let (zero, one) = (W::zero(), W::one());
    let mut atoms = Vec::new();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for l in 0..model.lambda.len() {
        let rho = model.lambda.weight(l);
        if !rho.gt0() {
            continue;
        }
        let singles: Vec<W> = model.left[l].iter().chain(&model.right[l]).cloned().collect();
        let rounded: Vec<Option<bool>> = singles
            .iter()
            .map(|p| {
                if near(p, &zero, &slack) {
                    Some(false)
                } else if near(p, &one, &slack) {
                    Some(true)
                } else {
                    None
                }
            })
            .collect();
        let free: Vec<usize> = (0..singles.len()).filter(|&k| rounded[k].is_none()).collect();
        for pattern in 0u64..(1 << free.len()) {
            let mut w = rho.clone();
            let mut vals: Vec<bool> = rounded.iter().map(|r| r.unwrap_or(false)).collect();
            for (bit, &k) in free.iter().enumerate() {
                let plus = pattern >> bit & 1 == 1;
                vals[k] = plus;
                w = w * if plus { singles[k].clone() } else { one.clone() - singles[k].clone() };
            }
            let tag: String = vals.iter().map(|&v| if v { '+' } else { '-' }).collect();
            atoms.push((format!("{}|{tag}", model.lambda.label(l)), w));
            let as_w = |b: bool| if b { one.clone() } else { zero.clone() };
            left.push(vals[..nx].iter().map(|&b| as_w(b)).collect());
            right.push(vals[nx..nx + ny].iter().map(|&b| as_w(b)).collect());
        }
    }
    let lambda = ProbabilitySpace::normalized(atoms)?;
    HVModel::factorizable(lambda, left, right)
}

/// One probability space over `(state, x, y, X, Y)` with the events needed
/// to phrase locality conditions.
#[derive(Debug, Clone)]
pub struct BigSpaceModel<W: Weight = f64> {
    pub space: ProbabilitySpace<W>,
    /// One cell per hidden state.
    pub lambda_cells: Vec<Event>,
    pub left_choice: Vec<Event>,
    pub right_choice: Vec<Event>,
    pub left_plus: Event,
    pub right_plus: Event,
}

impl<W: Weight> BigSpaceModel<W> {
    /// `a_x & (X = +)`.
    pub fn left_outcome(&self, x: usize) -> Event {
        self.left_choice[x].and(&self.left_plus)
    }

    /// `b_y & (Y = +)`.
    pub fn right_outcome(&self, y: usize) -> Event {
        self.right_choice[y].and(&self.right_plus)
    }

    pub fn lambda_partition(&self) -> Partition {
        Partition::new(self.lambda_cells.clone()).expect("hidden-state cells partition the space")
    }

    /// The four `(A_x, B_y)` outcome pairs, in `x`-major order.
    pub fn outcome_pairs(&self) -> Vec<(Event, Event)> {
        let mut out = Vec::new();
        for x in 0..self.left_choice.len() {
            for y in 0..self.right_choice.len() {
                out.push((self.left_outcome(x), self.right_outcome(y)));
            }
        }
        out
    }

    /// `pr(X, Y | x, y)` recovered by conditioning.
    pub fn observable_joint(&self, x: usize, y: usize) -> Result<Joint<W>> {
        let setting = self.left_choice[x].and(&self.right_choice[y]);
        let ps = prob(&self.space, &setting);
        if !ps.gt0() {
            return Err(LabError::NullCondition(format!("settings ({x},{y}) never chosen")));
        }
        let lm = self.left_plus.not();
        let rm = self.right_plus.not();
        let cells = [
            self.left_plus.and(&self.right_plus),
            self.left_plus.and(&rm),
            lm.and(&self.right_plus),
            lm.and(&rm),
        ];
        Ok(std::array::from_fn(|o| prob(&self.space, &cells[o].and(&setting)) / ps.clone()))
    }
}

/// Product construction: hidden state independent of both choices.
pub fn to_big_space<W: Weight>(model: &HVModel<W>, left_priors: &[W], right_priors: &[W]) -> Result<BigSpaceModel<W>> {
    let (nx, ny) = (model.left_settings(), model.right_settings());
    if left_priors.len() != nx || right_priors.len() != ny {
        return Err(LabError::Arity {
            expected: nx + ny,
            got: left_priors.len() + right_priors.len(),
        });
    }
    if left_priors.iter().chain(right_priors).any(|p| !p.gt0()) {
        return Err(LabError::Precondition("choice priors must be positive".into()));
    }
    let mut atoms = Vec::new();
    let mut tags = Vec::new();
    for l in 0..model.lambda.len() {
        for x in 0..nx {
            for y in 0..ny {
                for o in 0..4 {
                    let w = model.lambda.weight(l).clone()
                        * left_priors[x].clone()
                        * right_priors[y].clone()
                        * model.joint[l][x][y][o].clone();
                    let (xp, yp) = (o < 2, o % 2 == 0);
                    let sign = |b: bool| if b { '+' } else { '-' };
                    atoms.push((
                        format!("{}:a{}b{}:{}{}", model.lambda.label(l), x + 1, y + 1, sign(xp), sign(yp)),
                        w,
                    ));
                    tags.push((l, x, y, xp, yp));
                }
            }
        }
    }
    let space = ProbabilitySpace::normalized(atoms)?;
    let n = space.len();
    Ok(BigSpaceModel {
        lambda_cells: (0..model.lambda.len())
            .map(|l| Event::from_fn(n, |i| tags[i].0 == l))
            .collect(),
        left_choice: (0..nx).map(|x| Event::from_fn(n, |i| tags[i].1 == x)).collect(),
        right_choice: (0..ny).map(|y| Event::from_fn(n, |i| tags[i].2 == y)).collect(),
        left_plus: Event::from_fn(n, |i| tags[i].3),
        right_plus: Event::from_fn(n, |i| tags[i].4),
        space,
    })
}

/// Which coarse-grained locality condition to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Locality {
    Pi,
    Oi,
    Fact,
}

impl Locality {
    pub fn name(self) -> &'static str {
        match self {
            Locality::Pi => "coarse_parameter_independence",
            Locality::Oi => "coarse_outcome_independence",
            Locality::Fact => "coarse_factorizability",
        }
    }
}

fn cp<W: Weight>(s: &ProbabilitySpace<W>, a: &Event, b: &Event) -> W {
    prob(s, &a.and(b)) / prob(s, b)
}

/// Locality conditions with one partition per setting pair, read in the big
/// space with `pr_{x,y}(·) = pr(· | x & y)` and `pr_x(·) = pr(· | x)`:
///
/// * PI: `pr(X | cell, x) = pr(X | cell, x, y)`, and the mirror for `Y`;
/// * OI: `pr(XY | cell, x, y) = pr(X | cell, x, y) pr(Y | cell, x, y)`;
/// * FACT: `pr(XY | cell, x, y) = pr(X | cell, x) pr(Y | cell, y)`.
///
/// Cells of zero weight at a setting are skipped.
pub fn check_coarse_locality<W: Weight>(
    big: &BigSpaceModel<W>,
    partitions: &[Vec<Partition>],
    which: Locality,
    tol: f64,
) -> Result<CheckReport> {
    let (nx, ny) = (big.left_choice.len(), big.right_choice.len());
    if partitions.len() != nx || partitions.iter().any(|r| r.len() != ny) {
        return Err(LabError::Arity {
            expected: nx * ny,
            got: partitions.iter().map(Vec::len).sum(),
        });
    }
    let s = &big.space;
    let mut t = Tracker::<W>::new(tol);
    for x in 0..nx {
        for y in 0..ny {
            for (k, c) in partitions[x][y].cells().iter().enumerate() {
                s.check_event(c)?;
                let cx = c.and(&big.left_choice[x]);
                let cy = c.and(&big.right_choice[y]);
                let cxy = cx.and(&big.right_choice[y]);
                if !prob(s, &cxy).gt0() {
                    t.skip(format!("x{x} y{y} cell{k}: zero weight"));
                    continue;
                }
                for xp in [true, false] {
                    for yp in [true, false] {
                        let xe = if xp { big.left_plus.clone() } else { big.left_plus.not() };
                        let ye = if yp { big.right_plus.clone() } else { big.right_plus.not() };
                        let tag = format!("x{x} y{y} cell{k} o{}", cell(xp, yp));
                        let pxy = cp(s, &xe.and(&ye), &cxy);
                        let px = cp(s, &xe, &cxy);
                        let py = cp(s, &ye, &cxy);
                        match which {
                            Locality::Oi => {
                                t.equal([tag], &pxy, &(px * py));
                            }
                            Locality::Fact => {
                                let rhs = cp(s, &xe, &cx) * cp(s, &ye, &cy);
                                t.equal([tag], &pxy, &rhs);
                            }
                            Locality::Pi => {
                                if yp {
                                    t.equal([format!("{tag} left")], &cp(s, &xe, &cx), &px);
                                }
                                if xp {
                                    t.equal([format!("{tag} right")], &cp(s, &ye, &cy), &py);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let mut r = t.finish(which.name());
    if which == Locality::Fact {
        let pi = check_coarse_locality(big, partitions, Locality::Pi, tol)?.holds;
        let oi = check_coarse_locality(big, partitions, Locality::Oi, tol)?.holds;
        r.notes.push(format!("coarse PI={pi} coarse OI={oi}"));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn singlet_values() {
        let m = singlet_oracle(&SettingsGeometry {
            left: vec![0.0, 0.0, 0.0],
            right: vec![0.0, PI, PI / 2.0],
        });
        let j = observable_joints(&m);
        assert_eq!(j[0][0][0], 0.0);
        assert_eq!(j[0][0][1], 0.5);
        assert!((j[1][1][0] - 0.5).abs() < 1e-15);
        assert!((j[2][2][0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn two_state_anticorrelated_average() {
        let lambda = ProbabilitySpace::new(vec![("p".into(), 0.5), ("m".into(), 0.5)]).unwrap();
        let m = HVModel::factorizable(lambda, vec![vec![1.0], vec![0.0]], vec![vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(observable_joint(&m, 0, 0).unwrap(), [0.0, 0.5, 0.5, 0.0]);
        assert!(matches!(observable_joint(&m, 1, 0), Err(LabError::ModelIncomplete(_))));
    }

    #[test]
    fn bad_kernels_are_rejected() {
        let lambda = ProbabilitySpace::new(vec![("l".into(), 1.0)]).unwrap();
        let r = HVModel::new(lambda, vec![vec![0.5]], vec![vec![0.5]], vec![vec![vec![[0.5, 0.5, 0.5, 0.0]]]]);
        assert!(matches!(r, Err(LabError::ModelIncomplete(_))));
    }

    #[test]
    fn signalling_kernel_fails_parameter_independence() {
        // The left marginal moves with the distant setting.
        let lambda = ProbabilitySpace::new(vec![("l".into(), 1.0)]).unwrap();
        let m = HVModel::new(
            lambda,
            vec![vec![0.5]],
            vec![vec![0.5, 0.5]],
            vec![vec![vec![[0.25, 0.25, 0.25, 0.25], [0.45, 0.45, 0.05, 0.05]]]],
        )
        .unwrap();
        assert!(!check_parameter_independence(&m, 1e-9).holds);
        assert!(check_outcome_independence(&m, 1e-9).holds);
        assert!(!check_factorizability(&m, 1e-9).holds);
    }

    #[test]
    fn determinize_splits_stochastic_states() {
        let lambda = ProbabilitySpace::new(vec![("l".into(), 1.0)]).unwrap();
        let m = HVModel::factorizable(lambda, vec![vec![0.3, 1.0]], vec![vec![0.6, 0.0]]).unwrap();
        let d = determinize(&m, &[], 1e-12).unwrap();
        assert_eq!(d.lambda.len(), 4);
        for row in d.left.iter().chain(&d.right) {
            assert!(row.iter().all(|&p| p == 0.0 || p == 1.0));
        }
        let (a, b) = (observable_joints(&m), observable_joints(&d));
        for x in 0..2 {
            for y in 0..2 {
                for o in 0..4 {
                    assert!((a[x][y][o] - b[x][y][o]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn big_space_round_trip() {
        let m = singlet_oracle(&SettingsGeometry::chsh_optimal());
        let big = to_big_space(&m, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!(big.space.len(), 16);
        for x in 0..2 {
            for y in 0..2 {
                let a = big.observable_joint(x, y).unwrap();
                let b = observable_joint(&m, x, y).unwrap();
                for o in 0..4 {
                    assert!((a[o] - b[o]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn model_json_round_trip() {
        let m = singlet_oracle(&SettingsGeometry::chsh_optimal());
        let back = HVModel::<f64>::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }
}
