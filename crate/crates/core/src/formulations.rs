//! Mixed-integer formulations of the degree-constrained problem.
//!
//! Variable names follow a fixed scheme, a role letter followed by
//! underscore-joined 1-based indices:
//!
//! | name          | meaning                                             |
//! |---------------|-----------------------------------------------------|
//! | `x_i_j`       | edge `{i, j}` is in the tree (`i < j`)              |
//! | `d_i_j`       | distance between `i` and `j` (`i < j`)              |
//! | `w_l_i_j`     | `i` and `j` are at most `l` apart (`i < j`)        |
//! | `y_i_k_j`     | the path from `i` to `j` leaves `i` through `k`     |
//! | `y_l_i_k_j`   | product `x_ik * w_(l-1)_kj` (`i < j`)               |
//! | `u_s_t_i_j`   | flow of commodity `s < t` on arc `i -> j`           |
//! | `a_i_k`       | leaf `i` hangs from internal vertex `k`             |
//!
//! Symmetric quantities are stored once, for `i < j`.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use thiserror::Error;

use crate::graph::{bfs_distance_matrix, ordered_pair, DefoliatedTree, DistanceMatrix, GraphError, LabeledTree};
use crate::instance::Instance;
use crate::model::{Assignment, Expr, Model, ModelError, Sense, VarId, VarKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("formulations need n >= 3, got {0}")]
    TooSmall(usize),
    #[error("{0} does not support edge lengths")]
    Weighted(Tag),
    #[error("option {option} is not defined for {tag}")]
    InvalidOption { tag: Tag, option: &'static str },
    #[error("unknown formulation {0:?}")]
    UnknownKind(String),
    #[error("F0Q is a family of assignment problems; build one per defoliated tree")]
    NeedsDefoliatedTree,
    #[error("defoliated tree: {0}")]
    Defoliated(String),
    #[error("model does not match the instance: {0}")]
    Mismatch(String),
    #[error("tree is not admissible for the instance")]
    Inadmissible,
    #[error("assignment does not encode a tree: {0}")]
    NotATree(String),
}

pub type Result<T> = std::result::Result<T, FormulationError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    F0Q,
    F1Q,
    F1QUt,
    F2Q,
    F0L,
    F1L,
    F2L,
}

impl Tag {
    pub const ALL: [Tag; 7] = [Tag::F0Q, Tag::F1Q, Tag::F1QUt, Tag::F2Q, Tag::F0L, Tag::F1L, Tag::F2L];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::F0Q => "F0Q",
            Tag::F1Q => "F1Q",
            Tag::F1QUt => "F1Q_UT",
            Tag::F2Q => "F2Q",
            Tag::F0L => "F0L",
            Tag::F1L => "F1L",
            Tag::F2L => "F2L",
        }
    }

    pub fn supports_lengths(self) -> bool {
        matches!(self, Tag::F1Q | Tag::F1QUt | Tag::F0L | Tag::F1L)
    }

    fn has_distances(self) -> bool {
        matches!(self, Tag::F1Q | Tag::F1QUt | Tag::F1L)
    }

    fn relaxable(self) -> bool {
        matches!(self, Tag::F2Q | Tag::F1L | Tag::F2L)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tag {
    type Err = FormulationError;

    fn from_str(s: &str) -> Result<Self> {
        Tag::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| FormulationError::UnknownKind(s.to_string()))
    }
}

/// Big-M constant of the F1L shortest-path constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BigM {
    /// The maximum diameter `L = m + 2`.
    #[default]
    L,
    NMinusOne,
}

/// A formulation tag with its options. Options can only be set on kinds that
/// define them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FormulationKind {
    tag: Tag,
    big_m: BigM,
    adaptive: bool,
    relax: bool,
}

impl FormulationKind {
    pub fn new(tag: Tag) -> Self {
        FormulationKind { tag, big_m: BigM::L, adaptive: false, relax: false }
    }

    /// Every tag with default options.
    pub fn all() -> Vec<FormulationKind> {
        Tag::ALL.into_iter().map(FormulationKind::new).collect()
    }

    pub fn with_big_m(mut self, m: BigM) -> Result<Self> {
        if self.tag != Tag::F1L {
            return Err(FormulationError::InvalidOption { tag: self.tag, option: "big-M" });
        }
        self.big_m = m;
        Ok(self)
    }

    /// Per-pair distance caps: `L - 2` between internal vertices, `L - 1`
    /// between a leaf and an internal vertex, `L` between leaves.
    pub fn with_adaptive(mut self, on: bool) -> Result<Self> {
        if on && !self.tag.has_distances() {
            return Err(FormulationError::InvalidOption { tag: self.tag, option: "adaptive" });
        }
        self.adaptive = on;
        Ok(self)
    }

    /// Drops integrality of `w` (F2Q, F2L), `y` (F2L) or `d` (F1L).
    pub fn with_relaxed(mut self, on: bool) -> Result<Self> {
        if on && !self.tag.relaxable() {
            return Err(FormulationError::InvalidOption { tag: self.tag, option: "relax" });
        }
        self.relax = on;
        Ok(self)
    }

    pub fn tag(&self) -> Tag {
        self.tag
    }

    pub fn big_m(&self) -> BigM {
        self.big_m
    }

    pub fn adaptive(&self) -> bool {
        self.adaptive
    }

    pub fn relaxed(&self) -> bool {
        self.relax
    }
}

impl From<Tag> for FormulationKind {
    fn from(t: Tag) -> Self {
        FormulationKind::new(t)
    }
}

/// `TAG[:option]*` with options `M=L`, `M=n-1`, `adaptive`, `relax`.
impl fmt::Display for FormulationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag)?;
        if self.big_m == BigM::NMinusOne {
            write!(f, ":M=n-1")?;
        }
        if self.adaptive {
            write!(f, ":adaptive")?;
        }
        if self.relax {
            write!(f, ":relax")?;
        }
        Ok(())
    }
}

impl FromStr for FormulationKind {
    type Err = FormulationError;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let mut kind = FormulationKind::new(parts.next().unwrap_or("").parse()?);
        for opt in parts {
            kind = match opt.trim().to_ascii_lowercase().as_str() {
                "m=l" => kind.with_big_m(BigM::L)?,
                "m=n-1" => kind.with_big_m(BigM::NMinusOne)?,
                "adaptive" => kind.with_adaptive(true)?,
                "relax" => kind.with_relaxed(true)?,
                _ => return Err(FormulationError::UnknownKind(s.to_string())),
            };
        }
        Ok(kind)
    }
}

/// The meaning of a formulation variable, recoverable from its name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariableRole {
    Edge { i: usize, j: usize },
    Distance { i: usize, j: usize },
    Reach { l: usize, i: usize, j: usize },
    NextHop { i: usize, k: usize, j: usize },
    ReachProduct { l: usize, i: usize, k: usize, j: usize },
    Flow { s: usize, t: usize, i: usize, j: usize },
    LeafAssignment { leaf: usize, slot: usize },
}

impl VariableRole {
    pub fn name(&self) -> String {
        match *self {
            VariableRole::Edge { i, j } => format!("x_{i}_{j}"),
            VariableRole::Distance { i, j } => format!("d_{i}_{j}"),
            VariableRole::Reach { l, i, j } => format!("w_{l}_{i}_{j}"),
            VariableRole::NextHop { i, k, j } => format!("y_{i}_{k}_{j}"),
            VariableRole::ReachProduct { l, i, k, j } => format!("y_{l}_{i}_{k}_{j}"),
            VariableRole::Flow { s, t, i, j } => format!("u_{s}_{t}_{i}_{j}"),
            VariableRole::LeafAssignment { leaf, slot } => format!("a_{leaf}_{slot}"),
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        let mut parts = name.split('_');
        let role = parts.next()?;
        let idx: Vec<usize> = parts.map(|p| p.parse().ok()).collect::<Option<_>>()?;
        Some(match (role, idx.as_slice()) {
            ("x", &[i, j]) => VariableRole::Edge { i, j },
            ("d", &[i, j]) => VariableRole::Distance { i, j },
            ("w", &[l, i, j]) => VariableRole::Reach { l, i, j },
            ("y", &[i, k, j]) => VariableRole::NextHop { i, k, j },
            ("y", &[l, i, k, j]) => VariableRole::ReachProduct { l, i, k, j },
            ("u", &[s, t, i, j]) => VariableRole::Flow { s, t, i, j },
            ("a", &[leaf, slot]) => VariableRole::LeafAssignment { leaf, slot },
            _ => return None,
        })
    }
}

fn name(role: VariableRole) -> String {
    role.name()
}

struct Builder<'a> {
    inst: &'a Instance,
    model: Model,
    n: usize,
    x: Vec<Option<VarId>>,
}

impl<'a> Builder<'a> {
    fn new(inst: &'a Instance, model_name: String) -> Result<Self> {
        let n = inst.n();
        let mut model = Model::new(model_name);
        let mut x = vec![None; n * n];
        for &(i, j) in inst.edges() {
            let v = model.binary(name(VariableRole::Edge { i, j }))?;
            x[(i - 1) * n + (j - 1)] = Some(v);
            x[(j - 1) * n + (i - 1)] = Some(v);
        }
        Ok(Builder { inst, model, n, x })
    }

    fn x(&self, i: usize, j: usize) -> Option<VarId> {
        self.x[(i - 1) * self.n + (j - 1)]
    }

    fn degree_rows(&mut self) -> Result<()> {
        for i in 1..=self.n {
            let mut e = Expr::new();
            for &j in self.inst.neighbors(i) {
                e.add_term(self.x(i, j).unwrap(), 1.0);
            }
            let d = self.inst.degrees().degree(i) as f64;
            self.model.add_constraint(format!("deg_{i}"), e, Sense::Eq, d)?;
        }
        Ok(())
    }

    /// Pairwise variables stored for `i < j`, addressed in either order.
    fn pair_vars(&mut self, mut make: impl FnMut(&mut Model, usize, usize) -> Result<VarId>) -> Result<Vec<VarId>> {
        let n = self.n;
        let mut out = vec![VarId(usize::MAX); n * n];
        for i in 1..=n {
            for j in (i + 1)..=n {
                let v = make(&mut self.model, i, j)?;
                out[(i - 1) * n + (j - 1)] = v;
                out[(j - 1) * n + (i - 1)] = v;
            }
        }
        Ok(out)
    }
}

/// Largest possible tree diameter for the instance's degree sequence.
fn diameter(inst: &Instance) -> usize {
    inst.degrees().max_diameter()
}

fn weighted_distance_range(inst: &Instance) -> (f64, f64, f64) {
    let mut ts: Vec<f64> = inst.edges().iter().map(|&(i, j)| inst.length(i, j)).collect();
    ts.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let lo = *ts.last().unwrap_or(&1.0);
    let hi: f64 = ts.iter().take(inst.n() - 1).sum();
    (lo, hi, ts.first().copied().unwrap_or(1.0))
}

fn distance_vars(b: &mut Builder<'_>, kind: &FormulationKind) -> Result<Vec<VarId>> {
    let inst = b.inst;
    let l = diameter(inst);
    if inst.is_weighted() {
        let (lo, hi, _) = weighted_distance_range(inst);
        return b.pair_vars(|m, i, j| Ok(m.add_var(name(VariableRole::Distance { i, j }), VarKind::Continuous, lo, hi)?));
    }
    let vk = if kind.relax { VarKind::Continuous } else { VarKind::Integer };
    let adaptive = kind.adaptive;
    b.pair_vars(|m, i, j| {
        let cap = if adaptive { inst.degrees().adaptive_cap(i, j) } else { l };
        Ok(m.add_var(name(VariableRole::Distance { i, j }), vk, 1.0, cap.max(1) as f64)?)
    })
}

fn distance_objective(b: &mut Builder<'_>, d: &[VarId]) -> Result<()> {
    let n = b.n;
    let mut obj = Expr::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            let mu = b.inst.requirements().get(i, j);
            if mu != 0.0 {
                obj.add_term(d[(i - 1) * n + (j - 1)], 2.0 * mu);
            }
        }
    }
    b.model.set_objective(obj)?;
    Ok(())
}

fn build_f1q(b: &mut Builder<'_>, kind: &FormulationKind) -> Result<()> {
    let d = distance_vars(b, kind)?;
    let n = b.n;
    let inst = b.inst;
    let dv = |i: usize, j: usize| d[(i - 1) * n + (j - 1)];
    for i in 1..=n {
        let di = inst.degrees().degree(i) as f64;
        for j in 1..=n {
            if i == j || (kind.tag == Tag::F1QUt && j < i) {
                continue;
            }
            let mut e = Expr::new();
            if inst.is_weighted() {
                for &k in inst.neighbors(i) {
                    let c = 1.0 / inst.length(i, k);
                    let x = b.x(i, k).unwrap();
                    if k != j {
                        e.add_product(x, dv(k, j), c);
                    }
                    e.add_product(x, dv(i, j), -c);
                }
            } else {
                for &k in inst.neighbors(i) {
                    if k != j {
                        e.add_product(b.x(i, k).unwrap(), dv(k, j), 1.0);
                    }
                }
                e.add_term(dv(i, j), -di);
            }
            b.model.add_constraint(format!("lap_{i}_{j}"), e, Sense::Eq, di - 2.0)?;
        }
    }
    b.degree_rows()?;
    distance_objective(b, &d)
}

fn reach_vars(b: &mut Builder<'_>, kind: &FormulationKind) -> Result<Vec<Vec<VarId>>> {
    let l = diameter(b.inst);
    let vk = if kind.relax { VarKind::Continuous } else { VarKind::Binary };
    let mut w = Vec::with_capacity(l);
    for level in 1..=l {
        w.push(b.pair_vars(|m, i, j| Ok(m.add_var(name(VariableRole::Reach { l: level, i, j }), vk, 0.0, 1.0)?))?);
    }
    Ok(w)
}

fn build_f2(b: &mut Builder<'_>, kind: &FormulationKind) -> Result<()> {
    let n = b.n;
    let inst = b.inst;
    let l = diameter(inst);
    let w = reach_vars(b, kind)?;
    let wv = |level: usize, i: usize, j: usize| w[level - 1][(i - 1) * n + (j - 1)];
    let linear = kind.tag == Tag::F2L;
    let yk = if kind.relax { VarKind::Continuous } else { VarKind::Binary };
    for i in 1..=n {
        for j in (i + 1)..=n {
            let e = match b.x(i, j) {
                Some(x) => Expr::new().term(wv(1, i, j), 1.0).term(x, -1.0),
                None => Expr::new().term(wv(1, i, j), 1.0),
            };
            b.model.add_constraint(format!("w1_{i}_{j}"), e, Sense::Eq, 0.0)?;
        }
    }
    for level in 2..=l {
        for i in 1..=n {
            for j in (i + 1)..=n {
                let mut e = Expr::new().term(wv(level, i, j), 1.0);
                if let Some(x) = b.x(i, j) {
                    e.add_term(x, -1.0);
                }
                for &k in inst.neighbors(i) {
                    if k == j {
                        continue;
                    }
                    let xik = b.x(i, k).unwrap();
                    let prev = wv(level - 1, k, j);
                    if linear {
                        let y = b.model.add_var(name(VariableRole::ReachProduct { l: level, i, k, j }), yk, 0.0, 1.0)?;
                        b.model.add_constraint(
                            format!("yx_{level}_{i}_{k}_{j}"),
                            Expr::new().term(y, 1.0).term(xik, -1.0),
                            Sense::Le,
                            0.0,
                        )?;
                        b.model.add_constraint(
                            format!("yw_{level}_{i}_{k}_{j}"),
                            Expr::new().term(y, 1.0).term(prev, -1.0),
                            Sense::Le,
                            0.0,
                        )?;
                        e.add_term(y, -1.0);
                    } else {
                        e.add_product(xik, prev, -1.0);
                    }
                }
                b.model.add_constraint(format!("reach_{level}_{i}_{j}"), e, Sense::Le, 0.0)?;
            }
        }
    }
    for i in 1..=n {
        for j in (i + 1)..=n {
            b.model.add_constraint(format!("top_{i}_{j}"), Expr::new().term(wv(l, i, j), 1.0), Sense::Eq, 1.0)?;
        }
    }
    b.degree_rows()?;
    let mut obj = Expr::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            let mu = inst.requirements().get(i, j);
            if mu == 0.0 {
                continue;
            }
            obj.constant += 2.0 * mu * l as f64;
            for level in 1..l {
                obj.add_term(wv(level, i, j), -2.0 * mu);
            }
        }
    }
    b.model.set_objective(obj)?;
    Ok(())
}

fn build_f0l(b: &mut Builder<'_>) -> Result<()> {
    let n = b.n;
    let inst = b.inst;
    let mut obj = Expr::new();
    for s in 1..=n {
        for t in (s + 1)..=n {
            let mu = inst.requirements().get(s, t);
            let mut u = vec![None; n * n];
            for &(i, j) in inst.edges() {
                for (a, c) in [(i, j), (j, i)] {
                    let v = b.model.add_var(name(VariableRole::Flow { s, t, i: a, j: c }), VarKind::Continuous, 0.0, 1.0)?;
                    u[(a - 1) * n + (c - 1)] = Some(v);
                    if mu != 0.0 {
                        obj.add_term(v, 2.0 * mu * inst.length(a, c));
                    }
                }
            }
            let uv = |a: usize, c: usize| u[(a - 1) * n + (c - 1)].unwrap();
            for v in 1..=n {
                let mut e = Expr::new();
                for &k in inst.neighbors(v) {
                    e.add_term(uv(v, k), 1.0);
                    e.add_term(uv(k, v), -1.0);
                }
                if v == s {
                    b.model.add_constraint(format!("src_{s}_{t}"), e, Sense::Ge, 1.0)?;
                } else if v == t {
                    let e = Expr { linear: e.linear.into_iter().map(|(id, c)| (id, -c)).collect(), ..Expr::new() };
                    b.model.add_constraint(format!("snk_{s}_{t}"), e, Sense::Ge, 1.0)?;
                } else {
                    b.model.add_constraint(format!("cons_{s}_{t}_{v}"), e, Sense::Eq, 0.0)?;
                }
            }
            for &(i, j) in inst.edges() {
                let x = b.x(i, j).unwrap();
                for (a, c) in [(i, j), (j, i)] {
                    b.model.add_constraint(
                        format!("cap_{s}_{t}_{a}_{c}"),
                        Expr::new().term(uv(a, c), 1.0).term(x, -1.0),
                        Sense::Le,
                        0.0,
                    )?;
                }
            }
        }
    }
    b.degree_rows()?;
    b.model.set_objective(obj)?;
    Ok(())
}

fn build_f1l(b: &mut Builder<'_>, kind: &FormulationKind) -> Result<()> {
    let d = distance_vars(b, kind)?;
    let n = b.n;
    let inst = b.inst;
    let dv = |i: usize, j: usize| d[(i - 1) * n + (j - 1)];
    let big_m = if inst.is_weighted() {
        let (lo, hi, tmax) = weighted_distance_range(inst);
        hi + tmax - lo
    } else {
        match kind.big_m {
            BigM::L => diameter(inst) as f64,
            BigM::NMinusOne => (n - 1) as f64,
        }
    };
    for i in 1..=n {
        for j in 1..=n {
            if i == j {
                continue;
            }
            let mut sum = Expr::new();
            for &k in inst.neighbors(i) {
                if k == j {
                    continue;
                }
                let y = b.model.binary(name(VariableRole::NextHop { i, k, j }))?;
                let t = inst.length(i, k);
                b.model.add_constraint(
                    format!("bm_{i}_{k}_{j}"),
                    Expr::new().term(dv(i, j), 1.0).term(dv(k, j), -1.0).term(y, -big_m),
                    Sense::Ge,
                    t - big_m,
                )?;
                let xik = b.x(i, k).unwrap();
                b.model.add_constraint(format!("yx_{i}_{k}_{j}"), Expr::new().term(y, 1.0).term(xik, -1.0), Sense::Le, 0.0)?;
                sum.add_term(y, 1.0);
            }
            if let Some(x) = b.x(i, j) {
                sum.add_term(x, 1.0);
            }
            b.model.add_constraint(format!("next_{i}_{j}"), sum, Sense::Eq, 1.0)?;
        }
    }
    b.degree_rows()?;
    distance_objective(b, &d)
}

/// Builds the model of `kind` for `instance`. Quadratic kinds keep their
/// bilinear terms; run [`crate::model::linearize`] before solving or export.
pub fn build(instance: &Instance, kind: &FormulationKind) -> Result<Model> {
    let n = instance.n();
    if n < 3 {
        return Err(FormulationError::TooSmall(n));
    }
    if instance.is_weighted() && !kind.tag.supports_lengths() {
        return Err(FormulationError::Weighted(kind.tag));
    }
    if kind.tag == Tag::F0Q {
        return Err(FormulationError::NeedsDefoliatedTree);
    }
    let mut b = Builder::new(instance, kind.to_string())?;
    match kind.tag {
        Tag::F1Q | Tag::F1QUt => build_f1q(&mut b, kind)?,
        Tag::F2Q | Tag::F2L => build_f2(&mut b, kind)?,
        Tag::F0L => build_f0l(&mut b)?,
        Tag::F1L => build_f1l(&mut b, kind)?,
        Tag::F0Q => unreachable!(),
    }
    Ok(b.model)
}

/// The assignment problem that places leaves into the free slots of a fixed
/// tree over the internal vertices. Its objective is the full ordered-pair
/// cost of the resulting tree. The internal edges appear as `x` variables
/// fixed to one.
pub fn build_f0q_qap(defoliated: &DefoliatedTree, instance: &Instance) -> Result<Model> {
    let n = instance.n();
    if n < 3 {
        return Err(FormulationError::TooSmall(n));
    }
    if instance.is_weighted() {
        return Err(FormulationError::Weighted(Tag::F0Q));
    }
    let degs = instance.degrees();
    let internal = degs.internal();
    if defoliated.vertices() != internal.as_slice() {
        return Err(FormulationError::Defoliated(format!(
            "vertices {:?} differ from the internal vertices {:?}",
            defoliated.vertices(),
            internal
        )));
    }
    for &(a, b) in defoliated.edges() {
        if !instance.is_admissible_edge(a, b) {
            return Err(FormulationError::Defoliated(format!("edge {{{a}, {b}}} is not admissible")));
        }
    }
    for &k in &internal {
        if defoliated.degree(k) > degs.degree(k) {
            return Err(FormulationError::Defoliated(format!(
                "vertex {k} has degree {} above its target {}",
                defoliated.degree(k),
                degs.degree(k)
            )));
        }
    }
    let leaves = degs.leaves();
    let dist = defoliated.distances();
    let pos = |k: usize| defoliated.position(k).unwrap();
    let req = instance.requirements();

    let mut model = Model::new("F0Q");
    for &(a, b) in defoliated.edges() {
        model.add_var(name(VariableRole::Edge { i: a, j: b }), VarKind::Binary, 1.0, 1.0)?;
    }
    let m = internal.len();
    let mut a = vec![vec![None; m]; leaves.len()];
    for (li, &i) in leaves.iter().enumerate() {
        for (ki, &k) in internal.iter().enumerate() {
            let slots = degs.degree(k) - defoliated.degree(k);
            if slots > 0 && instance.is_admissible_edge(i, k) {
                a[li][ki] = Some(model.binary(name(VariableRole::LeafAssignment { leaf: i, slot: k }))?);
            }
        }
    }
    for (li, &i) in leaves.iter().enumerate() {
        let mut e = Expr::new();
        for v in a[li].iter().flatten() {
            e.add_term(*v, 1.0);
        }
        model.add_constraint(format!("leaf_{i}"), e, Sense::Eq, 1.0)?;
    }
    for (ki, &k) in internal.iter().enumerate() {
        let slots = degs.degree(k) - defoliated.degree(k);
        let mut e = Expr::new();
        for row in &a {
            if let Some(v) = row[ki] {
                e.add_term(v, 1.0);
            }
        }
        if slots > 0 || !e.linear.is_empty() {
            model.add_constraint(format!("slot_{k}"), e, Sense::Eq, slots as f64)?;
        }
    }
    let mut obj = Expr::new();
    for (p, &u) in internal.iter().enumerate() {
        for (q, &v) in internal.iter().enumerate().skip(p + 1) {
            obj.constant += 2.0 * req.get(u, v) * dist[p][q] as f64;
        }
    }
    for (li, &i) in leaves.iter().enumerate() {
        for (ki, _) in internal.iter().enumerate() {
            let Some(x) = a[li][ki] else { continue };
            let c: f64 = internal.iter().map(|&v| 2.0 * req.get(i, v) * (dist[ki][pos(v)] + 1) as f64).sum();
            if c != 0.0 {
                obj.add_term(x, c);
            }
        }
    }
    for (li, &i) in leaves.iter().enumerate() {
        for (lj, &j) in leaves.iter().enumerate().skip(li + 1) {
            let mu = req.get(i, j);
            if mu == 0.0 {
                continue;
            }
            for ki in 0..m {
                let Some(xi) = a[li][ki] else { continue };
                for kj in 0..m {
                    let Some(xj) = a[lj][kj] else { continue };
                    obj.add_product(xi, xj, 2.0 * mu * (dist[ki][kj] + 2) as f64);
                }
            }
        }
    }
    model.set_objective(obj)?;
    Ok(model)
}

fn edge_vars_match(model: &Model, instance: &Instance) -> std::result::Result<(), String> {
    let mut found = 0;
    for v in model.vars() {
        if let Some(VariableRole::Edge { i, j }) = VariableRole::parse(&v.name) {
            if i > instance.n() || j > instance.n() || !instance.is_admissible_edge(i, j) {
                return Err(format!("{} is not an admissible edge", v.name));
            }
            found += 1;
        }
    }
    if found != instance.edges().len() {
        return Err(format!("model has {found} edge variables, instance has {} edges", instance.edges().len()));
    }
    Ok(())
}

/// Adds the search-space cuts: every vertex touches an internal vertex, and
/// a degree-2 vertex touches at most one leaf. The first family is skipped
/// at the single center of a star and the second on three vertices, where
/// they would cut off the only trees.
pub fn attach_search_space_cuts(model: &Model, instance: &Instance) -> Result<Model> {
    edge_vars_match(model, instance).map_err(FormulationError::Mismatch)?;
    let degs = instance.degrees();
    let mut out = model.clone();
    let x = |i: usize, j: usize| {
        let (a, b) = ordered_pair(i, j);
        model.lookup(&name(VariableRole::Edge { i: a, j: b })).unwrap()
    };
    let multi_internal = degs.n_internal() >= 2;
    for i in 1..=instance.n() {
        if degs.is_leaf(i) || multi_internal {
            let mut e = Expr::new();
            for &j in instance.neighbors(i) {
                if !degs.is_leaf(j) {
                    e.add_term(x(i, j), 1.0);
                }
            }
            out.add_constraint(format!("cut_int_{i}"), e, Sense::Ge, 1.0)?;
        }
    }
    if instance.n() > 3 {
        for i in 1..=instance.n() {
            if degs.degree(i) != 2 {
                continue;
            }
            let mut e = Expr::new();
            for &j in instance.neighbors(i) {
                if degs.is_leaf(j) {
                    e.add_term(x(i, j), 1.0);
                }
            }
            out.add_constraint(format!("cut_leaf_{i}"), e, Sense::Le, 1.0)?;
        }
    }
    Ok(out)
}

/// The model a lifted tree is an assignment for: [`build`], or for F0Q the
/// leaf-assignment problem of the tree's own internal part.
pub fn lift_target(tree: &LabeledTree, instance: &Instance, kind: &FormulationKind) -> Result<Model> {
    if kind.tag == Tag::F0Q {
        build_f0q_qap(&DefoliatedTree::of_tree(tree), instance)
    } else {
        build(instance, kind)
    }
}

struct TreeData {
    n: usize,
    dist: DistanceMatrix,
    /// `next[(i - 1) * n + (j - 1)]`: vertex after `i` on the path to `j`.
    next: Vec<usize>,
    tree: LabeledTree,
}

impl TreeData {
    fn new(tree: &LabeledTree, instance: &Instance) -> Result<Self> {
        let n = tree.n();
        let dist = bfs_distance_matrix(tree, instance.lengths())?;
        let adj = tree.adjacency();
        let mut next = vec![0usize; n * n];
        for j in 1..=n {
            let mut stack = vec![j];
            let mut seen = vec![false; n + 1];
            seen[j] = true;
            while let Some(u) = stack.pop() {
                for &v in &adj[u - 1] {
                    if !seen[v] {
                        seen[v] = true;
                        next[(v - 1) * n + (j - 1)] = u;
                        stack.push(v);
                    }
                }
            }
        }
        Ok(TreeData { n, dist, next, tree: tree.clone() })
    }

    fn hops(&self, i: usize, j: usize) -> usize {
        let mut steps = 0;
        let mut v = i;
        while v != j {
            v = self.next[(v - 1) * self.n + (j - 1)];
            steps += 1;
        }
        steps
    }

    fn on_path(&self, s: usize, t: usize, a: usize, c: usize) -> bool {
        let mut v = s;
        while v != t {
            let w = self.next[(v - 1) * self.n + (t - 1)];
            if v == a && w == c {
                return true;
            }
            v = w;
        }
        false
    }
}

fn role_value(role: VariableRole, td: &TreeData) -> Option<i64> {
    let edge = |i: usize, j: usize| td.tree.has_edge(i, j) as i64;
    Some(match role {
        VariableRole::Edge { i, j } | VariableRole::LeafAssignment { leaf: i, slot: j } => edge(i, j),
        VariableRole::Distance { .. } => return None,
        VariableRole::Reach { l, i, j } => (td.hops(i, j) <= l) as i64,
        VariableRole::NextHop { i, k, j } => (!td.tree.has_edge(i, j) && td.next[(i - 1) * td.n + (j - 1)] == k) as i64,
        VariableRole::ReachProduct { l, i, k, j } => edge(i, k) * (td.hops(k, j) < l) as i64,
        VariableRole::Flow { s, t, i, j } => td.on_path(s, t, i, j) as i64,
    })
}

/// Assigns every variable of [`lift_target`] its value for `tree`.
pub fn lift(tree: &LabeledTree, instance: &Instance, kind: &FormulationKind) -> Result<Assignment> {
    if !instance.is_admissible_tree(tree) {
        return Err(FormulationError::Inadmissible);
    }
    let model = lift_target(tree, instance, kind)?;
    lift_into(tree, instance, &model)
}

/// Lifts `tree` into an existing model built from `instance`, including
/// product variables added by linearization and any added cuts.
pub fn lift_into(tree: &LabeledTree, instance: &Instance, model: &Model) -> Result<Assignment> {
    if !instance.is_admissible_tree(tree) {
        return Err(FormulationError::Inadmissible);
    }
    let td = TreeData::new(tree, instance)?;
    let mut a = Assignment::new();
    for v in model.vars() {
        match VariableRole::parse(&v.name) {
            Some(VariableRole::Distance { i, j }) => match &td.dist {
                DistanceMatrix::Hops { .. } => a.set_int(v.name.clone(), td.dist.get(i, j) as i64),
                DistanceMatrix::Weighted { .. } => a.set_f64(v.name.clone(), td.dist.get(i, j)),
            },
            Some(role) => a.set_int(v.name.clone(), role_value(role, &td).unwrap()),
            None => {}
        }
    }
    if !model.products().is_empty() {
        a = crate::model::extend_with_products(model, &a)?;
    }
    if let Some(missing) = model.vars().iter().find(|v| a.get(&v.name).is_none()) {
        return Err(ModelError::MissingValue(missing.name.clone()).into());
    }
    Ok(a)
}

/// Reads the tree from the edge (and, for F0Q, leaf-assignment) variables
/// rounded at one half, and validates it against the instance.
pub fn extract_tree(a: &Assignment, instance: &Instance, kind: &FormulationKind) -> Result<LabeledTree> {
    let _ = kind;
    let n = instance.n();
    let half = BigRational::new(1.into(), 2.into());
    let mut edges = Vec::new();
    for (name, value) in a.iter() {
        let pair = match VariableRole::parse(name) {
            Some(VariableRole::Edge { i, j }) => (i, j),
            Some(VariableRole::LeafAssignment { leaf, slot }) => ordered_pair(leaf, slot),
            _ => continue,
        };
        if *value >= half {
            edges.push(pair);
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let tree = LabeledTree::new(n, edges).map_err(|e| FormulationError::NotATree(e.to_string()))?;
    if tree.degrees() != instance.degrees().as_slice() {
        return Err(FormulationError::NotATree("degree sequence differs from the target".into()));
    }
    if !instance.is_admissible_tree(&tree) {
        return Err(FormulationError::Inadmissible);
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DegreeSequence, RequirementsMatrix};
    use crate::model::{evaluate, DEFAULT_TOL};

    fn unit(n: usize, d: Vec<usize>) -> Instance {
        let req = RequirementsMatrix::from_fn(n, |_, _| 1.0).unwrap();
        Instance::complete(req, DegreeSequence::new(d).unwrap()).unwrap()
    }

    #[test]
    fn names_round_trip() {
        let roles = [
            VariableRole::Edge { i: 1, j: 12 },
            VariableRole::Distance { i: 3, j: 4 },
            VariableRole::Reach { l: 2, i: 1, j: 3 },
            VariableRole::NextHop { i: 1, k: 2, j: 3 },
            VariableRole::ReachProduct { l: 2, i: 1, k: 2, j: 3 },
            VariableRole::Flow { s: 1, t: 2, i: 3, j: 4 },
            VariableRole::LeafAssignment { leaf: 5, slot: 6 },
        ];
        for r in roles {
            assert_eq!(VariableRole::parse(&r.name()), Some(r));
        }
        assert_eq!(VariableRole::parse("z_x_1_2_d_2_3"), None);
    }

    #[test]
    fn kind_options() {
        assert!(FormulationKind::new(Tag::F2Q).with_big_m(BigM::NMinusOne).is_err());
        assert!(FormulationKind::new(Tag::F0L).with_adaptive(true).is_err());
        assert!(FormulationKind::new(Tag::F1Q).with_relaxed(true).is_err());
        let k: FormulationKind = "F1L:M=n-1:adaptive".parse().unwrap();
        assert_eq!((k.big_m(), k.adaptive()), (BigM::NMinusOne, true));
        assert_eq!(k.to_string().parse::<FormulationKind>().unwrap(), k);
        assert_eq!("f1q_ut".parse::<Tag>().unwrap(), Tag::F1QUt);
    }

    #[test]
    fn f1l_counts_on_four_vertices() {
        let inst = unit(4, vec![2, 2, 1, 1]);
        let m = build(&inst, &Tag::F1L.into()).unwrap();
        let count = |p: &str| m.vars().iter().filter(|v| v.name.starts_with(p)).count();
        // {3, 4} joins two leaves and is not admissible
        assert_eq!(count("x_"), 5);
        assert_eq!(count("d_"), 6);
        let expected_y: usize = (1..=4)
            .flat_map(|i| (1..=4).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j)
            .map(|(i, j)| inst.neighbors(i).iter().filter(|&&k| k != j).count())
            .sum();
        assert_eq!(count("y_"), expected_y);
    }

    #[test]
    fn f0l_on_three_vertices() {
        let inst = unit(3, vec![1, 2, 1]);
        let m = build(&inst, &Tag::F0L.into()).unwrap();
        let flows = m.vars().iter().filter(|v| v.name.starts_with("u_")).count();
        assert_eq!(flows, 3 * 4);
        for (s, t) in [(1, 2), (1, 3), (2, 3)] {
            for p in [format!("src_{s}_{t}"), format!("snk_{s}_{t}")] {
                assert!(m.constraints().iter().any(|c| c.name == p));
            }
        }
    }

    #[test]
    fn small_and_weighted_errors() {
        let req = RequirementsMatrix::from_fn(2, |_, _| 1.0).unwrap();
        let inst = Instance::complete(req, DegreeSequence::new(vec![1, 1]).unwrap()).unwrap();
        assert_eq!(build(&inst, &Tag::F1L.into()), Err(FormulationError::TooSmall(2)));
        let inst = unit(4, vec![2, 2, 1, 1]);
        assert_eq!(build(&inst, &Tag::F0Q.into()), Err(FormulationError::NeedsDefoliatedTree));
    }

    #[test]
    fn cuts() {
        let inst = unit(4, vec![2, 2, 1, 1]);
        let m = build(&inst, &Tag::F1L.into()).unwrap();
        let c = attach_search_space_cuts(&m, &inst).unwrap();
        let cut1 = c.constraints().iter().find(|c| c.name == "cut_int_1").unwrap();
        assert_eq!(cut1.expr.linear, vec![(m.lookup("x_1_2").unwrap(), 1.0)]);
        assert_eq!(c.constraints().iter().filter(|c| c.name.starts_with("cut_leaf_")).count(), 2);
        let star = unit(5, vec![4, 1, 1, 1, 1]);
        let ms = attach_search_space_cuts(&build(&star, &Tag::F1L.into()).unwrap(), &star).unwrap();
        assert!(!ms.constraints().iter().any(|c| c.name.starts_with("cut_leaf_") || c.name == "cut_int_1"));
        let other = unit(5, vec![2, 2, 2, 1, 1]);
        assert!(matches!(attach_search_space_cuts(&m, &other), Err(FormulationError::Mismatch(_))));
    }

    #[test]
    fn star_lift_for_f2q() {
        let inst = unit(4, vec![3, 1, 1, 1]);
        let star = LabeledTree::new(4, [(1, 2), (1, 3), (1, 4)]).unwrap();
        let a = lift(&star, &inst, &Tag::F2Q.into()).unwrap();
        assert_eq!(a.get_f64("w_1_1_2"), Some(1.0));
        assert_eq!(a.get_f64("w_1_2_3"), Some(0.0));
        for l in 2..=3 {
            assert_eq!(a.get_f64(&format!("w_{l}_2_3")), Some(1.0));
        }
        let m = build(&inst, &Tag::F2Q.into()).unwrap();
        let e = evaluate(&m, &a, DEFAULT_TOL).unwrap();
        assert!(e.is_feasible(), "{e:?}");
        assert_eq!(e.objective_f64(), inst.cost(&star));
    }

    #[test]
    fn path_lift_for_f0l() {
        let inst = unit(4, vec![1, 2, 2, 1]);
        let path = LabeledTree::new(4, [(1, 2), (2, 3), (3, 4)]).unwrap();
        let a = lift(&path, &inst, &Tag::F0L.into()).unwrap();
        for (i, j) in [(1, 2), (2, 3), (3, 4)] {
            assert_eq!(a.get_f64(&format!("u_1_4_{i}_{j}")), Some(1.0));
            assert_eq!(a.get_f64(&format!("u_1_4_{j}_{i}")), Some(0.0));
        }
        let m = build(&inst, &Tag::F0L.into()).unwrap();
        assert!(evaluate(&m, &a, DEFAULT_TOL).unwrap().is_feasible());
    }

    #[test]
    fn extract_errors() {
        let inst = unit(4, vec![2, 2, 1, 1]);
        let m = build(&inst, &Tag::F1L.into()).unwrap();
        let mut zero = Assignment::new();
        for v in m.vars() {
            zero.set_int(v.name.clone(), 0);
        }
        assert!(matches!(extract_tree(&zero, &inst, &Tag::F1L.into()), Err(FormulationError::NotATree(_))));
        let mut full = zero.clone();
        for (i, j) in inst.edges() {
            full.set_int(format!("x_{i}_{j}"), 1);
        }
        assert!(matches!(extract_tree(&full, &inst, &Tag::F1L.into()), Err(FormulationError::NotATree(_))));
    }
}
