//! Reference checking and lazy construction of scenario objects.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use ssdkit::convexfun::{GridFunction, SegmentChain};
use ssdkit::sampling::linspace;
use ssdkit::{
    compose_reflection, fitzpatrick, fitzpatrick_op, graph_as_pointset, intrinsic_conjugate, partial_episum,
    translate, ConvexFunction, GraphSampling, MonotoneOp, PointSet, Quadratic, SsdPoint, SsdSpace,
};

use crate::scenario::{FunctionDesc, OperatorDesc, Range, Reflection, Scenario, SetDesc, TaskKind};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Function,
    Operator,
    Set,
}

impl Kind {
    fn table(self) -> &'static str {
        match self {
            Kind::Function => "functions",
            Kind::Operator => "operators",
            Kind::Set => "sets",
        }
    }
}

type Ref<'a> = (Kind, &'a str);

fn function_refs(d: &FunctionDesc) -> Vec<Ref<'_>> {
    use FunctionDesc::*;
    match d {
        Quadratic { .. } | G0 { .. } | Abs {} | MaxAffine { .. } | Grid { .. } | Chain { .. } => vec![],
        Translated { base, .. }
        | Reflected { base, .. }
        | IntrinsicConjugate { base }
        | Conjugate { base }
        | Componentwise { base, .. } => vec![(Kind::Function, base)],
        Sum { parts } => parts.iter().map(|p| (Kind::Function, p.as_str())).collect(),
        Separable { blocks } => blocks.iter().map(|b| (Kind::Function, b.function.as_str())).collect(),
        Fitzpatrick { set, operator } => {
            let mut v = vec![];
            v.extend(set.as_deref().map(|s| (Kind::Set, s)));
            v.extend(operator.as_deref().map(|s| (Kind::Operator, s)));
            v
        }
        PartialEpisum { f, g, .. } => vec![(Kind::Function, f), (Kind::Function, g)],
    }
}

fn operator_refs(d: &OperatorDesc) -> Vec<Ref<'_>> {
    use OperatorDesc::*;
    match d {
        Subdiff { function } => vec![(Kind::Function, function)],
        Affine { .. } | Identity { .. } | Graph { .. } | LineGraph { .. } => vec![],
        Sum { ops } => ops.iter().map(|o| (Kind::Operator, o.as_str())).collect(),
        Inverse { op } => vec![(Kind::Operator, op)],
    }
}

fn set_refs(d: &SetDesc) -> Vec<Ref<'_>> {
    match d {
        SetDesc::Points { .. } | SetDesc::Helix { .. } | SetDesc::Line { .. } => vec![],
        SetDesc::Graph { operator } => vec![(Kind::Operator, operator)],
        SetDesc::Reflected { set, .. } => vec![(Kind::Set, set)],
    }
}

fn f(s: &str) -> Ref<'_> {
    (Kind::Function, s)
}

fn o(s: &str) -> Ref<'_> {
    (Kind::Operator, s)
}

pub fn task_refs(t: &TaskKind) -> Vec<Ref<'_>> {
    use TaskKind::*;
    match t {
        CheckQpositive { set, .. } => vec![(Kind::Set, set)],
        FitzpatrickEval { set, operator, .. } => {
            let mut v = vec![];
            v.extend(set.as_deref().map(|s| (Kind::Set, s)));
            v.extend(operator.as_deref().map(o));
            v
        }
        ConjugateEval { function, .. } | CertifyBc { function, .. } | CertifyTbc { function, .. } => vec![f(function)],
        Decompose { f: a, g, .. } | EpisumEval { f: a, g, .. } => vec![f(a), f(g)],
        CheckMaximal { function, g, .. } => {
            let mut v = vec![f(function)];
            v.extend(g.as_deref().map(f));
            v
        }
        Surjectivity { operator, .. } | Minnorm { operator, .. } => vec![o(operator)],
        SumCheck { s, t, .. } | SumSurjectivity { s, t, .. } | Hammerstein { s, t, .. } => vec![o(s), o(t)],
    }
}

fn exactly_one(set: &Option<String>, operator: &Option<String>, what: &str) -> Result<(), CliError> {
    if set.is_some() == operator.is_some() {
        return Err(CliError::Schema(format!("{what}: give exactly one of `set` or `operator`")));
    }
    Ok(())
}

/// Checks that every reference resolves and that the object graph is acyclic.
pub fn validate(sc: &Scenario) -> Result<(), CliError> {
    let mut edges: BTreeMap<(Kind, &str), Vec<Ref<'_>>> = BTreeMap::new();
    for (name, d) in &sc.functions {
        if let FunctionDesc::Fitzpatrick { set, operator } = d {
            exactly_one(set, operator, &format!("functions.{name}"))?;
        }
        edges.insert((Kind::Function, name), function_refs(d));
    }
    for (name, d) in &sc.operators {
        edges.insert((Kind::Operator, name), operator_refs(d));
    }
    for (name, d) in &sc.sets {
        edges.insert((Kind::Set, name), set_refs(d));
    }
    let resolve = |from: &str, r: &Ref<'_>| -> Result<(), CliError> {
        if edges.contains_key(r) {
            Ok(())
        } else {
            Err(CliError::Reference(format!("{from} refers to unknown {}.{}", r.0.table(), r.1)))
        }
    };
    for ((k, name), refs) in &edges {
        for r in refs {
            resolve(&format!("{}.{name}", k.table()), r)?;
        }
    }
    let mut ids = BTreeSet::new();
    for (i, t) in sc.tasks.iter().enumerate() {
        if !ids.insert(t.id.as_str()) {
            return Err(CliError::Schema(format!("duplicate task id `{}`", t.id)));
        }
        if let TaskKind::FitzpatrickEval { set, operator, .. } = &t.kind {
            exactly_one(set, operator, &format!("task `{}`", t.id))?;
        }
        for r in task_refs(&t.kind) {
            resolve(&format!("tasks[{i}] (`{}`)", t.id), &r)?;
        }
    }
    // depth-first search with an explicit path for the cycle message
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        node: Ref<'a>,
        edges: &BTreeMap<Ref<'a>, Vec<Ref<'a>>>,
        marks: &mut HashMap<Ref<'a>, Mark>,
        path: &mut Vec<Ref<'a>>,
    ) -> Result<(), CliError> {
        match marks.get(&node) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Active) => {
                let start = path.iter().position(|n| *n == node).unwrap_or(0);
                let cycle: Vec<String> =
                    path[start..].iter().chain([&node]).map(|(k, n)| format!("{}.{n}", k.table())).collect();
                return Err(CliError::Reference(format!("reference cycle: {}", cycle.join(" -> "))));
            }
            None => {}
        }
        marks.insert(node, Mark::Active);
        path.push(node);
        for &next in &edges[&node] {
            visit(next, edges, marks, path)?;
        }
        path.pop();
        marks.insert(node, Mark::Done);
        Ok(())
    }
    let mut marks = HashMap::new();
    for &node in edges.keys() {
        visit(node, &edges, &mut marks, &mut Vec::new())?;
    }
    Ok(())
}

fn range(r: &Range) -> Vec<f64> {
    linspace(r.lo, r.hi, r.n)
}

/// Builds objects on demand and caches them; call [`validate`] first.
pub struct Builder<'a> {
    sc: &'a Scenario,
    sampling: GraphSampling,
    functions: HashMap<String, ConvexFunction>,
    operators: HashMap<String, MonotoneOp>,
    sets: HashMap<String, PointSet>,
}

type Built<T> = Result<T, ssdkit::Error>;

impl<'a> Builder<'a> {
    pub fn new(sc: &'a Scenario) -> Self {
        Builder {
            sc,
            sampling: sc.sampling.clone(),
            functions: HashMap::new(),
            operators: HashMap::new(),
            sets: HashMap::new(),
        }
    }

    pub fn space(&self) -> SsdSpace {
        self.sc.space
    }

    pub fn sampling(&self) -> &GraphSampling {
        &self.sampling
    }

    pub fn function(&mut self, name: &str) -> Built<ConvexFunction> {
        if let Some(f) = self.functions.get(name) {
            return Ok(f.clone());
        }
        let space = self.sc.space;
        let f = match &self.sc.functions[name] {
            FunctionDesc::Quadratic { q, p, r } => ConvexFunction::Quadratic(Quadratic::from_rows(q, p, *r)?),
            FunctionDesc::G0 { dim } => ConvexFunction::g0(dim.unwrap_or(space.dim())),
            FunctionDesc::Abs {} => ConvexFunction::abs(),
            FunctionDesc::MaxAffine { pieces } => ConvexFunction::max_affine(pieces.clone())?,
            FunctionDesc::Grid { axes, values } => ConvexFunction::Grid(GridFunction::new(axes.clone(), values.clone())?),
            FunctionDesc::Chain { vertices } => ConvexFunction::Chain(SegmentChain::new(space, vertices.clone())?),
            FunctionDesc::Translated { base, shift } => translate(&space, &self.function(base)?, shift)?,
            FunctionDesc::Reflected { base, sign } => compose_reflection(&space, &self.function(base)?, *sign)?,
            FunctionDesc::IntrinsicConjugate { base } => intrinsic_conjugate(&space, &self.function(base)?)?,
            FunctionDesc::Conjugate { base } => self.function(base)?.conjugate()?,
            FunctionDesc::Sum { parts } => {
                let parts = parts.iter().map(|p| self.function(p)).collect::<Built<Vec<_>>>()?;
                ConvexFunction::sum(parts)?
            }
            FunctionDesc::Componentwise { base, dim } => ConvexFunction::componentwise(self.function(base)?, *dim)?,
            FunctionDesc::Separable { blocks } => {
                let blocks =
                    blocks.iter().map(|b| Ok((b.coords.clone(), self.function(&b.function)?))).collect::<Built<_>>()?;
                ConvexFunction::separable(blocks)?
            }
            FunctionDesc::Fitzpatrick { set: Some(s), .. } => fitzpatrick(&self.set(s)?),
            FunctionDesc::Fitzpatrick { operator: Some(o), .. } => {
                let op = self.operator(o)?;
                fitzpatrick_op(&op, &self.sampling)?
            }
            FunctionDesc::Fitzpatrick { .. } => unreachable!("checked by validate"),
            FunctionDesc::PartialEpisum { f, g, resolution, radius } => {
                partial_episum(&space, &self.function(f)?, &self.function(g)?, *resolution, *radius)?
            }
        };
        self.functions.insert(name.to_string(), f.clone());
        Ok(f)
    }

    pub fn operator(&mut self, name: &str) -> Built<MonotoneOp> {
        if let Some(o) = self.operators.get(name) {
            return Ok(o.clone());
        }
        let op = match &self.sc.operators[name] {
            OperatorDesc::Subdiff { function } => MonotoneOp::subdiff(self.function(function)?),
            OperatorDesc::Affine { m, b } => MonotoneOp::affine_from_rows(m, b)?,
            OperatorDesc::Identity { n } => MonotoneOp::identity(*n),
            OperatorDesc::Graph { points } => {
                let pairs = points
                    .iter()
                    .map(|p| {
                        if p.len() % 2 != 0 || p.is_empty() {
                            return Err(ssdkit::Error::InvalidInput(format!(
                                "graph point {p:?} must have even length [x..., x*...]"
                            )));
                        }
                        let (x, xs) = p.split_at(p.len() / 2);
                        Ok((x.to_vec(), xs.to_vec()))
                    })
                    .collect::<Built<Vec<_>>>()?;
                MonotoneOp::graph(pairs)?
            }
            OperatorDesc::LineGraph { slope, shift, t } => {
                MonotoneOp::graph(range(t).into_iter().map(|t| (vec![t], vec![slope * t + shift])).collect())?
            }
            OperatorDesc::Sum { ops } => {
                let ops = ops.iter().map(|o| self.operator(o)).collect::<Built<Vec<_>>>()?;
                MonotoneOp::sum(ops)?
            }
            OperatorDesc::Inverse { op } => MonotoneOp::inverse(self.operator(op)?),
        };
        self.operators.insert(name.to_string(), op.clone());
        Ok(op)
    }

    pub fn set(&mut self, name: &str) -> Built<PointSet> {
        if let Some(s) = self.sets.get(name) {
            return Ok(s.clone());
        }
        let space = self.sc.space;
        let set = match &self.sc.sets[name] {
            SetDesc::Points { points } => {
                PointSet::new(space, points.iter().map(|p| SsdPoint::new(p.clone())).collect())?
            }
            SetDesc::Helix { lambda, theta } => PointSet::helix(*lambda, &range(theta))?,
            SetDesc::Line { direction, t } => PointSet::line(space, direction, &range(t))?,
            SetDesc::Graph { operator } => {
                let op = self.operator(operator)?;
                graph_as_pointset(&op, &self.sampling)?
            }
            SetDesc::Reflected { set, map } => {
                let base = self.set(set)?;
                let s = base.space();
                let points = base
                    .points()
                    .iter()
                    .map(|p| match map {
                        Reflection::Rho1 => s.reflect1(p),
                        Reflection::Rho2 => s.reflect2(p),
                    })
                    .collect::<Built<Vec<_>>>()?;
                PointSet::new(s, points)?
            }
        };
        self.sets.insert(name.to_string(), set.clone());
        Ok(set)
    }
}
