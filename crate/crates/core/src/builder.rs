//! Stagewise finite approximations to automorphisms with dense or generic
//! conjugacy class, recorded as replayable traces.
//!
//! A condition is a system of the class. Each stage meets one requirement
//! by extending the current condition (or keeping it) and records the
//! embedding that witnesses the requirement:
//!
//! * dense: a scheduled condition `ψ` embeds into the condition, so some
//!   conjugate of `ψ` is contained in it;
//! * refined: the same, routed through the class's weak-amalgamation
//!   witness `ψ̂ ⊇ ψ` (for Boolean algebras, the normal refinement);
//! * local orbit: a scheduled extension `θ` of `ψ̂` embeds over the placed
//!   copy of `ψ̂`, so the conjugator fixes that copy pointwise.
//!
//! Only a finite explicit schedule is met; the trace header records it.

use serde::{Deserialize, Serialize};

use crate::algebra::{AmbientAlgebra, AtomId, Block};
use crate::checkers::ClassDriver;
use crate::enumerate::{permutations, set_partitions};
use crate::error::{Error, Result};
use crate::system::{PartialIso, PartialIsoSystem};

/// Earlier placements are searched for reuse up to this size.
pub const EMBED_SEARCH_SIZE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Maximum number of stages.
    pub stages: usize,
    /// Maximum size of a condition.
    pub size: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { stages: 10_000, size: 4_096 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuilderKind {
    DenseOrbit,
    Generic,
}

/// One scheduled condition, with its weak-amalgamation witness and the
/// scheduled extensions of that witness when building generically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduledCondition<S, E> {
    pub condition: S,
    pub refinement: Option<(S, E)>,
    pub extensions: Vec<(S, E)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Requirement {
    Dense { condition: usize },
    Refined { condition: usize },
    LocalOrbit { condition: usize, extension: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage<S, E> {
    pub requirement: Requirement,
    /// The extended condition and the embedding of the previous condition
    /// into it; absent when the condition is kept.
    pub extended: Option<(S, E)>,
    /// Embedding of the witnessed system into the stage's condition.
    pub conjugator: E,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionTrace<S, E> {
    pub builder: BuilderKind,
    pub class: String,
    pub schedule: Vec<ScheduledCondition<S, E>>,
    pub budget: Budget,
    pub initial: S,
    pub stages: Vec<Stage<S, E>>,
    pub final_condition: S,
    /// True when every requirement of the schedule was met within budget.
    pub complete: bool,
}

impl<S, E> ConstructionTrace<S, E> {
    /// The requirements of the schedule in the order they are met: each
    /// condition, then its extensions by index.
    pub fn requirements(builder: BuilderKind, schedule: &[ScheduledCondition<S, E>]) -> Vec<Requirement> {
        let mut out = Vec::new();
        for (i, sc) in schedule.iter().enumerate() {
            out.push(match builder {
                BuilderKind::DenseOrbit => Requirement::Dense { condition: i },
                BuilderKind::Generic => Requirement::Refined { condition: i },
            });
            if builder == BuilderKind::Generic {
                out.extend((0..sc.extensions.len()).map(|j| Requirement::LocalOrbit { condition: i, extension: j }));
            }
        }
        out
    }
}

/// A dense-orbit schedule: the conditions alone.
pub fn dense_schedule<S, E>(conditions: Vec<S>) -> Vec<ScheduledCondition<S, E>> {
    conditions.into_iter().map(|condition| ScheduledCondition { condition, refinement: None, extensions: Vec::new() }).collect()
}

/// A generic schedule: each condition with the driver's weak-amalgamation
/// witness and the first `per_condition` one-step extensions of the witness
/// that differ from it.
pub fn generic_schedule<D: ClassDriver>(
    d: &D,
    conditions: Vec<D::System>,
    per_condition: usize,
) -> Result<Vec<ScheduledCondition<D::System, D::Embedding>>> {
    conditions
        .into_iter()
        .map(|condition| {
            let (hat, r) = wap_witness(d, &condition)?;
            let extensions = d.extensions(&hat)?.into_iter().filter(|(t, _)| *t != hat).take(per_condition).collect();
            Ok(ScheduledCondition { condition, refinement: Some((hat, r)), extensions })
        })
        .collect()
}

fn wap_witness<D: ClassDriver>(d: &D, s: &D::System) -> Result<(D::System, D::Embedding)> {
    if let Some(w) = d.preferred_witness(s)? {
        return Ok(w);
    }
    match d.cofinal_witness(s) {
        Ok(Some(w)) => Ok(w),
        Ok(None) => Err(Error::precondition(format!("{} found no weak-amalgamation witness", d.name()))),
        Err(_) => Err(Error::Unsupported(format!("{} provides no weak-amalgamation witnesses", d.name()))),
    }
}

/// A system placed into the current condition.
struct Placement<S, E> {
    system: S,
    at: E,
}

struct Builder<'a, D: ClassDriver> {
    d: &'a D,
    budget: Budget,
    current: D::System,
    stages: Vec<Stage<D::System, D::Embedding>>,
    placements: Vec<Placement<D::System, D::Embedding>>,
}

enum Outcome {
    Met,
    OutOfBudget,
}

impl<'a, D: ClassDriver> Builder<'a, D> {
    fn extend(&mut self, system: D::System, along: D::Embedding) {
        for p in &mut self.placements {
            p.at = self.d.compose(&p.at, &along);
        }
        self.current = system;
    }

    /// Places `psi` by reusing an earlier placement or a small search, and
    /// otherwise by a joint embedding with the current condition.
    fn place(&mut self, requirement: Requirement, psi: &D::System) -> Result<Outcome> {
        let d = self.d;
        if self.stages.len() >= self.budget.stages {
            return Ok(Outcome::OutOfBudget);
        }
        let reused = self
            .placements
            .iter()
            .filter(|p| d.size(&p.system) <= EMBED_SEARCH_SIZE)
            .find_map(|p| d.find_embedding(psi, &p.system, None).map(|h| d.compose(&h, &p.at)))
            .or_else(|| d.find_embedding(psi, &self.current, None));
        let (extended, conjugator) = match reused {
            Some(g) => (None, g),
            None => {
                let empty = d.empty(d.arity(psi));
                let span = d
                    .amalgamate_compact(&empty, (&self.current, &d.initial(&self.current)), (psi, &d.initial(psi)))?
                    .ok_or_else(|| Error::precondition(format!("{} has no joint embedding for a scheduled condition", d.name())))?;
                if d.size(&span.system) > self.budget.size {
                    return Ok(Outcome::OutOfBudget);
                }
                self.extend(span.system.clone(), span.left.clone());
                (Some((span.system, span.left)), span.right)
            }
        };
        self.placements.push(Placement { system: psi.clone(), at: conjugator.clone() });
        self.stages.push(Stage { requirement, extended, conjugator });
        Ok(Outcome::Met)
    }

    /// Realises `theta ⊇ hat` over the placement `at` of `hat`.
    fn realise(&mut self, requirement: Requirement, hat: &D::System, at: &D::Embedding, theta: &(D::System, D::Embedding)) -> Result<Outcome> {
        let d = self.d;
        if self.stages.len() >= self.budget.stages {
            return Ok(Outcome::OutOfBudget);
        }
        if let Some(h) = d.find_embedding(&theta.0, &self.current, Some((&theta.1, at))) {
            self.placements.push(Placement { system: theta.0.clone(), at: h.clone() });
            self.stages.push(Stage { requirement, extended: None, conjugator: h });
            return Ok(Outcome::Met);
        }
        let span = d
            .amalgamate_compact(hat, (&self.current, at), (&theta.0, &theta.1))?
            .ok_or_else(|| Error::precondition(format!("{} could not amalgamate over a weak-amalgamation witness", d.name())))?;
        if d.size(&span.system) > self.budget.size {
            return Ok(Outcome::OutOfBudget);
        }
        self.extend(span.system.clone(), span.left.clone());
        self.placements.push(Placement { system: theta.0.clone(), at: span.right.clone() });
        self.stages.push(Stage { requirement, extended: Some((span.system, span.left)), conjugator: span.right });
        Ok(Outcome::Met)
    }
}

fn run<D: ClassDriver>(
    d: &D,
    kind: BuilderKind,
    initial: D::System,
    schedule: Vec<ScheduledCondition<D::System, D::Embedding>>,
    budget: Budget,
) -> Result<ConstructionTrace<D::System, D::Embedding>> {
    d.validate(&initial)?;
    for sc in &schedule {
        d.validate(&sc.condition)?;
        if d.arity(&sc.condition) != d.arity(&initial) {
            return Err(Error::ArityMismatch { left: d.arity(&initial), right: d.arity(&sc.condition) });
        }
    }
    let mut b = Builder { d, budget, current: initial.clone(), stages: Vec::new(), placements: Vec::new() };
    let mut complete = true;
    'schedule: for (i, sc) in schedule.iter().enumerate() {
        let outcome = match kind {
            BuilderKind::DenseOrbit => b.place(Requirement::Dense { condition: i }, &sc.condition)?,
            BuilderKind::Generic => {
                let (hat, _) = sc.refinement.as_ref().ok_or_else(|| Error::precondition("generic schedule entry lacks a witness"))?;
                b.place(Requirement::Refined { condition: i }, hat)?
            }
        };
        if matches!(outcome, Outcome::OutOfBudget) {
            complete = false;
            break;
        }
        if kind == BuilderKind::Generic {
            let hat = &sc.refinement.as_ref().expect("checked").0;
            for (j, theta) in sc.extensions.iter().enumerate() {
                // The witness was placed last, before any of its extensions.
                let pos = b.placements.len() - 1 - j;
                let at = b.placements[pos].at.clone();
                if matches!(b.realise(Requirement::LocalOrbit { condition: i, extension: j }, hat, &at, theta)?, Outcome::OutOfBudget) {
                    complete = false;
                    break 'schedule;
                }
            }
        }
    }
    Ok(ConstructionTrace {
        builder: kind,
        class: d.name(),
        schedule,
        budget,
        initial,
        stages: b.stages,
        final_condition: b.current,
        complete,
    })
}

/// Meets the dense sets of the scheduled conditions: after the stage for
/// `ψ`, the condition contains a conjugate of `ψ`.
pub fn build_dense_orbit_approx<D: ClassDriver>(
    d: &D,
    initial: D::System,
    conditions: Vec<D::System>,
    budget: Budget,
) -> Result<ConstructionTrace<D::System, D::Embedding>> {
    run(d, BuilderKind::DenseOrbit, initial, dense_schedule(conditions), budget)
}

/// Meets, for each scheduled condition, the dense set of its
/// weak-amalgamation witness `ψ̂` and then each scheduled extension of `ψ̂`
/// over the placed copy of `ψ̂`.
pub fn build_generic_approx<D: ClassDriver>(
    d: &D,
    initial: D::System,
    schedule: Vec<ScheduledCondition<D::System, D::Embedding>>,
    budget: Budget,
) -> Result<ConstructionTrace<D::System, D::Embedding>> {
    run(d, BuilderKind::Generic, initial, schedule, budget)
}

/// Re-checks a trace from its recorded data alone.
pub fn replay<D: ClassDriver>(d: &D, t: &ConstructionTrace<D::System, D::Embedding>) -> std::result::Result<(), String> {
    let err = |k: usize, m: &str| format!("stage {k}: {m}");
    d.validate(&t.initial).map_err(|e| format!("initial condition: {e}"))?;
    for (i, sc) in t.schedule.iter().enumerate() {
        d.validate(&sc.condition).map_err(|e| format!("condition {i}: {e}"))?;
        if let Some((hat, r)) = &sc.refinement {
            d.validate(hat).map_err(|e| format!("witness {i}: {e}"))?;
            if !d.is_embedding(r, &sc.condition, hat) {
                return Err(format!("witness {i} does not extend its condition"));
            }
            if d.in_cofinal(hat) == Some(false) {
                return Err(format!("witness {i} lies outside the cofinal subclass"));
            }
            for (j, (theta, e)) in sc.extensions.iter().enumerate() {
                d.validate(theta).map_err(|e| format!("extension {i}.{j}: {e}"))?;
                if !d.is_embedding(e, hat, theta) {
                    return Err(format!("extension {i}.{j} does not extend the witness"));
                }
            }
        } else if !sc.extensions.is_empty() {
            return Err(format!("condition {i} has extensions but no witness"));
        }
    }

    let mut current = t.initial.clone();
    // Every witnessed system with its placement, lifted to the current condition.
    let mut placed: Vec<(D::System, D::Embedding)> = Vec::new();
    let mut refined: Vec<Option<D::Embedding>> = vec![None; t.schedule.len()];
    for (k, st) in t.stages.iter().enumerate() {
        if let Some((next, along)) = &st.extended {
            d.validate(next).map_err(|e| err(k, &e.to_string()))?;
            if !d.is_embedding(along, &current, next) {
                return Err(err(k, "the previous condition does not embed into the extension"));
            }
            for p in &mut placed {
                p.1 = d.compose(&p.1, along);
            }
            for r in refined.iter_mut().flatten() {
                *r = d.compose(r, along);
            }
            current = next.clone();
        }
        let entry = |i: usize| t.schedule.get(i).ok_or_else(|| err(k, "requirement names no scheduled condition"));
        match st.requirement {
            Requirement::Dense { condition } => {
                let psi = &entry(condition)?.condition;
                if !d.is_embedding(&st.conjugator, psi, &current) {
                    return Err(err(k, "the conjugate of the condition is not contained"));
                }
                placed.push((psi.clone(), st.conjugator.clone()));
            }
            Requirement::Refined { condition } => {
                let sc = entry(condition)?;
                let (hat, r) = sc.refinement.as_ref().ok_or_else(|| err(k, "no witness scheduled"))?;
                if !d.is_embedding(&st.conjugator, hat, &current) {
                    return Err(err(k, "the conjugate of the witness is not contained"));
                }
                let via = d.compose(r, &st.conjugator);
                if !d.is_embedding(&via, &sc.condition, &current) {
                    return Err(err(k, "the conjugate of the condition is not contained"));
                }
                placed.push((hat.clone(), st.conjugator.clone()));
                placed.push((sc.condition.clone(), via));
                refined[condition] = Some(st.conjugator.clone());
            }
            Requirement::LocalOrbit { condition, extension } => {
                let sc = entry(condition)?;
                let (theta, e) = sc.extensions.get(extension).ok_or_else(|| err(k, "requirement names no scheduled extension"))?;
                let at = refined[condition].as_ref().ok_or_else(|| err(k, "the witness was never placed"))?;
                if !d.is_embedding(&st.conjugator, theta, &current) {
                    return Err(err(k, "the conjugate of the extension is not contained"));
                }
                if d.compose(e, &st.conjugator) != *at {
                    return Err(err(k, "the conjugator moves the placed witness"));
                }
                placed.push((theta.clone(), st.conjugator.clone()));
            }
        }
    }
    if current != t.final_condition {
        return Err("final condition differs from the last stage".into());
    }
    for (n, (s, at)) in placed.iter().enumerate() {
        if !d.is_embedding(at, s, &t.final_condition) {
            return Err(format!("placement {n} is not contained in the final condition"));
        }
    }
    let expected = ConstructionTrace::requirements(t.builder, &t.schedule);
    let got: Vec<Requirement> = t.stages.iter().map(|s| s.requirement).collect();
    if got.len() > expected.len() || got[..] != expected[..got.len()] {
        return Err("stages do not follow the schedule order".into());
    }
    if t.complete != (got.len() == expected.len()) {
        return Err("completion flag disagrees with the stages".into());
    }
    Ok(())
}

/// The coordinate algebra of depth `depth`: atoms are the binary words of
/// that length.
pub fn coordinate_algebra(depth: usize) -> AmbientAlgebra {
    let atoms = (0..1usize << depth).map(|x| AtomId::new(if depth == 0 { "e".to_string() } else { format!("{x:0depth$b}") }));
    AmbientAlgebra::new(atoms).expect("distinct words")
}

/// Every partial isomorphism between subalgebras of the depth-`depth`
/// coordinate algebra with at most `max_blocks` blocks, as a 1-system over
/// the algebra generated by its domain and range. An atom of that algebra
/// is labelled by its least coordinate word. Ordered by block count, then
/// by enumeration order.
pub fn boolean_conditions(depth: usize, max_blocks: usize) -> Vec<PartialIsoSystem> {
    let amb = coordinate_algebra(depth);
    let atoms = amb.atoms();
    let parts: Vec<Vec<Block>> = set_partitions(atoms.len())
        .into_iter()
        .map(|rgs| {
            let j = rgs.iter().max().map_or(0, |m| m + 1);
            let mut out = vec![Block::new(); j];
            for (a, &i) in atoms.iter().zip(&rgs) {
                out[i].insert(a.clone());
            }
            out
        })
        .collect();
    let mut out = Vec::new();
    for k in 1..=max_blocks {
        for bs in parts.iter().filter(|p| p.len() == k) {
            for cs in parts.iter().filter(|p| p.len() == k) {
                for perm in permutations(k) {
                    let pairs: Vec<(Block, Block)> = bs.iter().cloned().zip(perm.iter().map(|&j| cs[j].clone())).collect();
                    out.push(generated(&pairs));
                }
            }
        }
    }
    out
}

fn generated(pairs: &[(Block, Block)]) -> PartialIsoSystem {
    let mut cells: Vec<Block> = Vec::new();
    for (b, _) in pairs {
        for (_, c) in pairs {
            let x: Block = b.intersection(c).cloned().collect();
            if !x.is_empty() {
                cells.push(x);
            }
        }
    }
    let name = |x: &Block| x.iter().next().expect("nonempty").clone();
    let amb = AmbientAlgebra::new(cells.iter().map(name)).expect("distinct least words");
    let relabel = |b: &Block| -> Block { cells.iter().filter(|x| x.is_subset(b)).map(name).collect() };
    let iso = PartialIso::new(&amb, pairs.iter().map(|(b, c)| (relabel(b), relabel(c))).collect()).expect("generated algebra");
    PartialIsoSystem::single(amb, iso).expect("one map")
}
