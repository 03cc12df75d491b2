//! Bounded exhaustive checks of the joint embedding, weak amalgamation and
//! cofinal amalgamation properties for classes of systems (a structure with
//! `n` partial isomorphisms), through pluggable class drivers.
//!
//! A bounded search can only certify "holds up to the bound" or exhibit a
//! counterexample relative to the bound; reports carry the bounds, and a
//! counterexample is flagged bound-independent only when the driver proves
//! that no joint embedding exists at any size.

pub mod boolean;
pub mod relational;

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// A system with embeddings of two others into it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span<S, E> {
    pub system: S,
    pub left: E,
    pub right: E,
}

/// Access to a class of finite structures and its systems.
pub trait ClassDriver: Sync {
    type System: Clone + Debug + PartialEq + Serialize + Send + Sync;
    type Embedding: Clone + Debug + PartialEq + Serialize + Send + Sync;

    fn name(&self) -> String;
    fn size(&self, s: &Self::System) -> usize;
    fn validate(&self, s: &Self::System) -> Result<()>;
    /// Every `n`-system of size `1..=bound`, one per isomorphism type, in a
    /// fixed canonical order (by size, then canonical form).
    fn systems(&self, n: usize, bound: usize) -> Result<Vec<Self::System>>;
    fn is_embedding(&self, e: &Self::Embedding, s: &Self::System, t: &Self::System) -> bool;
    fn embeddings(&self, s: &Self::System, t: &Self::System) -> Vec<Self::Embedding>;
    /// `first` then `then`.
    fn compose(&self, first: &Self::Embedding, then: &Self::Embedding) -> Self::Embedding;
    fn identity(&self, s: &Self::System) -> Self::Embedding;
    /// The structure of `base` with `n` identity maps.
    fn pinned(&self, base: &Self::System, n: usize) -> Self::System;
    /// The least system, embedding into every other.
    fn empty(&self, n: usize) -> Self::System;
    fn initial(&self, s: &Self::System) -> Self::Embedding {
        self.embeddings(&self.empty(self.arity(s)), s).into_iter().next().expect("the least system embeds")
    }
    fn arity(&self, s: &Self::System) -> usize;
    /// Searches exhaustively for an amalgam of the two extensions of `base`.
    fn amalgamate(
        &self,
        base: &Self::System,
        left: (&Self::System, &Self::Embedding),
        right: (&Self::System, &Self::Embedding),
    ) -> Result<Option<Span<Self::System, Self::Embedding>>>;
    /// The one-step extensions of `s`: the driver's extension bound.
    fn extensions(&self, s: &Self::System) -> Result<Vec<(Self::System, Self::Embedding)>>;
    /// A constructive weak-amalgamation witness to try before searching.
    fn preferred_witness(&self, _s: &Self::System) -> Result<Option<(Self::System, Self::Embedding)>> {
        Ok(None)
    }
    /// True when the driver proves that `s` and `t` have no joint embedding
    /// of any size.
    fn refutes_jep(&self, _s: &Self::System, _t: &Self::System) -> bool {
        false
    }
    /// Membership in the driver's cofinal subclass; `None` without one.
    fn in_cofinal(&self, _s: &Self::System) -> Option<bool> {
        None
    }
    /// An embedding of `s` into a member of the cofinal subclass.
    fn cofinal_witness(&self, _s: &Self::System) -> Result<Option<(Self::System, Self::Embedding)>> {
        Err(Error::Unsupported(format!("{} has no cofinal subclass", self.name())))
    }
    /// Amalgamation inside the cofinal subclass; defaults to the search.
    fn amalgamate_cofinal(
        &self,
        base: &Self::System,
        left: (&Self::System, &Self::Embedding),
        right: (&Self::System, &Self::Embedding),
    ) -> Result<Option<Span<Self::System, Self::Embedding>>> {
        self.amalgamate(base, left, right)
    }
    /// An amalgam kept small, for constructions that extend step by step;
    /// defaults to the search.
    fn amalgamate_compact(
        &self,
        base: &Self::System,
        left: (&Self::System, &Self::Embedding),
        right: (&Self::System, &Self::Embedding),
    ) -> Result<Option<Span<Self::System, Self::Embedding>>> {
        self.amalgamate(base, left, right)
    }
    /// An embedding of `s` into `t` found by a bounded search, or `None`.
    /// With `over = (along, fixed)`, the embedding `e` must also satisfy
    /// `along` then `e` = `fixed`, fixing a common part pointwise. The
    /// default searches exhaustively when `t` is small.
    fn find_embedding(
        &self,
        s: &Self::System,
        t: &Self::System,
        over: Option<(&Self::Embedding, &Self::Embedding)>,
    ) -> Option<Self::Embedding> {
        if self.size(t) > EXHAUSTIVE_EMBEDDING_SIZE {
            return None;
        }
        self.embeddings(s, t).into_iter().find(|e| over.map_or(true, |(along, fixed)| self.compose(along, e) == *fixed))
    }
    /// Description of the search bounds, stated in every report.
    fn search_bounds(&self) -> String;
}

/// Largest target size for the default exhaustive embedding search.
pub const EXHAUSTIVE_EMBEDDING_SIZE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    Jep,
    Cjep,
    Wap,
    Cap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "verdict")]
pub enum Verdict {
    HoldsUpToBound,
    Counterexample { bound_independent: bool },
}

/// One row of a witness table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness<S, E> {
    pub inputs: Vec<S>,
    /// For pinned checks, the embeddings of the pinned system into the inputs.
    pub input_embeddings: Vec<E>,
    /// The weak-amalgamation witness or cofinal extension, when relevant.
    pub extension: Option<(S, E)>,
    pub span: Option<Span<S, E>>,
    /// Pairs of extensions amalgamated for this row.
    pub amalgamated_pairs: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Counterexample<S, E> {
    pub inputs: Vec<S>,
    pub input_embeddings: Vec<E>,
    pub extension: Option<(S, E)>,
    pub note: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckReport<S, E> {
    pub property: Property,
    pub class: String,
    pub n: usize,
    pub bound: usize,
    pub search_bounds: String,
    pub cases: usize,
    #[serde(flatten)]
    pub verdict: Verdict,
    pub counterexample: Option<Counterexample<S, E>>,
    pub witnesses: Vec<Witness<S, E>>,
}

impl<S, E> CheckReport<S, E> {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::HoldsUpToBound
    }
}

fn checked_span<D: ClassDriver + ?Sized>(
    d: &D,
    span: Span<D::System, D::Embedding>,
    left: &D::System,
    right: &D::System,
) -> Result<Span<D::System, D::Embedding>> {
    if !d.is_embedding(&span.left, left, &span.system) || !d.is_embedding(&span.right, right, &span.system) {
        return Err(Error::defect(format!("{}: witness embedding fails validation", d.name())));
    }
    d.validate(&span.system).map_err(|e| Error::defect(format!("witness system: {e}")))?;
    Ok(span)
}

fn commutes<D: ClassDriver + ?Sized>(d: &D, base_left: &D::Embedding, base_right: &D::Embedding, span: &Span<D::System, D::Embedding>) -> bool {
    d.compose(base_left, &span.left) == d.compose(base_right, &span.right)
}

/// Checks that every pair of `n`-systems of size at most `bound` embeds
/// jointly. With `pinned`, checks instead that every pair of systems
/// containing the structure of `pinned` with identity maps amalgamates over
/// it, for every choice of the two embeddings.
pub fn check_jep<D: ClassDriver>(
    d: &D,
    n: usize,
    bound: usize,
    pinned: Option<&D::System>,
    exec: Execution,
) -> Result<CheckReport<D::System, D::Embedding>> {
    let systems = d.systems(n, bound)?;
    let base = match pinned {
        Some(b) => d.pinned(b, n),
        None => d.empty(n),
    };
    let members: Vec<(D::System, D::Embedding)> = systems
        .iter()
        .flat_map(|t| {
            let es = if pinned.is_some() { d.embeddings(&base, t) } else { vec![d.initial(t)] };
            es.into_iter().map(move |e| (t.clone(), e))
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (0..members.len()).flat_map(|i| (i..members.len()).map(move |j| (i, j))).collect();
    let results = exec::map(exec, &pairs, |&(i, j)| -> Result<Option<Span<D::System, D::Embedding>>> {
        let (l, r) = (&members[i], &members[j]);
        match d.amalgamate(&base, (&l.0, &l.1), (&r.0, &r.1))? {
            Some(span) => {
                let span = checked_span(d, span, &l.0, &r.0)?;
                if !commutes(d, &l.1, &r.1, &span) {
                    return Err(Error::defect("joint embedding does not commute over the pinned system"));
                }
                Ok(Some(span))
            }
            None => Ok(None),
        }
    });
    let mut witnesses = Vec::new();
    for (&(i, j), res) in pairs.iter().zip(results) {
        let (l, r) = (&members[i], &members[j]);
        match res? {
            Some(span) => witnesses.push(Witness {
                inputs: vec![l.0.clone(), r.0.clone()],
                input_embeddings: if pinned.is_some() { vec![l.1.clone(), r.1.clone()] } else { vec![] },
                extension: None,
                span: Some(span),
                amalgamated_pairs: 1,
            }),
            None => {
                let bound_independent = pinned.is_none() && d.refutes_jep(&l.0, &r.0);
                return Ok(CheckReport {
                    property: if pinned.is_some() { Property::Cjep } else { Property::Jep },
                    class: d.name(),
                    n,
                    bound,
                    search_bounds: d.search_bounds(),
                    cases: pairs.len(),
                    verdict: Verdict::Counterexample { bound_independent },
                    counterexample: Some(Counterexample {
                        inputs: vec![l.0.clone(), r.0.clone()],
                        input_embeddings: if pinned.is_some() { vec![l.1.clone(), r.1.clone()] } else { vec![] },
                        extension: None,
                        note: if bound_independent {
                            "no joint embedding exists at any size".into()
                        } else {
                            "no joint embedding within the search bound".into()
                        },
                    }),
                    witnesses,
                });
            }
        }
    }
    Ok(CheckReport {
        property: if pinned.is_some() { Property::Cjep } else { Property::Jep },
        class: d.name(),
        n,
        bound,
        search_bounds: d.search_bounds(),
        cases: pairs.len(),
        verdict: Verdict::HoldsUpToBound,
        counterexample: None,
        witnesses,
    })
}

/// Whether every pair of one-step extensions of `hat` amalgamates over `s`,
/// where `s` embeds into `hat` by `into_hat`. Returns the number of pairs.
fn all_extension_pairs_amalgamate<D: ClassDriver + ?Sized>(
    d: &D,
    s: &D::System,
    hat: &D::System,
    into_hat: &D::Embedding,
    cofinal_only: bool,
) -> Result<Option<usize>> {
    let mut exts = d.extensions(hat)?;
    if cofinal_only {
        exts.retain(|(t, _)| d.in_cofinal(t) == Some(true));
    }
    let via: Vec<D::Embedding> = exts.iter().map(|(_, e)| d.compose(into_hat, e)).collect();
    let mut count = 0;
    for i in 0..exts.len() {
        for j in i..exts.len() {
            let (l, r) = ((&exts[i].0, &via[i]), (&exts[j].0, &via[j]));
            let found = if cofinal_only { d.amalgamate_cofinal(s, l, r)? } else { d.amalgamate(s, l, r)? };
            match found {
                Some(span) => {
                    let span = checked_span(d, span, l.0, r.0)?;
                    if !commutes(d, l.1, r.1, &span) {
                        return Err(Error::defect("amalgam does not commute over the base"));
                    }
                    count += 1;
                }
                None => return Ok(None),
            }
        }
    }
    Ok(Some(count))
}

/// Largest number of candidate witnesses tried per system in
/// [`check_wap`].
pub const WAP_CANDIDATE_CAP: usize = 400;

/// For each `n`-system `S` of size at most `bound`, searches for an
/// extension `Ŝ` of size at most `2|S|` such that every pair of one-step
/// extensions of `Ŝ` amalgamates over `S`. Candidates are the driver's
/// preferred witness, then `S` itself, then extensions level by level.
pub fn check_wap<D: ClassDriver>(d: &D, n: usize, bound: usize, exec: Execution) -> Result<CheckReport<D::System, D::Embedding>> {
    let systems = d.systems(n, bound)?;
    let rows = exec::map(exec, &systems, |s| -> Result<std::result::Result<Witness<D::System, D::Embedding>, String>> {
        let limit = 2 * d.size(s);
        let mut level: Vec<(D::System, D::Embedding)> = Vec::new();
        if let Some(w) = d.preferred_witness(s)? {
            if !d.is_embedding(&w.1, s, &w.0) {
                return Err(Error::defect("preferred witness does not embed the system"));
            }
            level.push(w);
        }
        level.push((s.clone(), d.identity(s)));
        let mut tried = 0;
        while !level.is_empty() && tried < WAP_CANDIDATE_CAP {
            for (hat, e) in &level {
                if tried >= WAP_CANDIDATE_CAP {
                    break;
                }
                tried += 1;
                if let Some(count) = all_extension_pairs_amalgamate(d, s, hat, e, false)? {
                    return Ok(Ok(Witness {
                        inputs: vec![s.clone()],
                        input_embeddings: vec![],
                        extension: Some((hat.clone(), e.clone())),
                        span: None,
                        amalgamated_pairs: count,
                    }));
                }
            }
            let mut next = Vec::new();
            for (hat, e) in &level {
                if d.size(hat) < limit {
                    for (t, f) in d.extensions(hat)? {
                        next.push((t, d.compose(e, &f)));
                    }
                }
            }
            level = next;
        }
        Ok(Err(format!("no witness among {tried} candidates of size at most {limit}")))
    });
    let mut witnesses = Vec::new();
    for (s, row) in systems.iter().zip(rows) {
        match row? {
            Ok(w) => witnesses.push(w),
            Err(note) => {
                return Ok(CheckReport {
                    property: Property::Wap,
                    class: d.name(),
                    n,
                    bound,
                    search_bounds: format!("{}; witness size <= 2|S|, at most {WAP_CANDIDATE_CAP} candidates", d.search_bounds()),
                    cases: systems.len(),
                    verdict: Verdict::Counterexample { bound_independent: false },
                    counterexample: Some(Counterexample { inputs: vec![s.clone()], input_embeddings: vec![], extension: None, note }),
                    witnesses,
                })
            }
        }
    }
    Ok(CheckReport {
        property: Property::Wap,
        class: d.name(),
        n,
        bound,
        search_bounds: format!("{}; witness size <= 2|S|, at most {WAP_CANDIDATE_CAP} candidates", d.search_bounds()),
        cases: systems.len(),
        verdict: Verdict::HoldsUpToBound,
        counterexample: None,
        witnesses,
    })
}

/// Checks within the bound that every system embeds into a member of the
/// driver's cofinal subclass, and that every pair of one-step extensions of
/// a member, both members, amalgamates over it.
pub fn check_cap<D: ClassDriver>(d: &D, n: usize, bound: usize, exec: Execution) -> Result<CheckReport<D::System, D::Embedding>> {
    let systems = d.systems(n, bound)?;
    if let Some(s) = systems.first() {
        if d.in_cofinal(s).is_none() {
            return Err(Error::Unsupported(format!("{} has no cofinal subclass oracle", d.name())));
        }
    }
    type Row<S, E> = std::result::Result<Witness<S, E>, Counterexample<S, E>>;
    let rows = exec::map(exec, &systems, |s| -> Result<Vec<Row<D::System, D::Embedding>>> {
        let mut out = Vec::new();
        let member = d.in_cofinal(s) == Some(true);
        let extension = if member {
            Some((s.clone(), d.identity(s)))
        } else {
            match d.cofinal_witness(s)? {
                Some((t, e)) => {
                    if !d.is_embedding(&e, s, &t) || d.in_cofinal(&t) != Some(true) {
                        return Err(Error::defect("cofinal witness fails validation"));
                    }
                    Some((t, e))
                }
                None => None,
            }
        };
        if extension.is_none() {
            out.push(Err(Counterexample {
                inputs: vec![s.clone()],
                input_embeddings: vec![],
                extension: None,
                note: "no member of the cofinal subclass found above this system".into(),
            }));
            return Ok(out);
        }
        if member {
            let id = d.identity(s);
            match all_extension_pairs_amalgamate(d, s, s, &id, true)? {
                Some(count) => {
                    out.push(Ok(Witness { inputs: vec![s.clone()], input_embeddings: vec![], extension, span: None, amalgamated_pairs: count }))
                }
                None => out.push(Err(Counterexample {
                    inputs: vec![s.clone()],
                    input_embeddings: vec![],
                    extension: None,
                    note: "two member extensions of this member do not amalgamate".into(),
                })),
            }
        } else {
            out.push(Ok(Witness { inputs: vec![s.clone()], input_embeddings: vec![], extension, span: None, amalgamated_pairs: 0 }));
        }
        Ok(out)
    });
    let mut witnesses = Vec::new();
    for row in rows {
        for r in row? {
            match r {
                Ok(w) => witnesses.push(w),
                Err(c) => {
                    return Ok(CheckReport {
                        property: Property::Cap,
                        class: d.name(),
                        n,
                        bound,
                        search_bounds: d.search_bounds(),
                        cases: systems.len(),
                        verdict: Verdict::Counterexample { bound_independent: false },
                        counterexample: Some(c),
                        witnesses,
                    })
                }
            }
        }
    }
    Ok(CheckReport {
        property: Property::Cap,
        class: d.name(),
        n,
        bound,
        search_bounds: d.search_bounds(),
        cases: systems.len(),
        verdict: Verdict::HoldsUpToBound,
        counterexample: None,
        witnesses,
    })
}
