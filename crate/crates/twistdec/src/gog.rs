//! Graphs of groups with free vertex groups and cyclic edge groups.
//!
//! Everything is concrete: vertex groups are subgroups of the ambient free
//! group given by bases, edge group generators and their two inclusion images
//! are ambient words, and the marking assigns each edge a stable-letter word
//! (trivial on a maximal tree) so that the fundamental group based at the
//! base vertex is identified with the ambient group.
//!
//! Arrows of the fundamental groupoid are [`GroupoidWord`]s; the reduction
//! relation `ē·ι_ē(g)·e = ι_e(g)` drives normal forms, and the edge count of
//! the cyclically reduced normal form computes translation lengths on the
//! Bass-Serre tree.

use crate::error::GogError;
use crate::stallings::SubgroupGraph;
use crate::words::{CyclicWord, FreeAutomorphism, Letter, Word};
use std::fmt;

#[derive(Clone, Debug)]
pub struct GogEdge {
    pub name: String,
    pub from: usize,
    pub to: usize,
    /// Edge group generator as an ambient word (may be trivial for a free
    /// splitting edge).
    pub generator: Word,
    /// ι_ē(z): the generator's image in the vertex group at `from`.
    pub iota_from: Word,
    /// ι_e(z): the generator's image in the vertex group at `to`.
    pub iota_to: Word,
    /// Stable letter μ(e); trivial on maximal-tree edges.
    pub stable: Word,
}

#[derive(Clone)]
pub struct GraphOfGroups {
    rank: usize,
    vertex_names: Vec<String>,
    bases: Vec<Vec<Word>>,
    vertex_groups: Vec<SubgroupGraph>,
    edges: Vec<GogEdge>,
    base: usize,
    tree: Vec<bool>,
    /// Groupoid expressions of the ambient basis letters (None when the
    /// marking fails to identify π₁ with the ambient group).
    letter_exprs: Option<Vec<GroupoidWord>>,
}

impl GraphOfGroups {
    pub fn new(
        rank: usize,
        vertex_names: Vec<String>,
        bases: Vec<Vec<Word>>,
        edges: Vec<GogEdge>,
        base: usize,
    ) -> Result<Self, GogError> {
        if vertex_names.len() != bases.len() {
            return Err(GogError::Invalid("one basis per vertex required".into()));
        }
        if base >= vertex_names.len() {
            return Err(GogError::Invalid("base vertex out of range".into()));
        }
        for e in &edges {
            if e.from >= vertex_names.len() || e.to >= vertex_names.len() {
                return Err(GogError::Invalid(format!("edge `{}` has bad endpoints", e.name)));
            }
        }
        let vertex_groups: Vec<SubgroupGraph> =
            bases.iter().map(|b| SubgroupGraph::new(rank, b)).collect();
        for (v, (b, g)) in bases.iter().zip(&vertex_groups).enumerate() {
            if g.subgroup_rank() != b.len() {
                return Err(GogError::Invalid(format!(
                    "stated basis of vertex `{}` is not a free basis",
                    vertex_names[v]
                )));
            }
        }
        for e in &edges {
            if !vertex_groups[e.to].contains(&e.iota_to) {
                return Err(GogError::NotAMember(format!("{} (iota_to of `{}`)", e.iota_to, e.name)));
            }
            if !vertex_groups[e.from].contains(&e.iota_from) {
                return Err(GogError::NotAMember(format!(
                    "{} (iota_from of `{}`)",
                    e.iota_from, e.name
                )));
            }
            // the generator and its two inclusion images represent conjugate
            // cyclic subgroups; the groupoid relation ties them together via
            // the stable letter
            let lhs = e.stable.inverse().times(&e.iota_from).times(&e.stable);
            if lhs != e.iota_to {
                return Err(GogError::Invalid(format!(
                    "edge `{}`: stable⁻¹·ι_from·stable = {} but ι_to = {}",
                    e.name, lhs, e.iota_to
                )));
            }
            if e.generator.is_empty() != e.iota_to.is_empty()
                || e.generator.is_empty() != e.iota_from.is_empty()
            {
                return Err(GogError::Invalid(format!(
                    "edge `{}`: generator and inclusion images must be trivial together",
                    e.name
                )));
            }
            if !e.generator.is_empty()
                && crate::words::are_conjugate(&e.generator, &e.iota_to).is_none()
            {
                return Err(GogError::Invalid(format!(
                    "edge `{}`: generator is not conjugate to its inclusion image",
                    e.name
                )));
            }
        }

        // BFS maximal tree, edges in declaration order
        let n = vertex_names.len();
        let mut tree = vec![false; edges.len()];
        let mut seen = vec![false; n];
        seen[base] = true;
        let mut queue = std::collections::VecDeque::from([base]);
        while let Some(v) = queue.pop_front() {
            for (i, e) in edges.iter().enumerate() {
                for (a, b) in [(e.from, e.to), (e.to, e.from)] {
                    if a == v && !seen[b] {
                        seen[b] = true;
                        tree[i] = true;
                        queue.push_back(b);
                    }
                }
            }
        }

        let mut g = GraphOfGroups {
            rank,
            vertex_names,
            bases,
            vertex_groups,
            edges,
            base,
            tree,
            letter_exprs: None,
        };
        g.letter_exprs = g.build_letter_exprs();
        Ok(g)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertex_names[v]
    }

    pub fn vertex_basis(&self, v: usize) -> &[Word] {
        &self.bases[v]
    }

    pub fn vertex_group(&self, v: usize) -> &SubgroupGraph {
        &self.vertex_groups[v]
    }

    pub fn edges(&self) -> &[GogEdge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &GogEdge {
        &self.edges[i]
    }

    pub fn edge_by_name(&self, name: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.name == name)
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn is_tree_edge(&self, i: usize) -> bool {
        self.tree[i]
    }

    /// Origin vertex of a signed edge step.
    pub fn origin(&self, step: i32) -> usize {
        let e = &self.edges[(step.unsigned_abs() - 1) as usize];
        if step > 0 {
            e.from
        } else {
            e.to
        }
    }

    pub fn terminus(&self, step: i32) -> usize {
        let e = &self.edges[(step.unsigned_abs() - 1) as usize];
        if step > 0 {
            e.to
        } else {
            e.from
        }
    }

    /// Stable letter of a signed edge step.
    pub fn stable_of(&self, step: i32) -> Word {
        let e = &self.edges[(step.unsigned_abs() - 1) as usize];
        if step > 0 {
            e.stable.clone()
        } else {
            e.stable.inverse()
        }
    }

    /// Image of the (oriented) edge-group generator under the inclusion into
    /// the terminal vertex group of the step: `ι_s(z_s)` with `z_ē = z_e⁻¹`.
    pub fn iota_of(&self, step: i32) -> Word {
        let e = &self.edges[(step.unsigned_abs() - 1) as usize];
        if step > 0 {
            e.iota_to.clone()
        } else {
            e.iota_from.inverse()
        }
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_names.len();
        let mut seen = vec![false; n];
        seen[self.base] = true;
        let mut stack = vec![self.base];
        while let Some(v) = stack.pop() {
            for e in &self.edges {
                for (a, b) in [(e.from, e.to), (e.to, e.from)] {
                    if a == v && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Tree path from the base to each vertex as groupoid steps.
    fn tree_paths(&self) -> Option<Vec<Vec<i32>>> {
        let n = self.vertex_names.len();
        let mut paths: Vec<Option<Vec<i32>>> = vec![None; n];
        paths[self.base] = Some(vec![]);
        let mut queue = std::collections::VecDeque::from([self.base]);
        while let Some(v) = queue.pop_front() {
            for (i, _) in self.edges.iter().enumerate() {
                if !self.tree[i] {
                    continue;
                }
                let step = (i + 1) as i32;
                for s in [step, -step] {
                    if self.origin(s) == v && paths[self.terminus(s)].is_none() {
                        let mut p = paths[v].clone().unwrap();
                        p.push(s);
                        paths[self.terminus(s)] = Some(p);
                        queue.push_back(self.terminus(s));
                    }
                }
            }
        }
        paths.into_iter().collect()
    }

    fn build_letter_exprs(&self) -> Option<Vec<GroupoidWord>> {
        let paths = self.tree_paths()?;
        let mut ambient: Vec<Word> = Vec::new();
        let mut payloads: Vec<GroupoidWord> = Vec::new();
        for (v, basis) in self.bases.iter().enumerate() {
            for w in basis {
                let gw = GroupoidWord::path(self, &paths[v])
                    .compose(self, &GroupoidWord::vertex_element(v, w.clone()))
                    .ok()?
                    .compose(self, &GroupoidWord::path(self, &paths[v]).inverse())
                    .ok()?;
                ambient.push(self.mu(&gw));
                payloads.push(gw);
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            if self.tree[i] {
                continue;
            }
            let step = GroupoidWord {
                start: e.from,
                head: Word::identity(self.rank),
                tail: vec![((i + 1) as i32, Word::identity(self.rank))],
            };
            let gw = GroupoidWord::path(self, &paths[e.from])
                .compose(self, &step)
                .ok()?
                .compose(self, &GroupoidWord::path(self, &paths[e.to]).inverse())
                .ok()?;
            ambient.push(self.mu(&gw));
            payloads.push(gw);
        }
        let exprs = crate::stallings::express_letters(self.rank, &ambient)?;
        let mut out = Vec::with_capacity(self.rank);
        for expr in &exprs {
            let mut acc = GroupoidWord::vertex_element(self.base, Word::identity(self.rank));
            for &l in expr.letters() {
                let p = &payloads[(l.unsigned_abs() - 1) as usize];
                let p = if l > 0 { p.clone() } else { p.inverse() };
                acc = acc.compose(self, &p).ok()?;
            }
            out.push(acc.normalize(self).ok()?);
        }
        Some(out)
    }

    /// Ambient image of a groupoid word: interleave vertex elements with
    /// stable letters and reduce.
    pub fn mu(&self, gw: &GroupoidWord) -> Word {
        let mut acc = gw.head.clone();
        for (step, g) in &gw.tail {
            acc = acc.times(&self.stable_of(*step)).times(g);
        }
        acc
    }

    pub fn marking_ok(&self) -> bool {
        self.letter_exprs.is_some()
    }

    /// Groupoid normal form of an ambient group element, based at the base
    /// vertex.
    pub fn to_groupoid(&self, w: &Word) -> Result<GroupoidWord, GogError> {
        let exprs = self
            .letter_exprs
            .as_ref()
            .ok_or_else(|| GogError::BadMarking("letter expressions unavailable".into()))?;
        let mut acc = GroupoidWord::vertex_element(self.base, Word::identity(self.rank));
        for &l in w.letters() {
            let e = &exprs[(l.unsigned_abs() - 1) as usize];
            let e = if l > 0 { e.clone() } else { e.inverse() };
            acc = acc.compose(self, &e)?;
        }
        acc.normalize(self)
    }

    /// Inverse of [`Self::to_groupoid`] on closed words at the base.
    pub fn from_groupoid(&self, gw: &GroupoidWord) -> Result<Word, GogError> {
        if gw.start != self.base || gw.end(self) != self.base {
            return Err(GogError::NotClosed);
        }
        Ok(self.mu(gw))
    }

    /// Cyclically reduced normal form of the conjugacy class of `w`.
    pub fn cyclic_normal_form(&self, w: &Word) -> Result<CyclicNormalForm, GogError> {
        let gw = self.to_groupoid(w)?;
        Ok(self.cyclic_reduce_groupoid(&gw))
    }

    pub(crate) fn cyclic_reduce_groupoid(&self, gw: &GroupoidWord) -> CyclicNormalForm {
        if gw.tail.is_empty() {
            return CyclicNormalForm { vertex: gw.start, items: vec![], vertex_element: gw.head.clone() };
        }
        // absorb the head by conjugation, then reduce cyclic adjacencies
        let mut items: Vec<(i32, Word)> = gw.tail.clone();
        let n = items.len();
        items[n - 1].1 = items[n - 1].1.times(&gw.head);
        'outer: loop {
            let n = items.len();
            if n == 0 {
                break;
            }
            for i in 0..n {
                let j = (i + 1) % n;
                if n >= 2 && items[j].0 == -items[i].0 {
                    let iota = self.iota_of(items[i].0);
                    if let Some(k) = items[i].1.exponent_of(&iota) {
                        let c = self.iota_of(-items[i].0).pow(-k);
                        let carried = c.times(&items[j].1);
                        if n == 2 {
                            let v = self.origin(items[i].0);
                            let other = if i == 0 { 1 } else { 0 };
                            let w = carried.times(&items[other].1.clone());
                            // the two removed crossings cancel; what remains
                            // is a vertex element at the shared endpoint
                            let _ = other;
                            items.clear();
                            return CyclicNormalForm {
                                vertex: v,
                                items: vec![],
                                vertex_element: w,
                            };
                        }
                        // merge into the predecessor of i (cyclically)
                        let pred = (i + n - 1) % n;
                        items[pred].1 = items[pred].1.times(&carried);
                        // remove positions i and j (j = i+1 mod n, j != pred)
                        let mut keep: Vec<(i32, Word)> = Vec::with_capacity(n - 2);
                        for (idx, item) in items.iter().enumerate() {
                            if idx != i && idx != j {
                                keep.push(item.clone());
                            }
                        }
                        items = keep;
                        continue 'outer;
                    }
                }
            }
            break;
        }
        if items.is_empty() {
            unreachable!("handled in the n == 2 branch");
        }
        // canonical rotation for deterministic equality
        let n = items.len();
        let key = |rot: usize| -> Vec<(i32, Vec<Letter>)> {
            (0..n)
                .map(|i| {
                    let (s, g) = &items[(rot + i) % n];
                    (*s, g.letters().to_vec())
                })
                .collect()
        };
        let best = (0..n).min_by_key(|&r| key(r)).unwrap();
        let rotated: Vec<(i32, Word)> = (0..n).map(|i| items[(best + i) % n].clone()).collect();
        let vertex = self.origin(rotated[0].0);
        CyclicNormalForm { vertex, items: rotated, vertex_element: Word::identity(self.rank) }
    }

    /// Translation length on the Bass-Serre tree: the edge count of the
    /// cyclically reduced normal form.
    pub fn translation_length(&self, w: &Word) -> Result<usize, GogError> {
        Ok(self.cyclic_normal_form(w)?.items.len())
    }

    /// Structural validation report.
    pub fn validate(&self) -> GogValidation {
        let connected = self.is_connected();
        let small = true; // cyclic edge groups by construction
        let mut invisible = Vec::new();
        for v in 0..self.vertex_names.len() {
            let incoming: Vec<i32> = self.incoming_steps(v);
            if incoming.len() != 2 {
                continue;
            }
            let both_iso = incoming.iter().all(|&s| {
                let img = SubgroupGraph::new(self.rank, &[self.iota_of(s)]);
                img.same_subgroup(&self.vertex_groups[v])
            });
            if both_iso {
                invisible.push(v);
            }
        }
        let minimal = connected && self.check_minimal();
        let marking_ok = self.marking_ok() && self.marking_round_trip();
        GogValidation { connected, small, visible: invisible.is_empty(), invisible_vertices: invisible, minimal, marking_ok }
    }

    fn incoming_steps(&self, v: usize) -> Vec<i32> {
        let mut out = Vec::new();
        for i in 0..self.edges.len() {
            let step = (i + 1) as i32;
            if self.terminus(step) == v {
                out.push(step);
            }
            if self.terminus(-step) == v {
                out.push(-step);
            }
        }
        out
    }

    fn marking_round_trip(&self) -> bool {
        let Some(exprs) = &self.letter_exprs else { return false };
        exprs.iter().enumerate().all(|(i, gw)| {
            self.from_groupoid(gw).map(|w| w == Word::letter(self.rank, (i + 1) as Letter)).unwrap_or(false)
        })
    }

    /// No proper connected subgraph carries the whole fundamental group.
    fn check_minimal(&self) -> bool {
        let ne = self.edges.len();
        let nv = self.vertex_names.len();
        // single vertices
        for v in 0..nv {
            if (ne > 0 || nv > 1) && self.subgraph_surjective(&[v], &[]) {
                return false;
            }
        }
        // edge subsets
        for mask in 1u32..(1 << ne) {
            let edge_set: Vec<usize> = (0..ne).filter(|i| mask & (1 << i) != 0).collect();
            if edge_set.len() == ne {
                continue; // not proper (vertex set of a connected graph is forced)
            }
            let mut vs: Vec<usize> = edge_set
                .iter()
                .flat_map(|&i| [self.edges[i].from, self.edges[i].to])
                .collect();
            vs.sort_unstable();
            vs.dedup();
            if !self.subgraph_connected(&vs, &edge_set) {
                continue;
            }
            if self.subgraph_surjective(&vs, &edge_set) {
                return false;
            }
        }
        true
    }

    fn subgraph_connected(&self, vs: &[usize], edge_set: &[usize]) -> bool {
        if vs.is_empty() {
            return false;
        }
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![vs[0]];
        seen.insert(vs[0]);
        while let Some(v) = stack.pop() {
            for &i in edge_set {
                for (a, b) in [(self.edges[i].from, self.edges[i].to), (self.edges[i].to, self.edges[i].from)] {
                    if a == v && !seen.contains(&b) {
                        seen.insert(b);
                        stack.push(b);
                    }
                }
            }
        }
        vs.iter().all(|v| seen.contains(v))
    }

    /// Does the sub-graph-of-groups on `(vs, edge_set)` carry the whole
    /// ambient group (up to conjugacy)? Generators: vertex groups transported
    /// along a spanning tree of the subgraph, plus stable letters of the
    /// remaining subgraph edges.
    fn subgraph_surjective(&self, vs: &[usize], edge_set: &[usize]) -> bool {
        let b0 = vs[0];
        // BFS tree within the subgraph
        let mut path: std::collections::HashMap<usize, Word> = std::collections::HashMap::new();
        path.insert(b0, Word::identity(self.rank));
        let mut intree: Vec<usize> = Vec::new();
        let mut queue = std::collections::VecDeque::from([b0]);
        while let Some(v) = queue.pop_front() {
            for &i in edge_set {
                let step = (i + 1) as i32;
                for s in [step, -step] {
                    if self.origin(s) == v && !path.contains_key(&self.terminus(s)) {
                        let w = path[&v].times(&self.stable_of(s));
                        path.insert(self.terminus(s), w);
                        intree.push(i);
                        queue.push_back(self.terminus(s));
                    }
                }
            }
        }
        let mut gens: Vec<Word> = Vec::new();
        for &v in vs {
            for w in &self.bases[v] {
                gens.push(path[&v].times(w).times(&path[&v].inverse()));
            }
        }
        for &i in edge_set {
            if intree.contains(&i) {
                continue;
            }
            let e = &self.edges[i];
            gens.push(path[&e.from].times(&e.stable).times(&path[&e.to].inverse()));
        }
        SubgroupGraph::new(self.rank, &gens).is_whole_group()
    }

    /// Collapse a set of edges. Components of the collapsed subgraph become
    /// single vertices whose groups are the fundamental groups of the
    /// sub-graphs of groups; stable letters and inclusion images of surviving
    /// edges are transported to the new component basepoints.
    pub fn collapse_edges(&self, collapse: &[usize]) -> Result<GraphOfGroups, GogError> {
        let nv = self.vertex_names.len();
        // components of (V, collapse)
        let mut comp: Vec<usize> = (0..nv).collect();
        fn find(c: &mut Vec<usize>, mut x: usize) -> usize {
            while c[x] != x {
                c[x] = c[c[x]];
                x = c[x];
            }
            x
        }
        for &i in collapse {
            let (a, b) = (self.edges[i].from, self.edges[i].to);
            let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
            if ra != rb {
                comp[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut reps: Vec<usize> = Vec::new();
        let mut index: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        for v in 0..nv {
            let r = find(&mut comp, v);
            if let std::collections::hash_map::Entry::Vacant(e) = index.entry(r) {
                e.insert(reps.len());
                reps.push(r);
            }
        }
        // transport paths within each component (BFS over collapsed edges)
        let mut tpath: Vec<Option<Word>> = vec![None; nv];
        for &r in &reps {
            tpath[r] = Some(Word::identity(self.rank));
            let mut queue = std::collections::VecDeque::from([r]);
            while let Some(v) = queue.pop_front() {
                for &i in collapse {
                    let step = (i + 1) as i32;
                    for s in [step, -step] {
                        if self.origin(s) == v && tpath[self.terminus(s)].is_none() {
                            tpath[self.terminus(s)] =
                                Some(tpath[v].clone().unwrap().times(&self.stable_of(s)));
                            queue.push_back(self.terminus(s));
                        }
                    }
                }
            }
        }
        let tpath: Vec<Word> = tpath
            .into_iter()
            .map(|p| p.ok_or_else(|| GogError::Invalid("collapse component not connected".into())))
            .collect::<Result<_, _>>()?;

        // new vertex groups: transported old groups + stable letters of
        // collapsed non-tree edges (tree = the BFS above, recovered from
        // which endpoints were first reached; simpler: every collapsed edge
        // contributes its loop word, redundancy is harmless)
        let mut new_bases: Vec<Vec<Word>> = vec![Vec::new(); reps.len()];
        let mut gens: Vec<Vec<Word>> = vec![Vec::new(); reps.len()];
        for v in 0..nv {
            let c = index[&find(&mut comp, v)];
            for w in &self.bases[v] {
                gens[c].push(tpath[v].times(w).times(&tpath[v].inverse()));
            }
        }
        for &i in collapse {
            let e = &self.edges[i];
            let c = index[&find(&mut comp, e.from)];
            let loop_word = tpath[e.from].times(&e.stable).times(&tpath[e.to].inverse());
            gens[c].push(loop_word);
        }
        let mut new_groups = Vec::with_capacity(reps.len());
        for (c, g) in gens.iter().enumerate() {
            let sg = SubgroupGraph::new(self.rank, g);
            new_bases[c] = sg.basis();
            new_groups.push(sg);
        }
        let _ = new_groups;

        let mut new_edges = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if collapse.contains(&i) {
                continue;
            }
            let cf = index[&find(&mut comp, e.from)];
            let ct = index[&find(&mut comp, e.to)];
            new_edges.push(GogEdge {
                name: e.name.clone(),
                from: cf,
                to: ct,
                generator: e.generator.clone(),
                iota_from: tpath[e.from].times(&e.iota_from).times(&tpath[e.from].inverse()),
                iota_to: tpath[e.to].times(&e.iota_to).times(&tpath[e.to].inverse()),
                stable: tpath[e.from].times(&e.stable).times(&tpath[e.to].inverse()),
            });
        }
        let names = reps.iter().map(|&r| self.vertex_names[r].clone()).collect();
        GraphOfGroups::new(
            self.rank,
            names,
            new_bases,
            new_edges,
            index[&find(&mut comp, self.base)],
        )
    }
}

impl fmt::Debug for GraphOfGroups {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "graph of groups, rank {}", self.rank)?;
        for (v, name) in self.vertex_names.iter().enumerate() {
            let basis: Vec<String> = self.bases[v].iter().map(|w| w.to_string()).collect();
            writeln!(f, "  vertex {name} = <{}>", basis.join(", "))?;
        }
        for e in &self.edges {
            writeln!(
                f,
                "  edge {} : {} -> {}  z={} ι_from={} ι_to={} stable={}",
                e.name,
                self.vertex_names[e.from],
                self.vertex_names[e.to],
                e.generator,
                e.iota_from,
                e.iota_to,
                e.stable
            )?;
        }
        Ok(())
    }
}

/// Report of [`GraphOfGroups::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GogValidation {
    pub connected: bool,
    pub small: bool,
    pub visible: bool,
    pub invisible_vertices: Vec<usize>,
    pub minimal: bool,
    pub marking_ok: bool,
}

impl GogValidation {
    pub fn all_ok(&self) -> bool {
        self.connected && self.small && self.visible && self.minimal && self.marking_ok
    }
}

/// An arrow of the fundamental groupoid: `g₀·e₁·g₁·…·e_n·g_n` with each
/// `g_i` in the vertex group at the corresponding vertex.
#[derive(Clone, PartialEq, Eq)]
pub struct GroupoidWord {
    pub start: usize,
    pub head: Word,
    pub tail: Vec<(i32, Word)>,
}

impl GroupoidWord {
    pub fn vertex_element(vertex: usize, w: Word) -> Self {
        GroupoidWord { start: vertex, head: w, tail: vec![] }
    }

    fn path(gog: &GraphOfGroups, steps: &[i32]) -> Self {
        let start = steps.first().map_or(gog.base(), |&s| gog.origin(s));
        GroupoidWord {
            start,
            head: Word::identity(gog.rank()),
            tail: steps.iter().map(|&s| (s, Word::identity(gog.rank()))).collect(),
        }
    }

    pub fn end(&self, gog: &GraphOfGroups) -> usize {
        self.tail.last().map_or(self.start, |&(s, _)| gog.terminus(s))
    }

    pub fn edge_count(&self) -> usize {
        self.tail.len()
    }

    pub fn inverse(&self) -> GroupoidWord {
        let mut tail = Vec::with_capacity(self.tail.len());
        let mut prev = self.head.clone();
        // (g₀ e₁ g₁ … e_n g_n)⁻¹ = g_n⁻¹ e_n⁻¹ … e₁⁻¹ g₀⁻¹
        let mut items: Vec<(i32, Word)> = Vec::new();
        for (s, g) in &self.tail {
            items.push((*s, prev.clone()));
            prev = g.clone();
        }
        let head = prev.inverse();
        for (s, g) in items.into_iter().rev() {
            tail.push((-s, g.inverse()));
        }
        GroupoidWord { start: usize::MAX, head, tail }
            .with_start_fixed()
    }

    fn with_start_fixed(mut self) -> GroupoidWord {
        // start is recomputed lazily by callers that know the graph; for
        // words built by inverse() the start is the old end, which compose()
        // re-derives. Keep a sentinel-free representation instead:
        if self.start == usize::MAX {
            self.start = 0;
        }
        self
    }

    pub fn compose(&self, gog: &GraphOfGroups, other: &GroupoidWord) -> Result<GroupoidWord, GogError> {
        let mut out = self.clone();
        if out.tail.is_empty() {
            out.head = out.head.times(&other.head);
        } else {
            let last = out.tail.len() - 1;
            out.tail[last].1 = out.tail[last].1.times(&other.head);
        }
        out.tail.extend(other.tail.iter().cloned());
        let _ = gog;
        Ok(out)
    }

    /// Reduced per the groupoid relation: no `e·g·ē` with `g` a power of the
    /// inclusion image of the edge generator.
    pub fn is_reduced(&self, gog: &GraphOfGroups) -> bool {
        for i in 0..self.tail.len().saturating_sub(1) {
            if self.tail[i + 1].0 == -self.tail[i].0 {
                let iota = gog.iota_of(self.tail[i].0);
                if self.tail[i].1.exponent_of(&iota).is_some() {
                    return false;
                }
            }
        }
        true
    }

    /// Apply `e·ι_e(z^k)·ē = ι_ē(z^k)` wherever possible; the result is the
    /// unique reduced form (edge sequence independent of reduction order).
    pub fn normalize(&self, gog: &GraphOfGroups) -> Result<GroupoidWord, GogError> {
        let mut head = self.head.clone();
        let mut tail = self.tail.clone();
        loop {
            let mut reduced_at: Option<usize> = None;
            for i in 0..tail.len().saturating_sub(1) {
                if tail[i + 1].0 == -tail[i].0 {
                    if let Some(k) = tail[i].1.exponent_of(&gog.iota_of(tail[i].0)) {
                        reduced_at = Some(i);
                        let carried = gog.iota_of(-tail[i].0).pow(-k).times(&tail[i + 1].1);
                        if i == 0 {
                            head = head.times(&carried);
                        } else {
                            tail[i - 1].1 = tail[i - 1].1.times(&carried);
                        }
                        tail.drain(i..=i + 1);
                        break;
                    }
                }
            }
            if reduced_at.is_none() {
                break;
            }
        }
        Ok(GroupoidWord { start: self.start, head, tail })
    }

    /// Check that every group element belongs to its vertex group and edges
    /// compose.
    pub fn check(&self, gog: &GraphOfGroups) -> Result<(), GogError> {
        let mut at = self.start;
        if !gog.vertex_group(at).contains(&self.head) {
            return Err(GogError::NotAMember(gog.vertex_name(at).to_string()));
        }
        for (s, g) in &self.tail {
            if gog.origin(*s) != at {
                return Err(GogError::NotComposable);
            }
            at = gog.terminus(*s);
            if !gog.vertex_group(at).contains(g) {
                return Err(GogError::NotAMember(gog.vertex_name(at).to_string()));
            }
        }
        Ok(())
    }

    pub fn display(&self, gog: &GraphOfGroups) -> String {
        let mut s = format!("[{}] {}", gog.vertex_name(self.start), self.head);
        for (step, g) in &self.tail {
            let e = &gog.edge((step.unsigned_abs() - 1) as usize).name;
            let e = if *step > 0 { e.clone() } else { e.to_uppercase() };
            s.push_str(&format!(" ·{e}· {g}"));
        }
        s
    }
}

impl fmt::Debug for GroupoidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupoidWord(v{}; {}", self.start, self.head)?;
        for (s, g) in &self.tail {
            write!(f, " e{s} {g}")?;
        }
        write!(f, ")")
    }
}

/// Cyclically reduced normal form of a conjugacy class: either a vertex
/// element (no edges) or a cyclic sequence of edge crossings with vertex
/// elements, in a canonical rotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicNormalForm {
    pub vertex: usize,
    pub items: Vec<(i32, Word)>,
    /// Nontrivial only when `items` is empty.
    pub vertex_element: Word,
}

impl CyclicNormalForm {
    pub fn length(&self) -> usize {
        self.items.len()
    }

    /// Topological edges crossed (0-based indices, deduplicated).
    pub fn edges_crossed(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.items.iter().map(|(s, _)| (s.unsigned_abs() - 1) as usize).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// A Dehn twist: a graph of groups together with per-edge twist exponents;
/// the twister about edge `e` is `z_e^{exponent}`.
#[derive(Clone, Debug)]
pub struct DehnTwist {
    gog: GraphOfGroups,
    exponents: Vec<i64>,
}

impl DehnTwist {
    pub fn new(gog: GraphOfGroups, exponents: Vec<i64>) -> Result<Self, GogError> {
        if exponents.len() != gog.edges().len() {
            return Err(GogError::Invalid("one twist exponent per edge required".into()));
        }
        for (e, &k) in gog.edges().iter().zip(&exponents) {
            if k != 0 && e.generator.is_empty() {
                return Err(GogError::Invalid(format!(
                    "edge `{}` has trivial edge group but nonzero twist",
                    e.name
                )));
            }
        }
        Ok(DehnTwist { gog, exponents })
    }

    pub fn gog(&self) -> &GraphOfGroups {
        &self.gog
    }

    pub fn exponents(&self) -> &[i64] {
        &self.exponents
    }

    /// `D_z^n = D_{z^n}`.
    pub fn pow(&self, n: i64) -> DehnTwist {
        DehnTwist {
            gog: self.gog.clone(),
            exponents: self.exponents.iter().map(|k| k * n).collect(),
        }
    }

    /// Twist a word: rewrite to groupoid form, insert the twister image after
    /// each crossed edge, map back.
    pub fn apply(&self, w: &Word) -> Result<Word, GogError> {
        let gw = self.gog.to_groupoid(w)?;
        let mut twisted = gw.clone();
        for (step, g) in twisted.tail.iter_mut() {
            let k = self.exponents[(step.unsigned_abs() - 1) as usize];
            *g = self.gog.iota_of(*step).pow(k).times(g);
        }
        self.gog.from_groupoid(&twisted)
    }

    pub fn induced_automorphism(&self) -> Result<FreeAutomorphism, GogError> {
        let rank = self.gog.rank();
        let images: Result<Vec<Word>, _> =
            (1..=rank as Letter).map(|l| self.apply(&Word::letter(rank, l))).collect();
        FreeAutomorphism::new(rank, images?)
            .map_err(|e| GogError::Invalid(format!("induced map is not an automorphism: {e}")))
    }

    /// Efficiency report: structural validation, twisting on every edge, and
    /// the positive-bonding test.
    pub fn check_efficient(&self) -> EfficiencyReport {
        let validation = self.gog.validate();
        let twists_every_edge = self.exponents.iter().all(|&k| k != 0)
            && self.gog.edges().iter().all(|e| !e.generator.is_empty());
        let mut bonded = Vec::new();
        for v in 0..self.gog.vertex_count() {
            let incoming = self.gog.incoming_steps(v);
            for (a, &s1) in incoming.iter().enumerate() {
                for &s2 in incoming.iter().skip(a + 1) {
                    if self.positively_bonded(v, s1, s2) {
                        bonded.push((v, s1, s2));
                    }
                }
            }
        }
        EfficiencyReport {
            twists_every_edge,
            positively_bonded: bonded,
            validation,
        }
    }

    /// Twister images of two edge-ends at `v` have conjugate positive powers
    /// in the vertex group iff their cyclic primitive roots coincide after
    /// rewriting into the vertex group's own basis.
    fn positively_bonded(&self, v: usize, s1: i32, s2: i32) -> bool {
        let k1 = self.exponents[(s1.unsigned_abs() - 1) as usize];
        let k2 = self.exponents[(s2.unsigned_abs() - 1) as usize];
        if k1 == 0 || k2 == 0 {
            return false;
        }
        let u1 = self.gog.iota_of(s1).pow(k1);
        let u2 = self.gog.iota_of(s2).pow(k2);
        if u1.is_empty() || u2.is_empty() {
            return false;
        }
        let grp = self.gog.vertex_group(v);
        let (Some(r1), Some(r2)) = (grp.rewrite(&u1), grp.rewrite(&u2)) else {
            return false;
        };
        let root = |w: &Word| -> CyclicWord {
            CyclicWord::of(w).primitive_root().expect("nontrivial").0
        };
        root(&r1) == root(&r2)
    }
}

#[derive(Debug, Clone)]
pub struct EfficiencyReport {
    pub twists_every_edge: bool,
    /// Triples (vertex, edge-end, edge-end) that are positively bonded.
    pub positively_bonded: Vec<(usize, i32, i32)>,
    pub validation: GogValidation,
}

impl EfficiencyReport {
    pub fn is_efficient(&self) -> bool {
        self.twists_every_edge
            && self.positively_bonded.is_empty()
            && self.validation.connected
            && self.validation.small
            && self.validation.visible
            && self.validation.minimal
            && self.validation.marking_ok
    }
}

/// The bounded-cancellation bound 6r(2r−2) available for a good basis.
pub fn bcc_bound(rank: u64) -> u64 {
    if rank == 0 {
        return 0;
    }
    6 * rank * (2 * rank - 2)
}

/// Sample reduced concatenations `gh` with `|gh| = |g|+|h|` and `gh`
/// cyclically reduced; report the maximum defect
/// `ℓ(g) + ℓ(h) − ℓ(gh)` observed.
pub fn bcc_empirical(
    gog: &GraphOfGroups,
    samples: usize,
    max_len: usize,
    seed: u64,
) -> Result<i64, GogError> {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(seed);
    let rank = gog.rank();
    let mut max_defect = i64::MIN;
    let mut produced = 0usize;
    while produced < samples {
        let lg = rng.gen_range(1..=max_len);
        let lh = rng.gen_range(1..=max_len);
        let mut letters: Vec<Letter> = Vec::with_capacity(lg + lh);
        for _ in 0..lg + lh {
            loop {
                let g = rng.gen_range(1..=rank as i32);
                let l = if rng.gen_bool(0.5) { g } else { -g };
                if letters.last().is_none_or(|&last| last != -l) {
                    letters.push(l);
                    break;
                }
            }
        }
        if letters[0] == -letters[lg + lh - 1] {
            continue; // gh not cyclically reduced
        }
        let g = Word::reduce(rank, letters[..lg].to_vec()).unwrap();
        let h = Word::reduce(rank, letters[lg..].to_vec()).unwrap();
        let gh = g.times(&h);
        debug_assert_eq!(gh.len(), g.len() + h.len());
        let defect = gog.translation_length(&g)? as i64 + gog.translation_length(&h)? as i64
            - gog.translation_length(&gh)? as i64;
        max_defect = max_defect.max(defect);
        produced += 1;
    }
    Ok(max_defect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn w3(s: &str) -> Word {
        Word::parse(3, s).unwrap()
    }

    #[test]
    fn loop_splitting_validates() {
        let (gog, _) = fixtures::loop_splitting(3, 1, 2, 1, false);
        let report = gog.validate();
        assert!(report.all_ok(), "{report:?}");
    }

    #[test]
    fn barycentric_subdivision_is_invisible() {
        // subdivide the loop of the one-loop splitting: a = a1·a2 through a
        // new vertex whose group equals the edge group on both sides
        let z = w3("b");
        let gog = GraphOfGroups::new(
            3,
            vec!["v".into(), "m".into()],
            vec![vec![w3("Aba"), w3("b"), w3("c")], vec![w3("b")]],
            vec![
                GogEdge {
                    name: "a1".into(),
                    from: 0,
                    to: 1,
                    generator: z.clone(),
                    iota_from: w3("b"),
                    iota_to: w3("b"),
                    stable: Word::identity(3),
                },
                GogEdge {
                    name: "a2".into(),
                    from: 1,
                    to: 0,
                    generator: z.clone(),
                    iota_from: w3("b"),
                    iota_to: w3("Aba"),
                    stable: w3("a"),
                },
            ],
            0,
        )
        .unwrap();
        let report = gog.validate();
        assert!(!report.visible);
        assert_eq!(report.invisible_vertices, vec![1]);
        // subdivision doubles every translation length without changing the
        // equivariant isometry class of the (metrized) tree
        let (plain, _) = fixtures::loop_splitting(3, 1, 2, 1, false);
        for s in ["a", "abaB", "abAB", "bca"] {
            assert_eq!(
                gog.translation_length(&w3(s)).unwrap(),
                2 * plain.translation_length(&w3(s)).unwrap()
            );
        }
    }

    #[test]
    fn disconnected_rejected_via_report() {
        let gog = GraphOfGroups::new(
            2,
            vec!["u".into(), "v".into()],
            vec![vec![Word::parse(2, "a").unwrap(), Word::parse(2, "b").unwrap()], vec![]],
            vec![],
            0,
        )
        .unwrap();
        let report = gog.validate();
        assert!(!report.connected);
    }

    #[test]
    fn groupoid_round_trip_examples() {
        let (gog, _) = fixtures::loop_splitting(3, 1, 2, 1, false);
        // b is a vertex element
        let gw = gog.to_groupoid(&w3("b")).unwrap();
        assert_eq!(gw.edge_count(), 0);
        assert_eq!(gog.from_groupoid(&gw).unwrap(), w3("b"));
        // a crosses the single edge once
        let gw = gog.to_groupoid(&w3("a")).unwrap();
        assert_eq!(gw.edge_count(), 1);
        assert_eq!(gog.from_groupoid(&gw).unwrap(), w3("a"));
    }

    #[test]
    fn groupoid_round_trip_randomized() {
        let (gog, _) = fixtures::loop_splitting(3, 1, 2, 1, false);
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..500 {
            let len = rng.gen_range(0..12);
            let letters: Vec<Letter> = (0..len)
                .map(|_| rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 })
                .collect();
            let word = Word::reduce(3, letters).unwrap();
            let gw = gog.to_groupoid(&word).unwrap();
            assert!(gw.is_reduced(&gog));
            gw.check(&gog).unwrap();
            assert_eq!(gog.from_groupoid(&gw).unwrap(), word);
        }
    }

    #[test]
    fn normalize_applies_edge_relation() {
        let (gog, _) = fixtures::loop_splitting(3, 2, 3, 1, false);
        // in the splitting with stable letter b and edge generator c, the
        // arrow b̄·c·b normalizes to a vertex element
        let gw = GroupoidWord {
            start: 0,
            head: Word::identity(3),
            tail: vec![(-1, w3("c")), (1, Word::identity(3))],
        };
        // iota_of(-1) = iota_from⁻¹ = c⁻¹, so g = c is iota_of(-1)^{-1}
        let n = gw.normalize(&gog).unwrap();
        assert_eq!(n.edge_count(), 0);
        assert_eq!(gog.mu(&n), gog.mu(&gw));
        // already reduced words are unchanged
        let gw2 = gog.to_groupoid(&w3("ab")).unwrap();
        let n2 = gw2.normalize(&gog).unwrap();
        assert_eq!(n2.head, gw2.head);
        assert_eq!(n2.tail, gw2.tail);
    }

    #[test]
    fn normalize_idempotent_and_mu_invariant_randomized() {
        let (gog, _) = fixtures::loop_splitting(3, 1, 2, 1, false);
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..300 {
            // random raw groupoid word on the one-loop graph
            let n = rng.gen_range(0..6);
            let mut tail = Vec::new();
            for _ in 0..n {
                let s = if rng.gen_bool(0.5) { 1 } else { -1 };
                let len = rng.gen_range(0..4);
                let letters: Vec<Letter> = (0..len)
                    .map(|_| rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 })
                    .collect();
                // project into the vertex group: use powers of basis elements
                let g = match rng.gen_range(0..3) {
                    0 => w3("Aba").pow(rng.gen_range(-2..=2)),
                    1 => w3("b").pow(rng.gen_range(-2..=2)),
                    _ => w3("c").pow(rng.gen_range(-2..=2)),
                };
                let _ = letters;
                tail.push((s, g));
            }
            let gw = GroupoidWord { start: 0, head: Word::identity(3), tail };
            let n1 = gw.normalize(&gog).unwrap();
            let n2 = n1.normalize(&gog).unwrap();
            assert_eq!(n1.tail.len(), n2.tail.len());
            assert!(n1.is_reduced(&gog));
            assert_eq!(gog.mu(&gw), gog.mu(&n1));
        }
    }

    #[test]
    fn length_table_one_loop_splittings() {
        // the guiding pair of one-loop splittings of F_3: stable letter a
        // with edge generator b, and stable letter b with edge generator c
        let (ga, _) = fixtures::loop_splitting(3, 1, 2, 1, false);
        let (gb, _) = fixtures::loop_splitting(3, 2, 3, 1, false);
        let g = w3("a");
        let h = w3("baB");
        let gh = g.times(&h);
        let ghinv = g.times(&h.inverse());
        assert_eq!(ga.translation_length(&g).unwrap(), 1);
        assert_eq!(ga.translation_length(&h).unwrap(), 1);
        assert_eq!(gb.translation_length(&g).unwrap(), 0);
        assert_eq!(gb.translation_length(&h).unwrap(), 0);
        assert_eq!(ga.translation_length(&gh).unwrap(), 2);
        assert_eq!(ga.translation_length(&ghinv).unwrap(), 0);
        assert_eq!(gb.translation_length(&gh).unwrap(), 2);
        assert_eq!(gb.translation_length(&ghinv).unwrap(), 2);
        assert_eq!(ga.translation_length(&Word::identity(3)).unwrap(), 0);
    }

    #[test]
    fn length_is_class_function_randomized() {
        let (gog, _) = fixtures::loop_splitting(3, 1, 2, 1, false);
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..500 {
            let mk = |rng: &mut StdRng, n: usize| {
                let letters: Vec<Letter> = (0..n)
                    .map(|_| rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 })
                    .collect();
                Word::reduce(3, letters).unwrap()
            };
            let lu = rng.gen_range(0..8);
            let lw = rng.gen_range(0..8);
            let u = mk(&mut rng, lu);
            let w = mk(&mut rng, lw);
            assert_eq!(
                gog.translation_length(&u.conjugate(&w)).unwrap(),
                gog.translation_length(&w).unwrap()
            );
        }
    }

    #[test]
    fn length_homogeneous_under_powers() {
        let (gog, _) = fixtures::loop_splitting(3, 1, 2, 1, false);
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..100 {
            let letters: Vec<Letter> = (0..rng.gen_range(1..6))
                .map(|_| rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 })
                .collect();
            let w = Word::reduce(3, letters).unwrap();
            let l1 = gog.translation_length(&w).unwrap();
            for n in 2..=5i64 {
                assert_eq!(gog.translation_length(&w.pow(n)).unwrap(), n as usize * l1);
            }
        }
    }

    #[test]
    fn twist_induces_expected_automorphism() {
        // twist by the edge generator: a ↦ ba
        let (gog, tw) = fixtures::loop_splitting(3, 1, 2, 1, false);
        let phi = tw.induced_automorphism().unwrap();
        assert_eq!(phi.images()[0], w3("ba"));
        assert_eq!(phi.images()[1], w3("b"));
        assert_eq!(phi.images()[2], w3("c"));
        // trivial twisters → identity
        let trivial = DehnTwist::new(gog, vec![0]).unwrap();
        assert!(trivial.induced_automorphism().unwrap().is_identity());
    }

    #[test]
    fn twist_powers_compose() {
        let (_, tw) = fixtures::loop_splitting(3, 1, 2, 1, false);
        let once = tw.induced_automorphism().unwrap();
        let twice = tw.pow(2).induced_automorphism().unwrap();
        assert_eq!(once.compose(&once).unwrap(), twice);
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..100 {
            let letters: Vec<Letter> = (0..rng.gen_range(0..8))
                .map(|_| rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 })
                .collect();
            let word = Word::reduce(3, letters).unwrap();
            assert_eq!(tw.apply(&tw.apply(&word).unwrap()).unwrap(), tw.pow(2).apply(&word).unwrap());
        }
    }

    #[test]
    fn twists_on_same_graph_commute() {
        // a graph with two loops: twists about different edges commute
        let (gog, _, _) = fixtures::two_loop_graph();
        let t1 = DehnTwist::new(gog.clone(), vec![1, 0]).unwrap();
        let t2 = DehnTwist::new(gog, vec![0, 1]).unwrap();
        let a = t1.induced_automorphism().unwrap().compose(&t2.induced_automorphism().unwrap()).unwrap();
        let b = t2.induced_automorphism().unwrap().compose(&t1.induced_automorphism().unwrap()).unwrap();
        let diff = a.compose(&b.invert()).unwrap();
        assert!(diff.is_inner().is_some());
    }

    #[test]
    fn efficiency_of_loop_splitting() {
        let (_, tw) = fixtures::loop_splitting(3, 1, 2, 1, false);
        let report = tw.check_efficient();
        assert!(report.is_efficient(), "{report:?}");
        // zero twister: fails "twists about every edge"
        let (gog, _) = fixtures::loop_splitting(3, 1, 2, 1, false);
        let untwisted = DehnTwist::new(gog, vec![0]).unwrap();
        assert!(!untwisted.check_efficient().twists_every_edge);
    }

    #[test]
    fn positive_bonding_detected() {
        // two loops both twisting on (a power of) c at the same vertex:
        // conjugate positive powers with the identity conjugator
        let (gog, _, _) = fixtures::two_loop_graph();
        let tw = DehnTwist::new(gog, vec![1, 1]).unwrap();
        let report = tw.check_efficient();
        assert!(!report.positively_bonded.is_empty());
        assert!(!report.is_efficient());
    }

    #[test]
    fn bcc_bound_values() {
        // 6r(2r−2); consistent with the uniform power 2 + 4·6r(2r−2) + 1
        assert_eq!(bcc_bound(2), 24);
        assert_eq!(bcc_bound(3), 72);
        assert_eq!(bcc_bound(1), 0);
        for r in 1..=6u64 {
            assert_eq!(crate::dichotomy::uniform_power(r), 4 * bcc_bound(r) + 3);
        }
    }

    #[test]
    fn bcc_empirical_within_bound() {
        for (stable, gen) in [(1, 2), (2, 3)] {
            let (gog, _) = fixtures::loop_splitting(3, stable, gen, 1, false);
            let defect = bcc_empirical(&gog, 2000, 10, 99).unwrap();
            assert!(defect <= bcc_bound(3) as i64, "defect {defect}");
        }
    }

    #[test]
    fn collapse_preserves_lengths_of_survivors() {
        let (gog, _, _) = fixtures::two_loop_graph();
        // collapsing the second loop leaves a one-loop graph; lengths in the
        // collapsed graph equal crossing counts of the surviving edge
        let collapsed = gog.collapse_edges(&[1]).unwrap();
        assert_eq!(collapsed.edges().len(), 1);
        let w = w3("a");
        let full = gog.cyclic_normal_form(&w).unwrap();
        let crossings_of_first = full.items.iter().filter(|(s, _)| s.unsigned_abs() == 1).count();
        assert_eq!(collapsed.translation_length(&w).unwrap(), crossings_of_first);
    }
}
