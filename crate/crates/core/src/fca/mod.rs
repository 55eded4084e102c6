//! Formal contexts, derivation operators, closure, and exhaustive concept
//! enumeration.
//!
//! A context is a binary incidence between documents (objects) and terms
//! (attributes), stored as bitset rows and columns. Concepts are enumerated
//! with Close-by-One over attribute bitsets, which emits the complete concept
//! set in canonical order: ascending lexicographic order of intents read as
//! increasing index sequences. Enumeration is bounded by a configurable
//! ceiling because the concept count can grow exponentially with context
//! size.

mod bitset;

pub use bitset::BitSet;

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// Default cap on the number of enumerated concepts.
pub const DEFAULT_CONCEPT_CEILING: usize = 1_000_000;

/// A binary incidence between named objects and attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalContext {
    objects: Vec<String>,
    attributes: Vec<String>,
    /// One bitset over attributes per object.
    rows: Vec<BitSet>,
    /// One bitset over objects per attribute.
    cols: Vec<BitSet>,
}

impl FormalContext {
    /// Builds a context from per-object attribute sets.
    pub fn new(objects: Vec<String>, attributes: Vec<String>, rows: Vec<BitSet>) -> Result<Self> {
        if rows.len() != objects.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rows for {} objects",
                rows.len(),
                objects.len()
            )));
        }
        for axis in [&objects, &attributes] {
            let mut sorted = axis.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != axis.len() {
                return Err(Error::InvalidArgument("duplicate axis labels in context".into()));
            }
        }
        let mut cols = vec![BitSet::new(objects.len()); attributes.len()];
        for (o, row) in rows.iter().enumerate() {
            if row.universe() != attributes.len() {
                return Err(Error::InvalidArgument("row width does not match attributes".into()));
            }
            for a in row.iter() {
                cols[a].insert(o);
            }
        }
        Ok(Self { objects, attributes, rows, cols })
    }

    pub fn from_incidence_pairs(
        objects: Vec<String>,
        attributes: Vec<String>,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut rows = vec![BitSet::new(attributes.len()); objects.len()];
        for (o, a) in pairs {
            if o >= objects.len() || a >= attributes.len() {
                return Err(Error::InvalidArgument(format!("incidence ({o},{a}) out of range")));
            }
            rows[o].insert(a);
        }
        Self::new(objects, attributes, rows)
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn incidence(&self, object: usize, attribute: usize) -> bool {
        self.rows[object].contains(attribute)
    }

    pub fn object_row(&self, object: usize) -> &BitSet {
        &self.rows[object]
    }

    pub fn attribute_col(&self, attribute: usize) -> &BitSet {
        &self.cols[attribute]
    }

    pub fn object_index(&self, name: &str) -> Result<usize> {
        self.objects
            .iter()
            .position(|o| o == name)
            .ok_or_else(|| Error::unknown("object", name))
    }

    pub fn attribute_index(&self, name: &str) -> Result<usize> {
        self.attributes
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::unknown("attribute", name))
    }

    /// Common attributes of an object set; the empty set derives to the full
    /// attribute set.
    pub fn derive_intent(&self, objects: &BitSet) -> BitSet {
        let mut intent = BitSet::full(self.attributes.len());
        for o in objects.iter() {
            intent.intersect_with(&self.rows[o]);
        }
        intent
    }

    /// Common objects of an attribute set; the empty set derives to the full
    /// object set.
    pub fn derive_extent(&self, attributes: &BitSet) -> BitSet {
        let mut extent = BitSet::full(self.objects.len());
        for a in attributes.iter() {
            extent.intersect_with(&self.cols[a]);
        }
        extent
    }

    /// Attribute closure: `derive_intent(derive_extent(S))`. Extensive,
    /// monotone, and idempotent.
    pub fn closure(&self, attributes: &BitSet) -> BitSet {
        self.derive_intent(&self.derive_extent(attributes))
    }

    /// Name-based variant of [`FormalContext::derive_intent`]; unknown names
    /// are reference errors.
    pub fn derive_intent_named(&self, objects: &[&str]) -> Result<Vec<String>> {
        let mut set = BitSet::new(self.objects.len());
        for name in objects {
            set.insert(self.object_index(name)?);
        }
        Ok(self.derive_intent(&set).iter().map(|a| self.attributes[a].clone()).collect())
    }

    /// Name-based variant of [`FormalContext::derive_extent`].
    pub fn derive_extent_named(&self, attributes: &[&str]) -> Result<Vec<String>> {
        let mut set = BitSet::new(self.attributes.len());
        for name in attributes {
            set.insert(self.attribute_index(name)?);
        }
        Ok(self.derive_extent(&set).iter().map(|o| self.objects[o].clone()).collect())
    }

    /// Number of attributes with at least one incidence, together with the
    /// context restricted to exactly those attributes.
    pub fn retained_terms(&self) -> (usize, FormalContext) {
        let keep: Vec<usize> =
            (0..self.attributes.len()).filter(|&a| !self.cols[a].is_empty()).collect();
        let count = keep.len();
        if count == self.attributes.len() {
            return (count, self.clone());
        }
        let attributes: Vec<String> = keep.iter().map(|&a| self.attributes[a].clone()).collect();
        let old_to_new: HashMap<usize, usize> =
            keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let rows = self
            .rows
            .iter()
            .map(|row| {
                BitSet::from_indices(
                    attributes.len(),
                    row.iter().filter_map(|a| old_to_new.get(&a).copied()),
                )
            })
            .collect();
        let reduced = FormalContext::new(self.objects.clone(), attributes, rows)
            .expect("restriction of a valid context stays valid");
        (count, reduced)
    }

    /// Writes the incidence as CSV: `doc_id` column then one 0/1 column per
    /// attribute.
    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["doc_id".to_string()];
        header.extend(self.attributes.iter().cloned());
        w.write_record(&header)?;
        for (o, id) in self.objects.iter().enumerate() {
            let mut record = vec![id.clone()];
            record.extend(
                (0..self.attributes.len()).map(|a| if self.incidence(o, a) { "1" } else { "0" }.to_string()),
            );
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a context written by [`FormalContext::to_csv`].
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.is_empty() || &header[0] != "doc_id" {
            return Err(Error::parse(1, "context CSV must start with a doc_id column"));
        }
        let attributes: Vec<String> = header.iter().skip(1).map(|s| s.to_string()).collect();
        let mut objects = Vec::new();
        let mut rows = Vec::new();
        for (i, record) in r.records().enumerate() {
            let record = record?;
            if record.len() != attributes.len() + 1 {
                return Err(Error::parse(i + 2, "row width does not match header"));
            }
            objects.push(record[0].to_string());
            let mut row = BitSet::new(attributes.len());
            for (a, cell) in record.iter().skip(1).enumerate() {
                match cell {
                    "1" => row.insert(a),
                    "0" => {}
                    other => {
                        return Err(Error::parse(i + 2, format!("bad incidence cell '{other}'")))
                    }
                }
            }
            rows.push(row);
        }
        Self::new(objects, attributes, rows)
    }

    /// Writes the context in the Burmeister plain-text format (`B` header,
    /// dimensions, names, then `.`/`X` incidence rows).
    pub fn to_burmeister<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "B")?;
        writeln!(writer)?;
        writeln!(writer, "{}", self.objects.len())?;
        writeln!(writer, "{}", self.attributes.len())?;
        writeln!(writer)?;
        for o in &self.objects {
            writeln!(writer, "{o}")?;
        }
        for a in &self.attributes {
            writeln!(writer, "{a}")?;
        }
        for o in 0..self.objects.len() {
            let line: String = (0..self.attributes.len())
                .map(|a| if self.incidence(o, a) { 'X' } else { '.' })
                .collect();
            writeln!(writer, "{line}")?;
        }
        Ok(())
    }

    /// Reads a Burmeister context file.
    pub fn from_burmeister<R: BufRead>(reader: R) -> Result<Self> {
        let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
        let mut pos = 0usize;
        let next_nonblank = |pos: &mut usize| -> Result<String> {
            while *pos < lines.len() {
                let line = lines[*pos].trim_end().to_string();
                *pos += 1;
                if !line.trim().is_empty() {
                    return Ok(line);
                }
            }
            Err(Error::parse(lines.len(), "unexpected end of Burmeister file"))
        };
        let magic = next_nonblank(&mut pos)?;
        if magic.trim() != "B" {
            return Err(Error::parse(1, "missing Burmeister 'B' header"));
        }
        let n: usize = next_nonblank(&mut pos)?
            .trim()
            .parse()
            .map_err(|_| Error::parse(pos, "bad object count"))?;
        let m: usize = next_nonblank(&mut pos)?
            .trim()
            .parse()
            .map_err(|_| Error::parse(pos, "bad attribute count"))?;
        let mut objects = Vec::with_capacity(n);
        for _ in 0..n {
            objects.push(next_nonblank(&mut pos)?);
        }
        let mut attributes = Vec::with_capacity(m);
        for _ in 0..m {
            attributes.push(next_nonblank(&mut pos)?);
        }
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let line = next_nonblank(&mut pos)?;
            let mut row = BitSet::new(m);
            let cells: Vec<char> = line.chars().collect();
            if cells.len() != m {
                return Err(Error::parse(pos, "incidence row width does not match"));
            }
            for (a, c) in cells.iter().enumerate() {
                match c {
                    'X' | 'x' => row.insert(a),
                    '.' => {}
                    other => return Err(Error::parse(pos, format!("bad incidence char '{other}'"))),
                }
            }
            rows.push(row);
        }
        Self::new(objects, attributes, rows)
    }
}

/// A formal concept: an extent and its intent, each the derivation of the
/// other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalConcept {
    pub extent: BitSet,
    pub intent: BitSet,
}

/// The complete concept set of a context, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptSet {
    concepts: Vec<FormalConcept>,
    n_objects: usize,
    n_attributes: usize,
}

impl ConceptSet {
    pub fn concepts(&self) -> &[FormalConcept] {
        &self.concepts
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn n_attributes(&self) -> usize {
        self.n_attributes
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    /// Writes one JSON object per concept with named extents and intents.
    pub fn to_jsonl<W: Write>(&self, ctx: &FormalContext, mut writer: W) -> Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            extent: Vec<&'a str>,
            intent: Vec<&'a str>,
        }
        for concept in &self.concepts {
            let line = Line {
                extent: concept.extent.iter().map(|o| ctx.objects()[o].as_str()).collect(),
                intent: concept.intent.iter().map(|a| ctx.attributes()[a].as_str()).collect(),
            };
            serde_json::to_writer(&mut writer, &line)?;
            writeln!(writer)?;
        }
        Ok(())
    }
}

/// Enumerates every formal concept of the context with Close-by-One.
///
/// The result includes the top and bottom concepts and is emitted in
/// canonical (ascending lectic) intent order. Contexts without objects are
/// rejected; enumeration aborts with a resource error when more than
/// `ceiling` concepts exist.
pub fn enumerate_concepts(ctx: &FormalContext, ceiling: usize) -> Result<ConceptSet> {
    if ctx.n_objects() == 0 {
        return Err(Error::InvalidArgument("cannot enumerate concepts of an empty context".into()));
    }
    let full = BitSet::full(ctx.n_objects());
    let intent = ctx.derive_intent(&full);
    let mut concepts = Vec::new();
    close_by_one(ctx, full, intent, 0, ceiling, &mut concepts)?;
    Ok(ConceptSet { concepts, n_objects: ctx.n_objects(), n_attributes: ctx.n_attributes() })
}

fn close_by_one(
    ctx: &FormalContext,
    extent: BitSet,
    intent: BitSet,
    first_attribute: usize,
    ceiling: usize,
    out: &mut Vec<FormalConcept>,
) -> Result<()> {
    if out.len() >= ceiling {
        return Err(Error::ConceptCeiling { ceiling });
    }
    out.push(FormalConcept { extent: extent.clone(), intent: intent.clone() });
    for attribute in first_attribute..ctx.n_attributes() {
        if intent.contains(attribute) {
            continue;
        }
        let mut candidate_extent = extent.clone();
        candidate_extent.intersect_with(ctx.attribute_col(attribute));
        let candidate_intent = ctx.derive_intent(&candidate_extent);
        // Canonicity: the closure must not introduce attributes below the
        // branching attribute, otherwise the concept was generated earlier.
        if candidate_intent.eq_below(&intent, attribute) {
            close_by_one(ctx, candidate_extent, candidate_intent, attribute + 1, ceiling, out)?;
        }
    }
    Ok(())
}

/// Hasse edges `(lower, upper)` of the extent-inclusion order, as indices
/// into the canonical concept order.
pub fn covering_relation(concepts: &ConceptSet) -> Vec<(usize, usize)> {
    let items = concepts.concepts();
    // Candidates sorted by extent size so covers can be found greedily.
    let mut by_size: Vec<usize> = (0..items.len()).collect();
    by_size.sort_by_key(|&i| items[i].extent.count());
    let mut edges = Vec::new();
    for &lower in &by_size {
        let mut uppers: Vec<usize> = (0..items.len())
            .filter(|&upper| {
                upper != lower
                    && items[lower].extent.is_subset(&items[upper].extent)
                    && items[lower].extent.count() < items[upper].extent.count()
            })
            .collect();
        uppers.sort_by_key(|&u| items[u].extent.count());
        let mut covers: Vec<usize> = Vec::new();
        'candidates: for upper in uppers {
            for &chosen in &covers {
                if items[chosen].extent.is_subset(&items[upper].extent) {
                    continue 'candidates;
                }
            }
            covers.push(upper);
        }
        for upper in covers {
            edges.push((lower, upper));
        }
    }
    edges.sort();
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// The three-incidence context used across the examples:
    /// o1 has {a1, a2}, o2 has {a2}.
    fn tiny_context() -> FormalContext {
        FormalContext::from_incidence_pairs(
            vec!["o1".into(), "o2".into()],
            vec!["a1".into(), "a2".into()],
            [(0, 0), (0, 1), (1, 1)],
        )
        .unwrap()
    }

    fn random_context(
        n: usize,
        m: usize,
        density: f64,
        seed: u64,
    ) -> FormalContext {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let objects = (0..n).map(|i| format!("o{i}")).collect();
        let attributes = (0..m).map(|i| format!("a{i}")).collect();
        let mut pairs = Vec::new();
        for o in 0..n {
            for a in 0..m {
                if rng.random::<f64>() < density {
                    pairs.push((o, a));
                }
            }
        }
        FormalContext::from_incidence_pairs(objects, attributes, pairs).unwrap()
    }

    /// Brute-force oracle: closed attribute sets over the whole powerset.
    fn brute_force_concepts(ctx: &FormalContext) -> Vec<(Vec<usize>, Vec<usize>)> {
        let m = ctx.n_attributes();
        assert!(m <= 16, "oracle is exponential in the attribute count");
        let mut found = std::collections::BTreeSet::new();
        for mask in 0u32..(1 << m) {
            let subset = BitSet::from_indices(m, (0..m).filter(|&a| mask & (1 << a) != 0));
            let closed = ctx.closure(&subset);
            let extent = ctx.derive_extent(&closed);
            found.insert((extent.iter().collect::<Vec<_>>(), closed.iter().collect::<Vec<_>>()));
        }
        found.into_iter().collect()
    }

    #[test]
    fn derive_examples_on_tiny_context() {
        let ctx = tiny_context();
        assert_eq!(ctx.derive_intent_named(&["o1", "o2"]).unwrap(), ["a2"]);
        assert_eq!(ctx.derive_extent_named(&["a1", "a2"]).unwrap(), ["o1"]);
        // Empty input derives to the full opposite side.
        assert_eq!(ctx.derive_intent_named(&[]).unwrap(), ["a1", "a2"]);
        assert_eq!(ctx.derive_extent_named(&[]).unwrap(), ["o1", "o2"]);
    }

    #[test]
    fn derive_unknown_name_is_reference_error() {
        let ctx = tiny_context();
        assert!(matches!(
            ctx.derive_intent_named(&["nope"]),
            Err(Error::UnknownId { .. })
        ));
        assert!(matches!(
            ctx.derive_extent_named(&["nope"]),
            Err(Error::UnknownId { .. })
        ));
    }

    #[test]
    fn closure_examples() {
        let ctx = tiny_context();
        let closed = ctx.closure(&BitSet::from_indices(2, [0]));
        assert_eq!(closed.iter().collect::<Vec<_>>(), vec![0, 1]);

        let empty_ctx = FormalContext::from_incidence_pairs(
            vec!["o1".into()],
            vec!["a1".into()],
            [],
        )
        .unwrap();
        assert!(empty_ctx.closure(&BitSet::new(1)).is_empty());
    }

    #[test]
    fn enumerate_tiny_context() {
        let ctx = tiny_context();
        let concepts = enumerate_concepts(&ctx, DEFAULT_CONCEPT_CEILING).unwrap();
        assert_eq!(concepts.len(), 2);
        let as_names: Vec<(Vec<usize>, Vec<usize>)> = concepts
            .concepts()
            .iter()
            .map(|c| (c.extent.iter().collect(), c.intent.iter().collect()))
            .collect();
        assert!(as_names.contains(&(vec![0, 1], vec![1])));
        assert!(as_names.contains(&(vec![0], vec![0, 1])));
    }

    #[test]
    fn enumerate_full_incidence_has_one_concept() {
        let objects: Vec<String> = (0..4).map(|i| format!("o{i}")).collect();
        let attributes: Vec<String> = (0..3).map(|i| format!("a{i}")).collect();
        let pairs = (0..4).flat_map(|o| (0..3).map(move |a| (o, a)));
        let ctx = FormalContext::from_incidence_pairs(objects, attributes, pairs).unwrap();
        let concepts = enumerate_concepts(&ctx, DEFAULT_CONCEPT_CEILING).unwrap();
        assert_eq!(concepts.len(), 1);
        assert_eq!(concepts.concepts()[0].extent.count(), 4);
        assert_eq!(concepts.concepts()[0].intent.count(), 3);
    }

    #[test]
    fn enumerate_matches_brute_force_on_random_contexts() {
        for seed in 0..30 {
            let ctx = random_context(5, 8, 0.4, seed);
            let concepts = enumerate_concepts(&ctx, DEFAULT_CONCEPT_CEILING).unwrap();
            let mut got: Vec<(Vec<usize>, Vec<usize>)> = concepts
                .concepts()
                .iter()
                .map(|c| (c.extent.iter().collect(), c.intent.iter().collect()))
                .collect();
            got.sort();
            assert_eq!(got, brute_force_concepts(&ctx), "seed {seed}");
        }
    }

    #[test]
    fn enumerate_emits_canonical_intent_order_without_duplicates() {
        let ctx = random_context(6, 9, 0.35, 7);
        let concepts = enumerate_concepts(&ctx, DEFAULT_CONCEPT_CEILING).unwrap();
        let intents: Vec<Vec<usize>> =
            concepts.concepts().iter().map(|c| c.intent.iter().collect()).collect();
        let mut sorted = intents.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(intents, sorted, "expected ascending lectic order, no duplicates");
        for concept in concepts.concepts() {
            assert_eq!(ctx.derive_intent(&concept.extent), concept.intent);
            assert_eq!(ctx.derive_extent(&concept.intent), concept.extent);
        }
    }

    #[test]
    fn ceiling_is_a_resource_error() {
        let ctx = random_context(6, 9, 0.4, 3);
        let err = enumerate_concepts(&ctx, 2).unwrap_err();
        match err {
            Error::ConceptCeiling { ceiling } => assert_eq!(ceiling, 2),
            other => panic!("expected ceiling error, got {other}"),
        }
    }

    #[test]
    fn covering_relation_tiny_cases() {
        let ctx = tiny_context();
        let concepts = enumerate_concepts(&ctx, DEFAULT_CONCEPT_CEILING).unwrap();
        assert_eq!(covering_relation(&concepts).len(), 1);

        // Chain of 3 nested concepts -> 2 edges.
        let chain = FormalContext::from_incidence_pairs(
            vec!["o1".into(), "o2".into(), "o3".into()],
            vec!["a1".into(), "a2".into(), "a3".into()],
            [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0)],
        )
        .unwrap();
        let concepts = enumerate_concepts(&chain, DEFAULT_CONCEPT_CEILING).unwrap();
        assert_eq!(concepts.len(), 3);
        assert_eq!(covering_relation(&concepts).len(), 2);

        // A single concept has no edges.
        let full = FormalContext::from_incidence_pairs(
            vec!["o1".into()],
            vec!["a1".into()],
            [(0, 0)],
        )
        .unwrap();
        let concepts = enumerate_concepts(&full, DEFAULT_CONCEPT_CEILING).unwrap();
        assert!(covering_relation(&concepts).is_empty());
    }

    #[test]
    fn covering_relation_transitive_closure_equals_inclusion() {
        let ctx = random_context(5, 7, 0.4, 11);
        let concepts = enumerate_concepts(&ctx, DEFAULT_CONCEPT_CEILING).unwrap();
        let n = concepts.len();
        let edges = covering_relation(&concepts);
        // Floyd-Warshall style reachability over the Hasse edges.
        let mut reach = vec![vec![false; n]; n];
        for &(lo, up) in &edges {
            reach[lo][up] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        for (i, row) in reach.iter().enumerate() {
            assert!(!row[i], "covering relation must be acyclic");
            for (j, &reachable) in row.iter().enumerate() {
                let strict_subset = i != j
                    && concepts.concepts()[i].extent.is_subset(&concepts.concepts()[j].extent);
                assert_eq!(reachable, strict_subset);
            }
        }
    }

    #[test]
    fn retained_terms_drops_empty_columns() {
        let ctx = FormalContext::from_incidence_pairs(
            vec!["o1".into(), "o2".into()],
            vec!["a1".into(), "a2".into(), "a3".into()],
            [(0, 0), (1, 2)],
        )
        .unwrap();
        let (count, reduced) = ctx.retained_terms();
        assert_eq!(count, 2);
        assert_eq!(reduced.attributes(), ["a1", "a3"]);
        assert!(reduced.incidence(0, 0));
        assert!(reduced.incidence(1, 1));
    }

    #[test]
    fn csv_and_burmeister_round_trips() {
        let ctx = random_context(4, 6, 0.45, 21);
        let mut csv_buf = Vec::new();
        ctx.to_csv(&mut csv_buf).unwrap();
        assert_eq!(FormalContext::from_csv(csv_buf.as_slice()).unwrap(), ctx);

        let mut cxt_buf = Vec::new();
        ctx.to_burmeister(&mut cxt_buf).unwrap();
        assert_eq!(
            FormalContext::from_burmeister(std::io::BufReader::new(cxt_buf.as_slice())).unwrap(),
            ctx
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn galois_property_holds(
            seed in 0u64..1000,
            s_mask in 0u16..256,
            t_mask in 0u16..256,
        ) {
            let ctx = random_context(8, 8, 0.4, seed);
            let s = BitSet::from_indices(8, (0..8).filter(|&i| s_mask & (1 << i) != 0));
            let t = BitSet::from_indices(8, (0..8).filter(|&i| t_mask & (1 << i) != 0));
            // S ⊆ intent(T) ⟺ T ⊆ extent(S), for S over attributes
            // and T over objects.
            let left = s.is_subset(&ctx.derive_intent(&t));
            let right = t.is_subset(&ctx.derive_extent(&s));
            prop_assert_eq!(left, right);
        }

        #[test]
        fn closure_is_extensive_monotone_idempotent(
            seed in 0u64..1000,
            mask_a in 0u16..256,
            mask_b in 0u16..256,
        ) {
            let ctx = random_context(6, 8, 0.4, seed);
            let a = BitSet::from_indices(8, (0..8).filter(|&i| mask_a & (1 << i) != 0));
            let mut ab = a.clone();
            ab.union_with(&BitSet::from_indices(8, (0..8).filter(|&i| mask_b & (1 << i) != 0)));
            let ca = ctx.closure(&a);
            prop_assert!(a.is_subset(&ca));
            // ab ⊇ a, so closure(ab) must contain closure(a).
            prop_assert!(ca.is_subset(&ctx.closure(&ab)));
            prop_assert_eq!(ctx.closure(&ca.clone()), ca);
        }
    }
}
