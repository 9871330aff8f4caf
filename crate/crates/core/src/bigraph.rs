//! Bipartite graphs with bit-vector adjacency rows.
//!
//! A graph is a triple (upper part, lower part, edges). Adjacency is stored
//! as one bit row per upper vertex over the lower part; a transpose is
//! built lazily and cached for lower-side neighborhood queries, which the
//! condensation and trichotomy machinery hits heavily. Graphs are immutable
//! after construction: "removal" and "induction" return new values so that
//! earlier generations stay alive while an iterative driver mutates its view.

use crate::bits::BitVec;
use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{traits::ToPrimitive, Zero};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Upper => Side::Lower,
            Side::Lower => Side::Upper,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Upper => write!(f, "U"),
            Side::Lower => write!(f, "L"),
        }
    }
}

/// A subset of one part of a bipartite graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    pub side: Side,
    pub bits: BitVec,
}

impl VertexSet {
    pub fn empty(side: Side, part_size: usize) -> Self {
        VertexSet {
            side,
            bits: BitVec::zeros(part_size),
        }
    }

    pub fn full(side: Side, part_size: usize) -> Self {
        VertexSet {
            side,
            bits: BitVec::ones(part_size),
        }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(side: Side, part_size: usize, idx: I) -> Self {
        VertexSet {
            side,
            bits: BitVec::from_indices(part_size, idx),
        }
    }

    pub fn card(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.bits.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }

    pub fn to_indices(&self) -> Vec<usize> {
        self.bits.to_indices()
    }
}

/// Index maps returned by subgraph induction. `*_kept[new] = old`;
/// `to_new` round-trips kept old ids back to the dense new ids.
#[derive(Debug, Clone)]
pub struct SubgraphMaps {
    pub upper_kept: Vec<usize>,
    pub lower_kept: Vec<usize>,
    upper_to_new: Vec<Option<usize>>,
    lower_to_new: Vec<Option<usize>>,
}

impl SubgraphMaps {
    pub fn to_new(&self, side: Side, old: usize) -> Option<usize> {
        match side {
            Side::Upper => self.upper_to_new.get(old).copied().flatten(),
            Side::Lower => self.lower_to_new.get(old).copied().flatten(),
        }
    }

    pub fn to_old(&self, side: Side, new: usize) -> usize {
        match side {
            Side::Upper => self.upper_kept[new],
            Side::Lower => self.lower_kept[new],
        }
    }
}

#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    upper_count: usize,
    lower_count: usize,
    rows: Vec<BitVec>,
    transpose: OnceLock<Vec<BitVec>>,
}

impl PartialEq for BipartiteGraph {
    fn eq(&self, other: &Self) -> bool {
        self.upper_count == other.upper_count
            && self.lower_count == other.lower_count
            && self.rows == other.rows
    }
}
impl Eq for BipartiteGraph {}

impl BipartiteGraph {
    /// Build from adjacency rows. Every row must have length `lower_count`.
    pub fn from_rows(rows: Vec<BitVec>, lower_count: usize) -> Result<Self> {
        if rows.is_empty() || lower_count == 0 {
            return Err(Error::invalid("both parts must be non-empty"));
        }
        for r in &rows {
            if r.len() != lower_count {
                return Err(Error::invalid("row length does not match lower part size"));
            }
        }
        Ok(BipartiteGraph {
            upper_count: rows.len(),
            lower_count,
            rows,
            transpose: OnceLock::new(),
        })
    }

    pub fn from_edges(
        upper_count: usize,
        lower_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if upper_count == 0 || lower_count == 0 {
            return Err(Error::invalid("both parts must be non-empty"));
        }
        let mut rows = vec![BitVec::zeros(lower_count); upper_count];
        for (u, v) in edges {
            if u >= upper_count {
                return Err(Error::VertexOutOfRange {
                    side: Side::Upper,
                    id: u,
                    size: upper_count,
                });
            }
            if v >= lower_count {
                return Err(Error::VertexOutOfRange {
                    side: Side::Lower,
                    id: v,
                    size: lower_count,
                });
            }
            rows[u].set(v);
        }
        Self::from_rows(rows, lower_count)
    }

    pub fn complete(upper_count: usize, lower_count: usize) -> Self {
        let rows = vec![BitVec::ones(lower_count); upper_count];
        Self::from_rows(rows, lower_count).expect("non-empty parts")
    }

    pub fn edgeless(upper_count: usize, lower_count: usize) -> Self {
        let rows = vec![BitVec::zeros(lower_count); upper_count];
        Self::from_rows(rows, lower_count).expect("non-empty parts")
    }

    #[inline]
    pub fn upper_count(&self) -> usize {
        self.upper_count
    }

    #[inline]
    pub fn lower_count(&self) -> usize {
        self.lower_count
    }

    pub fn part_size(&self, side: Side) -> usize {
        match side {
            Side::Upper => self.upper_count,
            Side::Lower => self.lower_count,
        }
    }

    #[inline]
    pub fn row(&self, u: usize) -> &BitVec {
        &self.rows[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u].get(v)
    }

    pub fn edge_count(&self) -> u64 {
        self.rows.iter().map(|r| r.count_ones() as u64).sum()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, row) in self.rows.iter().enumerate() {
            for v in row.iter_ones() {
                out.push((u, v));
            }
        }
        out
    }

    /// Column view: for each lower vertex, the bit row of its upper neighbors.
    /// Built on first use, then shared.
    pub fn transpose_rows(&self) -> &[BitVec] {
        self.transpose.get_or_init(|| {
            let mut cols = vec![BitVec::zeros(self.upper_count); self.lower_count];
            for (u, row) in self.rows.iter().enumerate() {
                for v in row.iter_ones() {
                    cols[v].set(u);
                }
            }
            cols
        })
    }

    pub fn column(&self, v: usize) -> &BitVec {
        &self.transpose_rows()[v]
    }

    pub fn degree(&self, id: usize, side: Side) -> usize {
        match side {
            Side::Upper => self.rows[id].count_ones(),
            Side::Lower => self.column(id).count_ones(),
        }
    }

    fn check_id(&self, id: usize, side: Side) -> Result<()> {
        let size = self.part_size(side);
        if id >= size {
            Err(Error::VertexOutOfRange { side, id, size })
        } else {
            Ok(())
        }
    }

    /// Neighbors of `v` (which lives on `side`), as a set on the opposite side.
    pub fn neighborhood(&self, v: usize, side: Side) -> Result<VertexSet> {
        self.check_id(v, side)?;
        let bits = match side {
            Side::Upper => self.rows[v].clone(),
            Side::Lower => self.column(v).clone(),
        };
        Ok(VertexSet {
            side: side.opposite(),
            bits,
        })
    }

    /// Common neighborhood of vertices `vs`, all on `side` (repeats allowed).
    /// The empty intersection is the full opposite part.
    pub fn common_neighborhood(&self, vs: &[usize], side: Side) -> Result<VertexSet> {
        let opp = side.opposite();
        let mut acc = BitVec::ones(self.part_size(opp));
        for &v in vs {
            self.check_id(v, side)?;
            match side {
                Side::Upper => acc.and_assign(&self.rows[v]),
                Side::Lower => acc.and_assign(self.column(v)),
            }
        }
        Ok(VertexSet { side: opp, bits: acc })
    }

    /// |CN(vs)| without materializing the set.
    pub fn common_neighborhood_size(&self, vs: &[usize], side: Side) -> Result<usize> {
        Ok(self.common_neighborhood(vs, side)?.card())
    }

    /// Exact edge density |E| / (|up| * |down|).
    pub fn density(&self) -> BigRational {
        BigRational::new(
            BigInt::from(self.edge_count()),
            BigInt::from(self.upper_count as u64 * self.lower_count as u64),
        )
    }

    pub fn density_f64(&self) -> f64 {
        self.edge_count() as f64 / (self.upper_count as f64 * self.lower_count as f64)
    }

    /// Induced subgraph on the given vertex subsets, with dense re-indexing.
    pub fn induced_subgraph(
        &self,
        uppers: &VertexSet,
        lowers: &VertexSet,
    ) -> Result<(BipartiteGraph, SubgraphMaps)> {
        if uppers.side != Side::Upper || lowers.side != Side::Lower {
            return Err(Error::invalid("induced_subgraph: sets on wrong sides"));
        }
        if uppers.bits.len() != self.upper_count || lowers.bits.len() != self.lower_count {
            return Err(Error::invalid("induced_subgraph: set universe mismatch"));
        }
        let upper_kept = uppers.to_indices();
        let lower_kept = lowers.to_indices();
        if upper_kept.is_empty() || lower_kept.is_empty() {
            return Err(Error::invalid("induced_subgraph: empty side"));
        }
        let mut upper_to_new = vec![None; self.upper_count];
        for (new, &old) in upper_kept.iter().enumerate() {
            upper_to_new[old] = Some(new);
        }
        let mut lower_to_new = vec![None; self.lower_count];
        for (new, &old) in lower_kept.iter().enumerate() {
            lower_to_new[old] = Some(new);
        }
        let mut rows = Vec::with_capacity(upper_kept.len());
        for &u in &upper_kept {
            let mut row = BitVec::zeros(lower_kept.len());
            let old_row = &self.rows[u];
            for (new_v, &old_v) in lower_kept.iter().enumerate() {
                if old_row.get(old_v) {
                    row.set(new_v);
                }
            }
            rows.push(row);
        }
        let g = BipartiteGraph::from_rows(rows, lower_kept.len())?;
        Ok((
            g,
            SubgraphMaps {
                upper_kept,
                lower_kept,
                upper_to_new,
                lower_to_new,
            },
        ))
    }

    /// Same vertex set, with every edge incident to `lowers` removed.
    pub fn remove_edges_at_lowers(&self, lowers: &VertexSet) -> Result<BipartiteGraph> {
        if lowers.side != Side::Lower || lowers.bits.len() != self.lower_count {
            return Err(Error::invalid("remove_edges_at_lowers: bad lower set"));
        }
        let keep = lowers.bits.complement();
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut row = r.clone();
                row.and_assign(&keep);
                row
            })
            .collect();
        BipartiteGraph::from_rows(rows, self.lower_count)
    }

    /// Swap the two parts (rows become columns).
    pub fn transposed(&self) -> BipartiteGraph {
        BipartiteGraph::from_rows(self.transpose_rows().to_vec(), self.upper_count)
            .expect("parts stay non-empty")
    }
}

// ---------------------------------------------------------------------------
// Text format: `upper_count lower_count` header, then `u v` edge lines.
// `#` starts a comment. Canonical writes sort edges lexicographically.
// ---------------------------------------------------------------------------

pub fn parse_graph<R: BufRead>(reader: R) -> Result<BipartiteGraph> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut parts = content.split_whitespace();
        let a = parts.next();
        let b = parts.next();
        let extra = parts.next();
        let (a, b) = match (a, b, extra) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected two integers, got {content:?}"),
                })
            }
        };
        let a: usize = a.parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("not an integer: {a:?}"),
        })?;
        let b: usize = b.parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("not an integer: {b:?}"),
        })?;
        match header {
            None => {
                if a == 0 || b == 0 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "part sizes must be positive".into(),
                    });
                }
                // 2^26 per side keeps row storage within desk-scale memory
                const MAX_PART: usize = 1 << 26;
                if a > MAX_PART || b > MAX_PART {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("part size exceeds limit {MAX_PART}"),
                    });
                }
                header = Some((a, b));
            }
            Some((uc, lc)) => {
                if a >= uc || b >= lc {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("edge ({a}, {b}) out of range for {uc} x {lc}"),
                    });
                }
                edges.push((a, b));
            }
        }
    }
    let (uc, lc) = header.ok_or(Error::Parse {
        line: 0,
        msg: "missing header line".into(),
    })?;
    BipartiteGraph::from_edges(uc, lc, edges)
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<BipartiteGraph> {
    let f = std::fs::File::open(path)?;
    parse_graph(BufReader::new(f))
}

pub fn format_graph(g: &BipartiteGraph) -> String {
    let mut s = format!("{} {}\n", g.upper_count(), g.lower_count());
    for (u, v) in g.edges() {
        s.push_str(&format!("{u} {v}\n"));
    }
    s
}

pub fn write_graph(g: &BipartiteGraph, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(format_graph(g).as_bytes())?;
    Ok(())
}

/// Exact rational x^k.
pub fn rational_pow(x: &BigRational, k: usize) -> BigRational {
    let mut acc = BigRational::from_integer(BigInt::from(1));
    for _ in 0..k {
        acc *= x;
    }
    acc
}

/// Exact conversion of a finite f64 into a rational.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// b^e for a rational base and integer exponent, never negative input.
pub fn rational_is_zero(x: &BigRational) -> bool {
    x.is_zero()
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The 3-edge path a-x, x-b, b-y: uppers {a=0, b=1}, lowers {x=0, y=1}.
    pub(crate) fn path_graph() -> BipartiteGraph {
        BipartiteGraph::from_edges(2, 2, [(0, 0), (1, 0), (1, 1)]).unwrap()
    }

    #[test]
    fn neighborhood_complete_and_empty() {
        let k22 = BipartiteGraph::complete(2, 2);
        assert_eq!(
            k22.neighborhood(0, Side::Upper).unwrap().to_indices(),
            vec![0, 1]
        );
        let e = BipartiteGraph::edgeless(2, 2);
        assert_eq!(e.neighborhood(1, Side::Lower).unwrap().card(), 0);
    }

    #[test]
    fn neighborhood_path() {
        let g = path_graph();
        assert_eq!(g.neighborhood(1, Side::Upper).unwrap().to_indices(), vec![0, 1]);
        assert_eq!(g.neighborhood(0, Side::Lower).unwrap().to_indices(), vec![0, 1]);
        assert!(matches!(
            g.neighborhood(5, Side::Upper),
            Err(Error::VertexOutOfRange { .. })
        ));
    }

    #[test]
    fn common_neighborhood_cases() {
        let k22 = BipartiteGraph::complete(2, 2);
        assert_eq!(
            k22.common_neighborhood(&[0, 1], Side::Upper).unwrap().to_indices(),
            vec![0, 1]
        );
        let g = path_graph();
        // lowers {x, y} -> unique common neighbor b
        assert_eq!(
            g.common_neighborhood(&[0, 1], Side::Lower).unwrap().to_indices(),
            vec![1]
        );
        // repeats are idempotent
        assert_eq!(
            g.common_neighborhood(&[1, 1], Side::Upper).unwrap(),
            g.neighborhood(1, Side::Upper).unwrap()
        );
        // empty list -> full opposite part
        assert_eq!(g.common_neighborhood(&[], Side::Upper).unwrap().card(), 2);
    }

    #[test]
    fn density_exact() {
        let k34 = BipartiteGraph::complete(3, 4);
        assert_eq!(k34.density(), BigRational::from_integer(1.into()));
        let e = BipartiteGraph::edgeless(2, 3);
        assert_eq!(e.density(), BigRational::from_integer(0.into()));
        let g = path_graph();
        assert_eq!(g.density(), BigRational::new(3.into(), 4.into()));
    }

    #[test]
    fn induced_subgraph_cases() {
        let g = path_graph();
        let all_up = VertexSet::full(Side::Upper, 2);
        let all_lo = VertexSet::full(Side::Lower, 2);
        let (h, maps) = g.induced_subgraph(&all_up, &all_lo).unwrap();
        assert_eq!(h, g);
        assert_eq!(maps.to_new(Side::Upper, 1), Some(1));

        let b_only = VertexSet::from_indices(Side::Upper, 2, [1]);
        let (h, maps) = g.induced_subgraph(&b_only, &all_lo).unwrap();
        assert_eq!(h.edge_count(), 2);
        assert_eq!(h.density(), BigRational::from_integer(1.into()));
        assert_eq!(maps.to_old(Side::Upper, 0), 1);
        assert_eq!(maps.to_new(Side::Upper, 0), None);

        let a_only = VertexSet::from_indices(Side::Upper, 2, [0]);
        let y_only = VertexSet::from_indices(Side::Lower, 2, [1]);
        let (h, _) = g.induced_subgraph(&a_only, &y_only).unwrap();
        assert_eq!(h.edge_count(), 0);

        let empty = VertexSet::empty(Side::Upper, 2);
        assert!(g.induced_subgraph(&empty, &all_lo).is_err());
    }

    #[test]
    fn remove_edges_cases() {
        let k22 = BipartiteGraph::complete(2, 2);
        let all = VertexSet::full(Side::Lower, 2);
        assert_eq!(k22.remove_edges_at_lowers(&all).unwrap().edge_count(), 0);
        let none = VertexSet::empty(Side::Lower, 2);
        assert_eq!(k22.remove_edges_at_lowers(&none).unwrap(), k22);

        let g = path_graph();
        let x = VertexSet::from_indices(Side::Lower, 2, [0]);
        let h = g.remove_edges_at_lowers(&x).unwrap();
        assert_eq!(h.edge_count(), 1);
        assert!(h.has_edge(1, 1));
        assert_eq!(h.density(), BigRational::new(1.into(), 4.into()));
    }

    #[test]
    fn transpose_consistency() {
        let g = path_graph();
        for u in 0..2 {
            for v in 0..2 {
                let forward = g.neighborhood(u, Side::Upper).unwrap().contains(v);
                let backward = g.neighborhood(v, Side::Lower).unwrap().contains(u);
                assert_eq!(forward, backward);
            }
        }
    }

    #[test]
    fn io_round_trip() {
        let g = BipartiteGraph::complete(2, 2);
        let text = format_graph(&g);
        let h = parse_graph(text.as_bytes()).unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn io_parses_header_and_edges() {
        let text = "# a comment\n2 2\n0 0\n0 1\n1 0\n1 1\n";
        let g = parse_graph(text.as_bytes()).unwrap();
        assert_eq!(g.density(), BigRational::from_integer(1.into()));
    }

    #[test]
    fn io_rejects_out_of_range_edge() {
        let text = "2 2\n5 0\n";
        match parse_graph(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn io_tolerates_duplicate_edges() {
        let text = "2 2\n0 0\n0 0\n";
        let g = parse_graph(text.as_bytes()).unwrap();
        assert_eq!(g.edge_count(), 1);
    }
}
