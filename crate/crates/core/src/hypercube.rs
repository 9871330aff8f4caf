//! The pattern graph Q_n on {-1,1}^n.
//!
//! Vertices are n-bit masks (bit i set means coordinate i equals -1), so
//! parity is a popcount and cube adjacency is a single-bit XOR. The odd
//! parity class and its partition by the top-w "suffix" coordinates drive
//! both randomized embedders.

use crate::error::{Error, Result};

/// Desk-scale guard: 2^24 cube vertices is the largest pattern we enumerate.
pub const MAX_DIMENSION: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CubeVertex {
    pub n: u32,
    pub word: u32,
}

impl CubeVertex {
    pub fn new(n: u32, word: u32) -> Result<Self> {
        check_dimension(n)?;
        if word >= 1u32 << n {
            return Err(Error::invalid(format!("mask {word:#b} out of range for Q_{n}")));
        }
        Ok(CubeVertex { n, word })
    }

    /// Number of -1 coordinates mod 2.
    pub fn parity_odd(&self) -> bool {
        self.word.count_ones() % 2 == 1
    }

    /// The w top coordinates (v_{n-w+1}, ..., v_n) as a w-bit mask.
    pub fn suffix(&self, w: u32) -> u32 {
        debug_assert!(w <= self.n);
        if w == 0 {
            0
        } else {
            self.word >> (self.n - w)
        }
    }
}

fn check_dimension(n: u32) -> Result<()> {
    if n == 0 || n > MAX_DIMENSION {
        return Err(Error::invalid(format!(
            "dimension n={n} outside supported range 1..={MAX_DIMENSION}"
        )));
    }
    Ok(())
}

/// All vertices with an odd number of -1 coordinates, sorted by mask.
pub fn odd_class(n: u32) -> Result<Vec<CubeVertex>> {
    check_dimension(n)?;
    let out: Vec<CubeVertex> = (0u32..1 << n)
        .filter(|w| w.count_ones() % 2 == 1)
        .map(|word| CubeVertex { n, word })
        .collect();
    debug_assert_eq!(out.len(), 1 << (n - 1));
    Ok(out)
}

/// All vertices with an even number of -1 coordinates, sorted by mask.
pub fn even_class(n: u32) -> Result<Vec<CubeVertex>> {
    check_dimension(n)?;
    Ok((0u32..1 << n)
        .filter(|w| w.count_ones() % 2 == 0)
        .map(|word| CubeVertex { n, word })
        .collect())
}

/// The n neighbors of `v` (single coordinate flips).
pub fn cube_neighbors(v: CubeVertex) -> Vec<CubeVertex> {
    (0..v.n)
        .map(|i| CubeVertex {
            n: v.n,
            word: v.word ^ (1 << i),
        })
        .collect()
}

/// Partition of the odd class by the top-w coordinates.
#[derive(Debug, Clone)]
pub struct FacetPartition {
    pub n: u32,
    pub w: u32,
    /// classes[b] lists the odd vertices whose suffix equals b.
    pub classes: Vec<Vec<CubeVertex>>,
}

impl FacetPartition {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn class_size(&self) -> usize {
        1usize << (self.n - self.w - 1)
    }
}

pub fn facet_partition(n: u32, w: u32) -> Result<FacetPartition> {
    check_dimension(n)?;
    if w + 2 > n {
        return Err(Error::invalid(format!(
            "facet width w={w} outside range 0..={} for n={n}",
            n.saturating_sub(2)
        )));
    }
    let mut classes = vec![Vec::new(); 1usize << w];
    for v in odd_class(n)? {
        classes[v.suffix(w) as usize].push(v);
    }
    for c in &classes {
        debug_assert_eq!(c.len(), 1usize << (n - w - 1));
    }
    Ok(FacetPartition { n, w, classes })
}

/// Q_n as an explicit bipartite pattern: uppers are the odd class, lowers
/// the even class, both in ascending mask order. Returns the graph along
/// with the word lists indexing its two parts.
pub fn cube_as_bigraph(n: u32) -> Result<(crate::bigraph::BipartiteGraph, Vec<u32>, Vec<u32>)> {
    let odd = odd_class(n)?;
    let even = even_class(n)?;
    let even_rank: std::collections::HashMap<u32, usize> =
        even.iter().enumerate().map(|(i, v)| (v.word, i)).collect();
    let mut edges = Vec::with_capacity(odd.len() * n as usize);
    for (i, &o) in odd.iter().enumerate() {
        for nb in cube_neighbors(o) {
            edges.push((i, even_rank[&nb.word]));
        }
    }
    let g = crate::bigraph::BipartiteGraph::from_edges(odd.len(), even.len(), edges)?;
    Ok((
        g,
        odd.iter().map(|v| v.word).collect(),
        even.iter().map(|v| v.word).collect(),
    ))
}

/// Neighbors of an even vertex ordered so that the first n-w share its
/// w-suffix (same facet) and each of the last w flips one suffix coordinate.
pub fn ordered_neighbors_by_facet(v: CubeVertex, w: u32) -> Result<Vec<CubeVertex>> {
    if v.parity_odd() {
        return Err(Error::invalid("ordered_neighbors_by_facet requires even parity"));
    }
    if w + 2 > v.n {
        return Err(Error::invalid(format!(
            "facet width w={w} outside range 0..={} for n={}",
            v.n.saturating_sub(2),
            v.n
        )));
    }
    let mut out = Vec::with_capacity(v.n as usize);
    for i in 0..v.n - w {
        out.push(CubeVertex { n: v.n, word: v.word ^ (1 << i) });
    }
    for i in v.n - w..v.n {
        out.push(CubeVertex { n: v.n, word: v.word ^ (1 << i) });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_class_small() {
        let c = odd_class(2).unwrap();
        assert_eq!(c.iter().map(|v| v.word).collect::<Vec<_>>(), vec![0b01, 0b10]);
        assert_eq!(odd_class(3).unwrap().len(), 4);
        assert_eq!(odd_class(1).unwrap().iter().map(|v| v.word).collect::<Vec<_>>(), vec![1]);
        assert!(odd_class(0).is_err());
        assert!(odd_class(25).is_err());
    }

    #[test]
    fn neighbors_flip_parity() {
        let v = CubeVertex::new(3, 0b000).unwrap();
        let ns: Vec<u32> = cube_neighbors(v).iter().map(|x| x.word).collect();
        assert_eq!(ns, vec![0b001, 0b010, 0b100]);
        let top = CubeVertex::new(3, 0b111).unwrap();
        let ns = cube_neighbors(top);
        assert_eq!(ns.len(), 3);
        assert!(ns.iter().all(|x| !x.parity_odd()));

        let v1 = CubeVertex::new(1, 0).unwrap();
        assert_eq!(cube_neighbors(v1)[0].word, 1);
    }

    #[test]
    fn facet_partition_shapes() {
        let p = facet_partition(3, 1).unwrap();
        assert_eq!(p.class_count(), 2);
        assert!(p.classes.iter().all(|c| c.len() == 2));

        let p = facet_partition(4, 0).unwrap();
        assert_eq!(p.class_count(), 1);
        assert_eq!(p.classes[0].len(), 8);

        let p = facet_partition(5, 2).unwrap();
        assert_eq!(p.class_count(), 4);
        assert!(p.classes.iter().all(|c| c.len() == 4));

        assert!(facet_partition(3, 2).is_err());
    }

    #[test]
    fn facet_partition_covers_odd_class() {
        let p = facet_partition(5, 2).unwrap();
        let mut all: Vec<u32> = p.classes.iter().flatten().map(|v| v.word).collect();
        all.sort_unstable();
        let odd: Vec<u32> = odd_class(5).unwrap().iter().map(|v| v.word).collect();
        assert_eq!(all, odd);
        for (b, class) in p.classes.iter().enumerate() {
            assert!(class.iter().all(|v| v.suffix(2) == b as u32));
        }
    }

    #[test]
    fn ordered_neighbors_respect_facets() {
        let v = CubeVertex::new(3, 0b000).unwrap();
        let ns = ordered_neighbors_by_facet(v, 1).unwrap();
        assert_eq!(ns.len(), 3);
        // first n-w share the suffix, each of the rest flips one suffix bit
        assert!(ns[..2].iter().all(|x| x.suffix(1) == v.suffix(1)));
        assert_eq!(ns[2].suffix(1), v.suffix(1) ^ 1);

        let v = CubeVertex::new(2, 0b00).unwrap();
        let ns = ordered_neighbors_by_facet(v, 0).unwrap();
        assert_eq!(ns.iter().map(|x| x.word).collect::<Vec<_>>(), vec![0b01, 0b10]);

        let odd = CubeVertex::new(3, 0b001).unwrap();
        assert!(ordered_neighbors_by_facet(odd, 1).is_err());
    }

    #[test]
    fn regularity_and_bipartiteness() {
        for n in 1..=6u32 {
            for word in 0..1u32 << n {
                let v = CubeVertex::new(n, word).unwrap();
                let ns = cube_neighbors(v);
                assert_eq!(ns.len(), n as usize);
                assert!(ns.iter().all(|x| x.parity_odd() != v.parity_odd()));
            }
        }
    }
}
