//! Fractional path packing on sketch graphs, with every admissible path as
//! an explicit column.

use linepack::pathpack::{PathQuery, SketchEdge, SketchTopology};
use linepack::Move;

use crate::lp::{self, Column};
use crate::OracleError;

/// Cap on enumerated paths per instance.
pub const MAX_PATHS: usize = 2_000_000;

/// All admissible paths of `q`, with the same semantics as
/// [`linepack::pathpack::lightest_path`]: at least one hop, stop at the first
/// sink, at most `max_hops` hops and `max_east` east moves.
pub fn admissible_paths<T: SketchTopology + ?Sized>(topo: &T, q: &PathQuery<'_>, limit: usize) -> Result<Vec<Vec<SketchEdge>>, OracleError> {
    fn go<T: SketchTopology + ?Sized>(
        topo: &T,
        q: &PathQuery<'_>,
        tile: (i64, i64),
        path: &mut Vec<SketchEdge>,
        easts: u32,
        out: &mut Vec<Vec<SketchEdge>>,
        limit: usize,
    ) -> Result<(), OracleError> {
        if !path.is_empty() && (q.is_sink)(tile) {
            if out.len() >= limit {
                return Err(OracleError::TooLarge { size: out.len() as u64 + 1, cap: limit as u64 });
            }
            out.push(path.clone());
            return Ok(());
        }
        if path.len() == q.max_hops as usize {
            return Ok(());
        }
        for m in [Move::East, Move::North] {
            if m == Move::East && q.max_east.is_some_and(|c| easts >= c) {
                continue;
            }
            if !topo.has_edge(tile, m) {
                continue;
            }
            path.push(SketchEdge { ix: tile.0, iy: tile.1, dir: m });
            let next = match m {
                Move::East => (tile.0 + 1, tile.1),
                Move::North => (tile.0, tile.1 + 1),
            };
            go(topo, q, next, path, easts + u32::from(m == Move::East), out, limit)?;
            path.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    go(topo, q, q.src, &mut Vec::new(), 0, &mut out, limit)?;
    Ok(out)
}

/// Maximum fractional packing of the requests with edge capacity `cap`.
pub fn sketch_fractional_opt<T: SketchTopology + ?Sized>(topo: &T, queries: &[PathQuery<'_>], cap: u32) -> Result<f64, OracleError> {
    let mut cols = Vec::new();
    for (i, q) in queries.iter().enumerate() {
        let left = MAX_PATHS.saturating_sub(cols.len());
        for edges in admissible_paths(topo, q, left)? {
            cols.push(Column { req: i, edges });
        }
    }
    Ok(lp::primal(&vec![1; queries.len()], &cols, &|_| cap)?.0)
}
