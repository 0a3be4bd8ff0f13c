//! Edge-list text format: one `u v w` edge per line, 0-based node indices,
//! `#` starts a comment. A `# nodes <n>` comment fixes the node count;
//! otherwise it is one past the largest index seen.

use std::io::{BufRead, Write};

use crate::graph::{Graph, WeightedEdge};
use crate::{Error, Result};

pub fn read_edge_list<R: BufRead>(input: R) -> Result<Graph> {
    let mut declared: Option<usize> = None;
    let mut edges = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let (body, comment) = match line.find('#') {
            Some(p) => (&line[..p], Some(line[p + 1..].trim())),
            None => (line.as_str(), None),
        };
        if let Some(rest) = comment.and_then(|c| c.strip_prefix("nodes")) {
            declared = Some(rest.trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad node count `{}`", rest.trim()),
            })?);
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected `u v w`, got {} fields", fields.len()),
            });
        }
        let bad = |what: &str| Error::Parse {
            line: lineno,
            msg: format!("bad {what}"),
        };
        let u: usize = fields[0].parse().map_err(|_| bad("node index"))?;
        let v: usize = fields[1].parse().map_err(|_| bad("node index"))?;
        let w: f64 = fields[2].parse().map_err(|_| bad("weight"))?;
        let e = WeightedEdge::new(u, v, w).map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        edges.push(e);
    }
    let n = declared.unwrap_or_else(|| edges.iter().map(|e| e.v + 1).max().unwrap_or(0));
    Graph::from_edges(n, edges)
}

pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> Result<()> {
    writeln!(out, "# nodes {}", g.n())?;
    for e in g.edges() {
        writeln!(out, "{} {} {}", e.u, e.v, e.w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_comments_and_node_count() {
        let text = "# nodes 5\n0 1 1.5\n\n# a comment\n2 3 2 # trailing\n";
        let g = read_edge_list(text.as_bytes()).unwrap();
        assert_eq!(g.n(), 5);
        assert_eq!(g.m(), 2);
        assert_eq!(g.edges()[1].w, 2.0);
    }

    #[test]
    fn infers_node_count() {
        let g = read_edge_list("3 1 1\n".as_bytes()).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.edges()[0].key(), (1, 3));
    }

    #[test]
    fn reports_line_numbers() {
        for (text, line) in [("0 1 1\n0 1\n", 2), ("0 0 1\n", 1), ("0 1 x\n", 1), ("0 1 -1\n", 1)] {
            match read_edge_list(text.as_bytes()) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(read_edge_list("# nodes 2\n0 3 1\n".as_bytes()).is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let g = Graph::from_triples(4, &[(0, 1, 0.1), (2, 3, 1.0 / 3.0)]).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        assert_eq!(read_edge_list(&buf[..]).unwrap(), g);
    }
}
