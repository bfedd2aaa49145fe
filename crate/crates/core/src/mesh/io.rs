//! Plain-text `glmesh` format.
//!
//! ```text
//! glmesh 1
//! nodes N
//! x y            (N lines)
//! triangles M
//! i j k          (M lines, 0-based)
//! boundary K
//! a b marker     (K lines)
//! ```
//!
//! Blank lines and `#` comments are ignored. Coordinates are written with 17
//! significant digits so a write/read cycle reproduces the mesh exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryEdge, Point2, TriMesh};
use crate::error::{Error, Result};

pub fn format_mesh(mesh: &TriMesh) -> String {
    let mut s = String::new();
    s.push_str("glmesh 1\n");
    let _ = writeln!(s, "nodes {}", mesh.num_nodes());
    for p in mesh.nodes() {
        let _ = writeln!(s, "{:?} {:?}", p.x, p.y);
    }
    let _ = writeln!(s, "triangles {}", mesh.num_triangles());
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "boundary {}", mesh.boundary_edges().len());
    for e in mesh.boundary_edges() {
        let _ = writeln!(s, "{} {} {}", e.a, e.b, e.marker);
    }
    s
}

pub fn write_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_mesh(mesh)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_mesh(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_content(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.last = i + 1;
            return Some((i + 1, line.split_whitespace().collect()));
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        let last = self.last;
        self.next_content().ok_or_else(|| Error::Parse {
            line: last + 1,
            message: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} `{tok}`"),
    })
}

fn section(lines: &mut Lines, name: &str) -> Result<usize> {
    let (line, toks) = lines.expect(name)?;
    if toks.len() != 2 || toks[0] != name {
        return Err(Error::Parse {
            line,
            message: format!("expected `{name} <count>`"),
        });
    }
    parse_num(toks[1], line, "count")
}

fn fields<'a>(lines: &mut Lines<'a>, n: usize, what: &str) -> Result<(usize, Vec<&'a str>)> {
    let (line, toks) = lines.expect(what)?;
    if toks.len() != n {
        return Err(Error::Parse {
            line,
            message: format!("{what} needs {n} fields, found {}", toks.len()),
        });
    }
    Ok((line, toks))
}

pub fn parse_mesh(text: &str) -> Result<TriMesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (line, header) = lines.expect("header")?;
    if header != ["glmesh", "1"] {
        return Err(Error::Parse {
            line,
            message: "expected header `glmesh 1`".into(),
        });
    }
    let n = section(&mut lines, "nodes")?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, t) = fields(&mut lines, 2, "node")?;
        nodes.push(Point2::new(parse_num(t[0], line, "coordinate")?, parse_num(t[1], line, "coordinate")?));
    }
    let m = section(&mut lines, "triangles")?;
    let mut triangles = Vec::with_capacity(m);
    for e in 0..m {
        let (line, t) = fields(&mut lines, 3, "triangle")?;
        let mut tri = [0usize; 3];
        for k in 0..3 {
            tri[k] = parse_num(t[k], line, "node index")?;
            if tri[k] >= n {
                return Err(Error::Parse {
                    line,
                    message: format!("triangle {e} references missing node {}", tri[k]),
                });
            }
        }
        triangles.push(tri);
    }
    let k = section(&mut lines, "boundary")?;
    let mut edges = Vec::with_capacity(k);
    for e in 0..k {
        let (line, t) = fields(&mut lines, 3, "boundary edge")?;
        let a: usize = parse_num(t[0], line, "node index")?;
        let b: usize = parse_num(t[1], line, "node index")?;
        if a >= n || b >= n {
            return Err(Error::Parse {
                line,
                message: format!("boundary edge {e} references a missing node"),
            });
        }
        edges.push(BoundaryEdge {
            a,
            b,
            marker: parse_num(t[2], line, "marker")?,
        });
    }
    if let Some((line, _)) = lines.next_content() {
        return Err(Error::Parse {
            line,
            message: "unexpected content after boundary section".into(),
        });
    }
    TriMesh::new(nodes, triangles, edges, vec![])
}
