//! Line-based instance file format.
//!
//! ```text
//! # comment
//! nodes 4
//! comms 1
//! variant vdstp          (optional)
//! formalism branching    (optional)
//! depth 3                (optional)
//! edge 1 2 0.5
//! terminal 1 1
//! root 1 1               (optional, defaults to the first listed terminal)
//! prize 1 3 0.25         (optional, finite non-terminal prize)
//! grid 2 2 1 crossed     (optional metadata)
//! ```
//!
//! Node and communication ids are 1-based. Serialization writes keys in the
//! order above with edges sorted by `(u, v)`.

use std::fmt::Write as _;

use super::{Communication, Formalism, GridMeta, Instance, LayerType, Variant};
use crate::error::{Error, Result};

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    tok.parse::<T>()
        .map_err(|_| perr(line, format!("cannot parse {what} from '{tok}'")))
}

fn one_based(v: usize, line: usize, what: &str) -> Result<usize> {
    v.checked_sub(1)
        .ok_or_else(|| perr(line, format!("{what} ids are 1-based, got 0")))
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut nodes: Option<usize> = None;
    let mut comms: Option<usize> = None;
    let mut variant = None;
    let mut formalism = None;
    let mut depth = None;
    let mut grid = None;
    let mut edges = Vec::new();
    // (line, comm, node)
    let mut terminals: Vec<(usize, usize, usize)> = Vec::new();
    let mut roots: Vec<(usize, usize, usize)> = Vec::new();
    let mut prizes: Vec<(usize, usize, f64)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let key = toks.next().unwrap_or_default();
        match key {
            "nodes" => nodes = Some(field(toks.next(), line, "node count")?),
            "comms" => {
                let m: usize = field(toks.next(), line, "communication count")?;
                if m == 0 {
                    return Err(perr(line, "communication count must be at least 1"));
                }
                comms = Some(m)
            }
            "variant" => {
                let s: String = field(toks.next(), line, "variant")?;
                variant = Some(Variant::from_name(&s).ok_or_else(|| perr(line, format!("unknown variant '{s}'")))?);
            }
            "formalism" => {
                let s: String = field(toks.next(), line, "formalism")?;
                formalism =
                    Some(Formalism::from_name(&s).ok_or_else(|| perr(line, format!("unknown formalism '{s}'")))?);
            }
            "depth" => {
                let d: usize = field(toks.next(), line, "depth")?;
                if d == 0 {
                    return Err(perr(line, "depth must be at least 1"));
                }
                depth = Some(d);
            }
            "edge" => {
                let u = one_based(field(toks.next(), line, "edge endpoint")?, line, "node")?;
                let v = one_based(field(toks.next(), line, "edge endpoint")?, line, "node")?;
                let w: f64 = field(toks.next(), line, "edge weight")?;
                edges.push((line, u, v, w));
            }
            "terminal" => {
                let mu = one_based(field(toks.next(), line, "communication")?, line, "communication")?;
                let node = one_based(field(toks.next(), line, "terminal node")?, line, "node")?;
                terminals.push((line, mu, node));
            }
            "root" => {
                let mu = one_based(field(toks.next(), line, "communication")?, line, "communication")?;
                let node = one_based(field(toks.next(), line, "root node")?, line, "node")?;
                roots.push((line, mu, node));
            }
            "prize" => {
                let mu = one_based(field(toks.next(), line, "communication")?, line, "communication")?;
                let node = one_based(field(toks.next(), line, "prize node")?, line, "node")?;
                let c: f64 = field(toks.next(), line, "prize value")?;
                prizes.push((node, mu, c));
            }
            "grid" => {
                let nx: usize = field(toks.next(), line, "grid nx")?;
                let ny: usize = field(toks.next(), line, "grid ny")?;
                let nz: usize = field(toks.next(), line, "grid nz")?;
                let kind: String = field(toks.next(), line, "layer type")?;
                let layer = match kind.as_str() {
                    "aligned" => LayerType::MultiAligned,
                    "crossed" => LayerType::MultiCrossed,
                    other => return Err(perr(line, format!("unknown layer type '{other}'"))),
                };
                grid = Some(GridMeta { nx, ny, nz, layer });
            }
            other => return Err(perr(line, format!("unknown key '{other}'"))),
        }
        if toks.next().is_some() {
            return Err(perr(line, "trailing tokens"));
        }
    }

    let n = nodes.ok_or_else(|| Error::Validation("missing 'nodes' line".into()))?;
    let m = comms.ok_or_else(|| Error::Validation("missing 'comms' line".into()))?;
    for &(line, u, v, _) in &edges {
        if u >= n || v >= n {
            return Err(perr(line, "edge endpoint exceeds node count"));
        }
    }
    let mut term_sets: Vec<Vec<usize>> = vec![Vec::new(); m];
    for &(line, mu, node) in &terminals {
        if mu >= m {
            return Err(perr(line, "communication id exceeds 'comms'"));
        }
        if node >= n {
            return Err(perr(line, "terminal exceeds node count"));
        }
        term_sets[mu].push(node);
    }
    let mut root_of: Vec<Option<usize>> = vec![None; m];
    for &(line, mu, node) in &roots {
        if mu >= m {
            return Err(perr(line, "communication id exceeds 'comms'"));
        }
        if root_of[mu].replace(node).is_some() {
            return Err(perr(line, "communication has two roots"));
        }
    }
    let mut communications = Vec::with_capacity(m);
    for (mu, ts) in term_sets.into_iter().enumerate() {
        let root = match root_of[mu] {
            Some(r) => r,
            None => *ts
                .first()
                .ok_or_else(|| Error::Validation(format!("communication {} has no terminals", mu + 1)))?,
        };
        communications.push(Communication { terminals: ts, root });
    }
    let mut inst = Instance::with_prizes(
        n,
        edges.into_iter().map(|(_, u, v, w)| (u, v, w)).collect(),
        communications,
        &prizes,
    )?;
    if let Some(v) = variant {
        inst.variant = v;
    }
    if let Some(f) = formalism {
        inst.formalism = f;
    }
    inst.depth = depth;
    if let Some(g) = grid {
        if g.num_nodes() != n {
            return Err(Error::Validation(format!(
                "grid {}x{}x{} does not match node count {n}",
                g.nx, g.ny, g.nz
            )));
        }
        inst.grid = Some(g);
    }
    Ok(inst)
}

/// Writes the canonical text form; `parse_instance` inverts it exactly.
pub fn serialize_instance(inst: &Instance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "nodes {}", inst.num_nodes());
    let _ = writeln!(s, "comms {}", inst.num_comms());
    let _ = writeln!(s, "variant {}", inst.variant.name());
    let _ = writeln!(s, "formalism {}", inst.formalism.name());
    if let Some(d) = inst.depth {
        let _ = writeln!(s, "depth {d}");
    }
    for e in inst.edges() {
        let _ = writeln!(s, "edge {} {} {}", e.u + 1, e.v + 1, e.w);
    }
    for (mu, c) in inst.comms().iter().enumerate() {
        for &t in &c.terminals {
            let _ = writeln!(s, "terminal {} {}", mu + 1, t + 1);
        }
    }
    for (mu, c) in inst.comms().iter().enumerate() {
        let _ = writeln!(s, "root {} {}", mu + 1, c.root + 1);
    }
    for (node, mu, c) in inst.extra_prizes() {
        let _ = writeln!(s, "prize {} {} {}", mu + 1, node + 1, c);
    }
    if let Some(g) = inst.grid {
        let _ = writeln!(s, "grid {} {} {} {}", g.nx, g.ny, g.nz, g.layer.name());
    }
    s
}
