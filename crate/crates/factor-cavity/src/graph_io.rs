//! Line-oriented graph text format.
//!
//! ```text
//! n m q
//! k weight-id v_1 ... v_k      (m factor lines)
//! variable spin                (one line per pin)
//! ```
//!
//! Blank lines and `#` comments are ignored. Clone-level pairing and cavities
//! are not stored; reading rebuilds clones in order of appearance.

use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use factor_cavity_core::{Factor, FactorGraph, Pin, WeightFamily};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphText {
    pub n: usize,
    pub q: usize,
    pub factors: Vec<Factor>,
    pub pins: Vec<Pin>,
}

impl GraphText {
    pub fn from_graph(g: &FactorGraph) -> Self {
        Self {
            n: g.n(),
            q: g.q(),
            factors: g.factors().to_vec(),
            pins: g.pins().to_vec(),
        }
    }

    pub fn into_graph(self, family: Arc<WeightFamily>) -> anyhow::Result<FactorGraph> {
        if family.q() != self.q {
            bail!(
                "graph has q = {} but the family has q = {}",
                self.q,
                family.q()
            );
        }
        Ok(FactorGraph::from_factors(family, self.n, self.factors)?.with_pins(self.pins)?)
    }
}

pub fn write_graph(g: &FactorGraph) -> String {
    let mut out = format!("{} {} {}\n", g.n(), g.m(), g.q());
    for f in g.factors() {
        out.push_str(&format!("{} {}", f.arity(), f.weight));
        for v in &f.vars {
            out.push_str(&format!(" {v}"));
        }
        out.push('\n');
    }
    for p in g.pins() {
        out.push_str(&format!("{} {}\n", p.var, p.spin));
    }
    out
}

fn numbers(line: &str, lineno: usize) -> anyhow::Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .with_context(|| format!("line {lineno}: bad integer {t:?}"))
        })
        .collect()
}

pub fn parse_graph(text: &str) -> anyhow::Result<GraphText> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (lineno, header) = lines.next().ok_or_else(|| anyhow!("empty graph file"))?;
    let h = numbers(header, lineno)?;
    let [n, m, q] = h[..] else {
        bail!("line {lineno}: header must be `n m q`")
    };
    let mut factors = Vec::with_capacity(m);
    for _ in 0..m {
        let (lineno, l) = lines
            .next()
            .ok_or_else(|| anyhow!("expected {m} factor lines"))?;
        let v = numbers(l, lineno)?;
        if v.len() < 2 || v.len() != v[0] + 2 {
            bail!("line {lineno}: factor line must be `k weight-id v_1 .. v_k`");
        }
        factors.push(Factor {
            weight: v[1],
            vars: v[2..].to_vec(),
        });
    }
    let mut pins = Vec::new();
    for (lineno, l) in lines {
        let v = numbers(l, lineno)?;
        let [var, spin] = v[..] else {
            bail!("line {lineno}: pin line must be `variable spin`")
        };
        pins.push(Pin { var, spin });
    }
    Ok(GraphText {
        n,
        q,
        factors,
        pins,
    })
}
