//! Canonical text form and a DOT dump for tree diagrams.

use std::fmt::Write;

use super::{Child, FactorToken, Termination, TreeNode, TreeSpec};

fn factor(t: &FactorToken) -> String {
    match *t {
        FactorToken::Literal { prime, exp: 1 } => format!("{}", prime),
        FactorToken::Literal { prime, exp } => format!("{}^{}", prime, exp),
        FactorToken::PathRef { prime } => format!("@{}", prime),
    }
}

fn factor_list(ts: &[FactorToken], sep: &str) -> String {
    ts.iter().map(factor).collect::<Vec<_>>().join(sep)
}

/// Canonical DSL text; parsing it back yields an identical `TreeSpec`.
pub fn to_dsl(tree: &TreeSpec) -> String {
    let mut out = String::new();
    if let Some(q) = tree.declared_q {
        writeln!(out, "q {};", q).unwrap();
    }
    node_dsl(&tree.root, 0, &mut out);
    out
}

fn node_dsl(node: &TreeNode, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    writeln!(out, "{}node {} {{", pad, node.prime).unwrap();
    let inner = "  ".repeat(indent + 1);
    for child in &node.children {
        match child {
            Child::Node(n) => node_dsl(n, indent + 1, out),
            Child::Leaf(l) => {
                writeln!(out, "{}leaf [{}];", inner, factor_list(&l.retained, "*")).unwrap()
            }
            Child::Wedge(w) => writeln!(
                out,
                "{}wedge {{{}}} x [{}] take {};",
                inner,
                factor_list(&w.optional_factors, ","),
                factor_list(&w.base, "*"),
                w.take
            )
            .unwrap(),
            Child::Power(p) => {
                let exp = if p.start_exponent == 1 {
                    String::new()
                } else {
                    format!("^{}", p.start_exponent)
                };
                let term = match p.termination {
                    Termination::Minimal => String::new(),
                    Termination::FullContext => " term full".to_string(),
                };
                writeln!(out, "{}power {}{}{};", inner, p.base_prime, exp, term).unwrap()
            }
        }
    }
    writeln!(out, "{}}}", pad).unwrap();
}

/// Graphviz rendering of the condensed tree.
pub fn to_dot(tree: &TreeSpec) -> String {
    let mut out = String::from("digraph tree {\n  node [shape=box, fontname=\"monospace\"];\n");
    let mut counter = 0usize;
    node_dot(&tree.root, &mut counter, &mut out);
    out.push_str("}\n");
    out
}

fn node_dot(node: &TreeNode, counter: &mut usize, out: &mut String) -> usize {
    let id = *counter;
    *counter += 1;
    writeln!(out, "  n{} [label=\"{}-node\"];", id, node.prime).unwrap();
    for child in &node.children {
        match child {
            Child::Node(n) => {
                let cid = node_dot(n, counter, out);
                writeln!(out, "  n{} -> n{};", id, cid).unwrap();
            }
            Child::Leaf(l) => {
                let cid = *counter;
                *counter += 1;
                writeln!(
                    out,
                    "  n{} [shape=plaintext, label=\"{}\"];",
                    cid,
                    factor_list(&l.retained, "*")
                )
                .unwrap();
                writeln!(out, "  n{} -> n{};", id, cid).unwrap();
            }
            Child::Wedge(w) => {
                let cid = *counter;
                *counter += 1;
                writeln!(
                    out,
                    "  n{} [shape=triangle, label=\"{{{}}} x {} take {}\"];",
                    cid,
                    factor_list(&w.optional_factors, ","),
                    factor_list(&w.base, "*"),
                    w.take
                )
                .unwrap();
                writeln!(out, "  n{} -> n{};", id, cid).unwrap();
            }
            Child::Power(p) => {
                let cid = *counter;
                *counter += 1;
                writeln!(
                    out,
                    "  n{} [shape=rarrow, label=\"power {}^{}..\"];",
                    cid, p.base_prime, p.start_exponent
                )
                .unwrap();
                writeln!(out, "  n{} -> n{} [style=bold];", id, cid).unwrap();
            }
        }
    }
    id
}

#[cfg(test)]
mod tests {
    use super::super::parse_tree;
    use super::*;

    #[test]
    fn dsl_round_trips_to_an_identical_ast() {
        let src = "q 23;\nnode 7 {\n  node 3 {\n    power 3;\n    wedge {7} x [3] take 2;\n  }\n  node 7 {\n    power 7^2 term full;\n    wedge {3,5} x [7^2] take 4;\n    leaf [7];\n    leaf [7];\n  }\n  leaf [7];\n  leaf [7];\n  leaf [7];\n  leaf [7];\n  leaf [@7];\n}\n";
        let t = parse_tree(src).unwrap();
        let printed = to_dsl(&t);
        let reparsed = parse_tree(&printed).unwrap();
        assert_eq!(reparsed, t);
        assert_eq!(to_dsl(&reparsed), printed);
    }

    #[test]
    fn dot_output_mentions_every_construct() {
        let t = parse_tree("node 3 { power 3; leaf [3]; wedge {3} x [@3] take 1; }").unwrap();
        let dot = to_dot(&t);
        assert!(dot.contains("3-node"));
        assert!(dot.contains("power 3^1.."));
        assert!(dot.contains("take 1"));
    }
}
