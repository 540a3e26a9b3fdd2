use std::collections::HashMap;

use super::Interaction;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    User(usize),
    Item(usize),
}

/// Keeps the maximal sub-multigraph of the user-item graph in which every
/// user and every item has at least `k` interactions. Degrees count
/// interactions, so repeated (user, item) pairs each contribute one.
///
/// The surviving interactions keep their input order.
pub fn k_core_filter(interactions: &[Interaction], k: usize) -> Vec<Interaction> {
    assert!(k >= 1, "k must be at least 1");

    let mut user_ix: HashMap<&str, usize> = HashMap::new();
    let mut item_ix: HashMap<&str, usize> = HashMap::new();
    let mut edges = Vec::with_capacity(interactions.len());
    for x in interactions {
        let n = user_ix.len();
        let u = *user_ix.entry(x.user_id.as_str()).or_insert(n);
        let n = item_ix.len();
        let i = *item_ix.entry(x.item_id.as_str()).or_insert(n);
        edges.push((u, i));
    }

    let mut user_edges = vec![Vec::new(); user_ix.len()];
    let mut item_edges = vec![Vec::new(); item_ix.len()];
    for (e, &(u, i)) in edges.iter().enumerate() {
        user_edges[u].push(e);
        item_edges[i].push(e);
    }
    let mut user_deg: Vec<usize> = user_edges.iter().map(Vec::len).collect();
    let mut item_deg: Vec<usize> = item_edges.iter().map(Vec::len).collect();
    let mut alive = vec![true; edges.len()];
    let mut user_gone = vec![false; user_deg.len()];
    let mut item_gone = vec![false; item_deg.len()];

    let mut stack: Vec<Node> = Vec::new();
    stack.extend((0..user_deg.len()).filter(|&u| user_deg[u] < k).map(Node::User));
    stack.extend((0..item_deg.len()).filter(|&i| item_deg[i] < k).map(Node::Item));

    while let Some(node) = stack.pop() {
        let incident = match node {
            Node::User(u) if !user_gone[u] => {
                user_gone[u] = true;
                &user_edges[u]
            }
            Node::Item(i) if !item_gone[i] => {
                item_gone[i] = true;
                &item_edges[i]
            }
            _ => continue,
        };
        for &e in incident {
            if !alive[e] {
                continue;
            }
            alive[e] = false;
            let (u, i) = edges[e];
            match node {
                Node::User(_) => {
                    item_deg[i] -= 1;
                    if item_deg[i] + 1 == k {
                        stack.push(Node::Item(i));
                    }
                }
                Node::Item(_) => {
                    user_deg[u] -= 1;
                    if user_deg[u] + 1 == k {
                        stack.push(Node::User(u));
                    }
                }
            }
        }
    }

    interactions
        .iter()
        .zip(alive)
        .filter(|(_, keep)| *keep)
        .map(|(x, _)| x.clone())
        .collect()
}
