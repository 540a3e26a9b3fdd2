use std::collections::{BTreeMap, BTreeSet};

use super::{CatalogError, Item};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Node {
    children: BTreeMap<String, Node>,
    items: BTreeSet<String>,
}

impl Node {
    fn collect_items(&self, out: &mut Vec<String>) {
        out.extend(self.items.iter().cloned());
        for child in self.children.values() {
            child.collect_items(out);
        }
    }
}

/// Category hierarchy built from item category paths. The root is unnamed;
/// its children are the top-level categories.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategoryTree {
    root: Node,
}

impl CategoryTree {
    pub fn from_items(items: &[Item]) -> Self {
        let mut root = Node::default();
        for item in items {
            let mut node = &mut root;
            for name in &item.category_path {
                node = node.children.entry(name.clone()).or_default();
            }
            node.items.insert(item.id.clone());
        }
        Self { root }
    }

    fn node<S: AsRef<str>>(&self, path: &[S]) -> Result<&Node, CatalogError> {
        let mut node = &self.root;
        for name in path {
            node = node
                .children
                .get(name.as_ref())
                .ok_or_else(|| CatalogError::NotFound(name.as_ref().to_string()))?;
        }
        Ok(node)
    }

    /// Name-sorted children of the node at `path`; empty at a leaf.
    pub fn children<S: AsRef<str>>(&self, path: &[S]) -> Result<Vec<String>, CatalogError> {
        Ok(self.node(path)?.children.keys().cloned().collect())
    }

    /// Ids of every item whose category path starts with `path`, sorted.
    pub fn items_under<S: AsRef<str>>(&self, path: &[S]) -> Result<Vec<String>, CatalogError> {
        let mut out = Vec::new();
        self.node(path)?.collect_items(&mut out);
        out.sort();
        Ok(out)
    }

    /// Ids of items whose category path is exactly `path`.
    pub fn items_at<S: AsRef<str>>(&self, path: &[S]) -> Result<Vec<String>, CatalogError> {
        Ok(self.node(path)?.items.iter().cloned().collect())
    }

    pub fn contains<S: AsRef<str>>(&self, path: &[S]) -> bool {
        self.node(path).is_ok()
    }

    pub fn is_leaf<S: AsRef<str>>(&self, path: &[S]) -> Result<bool, CatalogError> {
        Ok(self.node(path)?.children.is_empty())
    }

    /// The longest prefix of `path` that exists in the tree.
    pub fn valid_prefix<S: AsRef<str>>(&self, path: &[S]) -> Vec<String> {
        let mut node = &self.root;
        let mut out = Vec::new();
        for name in path {
            match node.children.get(name.as_ref()) {
                Some(child) => {
                    out.push(name.as_ref().to_string());
                    node = child;
                }
                None => break,
            }
        }
        out
    }
}
