#![allow(dead_code)]

use convsales::catalog::{Catalog, CategoryTree, Item, PriceRange};
use convsales::index::{HashEmbedder, VectorIndex};
use convsales::profiles::{DecisionStyle, Openness, UserProfile};

pub fn item(id: &str, path: &[&str], price: f64, title: &str, description: &str) -> Item {
    Item {
        id: id.into(),
        title: title.into(),
        description: description.into(),
        features: Vec::new(),
        price,
        category_path: path.iter().map(|s| s.to_string()).collect(),
        avg_rating: 4.3,
        rating_count: 5875,
        reviews: Vec::new(),
    }
}

pub fn profile(id: &str, o: Openness, s: DecisionStyle, needs: &str, budget: (f64, f64)) -> UserProfile {
    UserProfile {
        user_id: id.into(),
        general_preference: "Prefers comfortable everyday clothing.".into(),
        dialogue_openness: o,
        decision_style: s,
        target_category_path: vec!["Clothing".into(), "Tops".into()],
        target_needs: needs.into(),
        reason_to_purchase: "Replacing a worn out favorite.".into(),
        budget: PriceRange::new(budget.0, budget.1),
        target_item_ids: vec!["T1".into()],
    }
}

/// Catalog, tree, embedder and index built together.
pub struct World {
    pub catalog: Catalog,
    pub tree: CategoryTree,
    pub embedder: HashEmbedder,
    pub index: VectorIndex,
}

impl World {
    pub fn new(items: Vec<Item>) -> Self {
        let catalog = Catalog::new(items).unwrap();
        let tree = catalog.tree();
        let embedder = HashEmbedder::default();
        let index = VectorIndex::from_catalog(&catalog, &embedder).unwrap();
        Self {
            catalog,
            tree,
            embedder,
            index,
        }
    }

    pub fn tools(&self) -> convsales::agent::Toolbox<'_> {
        convsales::agent::Toolbox {
            catalog: &self.catalog,
            index: &self.index,
            embedder: &self.embedder,
            tree: &self.tree,
        }
    }
}

/// The shirt/pullover pair of a typical persuasion, plus fillers.
pub fn shirt_world() -> World {
    World::new(vec![
        item("B0SHIRT001", &["Clothing", "Tops"], 18.75, "Soft Cotton Crew Shirt", "soft breathable cotton crew shirt"),
        item("B097FFSP2R", &["Clothing", "Tops"], 54.50, "Soft Cotton Crew Pullover", "soft breathable cotton crew pullover"),
        item("B0TANK0001", &["Clothing", "Tops"], 12.00, "Plain Polyester Tank", "shiny polyester tank"),
        item("B0BOOT0001", &["Clothing", "Shoes"], 80.00, "Leather Hiking Boot", "waterproof leather boot"),
        item("B0SNEAK001", &["Clothing", "Shoes"], 45.00, "Mesh Running Sneaker", "light mesh running sneaker"),
    ])
}
