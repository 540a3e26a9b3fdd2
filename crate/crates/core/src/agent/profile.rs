use serde_json::{json, Value};

use crate::catalog::{Catalog, CategoryTree, PriceRange};

/// What the recommender has learned about the seeker so far. Rebuilt by the
/// planner every turn; the returned profile replaces the previous one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContextualProfile {
    pub preference: String,
    pub category_path: Vec<String>,
    pub personality: String,
    pub price_min: f64,
    pub price_max: Option<f64>,
    pub selected_item_id: Option<String>,
}

impl ContextualProfile {
    pub fn to_json(&self) -> Value {
        json!({
            "Preference": self.preference,
            "Category Path": self.category_path,
            "Personality": self.personality,
            "Expected Price Range": [self.price_min, self.price_max],
            "Selected Item ID": self.selected_item_id.clone().unwrap_or_default(),
        })
    }

    /// The budget, once an upper bound is known.
    pub fn budget(&self) -> Option<PriceRange> {
        self.price_max.map(|max| PriceRange::new(self.price_min.min(max), max))
    }

    /// Text the strategy memory is keyed on.
    pub fn memory_text(&self) -> String {
        let path = if self.category_path.is_empty() {
            "unknown".to_string()
        } else {
            self.category_path.join(" > ")
        };
        let personality = if self.personality.trim().is_empty() {
            "unknown"
        } else {
            self.personality.trim()
        };
        format!(
            "Preference: {}. Category: {path}. Personality: {personality}.",
            self.preference.trim()
        )
    }

    /// Parses the `Profile` object of a planner reply. Unknown or empty
    /// fields fall back to `prev`.
    pub fn from_json(v: &Value, prev: &ContextualProfile) -> Result<Self, String> {
        let obj = v.as_object().ok_or("Profile must be an object")?;
        let preference = match obj.get("Preference") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Array(a)) => strings(a).join(", "),
            Some(Value::Object(m)) => m
                .iter()
                .map(|(k, v)| format!("{k}: {}", scalar(v)))
                .collect::<Vec<_>>()
                .join("; "),
            None | Some(Value::Null) => prev.preference.clone(),
            Some(other) => return Err(format!("Preference has unexpected type: {other}")),
        };
        let category_path = match obj.get("Category Path") {
            Some(Value::Array(a)) => strings(a),
            Some(Value::String(s)) => s
                .split('>')
                .map(|p| p.trim().to_string())
                .filter(|p| !p.is_empty())
                .collect(),
            _ => prev.category_path.clone(),
        };
        let personality = match obj.get("Personality") {
            Some(Value::Null) | None => prev.personality.clone(),
            Some(v) => scalar(v),
        };
        let (price_min, price_max) = match obj.get("Expected Price Range") {
            Some(Value::Array(a)) if !a.is_empty() => {
                // prices are never negative; a reversed pair is swapped
                let min = a.first().and_then(number).unwrap_or(0.0).max(0.0);
                let max = a.get(1).and_then(number).map(|m| m.max(0.0));
                match max {
                    Some(max) if max < min => (max, Some(min)),
                    _ => (min, max),
                }
            }
            _ => (prev.price_min, prev.price_max),
        };
        let selected_item_id = match obj.get("Selected Item ID") {
            Some(Value::String(s)) => non_empty_id(s),
            Some(Value::Null) => None,
            None => prev.selected_item_id.clone(),
            Some(other) => non_empty_id(&scalar(other)),
        };
        Ok(Self {
            preference,
            category_path,
            personality,
            price_min,
            price_max,
            selected_item_id,
        })
    }

    /// Drops whatever the planner made up: path segments not in the tree
    /// and item ids not in the catalog.
    pub fn sanitize(&mut self, tree: &CategoryTree, catalog: &Catalog) {
        self.category_path = tree.valid_prefix(&self.category_path);
        if self.selected_item_id.as_deref().is_some_and(|id| catalog.get(id).is_none()) {
            self.selected_item_id = None;
        }
    }
}

fn strings(a: &[Value]) -> Vec<String> {
    a.iter()
        .map(scalar)
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty() && s != "...")
        .collect()
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Accepts numbers and strings like "$31.92".
pub fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().trim_start_matches('$').replace(',', "").parse().ok(),
        _ => None,
    }
    .filter(|x: &f64| x.is_finite())
}

fn non_empty_id(s: &str) -> Option<String> {
    let s = s.trim().trim_matches('"');
    let lower = s.to_ascii_lowercase();
    (!s.is_empty() && !matches!(lower.as_str(), "none" | "null" | "n/a" | "..."))
        .then(|| s.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::tests::item;

    #[test]
    fn parses_planner_profile() {
        let v = json!({
            "Preference": "soft cotton",
            "Category Path": ["Clothing", "Tops"],
            "Personality": "Rational",
            "Expected Price Range": ["$0", "$31.92"],
            "Selected Item ID": "None"
        });
        let p = ContextualProfile::from_json(&v, &ContextualProfile::default()).unwrap();
        assert_eq!(p.category_path, vec!["Clothing", "Tops"]);
        assert_eq!(p.price_max, Some(31.92));
        assert_eq!(p.selected_item_id, None);
        assert_eq!(p.budget().unwrap().max, 31.92);
    }

    #[test]
    fn missing_fields_keep_previous() {
        let prev = ContextualProfile {
            preference: "warm".into(),
            price_max: Some(10.0),
            ..Default::default()
        };
        let p = ContextualProfile::from_json(&json!({"Category Path": "A > B"}), &prev).unwrap();
        assert_eq!(p.preference, "warm");
        assert_eq!(p.price_max, Some(10.0));
        assert_eq!(p.category_path, vec!["A", "B"]);
        let p = ContextualProfile::from_json(&json!({"Expected Price Range": [40, 20]}), &prev).unwrap();
        assert_eq!((p.price_min, p.price_max), (20.0, Some(40.0)));
        assert!(ContextualProfile::from_json(&json!("x"), &prev).is_err());
    }

    #[test]
    fn sanitize_clamps_path_and_id() {
        let items = vec![item("t1", &["Clothing", "Tops"], 1.0)];
        let cat = Catalog::new(items.clone()).unwrap();
        let tree = CategoryTree::from_items(&items);
        let mut p = ContextualProfile {
            category_path: vec!["Clothing".into(), "Socks".into()],
            selected_item_id: Some("ghost".into()),
            ..Default::default()
        };
        p.sanitize(&tree, &cat);
        assert_eq!(p.category_path, vec!["Clothing"]);
        assert_eq!(p.selected_item_id, None);
    }
}
