use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Group, TimeItem};
use crate::dataset::{CategoryId, Dataset, Hourly, Weekly};

/// Human-readable account of what a group's members have in common. Every phrase comes from
/// one payload of the itemset and nothing else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDescription {
    pub member_count: usize,
    pub demographics: Vec<String>,
    pub categories: Vec<String>,
    pub times: Vec<String>,
    pub pois: Vec<String>,
    pub text: String,
}

fn plural(noun: &str) -> String {
    let bytes = noun.as_bytes();
    let consonant_y = noun.ends_with('y')
        && bytes.len() >= 2
        && !b"aeiou".contains(&bytes[bytes.len() - 2]);
    if consonant_y {
        format!("{}ies", &noun[..noun.len() - 1])
    } else if ["s", "x", "z", "ch", "sh"].iter().any(|s| noun.ends_with(s)) {
        format!("{noun}es")
    } else {
        format!("{noun}s")
    }
}

fn hourly_phrase(h: Hourly) -> &'static str {
    match h {
        Hourly::Morning => "in the morning",
        Hourly::Afternoon => "in the afternoon",
        Hourly::Evening => "in the evening",
        Hourly::Night => "at night",
    }
}

fn weekly_phrase(w: Weekly) -> &'static str {
    match w {
        Weekly::Weekday => "on weekdays",
        Weekly::Weekend => "on weekends",
    }
}

fn join_and(parts: &[String]) -> String {
    match parts {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

pub fn describe(group: &Group, dataset: &Dataset) -> GroupDescription {
    let demographics: Vec<String> = group.demog_items.iter().map(|d| d.to_string()).collect();

    // One clause per category, qualified by the time items on that category.
    let mut per_category: BTreeMap<CategoryId, Vec<&TimeItem>> = BTreeMap::new();
    for &c in &group.category_items {
        per_category.entry(c).or_default();
    }
    for t in &group.time_items {
        per_category.entry(t.category()).or_default().push(t);
    }
    let mut categories = Vec::new();
    let mut times = Vec::new();
    let mut clauses = Vec::new();
    for (cat, qualifiers) in &per_category {
        let name = dataset.category_name(*cat);
        if group.category_items.contains(cat) {
            categories.push(name.to_string());
        }
        let mut clause = plural(name);
        for t in qualifiers {
            let phrase = match t {
                TimeItem::Hourly { hourly, .. } => hourly_phrase(*hourly),
                TimeItem::Weekly { weekly, .. } => weekly_phrase(*weekly),
            };
            times.push(format!("{name} {phrase}"));
            clause.push(' ');
            clause.push_str(phrase);
        }
        clauses.push(clause);
    }
    let pois: Vec<String> = group
        .poi_items
        .iter()
        .map(|&p| dataset.poi(p).id.clone())
        .collect();

    let mut predicates = Vec::new();
    if !demographics.is_empty() {
        predicates.push(format!("have {}", join_and(&demographics)));
    }
    if !clauses.is_empty() {
        predicates.push(format!("tend to visit {}", join_and(&clauses)));
    }
    if !pois.is_empty() {
        predicates.push(format!("checked in at {}", join_and(&pois)));
    }
    let text = format!("visitors who {}", predicates.join(" and "));

    GroupDescription {
        member_count: group.members.len(),
        demographics,
        categories,
        times,
        pois,
        text,
    }
}
