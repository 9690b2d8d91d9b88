//! Residence and nationality labeling on a hand-built corpus.
//!
//!     cargo run --example label_users

use chrono::{TimeZone, Utc};
use migrant_attachment::corpus::{FriendEdge, FriendGraph, Post};
use migrant_attachment::geo::{label_population, LabelConfig};
use migrant_attachment::cc;

fn post(user: &str, y: i32, m: u32, d: u32, country: &str) -> Post {
    Post {
        user_id: user.into(),
        timestamp: Utc.with_ymd_and_hms(y, m, d, 9, 0, 0).unwrap(),
        country: Some(cc(country)),
        language: None,
        hashtags: vec![],
    }
}

fn main() {
    let mut posts = Vec::new();
    // Anna: lives in France in 2018, posted from Italy before, Italian friends.
    for d in 1..=5 {
        posts.push(post("anna", 2018, 3, d, "FR"));
        posts.push(post("anna", 2016, 7, d, "IT"));
    }
    posts.push(post("anna", 2016, 8, 1, "IT"));
    for f in ["luca", "gio"] {
        for d in 1..=3 {
            posts.push(post(f, 2018, 1, d, "IT"));
        }
    }
    let friends = FriendGraph::from_edges(["luca", "gio"].map(|f| FriendEdge {
        user_id: "anna".into(),
        friend_id: f.into(),
    }));
    let pop = label_population(&posts, &friends, &LabelConfig::default());
    for p in pop.profiles.values() {
        println!(
            "{:<5} residence={:?} nationality={:?} migrant={:?}",
            p.user_id, p.residence, p.nationality, p.is_migrant
        );
    }
    println!("{:?}", pop.summary);
}
