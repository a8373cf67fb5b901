use reqwest::blocking::Client;
use serde_json::{json, Value};
use ytwin_core::recommenders::{ContentRecommender, ContentVariant, FollowRecommender, FollowVariant};
use ytwin_core::{AgentProfile, BigFive, NewsPreference, Platform, Range};
use ytwin_server::BackgroundServer;

fn profile(name: &str) -> AgentProfile {
    AgentProfile {
        name: name.into(),
        owner: "c0".into(),
        llm_model: "mock".into(),
        age: 40,
        languages: vec!["english".into()],
        education_level: "bachelor".into(),
        political_leaning: "Democrat".into(),
        nationality: "American".into(),
        interests: vec!["science".into()],
        big_five: BigFive::default(),
        content_recommender: ContentRecommender::new(ContentVariant::ReverseChrono, 5),
        follow_recommender: FollowRecommender::new(FollowVariant::CommonNeighbours, 5),
        round_actions: Range::new(1, 2),
        joined_round: 0,
        news_preference: NewsPreference::default(),
    }
}

fn call(c: &Client, base: &str, ep: &str, body: Value) -> (u16, Value) {
    let r = c.post(format!("{base}/{ep}")).json(&body).send().unwrap();
    let status = r.status().as_u16();
    (status, r.json().unwrap())
}

#[test]
fn primitives_over_http() {
    let server = BackgroundServer::start(Platform::in_memory()).unwrap();
    let base = server.url();
    let c = Client::new();

    for n in ["ann", "bob"] {
        let (s, v) = call(&c, &base, "register_agent", json!({ "profile": profile(n) }));
        assert_eq!(s, 200, "{v}");
    }
    let (s, v) = call(&c, &base, "register_agent", json!({ "profile": profile("ann") }));
    assert_eq!((s, v["error"].as_str()), (409, Some("DuplicateName")));
    assert!(v["detail"].as_str().unwrap().contains("ann"));

    let (s, v) = call(
        &c,
        &base,
        "post",
        json!({"author": "ann", "text": "Space is big #astro @bob"}),
    );
    assert_eq!(s, 200);
    let root = v["id"].as_u64().unwrap();
    let (s, _) = call(
        &c,
        &base,
        "comment",
        json!({"author": "bob", "text": "@ann agreed", "parent": root}),
    );
    assert_eq!(s, 200);

    let rec = json!({"id": "ReverseChrono", "k": 5});
    let (_, v) = call(&c, &base, "read", json!({"agent": "bob", "recommender": rec}));
    assert_eq!(v["items"].as_array().unwrap().len(), 1);
    let (_, v) = call(&c, &base, "reply", json!({"agent": "bob", "recommender": rec}));
    assert_eq!(v["items"][0]["content"]["id"].as_u64(), Some(root));

    let (s, _) = call(
        &c,
        &base,
        "reaction",
        json!({"agent": "bob", "content": root, "value": "LIKE"}),
    );
    assert_eq!(s, 200);
    let (s, v) = call(
        &c,
        &base,
        "reaction",
        json!({"agent": "bob", "content": 99, "value": "LIKE"}),
    );
    assert_eq!((s, v["error"].as_str()), (404, Some("UnknownContent")));

    let (s, v) = call(
        &c,
        &base,
        "follow",
        json!({"follower": "bob", "followee": "bob", "action": "FOLLOW"}),
    );
    assert_eq!((s, v["error"].as_str()), (422, Some("SelfFollow")));
    let (s, _) = call(
        &c,
        &base,
        "follow",
        json!({"follower": "bob", "followee": "ann", "action": "FOLLOW"}),
    );
    assert_eq!(s, 200);
    let (_, v) = call(
        &c,
        &base,
        "follow_suggestions",
        json!({"agent": "bob", "recommender": {"id": "Jaccard", "k": 3}}),
    );
    assert!(v["suggestions"].as_array().unwrap().is_empty());

    let (s, v) = call(
        &c,
        &base,
        "read",
        json!({"agent": "bob", "recommender": {"id": "Viral", "k": 1}}),
    );
    assert_eq!((s, v["error"].as_str()), (422, Some("UnknownRecommender")));

    let r = c.post(format!("{base}/post")).body("not json").send().unwrap();
    assert_eq!(r.status().as_u16(), 422);
    let v: Value = r.json().unwrap();
    assert_eq!(v["error"], "InvalidRequest");
}

#[test]
fn clock_over_http() {
    let server = BackgroundServer::start(Platform::in_memory()).unwrap();
    let base = server.url();
    let c = Client::new();
    let (s, v) = call(
        &c,
        &base,
        "register_client",
        json!({"client": "orch", "role": "orchestrator"}),
    );
    assert_eq!(s, 200, "{v}");
    call(&c, &base, "register_client", json!({"client": "w1", "role": "worker"}));

    let get: Value = c.get(format!("{base}/current_slot")).send().unwrap().json().unwrap();
    assert_eq!(get["round"], 0);

    let (s, v) = call(&c, &base, "advance_slot", json!({"client": "w1"}));
    assert_eq!((s, v["error"].as_str()), (403, Some("UnauthorizedAdvance")));
    let (s, v) = call(&c, &base, "advance_slot", json!({"client": "orch"}));
    assert_eq!((s, v["error"].as_str()), (409, Some("BarrierPending")));
    call(&c, &base, "slot_done", json!({"client": "w1", "round": 0}));
    let (s, v) = call(&c, &base, "advance_slot", json!({"client": "orch"}));
    assert_eq!((s, v["round"].as_u64()), (200, Some(1)));

    assert_eq!(server.platform().lock().clock().round, 1);
}

#[test]
fn persists_to_the_store_file() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("y.db");
    {
        let server = BackgroundServer::start(Platform::open(&db).unwrap()).unwrap();
        let c = Client::new();
        call(
            &c,
            &server.url(),
            "register_agent",
            json!({ "profile": profile("ann") }),
        );
        call(&c, &server.url(), "post", json!({"author": "ann", "text": "kept"}));
    }
    let p = Platform::open(&db).unwrap();
    assert_eq!(p.contents()[0].text, "kept");
}
