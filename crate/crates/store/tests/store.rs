use std::sync::Arc;

use vanlearn_store::password::verify_password;
use vanlearn_store::{
    ActionKind, ManualClock, NewResult, Store, StoreError, Table, SESSION_TTL_MILLIS, TABLES,
};

fn store() -> Store {
    Store::open_in_memory().unwrap()
}

#[test]
fn duplicate_username_is_rejected() {
    let s = store();
    s.create_user("alice", "password1", "a@x").unwrap();
    let err = s.create_user("alice", "password2", "b@x").unwrap_err();
    assert_eq!(err.code(), "E_DUP_USERNAME");
}

#[test]
fn hashes_are_salted_per_user() {
    let s = store();
    let a = s.create_user("alice", "same-secret", "a@x").unwrap();
    let b = s.create_user("bobby", "same-secret", "b@x").unwrap();
    assert_ne!(a.password_hash, b.password_hash);
    assert!(verify_password("same-secret", &a.password_hash));
    assert!(!verify_password("other-secret", &a.password_hash));
}

#[test]
fn auth_failures_are_indistinguishable() {
    let s = store();
    s.create_user("alice", "password1", "a@x").unwrap();
    let wrong = s.authenticate("alice", "password2").unwrap_err();
    let unknown = s.authenticate("nobody", "password1").unwrap_err();
    assert_eq!(wrong.to_string(), unknown.to_string());
    assert_eq!(wrong.code(), "E_AUTH");
}

#[test]
fn sessions_expire_and_slide() {
    let clock = Arc::new(ManualClock::new(1_000));
    let s = store().with_clock(clock.clone());
    let user = s.create_user("alice", "password1", "a@x").unwrap();
    let token = s.authenticate("alice", "password1").unwrap();
    assert_eq!(token.expires_at, 1_000 + SESSION_TTL_MILLIS);

    clock.advance_millis(SESSION_TTL_MILLIS - 1);
    assert_eq!(s.session_user(&token.token).unwrap().unwrap().id, user.id);

    // that lookup pushed expiry a full day past "now"
    clock.advance_millis(SESSION_TTL_MILLIS - 1);
    assert!(s.session_user(&token.token).unwrap().is_some());

    clock.advance_millis(SESSION_TTL_MILLIS);
    assert!(s.session_user(&token.token).unwrap().is_none());
    assert_eq!(s.count_rows(Table::Sessions).unwrap(), 0);
}

#[test]
fn signed_out_tokens_stop_working() {
    let s = store();
    s.create_user("alice", "password1", "a@x").unwrap();
    let token = s.authenticate("alice", "password1").unwrap();
    assert!(s.end_session(&token.token).unwrap());
    assert!(s.session_user(&token.token).unwrap().is_none());
    assert!(s.session_user("never-issued").unwrap().is_none());
}

#[test]
fn raw_tokens_are_not_stored() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.db");
    let s = Store::open(&path).unwrap();
    s.create_user("alice", "password1", "a@x").unwrap();
    let token = s.authenticate("alice", "password1").unwrap();
    drop(s);
    let conn = rusqlite::Connection::open(&path).unwrap();
    let stored: String = conn.query_row("SELECT token_hash FROM sessions", [], |r| r.get(0)).unwrap();
    assert_ne!(stored, token.token);
    assert_eq!(stored.len(), 64);
}

#[test]
fn datasets_round_trip_and_respect_ownership() {
    let s = store();
    let a = s.create_user("alice", "password1", "a@x").unwrap();
    let b = s.create_user("bobby", "password1", "b@x").unwrap();
    assert!(s.list_datasets(a.id).unwrap().is_empty());

    let bytes = b"x,y\n1,2\n\xc3\xa9,3\n".to_vec();
    let stored = s.store_dataset(a.id, "tiny.csv", &bytes, 2, 2).unwrap();
    assert_eq!(s.load_dataset(a.id, stored.id).unwrap().csv_bytes, bytes);
    assert!(matches!(s.load_dataset(b.id, stored.id), Err(StoreError::Forbidden(_))));
    assert!(matches!(s.load_dataset(a.id, stored.id + 100), Err(StoreError::NotFound(_))));
    assert_eq!(s.list_datasets(a.id).unwrap().len(), 1);
    assert!(s.list_datasets(b.id).unwrap().is_empty());
}

#[test]
fn results_respect_ownership() {
    let s = store();
    let a = s.create_user("alice", "password1", "a@x").unwrap();
    let b = s.create_user("bobby", "password1", "b@x").unwrap();
    let r = s
        .store_result(
            a.id,
            &NewResult {
                algorithm: "dtree",
                model_json: "{\"m\":1}",
                output_json: "{}",
            },
        )
        .unwrap();
    assert_eq!(s.load_result(a.id, r.id).unwrap(), r);
    assert_eq!(s.load_result(b.id, r.id).unwrap_err().code(), "E_FORBIDDEN");
}

#[test]
fn actions_are_kept_in_order_across_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.db");
    let clock = Arc::new(ManualClock::new(10));
    let user = {
        let s = Store::open(&path).unwrap().with_clock(clock.clone());
        let u = s.create_user("alice", "password1", "a@x").unwrap();
        s.record_action(u.id, ActionKind::Upload, "first").unwrap();
        clock.advance_millis(5);
        s.record_action(u.id, ActionKind::Upload, "second").unwrap();
        u
    };
    let s = Store::open(&path).unwrap();
    let actions = s.actions_for(user.id).unwrap();
    let got: Vec<(&str, i64)> = actions.iter().map(|a| (a.detail.as_str(), a.at)).collect();
    assert_eq!(got, [("first", 10), ("second", 15)]);
    assert_eq!(s.table_names().unwrap(), TABLES.to_vec());
}

#[test]
fn hostile_strings_are_stored_literally() {
    let s = store();
    let name = "' OR '1'='1";
    let password = "x'); DROP TABLE users;--";
    s.create_user(name, password, "'; DELETE FROM users; --").unwrap();
    s.create_user("innocent", "password1", "i@x").unwrap();

    assert_eq!(s.authenticate(name, password).unwrap().user_id, 1);
    assert_eq!(s.authenticate("' OR '1'='1' --", password).unwrap_err().code(), "E_AUTH");
    assert_eq!(s.authenticate("innocent", "' OR '1'='1").unwrap_err().code(), "E_AUTH");

    assert_eq!(s.table_names().unwrap(), TABLES.to_vec());
    assert_eq!(s.count_rows(Table::Users).unwrap(), 2);
    let token = s.authenticate(name, password).unwrap();
    assert_eq!(s.session_user(&token.token).unwrap().unwrap().username, name);
}
