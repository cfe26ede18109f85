//! Relational storage for vanlearn: accounts, sessions, uploaded datasets,
//! the user action log and trained results.
//!
//! Backed by an embedded SQLite file. Every statement binds its inputs as
//! parameters; no SQL text is ever assembled from user data.

mod clock;
pub mod password;

use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use rand::RngCore;
use rusqlite::{params, Connection, OptionalExtension, Transaction};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use clock::{Clock, ManualClock, SystemClock};

/// Schema applied on open.
pub const MIGRATION: &str = include_str!("../migrations/0001_init.sql");

pub const TABLES: [&str; 5] = ["actions", "datasets", "results", "sessions", "users"];

pub const SESSION_TTL_MILLIS: i64 = 24 * 60 * 60 * 1000;

pub const USERNAME_CHARS: std::ops::RangeInclusive<usize> = 3..=32;
pub const MIN_PASSWORD_CHARS: usize = 8;

pub type UserId = i64;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("E_DUP_USERNAME: username is taken")]
    DupUsername,
    #[error("E_WEAK_PASSWORD: password must be at least {MIN_PASSWORD_CHARS} characters")]
    WeakPassword,
    #[error("E_BAD_USERNAME: username must be 3-32 printable characters")]
    BadUsername,
    #[error("E_AUTH: invalid username or password")]
    Auth,
    #[error("E_NOT_FOUND: {0} does not exist")]
    NotFound(&'static str),
    #[error("E_FORBIDDEN: {0} belongs to another user")]
    Forbidden(&'static str),
    #[error("E_STORAGE: {0}")]
    Sqlite(#[from] rusqlite::Error),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::DupUsername => "E_DUP_USERNAME",
            StoreError::WeakPassword => "E_WEAK_PASSWORD",
            StoreError::BadUsername => "E_BAD_USERNAME",
            StoreError::Auth => "E_AUTH",
            StoreError::NotFound(_) => "E_NOT_FOUND",
            StoreError::Forbidden(_) => "E_FORBIDDEN",
            StoreError::Sqlite(_) => "E_STORAGE",
        }
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserAccount {
    pub id: UserId,
    pub username: String,
    pub password_hash: String,
    pub email: String,
    pub created_at: i64,
}

/// An opaque bearer credential. Only a SHA-256 digest of `token` is
/// persisted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionToken {
    pub token: String,
    pub user_id: UserId,
    pub expires_at: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredDataset {
    pub id: i64,
    pub owner_id: UserId,
    pub name: String,
    pub csv_bytes: Vec<u8>,
    pub rows: usize,
    pub cols: usize,
    pub uploaded_at: i64,
}

/// Listing entry: a stored dataset without its payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetInfo {
    pub id: i64,
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub uploaded_at: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActionKind {
    Signin,
    Signup,
    Upload,
    Train,
    Predict,
    Download,
}

impl ActionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Signin => "signin",
            ActionKind::Signup => "signup",
            ActionKind::Upload => "upload",
            ActionKind::Train => "train",
            ActionKind::Predict => "predict",
            ActionKind::Download => "download",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "signin" => ActionKind::Signin,
            "signup" => ActionKind::Signup,
            "upload" => ActionKind::Upload,
            "train" => ActionKind::Train,
            "predict" => ActionKind::Predict,
            "download" => ActionKind::Download,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionRecord {
    pub id: i64,
    pub user_id: UserId,
    pub kind: ActionKind,
    pub detail: String,
    pub at: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredResult {
    pub id: i64,
    pub owner_id: UserId,
    pub algorithm: String,
    pub model_json: String,
    pub output_json: String,
    pub created_at: i64,
}

/// A result about to be inserted.
#[derive(Debug, Clone)]
pub struct NewResult<'a> {
    pub algorithm: &'a str,
    pub model_json: &'a str,
    pub output_json: &'a str,
}

fn token_digest(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

fn check_username(username: &str) -> Result<()> {
    let n = username.chars().count();
    if !USERNAME_CHARS.contains(&n) || username.chars().any(char::is_control) {
        return Err(StoreError::BadUsername);
    }
    Ok(())
}

fn user_from_row(row: &rusqlite::Row<'_>) -> rusqlite::Result<UserAccount> {
    Ok(UserAccount {
        id: row.get(0)?,
        username: row.get(1)?,
        password_hash: row.get(2)?,
        email: row.get(3)?,
        created_at: row.get(4)?,
    })
}

const USER_COLUMNS: &str = "id, username, password_hash, email, created_at";

/// Write access inside one transaction. Obtained from [`Store::transaction`].
pub struct Tx<'a> {
    tx: &'a Transaction<'a>,
    now: i64,
}

impl Tx<'_> {
    pub fn now(&self) -> i64 {
        self.now
    }

    pub fn create_user(&self, username: &str, password: &str, email: &str) -> Result<UserAccount> {
        check_username(username)?;
        if password.chars().count() < MIN_PASSWORD_CHARS {
            return Err(StoreError::WeakPassword);
        }
        let hash = password::hash_password(password);
        let inserted = self.tx.execute(
            "INSERT INTO users (username, password_hash, email, created_at) VALUES (?1, ?2, ?3, ?4)",
            params![username, hash, email, self.now],
        );
        match inserted {
            Ok(_) => {}
            Err(rusqlite::Error::SqliteFailure(e, _)) if e.code == rusqlite::ErrorCode::ConstraintViolation => {
                return Err(StoreError::DupUsername)
            }
            Err(e) => return Err(e.into()),
        }
        Ok(UserAccount {
            id: self.tx.last_insert_rowid(),
            username: username.to_owned(),
            password_hash: hash,
            email: email.to_owned(),
            created_at: self.now,
        })
    }

    pub fn user_by_name(&self, username: &str) -> Result<Option<UserAccount>> {
        Ok(self
            .tx
            .query_row(
                &format!("SELECT {USER_COLUMNS} FROM users WHERE username = ?1"),
                params![username],
                user_from_row,
            )
            .optional()?)
    }

    /// Checks credentials and opens a session. Unknown users and wrong
    /// passwords fail identically.
    pub fn authenticate(&self, username: &str, password: &str) -> Result<(UserAccount, SessionToken)> {
        let Some(user) = self.user_by_name(username)? else {
            password::dummy_verify(password);
            return Err(StoreError::Auth);
        };
        if !password::verify_password(password, &user.password_hash) {
            return Err(StoreError::Auth);
        }
        let mut raw = [0u8; 16];
        rand::rng().fill_bytes(&mut raw);
        let token = URL_SAFE_NO_PAD.encode(raw);
        let expires_at = self.now + SESSION_TTL_MILLIS;
        self.tx.execute(
            "INSERT INTO sessions (token_hash, user_id, expires_at) VALUES (?1, ?2, ?3)",
            params![token_digest(&token), user.id, expires_at],
        )?;
        let session = SessionToken {
            token,
            user_id: user.id,
            expires_at,
        };
        Ok((user, session))
    }

    /// Resolves a live session and slides its expiry forward. Expired
    /// sessions are deleted and resolve to nothing.
    pub fn session_user(&self, token: &str) -> Result<Option<UserAccount>> {
        let digest = token_digest(token);
        let found: Option<(i64, i64)> = self
            .tx
            .query_row(
                "SELECT user_id, expires_at FROM sessions WHERE token_hash = ?1",
                params![digest],
                |r| Ok((r.get(0)?, r.get(1)?)),
            )
            .optional()?;
        let Some((user_id, expires_at)) = found else {
            return Ok(None);
        };
        if expires_at <= self.now {
            self.tx
                .execute("DELETE FROM sessions WHERE token_hash = ?1", params![digest])?;
            return Ok(None);
        }
        self.tx.execute(
            "UPDATE sessions SET expires_at = ?1 WHERE token_hash = ?2",
            params![self.now + SESSION_TTL_MILLIS, digest],
        )?;
        Ok(self
            .tx
            .query_row(
                &format!("SELECT {USER_COLUMNS} FROM users WHERE id = ?1"),
                params![user_id],
                user_from_row,
            )
            .optional()?)
    }

    pub fn end_session(&self, token: &str) -> Result<bool> {
        let n = self
            .tx
            .execute("DELETE FROM sessions WHERE token_hash = ?1", params![token_digest(token)])?;
        Ok(n > 0)
    }

    pub fn store_dataset(
        &self,
        owner: UserId,
        name: &str,
        csv_bytes: &[u8],
        rows: usize,
        cols: usize,
    ) -> Result<StoredDataset> {
        self.tx.execute(
            "INSERT INTO datasets (owner_id, name, csv_bytes, row_count, col_count, uploaded_at)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
            params![owner, name, csv_bytes, rows as i64, cols as i64, self.now],
        )?;
        Ok(StoredDataset {
            id: self.tx.last_insert_rowid(),
            owner_id: owner,
            name: name.to_owned(),
            csv_bytes: csv_bytes.to_vec(),
            rows,
            cols,
            uploaded_at: self.now,
        })
    }

    pub fn load_dataset(&self, requester: UserId, id: i64) -> Result<StoredDataset> {
        let ds = self
            .tx
            .query_row(
                "SELECT id, owner_id, name, csv_bytes, row_count, col_count, uploaded_at
                 FROM datasets WHERE id = ?1",
                params![id],
                |r| {
                    Ok(StoredDataset {
                        id: r.get(0)?,
                        owner_id: r.get(1)?,
                        name: r.get(2)?,
                        csv_bytes: r.get(3)?,
                        rows: r.get::<_, i64>(4)? as usize,
                        cols: r.get::<_, i64>(5)? as usize,
                        uploaded_at: r.get(6)?,
                    })
                },
            )
            .optional()?
            .ok_or(StoreError::NotFound("dataset"))?;
        if ds.owner_id != requester {
            return Err(StoreError::Forbidden("dataset"));
        }
        Ok(ds)
    }

    pub fn list_datasets(&self, owner: UserId) -> Result<Vec<DatasetInfo>> {
        let mut stmt = self.tx.prepare(
            "SELECT id, name, row_count, col_count, uploaded_at FROM datasets
             WHERE owner_id = ?1 ORDER BY id",
        )?;
        let rows = stmt.query_map(params![owner], |r| {
            Ok(DatasetInfo {
                id: r.get(0)?,
                name: r.get(1)?,
                rows: r.get::<_, i64>(2)? as usize,
                cols: r.get::<_, i64>(3)? as usize,
                uploaded_at: r.get(4)?,
            })
        })?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    pub fn record_action(&self, user: UserId, kind: ActionKind, detail: &str) -> Result<ActionRecord> {
        self.tx.execute(
            "INSERT INTO actions (user_id, kind, detail, at) VALUES (?1, ?2, ?3, ?4)",
            params![user, kind.as_str(), detail, self.now],
        )?;
        Ok(ActionRecord {
            id: self.tx.last_insert_rowid(),
            user_id: user,
            kind,
            detail: detail.to_owned(),
            at: self.now,
        })
    }

    pub fn action_exists(&self, user: UserId, kind: ActionKind, detail: &str) -> Result<bool> {
        Ok(self
            .tx
            .query_row(
                "SELECT 1 FROM actions WHERE user_id = ?1 AND kind = ?2 AND detail = ?3 LIMIT 1",
                params![user, kind.as_str(), detail],
                |_| Ok(()),
            )
            .optional()?
            .is_some())
    }

    pub fn store_result(&self, owner: UserId, result: &NewResult<'_>) -> Result<StoredResult> {
        self.tx.execute(
            "INSERT INTO results (owner_id, algorithm, model_json, output_json, created_at)
             VALUES (?1, ?2, ?3, ?4, ?5)",
            params![owner, result.algorithm, result.model_json, result.output_json, self.now],
        )?;
        Ok(StoredResult {
            id: self.tx.last_insert_rowid(),
            owner_id: owner,
            algorithm: result.algorithm.to_owned(),
            model_json: result.model_json.to_owned(),
            output_json: result.output_json.to_owned(),
            created_at: self.now,
        })
    }

    pub fn load_result(&self, requester: UserId, id: i64) -> Result<StoredResult> {
        let res = self
            .tx
            .query_row(
                "SELECT id, owner_id, algorithm, model_json, output_json, created_at
                 FROM results WHERE id = ?1",
                params![id],
                |r| {
                    Ok(StoredResult {
                        id: r.get(0)?,
                        owner_id: r.get(1)?,
                        algorithm: r.get(2)?,
                        model_json: r.get(3)?,
                        output_json: r.get(4)?,
                        created_at: r.get(5)?,
                    })
                },
            )
            .optional()?
            .ok_or(StoreError::NotFound("result"))?;
        if res.owner_id != requester {
            return Err(StoreError::Forbidden("result"));
        }
        Ok(res)
    }

    pub fn actions_for(&self, user: UserId) -> Result<Vec<ActionRecord>> {
        let mut stmt = self
            .tx
            .prepare("SELECT id, user_id, kind, detail, at FROM actions WHERE user_id = ?1 ORDER BY id")?;
        let rows = stmt.query_map(params![user], |r| {
            let kind: String = r.get(2)?;
            Ok(ActionRecord {
                id: r.get(0)?,
                user_id: r.get(1)?,
                kind: ActionKind::parse(&kind).ok_or_else(|| {
                    rusqlite::Error::FromSqlConversionFailure(
                        2,
                        rusqlite::types::Type::Text,
                        format!("unknown action kind {kind:?}").into(),
                    )
                })?,
                detail: r.get(3)?,
                at: r.get(4)?,
            })
        })?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    pub fn count_rows(&self, table: Table) -> Result<i64> {
        let sql = match table {
            Table::Users => "SELECT COUNT(*) FROM users",
            Table::Sessions => "SELECT COUNT(*) FROM sessions",
            Table::Datasets => "SELECT COUNT(*) FROM datasets",
            Table::Actions => "SELECT COUNT(*) FROM actions",
            Table::Results => "SELECT COUNT(*) FROM results",
        };
        Ok(self.tx.query_row(sql, [], |r| r.get(0))?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    Users,
    Sessions,
    Datasets,
    Actions,
    Results,
}

/// Handle to the database. Cheap to share behind an `Arc`; statements are
/// serialized over one connection.
pub struct Store {
    conn: Mutex<Connection>,
    clock: Arc<dyn Clock>,
}

impl Store {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let conn = Connection::open(path)?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        Self::init(conn)
    }

    pub fn open_in_memory() -> Result<Self> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Self> {
        conn.pragma_update(None, "foreign_keys", true)?;
        conn.busy_timeout(std::time::Duration::from_secs(5))?;
        conn.execute_batch(MIGRATION)?;
        Ok(Self {
            conn: Mutex::new(conn),
            clock: Arc::new(SystemClock),
        })
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    fn lock(&self) -> MutexGuard<'_, Connection> {
        // a panic while holding the lock cannot leave a half-applied
        // transaction behind (it rolls back on drop), so poisoning is safe
        // to ignore
        self.conn.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Runs `f` in one transaction, committing only if it returns `Ok`.
    pub fn transaction<R, E>(&self, f: impl FnOnce(&Tx<'_>) -> Result<R, E>) -> Result<R, E>
    where
        E: From<StoreError>,
    {
        let mut conn = self.lock();
        let tx = conn.transaction().map_err(StoreError::from)?;
        let out = {
            let handle = Tx {
                tx: &tx,
                now: self.clock.now_millis(),
            };
            f(&handle)?
        };
        tx.commit().map_err(StoreError::from)?;
        Ok(out)
    }

    pub fn create_user(&self, username: &str, password: &str, email: &str) -> Result<UserAccount> {
        self.transaction(|tx| tx.create_user(username, password, email))
    }

    pub fn authenticate(&self, username: &str, password: &str) -> Result<SessionToken> {
        self.transaction(|tx| tx.authenticate(username, password).map(|(_, s)| s))
    }

    pub fn session_user(&self, token: &str) -> Result<Option<UserAccount>> {
        self.transaction(|tx| tx.session_user(token))
    }

    pub fn end_session(&self, token: &str) -> Result<bool> {
        self.transaction(|tx| tx.end_session(token))
    }

    pub fn store_dataset(
        &self,
        owner: UserId,
        name: &str,
        csv_bytes: &[u8],
        rows: usize,
        cols: usize,
    ) -> Result<StoredDataset> {
        self.transaction(|tx| tx.store_dataset(owner, name, csv_bytes, rows, cols))
    }

    pub fn load_dataset(&self, requester: UserId, id: i64) -> Result<StoredDataset> {
        self.transaction(|tx| tx.load_dataset(requester, id))
    }

    pub fn list_datasets(&self, owner: UserId) -> Result<Vec<DatasetInfo>> {
        self.transaction(|tx| tx.list_datasets(owner))
    }

    pub fn record_action(&self, user: UserId, kind: ActionKind, detail: &str) -> Result<ActionRecord> {
        self.transaction(|tx| tx.record_action(user, kind, detail))
    }

    pub fn actions_for(&self, user: UserId) -> Result<Vec<ActionRecord>> {
        self.transaction(|tx| tx.actions_for(user))
    }

    pub fn store_result(&self, owner: UserId, result: &NewResult<'_>) -> Result<StoredResult> {
        self.transaction(|tx| tx.store_result(owner, result))
    }

    pub fn load_result(&self, requester: UserId, id: i64) -> Result<StoredResult> {
        self.transaction(|tx| tx.load_result(requester, id))
    }

    pub fn count_rows(&self, table: Table) -> Result<i64> {
        self.transaction(|tx| tx.count_rows(table))
    }

    /// User tables currently present, sorted.
    pub fn table_names(&self) -> Result<Vec<String>> {
        let conn = self.lock();
        let mut stmt = conn.prepare(
            "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name",
        )?;
        let names = stmt.query_map([], |r| r.get(0))?;
        Ok(names.collect::<rusqlite::Result<_>>()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_has_exactly_five_tables() {
        let store = Store::open_in_memory().unwrap();
        assert_eq!(store.table_names().unwrap(), TABLES.to_vec());
    }

    #[test]
    fn username_and_password_rules() {
        let store = Store::open_in_memory().unwrap();
        assert!(matches!(store.create_user("ab", "longenough", "e"), Err(StoreError::BadUsername)));
        assert!(matches!(
            store.create_user(&"x".repeat(33), "longenough", "e"),
            Err(StoreError::BadUsername)
        ));
        assert!(matches!(store.create_user("alice", "short", "e"), Err(StoreError::WeakPassword)));
        assert!(store.create_user("alice", "longenough", "e").is_ok());
    }

    #[test]
    fn failed_transaction_leaves_nothing_behind() {
        let store = Store::open_in_memory().unwrap();
        let user = store.create_user("alice", "longenough", "a@x").unwrap();
        let out: Result<(), StoreError> = store.transaction(|tx| {
            tx.store_result(
                user.id,
                &NewResult {
                    algorithm: "kmeans",
                    model_json: "{}",
                    output_json: "{}",
                },
            )?;
            tx.record_action(user.id, ActionKind::Train, "x")?;
            Err(StoreError::NotFound("simulated failure"))
        });
        assert!(out.is_err());
        assert_eq!(store.count_rows(Table::Results).unwrap(), 0);
        assert_eq!(store.count_rows(Table::Actions).unwrap(), 0);
    }

    #[test]
    fn actions_cannot_be_rewritten() {
        let store = Store::open_in_memory().unwrap();
        let user = store.create_user("alice", "longenough", "a@x").unwrap();
        store.record_action(user.id, ActionKind::Upload, "d1").unwrap();
        let conn = store.lock();
        assert!(conn.execute("DELETE FROM actions", []).is_err());
        assert!(conn.execute("UPDATE actions SET detail = 'x'", []).is_err());
    }
}
