//! Shared test support: fixture corpora, fixture databases, and a scripted
//! chat-completion stub server.

#![allow(dead_code)]

pub mod oracle;

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn invoices_schema_text() -> String {
    std::fs::read_to_string(fixture_path("invoices_schema.txt"))
        .expect("schema fixture readable")
        .trim_end()
        .to_string()
}

pub fn invoices_reasoning_text() -> String {
    std::fs::read_to_string(fixture_path("invoices_reasoning.txt"))
        .expect("reasoning fixture readable")
        .trim_end()
        .to_string()
}

pub const INVOICES_QUESTION: &str =
    "What are the ids, date opened, name, and other details for all accounts?";
pub const INVOICES_GOLD_SQL: &str =
    "SELECT account_id, date_account_opened, account_name, other_account_details FROM Accounts";

/// DDL matching the reference schema text exactly (types, PRIMARY KEY and
/// NOT NULL flags all surface through PRAGMA table_info).
pub const INVOICES_DDL: &str = "
CREATE TABLE Customers (
  customer_id INTEGER PRIMARY KEY,
  customer_first_name VARCHAR(50),
  customer_middle_initial VARCHAR(1),
  customer_last_name VARCHAR(50),
  gender VARCHAR(1),
  email_address VARCHAR(255),
  login_name VARCHAR(80),
  login_password VARCHAR(20),
  phone_number VARCHAR(255),
  town_city VARCHAR(50),
  state_county_province VARCHAR(50),
  country VARCHAR(50)
);
CREATE TABLE Orders (
  order_id INTEGER PRIMARY KEY,
  customer_id INTEGER NOT NULL,
  date_order_placed DATETIME NOT NULL,
  order_details VARCHAR(255)
);
CREATE TABLE Invoices (
  invoice_number INTEGER PRIMARY KEY,
  order_id INTEGER NOT NULL,
  invoice_date DATETIME
);
CREATE TABLE Accounts (
  account_id INTEGER PRIMARY KEY,
  customer_id INTEGER NOT NULL,
  date_account_opened DATETIME,
  account_name VARCHAR(50),
  other_account_details VARCHAR(255)
);
CREATE TABLE Product_Categories (
  production_type_code VARCHAR(15) PRIMARY KEY,
  product_type_description VARCHAR(80),
  vat_rating DECIMAL(19,4)
);
CREATE TABLE Products (
  product_id INTEGER PRIMARY KEY,
  parent_product_id INTEGER,
  production_type_code VARCHAR(15) NOT NULL,
  unit_price DECIMAL(19,4),
  product_name VARCHAR(80),
  product_color VARCHAR(20),
  product_size VARCHAR(20)
);
CREATE TABLE Financial_Transactions (
  transaction_id INTEGER NOT NULL,
  account_id INTEGER NOT NULL,
  invoice_number INTEGER,
  transaction_type VARCHAR(15) NOT NULL,
  transaction_date DATETIME,
  transaction_amount DECIMAL(19,4),
  transaction_comment VARCHAR(255),
  other_transaction_details VARCHAR(255)
);
CREATE TABLE Order_Items (
  order_item_id INTEGER PRIMARY KEY,
  order_id INTEGER NOT NULL,
  product_id INTEGER NOT NULL,
  product_quantity VARCHAR(50),
  other_order_item_details VARCHAR(255)
);
CREATE TABLE Invoice_Line_Items (
  order_item_id INTEGER NOT NULL,
  invoice_number INTEGER NOT NULL,
  product_id INTEGER NOT NULL,
  product_title VARCHAR(80),
  product_quantity VARCHAR(50),
  product_price DECIMAL(19,4),
  derived_product_cost DECIMAL(19,4),
  derived_vat_payable DECIMAL(19,4),
  derived_total_cost DECIMAL(19,4)
);
";

pub const LIBRARY_DDL: &str = "
CREATE TABLE authors (author_id INTEGER PRIMARY KEY, name TEXT, country TEXT);
CREATE TABLE books (book_id INTEGER PRIMARY KEY, title TEXT, author_id INTEGER, year INTEGER, price REAL, genre TEXT);
CREATE TABLE loans (loan_id INTEGER PRIMARY KEY, book_id INTEGER, member TEXT, returned INTEGER);
INSERT INTO authors VALUES
  (1, 'Ada Baker', 'UK'), (2, 'Bruno Costa', 'Brazil'), (3, 'Chen Wei', 'China'),
  (4, 'Dana Ives', 'UK'), (5, 'Elif Kaya', 'Turkey'), (6, 'Franz Moor', NULL),
  (7, 'Greta Lund', 'Sweden'), (8, 'Hana Sato', 'Japan');
INSERT INTO books VALUES
  (1, 'Dawn', 1, 1998, 12.5, 'novel'),
  (2, 'Dusk', 1, 2004, 8.0, 'novel'),
  (3, 'Rivers', 2, 2010, 15.25, 'travel'),
  (4, 'Peaks', 2, 2012, NULL, 'travel'),
  (5, 'Circuits', 3, 2001, 30.0, 'tech'),
  (6, 'Signals', 3, 2006, 27.5, 'tech'),
  (7, 'Gardens', 4, 1995, 9.99, 'hobby'),
  (8, 'Orchids', 4, 2018, 14.0, 'hobby'),
  (9, 'Stars', 5, 2020, 22.0, 'science'),
  (10, 'Comets', 5, 2015, 19.5, 'science'),
  (11, 'Bread', 6, 1988, 7.25, 'cooking'),
  (12, 'Stews', 6, 1992, 6.75, 'cooking'),
  (13, 'Fjords', 7, 2009, 11.0, 'travel'),
  (14, 'Ice', 7, 2011, 13.5, 'novel'),
  (15, 'Waves', 8, 2003, 10.0, 'science'),
  (16, 'Tides', 8, 2007, 12.0, 'science'),
  (17, 'Echo', 1, 2016, 16.0, 'novel'),
  (18, 'Flux', 3, 2019, 35.0, 'tech'),
  (19, 'Loom', 4, 1999, 5.5, 'hobby'),
  (20, 'Drift', 7, 2021, 18.75, 'travel');
INSERT INTO loans VALUES
  (1, 1, 'mia', 1), (2, 2, 'mia', 0), (3, 5, 'noah', 1), (4, 5, 'olga', 0),
  (5, 9, 'pete', 1), (6, 13, 'quin', 0), (7, 14, 'rhea', 1), (8, 3, 'sam', 0),
  (9, 17, 'tess', 1), (10, 18, 'uma', 0), (11, 20, 'vik', 1), (12, 7, 'wes', 1);
";

pub const SHOP_DDL: &str = "
CREATE TABLE products (product_id INTEGER PRIMARY KEY, name TEXT, price REAL, category TEXT);
CREATE TABLE orders (order_id INTEGER PRIMARY KEY, product_id INTEGER, quantity INTEGER, customer TEXT);
INSERT INTO products VALUES
  (1, 'mug', 4.5, 'kitchen'), (2, 'pan', 19.99, 'kitchen'), (3, 'lamp', 23.0, 'home'),
  (4, 'rug', 48.5, 'home'), (5, 'pen', 1.75, 'office'), (6, 'desk', 120.0, 'office'),
  (7, 'fork', 2.25, 'kitchen'), (8, 'vase', 15.0, 'home'), (9, 'ink', 6.5, 'office'),
  (10, 'bowl', 7.0, 'kitchen');
INSERT INTO orders VALUES
  (1, 1, 2, 'ana'), (2, 2, 1, 'ben'), (3, 5, 10, 'cai'), (4, 6, 1, 'dee'),
  (5, 3, 3, 'eli'), (6, 7, 6, 'fay'), (7, 9, 4, 'gus'), (8, 10, 2, 'hal'),
  (9, 4, 1, 'ivy'), (10, 8, 2, 'jon'), (11, 1, 5, 'kim'), (12, 5, 3, 'lee'),
  (13, 2, 2, 'max'), (14, 3, 1, 'nia');
";

/// (question, gold SQL, db_id) for the 30-item fixture corpus:
/// 12 Easy, 10 Medium, 8 Hard under default weights and thresholds.
pub const CORPUS: &[(&str, &str, &str)] = &[
    // Easy (score <= 1)
    ("List all author names.", "SELECT name FROM authors", "library"),
    ("What are the titles of books published after 2000?", "SELECT title FROM books WHERE year > 2000", "library"),
    ("How many books are there?", "SELECT count(*) FROM books", "library"),
    ("What product categories exist?", "SELECT DISTINCT category FROM products", "shop"),
    ("Which products cost less than 10?", "SELECT name FROM products WHERE price < 10", "shop"),
    ("Which members have unreturned loans?", "SELECT member FROM loans WHERE returned = 0", "library"),
    ("List author names and countries alphabetically.", "SELECT name, country FROM authors ORDER BY name", "library"),
    ("What are the three newest book titles?", "SELECT title FROM books ORDER BY year DESC LIMIT 3", "library"),
    ("What is the average product price?", "SELECT avg(price) FROM products", "shop"),
    ("What is the most recent publication year?", "SELECT max(year) FROM books", "library"),
    ("Which customers ordered more than two items?", "SELECT customer FROM orders WHERE quantity > 2", "shop"),
    ("What are the names of all accounts?", "SELECT account_name FROM Accounts", "customers_and_invoices"),
    // Medium (1 < score <= 3)
    ("How many books has each author written?", "SELECT a.name, count(*) FROM books AS b JOIN authors AS a ON b.author_id = a.author_id GROUP BY a.name", "library"),
    ("List titles of books by UK authors alphabetically.", "SELECT b.title FROM books AS b JOIN authors AS a ON b.author_id = a.author_id WHERE a.country = 'UK' ORDER BY b.title", "library"),
    ("Which genres have more than two books?", "SELECT genre, count(*) FROM books GROUP BY genre HAVING count(*) > 2", "library"),
    ("What is the average price per category, highest first?", "SELECT category, avg(price) FROM products GROUP BY category ORDER BY avg(price) DESC", "shop"),
    ("Which authors wrote currently loaned-out books?", "SELECT a.name FROM loans AS l JOIN books AS b ON l.book_id = b.book_id JOIN authors AS a ON b.author_id = a.author_id WHERE l.returned = 0", "library"),
    ("What are the titles by authors with more than two books?", "SELECT title FROM books WHERE author_id IN (SELECT author_id FROM books GROUP BY author_id HAVING count(*) > 2)", "library"),
    ("List every product name and customer name together, sorted.", "SELECT name FROM products UNION SELECT customer FROM orders ORDER BY name", "shop"),
    ("What are the titles by Brazilian authors, sorted?", "SELECT b.title FROM books AS b, authors AS a WHERE b.author_id = a.author_id AND a.country = 'Brazil' ORDER BY b.title", "library"),
    ("Which genres have a book over 10, and at what top price?", "SELECT genre, max(price) FROM books GROUP BY genre HAVING max(price) > 10 ORDER BY genre", "library"),
    ("Which products have been ordered at least once?", "SELECT p.name FROM products AS p JOIN orders AS o ON p.product_id = o.product_id GROUP BY p.name", "shop"),
    // Hard (score > 3)
    ("How many loans per author, most loaned first?", "SELECT a.name, count(*) FROM loans AS l JOIN books AS b ON l.book_id = b.book_id JOIN authors AS a ON b.author_id = a.author_id GROUP BY a.name ORDER BY count(*) DESC", "library"),
    ("Which titles have open loans, sorted?", "SELECT title FROM books WHERE book_id IN (SELECT l.book_id FROM loans AS l JOIN books AS b ON l.book_id = b.book_id WHERE l.returned = 0 GROUP BY l.book_id) ORDER BY title", "library"),
    ("Which products were ordered in bulk or singly, sorted?", "SELECT p.name FROM products AS p JOIN orders AS o ON p.product_id = o.product_id WHERE o.quantity > 4 UNION SELECT p.name FROM products AS p JOIN orders AS o ON p.product_id = o.product_id WHERE o.quantity = 1 ORDER BY name", "shop"),
    ("Which authors beat the overall average book price?", "SELECT author_id FROM books GROUP BY author_id HAVING avg(price) > (SELECT avg(price) FROM books) ORDER BY author_id", "library"),
    ("Which authors have had a book returned, sorted?", "SELECT name FROM authors WHERE author_id IN (SELECT author_id FROM books WHERE book_id IN (SELECT book_id FROM loans WHERE returned = 1) GROUP BY author_id) ORDER BY name", "library"),
    ("Which countries account for more than one loan?", "SELECT a.country, count(*) FROM loans AS l JOIN books AS b ON l.book_id = b.book_id JOIN authors AS a ON b.author_id = a.author_id GROUP BY a.country HAVING count(*) > 1", "library"),
    ("Which categories sold over three units, by volume?", "SELECT p.category, sum(o.quantity) FROM products AS p JOIN orders AS o ON p.product_id = o.product_id GROUP BY p.category HAVING sum(o.quantity) > 3 ORDER BY sum(o.quantity) DESC", "shop"),
    ("Which above-average-priced titles have authors, sorted?", "SELECT b.title FROM books AS b JOIN authors AS a ON b.author_id = a.author_id WHERE b.price > (SELECT avg(price) FROM books) GROUP BY b.title ORDER BY b.title", "library"),
];

/// Lay out a corpus root: examples.json, tables.json, and
/// database/<db_id>/<db_id>.sqlite for the three fixture databases.
pub fn build_corpus_root(root: &Path) {
    build_examples_file(&root.join("examples.json"), CORPUS);
    std::fs::copy(fixture_path("tables.json"), root.join("tables.json")).unwrap();
    for (db_id, ddl) in [
        ("customers_and_invoices", INVOICES_DDL),
        ("library", LIBRARY_DDL),
        ("shop", SHOP_DDL),
    ] {
        build_db(root, db_id, ddl);
    }
}

pub fn build_db(root: &Path, db_id: &str, ddl: &str) -> PathBuf {
    let dir = root.join("database").join(db_id);
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(format!("{db_id}.sqlite"));
    let conn = rusqlite::Connection::open(&path).unwrap();
    conn.execute_batch(ddl).unwrap();
    conn.close().unwrap();
    path
}

pub fn build_examples_file(path: &Path, entries: &[(&str, &str, &str)]) {
    let array: Vec<serde_json::Value> = entries
        .iter()
        .map(|(question, query, db_id)| {
            serde_json::json!({
                "question": question,
                "query": query,
                "db_id": db_id,
            })
        })
        .collect();
    std::fs::write(path, serde_json::to_string_pretty(&array).unwrap()).unwrap();
}

/// Map question -> gold SQL, for gold-echo stubs.
pub fn gold_by_question(entries: &[(&str, &str, &str)]) -> HashMap<String, String> {
    entries
        .iter()
        .map(|(q, sql, _)| (q.to_string(), sql.to_string()))
        .collect()
}

// ── Stub chat-completion server ─────────────────────────────────────────

pub struct StubResponse {
    pub status: u16,
    pub content: String,
    pub delay: Duration,
}

impl StubResponse {
    pub fn ok(content: impl Into<String>) -> Self {
        StubResponse {
            status: 200,
            content: content.into(),
            delay: Duration::ZERO,
        }
    }

    pub fn status(status: u16) -> Self {
        StubResponse {
            status,
            content: String::new(),
            delay: Duration::ZERO,
        }
    }
}

type Behavior = dyn Fn(usize, &serde_json::Value) -> StubResponse + Send + Sync;

pub struct StubState {
    /// Raw request bodies, in arrival order.
    pub requests: Mutex<Vec<serde_json::Value>>,
    pub inflight: AtomicUsize,
    pub max_inflight: AtomicUsize,
    counter: AtomicUsize,
    behavior: Box<Behavior>,
}

impl StubState {
    pub fn request_count(&self) -> usize {
        self.requests.lock().unwrap().len()
    }

    pub fn max_inflight(&self) -> usize {
        self.max_inflight.load(Ordering::SeqCst)
    }
}

pub struct StubServer {
    pub addr: SocketAddr,
    pub state: Arc<StubState>,
}

impl StubServer {
    /// Spawn a stub server. `behavior` maps (request ordinal, request JSON)
    /// to a response; ordinals start at 0.
    pub fn start<F>(behavior: F) -> StubServer
    where
        F: Fn(usize, &serde_json::Value) -> StubResponse + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub server");
        let addr = listener.local_addr().unwrap();
        let state = Arc::new(StubState {
            requests: Mutex::new(Vec::new()),
            inflight: AtomicUsize::new(0),
            max_inflight: AtomicUsize::new(0),
            counter: AtomicUsize::new(0),
            behavior: Box::new(behavior),
        });

        let accept_state = Arc::clone(&state);
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let state = Arc::clone(&accept_state);
                std::thread::spawn(move || handle_connection(stream, &state));
            }
        });

        StubServer { addr, state }
    }

    /// Echo the gold SQL for the question found in the last user message.
    pub fn echo_gold(gold: HashMap<String, String>) -> StubServer {
        StubServer::start(move |_, body| {
            let question = last_user_question(body).unwrap_or_default();
            match gold.get(&question) {
                Some(sql) => StubResponse::ok(format!(
                    "Looking at the schema, the relevant tables are clear.\n\n```sql\n{sql}\n```"
                )),
                None => StubResponse::ok("```sql\nSELECT 1\n```"),
            }
        })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

/// The text after "Question: " in the last user message of a request body.
pub fn last_user_question(body: &serde_json::Value) -> Option<String> {
    let messages = body.get("messages")?.as_array()?;
    let user = messages
        .iter()
        .rev()
        .find(|m| m.get("role").and_then(|r| r.as_str()) == Some("user"))?;
    let content = user.get("content")?.as_str()?;
    let idx = content.rfind("Question: ")?;
    Some(content[idx + "Question: ".len()..].trim().to_string())
}

fn handle_connection(mut stream: TcpStream, state: &StubState) {
    let mut reader = BufReader::new(stream.try_clone().expect("clone stream"));
    let mut line = String::new();
    if reader.read_line(&mut line).is_err() || line.is_empty() {
        return;
    }

    let mut content_length = 0usize;
    loop {
        let mut header = String::new();
        if reader.read_line(&mut header).is_err() {
            return;
        }
        let header = header.trim_end();
        if header.is_empty() {
            break;
        }
        if let Some(value) = header.to_ascii_lowercase().strip_prefix("content-length:") {
            content_length = value.trim().parse().unwrap_or(0);
        }
    }

    let mut body = vec![0u8; content_length];
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    let body_json: serde_json::Value =
        serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null);

    let inflight = state.inflight.fetch_add(1, Ordering::SeqCst) + 1;
    state.max_inflight.fetch_max(inflight, Ordering::SeqCst);
    let ordinal = state.counter.fetch_add(1, Ordering::SeqCst);
    state.requests.lock().unwrap().push(body_json.clone());

    let response = (state.behavior)(ordinal, &body_json);
    if !response.delay.is_zero() {
        std::thread::sleep(response.delay);
    }

    let payload = if response.status == 200 {
        serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": response.content}}]
        })
        .to_string()
    } else {
        serde_json::json!({"error": {"code": response.status}}).to_string()
    };
    let reason = match response.status {
        200 => "OK",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Error",
    };
    let http = format!(
        "HTTP/1.1 {} {}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        response.status,
        reason,
        payload.len(),
        payload
    );
    // Decrement before the write: once the response bytes are out, the
    // client may immediately issue its next request, and counting both
    // would overstate concurrency.
    state.inflight.fetch_sub(1, Ordering::SeqCst);
    let _ = stream.write_all(http.as_bytes());
    let _ = stream.flush();
}
