//! Small in-memory databases with hand-written query corpora, used to check
//! that every exact rewrite preserves query results.
//!
//! Corpus queries that combine `LIMIT` with a join always carry an
//! `ORDER BY`: without one the surviving rows depend on join order, which is
//! not a result the rewrites promise to keep.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{Relation, Value};
use crate::ir::{summarize_schema, RawTable, SchemaModel};

pub struct Fixture {
    pub name: &'static str,
    pub schema: SchemaModel,
    pub data: BTreeMap<String, Relation>,
    pub corpus: Vec<&'static str>,
}

type Gen = fn(&mut ChaCha8Rng, i64) -> Vec<Value>;

struct TableSpec {
    name: &'static str,
    rows: i64,
    columns: &'static [&'static str],
    gen: Gen,
}

const REGIONS: [&str; 4] = ["east", "north", "south", "west"];

fn int(v: i64) -> Value {
    Value::Int(v)
}

fn build(specs: &[TableSpec], seed: u64) -> (SchemaModel, BTreeMap<String, Relation>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = BTreeMap::new();
    let mut raw = Vec::new();
    for spec in specs {
        let rows: Vec<Vec<Value>> = (0..spec.rows).map(|i| (spec.gen)(&mut rng, i)).collect();
        let rel = Relation::new(spec.columns.iter().map(|c| c.to_string()).collect(), rows).expect("fixture shape");
        let distinct = rel.distinct_counts();
        let cols: Vec<(&str, u64)> = spec.columns.iter().copied().zip(distinct).collect();
        raw.push(RawTable::new(spec.name, rel.len() as u64, &cols));
        data.insert(spec.name.to_string(), rel);
    }
    (summarize_schema(raw).expect("fixture schema"), data)
}

fn shop() -> Fixture {
    let specs = [
        TableSpec {
            name: "orders",
            rows: 240,
            columns: &["id", "customer_id", "product_id", "qty", "price"],
            gen: |r, i| {
                vec![
                    int(i),
                    int(r.gen_range(0..30)),
                    int(r.gen_range(0..20)),
                    int(r.gen_range(1..6)),
                    Value::Float(r.gen_range(1..400) as f64 / 4.0),
                ]
            },
        },
        TableSpec {
            name: "customers",
            rows: 30,
            columns: &["id", "region", "tier"],
            gen: |r, i| {
                vec![
                    int(i),
                    Value::Str(REGIONS[r.gen_range(0..4)].into()),
                    int(r.gen_range(1..4)),
                ]
            },
        },
        TableSpec {
            name: "products",
            rows: 20,
            columns: &["id", "category", "weight"],
            gen: |r, i| vec![int(i), int(r.gen_range(0..5)), int(r.gen_range(1..50))],
        },
    ];
    let (schema, data) = build(&specs, 11);
    Fixture {
        name: "shop",
        schema,
        data,
        corpus: vec![
            "SELECT o.id, o.qty FROM orders o WHERE o.qty > 3",
            "SELECT SUM(o.price) FROM orders o WHERE o.qty >= 2",
            "SELECT o.product_id, COUNT(*) FROM orders o GROUP BY o.product_id",
            "SELECT o.customer_id, AVG(o.price), MAX(o.qty) FROM orders o WHERE o.price < 60 GROUP BY o.customer_id",
            "SELECT o.id, o.price FROM orders o ORDER BY o.price DESC LIMIT 7",
            "SELECT o.id FROM orders o LIMIT 12",
            "SELECT o.qty, o.price FROM orders o LIMIT 5",
            "SELECT c.region, c.tier FROM customers c WHERE c.region = 'north'",
            "SELECT o.id, c.region FROM orders o JOIN customers c ON o.customer_id = c.id WHERE c.tier = 2",
            "SELECT o.id, p.category FROM orders o JOIN products p ON o.product_id = p.id WHERE o.qty < 3 AND p.weight > 20",
            "SELECT c.region, SUM(o.price) FROM orders o JOIN customers c ON o.customer_id = c.id GROUP BY c.region",
            "SELECT o.customer_id, COUNT(*), SUM(o.qty) FROM orders o JOIN customers c ON o.customer_id = c.id \
             GROUP BY o.customer_id",
            "SELECT p.category, AVG(o.price), MIN(o.price) FROM orders o JOIN products p ON o.product_id = p.id \
             WHERE p.weight < 40 GROUP BY p.category",
            "SELECT o.id, c.tier, p.weight FROM orders o JOIN customers c ON o.customer_id = c.id \
             JOIN products p ON o.product_id = p.id WHERE c.region = 'east'",
            "SELECT c.region, p.category, COUNT(*) FROM orders o JOIN customers c ON o.customer_id = c.id \
             JOIN products p ON o.product_id = p.id GROUP BY c.region, p.category",
            "SELECT SUM(o.qty) FROM orders o JOIN products p ON o.product_id = p.id JOIN customers c \
             ON o.customer_id = c.id WHERE p.category = 1 AND c.tier >= 2",
            "SELECT o.id, o.price FROM orders o JOIN customers c ON o.customer_id = c.id \
             ORDER BY o.price LIMIT 6",
            "SELECT COUNT(*) FROM orders o JOIN customers c ON o.customer_id = c.id WHERE c.region <> 'west'",
            "SELECT o.product_id, SUM(o.price) FROM orders o JOIN products p ON o.product_id = p.id \
             GROUP BY o.product_id ORDER BY o.product_id",
            "SELECT p.id, p.weight FROM products p WHERE p.category = 3 ORDER BY p.weight DESC",
            "SELECT MAX(o.price), MIN(o.qty) FROM orders o JOIN products p ON o.product_id = p.id WHERE p.weight <= 10",
            "SELECT c.tier, AVG(o.qty) FROM customers c JOIN orders o ON c.id = o.customer_id GROUP BY c.tier",
        ],
    }
}

fn school() -> Fixture {
    let specs = [
        TableSpec {
            name: "enrollments",
            rows: 260,
            columns: &["id", "student_id", "course_id", "grade", "term"],
            gen: |r, i| {
                vec![
                    int(i),
                    int(r.gen_range(0..50)),
                    int(r.gen_range(0..15)),
                    int(r.gen_range(40..101)),
                    int(r.gen_range(1..5)),
                ]
            },
        },
        TableSpec {
            name: "students",
            rows: 50,
            columns: &["id", "year", "major_id"],
            gen: |r, i| vec![int(i), int(r.gen_range(1..5)), int(r.gen_range(0..6))],
        },
        TableSpec {
            name: "courses",
            rows: 15,
            columns: &["id", "dept", "credits"],
            gen: |r, i| vec![int(i), int(r.gen_range(0..4)), int(r.gen_range(1..5))],
        },
        TableSpec {
            name: "majors",
            rows: 6,
            columns: &["id", "faculty"],
            gen: |r, i| vec![int(i), Value::Str(["arts", "science", "law"][r.gen_range(0..3)].into())],
        },
    ];
    let (schema, data) = build(&specs, 23);
    Fixture {
        name: "school",
        schema,
        data,
        corpus: vec![
            "SELECT e.student_id, e.grade FROM enrollments e WHERE e.grade >= 90",
            "SELECT AVG(e.grade) FROM enrollments e WHERE e.term = 2",
            "SELECT e.course_id, COUNT(*), MAX(e.grade) FROM enrollments e GROUP BY e.course_id",
            "SELECT e.term, SUM(e.grade) FROM enrollments e WHERE e.grade < 70 AND e.term > 1 GROUP BY e.term",
            "SELECT e.id, e.grade FROM enrollments e ORDER BY e.grade DESC LIMIT 10",
            "SELECT e.id, e.term FROM enrollments e LIMIT 9",
            "SELECT s.id, s.year FROM students s WHERE s.major_id = 2",
            "SELECT e.id, s.year FROM enrollments e JOIN students s ON e.student_id = s.id WHERE s.year = 3",
            "SELECT e.grade, c.credits FROM enrollments e JOIN courses c ON e.course_id = c.id \
             WHERE c.dept = 1 AND e.grade > 55",
            "SELECT s.year, AVG(e.grade) FROM enrollments e JOIN students s ON e.student_id = s.id GROUP BY s.year",
            "SELECT e.course_id, COUNT(*) FROM enrollments e JOIN courses c ON e.course_id = c.id \
             GROUP BY e.course_id",
            "SELECT c.dept, SUM(c.credits), MIN(e.grade) FROM enrollments e JOIN courses c ON e.course_id = c.id \
             GROUP BY c.dept",
            "SELECT e.id, m.faculty FROM enrollments e JOIN students s ON e.student_id = s.id \
             JOIN majors m ON s.major_id = m.id WHERE m.faculty = 'law'",
            "SELECT m.faculty, COUNT(*) FROM enrollments e JOIN students s ON e.student_id = s.id \
             JOIN majors m ON s.major_id = m.id GROUP BY m.faculty",
            "SELECT s.year, c.dept, AVG(e.grade) FROM enrollments e JOIN students s ON e.student_id = s.id \
             JOIN courses c ON e.course_id = c.id WHERE e.term <= 2 GROUP BY s.year, c.dept",
            "SELECT e.id, c.credits, s.major_id FROM enrollments e JOIN courses c ON e.course_id = c.id \
             JOIN students s ON e.student_id = s.id WHERE c.credits = 3 AND s.year <> 1",
            "SELECT e.id, e.grade FROM enrollments e JOIN students s ON e.student_id = s.id \
             ORDER BY e.grade, e.id LIMIT 8",
            "SELECT COUNT(*) FROM enrollments e JOIN courses c ON e.course_id = c.id WHERE c.dept >= 2",
            "SELECT s.major_id, MAX(e.grade) FROM students s JOIN enrollments e ON s.id = e.student_id \
             GROUP BY s.major_id",
            "SELECT c.id, c.credits FROM courses c WHERE c.dept < 3 ORDER BY c.credits",
            "SELECT SUM(e.grade) FROM enrollments e JOIN students s ON e.student_id = s.id \
             JOIN majors m ON s.major_id = m.id WHERE m.faculty = 'arts'",
            "SELECT e.student_id, SUM(e.grade) FROM enrollments e JOIN courses c ON e.course_id = c.id \
             WHERE c.credits > 1 GROUP BY e.student_id ORDER BY e.student_id LIMIT 15",
        ],
    }
}

fn sensors() -> Fixture {
    let specs = [
        TableSpec {
            name: "readings",
            rows: 300,
            columns: &["id", "device_id", "hour", "temp", "load"],
            gen: |r, i| {
                vec![
                    int(i),
                    int(r.gen_range(0..25)),
                    int(r.gen_range(0..24)),
                    Value::Float(r.gen_range(-40..160) as f64 / 4.0),
                    int(r.gen_range(0..100)),
                ]
            },
        },
        TableSpec {
            name: "devices",
            rows: 25,
            columns: &["id", "site_id", "model"],
            gen: |r, i| vec![int(i), int(r.gen_range(0..8)), int(r.gen_range(0..3))],
        },
        TableSpec {
            name: "sites",
            rows: 8,
            columns: &["id", "region", "floor"],
            gen: |r, i| {
                vec![
                    int(i),
                    Value::Str(REGIONS[r.gen_range(0..4)].into()),
                    int(r.gen_range(0..4)),
                ]
            },
        },
    ];
    let (schema, data) = build(&specs, 37);
    Fixture {
        name: "sensors",
        schema,
        data,
        corpus: vec![
            "SELECT r.id, r.temp FROM readings r WHERE r.temp > 30",
            "SELECT AVG(r.temp), MAX(r.load) FROM readings r WHERE r.hour < 6",
            "SELECT r.device_id, COUNT(*) FROM readings r GROUP BY r.device_id",
            "SELECT r.hour, SUM(r.load), MIN(r.temp) FROM readings r WHERE r.load >= 50 GROUP BY r.hour",
            "SELECT r.id, r.load FROM readings r ORDER BY r.load DESC LIMIT 11",
            "SELECT r.temp FROM readings r LIMIT 4",
            "SELECT d.id, d.model FROM devices d WHERE d.site_id = 5",
            "SELECT r.id, d.model FROM readings r JOIN devices d ON r.device_id = d.id WHERE d.model = 1",
            "SELECT r.temp, d.site_id FROM readings r JOIN devices d ON r.device_id = d.id \
             WHERE r.temp < 0 AND d.model <> 2",
            "SELECT d.model, AVG(r.temp) FROM readings r JOIN devices d ON r.device_id = d.id GROUP BY d.model",
            "SELECT r.device_id, SUM(r.load), COUNT(*) FROM readings r JOIN devices d ON r.device_id = d.id \
             WHERE d.site_id < 4 GROUP BY r.device_id",
            "SELECT s.region, COUNT(*) FROM devices d JOIN sites s ON d.site_id = s.id GROUP BY s.region",
            "SELECT r.id, s.region FROM readings r JOIN devices d ON r.device_id = d.id \
             JOIN sites s ON d.site_id = s.id WHERE s.region = 'south'",
            "SELECT s.region, AVG(r.temp), MAX(r.temp) FROM readings r JOIN devices d ON r.device_id = d.id \
             JOIN sites s ON d.site_id = s.id GROUP BY s.region",
            "SELECT s.floor, d.model, SUM(r.load) FROM readings r JOIN devices d ON r.device_id = d.id \
             JOIN sites s ON d.site_id = s.id WHERE r.hour >= 12 GROUP BY s.floor, d.model",
            "SELECT COUNT(*) FROM readings r JOIN devices d ON r.device_id = d.id \
             JOIN sites s ON d.site_id = s.id WHERE s.floor = 0 AND r.load > 20",
            "SELECT r.id, r.temp FROM readings r JOIN devices d ON r.device_id = d.id \
             ORDER BY r.temp, r.id LIMIT 9",
            "SELECT MIN(r.hour) FROM readings r JOIN devices d ON r.device_id = d.id WHERE d.site_id >= 6",
            "SELECT d.site_id, MAX(r.load) FROM devices d JOIN readings r ON d.id = r.device_id GROUP BY d.site_id",
            "SELECT s.id, s.floor FROM sites s WHERE s.region <> 'east' ORDER BY s.floor DESC",
            "SELECT r.hour, COUNT(*) FROM readings r JOIN devices d ON r.device_id = d.id \
             WHERE d.model = 0 GROUP BY r.hour ORDER BY r.hour LIMIT 10",
            "SELECT d.model, r.hour FROM readings r JOIN devices d ON r.device_id = d.id \
             JOIN sites s ON d.site_id = s.id WHERE r.temp >= 35.5",
        ],
    }
}

/// The three fixture databases, identical on every call.
pub fn fixtures() -> Vec<Fixture> {
    vec![shop(), school(), sensors()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_sql;

    #[test]
    fn corpora_parse_and_evaluate() {
        for f in fixtures() {
            assert!(f.corpus.len() >= 20, "{}", f.name);
            for sql in &f.corpus {
                let ir = parse_sql(sql, &f.schema).unwrap_or_else(|e| panic!("{}: {sql}: {e}", f.name));
                crate::engine::evaluate_reference(&ir, &f.data).unwrap_or_else(|e| panic!("{sql}: {e}"));
            }
        }
    }

    #[test]
    fn fixtures_are_deterministic() {
        let (a, b) = (fixtures(), fixtures());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.schema, y.schema);
            for (name, rel) in &x.data {
                assert!(crate::engine::multiset_eq(rel, &y.data[name], 0.0));
            }
        }
    }
}
