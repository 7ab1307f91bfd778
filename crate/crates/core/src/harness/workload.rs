use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::engine::ResourceSnapshot;
use crate::ir::{parse_sql, summarize_schema, RawTable, SchemaModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    FilterAgg,
    Limit,
    Join2,
    Join3,
    GroupJoin,
}

impl Template {
    pub const ALL: [Template; 5] = [
        Template::FilterAgg,
        Template::Limit,
        Template::Join2,
        Template::Join3,
        Template::GroupJoin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Template::FilterAgg => "filter_agg",
            Template::Limit => "limit",
            Template::Join2 => "join2",
            Template::Join3 => "join3",
            Template::GroupJoin => "group_join",
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaKind {
    Taxi,
    Movies,
}

impl SchemaKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemaKind::Taxi => "taxi",
            SchemaKind::Movies => "movies",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadProfile {
    pub n_queries: usize,
    /// Schemas with their template catalogue sizes.
    pub schemas: Vec<(SchemaKind, usize)>,
    /// Relative template weights; counts use largest remainders.
    pub mix: BTreeMap<Template, f64>,
    pub max_cpu_load: f64,
    pub max_memory_in_use: f64,
}

impl Default for WorkloadProfile {
    fn default() -> Self {
        Self {
            n_queries: 240,
            schemas: vec![(SchemaKind::Taxi, 24), (SchemaKind::Movies, 16)],
            mix: [
                (Template::FilterAgg, 0.25),
                (Template::Limit, 0.15),
                (Template::Join2, 0.25),
                (Template::Join3, 0.15),
                (Template::GroupJoin, 0.20),
            ]
            .into(),
            max_cpu_load: 0.6,
            max_memory_in_use: 8_388_608.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadQuery {
    pub query_id: String,
    pub schema: String,
    pub template: Template,
    pub template_id: String,
    pub sql: String,
    pub resources: ResourceSnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub seed: u64,
    pub schemas: BTreeMap<String, SchemaModel>,
    pub queries: Vec<WorkloadQuery>,
}

impl Workload {
    pub fn schema_of(&self, q: &WorkloadQuery) -> Result<&SchemaModel, HarnessError> {
        self.schemas
            .get(&q.schema)
            .ok_or_else(|| HarnessError::InvalidWorkload(format!("{}: unknown schema `{}`", q.query_id, q.schema)))
    }

    /// Unique ids and parseable SQL.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut seen = std::collections::BTreeSet::new();
        for q in &self.queries {
            if !seen.insert(&q.query_id) {
                return Err(HarnessError::InvalidWorkload(format!("duplicate query id `{}`", q.query_id)));
            }
            parse_sql(&q.sql, self.schema_of(q)?)
                .map_err(|e| HarnessError::InvalidWorkload(format!("{}: {e}", q.query_id)))?;
        }
        Ok(())
    }
}

/// Splits `n` items by `weights` with the largest-remainder rule; ties in
/// remainder go to the earlier entry.
pub fn largest_remainder(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

// Column roles used by the templates.
const KEY: u8 = 0;
const EQ: u8 = 1;
const RANGE: u8 = 2;
const MEASURE: u8 = 3;

struct TableDef {
    name: &'static str,
    rows: u64,
    columns: &'static [(&'static str, u64, u8)],
}

/// `from.column -> to.column`, many-to-one.
struct Edge {
    from: &'static str,
    fk: &'static str,
    to: &'static str,
    pk: &'static str,
}

struct SchemaDef {
    tables: &'static [TableDef],
    edges: &'static [Edge],
    /// Tables large enough for single-table templates.
    facts: &'static [&'static str],
}

const TAXI: SchemaDef = SchemaDef {
    tables: &[
        TableDef {
            name: "trips",
            rows: 200_000,
            columns: &[
                ("trip_id", 200_000, KEY),
                ("vendor_id", 4, KEY),
                ("pickup_zone", 260, KEY),
                ("dropoff_zone", 260, KEY),
                ("driver_id", 20_000, KEY),
                ("pay_type", 5, KEY),
                ("passengers", 7, EQ),
                ("hour", 24, EQ),
                ("fare", 5_000, MEASURE),
                ("tip", 1_000, MEASURE),
                ("distance", 3_000, RANGE),
            ],
        },
        TableDef {
            name: "zones",
            rows: 260,
            columns: &[
                ("zone_id", 260, KEY),
                ("borough", 6, EQ),
                ("service_zone", 4, EQ),
                ("area", 200, RANGE),
            ],
        },
        TableDef {
            name: "drivers",
            rows: 20_000,
            columns: &[
                ("driver_id", 20_000, KEY),
                ("vendor_id", 4, KEY),
                ("shift", 3, EQ),
                ("rating", 50, RANGE),
                ("years", 30, MEASURE),
            ],
        },
        TableDef {
            name: "vendors",
            rows: 4,
            columns: &[("vendor_id", 4, KEY), ("vendor_name", 4, EQ), ("fleet", 3, EQ)],
        },
        TableDef {
            name: "payments",
            rows: 5,
            columns: &[("pay_type", 5, KEY), ("pay_label", 5, EQ), ("card", 2, EQ)],
        },
    ],
    edges: &[
        Edge { from: "trips", fk: "pickup_zone", to: "zones", pk: "zone_id" },
        Edge { from: "trips", fk: "dropoff_zone", to: "zones", pk: "zone_id" },
        Edge { from: "trips", fk: "driver_id", to: "drivers", pk: "driver_id" },
        Edge { from: "trips", fk: "vendor_id", to: "vendors", pk: "vendor_id" },
        Edge { from: "trips", fk: "pay_type", to: "payments", pk: "pay_type" },
        Edge { from: "drivers", fk: "vendor_id", to: "vendors", pk: "vendor_id" },
    ],
    facts: &["trips"],
};

const MOVIES: SchemaDef = SchemaDef {
    tables: &[
        TableDef {
            name: "title",
            rows: 100_000,
            columns: &[
                ("movie_id", 100_000, KEY),
                ("kind_id", 7, KEY),
                ("genre", 25, EQ),
                ("production_year", 130, RANGE),
                ("rating", 100, RANGE),
                ("votes", 5_000, MEASURE),
            ],
        },
        TableDef {
            name: "cast_info",
            rows: 180_000,
            columns: &[
                ("cast_id", 180_000, KEY),
                ("movie_id", 100_000, KEY),
                ("person_id", 60_000, KEY),
                ("role_id", 12, EQ),
                ("nr_order", 50, MEASURE),
            ],
        },
        TableDef {
            name: "movie_info",
            rows: 150_000,
            columns: &[
                ("info_id", 150_000, KEY),
                ("movie_id", 100_000, KEY),
                ("info_type_id", 100, KEY),
                ("info_year", 130, RANGE),
                ("info_value", 2_000, MEASURE),
            ],
        },
        TableDef {
            name: "person",
            rows: 60_000,
            columns: &[
                ("person_id", 60_000, KEY),
                ("gender", 3, EQ),
                ("country", 80, EQ),
                ("birth_year", 100, RANGE),
            ],
        },
        TableDef {
            name: "kind_type",
            rows: 7,
            columns: &[("kind_id", 7, KEY), ("kind_name", 7, EQ)],
        },
        TableDef {
            name: "info_type",
            rows: 100,
            columns: &[("info_type_id", 100, KEY), ("info_name", 100, EQ)],
        },
    ],
    edges: &[
        Edge { from: "cast_info", fk: "movie_id", to: "title", pk: "movie_id" },
        Edge { from: "cast_info", fk: "person_id", to: "person", pk: "person_id" },
        Edge { from: "movie_info", fk: "movie_id", to: "title", pk: "movie_id" },
        Edge { from: "movie_info", fk: "info_type_id", to: "info_type", pk: "info_type_id" },
        Edge { from: "title", fk: "kind_id", to: "kind_type", pk: "kind_id" },
    ],
    facts: &["title", "cast_info", "movie_info"],
};

fn def(kind: SchemaKind) -> &'static SchemaDef {
    match kind {
        SchemaKind::Taxi => &TAXI,
        SchemaKind::Movies => &MOVIES,
    }
}

impl SchemaDef {
    fn table(&self, name: &str) -> &TableDef {
        self.tables.iter().find(|t| t.name == name).expect("table defined")
    }

    fn model(&self) -> SchemaModel {
        summarize_schema(
            self.tables
                .iter()
                .map(|t| {
                    let cols: Vec<(&str, u64)> = t.columns.iter().map(|&(c, d, _)| (c, d)).collect();
                    RawTable::new(t.name, t.rows, &cols)
                })
                .collect::<Vec<_>>(),
        )
        .expect("static schema is valid")
    }
}

pub fn schema_model(kind: SchemaKind) -> SchemaModel {
    def(kind).model()
}

fn columns_with(t: &TableDef, role: u8) -> Vec<(&'static str, u64)> {
    t.columns.iter().filter(|c| c.2 == role).map(|&(n, d, _)| (n, d)).collect()
}

/// A random filter on `alias.table`, or `None` if it has no filterable column.
fn predicate(rng: &mut ChaCha8Rng, lit: &mut ChaCha8Rng, alias: &str, t: &TableDef) -> Option<String> {
    let eq = columns_with(t, EQ);
    let range = columns_with(t, RANGE);
    let use_range = !range.is_empty() && (eq.is_empty() || rng.gen_bool(0.4));
    if use_range {
        let (c, d) = *range.choose(rng)?;
        let op = if rng.gen_bool(0.5) { ">" } else { "<" };
        Some(format!("{alias}.{c} {op} {}", lit.gen_range(0..d)))
    } else {
        let (c, d) = *eq.choose(rng)?;
        Some(format!("{alias}.{c} = {}", lit.gen_range(0..d)))
    }
}

fn non_key_column(rng: &mut ChaCha8Rng, t: &TableDef) -> &'static str {
    let cols: Vec<&'static str> = t.columns.iter().filter(|c| c.2 != KEY).map(|c| c.0).collect();
    cols.choose(rng).copied().unwrap_or(t.columns[0].0)
}

fn measure(rng: &mut ChaCha8Rng, t: &TableDef) -> &'static str {
    let m = columns_with(t, MEASURE);
    m.choose(rng).map(|c| c.0).unwrap_or_else(|| non_key_column(rng, t))
}

fn aggregate(rng: &mut ChaCha8Rng, alias: &str, t: &TableDef) -> String {
    let f = ["SUM", "AVG", "MIN", "MAX"].choose(rng).expect("non-empty");
    format!("{f}({alias}.{})", measure(rng, t))
}

fn where_clause(preds: &[String]) -> String {
    if preds.is_empty() {
        String::new()
    } else {
        format!(" WHERE {}", preds.join(" AND "))
    }
}

fn gen_filter_agg(rng: &mut ChaCha8Rng, lit: &mut ChaCha8Rng, s: &SchemaDef) -> String {
    let t = s.table(s.facts.choose(rng).expect("facts"));
    let n_preds = rng.gen_range(1..=2);
    let preds: Vec<String> = (0..n_preds).filter_map(|_| predicate(rng, lit, "f", t)).collect();
    debug_assert!(!preds.is_empty(), "fact tables carry a filterable column");
    let eq = columns_with(t, EQ);
    let grouped = !eq.is_empty() && rng.gen_bool(0.5);
    if grouped {
        let g = eq.choose(rng).expect("eq column").0;
        format!(
            "SELECT f.{g}, COUNT(*), {} FROM {} f{} GROUP BY f.{g}",
            aggregate(rng, "f", t),
            t.name,
            where_clause(&preds)
        )
    } else {
        format!("SELECT COUNT(*), {} FROM {} f{}", aggregate(rng, "f", t), t.name, where_clause(&preds))
    }
}

fn gen_limit(rng: &mut ChaCha8Rng, _lit: &mut ChaCha8Rng, s: &SchemaDef) -> String {
    let t = s.table(s.facts.choose(rng).expect("facts"));
    let a = non_key_column(rng, t);
    let b = measure(rng, t);
    let cols = if a == b { format!("f.{a}") } else { format!("f.{a}, f.{b}") };
    let n = [10, 50, 100][rng.gen_range(0..3)];
    format!("SELECT {cols} FROM {} f LIMIT {n}", t.name)
}

fn gen_join2(rng: &mut ChaCha8Rng, lit: &mut ChaCha8Rng, s: &SchemaDef) -> String {
    let e = s.edges.choose(rng).expect("edges");
    let (f, d) = (s.table(e.from), s.table(e.to));
    let mut preds = Vec::new();
    for (alias, t) in [("f", f), ("d", d)] {
        if rng.gen_bool(0.5) {
            preds.extend(predicate(rng, lit, alias, t));
        }
    }
    if preds.is_empty() {
        preds.extend(predicate(rng, lit, "f", f).or_else(|| predicate(rng, lit, "d", d)));
    }
    format!(
        "SELECT f.{}, d.{} FROM {} f JOIN {} d ON f.{} = d.{}{}",
        measure(rng, f),
        non_key_column(rng, d),
        f.name,
        d.name,
        e.fk,
        e.pk,
        where_clause(&preds)
    )
}

fn gen_join3(rng: &mut ChaCha8Rng, lit: &mut ChaCha8Rng, s: &SchemaDef) -> String {
    // fact with two dimensions, or a chain fact -> mid -> dim
    let shapes: Vec<(&Edge, &Edge, bool)> = s
        .edges
        .iter()
        .flat_map(|a| {
            s.edges.iter().filter_map(move |b| {
                if a.from == b.from && a.to != b.to {
                    Some((a, b, false))
                } else if b.from == a.to {
                    Some((a, b, true))
                } else {
                    None
                }
            })
        })
        .collect();
    let &(e1, e2, chain) = shapes.choose(rng).expect("join3 shapes");
    let (f, d1, d2) = (s.table(e1.from), s.table(e1.to), s.table(e2.to));
    let second_on = if chain {
        format!("d1.{} = d2.{}", e2.fk, e2.pk)
    } else {
        format!("f.{} = d2.{}", e2.fk, e2.pk)
    };
    let mut preds = Vec::new();
    for (alias, t) in [("f", f), ("d1", d1), ("d2", d2)] {
        if rng.gen_bool(0.4) {
            preds.extend(predicate(rng, lit, alias, t));
        }
    }
    let select = if rng.gen_bool(0.5) {
        format!("COUNT(*), {}", aggregate(rng, "f", f))
    } else {
        format!("f.{}, d2.{}", measure(rng, f), non_key_column(rng, d2))
    };
    format!(
        "SELECT {select} FROM {} f JOIN {} d1 ON f.{} = d1.{} JOIN {} d2 ON {second_on}{}",
        f.name,
        d1.name,
        e1.fk,
        e1.pk,
        d2.name,
        where_clause(&preds)
    )
}

fn gen_group_join(rng: &mut ChaCha8Rng, _lit: &mut ChaCha8Rng, s: &SchemaDef) -> String {
    let e = s.edges.choose(rng).expect("edges");
    let (f, d) = (s.table(e.from), s.table(e.to));
    format!(
        "SELECT f.{k}, COUNT(*), {} FROM {} f JOIN {} d ON f.{k} = d.{} GROUP BY f.{k}",
        aggregate(rng, "f", f),
        f.name,
        d.name,
        e.pk,
        k = e.fk
    )
}

/// Templates differ in table count or predicate count, so the query features
/// tell them apart: limit and group-join queries carry no predicates,
/// filter-aggregate and two-way joins at least one.
fn generate_sql(rng: &mut ChaCha8Rng, lit: &mut ChaCha8Rng, s: &SchemaDef, template: Template) -> String {
    match template {
        Template::FilterAgg => gen_filter_agg(rng, lit, s),
        Template::Limit => gen_limit(rng, lit, s),
        Template::Join2 => gen_join2(rng, lit, s),
        Template::Join3 => gen_join3(rng, lit, s),
        Template::GroupJoin => gen_group_join(rng, lit, s),
    }
}

/// One entry of a schema's template catalogue. Instances share the query
/// shape and differ in literals and resource state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateShape {
    pub template_id: String,
    pub schema: SchemaKind,
    pub class: Template,
    pub shape_seed: u64,
}

impl TemplateShape {
    fn instantiate(&self, lit: &mut ChaCha8Rng) -> String {
        let mut shape = ChaCha8Rng::seed_from_u64(self.shape_seed);
        generate_sql(&mut shape, lit, def(self.schema), self.class)
    }
}

fn check_profile(profile: &WorkloadProfile) -> Result<(), HarnessError> {
    if profile.n_queries == 0 {
        return Err(HarnessError::InvalidProfile("n_queries must be at least 1".into()));
    }
    if profile.schemas.is_empty() || profile.schemas.iter().any(|&(_, n)| n == 0) {
        return Err(HarnessError::InvalidProfile("every schema needs at least one template".into()));
    }
    let weights: Vec<f64> = profile.mix.values().copied().collect();
    if weights.iter().any(|w| !(*w >= 0.0)) || !(weights.iter().sum::<f64>() > 0.0) {
        return Err(HarnessError::InvalidProfile("template weights must be non-negative with positive sum".into()));
    }
    if !(0.0..=1.0).contains(&profile.max_cpu_load) || !(profile.max_memory_in_use >= 0.0) {
        return Err(HarnessError::InvalidProfile("resource bounds out of range".into()));
    }
    Ok(())
}

/// Per schema, classes are spread over its templates by the mix weights.
pub fn template_catalogue(profile: &WorkloadProfile, seed: u64) -> Result<Vec<TemplateShape>, HarnessError> {
    check_profile(profile)?;
    let classes: Vec<Template> = profile.mix.keys().copied().collect();
    let weights: Vec<f64> = profile.mix.values().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7E3A_11D5_C0DE_5EED);
    let mut out = Vec::new();
    for &(kind, n) in &profile.schemas {
        let counts = largest_remainder(n, &weights);
        let mut k = 0;
        for (&class, &c) in classes.iter().zip(&counts) {
            for _ in 0..c {
                k += 1;
                out.push(TemplateShape {
                    template_id: format!("{}_t{k:02}", kind.name()),
                    schema: kind,
                    class,
                    shape_seed: rng.gen(),
                });
            }
        }
    }
    Ok(out)
}

/// Deterministic synthetic workload. Query classes follow the mix by
/// largest remainders; each query instantiates a random catalogue template
/// of its class. Joins list the larger table first.
pub fn generate_workload(profile: &WorkloadProfile, seed: u64) -> Result<Workload, HarnessError> {
    let catalogue = template_catalogue(profile, seed)?;
    let classes: Vec<Template> = profile.mix.keys().copied().collect();
    let weights: Vec<f64> = profile.mix.values().copied().collect();
    let counts = largest_remainder(profile.n_queries, &weights);
    let mut plan: Vec<Template> = classes
        .iter()
        .zip(&counts)
        .flat_map(|(&t, &c)| std::iter::repeat_n(t, c))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    plan.shuffle(&mut rng);

    let schemas: BTreeMap<String, SchemaModel> = profile
        .schemas
        .iter()
        .map(|&(k, _)| (k.name().to_string(), schema_model(k)))
        .collect();
    let mut queries = Vec::with_capacity(plan.len());
    for (i, class) in plan.into_iter().enumerate() {
        let of_class: Vec<&TemplateShape> = catalogue.iter().filter(|t| t.class == class).collect();
        let mut kinds: Vec<SchemaKind> = of_class.iter().map(|t| t.schema).collect();
        kinds.dedup();
        let kind = kinds[rng.gen_range(0..kinds.len())];
        let pool: Vec<&TemplateShape> = of_class.into_iter().filter(|t| t.schema == kind).collect();
        let shape = pool[rng.gen_range(0..pool.len())];
        let sql = shape.instantiate(&mut rng);
        let cpu = if profile.max_cpu_load > 0.0 {
            rng.gen_range(0.0..=profile.max_cpu_load)
        } else {
            0.0
        };
        let mem = if profile.max_memory_in_use > 0.0 {
            rng.gen_range(0.0..=profile.max_memory_in_use).round()
        } else {
            0.0
        };
        queries.push(WorkloadQuery {
            query_id: format!("q{i:04}"),
            schema: kind.name().to_string(),
            template: class,
            template_id: shape.template_id.clone(),
            sql,
            resources: ResourceSnapshot {
                memory_in_use: mem,
                cpu_load: cpu,
            },
        });
    }
    let w = Workload { seed, schemas, queries };
    w.validate()?;
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_remainder_examples() {
        assert_eq!(largest_remainder(10, &[0.25, 0.15, 0.25, 0.15, 0.2]), vec![3, 2, 2, 1, 2]);
        assert_eq!(largest_remainder(7, &[1.0, 1.0, 1.0]), vec![3, 2, 2]);
        assert_eq!(largest_remainder(0, &[1.0]), vec![0]);
    }

    #[test]
    fn one_query_parses() {
        let p = WorkloadProfile {
            n_queries: 1,
            ..WorkloadProfile::default()
        };
        let w = generate_workload(&p, 3).unwrap();
        assert_eq!(w.queries.len(), 1);
    }

    #[test]
    fn same_seed_same_workload() {
        let p = WorkloadProfile::default();
        assert_eq!(generate_workload(&p, 9).unwrap(), generate_workload(&p, 9).unwrap());
        assert_ne!(generate_workload(&p, 9).unwrap(), generate_workload(&p, 10).unwrap());
    }

    #[test]
    fn mix_counts_exact_for_divisible_n() {
        let p = WorkloadProfile {
            n_queries: 100,
            ..WorkloadProfile::default()
        };
        let w = generate_workload(&p, 1).unwrap();
        let mut counts: BTreeMap<Template, usize> = BTreeMap::new();
        for q in &w.queries {
            *counts.entry(q.template).or_default() += 1;
        }
        for (t, weight) in &p.mix {
            assert_eq!(counts[t], (weight * 100.0).round() as usize, "{t}");
        }
    }

    #[test]
    fn every_template_generates_on_every_schema() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut lit = ChaCha8Rng::seed_from_u64(1);
        for kind in [SchemaKind::Taxi, SchemaKind::Movies] {
            let model = schema_model(kind);
            for t in Template::ALL {
                for _ in 0..50 {
                    let sql = generate_sql(&mut rng, &mut lit, def(kind), t);
                    parse_sql(&sql, &model).unwrap_or_else(|e| panic!("{sql}: {e}"));
                }
            }
        }
    }

    #[test]
    fn instances_share_their_template_shape() {
        let w = generate_workload(&WorkloadProfile::default(), 5).unwrap();
        let strip = |sql: &str| sql.split(' ').filter(|t| t.parse::<u64>().is_err()).collect::<Vec<_>>().join(" ");
        let mut seen: BTreeMap<&str, String> = BTreeMap::new();
        for q in &w.queries {
            let shape = strip(&q.sql);
            assert_eq!(seen.entry(&q.template_id).or_insert_with(|| shape.clone()), &shape, "{}", q.template_id);
        }
        assert!(seen.len() > 20);
    }

    #[test]
    fn invalid_profiles_rejected() {
        let p = WorkloadProfile {
            n_queries: 0,
            ..WorkloadProfile::default()
        };
        assert!(matches!(generate_workload(&p, 0), Err(HarnessError::InvalidProfile(_))));
    }
}
