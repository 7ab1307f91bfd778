use proptest::prelude::*;

use sqlbandit::engine::{simulate_execution, SimulatorParams};
use sqlbandit::harness::{generate_workload, Template, WorkloadProfile};
use sqlbandit::ir::{parse_sql, render_sql, TableSource};
use sqlbandit::teacher::{apply_plan, enumerate_configs, PlanConfig, TeacherConfig, ARM_COUNT};

fn profile(n: usize) -> WorkloadProfile {
    WorkloadProfile {
        n_queries: n,
        ..WorkloadProfile::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_queries_round_trip(seed in any::<u64>()) {
        let w = generate_workload(&profile(20), seed).unwrap();
        for q in &w.queries {
            let schema = w.schema_of(q).unwrap();
            let ir = parse_sql(&q.sql, schema).unwrap();
            prop_assert_eq!(&parse_sql(&render_sql(&ir), schema).unwrap(), &ir, "{}", q.sql);
        }
    }

    /// Rewrites may introduce derived tables, which user SQL cannot contain,
    /// so only plans without them are expected to parse back.
    #[test]
    fn rewritten_plans_validate_and_render(seed in any::<u64>(), arm in 0..ARM_COUNT) {
        let w = generate_workload(&profile(10), seed).unwrap();
        let config = PlanConfig::from_index(arm).unwrap();
        for q in &w.queries {
            let schema = w.schema_of(q).unwrap();
            let ir = parse_sql(&q.sql, schema).unwrap();
            let plan = apply_plan(&ir, config, schema, &TeacherConfig::default());
            plan.ir.validate(schema).map_err(|e| TestCaseError::fail(format!("{config}: {}: {e}", q.sql)))?;
            let sql = render_sql(&plan.ir);
            if plan.ir.base_tables.iter().all(|t| matches!(t.source, TableSource::Base(_))) {
                prop_assert_eq!(parse_sql(&sql, schema).unwrap(), plan.ir);
            } else {
                prop_assert!(sql.contains("(SELECT "), "{}", sql);
            }
        }
    }

    #[test]
    fn mix_is_exact_for_multiples_of_twenty(k in 1usize..8, seed in any::<u64>()) {
        let n = 20 * k;
        let p = profile(n);
        let w = generate_workload(&p, seed).unwrap();
        for t in Template::ALL {
            let want = (p.mix[&t] * n as f64).round() as usize;
            prop_assert_eq!(w.queries.iter().filter(|q| q.template == t).count(), want);
        }
    }

    #[test]
    fn every_arm_has_positive_finite_cost(seed in any::<u64>(), exec_seed in any::<u64>()) {
        let w = generate_workload(&profile(5), seed).unwrap();
        let params = SimulatorParams::default();
        for q in &w.queries {
            let schema = w.schema_of(q).unwrap();
            let ir = parse_sql(&q.sql, schema).unwrap();
            for config in enumerate_configs() {
                let plan = apply_plan(&ir, config, schema, &TeacherConfig::default());
                let m = simulate_execution(&plan, &ir, schema, &q.resources, exec_seed, &params);
                prop_assert!(m.latency_ms.is_finite() && m.latency_ms > 0.0);
                prop_assert!(m.memory_bytes.is_finite() && m.memory_bytes > 0.0);
            }
        }
    }
}
