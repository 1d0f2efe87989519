use linepack::intratile::{check_solution, crossbar_feasible, crossbar_route, crossbar_route_causal, CrossbarInstance};
use linepack_oracle::crossbar::small_instances;
use linepack_oracle::exhaustive_feasible;

fn reversed_ids(inst: &CrossbarInstance) -> CrossbarInstance {
    let mut out = inst.clone();
    for list in [&mut out.wn, &mut out.we, &mut out.sn, &mut out.se] {
        for e in list.iter_mut() {
            e.1 = 1000 - e.1;
        }
    }
    out
}

#[test]
fn crossbar_agrees_with_exhaustive_search() {
    let (mut feasible, mut causal_failures) = (0u64, Vec::new());
    let all = small_instances(3, 2, 4);
    for inst in &all {
        let exact = exhaustive_feasible(inst);
        assert_eq!(crossbar_feasible(inst), exact, "{inst:?}");
        if !exact {
            continue;
        }
        feasible += 1;
        let sol = crossbar_route(inst).unwrap_or_else(|e| panic!("{inst:?}: {e:?}"));
        check_solution(inst, &sol).unwrap_or_else(|e| panic!("{inst:?}: {e}"));
        // The causal router breaks ties by id, so try both id orders.
        for inst in [inst.clone(), reversed_ids(inst)] {
            match crossbar_route_causal(&inst) {
                Ok(sol) => check_solution(&inst, &sol).unwrap_or_else(|e| panic!("{inst:?}: {e}")),
                Err(_) => causal_failures.push(inst),
            }
        }
    }
    eprintln!("{} instances, {feasible} feasible, {} causal failures", all.len(), causal_failures.len());
    for f in causal_failures.iter().take(5) {
        eprintln!("{f:?}");
    }
    assert!(causal_failures.is_empty());
}
