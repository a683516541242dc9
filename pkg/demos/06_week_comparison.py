"""Bundled synthetic week under the three control scenarios.

Takes about 25 s.

    python3 demos/06_week_comparison.py
"""
from cluster_dispatch import ScenarioConfig, bundled_config_path, load_config, run_scenario
from cluster_dispatch.settlement import compare_scenarios, comparison_csv

cluster = load_config(bundled_config_path())
reports = {}
for sid in ("S1", "S2", "S3"):
    run = run_scenario(cluster, ScenarioConfig.preset(sid, cluster.ga, cluster.seed), 7)
    reports[sid] = run.reports
    total = sum(r.cost for r in run.reports)
    print(f"{sid}: weekly cost {total:7.2f}")

print()
print(comparison_csv(compare_scenarios(reports)))
