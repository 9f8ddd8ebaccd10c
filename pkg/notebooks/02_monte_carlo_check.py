"""Cross-check the analytic click and matching model with the pulse simulator.

Run with ``python notebooks/02_monte_carlo_check.py``.
"""

from dataclasses import replace
from pathlib import Path

from asyncmdi.montecarlo import predict, simulate, validate
from asyncmdi.scenario import load_scenario

ROOT = Path(__file__).resolve().parents[1]
sf = load_scenario(ROOT / "scenarios" / "mc_100km.json")

for distance, T_c in ((100.0, 25e-9), (300.0, 2e-6)):
    # A window of roughly one expected detection keeps both cases common.
    sc = sf.scenario.at_distance(distance)
    sc = replace(sc, matching=replace(sc.matching, T_c=T_c))
    sim = simulate(sc, 10**7, seed=1)
    report = validate(sim, predict(sim))
    print(f"\n{distance:g} km, {sim.tallies.detections} detections, "
          f"{sim.tallies.case2} case-2 events")
    for check in report.checks:
        if check.quantity.startswith(("gain_mu", "n_", "E_", "case")):
            print(f"  {check.quantity:14s} emp {check.empirical:12.6g}  "
                  f"analytic {check.analytic:12.6g}  z {check.z_score:+6.2f}")
    print("  all checks within 5 SE:", report.passed)
