"""Simulate the half-car bump test and export response traces.

Runs the 4-DOF vertical-dynamics model over the standard half-sine bump at
30 km/h for a soft and a firm damper setup, prints the comfort descriptors
(RMS vertical acceleration, RMS pitch rate) and the grip-loss time, and
writes the full signal traces plus a comparison SVG into demos/out/.
"""

import os

import numpy as np

from prefopt.halfcar import (BumpScenario, HalfCarParams, comfort_metrics,
                             export_trace_csv, simulate)
from prefopt.svgchart import Series, line_chart

out_dir = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(out_dir, exist_ok=True)

scenario = BumpScenario(dt=1e-3, duration=5.0)
setups = {
    "soft": HalfCarParams(c_f=700.0, c_r=700.0),
    "firm": HalfCarParams(c_f=3200.0, c_r=3200.0),
}

series = []
for idx, (name, params) in enumerate(setups.items()):
    trace = simulate(params, scenario)
    r_az, r_pr, t_loss = comfort_metrics(params, scenario, trace)
    print(f"{name:>5}: RMS A_z = {r_az:.3f} m/s^2, RMS pitch rate = "
          f"{r_pr:.4f} rad/s, grip loss = {t_loss * 1000:.0f} ms")
    csv_path = os.path.join(out_dir, f"bump_{name}.csv")
    export_trace_csv(trace, csv_path)
    print(f"       trace -> {csv_path}")
    stride = 5
    series.append(Series(name=name, x=trace.time[::stride],
                         y=trace.a_z[::stride]))

svg_path = os.path.join(out_dir, "bump_comparison.svg")
with open(svg_path, "w") as fh:
    fh.write(line_chart(series, title="bump response: vertical acceleration",
                        xlabel="time (s)", ylabel="A_z (m/s^2)"))
print(f"\ncomparison plot -> {svg_path}")

peak = {name: float(np.abs(simulate(p, scenario).a_z).max())
        for name, p in setups.items()}
print("peak |A_z|:", {k: round(v, 2) for k, v in peak.items()})
