"""Drive a live tuning session through the HTTP service.

Start the service first:

    prefopt serve --port 8714

Then run this script. It creates a susp2d session, prints each A/B card the
way the browser UI would show it, answers with a synthetic judge (so the
demo is hands-free), and prints the final summary. Point a browser at the
same service to watch or take over.
"""

import json
import time
import urllib.request

import numpy as np

from prefopt.oracles import EtaSuspension, make_problem

BASE = "http://127.0.0.1:8714"


def call(method, path, body=None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(BASE + path, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req, timeout=60) as resp:
        return json.loads(resp.read().decode())


problem = make_problem("susp2d")
judge_eta = EtaSuspension(eta_az=1.0, eta_pitch=1.0)
objective = problem.objective(judge_eta)

doc = call("POST", "/sessions", {"problem": "susp2d", "budget": 12, "seed": 1})
sid = doc["id"]
print("session", sid)

while True:
    state = call("GET", f"/sessions/{sid}")
    if state["status"] == "finished":
        break
    if state["status"] == "computing":
        time.sleep(state.get("retry_after", 1.0))
        continue
    q = state["query"]
    cand, inc = q["candidate"], q["incumbent"]
    print(f"\niteration {q['iteration']} (remaining {q['remaining']})")
    for tag, opt in (("A (new)", cand), ("B (best)", inc)):
        d = opt["descriptors"]
        print(f"  {tag}: c_f={opt['x'][0]:7.1f} c_r={opt['x'][1]:7.1f}  "
              f"RMS A_z={d['rms_vertical_accel']:.3f}  "
              f"RMS pitch={d['rms_pitch_rate']:.4f}")
    label = int(np.sign(objective(np.array(cand["x"]))
                        - objective(np.array(inc["x"])))) or 0
    label = -1 if label < 0 else (+1 if label > 0 else 0)
    print("  judge says:", {-1: "A is better", 0: "equivalent",
                            1: "B is better"}[label])
    call("POST", f"/sessions/{sid}/preference",
         {"label": label, "nonce": q["nonce"]})

final = call("GET", f"/sessions/{sid}")
x = final["final"]["x"]
print(f"\nfinished: best damping front {x[0]:.0f}, rear {x[1]:.0f} N s/m")
print("descriptors:", {k: round(v, 4)
                       for k, v in final["final"]["descriptors"].items()})
