"""Hold one victim of the hog mix to a slowdown bound with the MISE QoS policy.

Always prioritizing the victim also meets the bound but starves everyone
else; the QoS controller gives the victim only the share it needs.
"""
import numpy as np

from memsim.config import make_config
from memsim.metrics import weighted_speedup
from memsim.report import execute
from memsim.suites import hog_and_victims

AOI, BOUND = 1, 2.0


def main():
    base = {"run_length_cycles": 18_000_000, "model": "mise", "mise.interval": 300_000,
            "mise.epoch": 5_000, "oracle.window_cycles": 300_000, "oracle.warmup_windows": 50,
            "policy.aoi": [AOI], "policy.bound": BOUND}
    for kind in ("none", "mise_qos", "always_prioritize"):
        exp = execute(make_config(dict(base, **{"policy.kind": kind}),
                                  user={"apps": hog_and_victims()}), oracle=True)
        est = [row[AOI] for row in exp.result.estimates[50:]]
        ws = weighted_speedup([t for t in exp.totals if t.app != AOI])
        actual = [t.actual_slowdown for t in exp.totals if t.app == AOI][0]
        print(f"{kind:17s} AoI estimate {np.mean(est):.2f} actual {actual:.2f}  "
              f"others' weighted speedup {ws:.2f}")


if __name__ == "__main__":
    main()
