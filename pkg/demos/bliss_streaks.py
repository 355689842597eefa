"""A row-local hog against three row-unfriendly victims, FRFCFS vs BLISS.

FRFCFS keeps serving the hog's row hits, so its streaks are long and the
victims wait. BLISS blacklists the hog after a few consecutive services.
"""
from memsim.config import make_config
from memsim.report import execute
from memsim.suites import hog_and_victims


def main(cycles=3_000_000):
    for pol in ("frfcfs", "frfcfs_cap", "bliss"):
        cfg = make_config({"run_length_cycles": cycles, "scheduler.policy": pol},
                          user={"apps": hog_and_victims()})
        s = execute(cfg, oracle=True).summary()
        streaks = {a: round(v, 2) for a, v in s["mean_streak_length"].items()}
        slow = {a: round(v, 2) for a, v in s["actual_slowdown"].items()}
        print(f"{pol:11s} max slowdown {s['max_slowdown']:.2f}  slowdowns {slow}  streaks {streaks}")


if __name__ == "__main__":
    main()
