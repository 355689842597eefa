"""Compare MISE and ASM estimates with alone-run ground truth on a few mixes."""
import sys

from memsim.config import make_config
from memsim.report import execute
from memsim.suites import mix_suite


def main(n_mixes=3):
    over = {"run_length_cycles": 6_000_000, "mise.interval": 2_000_000,
            "asm.quantum": 2_000_000}
    for k, apps in enumerate(mix_suite(n_mixes)):
        gaps = [a["synthetic"]["compute_gap"] for a in apps]
        for model in ("mise", "asm"):
            cfg = make_config(dict(over, model=model), user={"apps": apps})
            s = execute(cfg, oracle=True).summary()
            act = {a: round(v, 2) for a, v in s["actual_slowdown"].items()}
            est = {a: round(v, 2) for a, v in s["mean_estimated_slowdown"].items()}
            print(f"mix {k} gaps {gaps} {model:4s} actual {act} estimated {est} "
                  f"error {s['mean_error_pct']:.1f}%")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 3)
