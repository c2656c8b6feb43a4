"""Step-size and jump-cutoff sweeps, printed as tables."""

import argparse

from sllb.verify import check_deterministic_convergence, check_truncation_convergence


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=0.5, help="power-law index for the cutoff sweep")
    args = ap.parse_args()

    det = check_deterministic_convergence()
    s = det["statistics"]
    print(f"constant-field ODE, exact a(0.5) = {s['exact']:.8f}")
    for dt, err in zip(s["dts"], s["errors"]):
        print(f"  dt {dt:8.1e}  error {err:.3e}")
    print(f"  slope {s['slope']:.3f}")

    tr = check_truncation_convergence(alpha=args.alpha)
    t = tr["statistics"]
    print(f"jump activity vs cutoff (alpha = {args.alpha})")
    for eps, act in zip(t["cutoffs"], t["activity"]):
        print(f"  eps {eps:8.5f}  activity {act:.6f}")
    print(f"  increment rate {t['rate']:.3f} (expected {t['expected_rate']:.3f})")


if __name__ == "__main__":
    main()
