"""Mean AP against payload budget on random scenes; writes one row per (budget, seed)."""

from _common import group_means, load, parse

from collabsim import sweeps

BUDGETS = [0.0, 0.001, 0.005, 0.01, 0.05, 0.2, 1.0]


def main():
    args = parse("tradeoff.json", "tradeoff.csv")
    cfg = load(args)
    rows = sweeps.sweep_bandwidth(cfg, BUDGETS)
    sweeps.write_csv(rows, sweeps.BANDWIDTH_COLUMNS, args.out)
    ap = group_means(rows, lambda r: r["budget_fraction"])
    vol = group_means(rows, lambda r: r["budget_fraction"], "volume_log2")
    print(f"{'budget':>8} {'log2 bytes':>10} {'AP@0.5':>7}")
    for b in BUDGETS:
        print(f"{b:8.3f} {vol[b]:10.2f} {ap[b]:7.4f}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
