"""Single vs multi-round collaboration at a fixed total budget on request-benefit scenes."""

from _common import group_means, load, parse

from collabsim import sweeps

VARIANTS = [(1, None), (2, (1.0, 0.0)), (2, (0.5, 0.5)), (2, (0.2, 0.8)), (3, (0.2, 0.6, 0.2))]


def main():
    args = parse("request_benefit.json", "rounds.csv")
    cfg = load(args)
    rows = sweeps.sweep_rounds(cfg, VARIANTS)
    sweeps.write_csv(rows, sweeps.ROUNDS_COLUMNS, args.out)
    ap = group_means(rows, lambda r: (r["K"], r["allocation"]))
    for (k, alloc), v in ap.items():
        print(f"K={k} allocation={alloc:<14} AP@0.5={v:.4f}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
