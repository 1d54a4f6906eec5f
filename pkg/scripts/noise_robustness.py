"""AP under pose noise for collaboration and the single-agent baseline."""

from _common import group_means, load, parse

from collabsim import sweeps

SIGMA_CELLS = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0]
CELL_SIZE = 2.0  # meters, matches the random scenario family


def main():
    args = parse("noise.json", "noise.csv")
    cfg = load(args)
    rows = sweeps.sweep_noise(cfg, [s * CELL_SIZE for s in SIGMA_CELLS])
    sweeps.write_csv(rows, sweeps.NOISE_COLUMNS, args.out)
    ap = group_means(rows, lambda r: (r["sigma"], r["method"]))
    print(f"{'sigma m':>8} {'collab':>7} {'alone':>7}")
    for s in SIGMA_CELLS:
        m = s * CELL_SIZE
        print(f"{m:8.2f} {ap[m, 'collab']:7.4f} {ap[m, 'no-collab']:7.4f}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
