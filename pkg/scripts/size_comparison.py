#!/usr/bin/env python3
"""Size comparison across all representations on a clustered synthetic relation.

Generates the relation, builds every header plus the table baseline, and
prints/writes the size table (octets and percent of the uncompressed table).
"""

import argparse
import csv
import sys

from sparsecube import mdstore, tablestore
from sparsecube.diffseq import build_dhc, build_dsc
from sparsecube.errors import OffsetOverflowError
from sparsecube.headers import build_boc, build_lpc, build_schc
from sparsecube.relation import logical_position_sequence
from sparsecube.synth import SynthSpec, generate


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="64,64,50,49")
    ap.add_argument("--density", type=float, default=0.01)
    ap.add_argument("--clustering", type=float, default=0.8)
    ap.add_argument("--seed", type=int, default=88)
    ap.add_argument("--s-bits", type=int, default=16)
    ap.add_argument("--out", default="sizes.csv")
    args = ap.parse_args()

    cards = tuple(int(x) for x in args.dims.split(","))
    rel = generate(SynthSpec(cards, args.density, args.clustering, args.seed))
    print(f"relation: {rel.n_cells} nonempty of {rel.schema.total_cells}")

    positions = logical_position_sequence(rel)
    cell_bytes = rel.n_cells * rel.measure_width
    schema_bytes = len(mdstore._schema_to_json(rel.schema, rel.measure_width))
    table = tablestore.build_table(rel)
    base = table.total_size()

    boc = None
    for width in range(2, 8):
        try:
            boc = build_boc(positions, block_len=16, offset_width=width)
            break
        except OffsetOverflowError:
            continue
    dhc = build_dhc(positions, diff_bits=args.s_bits)
    headers = [
        ("schc", build_schc(positions, rel.schema.total_cells)),
        ("lpc", build_lpc(positions)),
        ("boc", boc),
        ("dsc", build_dsc(positions, diff_bits=args.s_bits)),
    ]

    rows = [("table_uncompressed", base)]
    for name, header in headers:
        rows.append((name, len(header.to_bytes()) + cell_bytes + schema_bytes))
    dhc_disk = len(dhc.to_bytes()) + cell_bytes + schema_bytes
    rows.append(("dhc_disk", dhc_disk))
    rows.append(("dhc_memory", dhc_disk + dhc.memory_bytes() - dhc.size_bytes()))

    print(f"{'representation':<20}{'octets':>14}{'percent':>10}")
    for name, size in rows:
        print(f"{name:<20}{size:>14}{100.0 * size / base:>9.1f}%")
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["representation", "octets", "percent"])
        for name, size in rows:
            w.writerow([name, size, f"{100.0 * size / base:.1f}"])
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
