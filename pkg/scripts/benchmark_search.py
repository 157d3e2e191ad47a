#!/usr/bin/env python3
"""Time the top-k search on a multi-million-candidate synthetic store."""

import argparse
import tempfile
import time
from pathlib import Path

from qdesigndb.query import TargetSpec, top_k_search
from qdesigndb.store import store_stats
from qdesigndb.synth import SynthConfig, synth_generate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--qubits", type=int, default=1000)
    ap.add_argument("--resonators", type=int, default=350)
    ap.add_argument("--couplers", type=int, default=100)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--out", type=Path, default=None,
                    help="store directory (default: a fresh temp dir)")
    args = ap.parse_args()

    out = args.out or Path(tempfile.mkdtemp(prefix="qdesigndb-bench-"))
    t0 = time.perf_counter()
    store = synth_generate(
        SynthConfig(n_qubit_claws=args.qubits, n_quarter_wave=0,
                    n_half_wave=args.resonators, n_couplers=args.couplers),
        seed=args.seed, out_dir=out)
    n = store_stats(store)["composed_candidates"]
    print(f"store: {out}  ({n:,} composed candidates, "
          f"built in {time.perf_counter()-t0:.2f}s)")

    target = TargetSpec.from_mapping(
        {"f_q": 4.2, "alpha": -0.2, "f_r": 6.2, "kappa": 0.8, "g": 0.055})
    reference = None
    for workers in (1, 2, 8):
        t0 = time.perf_counter()
        result = top_k_search(store, target, k=args.k, E_J=13.0,
                              workers=workers)
        wall = time.perf_counter() - t0
        keys = [c.key() for c in result.ranked]
        match = "" if reference is None else \
            f"  identical={keys == reference}"
        reference = reference or keys
        rate = result.stats.candidates_scanned / wall / 1e6
        print(f"workers={workers}: {wall:6.2f}s  {rate:5.1f}M cand/s{match}")
    best = result.ranked[0]
    print(f"best: {best.qubit_id}+{best.resonator_id}"
          f"+{best.coupler_id or '-'}  cost={best.cost:.3e}")


if __name__ == "__main__":
    main()
