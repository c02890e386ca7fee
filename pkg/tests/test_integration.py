"""Randomized whole-store checks cutting across modules."""

import random
import threading

import pytest

from sparsecube import mdstore, tablestore
from sparsecube.blockio import SimCache
from sparsecube.cli import build_boc_with_retry
from sparsecube.diffseq import build_dhc, build_dsc
from sparsecube.headers import build_boc, build_lpc, build_schc
from sparsecube.mdstore import SCHEMES, StoreParams, build_store
from sparsecube.relation import DimensionSchema, Relation
from sparsecube.synth import SynthSpec, generate


def test_randomized_configs_agree_everywhere(tmp_path):
    rng = random.Random(77)
    for trial in range(12):
        n_dims = rng.randint(1, 4)
        cards = tuple(rng.randint(2, 12) for _ in range(n_dims))
        spec = SynthSpec(
            cards,
            density=rng.choice([0.05, 0.2, 0.6]),
            clustering=rng.choice([0.0, 0.5, 1.0]),
            seed=trial,
        )
        rel = generate(spec)
        params = StoreParams(
            diff_bits=rng.choice([4, 8, 16]),
            stride=rng.choice([1, 4, 16]),
            block_len=rng.choice([1, 4, 16]),
            offset_width=rng.choice([2, 3]),
        )
        stores = {}
        for scheme in SCHEMES:
            store = build_store(rel, scheme, params)
            base = tmp_path / f"{trial}-{scheme}"
            mdstore.save(store, base)
            stores[scheme] = mdstore.load(
                base, cache=SimCache(1 << 30), block_size=rng.choice([64, 512, 4096])
            )
        table = tablestore.build_table(rel, tablestore.TableParams(page_size=256))
        try:
            probes = list(rel.cells) + [
                tuple(rng.randrange(c) for c in cards) for _ in range(300)
            ]
            for coords in probes:
                want = rel.get(coords)
                assert table.point_query(coords) == want
                for scheme, store in stores.items():
                    assert store.point_query(coords) == want, (trial, scheme, coords)
        finally:
            for store in stores.values():
                store.close()


def test_positions_near_the_64_bit_boundary():
    top = (1 << 64) - 1
    positions = [1 << 63, (1 << 63) + 5, top - 7, top - 1]
    total = 1 << 64  # would overflow a schema, but headers take raw positions

    schc = build_schc(positions, total - 1 + 1)
    lpc = build_lpc(positions)
    boc = build_boc(positions, block_len=2, offset_width=4)
    dsc = build_dsc(positions, diff_bits=8)
    dhc = build_dhc(positions, diff_bits=8)
    queries = positions + [0, (1 << 63) + 1, top - 6, top]
    want = [lpc.lookup(q) for q in queries]
    for header in (schc, boc, dsc, dhc):
        assert [header.lookup(q) for q in queries] == want
    for header, cls in (
        (lpc, type(lpc)), (schc, type(schc)), (boc, type(boc)),
        (dsc, type(dsc)), (dhc, type(dhc)),
    ):
        assert cls.from_bytes(header.to_bytes()).positions() == positions


def test_boc_width_retry_helper():
    # Gap of 100000 overflows two-octet offsets at block length 16.
    positions = list(range(50)) + [100050 + i for i in range(50)]
    rel = Relation(
        DimensionSchema.from_cardinalities((1 << 18,)),
        {(p,): 1.0 for p in positions},
    )
    params = StoreParams(offset_width=2, block_len=16)
    with pytest.raises(Exception):
        build_store(rel, "boc", params)
    store = build_boc_with_retry(rel, "boc", params)
    assert store.header.offset_width == 3
    for p in positions:
        assert store.point_query((p,)) == 1.0


def test_concurrent_queries_through_shared_cache(tmp_path):
    rel = generate(SynthSpec((16, 16, 16), density=0.2, seed=5))
    store = build_store(rel, "dhc", StoreParams(diff_bits=8))
    mdstore.save(store, tmp_path / "c")
    cache = SimCache(capacity=64 * 1024, block_size=512)
    loaded = mdstore.load(tmp_path / "c", cache=cache, block_size=512)
    probes = list(rel.cells)
    errors = []

    def worker(seed):
        rng = random.Random(seed)
        for _ in range(400):
            coords = rng.choice(probes)
            try:
                if loaded.point_query(coords) != rel.get(coords):
                    errors.append(coords)
            except Exception as exc:  # noqa: BLE001
                errors.append(exc)

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    loaded.close()
    assert not errors
