#!/usr/bin/env python3
"""
Test sequential coding baseline và decoder overhead accounting
"""

import os
import sys
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from modules.ans import bernoulli_code_bits
from modules.cvae import build_model, decoder_size_bytes
from modules.errors import MissingTableError, RejectedInputError
from modules.geometry import gen_dataset, voxelize
from modules.seqcodec import (
    SeqCompressed,
    seq_compress,
    seq_compress_grids,
    seq_decompress,
    seq_decompress_one,
    seq_overhead_bytes,
    table_sizes,
)


def test_round_trip_and_tables(tiny_model_d3, object_clouds):
    clouds = object_clouds[:8]
    sc = seq_compress(clouds, tiny_model_d3, 3)
    assert sc.batch_size == 8
    assert table_sizes(sc) == (512,) * 8
    assert sc.total_points == sum(len(pc) for pc in clouds)
    assert seq_decompress(sc) == [voxelize(pc, 3) for pc in clouds]


def test_payload_close_to_entropy_sum():
    clouds = gen_dataset('objects', 3, 3000, seed=4)
    model = build_model(5, latent_dim=8, hidden=32, channels=(2, 4, 8), seed=6)
    grids = [voxelize(pc, 5) for pc in clouds]
    sc = seq_compress_grids(grids, model)
    ideal = sum(bernoulli_code_bits(t, g.occupancy) for t, g in zip(sc.tables, grids))
    assert abs(sc.total_bits - ideal) / ideal < 0.01


def test_missing_table_only_breaks_that_cloud(tiny_model_d3, object_clouds):
    clouds = object_clouds[:4]
    sc = seq_compress(clouds, tiny_model_d3, 3)
    sc.tables[2] = None
    with pytest.raises(MissingTableError) as exc:
        seq_decompress_one(sc, 2)
    assert exc.value.index == 2
    for i in (0, 1, 3):
        assert seq_decompress_one(sc, i) == voxelize(clouds[i], 3)
    with pytest.raises(MissingTableError):
        seq_decompress(sc)


def test_tables_decode_without_model(tiny_model_d3, object_clouds):
    clouds = object_clouds[:3]
    a = seq_compress(clouds, tiny_model_d3, 3)
    b = seq_compress(clouds, tiny_model_d3, 3)
    # payloads and tables from two separate runs are interchangeable
    mixed = SeqCompressed(3, b.payloads, a.tables, a.total_points)
    assert seq_decompress(mixed) == seq_decompress(a)
    assert all(np.array_equal(x, y) for x, y in zip(a.tables, b.tables))


def test_replicated_cloud_has_flat_bpp(tiny_model_d3, object_clouds):
    grid = voxelize(object_clouds[0], 3)
    bpp = [seq_compress_grids([grid] * b, tiny_model_d3).bpp for b in (1, 10, 100)]
    assert bpp[0] == bpp[1] == bpp[2]


def test_overhead_examples():
    assert seq_overhead_bytes(1000, 7, 4) == 8_388_608_000
    assert seq_overhead_bytes(0, 5, 4) == 0
    assert seq_overhead_bytes(1000, 5, 2) == 65_536_000
    with pytest.raises(RejectedInputError):
        seq_overhead_bytes(-1, 5)
    with pytest.raises(RejectedInputError):
        seq_overhead_bytes(10, 9)


def test_overhead_dominates_weight_file():
    weights = decoder_size_bytes(build_model(5))
    assert seq_overhead_bytes(100, 5) > weights
    # default d=5 weights are 8.8 MB, so ten-fold is reached at B=1000 (see DESIGN.md)
    assert seq_overhead_bytes(1000, 5) / weights >= 10


def test_empty_batch_rejected(tiny_model_d3):
    with pytest.raises(RejectedInputError):
        seq_compress_grids([], tiny_model_d3)
