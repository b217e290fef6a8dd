#!/usr/bin/env python3
"""
Test bits-back codec: round trips, accounting, container file
"""

import os
import sys
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from modules.ans import (
    AnsState,
    init_state,
    make_buckets,
    reset_table_counters,
    seed_words_from,
    table_counters,
)
from modules.bitsback import (
    CompressedContainer,
    bb_decode_one,
    bb_encode_one,
    compress_batch,
    compress_grids,
    container_from_bytes,
    container_to_bytes,
    decompress_batch,
    load_container,
    report,
    save_container,
    seeded_word_count,
)
from modules.cvae import build_model, content_hash, from_bytes, negative_elbo_bits_discrete, to_bytes, train
from modules.errors import (
    CodecError,
    ConfigurationError,
    ContainerFormatError,
    InsufficientInitialBitsError,
    ModelMismatchError,
    StorageError,
)
from modules.geometry import gen_dataset, voxelize
from modules.seqcodec import seq_compress_grids


@pytest.fixture(scope="module")
def grids_d3(object_clouds):
    return [voxelize(pc, 3) for pc in object_clouds]


@pytest.mark.parametrize("batch", [1, 7, 64])
def test_round_trip(tiny_model_d3, object_clouds, batch):
    clouds = object_clouds[:batch]
    container = compress_batch(clouds, tiny_model_d3, 3, p_bits=12, seed=5)
    assert container.batch_size == batch
    assert container.model_hash == content_hash(tiny_model_d3)
    assert container.total_points == sum(len(pc) for pc in clouds)
    assert decompress_batch(container, tiny_model_d3) == [voxelize(pc, 3) for pc in clouds]


def test_round_trip_other_depths():
    for d in (2, 4):
        clouds = gen_dataset('scenes', 5, 300, seed=d)
        model = build_model(d, latent_dim=6, hidden=16, channels=(2, 4, 4), seed=d)
        container = compress_batch(clouds, model, d, p_bits=10, seed=1)
        assert decompress_batch(container, model) == [voxelize(pc, d) for pc in clouds]


def test_encode_decode_restores_state(tiny_model_d3, grids_d3):
    buckets = make_buckets(12)
    state = init_state(seed_words_from(3, 40))
    before = state.copy()
    bb_encode_one(state, grids_d3[0], tiny_model_d3, buckets, 12)
    grid, state = bb_decode_one(state, tiny_model_d3, buckets, 12)
    assert grid == grids_d3[0]
    assert state == before


def test_residual_state_is_initial_seed(tiny_model_d3, grids_d3):
    buckets = make_buckets(12)
    initial = init_state(seed_words_from(8, seeded_word_count(tiny_model_d3.latent_dim)))
    state = initial.copy()
    for grid in grids_d3[:10]:
        bb_encode_one(state, grid, tiny_model_d3, buckets)
    decoded = []
    for _ in range(10):
        grid, state = bb_decode_one(state, tiny_model_d3, buckets)
        decoded.append(grid)
    assert decoded[::-1] == grids_d3[:10]
    assert state == initial


def test_uniform_model_costs_one_bit_per_voxel(uniform_model_d3, grids_d3):
    container = compress_grids(grids_d3[:5], uniform_model_d3, p_bits=12, seed=0)
    assert container.cloud_net_bits == [512] * 5


def test_report_accounting_uniform_model(uniform_model_d3, object_clouds):
    container = compress_batch(object_clouds[:1], uniform_model_d3, 3, p_bits=12, seed=0)
    rep = report(container)
    assert rep.total_bits == 32 * len(container.payload)
    assert rep.initial_bits == 32 * seeded_word_count(4)
    assert 0 <= rep.total_bits - rep.initial_bits - 512 < 32
    assert rep.bpp == rep.total_bits / len(object_clouds[0])
    assert rep.raw_bits == 96 * len(object_clouds[0])
    assert rep.cloud_net_bits == (512,)


def test_report_bpp_arithmetic():
    # 800 clouds x 20000 points at 1.56 bpp
    words = round(800 * 20000 * 1.56 / 32)
    container = CompressedContainer(7, 12, 50, 800, 800 * 20000, 0, 28, 0, [1] * words)
    rep = report(container)
    assert abs(rep.bpp - 1.56) < 1e-4
    assert abs(container.payload_bytes / 1e6 - 3.12) < 0.01


def test_decoder_builds_no_marginal_tables(tiny_model_d3, grids_d3):
    container = compress_grids(grids_d3[:4], tiny_model_d3, p_bits=12, seed=2)
    reset_table_counters()
    decompress_batch(container, tiny_model_d3)
    counts = table_counters()
    assert set(counts) == {'bernoulli', 'gaussian_prior', 'gaussian_posterior'}
    assert counts['gaussian_posterior'] == 4 * tiny_model_d3.latent_dim
    assert counts['bernoulli'] == 4 * 512


def test_wrong_model_refused_before_decoding(tiny_model_d3, grids_d3):
    container = compress_grids(grids_d3[:3], tiny_model_d3, p_bits=12, seed=0)
    other = build_model(3, latent_dim=8, hidden=32, channels=(2, 4, 8), seed=99)
    reset_table_counters()
    with pytest.raises(ModelMismatchError):
        decompress_batch(container, other)
    assert table_counters() == {}


def test_float64_model_decodes_with_its_weight_file(grids_d3):
    model64 = build_model(3, latent_dim=6, hidden=16, channels=(2, 4, 4), seed=3, dtype=np.float64)
    reloaded = from_bytes(to_bytes(model64))
    assert reloaded.dtype == np.float32
    container = compress_grids(grids_d3[:4], model64, p_bits=12, seed=1)
    assert container.model_hash == content_hash(reloaded)
    assert decompress_batch(container, reloaded) == grids_d3[:4]
    assert decompress_batch(container, model64) == grids_d3[:4]


def test_truncated_payload_raises(tiny_model_d3, grids_d3):
    container = compress_grids(grids_d3[:6], tiny_model_d3, p_bits=12, seed=0)
    for cut in (1, 5):
        damaged = CompressedContainer(
            container.depth, container.p_bits, container.latent_dim, container.batch_size,
            container.total_points, container.seed, container.seeded_words, container.model_hash,
            container.payload[:-cut])
        with pytest.raises(CodecError):
            decompress_batch(damaged, tiny_model_d3)


def test_insufficient_initial_bits(tiny_model_d3, grids_d3):
    with pytest.raises(InsufficientInitialBitsError):
        bb_encode_one(AnsState(), grids_d3[0], tiny_model_d3, make_buckets(12))


def test_mixed_depths_rejected(tiny_model_d3, object_clouds):
    grids = [voxelize(object_clouds[0], 3), voxelize(object_clouds[1], 2)]
    with pytest.raises(ConfigurationError):
        compress_grids(grids, tiny_model_d3)
    with pytest.raises(ConfigurationError):
        compress_batch(object_clouds[:2], tiny_model_d3, 4)


def test_container_file_round_trip(tiny_model_d3, object_clouds, tmp_path):
    container = compress_batch(object_clouds[:3], tiny_model_d3, 3, seed=4)
    path = tmp_path / 'batch.bbpc'
    size = save_container(container, path)
    assert size == path.stat().st_size == 46 + container.payload_bytes
    loaded = load_container(path)
    assert loaded == container
    assert decompress_batch(loaded, tiny_model_d3) == [voxelize(pc, 3) for pc in object_clouds[:3]]


def test_container_format_errors(tiny_model_d3, grids_d3, tmp_path):
    data = container_to_bytes(compress_grids(grids_d3[:1], tiny_model_d3, seed=0))
    with pytest.raises(ContainerFormatError):
        container_from_bytes(b'NOPE' + data[4:])
    with pytest.raises(ContainerFormatError):
        container_from_bytes(data[:-4])
    with pytest.raises(ContainerFormatError):
        container_from_bytes(data[:20])
    with pytest.raises(StorageError):
        load_container(tmp_path / 'missing.bbpc')


def test_container_invariants():
    with pytest.raises(ContainerFormatError):
        CompressedContainer(3, 12, 8, 0, 10, 0, 7, 0, [1, 2])
    with pytest.raises(ContainerFormatError):
        CompressedContainer(3, 12, 8, 1, 10, 0, 7, 0, [1])


def test_amortization(trained_model_d3, grids_d3):
    grids = grids_d3[40:60]
    batched = report(compress_grids(grids, trained_model_d3, seed=0)).total_bits
    singles = sum(report(compress_grids([g], trained_model_d3, seed=0)).total_bits for g in grids)
    assert batched < singles + 64 * len(grids)
    assert batched < singles


def test_bpp_decreases_with_batch(trained_model_d3, object_clouds):
    clouds = object_clouds[:100]
    bpp_1 = report(compress_batch(clouds[:1], trained_model_d3, 3)).bpp
    bpp_100 = report(compress_batch(clouds, trained_model_d3, 3)).bpp
    assert bpp_100 < bpp_1


def test_sequential_not_worse_than_bitsback_plus_prior(trained_model_d3, grids_d3):
    grids = grids_d3[:100]
    bb = compress_grids(grids, trained_model_d3, p_bits=12, seed=0)
    seq = seq_compress_grids(grids, trained_model_d3)
    latent_prior_bits = 12 * trained_model_d3.latent_dim
    assert np.mean(seq.cloud_bits()) <= np.mean(bb.cloud_net_bits) + latent_prior_bits


def test_net_bits_track_discrete_elbo_d3(trained_model_d3, grids_d3, rng):
    buckets = make_buckets(12)
    grids = grids_d3[:100]
    container = compress_grids(grids, trained_model_d3, p_bits=12, seed=0)
    elbo_bits = [negative_elbo_bits_discrete(trained_model_d3, g, buckets, rng.standard_normal(8)) for g in grids]
    assert np.mean(container.cloud_net_bits) <= 1.05 * np.mean(elbo_bits) + 32
    assert decompress_batch(container, trained_model_d3) == grids


@pytest.mark.slow
def test_net_bits_track_discrete_elbo_d4():
    clouds = gen_dataset('objects', 300, 2000, seed=21)
    grids = [voxelize(pc, 4) for pc in clouds]
    model = train(build_model(4, seed=0), grids[:200], epochs=30, lr=0.001, batch_size=16, seed=0).model
    buckets = make_buckets(12)
    held_out = grids[200:]
    container = compress_grids(held_out, model, p_bits=12, seed=0)
    net = np.mean(container.cloud_net_bits)
    rng = np.random.default_rng(0)
    elbo_bits = np.mean([negative_elbo_bits_discrete(model, g, buckets, rng.standard_normal(model.latent_dim))
                         for g in held_out])
    assert abs(net - elbo_bits) / elbo_bits <= 0.1
    assert decompress_batch(container, model) == held_out


@pytest.mark.slow
def test_lossless_acceptance_grid():
    for flavour in ('objects', 'scenes'):
        clouds = gen_dataset(flavour, 100, 1000, seed=3)
        for d in (3, 4, 5):
            model = build_model(d, latent_dim=16, hidden=64, channels=(4, 8, 16), seed=d)
            grids = [voxelize(pc, d) for pc in clouds]
            for batch in (1, 10, 100):
                container = compress_grids(grids[:batch], model, seed=batch)
                assert decompress_batch(container, model) == grids[:batch]
