import math

import numpy as np
import pytest

from ccnp_lab.datagen.splits import Phase, sample_split
from ccnp_lab.exceptions import CheckpointError, ConfigError, DegenerateInputError, ShapeError
from ccnp_lab.model import (
    Branch,
    EpisodeBatch,
    RepresentationBundle,
    SegmentLayout,
    aggregate,
    build_variant,
    decode,
    encode_context,
    fcl_embed,
    gaussian_scale,
    load_checkpoint,
    parameter_digest,
    save_checkpoint,
    split_context,
    tcl_embed,
)
from ccnp_lab.model.batch import pair_features
from ccnp_lab.model.decoder import SIGMA_FLOOR
from ccnp_lab.schemas import ModelDims, VariantKind
from ccnp_lab.tensor import Tensor, backward, ops


@pytest.fixture
def model(tiny_dims):
    return build_variant(VariantKind.CCNP, tiny_dims, seed=0)


# ─── Encoder / aggregation ─────────────────────────────

@pytest.mark.parametrize("kind", [VariantKind.CCNP, VariantKind.CNP])
def test_aggregation_is_permutation_invariant(kind, tiny_dims, sine_dataset):
    model = build_variant(kind, tiny_dims, seed=0)
    inst = sine_dataset.train[0]
    rng = np.random.default_rng(0)
    for _ in range(100):
        size = int(rng.integers(1, 21))
        context = rng.choice(len(inst), size=size, replace=False)
        shuffled = rng.permutation(context)
        for branch in Branch:
            r = aggregate(model.encoder, branch, encode_context(model.encoder, branch, inst, context))
            r_perm = aggregate(model.encoder, branch, encode_context(model.encoder, branch, inst, shuffled))
            assert r.shape == (tiny_dims.hidden,)
            np.testing.assert_allclose(r.data, r_perm.data, atol=1e-10, rtol=0)


def test_single_point_context_is_valid(model, sine_dataset):
    inst = sine_dataset.train[0]
    rows = encode_context(model.encoder, Branch.C, inst, [3])
    assert aggregate(model.encoder, Branch.C, rows).shape == (model.dims.hidden,)


def test_empty_context_is_degenerate(model, sine_dataset):
    with pytest.raises(DegenerateInputError):
        encode_context(model.encoder, Branch.C, sine_dataset.train[0], [])


def test_batched_path_matches_single_instantiation(model, sine_dataset):
    insts = sine_dataset.train[:3]
    contexts = [np.array([0, 4, 9]), np.array([2, 7]), np.array([1, 5, 11, 20, 25])]
    layout = SegmentLayout([pair_features(i, c) for i, c in zip(insts, contexts)])
    batched = model.encoder.represent(Branch.T, layout)
    for b, (inst, c) in enumerate(zip(insts, contexts)):
        single = aggregate(model.encoder, Branch.T, encode_context(model.encoder, Branch.T, inst, c))
        np.testing.assert_allclose(batched.data[b], single.data, atol=1e-12)


def test_padding_is_masked(tiny_dims):
    layout = SegmentLayout([np.zeros((3, 2)), np.zeros((1, 2))])
    assert layout.width == 3
    np.testing.assert_array_equal(layout.mask, [[True, True, True], [True, False, False]])
    w = layout.mean_weights(4).data
    np.testing.assert_allclose(w[0, :, 0], [1 / 3] * 3)
    np.testing.assert_allclose(w[1, :, 0], [1.0, 0.0, 0.0])


# ─── Decoder ───────────────────────────────────────────

def test_sigma_floor_value_at_zero():
    sigma = gaussian_scale(Tensor(np.zeros(3)))
    np.testing.assert_allclose(sigma.data, 0.9 * math.log(2.0) + 0.1)


def test_sigma_stays_above_floor():
    sigma = gaussian_scale(Tensor(np.array([-30.0, -5.0, 0.0, 5.0])))
    assert np.all(sigma.data > SIGMA_FLOOR)


def test_decode_shapes(model):
    d = model.dims.hidden
    rng = np.random.default_rng(0)
    bundle = RepresentationBundle(*(Tensor(rng.normal(size=d)) for _ in range(3)))
    pred = decode(model.decoder, np.linspace(0, 1, 7), bundle)
    assert pred.mu.shape == (7, 1)
    assert pred.sigma.shape == (7, 1)
    assert np.all(pred.sigma.data > SIGMA_FLOOR)


def test_decode_rejects_wrong_representation_shape(model):
    d = model.dims.hidden
    bundle = RepresentationBundle(Tensor(np.zeros(d + 1)), Tensor(np.zeros(d)), Tensor(np.zeros(d)))
    with pytest.raises(ShapeError):
        decode(model.decoder, [0.0], bundle)


def test_decoded_sigma_is_scaled_softplus_of_sigma_head(model):
    d = model.dims.hidden
    rng = np.random.default_rng(4)
    bundle = RepresentationBundle(*(Tensor(rng.normal(size=d)) for _ in range(3)))
    x_t = np.array([0.0, 0.25, 0.5, 1.5])
    pred = decode(model.decoder, x_t, bundle)
    rows = np.hstack([x_t.reshape(-1, 1), np.tile(bundle.concat().data, (len(x_t), 1))])
    raw = model.decoder.sigma_head(model.decoder.g(Tensor(rows))).data
    np.testing.assert_allclose(pred.sigma.data, 0.9 * np.logaddexp(0.0, raw) + 0.1, rtol=1e-12)
    mu = model.decoder.mu_head(model.decoder.g(Tensor(rows))).data
    np.testing.assert_allclose(pred.mu.data, mu, rtol=1e-12)


# ─── Heads ─────────────────────────────────────────────

def test_tcl_embed_shapes(model):
    z_hat, z = tcl_embed(model.heads, 0.3, Tensor(np.ones(model.dims.hidden)), [0.5])
    assert z_hat.shape == (model.dims.z_dim,)
    assert z.shape == (model.dims.z_dim,)


def test_shared_projection_builds_phi(tiny_dims):
    dims = tiny_dims.model_copy(update={"shared_projection": True})
    model = build_variant(VariantKind.CCNP, dims, seed=0)
    names = set(model.parameters())
    assert any(n.startswith("heads.phi.") for n in names)
    assert not any(n.startswith("heads.obs_proj.") for n in names)
    _, z = tcl_embed(model.heads, 0.1, Tensor(np.ones(dims.hidden)), [0.2])
    assert z.shape == (dims.z_dim,)


def test_fcl_views_are_disjoint_and_cover_context(model, sine_dataset):
    context = np.array([1, 4, 6, 9, 12])
    q_i, q_j, (a, b) = fcl_embed(model.encoder, model.heads, sine_dataset.train[0], context, rng_seed=3)
    assert q_i.shape == q_j.shape == (model.dims.z_dim,)
    assert not set(a) & set(b)
    assert sorted(set(a) | set(b)) == list(context)
    assert {len(a), len(b)} == {2, 3}


def test_split_context_needs_two_points():
    with pytest.raises(DegenerateInputError):
        split_context(np.array([4]), np.random.default_rng(0))


# ─── Variants ──────────────────────────────────────────

def test_variants_share_initialisation(tiny_dims):
    digests = {parameter_digest(build_variant(kind, tiny_dims, seed=5)) for kind in VariantKind}
    assert len(digests) == 1


def test_attention_flag_per_variant(tiny_dims):
    assert build_variant("CCNP", tiny_dims).use_attention
    assert build_variant("AttnCNP", tiny_dims).use_attention
    assert not build_variant("CNP", tiny_dims).use_attention
    assert not build_variant("CCNP-Attn", tiny_dims).use_attention


def test_unknown_variant_is_a_config_error(tiny_dims):
    with pytest.raises(ConfigError):
        build_variant("ConvCNP", tiny_dims)


def test_live_branches_per_variant(tiny_dims):
    assert build_variant("CCNP", tiny_dims).live == {Branch.C, Branch.T, Branch.F}
    assert build_variant("CCNP-TCL", tiny_dims).live == {Branch.C, Branch.F}
    assert build_variant("CCNP-FCL", tiny_dims).live == {Branch.C, Branch.T}
    assert build_variant("CNP", tiny_dims).live == {Branch.C}
    model = build_variant("CCNP", tiny_dims)
    model.restrict_branches(tcl=False, fcl=True)
    assert model.live == {Branch.C, Branch.F}


def test_baselines_feed_zeros_for_contrastive_slots(tiny_dims, sine_dataset):
    model = build_variant(VariantKind.CNP, tiny_dims, seed=0)
    insts = sine_dataset.train[:3]
    splits = [sample_split(i, Phase.TRAIN, 5, 5, s) for s, i in enumerate(insts)]
    batch = EpisodeBatch.build(insts, splits)
    bundle = model.represent(batch.context)
    assert bundle.r_T.shape == bundle.r_F.shape == (3, tiny_dims.hidden)
    assert not np.any(bundle.r_T.data) and not np.any(bundle.r_F.data)
    assert np.any(bundle.r_C.data)
    assert model.probe_representation(batch.context).shape == (3, tiny_dims.hidden)


def test_every_parameter_reached_by_some_objective(model, sine_dataset):
    insts = sine_dataset.train[:4]
    splits = [sample_split(i, Phase.TRAIN, 5, 5, s, min_context=2) for s, i in enumerate(insts)]
    batch = EpisodeBatch.build(insts, splits, view_seed=0)
    model.zero_grad()
    pred = model.predict(batch)
    z_hat, z = model.tcl_embeddings(batch)
    q_i, q_j = model.fcl_embeddings(batch)
    total = ops.add(ops.add(ops.sum(pred.mu), ops.sum(pred.sigma)),
                    ops.add(ops.sum(ops.mul(z_hat, z)), ops.sum(ops.mul(q_i, q_j))))
    backward(total)
    silent = [n for n, p in model.named_parameters() if not np.any(p.grad)]
    assert silent == []


def test_fcl_embeddings_need_views(model, sine_dataset):
    insts = sine_dataset.train[:2]
    splits = [sample_split(i, Phase.TRAIN, 5, 5, s) for s, i in enumerate(insts)]
    with pytest.raises(ConfigError):
        model.fcl_embeddings(EpisodeBatch.build(insts, splits))


# ─── Checkpoints ───────────────────────────────────────

def test_checkpoint_restores_identical_parameters(model, tmp_path):
    path = save_checkpoint(model, tmp_path / "ckpt.bin")
    loaded = load_checkpoint(path)
    assert loaded.kind is VariantKind.CCNP
    assert parameter_digest(loaded) == parameter_digest(model)


def test_checkpoint_keeps_live_branches(tiny_dims, tmp_path):
    model = build_variant(VariantKind.CCNP, tiny_dims, seed=0)
    model.restrict_branches(tcl=False, fcl=False)
    loaded = load_checkpoint(save_checkpoint(model, tmp_path / "ckpt.bin"))
    assert loaded.live == {Branch.C}


def test_checkpoint_into_wrong_architecture_fails(model, tmp_path):
    path = save_checkpoint(model, tmp_path / "ckpt.bin")
    other = build_variant(VariantKind.CCNP, ModelDims(hidden=16, encoder_layers=2, decoder_layers=2, heads=2, z_dim=4))
    with pytest.raises(CheckpointError, match="architecture mismatch"):
        load_checkpoint(path, model=other)


def test_corrupt_checkpoint_fails(model, tmp_path):
    path = save_checkpoint(model, tmp_path / "ckpt.bin")
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
