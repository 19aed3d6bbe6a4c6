"""Shared builders for the test suite."""

from dlmdecode import (
    AnchorSpec,
    DecodeConfig,
    SyntheticDenoiser,
    SyntheticModelConfig,
    Vocabulary,
)

VOCAB = Vocabulary(size=40, mask_id=39, eot_id=38)
EOT = VOCAB.eot_id
NOISE = tuple(range(30, 38))


def make_target(length, eot_tail):
    """Content tokens followed by an EOT run of the given length."""
    content = [(i * 7 + 3) % 30 for i in range(length - eot_tail)]
    return tuple(content + [EOT] * eot_tail)


def make_model(length, eot_tail=0, window=4, base=0.4, gain=0.1, boost=0.0,
               pull=0.0, seed=0, anchors=(), vocab=VOCAB, target=None):
    config = SyntheticModelConfig(
        target=target if target is not None else make_target(length, eot_tail),
        context_window=window,
        base_conf=base,
        context_gain=gain,
        eot_boost=boost,
        anchor_pull=pull,
        noise_vocab=NOISE,
        seed=seed,
    )
    return SyntheticDenoiser(config, vocab, anchors)


def make_anchor(tokens=(3, 5), offset=20):
    return AnchorSpec(tokens=tuple(tokens), offset_from_end=offset)


def anchored_setup(length, eot_tail, anchor_tokens=(3, 5), offset=20, **model_kw):
    """Anchor spec plus a synthetic model conditioned on its positions."""
    anchor = make_anchor(anchor_tokens, offset)
    positions = tuple(anchor.positions(length))
    model = make_model(length, eot_tail, anchors=positions, **model_kw)
    return anchor, model


def simple_config(length, steps, **kw):
    return DecodeConfig(length=length, steps=steps, **kw)
