"""Model adapter: logits to protocol pairs, loading, failure paths."""

import json
import math

import pytest

from dlmserve import (
    ModelLoadError,
    ModelResponder,
    check_predictions,
    load_model,
    softmax,
    top_k_pairs,
)


class RowModel:
    """Returns a fixed logits row for every masked slot."""

    def __init__(self, row):
        self.row = row

    def logits(self, prompt, slots):
        return {i: list(self.row) for i, s in enumerate(slots) if s is None}


class FailingModel:
    def logits(self, prompt, slots):
        raise RuntimeError("device exploded")


def reply(model, slots, rid=0, top_k=2, top_k_max=None):
    responder = ModelResponder(model, top_k_max=top_k_max)
    line = json.dumps({"id": rid, "prompt": [], "slots": slots, "top_k": top_k})
    return json.loads(responder.reply(line))


def test_softmax_normalizes():
    probs = softmax([0.0, 1.0, 2.0])
    assert sum(probs) == pytest.approx(1.0)
    assert probs[2] > probs[1] > probs[0]


def test_uniform_logits_give_one_over_v_with_low_token_first():
    pairs = top_k_pairs([0.25] * 8, 2)
    assert pairs[0][0] == 0 and pairs[1][0] == 1
    assert pairs[0][1] == pytest.approx(1 / 8)
    assert pairs[1][1] == pytest.approx(1 / 8)


def test_equal_peaks_break_toward_lower_token():
    pairs = top_k_pairs([0.5, 1.0, 1.0, -2.0], 3)
    assert [tok for tok, _ in pairs] == [1, 2, 0]


def test_top_k_sums_below_one():
    row = [math.sin(i * 0.7) for i in range(12)]
    for k in (2, 3, 12):
        pairs = top_k_pairs(row, k)
        assert len(pairs) == k
        assert sum(p for _, p in pairs) <= 1.0 + 1e-9


def test_responder_covers_exactly_the_masked_slots():
    obj = reply(RowModel([1.0, 3.0, 2.0]), [None, 4, None], rid=2)
    assert obj["id"] == 2
    predictions = {int(k): [tuple(p) for p in v] for k, v in obj["predictions"].items()}
    check_predictions([None, 4, None], predictions)
    assert all(len(v) == 2 for v in predictions.values())
    assert predictions[0][0][0] == 1


def test_responder_reports_inference_failure():
    obj = reply(FailingModel(), [None], rid=9)
    assert obj["id"] == 9
    assert obj["error"].startswith("inference_failure")
    assert "device exploded" in obj["error"]


def test_responder_rejects_malformed_lines():
    responder = ModelResponder(RowModel([0.0, 1.0]))
    obj = json.loads(responder.reply("nonsense"))
    assert obj["id"] == -1


def test_responder_enforces_top_k_limit():
    obj = reply(RowModel([0.0] * 4), [None], rid=1, top_k=9, top_k_max=4)
    assert "exceeds server limit" in obj["error"]


MODEL_MODULE = '''
class Tiny:
    def logits(self, prompt, slots):
        return {i: [0.0, 1.0] for i, s in enumerate(slots) if s is None}

instance = Tiny()

def factory():
    return Tiny()

not_a_model = 42
'''


@pytest.fixture
def model_module(tmp_path, monkeypatch):
    (tmp_path / "tinymodel.py").write_text(MODEL_MODULE)
    monkeypatch.syspath_prepend(str(tmp_path))
    return "tinymodel"


def test_load_model_instance_and_factory(model_module):
    for spec in (f"{model_module}:instance", f"{model_module}:factory"):
        model = load_model(spec)
        assert model.logits([], [None]) == {0: [0.0, 1.0]}


@pytest.mark.parametrize("spec,reason", [
    ("tinymodel", "module:attr"),
    (":attr", "module:attr"),
    ("tinymodel:", "module:attr"),
    ("no_such_module_here:thing", "cannot import"),
    ("tinymodel:absent", "no attribute"),
    ("tinymodel:not_a_model", "logits"),
    ("math:pi", "logits"),
])
def test_load_model_rejects(model_module, spec, reason):
    with pytest.raises(ModelLoadError, match=reason):
        load_model(spec)
