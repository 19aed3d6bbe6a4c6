"""Run diagnostics: EOT share, early-decode histograms, comparisons."""

import pytest

import helpers as H
from dlmdecode import (
    ConfigurationError,
    DecodeConfig,
    ModulationParams,
    average_histograms,
    compare_runs,
    decode,
    early_decode_histogram,
    early_step_count,
    eot_ratio,
    trace_eot_ratio,
)

EOT = H.EOT


def run_trace(length=32, steps=16, **kw):
    anchor = kw.pop("anchor", None)
    model_kw = kw.pop("model_kw", {})
    if anchor is not None:
        anchor_spec, model = H.anchored_setup(length, kw.pop("eot_tail", length // 2), **model_kw)
    else:
        anchor_spec = None
        model = H.make_model(length, kw.pop("eot_tail", length // 2), **model_kw)
    config = DecodeConfig(length=length, steps=steps, **kw) if anchor_spec is None else DecodeConfig(
        length=length, steps=steps, anchor=anchor_spec, **kw
    )
    return decode(config, model).trace


def test_eot_ratio_counts_all_slots():
    assert eot_ratio([1, EOT, EOT, 4], EOT) == 0.5
    assert eot_ratio([1, 2], EOT) == 0.0
    assert eot_ratio([EOT], EOT) == 1.0


def test_eot_ratio_rejects_empty():
    with pytest.raises(ConfigurationError):
        eot_ratio([], EOT)


def test_trace_eot_ratio_uses_header_eot_id():
    trace = run_trace()
    assert trace_eot_ratio(trace) == eot_ratio(trace.final_tokens(), EOT)


def test_early_step_count_is_ceil_of_fraction():
    assert early_step_count(32, 0.15) == 5   # 4.8 -> 5
    assert early_step_count(20, 0.15) == 3   # 3.0 exactly
    assert early_step_count(10, 0.30) == 3   # guards against 3.0000000004
    assert early_step_count(4, 1.0) == 4
    assert early_step_count(7, 0.01) == 1


def test_early_step_count_rejects_bad_fraction():
    with pytest.raises(ConfigurationError):
        early_step_count(10, 0.0)
    with pytest.raises(ConfigurationError):
        early_step_count(10, 1.5)


def test_histogram_geometry():
    trace = run_trace(length=32, steps=16)
    hist = early_decode_histogram(trace, bin_count=8)
    assert hist.bin_count == 8
    assert hist.bin_width == 4
    assert len(hist.fractions) == 8
    assert hist.early_steps == early_step_count(16, 0.15)
    assert sum(hist.fractions) == pytest.approx(1.0)


def test_histogram_counts_early_selections_only():
    trace = run_trace(length=16, steps=8)
    hist = early_decode_histogram(trace, bin_count=4, early_fraction=0.25)
    early = early_step_count(8, 0.25)
    expected = [0.0] * 4
    n = 0
    for step in trace.steps[:early]:
        for pos in step.selected:
            expected[min(pos // 4, 3)] += 1
            n += 1
    expected = [e / n for e in expected]
    assert list(hist.fractions) == pytest.approx(expected)
    assert hist.early_count == n


def test_histogram_last_bin_absorbs_remainder():
    # L=10 with 4 bins: width 2, bin 3 covers positions 6..9
    trace = run_trace(length=10, steps=5)
    hist = early_decode_histogram(trace, bin_count=4)
    assert hist.bin_width == 2
    assert len(hist.fractions) == 4


def test_histogram_excludes_anchor_slots_but_reports_bins():
    trace = run_trace(
        length=32, steps=16, eot_tail=16,
        anchor=True, model_kw={"anchor_tokens": (3, 5), "offset": 8, "pull": 0.3},
    )
    hist = early_decode_histogram(trace, bin_count=8)
    # anchors at 22, 23 with width 4 fall in bin 5
    assert hist.anchor_bins == (5,)
    assert hist.anchor_mass() == hist.fractions[5]
    ratio = hist.anchor_mass_ratio()
    assert ratio == pytest.approx(hist.fractions[5] / (1 / 8))


def test_histogram_no_anchor_has_no_ratio():
    trace = run_trace(length=16, steps=8)
    hist = early_decode_histogram(trace, bin_count=4)
    assert hist.anchor_bins == ()
    assert hist.anchor_mass() is None
    assert hist.anchor_mass_ratio() is None


def test_histogram_rejects_bad_bins():
    trace = run_trace(length=16, steps=8)
    with pytest.raises(ConfigurationError):
        early_decode_histogram(trace, bin_count=0)
    with pytest.raises(ConfigurationError):
        early_decode_histogram(trace, bin_count=17)


def test_average_histograms():
    traces = [run_trace(length=16, steps=8, model_kw={}, eot_tail=8)]
    traces.append(run_trace(length=16, steps=8, eot_tail=8, strategy="top_margin"))
    hists = [early_decode_histogram(t, bin_count=4) for t in traces]
    avg = average_histograms(hists)
    assert avg.bin_count == 4
    for i in range(4):
        assert avg.fractions[i] == pytest.approx(
            (hists[0].fractions[i] + hists[1].fractions[i]) / 2
        )


def test_average_histograms_rejects_mixed_geometry():
    a = early_decode_histogram(run_trace(length=16, steps=8), bin_count=4)
    b = early_decode_histogram(run_trace(length=16, steps=8), bin_count=8)
    with pytest.raises(ConfigurationError):
        average_histograms([a, b])
    with pytest.raises(ConfigurationError):
        average_histograms([])


def test_compare_runs_reports_deltas():
    plain = run_trace(length=32, steps=16, eot_tail=16, model_kw={"boost": 0.3})
    guarded = run_trace(
        length=32, steps=16, eot_tail=16, model_kw={"boost": 0.3}, eot_suppression=True
    )
    cmp = compare_runs(plain, guarded, bin_count=8)
    assert cmp.eot_ratio_a == trace_eot_ratio(plain)
    assert cmp.eot_ratio_b == trace_eot_ratio(guarded)
    assert cmp.eot_ratio_delta == pytest.approx(cmp.eot_ratio_b - cmp.eot_ratio_a)
    assert len(cmp.histogram_delta) == 8
    assert len(cmp.decided_at_delta) == 32
    decided_a = plain.decided_at()
    decided_b = guarded.decided_at()
    for i in range(32):
        assert cmp.decided_at_delta[i] == decided_b[i] - decided_a[i]


def test_compare_runs_rejects_length_mismatch():
    a = run_trace(length=16, steps=8)
    b = run_trace(length=32, steps=16)
    with pytest.raises(ConfigurationError):
        compare_runs(a, b)
