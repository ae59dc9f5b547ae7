"""Framework routing: mode laws, fail-open, history truncation."""

import pytest

import synth
from ambiguard import (
    AmbiguityLabel,
    AmbiguityType,
    AmbiguityVerdict,
    ChatTurn,
    Conversation,
    DatasetRecord,
    EmbedderError,
    FrameworkMode,
    MockRewriter,
    Query,
    Role,
    RoutingRecord,
    VerdictSource,
    process,
    process_batch,
)
from ambiguard.pipeline import routing_record_to_obj
from ambiguard.rewrite import RewriteContext, RewriteResult


def _verdict(label, score=0.8):
    return AmbiguityVerdict(
        label=label, ambiguity_type=AmbiguityType.UNKNOWN, score=score, source=VerdictSource.MODEL
    )


def _detector(label):
    return lambda q: _verdict(label)


def _conv(text="What about it?", n_turns=0):
    turns = tuple(
        ChatTurn(Role.USER if i % 2 == 0 else Role.ASSISTANT, f"turn {i}") for i in range(n_turns)
    )
    return Conversation(turns=turns, current=Query(text))


def test_no_rewrite_passes_through():
    rewriter = synth.CountingRewriter()
    record = process(_conv(), FrameworkMode.NO_REWRITE, rewriter=rewriter)
    assert record.routed == record.original
    assert not record.rewrite_invoked
    assert record.verdict is None
    assert rewriter.calls == []
    assert record.timings["rewrite_ms"] == 0.0
    assert record.timings["total_ms"] >= 0.0


def test_always_rewrite_invokes_rewriter():
    rewriter = MockRewriter({"What about it?": "What about the retail dataset?"})
    record = process(_conv(), FrameworkMode.ALWAYS_REWRITE, rewriter=rewriter)
    assert record.rewrite_invoked
    assert record.routed.text == "What about the retail dataset?"
    assert record.verdict is None
    assert not record.degraded


def test_always_rewrite_requires_rewriter():
    with pytest.raises(ValueError):
        process(_conv(), FrameworkMode.ALWAYS_REWRITE)


def test_guided_routes_only_ambiguous():
    rewriter = synth.CountingRewriter()
    amb = process(
        _conv("What about it?"),
        FrameworkMode.GUIDED,
        model=_detector(AmbiguityLabel.AMBIGUOUS),
        rewriter=rewriter,
    )
    assert amb.rewrite_invoked
    assert rewriter.calls == ["What about it?"]
    clear = process(
        _conv("What is the retail dataset?"),
        FrameworkMode.GUIDED,
        model=_detector(AmbiguityLabel.CLEAR),
        rewriter=rewriter,
    )
    assert not clear.rewrite_invoked
    assert clear.routed == clear.original
    assert rewriter.calls == ["What about it?"]  # unchanged
    assert clear.verdict is not None
    assert clear.timings["classify_ms"] >= 0.0


def test_guided_requires_model_or_detector():
    with pytest.raises(TypeError):
        process(_conv(), FrameworkMode.GUIDED, model=None, rewriter=MockRewriter())
    with pytest.raises(ValueError):
        # detector says ambiguous but there is no rewriter to call
        process(_conv(), FrameworkMode.GUIDED, model=_detector(AmbiguityLabel.AMBIGUOUS))


def test_guided_clear_without_rewriter_is_fine():
    record = process(_conv(), FrameworkMode.GUIDED, model=_detector(AmbiguityLabel.CLEAR))
    assert not record.rewrite_invoked


def test_rewriter_failure_fails_open():
    rewriter = synth.FailingRewriter()
    record = process(
        _conv(), FrameworkMode.GUIDED, model=_detector(AmbiguityLabel.AMBIGUOUS), rewriter=rewriter
    )
    assert record.degraded
    assert record.routed == record.original
    assert record.rewrite_invoked  # the attempt happened
    assert record.error is None
    assert rewriter.calls == 1


def test_embedder_failure_propagates_in_guided():
    def broken(q):
        raise EmbedderError("embed service down", retryable=True)

    with pytest.raises(EmbedderError):
        process(_conv(), FrameworkMode.GUIDED, model=broken, rewriter=MockRewriter())


class _WindowProbe:
    def __init__(self):
        self.history_len = None

    def rewrite(self, q: Query, ctx: RewriteContext) -> RewriteResult:
        self.history_len = len(ctx.history)
        return RewriteResult(rewritten=q, raw_response=q.text, latency_ms=0.0)


def test_history_truncated_to_window():
    probe = _WindowProbe()
    process(_conv(n_turns=9), FrameworkMode.ALWAYS_REWRITE, rewriter=probe)
    assert probe.history_len == 5
    probe2 = _WindowProbe()
    process(_conv(n_turns=9), FrameworkMode.ALWAYS_REWRITE, rewriter=probe2, history_window=2)
    assert probe2.history_len == 2


def test_history_window_bounds():
    for bad in (0, 6, -1):
        with pytest.raises(ValueError):
            process(_conv(), FrameworkMode.NO_REWRITE, history_window=bad)


def test_routing_record_mode_laws():
    q = Query("x?")
    with pytest.raises(ValueError):
        RoutingRecord(mode=FrameworkMode.NO_REWRITE, original=q, routed=Query("y?"), rewrite_invoked=False)
    with pytest.raises(ValueError):
        RoutingRecord(mode=FrameworkMode.ALWAYS_REWRITE, original=q, routed=q, rewrite_invoked=False)
    with pytest.raises(ValueError):
        RoutingRecord(mode=FrameworkMode.GUIDED, original=q, routed=q, rewrite_invoked=False)
    with pytest.raises(ValueError):
        RoutingRecord(
            mode=FrameworkMode.GUIDED,
            original=q,
            routed=q,
            rewrite_invoked=True,
            verdict=_verdict(AmbiguityLabel.CLEAR),
        )
    # an error record is exempt from the mode laws
    RoutingRecord(
        mode=FrameworkMode.GUIDED, original=q, routed=q, rewrite_invoked=False,
        degraded=True, error="boom",
    )


def test_process_batch_isolates_failures():
    records = [
        DatasetRecord("r-1", Query("What about it?"), AmbiguityLabel.AMBIGUOUS),
        DatasetRecord("r-2", Query("What is the retail dataset?"), AmbiguityLabel.CLEAR),
    ]

    def flaky(q):
        if q.text == "What about it?":
            raise EmbedderError("down", retryable=False)
        return _verdict(AmbiguityLabel.CLEAR)

    out = process_batch(records, FrameworkMode.GUIDED, model=flaky, rewriter=MockRewriter())
    assert len(out) == 2
    assert out[0].error is not None and out[0].degraded
    assert out[0].routed == records[0].query  # original preserved
    assert out[1].error is None and not out[1].degraded


def test_process_batch_passes_history():
    probe = _WindowProbe()
    records = [
        DatasetRecord(
            "r-1",
            Query("What about it?"),
            AmbiguityLabel.AMBIGUOUS,
            history=tuple(ChatTurn(Role.USER, f"t{i}") for i in range(3)),
        )
    ]
    process_batch(records, FrameworkMode.ALWAYS_REWRITE, rewriter=probe)
    assert probe.history_len == 3


def test_routing_record_to_obj_shape():
    record = process(
        _conv(), FrameworkMode.GUIDED, model=_detector(AmbiguityLabel.AMBIGUOUS), rewriter=MockRewriter()
    )
    obj = routing_record_to_obj(record)
    assert obj["mode"] == "guided"
    assert obj["original"] == "What about it?"
    assert obj["routed"] == "What about it?"
    assert obj["rewrite_invoked"] is True
    assert obj["verdict"]["label"] == "ambiguous"
    assert set(obj["timings"]) == {"classify_ms", "rewrite_ms", "total_ms"}
    assert obj["error"] is None
    no_verdict = routing_record_to_obj(
        process(_conv(), FrameworkMode.NO_REWRITE)
    )
    assert no_verdict["verdict"] is None
