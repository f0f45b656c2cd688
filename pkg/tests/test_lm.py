import hashlib

import numpy as np
import pytest

from evocad.csg import compile_source, parse, plate_program, to_text
from evocad.errors import BackendError, EmptyResponse, MismatchedIds
from evocad.lm import (
    ChatMessage,
    FewShotStore,
    Gateway,
    MockBackend,
    ModelRoleConfig,
    Ranking,
    TEMPLATE_VERSION,
    average_rankings,
    build_crossover_prompt,
    build_describe_prompt,
    build_init_prompt,
    build_mutation_prompt,
    build_rank_prompt,
    build_selfdebug_prompt,
    default_role_configs,
    extract_code,
    rank_once,
)
from evocad.render import render_multiview

from helpers import ScriptedBackend, cube_mesh

RANKER = ModelRoleConfig("ranker", temperature=0.2)


def rendered(code: str):
    return render_multiview(compile_source(code), 64).with_provenance(code)


# ---------------------------------------------------------------------------
# message and config types


def test_message_validation():
    with pytest.raises(ValueError):
        ChatMessage("oracle", "hi")
    with pytest.raises(ValueError):
        ChatMessage("user")
    msg = ChatMessage("user", images=[rendered("part z 0 1 { rect 2 2 }")])
    assert isinstance(msg.images, tuple) and len(msg.images) == 1


def test_role_config_defaults():
    cfgs = default_role_configs("m")
    assert cfgs["generator"].temperature == 0.5
    assert cfgs["describer"].temperature == 0.2
    assert cfgs["ranker"].temperature == 0.2
    assert all(c.model_name == "m" for c in cfgs.values())
    with pytest.raises(ValueError):
        ModelRoleConfig("generator", temperature=2.5)
    with pytest.raises(ValueError):
        ModelRoleConfig("poet")


# ---------------------------------------------------------------------------
# prompt builders


def test_init_prompt_contains_shots_in_order():
    shots = [f"part z 0 1 {{ rect {i} {i} }}" for i in range(2, 7)]
    messages = build_init_prompt("a plate with 2 holes", shots)
    assert [m.role for m in messages] == ["system", "user"]
    body = messages[1].text
    positions = [body.index(shot) for shot in shots]
    assert positions == sorted(positions)
    assert "a plate with 2 holes" in body
    assert "Request: a plate with 2 holes" in body


def test_init_prompt_without_shots():
    messages = build_init_prompt("a cube", [])
    assert "Example" not in messages[1].text
    assert "Request: a cube" in messages[1].text


def test_builders_are_pure():
    img = rendered("part z 0 1 { rect 2 2 }")
    assert build_init_prompt("p", ["a"]) == build_init_prompt("p", ["a"])
    assert build_describe_prompt(img) == build_describe_prompt(img)
    assert build_rank_prompt("p", [(0, "a"), (1, "b")]) == build_rank_prompt(
        "p", [(0, "a"), (1, "b")]
    )
    assert build_crossover_prompt((("c1", "d1"), ("c2", "d2")), "p") == (
        build_crossover_prompt((("c1", "d1"), ("c2", "d2")), "p")
    )
    assert build_mutation_prompt("c", "p") == build_mutation_prompt("c", "p")
    assert build_selfdebug_prompt("c", "e", "p") == build_selfdebug_prompt("c", "e", "p")


def test_template_snapshot():
    """Pin the exact template text for this TEMPLATE_VERSION."""
    img = rendered("part z 0 1 { rect 2 2 }")
    texts = []
    for messages in (
        build_init_prompt("REQ", ["SHOT"]),
        build_describe_prompt(img),
        build_rank_prompt("REQ", [(0, "D0"), (1, "D1")]),
        build_crossover_prompt((("CA", "DA"), ("CB", "DB")), "REQ"),
        build_mutation_prompt("CODE", "REQ"),
        build_selfdebug_prompt("CODE", "ERR", "REQ"),
    ):
        texts.extend(f"{m.role}:{m.text}" for m in messages)
    digest = hashlib.sha256("\n".join(texts).encode()).hexdigest()
    assert TEMPLATE_VERSION == "1"
    assert digest == "1a38473a00de838379ab2bec9387bd9dff8be9f67966dbfdae6101f9b29b987e"


def test_describe_prompt_shape():
    img = rendered("part z 0 1 { rect 2 2 }")
    messages = build_describe_prompt(img)
    assert len(messages) == 1
    assert messages[0].role == "user"
    assert len(messages[0].images) == 1
    assert "Describe the rendered object" in messages[0].text


def test_rank_prompt_one_line_per_candidate():
    messages = build_rank_prompt("p", [(4, "first\nsecond"), (2, "simple")])
    body = messages[0].text
    assert "- id 4: first second" in body
    assert "- id 2: simple" in body


def test_crossover_prompt_embeds_parents():
    messages = build_crossover_prompt((("code-a", "desc-a"), ("code-b", "desc-b")), "the goal")
    body = messages[1].text
    for piece in ("code-a", "code-b", "desc-a", "desc-b", "Request: the goal"):
        assert piece in body


def test_mutation_and_selfdebug_prompts():
    body = build_mutation_prompt("the-code", "the-goal")[1].text
    assert "the-code" in body and "Request: the-goal" in body
    body = build_selfdebug_prompt("bad-code", "line 3: oops", "the-goal")[1].text
    assert "bad-code" in body and "line 3: oops" in body
    with pytest.raises(ValueError):
        build_selfdebug_prompt("code", "", "goal")


# ---------------------------------------------------------------------------
# reply parsing


def test_extract_code_variants():
    assert extract_code("```\npart z 0 1 { rect 2 2 }\n```") == "part z 0 1 { rect 2 2 }"
    assert extract_code("lead\n```text\nfirst\n```\n```\nsecond\n```") == "first"
    assert extract_code("  bare reply  ") == "bare reply"
    with pytest.raises(EmptyResponse):
        extract_code("   \n  ")
    with pytest.raises(EmptyResponse):
        extract_code("```\n\n```")


def test_rank_once_accepts_valid_reply():
    backend = ScriptedBackend(["[2, 0, 1]"])
    ranking = rank_once("p", [(0, "a"), (1, "b"), (2, "c")], backend, RANKER)
    assert ranking.order == (2, 0, 1)
    assert not ranking.degraded and ranking.retries == 0


def test_rank_once_retries_once():
    backend = ScriptedBackend(["best is object two", "ranked: [1, 0]"])
    ranking = rank_once("p", [(0, "a"), (1, "b")], backend, RANKER)
    assert ranking.order == (1, 0)
    assert ranking.retries == 1 and not ranking.degraded
    assert len(backend.transcripts) == 2
    retry_messages = backend.transcripts[1][0]
    assert retry_messages[-2].role == "assistant"
    assert retry_messages[-1].role == "user"


def test_rank_once_degrades_to_identity():
    backend = ScriptedBackend(["[0, 0, 1]", "[5, 6, 7]"])
    ranking = rank_once("p", [(3, "a"), (1, "b"), (2, "c")], backend, RANKER)
    assert ranking.order == (3, 1, 2)
    assert ranking.degraded and ranking.retries == 1


def test_rank_once_rejects_subsets_and_strangers():
    backend = ScriptedBackend(["[0]", "[0, 9]"])
    ranking = rank_once("p", [(0, "a"), (1, "b")], backend, RANKER)
    assert ranking.degraded


def test_rank_once_needs_two_candidates():
    with pytest.raises(ValueError):
        rank_once("p", [(0, "a")], ScriptedBackend([]), RANKER)


def test_average_rankings_example():
    rs = [Ranking((7, 8)), Ranking((8, 7)), Ranking((7, 8))]
    avg = average_rankings(rs)
    assert avg[7] == pytest.approx((1 + 2 + 1) / 3)
    assert avg[8] == pytest.approx((2 + 1 + 2) / 3)


def test_average_rankings_identical():
    rs = [Ranking((2, 0, 1))] * 3
    assert average_rankings(rs) == {2: 1.0, 0: 2.0, 1: 3.0}


def test_average_rankings_validation():
    with pytest.raises(ValueError):
        average_rankings([Ranking((0, 1))] * 2)
    with pytest.raises(MismatchedIds):
        average_rankings([Ranking((0, 1)), Ranking((0, 1)), Ranking((0, 2))])


def test_average_rankings_equivariant():
    rs = [Ranking((0, 1, 2)), Ranking((2, 1, 0)), Ranking((1, 0, 2))]
    relabeled = [Ranking(tuple(i + 10 for i in r.order)) for r in rs]
    base = average_rankings(rs)
    shifted = average_rankings(relabeled)
    assert all(shifted[i + 10] == base[i] for i in base)


# ---------------------------------------------------------------------------
# few-shot store


def test_fewshot_from_dir_sorted(tmp_path):
    (tmp_path / "b.txt").write_text("part z 0 1 { rect 2 2 }")
    (tmp_path / "a.txt").write_text("part z 0 1 { circ 1 }")
    store = FewShotStore.from_dir(tmp_path)
    assert store.shots[0].startswith("part z 0 1 { circ")
    assert len(store) == 2


def test_fewshot_sampling_is_seeded():
    store = FewShotStore([f"prog {i}" for i in range(10)])
    a = store.sample(4, np.random.default_rng(5))
    b = store.sample(4, np.random.default_rng(5))
    assert a == b
    assert len(set(a)) == 4
    with pytest.raises(ValueError):
        store.sample(11, np.random.default_rng(0))


def test_bundled_corpus_compiles():
    store = FewShotStore.bundled()
    assert len(store) >= 10
    for shot in store.shots:
        compile_source(shot)


# ---------------------------------------------------------------------------
# mock backend


def test_mock_is_deterministic():
    prompt = build_init_prompt("a plate with 2 holes", ["part z 0 1 { rect 3 3 }"])
    cfg = ModelRoleConfig("generator")
    assert MockBackend(9).complete(prompt, cfg) == MockBackend(9).complete(prompt, cfg)
    assert MockBackend(9).complete(prompt, cfg) != MockBackend(10).complete(prompt, cfg)


def test_mock_init_is_biased_away_from_target():
    cfg = ModelRoleConfig("generator")
    backend = MockBackend(0)
    hits = 0
    n = 300
    for i in range(n):
        messages = build_init_prompt("a plate with 2 holes", [f"# variant {i}"])
        prog = parse(extract_code(backend.complete(messages, cfg)))
        assert len(prog.parts) == 1
        if prog.hole_count == 2:
            hits += 1
    assert 0.04 < hits / n < 0.25


def test_mock_describe_reads_provenance():
    code = to_text(plate_program(5.0, 3.0, 0.5, 3))
    reply = MockBackend(1).complete(build_describe_prompt(rendered(code)), ModelRoleConfig("describer"))
    assert "3 holes" in reply
    assert "Final description:" in reply


def test_mock_describe_handles_unknown_provenance():
    img = render_multiview(cube_mesh(), 64).with_provenance("not a program")
    reply = MockBackend(1).complete(build_describe_prompt(img), ModelRoleConfig("describer"))
    assert "Final description:" in reply


def test_mock_rank_orders_by_hole_distance():
    descriptions = [
        (3, "a flat solid with 0 holes"),
        (1, "a flat solid with 2 holes"),
        (2, "a flat solid with 5 holes"),
    ]
    ranking = rank_once("a plate with 2 holes", descriptions, MockBackend(0), RANKER)
    assert ranking.order == (1, 3, 2)
    assert not ranking.degraded


def test_mock_rank_breaks_ties_by_id():
    descriptions = [(9, "a flat solid with 1 hole"), (4, "a flat solid with 3 holes")]
    ranking = rank_once("a plate with 2 holes", descriptions, MockBackend(0), RANKER)
    assert ranking.order == (4, 9)


def test_mock_crossover_keeps_closer_parent_adopts_thickness():
    code_a = to_text(plate_program(4.0, 3.0, 0.5, 1))
    code_b = to_text(plate_program(5.0, 2.5, 0.9, 4))
    messages = build_crossover_prompt(
        ((code_a, "a flat solid with 1 hole"), (code_b, "a flat solid with 4 holes")),
        "a plate with 2 holes",
    )
    child = parse(extract_code(MockBackend(3).complete(messages, ModelRoleConfig("generator"))))
    assert child.hole_count == 1
    part = child.parts[0]
    assert part.z1 - part.z0 == pytest.approx(0.9)


def test_mock_mutation_converges_on_target():
    goal = "a plate with 2 holes"
    cfg = ModelRoleConfig("generator")
    wins = 0
    for seed in range(100):
        backend = MockBackend(seed)
        code = to_text(plate_program(4.0, 3.0, 0.5, 0))
        for _ in range(10):
            code = extract_code(backend.complete(build_mutation_prompt(code, goal), cfg))
            if parse(code).hole_count == 2:
                wins += 1
                break
    assert wins >= 90


def test_mock_selfdebug_replaces_program():
    messages = build_selfdebug_prompt("part z 1 0 { rect 2 2 }", "z order", "a plate with 3 holes")
    prog = parse(extract_code(MockBackend(2).complete(messages, ModelRoleConfig("generator"))))
    assert prog.hole_count == 3
    compile_source(to_text(prog))


def test_mock_rejects_unknown_prompts():
    with pytest.raises(BackendError):
        MockBackend(0).complete([ChatMessage("user", "what is love")], ModelRoleConfig("generator"))


def test_mock_counts_calls_by_kind():
    backend = MockBackend(0)
    cfg = ModelRoleConfig("generator")
    backend.complete(build_init_prompt("a plate with 1 hole", []), cfg)
    backend.complete(build_mutation_prompt("part z 0 1 { rect 2 2 }", "a plate with 1 hole"), cfg)
    assert backend.call_counts["init"] == 1
    assert backend.call_counts["mutation"] == 1


# ---------------------------------------------------------------------------
# gateway


def test_gateway_caps_in_flight_calls():
    import threading
    import time

    class SlowBackend:
        identity = "slow"

        def __init__(self):
            self.active = 0
            self.peak = 0
            self.lock = threading.Lock()

        def complete(self, messages, config):
            with self.lock:
                self.active += 1
                self.peak = max(self.peak, self.active)
            time.sleep(0.01)
            with self.lock:
                self.active -= 1
            return "ok"

    inner = SlowBackend()
    gate = Gateway(inner, max_in_flight=1)
    threads = [
        threading.Thread(
            target=gate.complete, args=([ChatMessage("user", "x")], RANKER)
        )
        for _ in range(4)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert inner.peak == 1
    assert gate.identity == "gateway(slow)"
