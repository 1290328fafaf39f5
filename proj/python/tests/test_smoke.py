import json

import pytest

import sit


def test_lex_and_parse():
    toks = sit.lex("b = a + 1")
    assert [t[1] for t in toks] == ["b", "=", "a", "+", "1"]
    assert sit.parse("b = a + 1") == "(Module (Assign b = (BinaryOp a + 1)))"


def test_errors_carry_codes():
    with pytest.raises(sit.SitError) as info:
        sit.parse("if (")
    assert info.value.code == "ParseError"
    with pytest.raises(sit.SitError) as info:
        sit.lex("a @ b")
    assert info.value.code == "LexError"


def test_build_graph_views():
    g = sit.build_graph("b = a + 1")
    assert g["tokens"] == ["b", "=", "a", "+", "1"]
    assert len(g["flow"]) == 10
    assert len(g["combined"]) == 6
    assert all(v == 1.0 for v in g["combined"][0])
    ast_only = sit.build_graph("b = a + 1\nprint(b)", beta=0.0, gamma=0.0)
    assert ast_only["weights"] == (1.0, 0.0, 0.0)


def test_graph_json_round_trip_shape():
    doc = json.loads(sit.graph_json("x = 1\ny = x"))
    assert doc["n"] == len(doc["tokens"])
    assert set(doc["views"]) == {"ast", "flow", "dep"}


def test_sbt_longer_than_tokens():
    src = "def f(a):\n    return a + 1\n"
    assert len(sit.sbt(src)) > len(sit.lex(src))


def test_corpus_and_metrics():
    corpus = sit.gen_corpus(5, seed=3, task="dataflow")
    assert corpus == sit.gen_corpus(5, seed=3, task="dataflow")
    refs = [s for _, s in corpus]
    assert sit.bleu(refs, refs) == pytest.approx(1.0)
    assert sit.rouge_l(refs, refs) == pytest.approx(1.0)
    assert sit.bleu(["a b c d"], ["a b c e"]) == pytest.approx((0.75 * 0.75 * (2 / 3) * 0.5) ** 0.25)


def test_train_and_summarize(tmp_path):
    corpus = sit.gen_corpus(8, seed=1, task="rename")
    config = {
        "model": {"d_model": 16, "heads": 2, "d_ff": 32, "encoder_layers": 2, "decoder_layers": 1,
                  "layer_pattern": "GS", "max_src_len": 64, "max_tgt_len": 8},
        "train": {"max_epochs": 1, "batch_size": 4},
    }
    log = sit.train(corpus, str(tmp_path), json.dumps(config))
    assert log.startswith("epoch,steps,loss")
    run = sit.Run(str(tmp_path))
    out = run.summarize(corpus[0][0], beam=2)
    assert isinstance(out, str)
    assert out == run.summarize(corpus[0][0], beam=2)
    report = run.evaluate(corpus, beam=1)
    assert 0.0 <= report["bleu"] <= 1.0
    assert run.param_count > 0
