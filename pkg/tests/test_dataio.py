"""World files, the classifier wire protocol, transforms, and relations."""

import shlex
import sys
from fractions import Fraction

import pytest

from statmodal import (AdapterCrashed, IncompatibleFeature, Label,
                       MissingAdapter, MissingPredictions, NumVec, ParseError,
                       ProtocolViolation, Schema, TransformSpec, UnknownLabel,
                       apply_transform, build_robustness_relation,
                       fill_predictions, load_world, marginal,
                       metric_from_name, numvec, render_feature_value,
                       render_input, run_adapter, save_world, state,
                       wasserstein_inf, world_from_rows)
from helpers import counted_rows, model_of, rand_world, row, winf_oracle


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def script(tmp_path, name, body):
    p = write(tmp_path, name, body)
    return f"{shlex.quote(sys.executable)} {shlex.quote(str(p))}"


class TestLoadWorld:
    def test_multiplicity_column(self, tmp_path):
        p = write(tmp_path, "w.csv",
                  "#mult,x.f0,y,yhat\n2,0,l,l\n1,1,l,nl\n1,2,nl,nl\n")
        w = load_world(p)
        assert w.size == 4
        assert w.name == "w"
        assert w.prob(row(0, "l", "l")) == Fraction(1, 2)

    def test_mult_optional(self, tmp_path):
        p = write(tmp_path, "w.csv", "x.f0,y\n0,l\n0,l\n1,nl\n")
        w = load_world(p, name="train")
        assert w.name == "train"
        assert w.size == 3
        assert not w.has_variable("yhat")

    def test_categorical_input(self, tmp_path):
        p = write(tmp_path, "w.csv", "x,y,yhat\nred,l,l\nblue,nl,l\n")
        w = load_world(p)
        assert w.size == 2
        xs = {s.value_of("x") for s, _ in w.entries}
        assert xs == {Label("red"), Label("blue")}

    def test_feature_columns_reordered(self, tmp_path):
        p = write(tmp_path, "w.csv", "x.b,x.a,y\n1,2,l\n")
        w = load_world(p, schema=Schema("vector", ("a", "b")))
        (s, _), = w.entries
        assert s.value_of("x") == numvec(2, 1)

    def test_rational_cells(self, tmp_path):
        p = write(tmp_path, "w.csv", "x.f0,y\n0.5,l\n1/3,nl\n")
        w = load_world(p)
        xs = {s.value_of("x") for s, _ in w.entries}
        assert xs == {numvec(Fraction(1, 2)), numvec(Fraction(1, 3))}

    def test_blank_lines_skipped(self, tmp_path):
        p = write(tmp_path, "w.csv", "x.f0,y\n0,l\n\n1,nl\n")
        assert load_world(p).size == 2


class TestLoadErrors:
    def test_empty_file(self, tmp_path):
        p = write(tmp_path, "w.csv", "")
        with pytest.raises(ParseError) as exc:
            load_world(p)
        assert exc.value.line == 1

    def test_unknown_column(self, tmp_path):
        p = write(tmp_path, "w.csv", "x.f0,y,weight\n0,l,2\n")
        with pytest.raises(ParseError, match="weight"):
            load_world(p)

    def test_duplicate_column(self, tmp_path):
        p = write(tmp_path, "w.csv", "x.f0,x.f0,y\n0,0,l\n")
        with pytest.raises(ParseError, match="duplicate"):
            load_world(p)

    def test_missing_input_column(self, tmp_path):
        p = write(tmp_path, "w.csv", "y,yhat\nl,l\n")
        with pytest.raises(ParseError, match="input"):
            load_world(p)

    def test_missing_y_column(self, tmp_path):
        p = write(tmp_path, "w.csv", "x.f0,yhat\n0,l\n")
        with pytest.raises(ParseError, match="'y'"):
            load_world(p)

    def test_mixed_input_styles(self, tmp_path):
        p = write(tmp_path, "w.csv", "x,x.f0,y\nred,0,l\n")
        with pytest.raises(ParseError, match="mixing"):
            load_world(p)

    def test_bad_multiplicity(self, tmp_path):
        p = write(tmp_path, "w.csv", "#mult,x.f0,y\n1,0,l\nmany,1,l\n")
        with pytest.raises(ParseError) as exc:
            load_world(p)
        assert exc.value.line == 3

    def test_nonpositive_multiplicity(self, tmp_path):
        p = write(tmp_path, "w.csv", "#mult,x.f0,y\n0,0,l\n")
        with pytest.raises(ParseError, match="positive"):
            load_world(p)

    def test_bad_rational(self, tmp_path):
        p = write(tmp_path, "w.csv", "x.f0,y\n0,l\nthree,l\n")
        with pytest.raises(ParseError) as exc:
            load_world(p)
        assert exc.value.line == 3

    def test_ragged_row(self, tmp_path):
        p = write(tmp_path, "w.csv", "x.f0,y\n0\n")
        with pytest.raises(ParseError, match="cells"):
            load_world(p)

    def test_label_outside_alphabet(self, tmp_path):
        p = write(tmp_path, "w.csv", "x.f0,y\n0,l\n1,spam\n")
        with pytest.raises(UnknownLabel, match="spam"):
            load_world(p, alphabet=["l", "nl"])

    def test_no_data_rows(self, tmp_path):
        p = write(tmp_path, "w.csv", "x.f0,y\n")
        with pytest.raises(ParseError, match="no data rows"):
            load_world(p)

    def test_schema_kind_mismatch(self, tmp_path):
        p = write(tmp_path, "w.csv", "x,y\nred,l\n")
        from statmodal import SchemaMismatch
        with pytest.raises(SchemaMismatch):
            load_world(p, schema=Schema("vector", ("f0",)))


class TestSaveWorld:
    def test_round_trip_vector(self, tmp_path, rng):
        w = rand_world(rng, "w", 40, ("l", "nl"), n_features=2)
        p = tmp_path / "out.csv"
        save_world(w, p, schema=Schema("vector", ("f0", "f1")))
        again = load_world(p, name="w", schema=Schema("vector", ("f0", "f1")))
        assert again == w

    def test_round_trip_exact_fractions(self, tmp_path):
        w = world_from_rows("w", [row(Fraction(1, 3), "l", "l"),
                                  row(Fraction(22, 7), "nl", "nl")])
        p = tmp_path / "out.csv"
        save_world(w, p)
        assert load_world(p, name="w") == w

    def test_round_trip_categorical(self, tmp_path):
        rows = [state(x=Label("red"), y=Label("l")),
                state(x=Label("blue"), y=Label("nl"))]
        w = world_from_rows("w", rows)
        p = tmp_path / "out.csv"
        save_world(w, p)
        assert load_world(p, name="w") == w


class TestWireFormat:
    def test_terminating_decimal(self):
        assert render_feature_value(Fraction(1, 2)) == "0.5"
        assert render_feature_value(Fraction(2)) == "2"
        assert render_feature_value(Fraction(-3, 4)) == "-0.75"

    def test_nonterminating_rounds(self):
        text = render_feature_value(Fraction(1, 3))
        assert "/" not in text
        assert text.startswith("0.333333333")

    def test_input_line(self):
        assert render_input(numvec(1, Fraction(1, 2))) == "1\t0.5"
        assert render_input(Label("red")) == "red"


class TestRunAdapter:
    def test_constant_classifier(self, tmp_path):
        cmd = script(tmp_path, "const.py",
                     "import sys\n"
                     "for line in sys.stdin:\n"
                     "    print('pos')\n")
        out = run_adapter(cmd, [numvec(0), numvec(1)], alphabet=["pos", "neg"])
        assert out == [Label("pos"), Label("pos")]

    def test_order_preserved_over_large_batch(self, tmp_path):
        cmd = script(tmp_path, "echo.py",
                     "import sys\n"
                     "for line in sys.stdin:\n"
                     "    print(line.strip())\n")
        inputs = [Label(f"s{i}") for i in range(1000)]
        out = run_adapter(cmd, inputs)
        assert out == inputs

    def test_alphabet_enforced(self, tmp_path):
        cmd = script(tmp_path, "bad.py",
                     "import sys\n"
                     "for line in sys.stdin:\n"
                     "    print('mystery')\n")
        with pytest.raises(UnknownLabel, match="mystery"):
            run_adapter(cmd, [numvec(0)], alphabet=["l", "nl"])

    def test_crash_reported(self, tmp_path):
        cmd = script(tmp_path, "boom.py",
                     "import sys\n"
                     "sys.stdin.read()\n"
                     "print('it broke', file=sys.stderr)\n"
                     "sys.exit(3)\n")
        with pytest.raises(AdapterCrashed, match="status 3"):
            run_adapter(cmd, [numvec(0)])

    def test_short_reply(self, tmp_path):
        cmd = script(tmp_path, "short.py",
                     "import sys\n"
                     "sys.stdin.read()\n"
                     "print('l')\n")
        with pytest.raises(ProtocolViolation, match="1 line"):
            run_adapter(cmd, [numvec(0), numvec(1)])

    def test_unreadable_reply(self, tmp_path):
        cmd = script(tmp_path, "noise.py",
                     "import sys\n"
                     "for line in sys.stdin:\n"
                     "    print('not a label')\n")
        with pytest.raises(ProtocolViolation, match="not a label"):
            run_adapter(cmd, [numvec(0)])

    def test_missing_command(self):
        with pytest.raises(MissingAdapter):
            run_adapter("", [numvec(0)])
        with pytest.raises(MissingAdapter):
            run_adapter("   ", [numvec(0)])

    def test_command_not_found(self):
        with pytest.raises(AdapterCrashed, match="not found"):
            run_adapter("no-such-binary-zq81", [numvec(0)])

    def test_fill_predictions(self, tmp_path):
        cmd = script(tmp_path, "const.py",
                     "import sys\n"
                     "for line in sys.stdin:\n"
                     "    print('l')\n")
        w = world_from_rows("w", [row(0, "l"), row(1, "nl")])
        filled = fill_predictions(w, cmd, alphabet=["l", "nl"])
        assert filled.name == "w"
        assert filled.size == w.size
        assert all(s.value_of("yhat") == Label("l") for s, _ in filled.entries)


STD_WORLD = world_from_rows("w", counted_rows((3, 0, "l", "l"),
                                              (2, 1, "l", "nl"),
                                              (1, 2, "nl", "nl")))


class TestFilterAndSubsample:
    def test_filter_true_is_identity(self):
        m = model_of([STD_WORLD])
        spec = TransformSpec("keep", "filter", where="true")
        out = apply_transform(spec, STD_WORLD, m)
        assert out.name == "w~keep"
        assert out.entries == STD_WORLD.entries

    def test_filter_false_is_undefined(self):
        from statmodal import UNDEFINED
        m = model_of([STD_WORLD])
        spec = TransformSpec("none", "filter", where="false")
        assert apply_transform(spec, STD_WORLD, m) is UNDEFINED

    def test_filter_keeps_matching_rows(self):
        m = model_of([STD_WORLD])
        spec = TransformSpec("hits", "filter", where="psi(x,y)")
        out = apply_transform(spec, STD_WORLD, m)
        assert out.size == 4

    def test_subsample_full_size_is_multiset_identity(self):
        m = model_of([STD_WORLD])
        spec = TransformSpec("S", "subsample", n=STD_WORLD.size, seed=7)
        out = apply_transform(spec, STD_WORLD, m)
        assert out.entries == STD_WORLD.entries

    def test_subsample_deterministic(self):
        m = model_of([STD_WORLD])
        spec = TransformSpec("S", "subsample", n=3, seed=11)
        first = apply_transform(spec, STD_WORLD, m)
        second = apply_transform(spec, STD_WORLD, m)
        assert first == second
        assert first.size == 3

    def test_subsample_seed_matters(self):
        m = model_of([STD_WORLD])
        outs = {apply_transform(
            TransformSpec("S", "subsample", n=3, seed=seed),
            STD_WORLD, m).entries for seed in range(20)}
        assert len(outs) > 1

    def test_subsample_bad_size(self):
        m = model_of([STD_WORLD])
        for n in (0, -1, STD_WORLD.size + 1, None):
            spec = TransformSpec("S", "subsample", n=n, seed=1)
            with pytest.raises(IncompatibleFeature):
                apply_transform(spec, STD_WORLD, m)


class TestPerturb:
    def test_noise_stays_within_bound(self, rng):
        beta = Fraction(1, 20)
        w = rand_world(rng, "w", 30, ("l", "nl"), n_features=2)
        m = model_of([w], n_features=2)
        spec = TransformSpec("N", "perturb", bound=(beta,), seed=3)
        out = apply_transform(spec, w, m)
        old = sorted(w.rows(), key=lambda s: s.sort_key())
        # same actual labels, multiset-wise
        assert sorted(s.value_of("y").symbol for s in out.rows()) == \
            sorted(s.value_of("y").symbol for s in old)

    def test_transport_distance_bounded(self, rng):
        beta = Fraction(1, 10)
        metric = metric_from_name("linf")
        for trial in range(5):
            w = rand_world(rng, "w", 6, ("l",), n_features=1)
            m = model_of([w], labels=("l",))
            spec = TransformSpec("N", "perturb", bound=(beta,), seed=trial)
            out = apply_transform(spec, w, m)
            d = wasserstein_inf(marginal(w, ["x"]), marginal(out, ["x"]),
                                metric)
            assert d <= beta
            oracle = winf_oracle(marginal(w, ["x"]), marginal(out, ["x"]),
                                 metric)
            assert oracle.power <= beta

    def test_per_component_bounds(self):
        w = world_from_rows("w", [row((0, 0), "l", "l")])
        m = model_of([w], n_features=2)
        spec = TransformSpec("N", "perturb",
                             bound=(Fraction(1, 10), Fraction(0)), seed=1)
        out = apply_transform(spec, w, m)
        (s, _), = out.entries
        x = s.value_of("x")
        assert abs(x.components[0]) <= Fraction(1, 10)
        assert x.components[1] == 0

    def test_predictions_dropped_without_classifier(self):
        m = model_of([STD_WORLD])
        spec = TransformSpec("N", "perturb", bound=(Fraction(1, 10),), seed=1)
        out = apply_transform(spec, STD_WORLD, m)
        assert not out.has_variable("yhat")
        from statmodal import Atom, Prob, FULL, evaluate
        with pytest.raises(MissingPredictions):
            evaluate(m, out, Prob(FULL, Atom("psi_l", ("x",))))

    def test_classifier_refreshes_predictions(self, tmp_path):
        cmd = script(tmp_path, "const.py",
                     "import sys\n"
                     "for line in sys.stdin:\n"
                     "    print('nl')\n")
        m = model_of([STD_WORLD], classifier_cmd=cmd)
        spec = TransformSpec("N", "perturb", bound=(Fraction(1, 10),), seed=1)
        out = apply_transform(spec, STD_WORLD, m)
        assert all(s.value_of("yhat") == Label("nl") for s, _ in out.entries)

    def test_deterministic(self):
        m = model_of([STD_WORLD])
        spec = TransformSpec("N", "perturb", bound=(Fraction(1, 8),), seed=5)
        assert apply_transform(spec, STD_WORLD, m) == \
            apply_transform(spec, STD_WORLD, m)

    def test_vector_needs_bound(self):
        m = model_of([STD_WORLD])
        spec = TransformSpec("N", "perturb", flip=Fraction(1, 2), seed=1)
        with pytest.raises(IncompatibleFeature, match="bound"):
            apply_transform(spec, STD_WORLD, m)

    @staticmethod
    def categorical_model(w, labels):
        from statmodal import build_model
        return build_model(labels=list(labels), schema=Schema("categorical"),
                           worlds={w.name: w}, relations={}, predicates={},
                           groups={}, metric=metric_from_name("discrete"),
                           transforms={})

    def test_categorical_flip(self):
        rows = [state(x=Label("red"), y=Label("l")),
                state(x=Label("blue"), y=Label("l"))] * 10
        w = world_from_rows("w", rows)
        m = self.categorical_model(w, ("l", "red", "blue"))
        frozen = TransformSpec("F", "perturb", flip=Fraction(0), seed=1)
        assert apply_transform(frozen, w, m).entries == w.entries
        always = TransformSpec("F", "perturb", flip=Fraction(1), seed=1)
        flipped = apply_transform(always, w, m)
        assert {s.value_of("x").symbol for s, _ in flipped.entries} <= \
            {"red", "blue"}

    def test_categorical_needs_flip(self):
        rows = [state(x=Label("red"), y=Label("l"))]
        w = world_from_rows("w", rows)
        m = self.categorical_model(w, ("l", "red"))
        spec = TransformSpec("F", "perturb", bound=(Fraction(1, 2),), seed=1)
        with pytest.raises(IncompatibleFeature, match="flip"):
            apply_transform(spec, w, m)


class TestMap:
    def test_scalar_expression(self):
        m = model_of([STD_WORLD])
        spec = TransformSpec("M", "map", expr="x[f0] * 2")
        out = apply_transform(spec, STD_WORLD, m)
        xs = sorted(s.value_of("x").components[0] for s in out.rows())
        assert xs == [0, 0, 0, 2, 2, 4]

    def test_vector_expression(self):
        w = world_from_rows("w", [row((1, 2), "l", "l")])
        m = model_of([w], n_features=2)
        spec = TransformSpec("M", "map", expr="(x[f1], x[f0])")
        out = apply_transform(spec, w, m)
        (s, _), = out.entries
        assert s.value_of("x") == numvec(2, 1)

    def test_dimension_checked(self):
        w = world_from_rows("w", [row((1, 2), "l", "l")])
        m = model_of([w], n_features=2)
        spec = TransformSpec("M", "map", expr="x[f0]")
        with pytest.raises(IncompatibleFeature):
            apply_transform(spec, w, m)

    def test_oracle_relabels(self, tmp_path):
        # actual labels are re-queried when an oracle adapter is configured
        oracle = script(tmp_path, "oracle.py",
                        "import sys\n"
                        "for line in sys.stdin:\n"
                        "    v = float(line)\n"
                        "    print('l' if v <= 1 else 'nl')\n")
        w = world_from_rows("w", [row(0, "l"), row(1, "l")])
        m = model_of([w], oracle_cmd=oracle)
        spec = TransformSpec("M", "map", expr="x[f0] * 3")
        out = apply_transform(spec, w, m)
        got = sorted((s.value_of("x").components[0], s.value_of("y").symbol)
                     for s in out.rows())
        assert got == [(0, "l"), (3, "nl")]


class TestRobustnessRelation:
    def test_single_world_reflexive(self):
        metric = metric_from_name("l1")
        rel = build_robustness_relation({"w": STD_WORLD}, Fraction(1, 2),
                                        metric)
        assert rel == frozenset({("w", "w")})

    def test_identical_marginals_always_close(self):
        # same inputs, different labels: zero distance at any epsilon
        a = world_from_rows("a", [row(0, "l"), row(1, "nl")])
        b = world_from_rows("b", [row(0, "nl"), row(1, "nl")])
        rel = build_robustness_relation({"a": a, "b": b}, 0,
                                        metric_from_name("l1"))
        assert ("a", "b") in rel and ("b", "a") in rel

    def test_threshold_behavior(self):
        a = world_from_rows("a", [row(0, "l"), row(1, "l")])
        b = world_from_rows("b", [row(Fraction(1, 20), "l"),
                                  row(Fraction(19, 20), "l")])
        metric = metric_from_name("l1")
        wide = build_robustness_relation({"a": a, "b": b}, Fraction(1, 20),
                                         metric)
        assert ("a", "b") in wide
        narrow = build_robustness_relation({"a": a, "b": b}, Fraction(1, 40),
                                           metric)
        assert ("a", "b") not in narrow
        assert ("a", "a") in narrow and ("b", "b") in narrow

    def test_agrees_with_oracle(self, rng):
        metric = metric_from_name("l1")
        for _ in range(15):
            a = rand_world(rng, "a", rng.randint(1, 6), ("l",), span=4)
            b = rand_world(rng, "b", rng.randint(1, 6), ("l",), span=4)
            eps = Fraction(rng.randint(0, 8), 2)
            rel = build_robustness_relation({"a": a, "b": b}, eps, metric)
            d = winf_oracle(marginal(a, ["x"]), marginal(b, ["x"]), metric)
            want = d.power <= eps
            assert (("a", "b") in rel) == want
            assert (("b", "a") in rel) == want
