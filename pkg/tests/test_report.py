import math

from sharptrace.report import SCHEMA_VERSION, Case, Report


def test_case_pass_rules():
    assert Case("a", gap=-1e-7, tol=1e-6).passed
    assert not Case("a", gap=-1e-5, tol=1e-6).passed
    assert Case("e", gap=-1e-7, tol=1e-6, kind="equality").passed
    assert not Case("e", gap=2e-6, tol=1e-6, kind="equality").passed
    assert not Case("n", gap=math.nan, tol=1.0).passed


def test_report_json_roundtrip():
    rep = Report("demo", params={"n": 2}, environment={"seed": 3})
    rep.add(Case("x", gap=0.5, tol=0.0, inputs={"v": [1.0, 2.0]}, terms={"t": 1.25}))
    rep.add(Case("y", gap=-1.0, tol=0.1))
    back = Report.from_json(rep.to_json())
    assert back.to_dict() == rep.to_dict()
    assert rep.to_dict()["environment"]["version"] == SCHEMA_VERSION
    assert not rep.passed and [c.id for c in rep.failures()] == ["y"]
    assert rep.summary_lines()[1].startswith("FAIL y")


def test_extend_prefixes_and_copies():
    a, b = Report("a"), Report("b")
    b.add(Case("c", gap=1.0, tol=0.0))
    a.extend(b, prefix="sub_")
    a.cases[0].gap = 5.0
    assert a.cases[0].id == "sub_c" and b.cases[0].gap == 1.0
