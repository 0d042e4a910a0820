import json

from tlms.audit import FORBIDDEN, run_fuzz
from tlms.classify import Verdict


def test_forbidden_types_are_unrepresentable():
    assert not FORBIDDEN & {v.value for v in Verdict}


def test_small_run_is_clean_and_reproducible():
    a = run_fuzz(2, 25).to_dict()
    b = run_fuzz(2, 25).to_dict()
    a.pop("seconds"), b.pop("seconds")
    assert a == b
    assert a["cases"] == 25 and a["violations"] == []
    assert a["points"] == a["agree"] + a["disagree"] + a["borderline"]
    json.dumps(a, allow_nan=False)


def test_without_oracle_skips_crosscheck():
    rep = run_fuzz(2, 5, with_oracle=False)
    assert rep.agree == rep.disagree == rep.borderline == 0 and rep.points > 0
