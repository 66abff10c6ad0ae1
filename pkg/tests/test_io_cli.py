import json
from pathlib import Path

import numpy as np
import pytest

from opsystk import cli, io, opsys, tensor
from opsystk.errors import MalformedInput

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = cli.run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return p


W6_DOC = {"kind": "function_system", "name": "W6", "weights": [[1, 1, 1, -1, -1, -1]]}


def test_validate_w6(tmp_path, capsys):
    code, doc, _ = run(capsys, "validate", write(tmp_path, "w6.json", W6_DOC))
    assert code == 0
    assert doc["summary"]["dim"] == 5 and doc["summary"]["abelian"] is True


def test_rays_w6(tmp_path, capsys):
    code, doc, _ = run(capsys, "rays", write(tmp_path, "w6.json", W6_DOC))
    assert code == 0 and doc["summary"]["count"] == 9


def test_member_unit_max(tmp_path, capsys):
    x = write(tmp_path, "x.json", {"left": "M2", "right": {"builtin": "l6/J"}, "coeffs": "unit"})
    code, doc, _ = run(capsys, "member", "--tensor", "max", "--level", "1", x)
    assert code == 0 and doc["summary"]["verdict"] == "MEMBER"
    code, doc, _ = run(capsys, "member", x, "--tensor", "min", "--level", "2")
    assert code == 0 and doc["summary"]["level"] == 2


def test_member_swap_is_exit_1(tmp_path, capsys):
    # sum e_ij (x) e_ji written in the M2 basis coordinates
    m2 = opsys.full_algebra(2)
    c = sum(np.outer(m2.coords(np.eye(2)[:, [i]] @ np.eye(2)[[j]]), m2.coords(np.eye(2)[:, [j]] @ np.eye(2)[[i]]))
            for i in range(2) for j in range(2))
    x = write(tmp_path, "swap.json", {"left": "M2", "right": "M2", "coeffs": io.encode_matrix(c)})
    code, doc, _ = run(capsys, "member", x)
    assert code == 1 and doc["summary"]["verdict"] == "NON_MEMBER"


def test_cp_transpose(tmp_path, capsys):
    m2 = opsys.full_algebra(2)
    mats = [io.encode_matrix(b.T) for b in m2.basis]
    p = write(tmp_path, "t.json", {"source": "M2", "target": "M2", "matrices": mats})
    code, doc, _ = run(capsys, "cp", p)
    assert code == 1


def test_extend_example(tmp_path, capsys):
    s1 = {"kind": "matrix_system", "n": 2, "generators": [[[0, 1], [1, 0]]]}
    p = write(tmp_path, "e.json", {"s1": s1, "s2": "M2",
                                   "map": {"source": s1, "target": s1, "images": np.eye(2).tolist()}})
    code, doc, _ = run(capsys, "extend", p)
    assert code == 0 and len(doc["summary"]["extension_images"]) == 4


def test_lift_unit(tmp_path, capsys):
    p = write(tmp_path, "l.json", {"left": "M2", "right": "l6/J", "eps": 1e-6})
    assert run(capsys, "lift", p)[0] == 0


def test_builtin_names_as_inputs(capsys):
    code, doc, _ = run(capsys, "validate", "l6/J")
    assert code == 0 and doc["summary"]["null_dim"] == 1


def test_usage_errors(tmp_path, capsys):
    assert run(capsys, "frobnicate", "x")[0] == 64
    assert run(capsys, "validate")[0] == 64
    assert run(capsys, "validate", "W6", "--level", "two")[0] == 64
    assert run(capsys, "np", "M2", "W99")[0] == 64


def test_malformed_json_reports_position(tmp_path, capsys):
    p = write(tmp_path, "bad.json", '{"kind": "matrix_system",\n  "n": }')
    code, _, err = run(capsys, "validate", p)
    assert code == 65
    e = json.loads(err)
    assert e["error"] == "MALFORMED_INPUT" and e["details"]["line"] == 2


def test_non_null_subspace_is_65_with_certificate(tmp_path, capsys):
    p = write(tmp_path, "q.json", {"kind": "quotient", "n": 2, "parent": "diag", "null": [[1, 0]]})
    code, _, err = run(capsys, "validate", p)
    assert code == 65
    e = json.loads(err)
    assert e["error"] == "NOT_NULL" and "positive" in e["details"]


def test_missing_file_is_65(capsys):
    assert run(capsys, "validate", "/nonexistent/sys.json")[0] == 65


def test_out_writes_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert run(capsys, "validate", "W4", "--out", out)[0] == 0
    assert json.loads(out.read_text())["summary"]["dim"] == 3


def test_dualize_twice_round_trip(tmp_path, capsys):
    rng = np.random.default_rng(3)
    r = opsys.random_matrix_system(rng, 3, 4)
    src = write(tmp_path, "r.json", io.dump_system(r))
    code, once, _ = run(capsys, "dualize", src)
    assert code == 0 and once["summary"]["kind"] == "quotient"
    mid = write(tmp_path, "q.json", once)
    code, twice, _ = run(capsys, "dualize", mid)
    assert code == 0
    back = io.load_system(twice)
    r = io.load_system(io.dump_system(r))
    lmap = np.real(back.coords(r.basis)).T
    assert opsys.iso_check(r, back, lmap, levels=(1, 2), samples=4)


def test_system_round_trip():
    for name in ("W6", "M2", "l6/J"):
        s = io.builtin(name)
        t = io.load_system(json.loads(json.dumps(io.dump_system(s))))
        assert t.dim == s.dim and t.n == s.n


def test_tensor_round_trip():
    m2 = opsys.full_algebra(2)
    x = tensor.sample_max_generators(m2, io.builtin("W4"), 1, seed=0, level=2)[0]
    y = io.load_tensor(json.loads(json.dumps(io.dump_tensor(x))))
    np.testing.assert_allclose(y.coeffs, x.coeffs)


def test_tensor_shape_errors():
    with pytest.raises(MalformedInput):
        io.load_tensor({"left": "M2", "right": "M2", "coeffs": [[1, 0], [0, 1]]})
    with pytest.raises(MalformedInput):
        io.load_system({"kind": "simplex"})


@pytest.mark.parametrize("argv,golden", [
    (["validate", "W6"], "validate_w6.json"),
    (["rays", "W6"], "rays_w6.json"),
    (["rays", "W4"], "rays_w4.json"),
    (["validate", "l6/J"], "validate_j6.json"),
])
def test_golden(capsys, argv, golden):
    code, doc, _ = run(capsys, *argv)
    assert code == 0
    assert doc == json.loads((GOLDEN / golden).read_text())
