import json

import numpy as np
import pytest

from kgsolve import cli, files
from kgsolve.linalg import matrix_exp, max_norm
from kgsolve.pauli import LieElement


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def g2(tmp_path):
    path = tmp_path / "g.json"
    assert run("random", 2, "--seed", 3, "--scale", 0.3, "--out", path) == cli.EXIT_OK
    return path


def test_random_deterministic(tmp_path):
    a, b, c = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c.json"
    run("random", 3, "--seed", 9, "--out", a)
    run("random", 3, "--seed", 9, "--out", b)
    run("random", 3, "--seed", 10, "--out", c)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_random_scale_zero_is_identity(tmp_path):
    p = tmp_path / "i.json"
    run("random", 2, "--scale", 0, "--out", p)
    assert np.array_equal(files.read_matrix(p), np.eye(4))


def test_random_unitary_and_det(g2):
    G = files.read_matrix(g2)
    assert max_norm(G.conj().T @ G - np.eye(4)) < 1e-12
    assert abs(np.linalg.det(G) - 1) < 1e-12


def test_matrix_file_round_trip(tmp_path):
    M = np.array([[0.1 + 1 / 3j, np.pi], [np.e * 1j, -1e-300]])
    p = tmp_path / "m.json"
    files.write_matrix(p, np.kron(M, np.eye(2)))
    assert np.array_equal(files.read_matrix(p), np.kron(M, np.eye(2)))


def test_decompose_verify_round_trip(g2, tmp_path, capsys):
    out = tmp_path / "t.json"
    assert run("decompose", g2, "--out", out) == cli.EXIT_OK
    text = capsys.readouterr().out
    assert "reassembly residual" in text and "H" in text
    assert run("verify", out, g2) == cli.EXIT_OK
    assert "PASS" in capsys.readouterr().out
    data = json.loads(out.read_text())
    assert data["n"] == 2 and "matrix" in data["root"]
    assert data["config"]["p"] == 3


def test_default_output_path(g2):
    assert run("decompose", g2) == cli.EXIT_OK
    assert g2.with_name("g.tree.json").exists()


def test_tree_file_round_trip(g2, tmp_path):
    out = tmp_path / "t.json"
    run("decompose", g2, "--out", out)
    tree = files.read_tree(out)
    again = tmp_path / "t2.json"
    files.write_tree(again, tree, json.loads(out.read_text())["residuals"])
    assert json.loads(again.read_text())["root"]["children"] == json.loads(out.read_text())["root"]["children"]


def test_identity_input(tmp_path):
    p = tmp_path / "i.json"
    files.write_matrix(p, np.eye(4))
    out = tmp_path / "t.json"
    assert run("decompose", p, "--out", out) == cli.EXIT_OK
    assert json.loads(out.read_text())["residuals"]["reassembly"] == 0.0


def test_constructed_cartan_input(tmp_path):
    G = matrix_exp(LieElement.from_dict(2, {"XX": 0.3, "YY": 0.2}).matrix())
    p = tmp_path / "c.json"
    files.write_matrix(p, G)
    out = tmp_path / "t.json"
    assert run("decompose", p, "--out", out) == cli.EXIT_OK
    tree = files.read_tree(out)
    leaves = list(tree.root.leaves())
    H = [l for l in leaves if l.kind.value == "H"]
    assert len(H) == 1
    assert H[0].generator.coeffs["XX"] == pytest.approx(0.3, abs=1e-10)
    assert H[0].generator.coeffs["YY"] == pytest.approx(0.2, abs=1e-10)
    for l in leaves:
        if l.kind.value == "LOCAL":
            assert max_norm(l.matrix - np.eye(2)) < 1e-10


def test_non_unitary_input(tmp_path):
    p = tmp_path / "bad.json"
    files.write_matrix(p, 2 * np.eye(4))
    out = tmp_path / "t.json"
    assert run("decompose", p, "--out", out) == cli.EXIT_NOT_UNITARY
    assert not out.exists()


def test_parse_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert run("decompose", p) == cli.EXIT_PARSE
    p.write_text(json.dumps({"n": 2, "rows": [[[1, 0]]]}))
    assert run("decompose", p) == cli.EXIT_PARSE
    assert run("decompose", tmp_path / "missing.json") == cli.EXIT_PARSE


def test_verify_detects_perturbed_leaf(g2, tmp_path, capsys):
    out = tmp_path / "t.json"
    run("decompose", g2, "--out", out)
    data = json.loads(out.read_text())
    leaf = data["root"]["children"][0]["children"][0]
    assert leaf["kind"] == "LOCAL"
    leaf["matrix"][0][0][0] += 1e-3
    out.write_text(json.dumps(data))
    capsys.readouterr()
    assert run("verify", out, g2) == cli.EXIT_VERIFY
    text = capsys.readouterr().out
    resid = float(text.split("reassembly residual:")[1].split()[0])
    assert 1e-4 < resid < 1e-2


def test_verify_dimension_mismatch(g2, tmp_path):
    out = tmp_path / "t.json"
    run("decompose", g2, "--out", out)
    other = tmp_path / "g3.json"
    run("random", 3, "--out", other)
    assert run("verify", out, other) == cli.EXIT_PARSE


def test_basis_listing(capsys):
    assert run("basis", 2) == cli.EXIT_OK
    text = capsys.readouterr().out
    assert "h (3): XX YY ZZ" in text
    assert "m (9): XX XY XZ YX YY YZ ZX ZY ZZ" in text
    assert run("basis", 3, "--pair", "secondary") == cli.EXIT_OK
    assert "f (3): XXZ YYZ ZZZ" in capsys.readouterr().out
    assert run("basis", 2, "--pair", "secondary") == cli.EXIT_PARSE


def test_basis_usage_error():
    with pytest.raises(SystemExit) as exc:
        run("basis", 1)
    assert exc.value.code == cli.EXIT_PARSE


def test_byte_deterministic_trees(g2, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run("decompose", g2, "--seed", 5, "--out", a)
    run("decompose", g2, "--seed", 5, "--out", b)
    assert a.read_bytes() == b.read_bytes()
