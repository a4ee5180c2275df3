"""Smoke test for the bsurf_py extension.

Run after `cargo build -p bsurf-py` (or `--release`); the script copies the
built shared library next to itself under the importable name, or uses an
installed `bsurf_py` if one is present.
"""

import importlib
import os
import shutil
import sys
import tempfile

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.abspath(os.path.join(HERE, "..", "..", ".."))


def load():
    try:
        return importlib.import_module("bsurf_py")
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = os.path.join(ROOT, "target", profile, "libbsurf_py.so")
        if os.path.exists(lib):
            tmp = tempfile.mkdtemp()
            shutil.copy(lib, os.path.join(tmp, "bsurf_py.so"))
            sys.path.insert(0, tmp)
            return importlib.import_module("bsurf_py")
    raise SystemExit("bsurf_py not built: run `cargo build -p bsurf-py` first")


def main():
    b = load()

    t = b.Triple(b.HYPER_PI, "1/2,1/4,1/8,1/8", "1,-1/2,1/4,-1")
    ty, winner, loser, nxt = t.rv_step()
    assert (ty, winner, loser) == (1, "A", "D"), (ty, winner, loser)
    back = nxt.rh_step()[3]
    assert back == t, "RH step must undo the RV step"
    assert nxt.area() == t.area()

    s = b.Triple.sample(b.SECOND_PI, 7)
    assert s.certificates(50) == (True, True)

    cham = b.Diagram.chamanara(-4, 4)
    assert cham.is_valid()
    assert cham.k0_classify(-3, 3) == "Z[1/2]"
    assert len(cham.sigma(3)) == 26
    assert all(v == "Certified" for v in cham.hypotheses(3).values())

    d = b.Diagram.from_triple(s, -4, 4)
    assert d.is_valid()
    assert d.sigma(3) == []
    again = b.Diagram.from_json(d.to_json())
    assert again.to_json() == d.to_json()
    assert d.k0_classify(-3, 3) == "Z^4"

    assert b.keane(b.HYPER_PI, "1/4,1/4,1/4,1/4", 10) is False
    assert b.density_check(b.HYPER_PI, 20, 3) == (20, 20)
    assert b.rauzy_graph_size(b.HYPER_PI) == (7, 14)
    ker, iso = b.theta(2, 2, "1:3,1:4,2:3,2:4")
    assert ker == [["1", "-1", "-1", "1"]] and iso is False

    code, out, _ = b.run_cli(["chamanara", "--demo", "--depth", "2"])
    assert code == 0 and "Z[1/2]" in out
    code, _, _ = b.run_cli(["no-such-command"])
    assert code == 2

    print("bsurf_py smoke test: ok")


if __name__ == "__main__":
    main()
