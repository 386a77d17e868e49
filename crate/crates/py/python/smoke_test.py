"""Smoke test for the amrmul extension module.

Build and install first:  maturin develop --release  (from crates/py)
"""

import json
import random

import amrmul


def main():
    assert amrmul.dynamic_range(2) == (-272, 255)
    assert amrmul.encode_value(-272, 2) == [-16, -16]
    assert amrmul.number_value([15, -1]) == -1
    assert amrmul.random_number(4, 7) == amrmul.random_number(4, 7)

    lib = amrmul.CellLibrary()
    assert lib.mean_error("FA_PN2") == "-1/2"
    assert len(lib.table("FA_PP")) == 8
    assert amrmul.CellLibrary.from_json(lib.to_json()).digest() == lib.digest()

    col = amrmul.assign_column(4, 2)
    assert col["cells"] == {"FA_PP": 1, "FA_NP1": 1}, col
    assert col["err_out"] == "0"

    exact = amrmul.Design(4)
    rng = random.Random(1)
    for _ in range(200):
        a = [rng.randint(-16, 15) for _ in range(4)]
        b = [rng.randint(-16, 15) for _ in range(4)]
        digits, value = exact.evaluate(a, b)
        assert value == amrmul.number_value(a) * amrmul.number_value(b)
        assert amrmul.number_value(digits) == value

    approx = amrmul.Design(2, border=8)
    again = amrmul.Design.from_json(approx.to_json())
    assert again.wiring_digest() == approx.wiring_digest()
    report = approx.monte_carlo(20000, seed=3)
    assert abs(report["mred"]) < report["mared"]
    assert report == approx.monte_carlo(20000, seed=3, workers=2)
    assert json.loads(approx.stats_json())["schema"] == "amrmul.stats/v1"

    small = amrmul.Design(1, border=5).exhaustive()
    assert small["samples"] == 1024

    try:
        amrmul.Design(2, border=99)
    except ValueError as e:
        assert "border" in str(e)
    else:
        raise AssertionError("invalid border accepted")

    print("smoke test passed: MARED(N=2, b=8) = %.3e" % report["mared"])


if __name__ == "__main__":
    main()
