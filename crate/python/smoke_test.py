"""Smoke test for the kfree extension module.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/kfree-*.whl
"""

import json
import math

import kfree


def main():
    c = kfree.constants(2)
    assert abs(c.c_k.value - 2.70253194) < 1e-8, c
    assert c.xi_k.tail <= 1e-20
    assert abs(c.gamma_k.value * c.xi_k.value * kfree.zeta(1.5).value / 3 - c.c_k.value / 4) < 1e-12

    z2 = kfree.zeta(2.0)
    assert z2.contains(math.pi ** 2 / 6)

    sieve = kfree.Sieve(1_000_000)
    assert sieve.mobius(30) == -1 and sieve.mobius(12) == 0
    assert sieve.count_squarefree(10) == 7
    assert sieve.factorize(360) == [(2, 3), (3, 2), (5, 1)]

    d = kfree.Diffraction(2, sieve)
    direct = d.z_direct(0.137)
    report = d.sandwich_check(0.137)
    assert report["n"] == 7 and report["holds"], report

    a = d.ztilde_definition(5)
    b = d.ztilde_via_zk(5)
    assert a.value.agrees_with(b.value), (a, b)
    assert b.method == "ztilde-via-zk"

    again = kfree.IntensityResult.from_json(direct.to_json())
    assert again.to_json() == direct.to_json()
    assert json.loads(direct.to_json())["method"] == "direct-bmp"

    z1 = d.zk_factorised(1)
    assert abs(z1.value - 1.0) <= z1.tail + 1e-15, z1

    eps = [10 ** (-4 + 0.5 * i) for i in range(5)]
    fit, points = d.power_law_fit(eps)
    assert len(points) == 5 and 1.3 < fit.exponent < 1.7

    w = kfree.walfisz_residuals([1e3, 1e4, 1e5])
    assert w["max_abs_normalized"] < 1.0

    try:
        kfree.constants(1)
    except ValueError as e:
        assert "k" in str(e)
    else:
        raise AssertionError("k = 1 accepted")

    print("kfree smoke test passed")


if __name__ == "__main__":
    main()
