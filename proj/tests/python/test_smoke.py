import math

import numpy as np
import pytest

import msee


def test_triple_eigenvalues():
    t = msee.Triple("reaction_diffusion", 15)
    h = 1.0 / 16
    k = np.arange(1, 16)
    expected = 4.0 / h**2 * np.sin(k * math.pi * h / 2) ** 2
    assert np.allclose(np.sort(t.eigenvalues), expected, rtol=1e-10)
    B = t.basis
    gram = np.array([[t.inner(B[:, i], B[:, j]) for j in range(3)] for i in range(3)])
    assert np.allclose(gram, np.eye(3), atol=1e-10)


def test_noise_refinement_is_exact():
    p = msee.sample_path(3, 1.0, 16, 2)
    f = msee.refine_path(p)
    inc = f.increments
    assert np.array_equal(inc[0::2] + inc[1::2], p.increments)
    assert p.steps == 16 and f.steps == 32


def test_builtin_solve_is_finite_and_deterministic():
    a = msee.solve_builtin("porous_medium", n_grid=16, n_modes=6, N=100, seed=4)
    b = msee.solve_builtin("porous_medium", n_grid=16, n_modes=6, N=100, seed=4)
    assert np.all(np.isfinite(a["coords"]))
    assert np.array_equal(a["coords"], b["coords"])
    assert len(a["times"]) == 101


def test_resolvent_cubic_root():
    y = msee.resolvent("cubic", 0.5, np.array([3.0]))[0]
    assert abs(y + 0.5 * y**3 - 3.0) < 1e-9
    with pytest.raises(ValueError):
        msee.resolvent("cubic", 0.0, np.array([1.0]))


def test_bihari_linear_is_gronwall():
    t = list(np.linspace(0.0, 1.0, 101))
    b = msee.bihari_bound(1.0, t, [1.0] * len(t), msee.ModulusSpec.linear(1.0))
    assert b["bound"][-1] == pytest.approx(math.e, rel=1e-12)
    assert b["blowup_time"] is None
    assert not msee.ModulusSpec.power(1.0, 0.5).osgood()


def test_bsde_linear_mean():
    d = msee.bsde_linear(N=16, paths=2000, seed=2)
    assert abs(d["mean_x"][0]) < 0.05


def test_experiments_listed_and_runnable(tmp_path):
    names = [n for n, _ in msee.experiments()]
    assert "bihari_table" in names
    text = "[experiment]\nname = bihari_table\n"
    assert any("output.dir" in p for p in msee.validate_config(text))
    out = msee.run_experiment(text, [f"output.dir={tmp_path}"])
    assert out["status"] == 0
    assert (tmp_path / "manifest.json").exists()
