import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hazeflow import enhance, pde
from hazeflow.imgcore import invert
from hazeflow.lip import LipParams
from hazeflow.metrics import average_gradient

DIFFUSE = pde.PdeParams(alpha=0.0, beta_stat=0.0, dt=0.1)


def test_adaptive_alpha_formula():
    assert pde.adaptive_alpha(np.full((4, 4), 0.3)) == 1.0
    half = np.zeros((4, 4))
    half[:, 2:] = 1.0  # sigma 0.5
    assert pde.adaptive_alpha(half) == pytest.approx(0.05)
    quarter = np.full((4, 4), 0.25)
    quarter[:, 2:] = 0.75  # sigma 0.25
    assert pde.adaptive_alpha(quarter) == pytest.approx(0.5)


@pytest.mark.parametrize("kw", [dict(dt=0), dict(dt=0.26), dict(max_iters=0), dict(patience=0),
                                dict(alpha=-1.0)])
def test_params_bounds(kw):
    with pytest.raises(ValueError):
        pde.PdeParams(**kw)


def test_step_examples(rng):
    c = np.full((6, 6), 0.5)
    np.testing.assert_array_equal(pde.pde_step(c, DIFFUSE, 2.0), c)
    out = pde.pde_step(c, pde.PdeParams(alpha=1.0, beta_stat=0.0, dt=0.1), 2.0)
    np.testing.assert_allclose(out, 0.53, atol=1e-15)
    img = rng.uniform(0.2, 0.8, (10, 10))
    from hazeflow.imgcore import laplacian
    np.testing.assert_allclose(pde.pde_step(img, DIFFUSE, 2.0), img + 0.1 * laplacian(img), atol=1e-15)


def test_statistical_term_skipped_on_constant():
    c = np.full((5, 5), 0.4)
    out = pde.pde_step(c, pde.PdeParams(alpha=0.0, beta_stat=5.0), 2.0)
    np.testing.assert_array_equal(out, c)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 10), st.floats(-5, 5), st.floats(0.01, 0.25))
def test_iterates_stay_in_range(seed, alpha, beta, dt):
    img = np.random.default_rng(seed).uniform(0, 1, (8, 8, 3))
    p = pde.PdeParams(alpha=alpha, beta_stat=beta, dt=dt, max_iters=5, patience=5,
                      lip=LipParams(lambda_=3.0))
    best, _ = pde.evolve(img, p)
    assert best.min() >= 0 and best.max() <= 1


def test_heat_contract(rng):
    img = rng.uniform(0, 1, (32, 32))
    prev = img
    for _ in range(20):
        nxt = pde.pde_step(prev, DIFFUSE, 1.0)
        assert abs(nxt.mean() - prev.mean()) <= 1e-9
        assert nxt.var() <= prev.var() + 1e-15
        prev = nxt


def test_evolve_returns_peak(rng):
    img = rng.uniform(0.3, 0.7, (24, 24, 3))
    best, tr = pde.evolve(img)
    assert average_gradient(best, quantize=False) == max(tr.ag_per_iter)
    assert tr.ag_per_iter[tr.best_iter] == max(tr.ag_per_iter)
    assert tr.iters_run <= 50


def test_max_iters_one(rng):
    img = rng.uniform(0, 1, (8, 8))
    _, tr = pde.evolve(img, pde.PdeParams(max_iters=1))
    # index 0 is the input, index 1 the single stepped iterate
    assert tr.iters_run == 1 and len(tr.ag_per_iter) == 2


def test_pure_diffusion_returns_input(rng):
    img = rng.uniform(0, 1, (20, 20))
    best, tr = pde.evolve(img, DIFFUSE)
    assert tr.best_iter == 0 and best is not None
    np.testing.assert_array_equal(best, img)
    assert all(b < a for a, b in zip(tr.ag_per_iter, tr.ag_per_iter[1:]))


def test_dehaze_identity_when_nothing_improves(rng):
    img = rng.uniform(0, 1, (16, 16, 3))
    out, tr = pde.dehaze_pde(img, DIFFUSE, post="none", return_trace=True)
    assert tr.best_iter == 0
    np.testing.assert_array_equal(out, img)


def test_dehaze_raises_ag(small_corpus):
    for smp in small_corpus:
        out = pde.dehaze_pde(smp.hazy, post="none")
        assert average_gradient(out) > average_gradient(smp.hazy)


def test_irces_post_brightens_dark_output(dark_rgb):
    raw = pde.dehaze_pde(dark_rgb, post="none")
    out = pde.dehaze_pde(dark_rgb, post="irces")
    assert out.mean() > raw.mean()


def test_determinism(small_corpus):
    img = small_corpus[4].hazy
    np.testing.assert_array_equal(pde.dehaze_pde(img), pde.dehaze_pde(img))


def test_underwater_requires_rgb():
    with pytest.raises(ValueError):
        pde.underwater_pipeline(np.full((8, 8), 0.5))
    with pytest.raises(ValueError):
        pde.dust_pipeline(np.full((8, 8), 0.5))


def test_underwater_full_range_reduces_to_dehaze(rng):
    # 1st and 99th percentiles already sit at 0 and 1
    ch = rng.uniform(0, 1, (32, 32))
    ch[:2], ch[-2:] = 0.0, 1.0
    full = np.stack([ch, ch.T, np.flipud(ch)], -1)
    np.testing.assert_allclose(enhance.goc_cs(full), full, atol=1 / 255)
    a = pde.underwater_pipeline(full, post="none")
    b = pde.dehaze_pde(enhance.goc_cs(full), post="none")
    np.testing.assert_array_equal(a, b)


def test_dust_delegates(rng):
    img = rng.uniform(0.2, 0.9, (16, 16, 3))
    np.testing.assert_array_equal(pde.dust_pipeline(img), pde.underwater_pipeline(img))


def test_double_inversion():
    x = np.array([0.0, 0.25, 0.5, 1.0])
    np.testing.assert_array_equal(invert(invert(x)), x)
