import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from hazeflow import ColorCorrector, FastDehazer, PdeDehazer, fast_dehaze_b, pde
from hazeflow.lip import LipParams


def test_get_params_round_trip():
    est = PdeDehazer(post="fhe", dt=0.2, lip=LipParams(lambda_=2.0))
    params = est.get_params()
    assert params["post"] == "fhe" and params["dt"] == 0.2
    twin = clone(est)
    assert twin.get_params() == params and twin is not est
    est.set_params(max_iters=7)
    assert est.max_iters == 7


def test_not_fitted(rng):
    with pytest.raises(NotFittedError):
        PdeDehazer().transform(rng.uniform(0, 1, (8, 8, 3)))


def test_fit_validates(rng):
    img = rng.uniform(0, 1, (8, 8))
    with pytest.raises(ValueError):
        PdeDehazer(mode="fog").fit(img)
    with pytest.raises(ValueError):
        PdeDehazer(dt=0.5).fit(img)
    with pytest.raises(ValueError):
        PdeDehazer(mode="underwater").fit(img)
    with pytest.raises(ValueError):
        FastDehazer(variant="c").fit(img)


def test_matches_functional_api(small_corpus):
    img = small_corpus[2].hazy
    est = PdeDehazer(post="none").fit(img)
    np.testing.assert_array_equal(est.transform(img), pde.dehaze_pde(img, post="none"))
    assert len(est.traces_) == 1 and est.n_channels_in_ == 3
    np.testing.assert_array_equal(FastDehazer().fit_transform(img), fast_dehaze_b(img))


def test_containers(small_corpus):
    imgs = [s.hazy for s in small_corpus[:3]]
    est = FastDehazer(variant="simple").fit(imgs)
    as_list = est.transform(imgs)
    as_stack = est.transform(np.stack(imgs))
    assert isinstance(as_list, list) and as_stack.shape == (3, 64, 64, 3)
    for a, b in zip(as_list, as_stack):
        np.testing.assert_array_equal(a, b)


def test_pipeline_composition(small_corpus):
    img = small_corpus[0].hazy
    pipe = make_pipeline(ColorCorrector(), PdeDehazer(post="none"))
    out = pipe.fit_transform(img)
    np.testing.assert_array_equal(out, pde.underwater_pipeline(img, post="none"))
