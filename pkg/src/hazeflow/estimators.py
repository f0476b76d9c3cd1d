"""scikit-learn style wrappers around the enhancement pipelines.

The estimators are stateless transformers: ``fit`` only validates the input
and records its channel count, and every adaptive quantity (LIP exponent,
forcing weight) is computed per image inside ``transform``. They accept a
single image ``(H, W[, 3])``, a stack ``(N, H, W[, 3])`` or a list of images,
and return the same container type.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import enhance, fastdehaze, pde
from .lip import LipParams
from .validation import check_image

MODES = ("haze", "underwater", "dust")


def _split(X):
    """Return (list of images, how to reassemble)."""
    if isinstance(X, (list, tuple)):
        return [check_image(x) for x in X], "list"
    arr = np.asarray(X)
    if arr.ndim == 4 or (arr.ndim == 3 and arr.shape[2] not in (1, 3)):
        return [check_image(x) for x in arr], "stack"
    return [check_image(arr)], "single"


def _join(images, kind):
    if kind == "single":
        return images[0]
    if kind == "stack":
        return np.stack(images)
    return images


class _ImageTransformer(TransformerMixin, BaseEstimator):
    _requires_rgb = False

    def fit(self, X, y=None):
        images, _ = _split(X)
        if not images:
            raise ValueError("fit received no images")
        if self._needs_rgb():
            for img in images:
                check_image(img, rgb=True)
        self.n_channels_in_ = 1 if images[0].ndim == 2 else images[0].shape[2]
        return self

    def _needs_rgb(self):
        return self._requires_rgb

    def transform(self, X):
        check_is_fitted(self, "n_channels_in_")
        images, kind = _split(X)
        return _join([self._transform_one(img) for img in images], kind)

    def _transform_one(self, img):  # pragma: no cover - abstract
        raise NotImplementedError


class PdeDehazer(_ImageTransformer):
    """Inverted-domain LIP-driven PDE flow with AG-peak stopping.

    Parameters
    ----------
    mode : {"haze", "underwater", "dust"}
        Underwater and dust run GOC-CS colour correction first and need RGB.
    post : {"irces", "fhe", "none"}
        Operator applied after the flow.
    alpha : float or None
        Forcing weight; ``None`` adapts it to the input contrast.
    beta_stat, dt, max_iters, patience
        See :class:`hazeflow.pde.PdeParams`.
    lip : LipParams, optional
    irces, fhe, goc : optional operator configurations.

    Attributes
    ----------
    traces_ : list of EvolutionTrace
        One entry per image of the most recent ``transform`` call.
    """

    def __init__(self, mode="haze", post="irces", alpha=None, beta_stat=0.1, dt=0.1,
                 max_iters=50, patience=3, lip=None, irces=None, fhe=None, goc=None):
        self.mode = mode
        self.post = post
        self.alpha = alpha
        self.beta_stat = beta_stat
        self.dt = dt
        self.max_iters = max_iters
        self.patience = patience
        self.lip = lip
        self.irces = irces
        self.fhe = fhe
        self.goc = goc

    def _needs_rgb(self):
        return self.mode != "haze"

    def _pde_params(self) -> pde.PdeParams:
        return pde.PdeParams(alpha=self.alpha, beta_stat=self.beta_stat, dt=self.dt,
                             max_iters=self.max_iters, patience=self.patience,
                             lip=self.lip or LipParams())

    def fit(self, X, y=None):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.post not in pde.POST_OPS:
            raise ValueError(f"post must be one of {pde.POST_OPS}, got {self.post!r}")
        self._pde_params()
        return super().fit(X, y)

    def transform(self, X):
        self.traces_ = []
        return super().transform(X)

    def _transform_one(self, img):
        kw = dict(irces_cfg=self.irces, fhe_cfg=self.fhe, return_trace=True)
        if self.mode == "haze":
            out, trace = pde.dehaze_pde(img, self._pde_params(), self.post, **kw)
        else:
            out, trace = pde.underwater_pipeline(img, self._pde_params(), self.post,
                                                 goc_cfg=self.goc, **kw)
        self.traces_.append(trace)
        return out


class FastDehazer(_ImageTransformer):
    """The fast approximations of the haze model.

    Parameters
    ----------
    variant : {"a", "b", "simple"}
        ``"a"``: LIP + CLAHE on the inverted image (thin uniform haze only).
        ``"b"``: filtered log-inverted transmission. ``"simple"``: unit
        airlight inversion with a low-pass illumination estimate.
    clahe : ClaheCfg, optional
        Variant A; defaults to clip 0.002 on a 32 x 32 tile grid.
    lip : LipParams, optional
        Variant A.
    filter : FilterCfg, optional
        Variants B and simple.
    refine : bool
        Variant B: follow with the PDE flow.
    log_scaling : {"rescale", "none", "max"}
        Variant B: how the log-inverted image is mapped to 0-255.
    post : {"irces", "fhe", "none"}
    """

    def __init__(self, variant="b", clahe=None, lip=None, filter=None, refine=False,
                 log_scaling="rescale", post="none"):
        self.variant = variant
        self.clahe = clahe
        self.lip = lip
        self.filter = filter
        self.refine = refine
        self.log_scaling = log_scaling
        self.post = post

    def fit(self, X, y=None):
        if self.variant not in ("a", "b", "simple"):
            raise ValueError(f"variant must be 'a', 'b' or 'simple', got {self.variant!r}")
        if self.log_scaling not in fastdehaze.LOG_SCALINGS:
            raise ValueError(f"log_scaling must be one of {fastdehaze.LOG_SCALINGS}")
        return super().fit(X, y)

    def _transform_one(self, img):
        filt = self.filter or fastdehaze.FilterCfg()
        if self.variant == "a":
            out = fastdehaze.fast_dehaze_a(img, self.clahe or enhance.ClaheCfg(),
                                           self.lip or LipParams())
        elif self.variant == "b":
            out = fastdehaze.fast_dehaze_b(img, filt, self.refine, log_scaling=self.log_scaling)
        else:
            out = fastdehaze.fast_dehaze_simple(img, filt)
        return pde.apply_post(out, self.post)


class ColorCorrector(_ImageTransformer):
    """GOC-CS percentile stretch as a standalone transformer."""

    _requires_rgb = True

    def __init__(self, p_low=1.0, p_high=99.0):
        self.p_low = p_low
        self.p_high = p_high

    def _transform_one(self, img):
        return enhance.goc_cs(img, enhance.GocCsCfg(self.p_low, self.p_high))
