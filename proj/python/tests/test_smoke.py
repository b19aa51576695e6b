"""Smoke tests for the _norad extension module."""

import math

import numpy as np

import _norad


def test_metrics():
    assert _norad.roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    ap = _norad.average_precision([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0])
    assert math.isclose(ap, 5.0 / 6.0, rel_tol=1e-12)
    assert _norad.hits_at_k([0.5], [0.9, 0.8, 0.1], 2) == 0.0
    assert _norad.nmi([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert _norad.hungarian_accuracy([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0


def test_synth_and_train():
    inst = _norad.generate_synthetic(n=40, k=2, attr_dim=16, seed=7)
    assert inst["features"].shape == (40, 16)
    assert len(inst["labels"]) == 40

    cfg = _norad.TrainConfig()
    cfg.k = 4
    cfg.d_prime = 8
    cfg.d_dprime = 4
    cfg.outer_rounds = 2
    cfg.seed = 1
    out = _norad.train(inst["edges"], inst["features"], cfg)
    assert out["z"].shape == (40, 4)
    assert out["B"].shape == (4, 4)
    assert np.isfinite(out["final_elbo"])

    scores = _norad.score_edges(out["z"], out["B"], inst["edges"][:5])
    assert len(scores) == 5
    assert all(0.0 <= s <= 1.0 for s in scores)


def test_rectify():
    rng = np.random.default_rng(0)
    z = rng.normal(size=(10, 4))
    features = (rng.random(size=(10, 12)) < 0.5).astype(float)
    t = rng.normal(size=(4, 6))
    u = rng.normal(size=(6, 12))
    wq = rng.normal(size=(6, 3))
    wk = rng.normal(size=(6, 3))
    out = _norad.rectify(z, features, t, u, wq, wk, targets=[2, 5],
                         epsilon=1e-3, iterations=20)
    assert out["z"].shape == z.shape
    assert (out["z"][0] == z[0]).all()  # non-target rows untouched
    for trace in out["traces"]:
        assert len(trace["ll"]) == 21
        assert trace["ll"][-1] >= trace["ll"][0]


def test_determinism():
    a = _norad.generate_synthetic(n=30, k=2, attr_dim=8, seed=3)
    b = _norad.generate_synthetic(n=30, k=2, attr_dim=8, seed=3)
    assert a["edges"] == b["edges"]
    assert (a["features"] == b["features"]).all()


if __name__ == "__main__":
    test_metrics()
    test_synth_and_train()
    test_rectify()
    test_determinism()
    print("python smoke tests passed")
