import json
import math

import numpy as np
import pytest

import disco


def test_probability_and_loss():
    np.testing.assert_allclose(disco.probability([0.0, math.log(3.0)]), [0.5, 0.75])
    assert disco.rec_loss([0.9], [0.2]) == pytest.approx(0.3285, abs=1e-4)
    with pytest.raises(disco.DiscoError):
        disco.rec_loss([], [0.5])


def test_score():
    u = np.array([[2.0], [-2.0]])
    v = np.ones((2, 1))
    assert disco.score(u, v, np.array([0.5, 0.5])) == pytest.approx(0.0)


def test_walk_targets_closed_form():
    r = disco.affinity_matrix(np.array([[0.0, 0.0], [3.0, 4.0]]), 2.0)
    assert r[0, 1] == pytest.approx(math.exp(-2.5))
    t = disco.walk_targets(r, 0.5, 1)
    assert t[0, 0] == pytest.approx(0.9621, abs=1e-4)
    np.testing.assert_allclose(t.sum(axis=1), 1.0)


def test_posterior_and_elbo():
    prior = np.array([[0.6, 0.4]])
    phat = [np.array([[0.5]]), np.array([[0.1]])]
    q = disco.variational_posterior(prior, phat)
    assert q[0][0, 0] == pytest.approx(15 / 17)
    assert disco.elbo(q, prior, phat)[0, 0] == pytest.approx(math.log(0.34))
    assert disco.log_marginal(prior, phat)[0, 0] == pytest.approx(math.log(0.34))


def test_intra_and_orth():
    t = np.eye(2)
    rho = np.array([[0.9, 0.1], [0.1, 0.9]])
    assert disco.intra_loss([t], [rho]) == pytest.approx(-2 * math.log(0.9))
    z = np.array([[1.0, 0.0, 1.0, 0.0]])
    assert disco.orthogonality_loss(z, z, 2) == pytest.approx(4.0)


def test_ranking():
    assert disco.rank_candidates([0.9, 0.9, 0.9, 0.9, 0.1], 0) == 4
    m = disco.ranking_metrics([10], 10)
    assert m["ndcg_at_k"] == pytest.approx(0.28906, abs=1e-5)
    assert disco.total_loss(1, 1, 1, 1, 1, 0.5, 2.0, 0.5) == pytest.approx(2.0)


def test_config_round_trip():
    cfg = disco.default_config()
    assert cfg["dim"] == 128
    cfg["beta"] = 0.2
    assert json.loads(disco._core.normalize_config(json.dumps(cfg)))["beta"] == 0.2
    with pytest.raises(disco.DiscoError):
        disco._core.normalize_config('{"no_such_key": 1}')


def test_gradcheck():
    passed, n, failed, _ = disco.gradcheck()
    assert passed and n > 0 and failed == 0


def test_end_to_end(tmp_path):
    raw, prep, ckpt = tmp_path / "raw", tmp_path / "prep", tmp_path / "ckpt"
    n_s, n_t, mix_s, mix_t = disco.generate_synthetic(str(raw), n_users=200, n_items=100, density=0.1, seed=5)
    assert n_s > 0 and n_t > 0 and mix_s.shape == (200, 2)
    meta = disco.prepare(str(raw / "source.csv"), str(raw / "target.csv"), str(prep))
    assert meta["n_overlap"] > 0
    cfg = {"dim": 16, "channels": 2, "layers": 1, "batch_size": 256, "contrast_batch": 32,
           "epochs": 1, "eval_negatives": 49, "seed": 3}
    report = disco.train(prep, ckpt, cfg)
    assert len(report["epochs"]) == 1
    res = disco.evaluate(ckpt, prep, "s2t")
    assert 0.0 <= res["hr_at_k"] <= 1.0
    base = disco.baseline("random", str(prep), "s2t", negatives=49)
    assert 0.0 <= base["hr_at_k"] <= 1.0
