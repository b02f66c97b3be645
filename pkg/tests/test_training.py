import numpy as np
import pytest

from wgan_robust import baselines, discriminator as disc, distributions as D, generators as G, metrics
from wgan_robust.core_math import RngStream
from wgan_robust.errors import DivergedTrainingError, InvalidInputError
from wgan_robust.training import TrainConfig, evaluate_ipm, load_checkpoint, train


def small_problem(seed=0, n=256, p=4):
    X = D.sample_contaminated(D.preset_model("M2", p), n, RngStream(seed, 1))
    net = disc.build(p, rng=RngStream(seed, 2))
    return X, net, G.Location(baselines.sample_mean(X))


def test_deterministic():
    X, net, g = small_problem()
    cfg = TrainConfig(iters=60, seed=3, stream_id=9, eval_every=10)
    a, b = train(X, net, g, cfg), train(X, net, g, cfg)
    assert a.same_result(b)
    assert np.array_equal(a.estimate, b.estimate)


def test_inputs_not_modified():
    X, net, g = small_problem()
    W0, theta0 = net.layers[0].W.copy(), g.theta.copy()
    train(X, net, g, TrainConfig(iters=20))
    assert np.array_equal(net.layers[0].W, W0)
    assert np.array_equal(g.theta, theta0)


def test_report_fields():
    X, net, g = small_problem()
    rep = train(X, net, g, TrainConfig(iters=45, eval_every=10, seed=2))
    its = [t[0] for t in rep.objective_trace]
    assert its == [10, 20, 30, 40, 45]
    assert all(np.isfinite(v) for _, v in rep.objective_trace)
    assert np.isfinite(rep.final_ipm)
    assert rep.seed == 2 and rep.iters == 45
    assert disc.is_projected(rep.net)


def test_stream_changes_result():
    X, net, g = small_problem()
    a = train(X, net, g, TrainConfig(iters=30, stream_id=1))
    b = train(X, net, g, TrainConfig(iters=30, stream_id=2))
    assert not np.array_equal(a.estimate, b.estimate)


def test_dimension_mismatch():
    X, net, g = small_problem()
    with pytest.raises(InvalidInputError):
        train(X[:, :3], net, g, TrainConfig(iters=5))


def test_nonfinite_data():
    X, net, g = small_problem()
    X[0, 0] = np.inf
    with pytest.raises(InvalidInputError):
        train(X, net, g, TrainConfig(iters=5))


def test_config_validation():
    with pytest.raises(InvalidInputError):
        TrainConfig(iters=0)
    with pytest.raises(InvalidInputError):
        TrainConfig(lr=-1.0)


def test_divergence_reported():
    X, net, g = small_problem()
    with pytest.raises(DivergedTrainingError) as exc:
        train(X, net, g, TrainConfig(iters=5, lr=1e308))
    assert exc.value.iteration >= 1


def test_projection_keeps_band():
    rng = RngStream(4, 4)
    X = rng.normal((512, 3)) * 3.0
    net = disc.build(3, 4.0, rng=rng)
    rep = train(X, net, G.Covariance(np.eye(3)), TrainConfig(iters=50, param_space=G.CovBand(0.25, 4.0)))
    w = np.linalg.eigvalsh(rep.estimate)
    assert w.min() >= 0.25 - 1e-9 and w.max() <= 4.0 + 1e-9


def test_checkpoint_resume_matches(tmp_path):
    X, net, g = small_problem()
    full = train(X, net, g, TrainConfig(iters=40, seed=5, eval_every=10))
    ck = TrainConfig(iters=40, seed=5, eval_every=10, checkpoint_every=20, checkpoint_dir=str(tmp_path))
    train(X, net, g, ck)
    state = load_checkpoint(tmp_path / "iter_0000020")
    assert state["iteration"] == 20
    resumed = train(X, net, g, ck, resume_from=str(tmp_path / "iter_0000020"))
    assert np.array_equal(resumed.estimate, full.estimate)
    assert resumed.objective_trace == full.objective_trace


class TestEvaluateIpm:
    def test_zero_net(self):
        net = disc.build(3)
        for l in net.layers:
            l.W[...] = 0.0
        g = G.Location(np.zeros(3))
        data, _ = G.gen_sample(g, 50, RngStream(0, 0))
        assert evaluate_ipm(net, data, g, 50, RngStream(0, 1)) == 0.0

    def test_same_noise_zero(self):
        net = disc.build(3, rng=RngStream(1, 1))
        g = G.Location(np.ones(3))
        data, _ = G.gen_sample(g, 40, RngStream(2, 2))
        assert evaluate_ipm(net, data, g, 40, RngStream(2, 2)) == 0.0

    def test_duality_bound_after_training(self):
        rng = RngStream(3, 3)
        A, B = rng.normal((64, 2)), rng.normal((64, 2)) + 3.0
        net = disc.build(2, 2.0, rng=rng)
        rep = train(A, net, G.Location(np.full(2, 3.0)), TrainConfig(iters=100, lr=0.01))
        val = float(disc.forward(rep.net, A)[0].mean() - disc.forward(rep.net, B)[0].mean())
        assert abs(val) <= rep.net.lipschitz_bound() * metrics.w1_exact(A, B) + 1e-6


@pytest.mark.slow
def test_clean_location_accuracy():
    errs = []
    for seed in range(10):
        X = RngStream(seed, 11).normal((1024, 5))
        net = disc.build(5, rng=RngStream(seed, 12))
        rep = train(X, net, G.Location(baselines.sample_mean(X)), TrainConfig(iters=2000, seed=seed, stream_id=13))
        errs.append(float(rep.estimate @ rep.estimate))
    assert np.median(errs) < 0.1


def test_resume_with_tail_average(tmp_path):
    X, net, g = small_problem()
    full = train(X, net, g, TrainConfig(iters=40, seed=6, average_tail=0.5))
    ck = TrainConfig(iters=40, seed=6, average_tail=0.5, checkpoint_every=30, checkpoint_dir=str(tmp_path))
    train(X, net, g, ck)
    resumed = train(X, net, g, ck, resume_from=str(tmp_path / "iter_0000030"))
    assert np.array_equal(resumed.estimate, full.estimate)


def test_tail_average_is_mean_of_iterates():
    X, net, g = small_problem()
    last = train(X, net, g, TrainConfig(iters=30, seed=8))
    avg1 = train(X, net, g, TrainConfig(iters=30, seed=8, average_tail=1 / 30))
    assert np.array_equal(avg1.estimate, last.estimate)
    avg = train(X, net, g, TrainConfig(iters=30, seed=8, average_tail=0.5))
    assert not np.array_equal(avg.estimate, last.estimate)
    with pytest.raises(InvalidInputError):
        TrainConfig(average_tail=0.5, best_iterate=True)
